//! Aircraft-type assignment for a fixed list of missions, and the
//! distribution of each schedule's operating profit across a weather
//! ensemble.
//!
//! A schedule assigns one aircraft type to every mission. Assignments are
//! enumerated in lexicographic order (missions in input order, types in name
//! order, the last mission varying fastest) and must respect two rules: the
//! type can carry the mission's payload demand, and at no instant are more
//! missions of one type airborne than the fleet holds.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::distance_m;
use crate::performance::{AircraftModel, CostIndex, PerformanceError};
use crate::router::{build_lattice, Airport, Lattice, LatticeSpec, Planner, RouterError};
use crate::weather::{EnsembleForecast, GridAxes, WeatherError, WeatherGrid};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("invalid schedule input: {0}")]
    InvalidInput(String),
    #[error("no feasible schedule: {0}")]
    NoFeasibleSchedule(String),
    #[error("mission {mission}: {source}")]
    Mission { mission: String, source: RouterError },
    #[error(transparent)]
    Router(#[from] RouterError),
    #[error(transparent)]
    Weather(#[from] WeatherError),
    #[error(transparent)]
    Performance(#[from] PerformanceError),
}

/// Block-time estimate used when a mission gives none: great-circle distance
/// at this ground speed plus a fixed allowance.
const ESTIMATE_SPEED_MS: f64 = 230.0;
const ESTIMATE_ALLOWANCE_H: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mission {
    pub id: String,
    pub origin: Airport,
    pub destination: Airport,
    /// Hours after the forecast issuance.
    pub departure_h: f64,
    /// Hours the aircraft is committed to the mission. Estimated from the
    /// great-circle distance when absent.
    #[serde(default)]
    pub block_h: Option<f64>,
    /// Fraction of the payload demand actually carried.
    pub expected_occupancy: f64,
    /// Payload the assigned type must be able to lift, kg.
    pub payload_demand_kg: f64,
    pub revenue: f64,
}

impl Mission {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        let bad = |m: String| Err(ScheduleError::InvalidInput(format!("mission {}: {m}", self.id)));
        if !(0.0..=1.0).contains(&self.expected_occupancy) {
            return bad(format!("expected_occupancy {} outside [0, 1]", self.expected_occupancy));
        }
        if !(self.revenue.is_finite() && self.revenue >= 0.0) {
            return bad(format!("revenue {} must be >= 0", self.revenue));
        }
        if !(self.payload_demand_kg.is_finite() && self.payload_demand_kg >= 0.0) {
            return bad(format!("payload_demand_kg {} must be >= 0", self.payload_demand_kg));
        }
        if !(self.departure_h.is_finite() && self.departure_h >= 0.0) {
            return bad(format!("departure_h {} must be >= 0", self.departure_h));
        }
        if let Some(b) = self.block_h {
            if !(b.is_finite() && b > 0.0) {
                return bad(format!("block_h {b} must be > 0"));
            }
        }
        Ok(())
    }

    pub fn block_hours(&self) -> f64 {
        self.block_h.unwrap_or_else(|| {
            distance_m(self.origin.position(), self.destination.position()) / ESTIMATE_SPEED_MS / 3600.0 + ESTIMATE_ALLOWANCE_H
        })
    }

    /// Half-open interval [departure, departure + block).
    pub fn busy(&self) -> (f64, f64) {
        (self.departure_h, self.departure_h + self.block_hours())
    }

    /// Payload flown, kg.
    pub fn payload(&self) -> f64 {
        self.expected_occupancy * self.payload_demand_kg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetType {
    pub count: u32,
    pub model: AircraftModel,
}

/// Available aircraft by type name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fleet {
    pub types: BTreeMap<String, FleetType>,
}

impl Fleet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, count: u32, model: AircraftModel) -> Self {
        self.types.insert(name.into(), FleetType { count, model });
        self
    }

    pub fn model(&self, name: &str) -> Result<&AircraftModel, ScheduleError> {
        self.types.get(name).map(|t| &t.model).ok_or_else(|| ScheduleError::InvalidInput(format!("unknown aircraft type {name}")))
    }
}

/// An aircraft model given either by bundled name or inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AircraftRef {
    Bundled(String),
    Inline(Box<AircraftModel>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetEntry {
    pub count: u32,
    pub aircraft: AircraftRef,
}

/// The JSON document read by the `schedule` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleInput {
    pub missions: Vec<Mission>,
    pub fleet: BTreeMap<String, FleetEntry>,
}

impl ScheduleInput {
    pub fn fleet(&self) -> Result<Fleet, ScheduleError> {
        let mut fleet = Fleet::new();
        for (name, entry) in &self.fleet {
            let model = match &entry.aircraft {
                AircraftRef::Bundled(n) => AircraftModel::bundled(n)?,
                AircraftRef::Inline(m) => {
                    m.validate()?;
                    (**m).clone()
                }
            };
            fleet = fleet.with(name.clone(), entry.count, model);
        }
        Ok(fleet)
    }
}

/// Aircraft type per mission, in mission order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    pub types: Vec<String>,
}

impl Assignment {
    pub fn label(&self) -> String {
        self.types.join("/")
    }
}

fn overlaps(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Largest number of the given intervals active at one instant.
fn peak_concurrency(intervals: &[(f64, f64)]) -> usize {
    // the peak is reached at some interval's start
    intervals.iter().map(|&(s, _)| intervals.iter().filter(|&&(a, b)| a <= s && s < b).count()).max().unwrap_or(0)
}

/// Every feasible assignment, in lexicographic order, stopping after `cap`.
pub fn enumerate_schedules(missions: &[Mission], fleet: &Fleet, cap: usize) -> Result<Vec<Assignment>, ScheduleError> {
    if missions.is_empty() {
        return Err(ScheduleError::InvalidInput("no missions".into()));
    }
    if cap == 0 {
        return Err(ScheduleError::InvalidInput("cap must be >= 1".into()));
    }
    for m in missions {
        m.validate()?;
    }
    let names: Vec<&String> = fleet.types.iter().filter(|(_, t)| t.count > 0).map(|(n, _)| n).collect();
    // types able to lift each mission's demand
    let options: Vec<Vec<usize>> = missions
        .iter()
        .map(|m| (0..names.len()).filter(|&k| fleet.types[names[k]].model.max_payload >= m.payload_demand_kg).collect())
        .collect();
    if let Some((m, _)) = missions.iter().zip(&options).find(|(_, o)| o.is_empty()) {
        return Err(ScheduleError::NoFeasibleSchedule(format!(
            "mission {}: no available type has max_payload >= payload demand {} kg",
            m.id, m.payload_demand_kg
        )));
    }
    let busy: Vec<(f64, f64)> = missions.iter().map(Mission::busy).collect();
    let counts: Vec<usize> = names.iter().map(|n| fleet.types[*n].count as usize).collect();

    struct Search<'a> {
        options: &'a [Vec<usize>],
        busy: &'a [(f64, f64)],
        counts: &'a [usize],
        cap: usize,
        chosen: Vec<usize>,
        out: Vec<Vec<usize>>,
    }
    impl Search<'_> {
        fn fits(&self, mission: usize, k: usize) -> bool {
            let mut same: Vec<(f64, f64)> = self
                .chosen
                .iter()
                .enumerate()
                .filter(|&(j, &t)| t == k && overlaps(self.busy[j], self.busy[mission]))
                .map(|(j, _)| self.busy[j])
                .collect();
            same.push(self.busy[mission]);
            peak_concurrency(&same) <= self.counts[k]
        }

        fn walk(&mut self) {
            let i = self.chosen.len();
            if i == self.options.len() {
                self.out.push(self.chosen.clone());
                return;
            }
            for &k in &self.options[i] {
                if self.out.len() >= self.cap {
                    return;
                }
                if self.fits(i, k) {
                    self.chosen.push(k);
                    self.walk();
                    self.chosen.pop();
                }
            }
        }
    }

    let mut search = Search { options: &options, busy: &busy, counts: &counts, cap, chosen: Vec::new(), out: Vec::new() };
    search.walk();
    if search.out.is_empty() {
        return Err(ScheduleError::NoFeasibleSchedule(
            "overlapping missions need more aircraft of a type than the fleet holds".into(),
        ));
    }
    Ok(search.out.into_iter().map(|c| Assignment { types: c.into_iter().map(|k| names[k].clone()).collect() }).collect())
}

/// Prices that turn a flight plan into money.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Economics {
    /// Currency per kg of fuel.
    pub fuel_price: f64,
    /// Currency per block minute flown.
    pub time_cost_per_min: f64,
    /// Cost index used when optimizing each flight, kg per minute.
    pub ci: f64,
    pub lattice: LatticeSpec,
}

impl Default for Economics {
    fn default() -> Self {
        Self { fuel_price: 0.8, time_cost_per_min: 30.0, ci: 20.0, lattice: LatticeSpec::default() }
    }
}

impl Economics {
    pub fn validate(&self) -> Result<CostIndex, ScheduleError> {
        if !(self.fuel_price.is_finite() && self.fuel_price >= 0.0 && self.time_cost_per_min.is_finite() && self.time_cost_per_min >= 0.0) {
            return Err(ScheduleError::InvalidInput("fuel_price and time_cost_per_min must be >= 0".into()));
        }
        CostIndex::new(self.ci).ok_or_else(|| ScheduleError::InvalidInput(format!("ci {} must be >= 0", self.ci)))
    }
}

/// The weather scenarios a schedule is evaluated over: the members, or the
/// control alone for an ensemble without members.
pub fn evaluation_grids(ensemble: &EnsembleForecast) -> Vec<&WeatherGrid> {
    if ensemble.members().is_empty() {
        vec![ensemble.control()]
    } else {
        ensemble.members().iter().collect()
    }
}

/// Grid axes covering every mission's lattice and its flying time.
pub fn schedule_axes(missions: &[Mission], lattice: &LatticeSpec, margin_deg: f64) -> Result<GridAxes, ScheduleError> {
    let (mut lat0, mut lat1, mut lon0, mut lon1, mut t1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN, 0.0_f64);
    for m in missions {
        let l = build_lattice(&m.origin, &m.destination, lattice)?;
        for w in l.waypoints() {
            lat0 = lat0.min(w.lat);
            lat1 = lat1.max(w.lat);
            lon0 = lon0.min(w.lon);
            lon1 = lon1.max(w.lon);
        }
        // generous: flying time can exceed the block estimate into a headwind
        t1 = t1.max(m.departure_h + 2.0 * m.block_hours());
    }
    if missions.is_empty() {
        return Err(ScheduleError::InvalidInput("no missions".into()));
    }
    let m = margin_deg.max(1.0);
    Ok(GridAxes::regular_box(
        ((lat0 - m).floor().max(-90.0), (lat1 + m).ceil().min(90.0)),
        ((lon0 - m).floor(), (lon1 + m).ceil()),
        (t1 / 6.0).ceil().max(1.0) * 6.0,
    ))
}

/// Money cost of one mission flown by one type in each scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionCosts {
    pub mission: String,
    pub aircraft_type: String,
    pub fuel_kg: Vec<f64>,
    pub time_min: Vec<f64>,
    pub cost: Vec<f64>,
}

fn mission_costs(
    mission: &Mission,
    type_name: &str,
    model: &AircraftModel,
    grids: &[&WeatherGrid],
    economics: &Economics,
    ci: CostIndex,
) -> Result<MissionCosts, ScheduleError> {
    let wrap = |e: RouterError| ScheduleError::Mission { mission: mission.id.clone(), source: e };
    let lattice: Lattice = build_lattice(&mission.origin, &mission.destination, &economics.lattice).map_err(wrap)?;
    let planner = Planner::new(&lattice, model, ci, mission.departure_h);
    let mut out = MissionCosts {
        mission: mission.id.clone(),
        aircraft_type: type_name.to_string(),
        fuel_kg: Vec::with_capacity(grids.len()),
        time_min: Vec::with_capacity(grids.len()),
        cost: Vec::with_capacity(grids.len()),
    };
    for (s, grid) in grids.iter().enumerate() {
        let plan = planner.optimize(grid, mission.payload(), &format!("member_{:02}", s + 1)).map_err(wrap)?;
        out.fuel_kg.push(plan.trip_fuel);
        out.time_min.push(plan.trip_time);
        out.cost.push(economics.fuel_price * plan.trip_fuel + economics.time_cost_per_min * plan.trip_time);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEvaluation {
    pub assignment: Assignment,
    pub label: String,
    pub revenue_per_scenario: Vec<f64>,
    pub cost_per_scenario: Vec<f64>,
    pub profit_per_scenario: Vec<f64>,
    pub mean_profit: f64,
    pub min_profit: f64,
    pub max_profit: f64,
    /// (max − min) / |mean|; absent when the mean profit is zero.
    pub profit_spread_fraction: Option<f64>,
}

fn compose(missions: &[Mission], assignment: &Assignment, costs: &[&MissionCosts], n: usize) -> ScheduleEvaluation {
    let revenue: f64 = missions.iter().map(|m| m.revenue).sum();
    let revenue_per_scenario = vec![revenue; n];
    let cost_per_scenario: Vec<f64> = (0..n).map(|s| costs.iter().map(|c| c.cost[s]).sum()).collect();
    let profit_per_scenario: Vec<f64> = cost_per_scenario.iter().map(|c| revenue - c).collect();
    let mean_profit = profit_per_scenario.iter().sum::<f64>() / n as f64;
    let min_profit = profit_per_scenario.iter().copied().fold(f64::INFINITY, f64::min);
    let max_profit = profit_per_scenario.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let profit_spread_fraction = (mean_profit != 0.0).then(|| (max_profit - min_profit) / mean_profit.abs());
    ScheduleEvaluation {
        label: assignment.label(),
        assignment: assignment.clone(),
        revenue_per_scenario,
        cost_per_scenario,
        profit_per_scenario,
        mean_profit,
        min_profit,
        max_profit,
        profit_spread_fraction,
    }
}

fn check_assignment(missions: &[Mission], assignment: &Assignment, fleet: &Fleet) -> Result<(), ScheduleError> {
    if assignment.types.len() != missions.len() {
        return Err(ScheduleError::InvalidInput(format!(
            "assignment has {} entries for {} missions",
            assignment.types.len(),
            missions.len()
        )));
    }
    for (m, t) in missions.iter().zip(&assignment.types) {
        m.validate()?;
        let model = fleet.model(t)?;
        if model.max_payload < m.payload_demand_kg {
            return Err(ScheduleError::NoFeasibleSchedule(format!(
                "mission {}: type {t} max_payload {} kg < payload demand {} kg",
                m.id, model.max_payload, m.payload_demand_kg
            )));
        }
    }
    Ok(())
}

/// Optimizes every mission with its assigned type in every scenario and
/// returns the schedule's profit distribution.
pub fn evaluate_schedule(
    missions: &[Mission],
    assignment: &Assignment,
    fleet: &Fleet,
    ensemble: &EnsembleForecast,
    economics: &Economics,
) -> Result<ScheduleEvaluation, ScheduleError> {
    let ci = economics.validate()?;
    check_assignment(missions, assignment, fleet)?;
    let grids = evaluation_grids(ensemble);
    let costs = missions
        .par_iter()
        .zip(&assignment.types)
        .map(|(m, t)| mission_costs(m, t, fleet.model(t)?, &grids, economics, ci))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&MissionCosts> = costs.iter().collect();
    Ok(compose(missions, assignment, &refs, grids.len()))
}

/// Evaluations sorted by descending mean profit, ties by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRanking {
    pub missions: Vec<String>,
    pub n_scenarios: usize,
    pub economics: Economics,
    pub ranked: Vec<ScheduleEvaluation>,
}

impl ScheduleRanking {
    pub fn table(&self) -> String {
        let mut s = format!("missions: {}\nscenarios: {}\n", self.missions.join(", "), self.n_scenarios);
        let _ = writeln!(s, "{:>4}  {:<32} {:>14} {:>14} {:>14} {:>8}", "rank", "schedule", "mean profit", "min", "max", "spread");
        for (i, e) in self.ranked.iter().enumerate() {
            let spread = e.profit_spread_fraction.map(|f| format!("{:.2}%", 100.0 * f)).unwrap_or_else(|| "n/a".into());
            let _ = writeln!(
                s,
                "{:>4}  {:<32} {:>14.2} {:>14.2} {:>14.2} {:>8}",
                i + 1,
                e.label,
                e.mean_profit,
                e.min_profit,
                e.max_profit,
                spread
            );
        }
        s
    }
}

pub fn rank(mut evaluations: Vec<ScheduleEvaluation>) -> Vec<ScheduleEvaluation> {
    evaluations.sort_by(|a, b| b.mean_profit.total_cmp(&a.mean_profit).then_with(|| a.label.cmp(&b.label)));
    evaluations
}

/// Enumerates up to `cap` schedules, evaluates each over the ensemble and
/// ranks them. Each (mission, type) pair is optimized once and shared by all
/// schedules that use it.
pub fn plan_schedules(
    missions: &[Mission],
    fleet: &Fleet,
    ensemble: &EnsembleForecast,
    economics: &Economics,
    cap: usize,
) -> Result<ScheduleRanking, ScheduleError> {
    let ci = economics.validate()?;
    let assignments = enumerate_schedules(missions, fleet, cap)?;
    let grids = evaluation_grids(ensemble);
    let mut pairs: Vec<(usize, &str)> = assignments
        .iter()
        .flat_map(|a| a.types.iter().enumerate().map(|(i, t)| (i, t.as_str())))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let table: BTreeMap<(usize, &str), MissionCosts> = pairs
        .par_iter()
        .map(|&(i, t)| Ok(((i, t), mission_costs(&missions[i], t, fleet.model(t)?, &grids, economics, ci)?)))
        .collect::<Result<_, ScheduleError>>()?;
    let evaluations = assignments
        .iter()
        .map(|a| {
            let costs: Vec<&MissionCosts> = a.types.iter().enumerate().map(|(i, t)| &table[&(i, t.as_str())]).collect();
            compose(missions, a, &costs, grids.len())
        })
        .collect();
    Ok(ScheduleRanking {
        missions: missions.iter().map(|m| m.id.clone()).collect(),
        n_scenarios: grids.len(),
        economics: economics.clone(),
        ranked: rank(evaluations),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mission(id: &str, dep: f64, block: f64, demand: f64) -> Mission {
        Mission {
            id: id.into(),
            origin: Airport::new("AAA", 40.0, -30.0),
            destination: Airport::new("BBB", 40.0, -20.0),
            departure_h: dep,
            block_h: Some(block),
            expected_occupancy: 0.8,
            payload_demand_kg: demand,
            revenue: 50_000.0,
        }
    }

    fn fleet(a: u32, b: u32) -> Fleet {
        let nb = AircraftModel::bundled("narrowbody").unwrap();
        let wb = AircraftModel::bundled("widebody").unwrap();
        Fleet::new().with("A", a, nb).with("B", b, wb)
    }

    #[test]
    fn peak_counts_half_open_intervals() {
        assert_eq!(peak_concurrency(&[(0.0, 2.0), (2.0, 4.0)]), 1);
        assert_eq!(peak_concurrency(&[(0.0, 2.0), (1.0, 4.0), (1.5, 1.6)]), 3);
        assert_eq!(peak_concurrency(&[]), 0);
    }

    #[test]
    fn order_is_lexicographic() {
        let ms = vec![mission("M1", 0.0, 2.0, 1000.0), mission("M2", 5.0, 2.0, 1000.0)];
        let s = enumerate_schedules(&ms, &fleet(1, 1), 10).unwrap();
        let labels: Vec<String> = s.iter().map(Assignment::label).collect();
        assert_eq!(labels, ["A/A", "A/B", "B/A", "B/B"]);
        assert_eq!(enumerate_schedules(&ms, &fleet(1, 1), 3).unwrap().len(), 3);
    }

    #[test]
    fn zero_count_types_are_unavailable() {
        let ms = vec![mission("M1", 0.0, 2.0, 1000.0)];
        let s = enumerate_schedules(&ms, &fleet(0, 2), 10).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].types, ["B"]);
    }

    #[test]
    fn occupancy_validated() {
        let mut m = mission("M1", 0.0, 2.0, 1000.0);
        m.expected_occupancy = 1.2;
        assert!(matches!(enumerate_schedules(&[m], &fleet(1, 1), 10), Err(ScheduleError::InvalidInput(_))));
    }

    #[test]
    fn block_estimate_is_positive() {
        let mut m = mission("M1", 0.0, 2.0, 1000.0);
        m.block_h = None;
        let b = m.block_hours();
        // about 850 km
        assert!(b > 1.0 && b < 2.0, "{b}");
    }
}
