//! Forward label-setting over (waypoint, level) states.
//!
//! Cruise time does not depend on mass, and fuel burnt is affine in the
//! leg's start mass, so a partial plan's fuel is an exact affine function of
//! the (not yet known) takeoff mass. Labels carry that function; at the
//! destination each label's self-consistent takeoff mass is solved in closed
//! form, which removes the outer fixed-point loop over trip fuel.

use super::{FlightPlan, Lattice, RouterError};
use crate::performance::{self, AircraftModel, CostIndex};
use crate::weather::WeatherGrid;

#[derive(Debug, Clone, Copy)]
struct Label {
    node: usize,
    /// index into `Lattice::levels`
    slot: usize,
    time_min: f64,
    /// fuel used so far is `fuel_a + fuel_b * takeoff_mass`
    fuel_a: f64,
    fuel_b: f64,
    parent: Option<usize>,
}

impl Label {
    fn fuel_at(&self, takeoff_mass: f64) -> f64 {
        self.fuel_a + self.fuel_b * takeoff_mass
    }
}

/// Counters for one search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub labels_created: usize,
    pub labels_dominated: usize,
    pub labels_over_capacity: usize,
    pub destination_labels: usize,
}

pub(crate) struct Search<'a> {
    pub lattice: &'a Lattice,
    pub model: &'a AircraftModel,
    pub ci: CostIndex,
    pub departure_h: f64,
    pub weather: &'a WeatherGrid,
    pub payload: f64,
    pub pruning: bool,
    /// If set, only these edges may be used.
    pub allowed_edges: Option<&'a [bool]>,
}

struct Solved {
    label: usize,
    cost: f64,
    takeoff_mass: f64,
    trip_fuel: f64,
    reserve: f64,
}

impl Search<'_> {
    fn steps(&self, from_slot: usize, to_slot: usize) -> f64 {
        self.lattice.levels()[from_slot].abs_diff(self.lattice.levels()[to_slot]) as f64
    }

    /// `true` if `a` is no worse than `b` in time and in fuel over the whole
    /// admissible takeoff-mass range, and strictly better somewhere.
    fn dominates(a: &Label, b: &Label, mass_lo: f64, mass_hi: f64) -> bool {
        let (alo, ahi) = (a.fuel_at(mass_lo), a.fuel_at(mass_hi));
        let (blo, bhi) = (b.fuel_at(mass_lo), b.fuel_at(mass_hi));
        a.time_min <= b.time_min
            && alo <= blo
            && ahi <= bhi
            && (a.time_min < b.time_min || alo < blo || ahi < bhi)
    }

    pub fn run(&self) -> Result<(FlightPlan, SearchStats), RouterError> {
        let model = self.model;
        if !(self.payload >= 0.0) {
            return Err(RouterError::Infeasible(format!("payload {:.1} kg is negative", self.payload)));
        }
        if self.payload > model.max_payload {
            return Err(RouterError::Infeasible(format!(
                "payload {:.1} kg exceeds max_payload {:.1} kg",
                self.payload, model.max_payload
            )));
        }
        let lattice = self.lattice;
        for &level in lattice.levels() {
            model.level(level)?;
        }
        let final_reserve = performance::reserve_fuel(model, 0.0);
        let mass_lo = model.oew + self.payload + final_reserve;
        let mass_hi = model.max_takeoff_mass;
        if mass_lo > mass_hi {
            return Err(RouterError::Infeasible(format!(
                "zero-fuel mass plus final reserve {mass_lo:.1} kg exceeds max_takeoff_mass {mass_hi:.1} kg"
            )));
        }

        let n_slots = lattice.levels().len();
        let mut arena: Vec<Label> = Vec::new();
        let mut states: Vec<Vec<usize>> = vec![Vec::new(); lattice.waypoints().len() * n_slots];
        let mut stats = SearchStats::default();

        for slot in 0..n_slots {
            let steps = (lattice.levels()[slot] + 1) as f64;
            let label = Label {
                node: lattice.origin(),
                slot,
                time_min: steps * model.climb_time_per_level_step,
                fuel_a: steps * model.climb_fuel_per_level_step,
                fuel_b: 0.0,
                parent: None,
            };
            arena.push(label);
            states[lattice.origin() * n_slots + slot].push(arena.len() - 1);
            stats.labels_created += 1;
        }

        for node in 0..lattice.destination() {
            for slot in 0..n_slots {
                let bucket = std::mem::take(&mut states[node * n_slots + slot]);
                for &li in &bucket {
                    let label = arena[li];
                    for &ei in lattice.out_edges(node) {
                        if let Some(mask) = self.allowed_edges {
                            if !mask[ei] {
                                continue;
                            }
                        }
                        let edge = &lattice.edges()[ei];
                        for next_slot in 0..n_slots {
                            if node == lattice.origin() && next_slot != slot {
                                continue;
                            }
                            let level = lattice.levels()[next_slot];
                            let lp = model.level(level)?;
                            let steps = self.steps(slot, next_slot);
                            let start_time = label.time_min + steps * model.climb_time_per_level_step;
                            let calm_half_min = edge.leg.length_m / lp.cruise_tas / 120.0;
                            let hour = self.departure_h + (start_time + calm_half_min) / 60.0;
                            let wind = self.weather.sample_at(edge.midpoint.lat, edge.midpoint.lon, lp.pressure_hpa, hour)?;
                            let burn = match performance::leg_burn(model, level, &edge.leg, &wind) {
                                Ok(b) => b,
                                Err(performance::PerformanceError::UnflyableLeg { .. }) => continue,
                                Err(e) => return Err(e.into()),
                            };
                            // fuel before the leg, then the leg burn from the
                            // mass at its start: m = M - (a + b M)
                            let a0 = label.fuel_a + steps * model.climb_fuel_per_level_step;
                            let b0 = label.fuel_b;
                            let next = Label {
                                node: edge.to,
                                slot: next_slot,
                                time_min: start_time + burn.time_min,
                                fuel_a: a0 + burn.intercept - burn.slope * a0,
                                fuel_b: b0 + burn.slope * (1.0 - b0),
                                parent: Some(li),
                            };
                            stats.labels_created += 1;
                            if next.fuel_at(mass_lo) > model.max_fuel {
                                stats.labels_over_capacity += 1;
                                continue;
                            }
                            let target = edge.to * n_slots + next_slot;
                            if self.pruning {
                                if states[target].iter().any(|&o| Self::dominates(&arena[o], &next, mass_lo, mass_hi)) {
                                    stats.labels_dominated += 1;
                                    continue;
                                }
                                let before = states[target].len();
                                states[target].retain(|&o| !Self::dominates(&next, &arena[o], mass_lo, mass_hi));
                                stats.labels_dominated += before - states[target].len();
                            }
                            arena.push(next);
                            states[target].push(arena.len() - 1);
                        }
                    }
                }
                states[node * n_slots + slot] = bucket;
            }
        }

        let dest = lattice.destination();
        let mut best: Option<(Solved, Vec<usize>, Vec<usize>)> = None;
        let mut first_failure: Option<(f64, String)> = None;
        for slot in 0..n_slots {
            for &li in &states[dest * n_slots + slot] {
                stats.destination_labels += 1;
                let solved = match self.solve_mass(&arena[li], li) {
                    Ok(s) => s,
                    Err((cost_hint, reason)) => {
                        if first_failure.as_ref().is_none_or(|(c, _)| cost_hint < *c) {
                            first_failure = Some((cost_hint, reason));
                        }
                        continue;
                    }
                };
                let replace = match &best {
                    None => true,
                    Some((b, _, _)) if solved.cost < b.cost => true,
                    Some((b, nodes, levels)) if solved.cost == b.cost => {
                        let (n2, l2) = trace(&arena, li, lattice);
                        let key_new = lattice.route_from_nodes(&n2).route_key;
                        let key_old = lattice.route_from_nodes(nodes).route_key;
                        key_new < key_old || (key_new == key_old && l2 < *levels)
                    }
                    _ => false,
                };
                if replace {
                    let (nodes, levels) = trace(&arena, li, lattice);
                    best = Some((solved, nodes, levels));
                }
            }
        }

        let Some((solved, nodes, level_profile)) = best else {
            let reason = first_failure
                .map(|(_, r)| r)
                .unwrap_or_else(|| "no flyable path through the lattice".to_string());
            return Err(RouterError::Infeasible(reason));
        };
        let label = &arena[solved.label];
        let plan = FlightPlan {
            route: lattice.route_from_nodes(&nodes),
            level_profile,
            trip_fuel: solved.trip_fuel,
            trip_time: label.time_min,
            takeoff_mass: solved.takeoff_mass,
            reserve: solved.reserve,
            payload: self.payload,
            cost: solved.cost,
            scenario_tag: String::new(),
        };
        Ok((plan, stats))
    }

    /// Self-consistent takeoff mass `M = oew + payload + trip(M) + reserve(trip(M))`
    /// for a destination label, with capacity checks.
    fn solve_mass(&self, label: &Label, index: usize) -> Result<Solved, (f64, String)> {
        let model = self.model;
        let cf = model.reserve.contingency_fraction;
        let final_reserve = performance::reserve_fuel(model, 0.0);
        let denom = 1.0 - (1.0 + cf) * label.fuel_b;
        let hint = label.fuel_at(model.max_takeoff_mass);
        if !(denom > 0.0) {
            return Err((hint, "fuel requirement diverges with takeoff mass".into()));
        }
        let takeoff_mass = (model.oew + self.payload + final_reserve + (1.0 + cf) * label.fuel_a) / denom;
        let trip_fuel = label.fuel_at(takeoff_mass);
        let reserve = performance::reserve_fuel(model, trip_fuel);
        let cost = performance::flight_cost(trip_fuel, label.time_min, self.ci);
        if takeoff_mass > model.max_takeoff_mass {
            return Err((cost, format!(
                "takeoff mass {takeoff_mass:.1} kg exceeds max_takeoff_mass {:.1} kg",
                model.max_takeoff_mass
            )));
        }
        if trip_fuel + reserve > model.max_fuel {
            return Err((cost, format!(
                "trip fuel plus reserve {:.1} kg exceeds max_fuel {:.1} kg",
                trip_fuel + reserve,
                model.max_fuel
            )));
        }
        Ok(Solved { label: index, cost, takeoff_mass, trip_fuel, reserve })
    }
}

/// Node sequence and per-leg aircraft level indices for a label chain.
fn trace(arena: &[Label], mut index: usize, lattice: &Lattice) -> (Vec<usize>, Vec<usize>) {
    let mut nodes = Vec::new();
    let mut levels = Vec::new();
    loop {
        let l = &arena[index];
        nodes.push(l.node);
        match l.parent {
            Some(p) => {
                levels.push(lattice.levels()[l.slot]);
                index = p;
            }
            None => break,
        }
    }
    nodes.reverse();
    levels.reverse();
    (nodes, levels)
}
