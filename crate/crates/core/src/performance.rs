//! Parametric aircraft performance: affine fuel flow in mass per cruise level,
//! closed-form leg integration under wind, cost-index flight cost and reserve
//! fuel.
//!
//! Cruise TAS is fixed per level, so temperature has no effect on performance
//! in this model; it is carried through for later Mach/ISA modelling.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::along_track_wind;
use crate::weather::WindTemp;

#[derive(Debug, Error)]
pub enum PerformanceError {
    #[error("mass {mass:.1} kg outside (oew {oew:.1}, mtow {mtow:.1}]")]
    BadMass { mass: f64, oew: f64, mtow: f64 },
    #[error("level index {0} not defined for this aircraft")]
    BadLevel(usize),
    #[error("unflyable leg: ground speed {ground_speed:.2} m/s")]
    UnflyableLeg { ground_speed: f64 },
    #[error("invalid aircraft model: {0}")]
    InvalidModel(String),
    #[error("unknown bundled aircraft {0:?}")]
    UnknownAircraft(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Reserve rule: a contingency fraction of trip fuel plus a final reserve
/// flown at holding fuel flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReservePolicy {
    pub contingency_fraction: f64,
    pub final_reserve_min: f64,
}

impl Default for ReservePolicy {
    fn default() -> Self {
        Self { contingency_fraction: 0.05, final_reserve_min: 45.0 }
    }
}

/// Cruise performance at one flight level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPerformance {
    pub name: String,
    pub pressure_hpa: f64,
    /// m/s
    pub cruise_tas: f64,
    /// kg/h at operating empty weight
    pub fuel_flow_base: f64,
    /// kg/h per kg above operating empty weight
    pub fuel_flow_mass_coeff: f64,
}

/// Aircraft performance and weight limits. Levels are ordered by increasing
/// altitude (decreasing pressure); a level is addressed by its index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftModel {
    pub name: String,
    pub oew: f64,
    pub max_fuel: f64,
    pub max_payload: f64,
    pub max_takeoff_mass: f64,
    pub levels: Vec<LevelPerformance>,
    /// kg charged per level step of climb or descent
    pub climb_fuel_per_level_step: f64,
    /// minutes per level step
    pub climb_time_per_level_step: f64,
    /// kg/h
    pub holding_fuel_flow: f64,
    #[serde(default)]
    pub reserve: ReservePolicy,
}

const NARROWBODY: &str = include_str!("../data/aircraft/narrowbody.json");
const WIDEBODY: &str = include_str!("../data/aircraft/widebody.json");

impl AircraftModel {
    pub fn bundled_names() -> &'static [&'static str] {
        &["narrowbody", "widebody"]
    }

    pub fn bundled(name: &str) -> Result<Self, PerformanceError> {
        let text = match name {
            "narrowbody" => NARROWBODY,
            "widebody" => WIDEBODY,
            other => return Err(PerformanceError::UnknownAircraft(other.to_string())),
        };
        Self::from_json(text)
    }

    pub fn from_json(text: &str) -> Result<Self, PerformanceError> {
        let model: Self = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PerformanceError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), PerformanceError> {
        let bad = |m: String| Err(PerformanceError::InvalidModel(m));
        if !(self.oew > 0.0 && self.max_fuel > 0.0 && self.max_payload > 0.0) {
            return bad("oew, max_fuel and max_payload must be > 0".into());
        }
        if !(self.max_takeoff_mass > self.oew) {
            return bad("max_takeoff_mass must exceed oew".into());
        }
        if self.levels.is_empty() {
            return bad("at least one cruise level required".into());
        }
        if !self.levels.windows(2).all(|w| w[1].pressure_hpa < w[0].pressure_hpa) {
            return bad("levels must be ordered by decreasing pressure".into());
        }
        for l in &self.levels {
            if !(l.fuel_flow_mass_coeff > 0.0) {
                return bad(format!("{}: fuel_flow_mass_coeff must be > 0", l.name));
            }
            if !(l.cruise_tas > 0.0 && l.fuel_flow_base > 0.0) {
                return bad(format!("{}: tas and base fuel flow must be > 0", l.name));
            }
        }
        if self.climb_fuel_per_level_step < 0.0 || self.climb_time_per_level_step < 0.0 || self.holding_fuel_flow < 0.0 {
            return bad("climb increments and holding flow must be >= 0".into());
        }
        let r = self.reserve;
        if !(r.contingency_fraction >= 0.0 && r.final_reserve_min >= 0.0) {
            return bad("reserve parameters must be >= 0".into());
        }
        Ok(())
    }

    pub fn level(&self, index: usize) -> Result<&LevelPerformance, PerformanceError> {
        self.levels.get(index).ok_or(PerformanceError::BadLevel(index))
    }
}

/// Cost index, kg of fuel per minute of flight time.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CostIndex(f64);

impl CostIndex {
    pub fn new(kg_per_min: f64) -> Option<Self> {
        (kg_per_min.is_finite() && kg_per_min >= 0.0).then_some(Self(kg_per_min))
    }

    pub fn kg_per_min(self) -> f64 {
        self.0
    }
}

/// Horizontal geometry of one leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub length_m: f64,
    /// true course, degrees clockwise from north
    pub course_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegResult {
    /// minutes
    pub time: f64,
    /// kg
    pub fuel: f64,
    /// m/s
    pub ground_speed: f64,
    pub start_mass: f64,
    pub end_mass: f64,
}

/// Fuel flow in kg/h: `base + coeff * (mass - oew)`.
pub fn fuel_flow(model: &AircraftModel, mass: f64, level: usize) -> Result<f64, PerformanceError> {
    let lp = model.level(level)?;
    if !(mass > model.oew && mass <= model.max_takeoff_mass) {
        return Err(PerformanceError::BadMass { mass, oew: model.oew, mtow: model.max_takeoff_mass });
    }
    Ok(lp.fuel_flow_base + lp.fuel_flow_mass_coeff * (mass - model.oew))
}

/// Ground speed from TAS plus the along-track wind component. Crosswind drift
/// is ignored.
pub fn ground_speed(tas: f64, wind: &WindTemp, course_deg: f64) -> f64 {
    tas + along_track_wind(wind.u, wind.v, course_deg)
}

/// Fuel burnt on a leg as an affine function of the leg's start mass.
///
/// With fuel flow affine in mass and evaluated at the leg's mean mass, the
/// self-consistent burn is `fuel = k (base + coeff (m0 - oew))` with
/// `k = tau / (1 + coeff tau / 2)`, `tau` the leg duration in hours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegBurn {
    pub time_min: f64,
    pub ground_speed: f64,
    /// fuel at start mass m0 is `intercept + slope * m0`
    pub intercept: f64,
    pub slope: f64,
}

impl LegBurn {
    pub fn fuel_at(&self, start_mass: f64) -> f64 {
        self.intercept + self.slope * start_mass
    }
}

pub fn leg_burn(model: &AircraftModel, level: usize, leg: &Leg, wind: &WindTemp) -> Result<LegBurn, PerformanceError> {
    let lp = model.level(level)?;
    let gs = ground_speed(lp.cruise_tas, wind, leg.course_deg);
    if !(gs > 0.0) {
        return Err(PerformanceError::UnflyableLeg { ground_speed: gs });
    }
    let hours = leg.length_m / gs / 3600.0;
    let k = hours / (1.0 + 0.5 * lp.fuel_flow_mass_coeff * hours);
    Ok(LegBurn {
        time_min: hours * 60.0,
        ground_speed: gs,
        intercept: k * (lp.fuel_flow_base - lp.fuel_flow_mass_coeff * model.oew),
        slope: k * lp.fuel_flow_mass_coeff,
    })
}

/// Integrates one cruise leg in closed form.
pub fn integrate_leg(
    model: &AircraftModel,
    level: usize,
    leg: &Leg,
    wind: &WindTemp,
    start_mass: f64,
) -> Result<LegResult, PerformanceError> {
    fuel_flow(model, start_mass, level)?;
    let burn = leg_burn(model, level, leg, wind)?;
    let fuel = burn.fuel_at(start_mass);
    Ok(LegResult {
        time: burn.time_min,
        fuel,
        ground_speed: burn.ground_speed,
        start_mass,
        end_mass: start_mass - fuel,
    })
}

/// Same leg solved by fixed-point iteration on the mean mass. Kept as an
/// independent check of the closed form.
pub fn integrate_leg_iterative(
    model: &AircraftModel,
    level: usize,
    leg: &Leg,
    wind: &WindTemp,
    start_mass: f64,
    max_iter: usize,
) -> Result<(LegResult, usize), PerformanceError> {
    let lp = model.level(level)?;
    let gs = ground_speed(lp.cruise_tas, wind, leg.course_deg);
    if !(gs > 0.0) {
        return Err(PerformanceError::UnflyableLeg { ground_speed: gs });
    }
    let hours = leg.length_m / gs / 3600.0;
    let mut fuel = fuel_flow(model, start_mass, level)? * hours;
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let mean_mass = start_mass - 0.5 * fuel;
        let next = (lp.fuel_flow_base + lp.fuel_flow_mass_coeff * (mean_mass - model.oew)) * hours;
        let delta = (next - fuel).abs();
        fuel = next;
        if delta < 1e-9 {
            break;
        }
    }
    Ok((
        LegResult { time: hours * 60.0, fuel, ground_speed: gs, start_mass, end_mass: start_mass - fuel },
        iterations,
    ))
}

/// Fuel plus cost-index-weighted time, in kg-equivalent.
pub fn flight_cost(fuel: f64, time_min: f64, ci: CostIndex) -> f64 {
    fuel + ci.kg_per_min() * time_min
}

/// Contingency plus final reserve, kg.
pub fn reserve_fuel(model: &AircraftModel, trip_fuel: f64) -> f64 {
    let r = model.reserve;
    r.contingency_fraction * trip_fuel + model.holding_fuel_flow * r.final_reserve_min / 60.0
}
