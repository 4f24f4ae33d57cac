//! Test-only oracles shared by the integration suites.
#![allow(dead_code)]

use rand::Rng;
use stochplan_core::performance::{AircraftModel, CostIndex};
use stochplan_core::router::{build_lattice, Airport, Lattice, LatticeSpec};
use stochplan_core::weather::{GridAxes, WeatherGrid, WindTemp};

/// One randomized routing problem.
pub struct Instance {
    pub lattice: Lattice,
    pub model: AircraftModel,
    pub weather: WeatherGrid,
    pub payload: f64,
    pub ci: CostIndex,
    pub departure_h: f64,
}

/// Result of exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct Enumerated {
    pub cost: f64,
    pub trip_fuel: f64,
    pub route_key: String,
    pub profile: Vec<usize>,
    pub combinations: usize,
}

pub fn combinations(lattice: &Lattice) -> usize {
    let n_levels = lattice.levels().len();
    lattice.all_paths().iter().map(|p| n_levels.pow((p.len() - 1) as u32)).sum()
}

/// Trip fuel and time of one fixed path and level profile at a given takeoff
/// mass, integrating each leg by iterating on the mean mass until it stops
/// moving. Deliberately shares nothing with the label search except the
/// weather lookup and the timing convention (wind sampled at the leg midpoint,
/// at the time the leg would be half flown in calm air).
fn fly(instance: &Instance, nodes: &[usize], profile: &[usize], takeoff_mass: f64) -> Option<(f64, f64)> {
    let model = &instance.model;
    let lattice = &instance.lattice;
    let first = profile[0];
    let mut time = (first + 1) as f64 * model.climb_time_per_level_step;
    let mut fuel = (first + 1) as f64 * model.climb_fuel_per_level_step;
    let mut prev = first;
    for (leg_index, w) in nodes.windows(2).enumerate() {
        let level = profile[leg_index];
        let steps = prev.abs_diff(level) as f64;
        time += steps * model.climb_time_per_level_step;
        fuel += steps * model.climb_fuel_per_level_step;
        prev = level;
        let lp = &model.levels[level];
        let edge = &lattice.edges()[lattice.find_edge(w[0], w[1]).unwrap()];
        let hour = instance.departure_h + (time + edge.leg.length_m / lp.cruise_tas / 60.0 / 2.0) / 60.0;
        let wind = instance.weather.sample_at(edge.midpoint.lat, edge.midpoint.lon, lp.pressure_hpa, hour).unwrap();
        let c = edge.leg.course_deg.to_radians();
        let gs = lp.cruise_tas + wind.u * c.sin() + wind.v * c.cos();
        if gs <= 0.0 {
            return None;
        }
        let hours = edge.leg.length_m / gs / 3600.0;
        let start = takeoff_mass - fuel;
        let mut leg_fuel = 0.0;
        for _ in 0..200 {
            let mean = start - leg_fuel / 2.0;
            let next = (lp.fuel_flow_base + lp.fuel_flow_mass_coeff * (mean - model.oew)) * hours;
            let done = (next - leg_fuel).abs() < 1e-13 * next.abs().max(1.0);
            leg_fuel = next;
            if done {
                break;
            }
        }
        fuel += leg_fuel;
        time += hours * 60.0;
    }
    Some((fuel, time))
}

/// Cost of one path/profile with its own self-consistent takeoff mass, or
/// `None` if unflyable or over a weight/fuel limit.
pub fn plan_cost(instance: &Instance, nodes: &[usize], profile: &[usize]) -> Option<(f64, f64)> {
    let model = &instance.model;
    let hold = model.holding_fuel_flow * model.reserve.final_reserve_min / 60.0;
    let cf = model.reserve.contingency_fraction;
    let mut mass = model.oew + instance.payload + hold;
    for _ in 0..500 {
        let (trip, _) = fly(instance, nodes, profile, mass)?;
        let next = model.oew + instance.payload + trip + cf * trip + hold;
        let done = (next - mass).abs() < 1e-11 * mass;
        mass = next;
        if done {
            break;
        }
    }
    let (trip, time) = fly(instance, nodes, profile, mass)?;
    if mass > model.max_takeoff_mass || trip + cf * trip + hold > model.max_fuel {
        return None;
    }
    Some((trip + instance.ci.kg_per_min() * time, trip))
}

/// Exhaustive search over every path and every per-leg level assignment.
pub fn enumerate(instance: &Instance) -> Option<Enumerated> {
    let lattice = &instance.lattice;
    let levels = lattice.levels();
    let mut best: Option<Enumerated> = None;
    let mut count = 0;
    for nodes in lattice.all_paths() {
        let legs = nodes.len() - 1;
        let key = lattice.route_from_nodes(&nodes).route_key;
        for code in 0..levels.len().pow(legs as u32) {
            count += 1;
            let mut c = code;
            let profile: Vec<usize> = (0..legs)
                .map(|_| {
                    let l = levels[c % levels.len()];
                    c /= levels.len();
                    l
                })
                .collect();
            let Some((cost, trip)) = plan_cost(instance, &nodes, &profile) else { continue };
            let better = match &best {
                None => true,
                Some(b) => cost < b.cost || (cost == b.cost && (key.clone(), profile.clone()) < (b.route_key.clone(), b.profile.clone())),
            };
            if better {
                best = Some(Enumerated { cost, trip_fuel: trip, route_key: key.clone(), profile, combinations: 0 });
            }
        }
    }
    best.map(|mut b| {
        b.combinations = count;
        b
    })
}

/// Smooth random wind field over a box: a few Fourier modes in space and time.
pub fn random_weather(rng: &mut impl Rng, axes: GridAxes) -> WeatherGrid {
    let modes: Vec<[f64; 7]> = (0..4)
        .map(|_| {
            [
                rng.random_range(-35.0..35.0),     // u amplitude
                rng.random_range(-20.0..20.0),     // v amplitude
                rng.random_range(0.05..0.4),       // lat wavenumber, rad/deg
                rng.random_range(0.05..0.4),       // lon wavenumber
                rng.random_range(0.0..6.3),        // phase
                rng.random_range(-0.03..0.03),     // time frequency, rad/h
                rng.random_range(0.002..0.01),     // vertical, per hPa
            ]
        })
        .collect();
    let base_u = rng.random_range(-10.0..40.0);
    WeatherGrid::from_fn(axes, |lat, lon, p, h| {
        let mut u = base_u;
        let mut v = 0.0;
        for m in &modes {
            let phase = m[2] * lat + m[3] * lon + m[4] + m[5] * h + m[6] * p;
            u += m[0] * phase.sin() / 2.0;
            v += m[1] * phase.cos() / 2.0;
        }
        WindTemp { u, v, temperature: 220.0 }
    })
    .unwrap()
}

/// A random instance with at most `max_combinations` path x profile choices.
pub fn random_instance(rng: &mut impl Rng, max_combinations: usize) -> Instance {
    loop {
        let model = AircraftModel::bundled(if rng.random_bool(0.7) { "narrowbody" } else { "widebody" }).unwrap();
        let lat0 = rng.random_range(38.0..52.0);
        let lon0 = rng.random_range(-58.0..-50.0);
        let origin = Airport::new("ORG", lat0, lon0);
        let dest = Airport::new(
            "DST",
            lat0 + rng.random_range(-4.0..4.0),
            lon0 + rng.random_range(12.0..30.0),
        );
        let (origin, dest) = if rng.random_bool(0.5) { (origin, dest) } else { (dest, origin) };
        let n_levels = rng.random_range(1..=3usize);
        let mut levels: Vec<usize> = (0..model.levels.len()).collect();
        while levels.len() > n_levels {
            let i = rng.random_range(0..levels.len());
            levels.remove(i);
        }
        let spec = LatticeSpec {
            n_layers: rng.random_range(1..=3),
            n_offsets: [1, 3, 5][rng.random_range(0..3)],
            max_offset_deg: rng.random_range(0.5..3.0),
            lateral_reach: if rng.random_bool(0.5) { None } else { Some(1) },
            levels,
        };
        let lattice = build_lattice(&origin, &dest, &spec).unwrap();
        if combinations(&lattice) > max_combinations {
            continue;
        }
        let axes = GridAxes::regular_box((30.0, 60.0), (-62.0, -15.0), 24.0);
        let weather = random_weather(rng, axes);
        let payload = rng.random_range(0.0..model.max_payload);
        let ci = CostIndex::new(rng.random_range(5.0..60.0)).unwrap();
        let departure_h = rng.random_range(0.0..12.0);
        return Instance { lattice, model, weather, payload, ci, departure_h };
    }
}
