mod common;

use common::{enumerate, random_instance, Instance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stochplan_core::performance::{AircraftModel, CostIndex};
use stochplan_core::router::{build_lattice, Airport, LatticeSpec, Planner, RouterError};
use stochplan_core::weather::{GridAxes, WeatherGrid, WindTemp};

fn planner(i: &Instance) -> Planner<'_> {
    Planner::new(&i.lattice, &i.model, i.ci, i.departure_h)
}

fn calm(axes: GridAxes) -> WeatherGrid {
    WeatherGrid::uniform(axes, WindTemp { u: 0.0, v: 0.0, temperature: 220.0 }).unwrap()
}

#[test]
fn symmetric_calm_single_level_takes_centre_route() {
    let model = AircraftModel::bundled("narrowbody").unwrap();
    let a = Airport::new("WST", 0.0, -30.0);
    let b = Airport::new("EST", 0.0, -10.0);
    let spec = LatticeSpec { n_layers: 3, n_offsets: 5, max_offset_deg: 2.0, lateral_reach: None, levels: vec![2] };
    let lattice = build_lattice(&a, &b, &spec).unwrap();
    let weather = calm(GridAxes::regular_box((-5.0, 5.0), (-31.0, -9.0), 12.0));
    let plan = Planner::new(&lattice, &model, CostIndex::new(20.0).unwrap(), 0.0)
        .optimize(&weather, 10_000.0, "calm")
        .unwrap();
    assert_eq!(plan.route.route_key, "WST-L01O02-L02O02-L03O02-EST");
    assert_eq!(plan.level_profile, vec![2; 4]);
}

#[test]
fn tailwind_band_matches_enumeration() {
    // 3 layers x 3 offsets x 2 levels, strong westerly north of 46N
    let model = AircraftModel::bundled("narrowbody").unwrap();
    let a = Airport::new("AAA", 45.0, -50.0);
    let b = Airport::new("BBB", 45.0, -25.0);
    let spec = LatticeSpec { n_layers: 3, n_offsets: 3, max_offset_deg: 2.5, lateral_reach: None, levels: vec![1, 3] };
    let lattice = build_lattice(&a, &b, &spec).unwrap();
    let axes = GridAxes::regular_box((38.0, 52.0), (-52.0, -23.0), 12.0);
    let weather = WeatherGrid::from_fn(axes, |lat, _, p, _| WindTemp {
        u: if lat > 46.0 { 60.0 + (300.0 - p) / 10.0 } else { 5.0 },
        v: 0.0,
        temperature: 220.0,
    })
    .unwrap();
    let instance = Instance { lattice, model, weather, payload: 14_000.0, ci: CostIndex::new(25.0).unwrap(), departure_h: 1.0 };
    let oracle = enumerate(&instance).unwrap();
    assert_eq!(oracle.combinations, 27 * 16);
    let plan = planner(&instance).optimize(&instance.weather, instance.payload, "band").unwrap();
    assert!((plan.cost - oracle.cost).abs() < 1e-6, "{} vs {}", plan.cost, oracle.cost);
    assert_eq!(plan.route.route_key, oracle.route_key);
    assert_eq!(plan.level_profile, oracle.profile);
    // the band is north, so the chosen interior waypoints are the northern offsets
    assert!(plan.route.waypoint_ids[1..4].iter().all(|id| id.ends_with("O02")), "{}", plan.route.route_key);
}

#[test]
fn profile_switches_to_upper_level_where_it_pays() {
    let model = AircraftModel::bundled("narrowbody").unwrap();
    let a = Airport::new("AAA", 45.0, -54.0);
    let b = Airport::new("BBB", 45.0, -24.0);
    let spec = LatticeSpec { n_layers: 2, n_offsets: 1, max_offset_deg: 0.0, lateral_reach: None, levels: vec![1, 2] };
    let lattice = build_lattice(&a, &b, &spec).unwrap();
    let axes = GridAxes::regular_box((40.0, 50.0), (-56.0, -22.0), 12.0);
    // upper level (250 hPa): headwind except a tailwind over the middle leg
    let weather = WeatherGrid::from_fn(axes, |_, lon, p, _| {
        let upper = p < 262.0;
        let u = if !upper { 0.0 } else if (-44.0..=-34.0).contains(&lon) { 70.0 } else { -40.0 };
        WindTemp { u, v: 0.0, temperature: 220.0 }
    })
    .unwrap();
    let instance = Instance { lattice, model, weather, payload: 12_000.0, ci: CostIndex::new(20.0).unwrap(), departure_h: 0.0 };
    let oracle = enumerate(&instance).unwrap();
    assert_eq!(oracle.combinations, 8);
    let p = planner(&instance);
    let plan = p.optimize(&instance.weather, instance.payload, "x").unwrap();
    assert_eq!(plan.level_profile, vec![1, 2, 1]);
    assert_eq!(plan.level_profile, oracle.profile);
    assert!((plan.cost - oracle.cost).abs() < 1e-6);
    let recost = p.recost_route(&plan.route, &instance.weather, instance.payload, "x").unwrap();
    assert_eq!(recost.cost, plan.cost);
}

#[test]
fn single_level_recost_is_plain_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = AircraftModel::bundled("narrowbody").unwrap();
    let a = Airport::new("AAA", 44.0, -52.0);
    let b = Airport::new("BBB", 47.0, -30.0);
    let spec = LatticeSpec { n_layers: 3, n_offsets: 3, max_offset_deg: 2.0, lateral_reach: Some(1), levels: vec![3] };
    let lattice = build_lattice(&a, &b, &spec).unwrap();
    let weather = common::random_weather(&mut rng, GridAxes::regular_box((35.0, 55.0), (-55.0, -25.0), 12.0));
    let instance = Instance { lattice, model, weather, payload: 9_000.0, ci: CostIndex::new(30.0).unwrap(), departure_h: 2.0 };
    let p = planner(&instance);
    for nodes in instance.lattice.all_paths() {
        let route = instance.lattice.route_from_nodes(&nodes);
        let plan = p.recost_route(&route, &instance.weather, instance.payload, "r").unwrap();
        let (cost, trip) = common::plan_cost(&instance, &nodes, &vec![3; nodes.len() - 1]).unwrap();
        assert!((plan.cost - cost).abs() < 1e-6);
        assert!((plan.trip_fuel - trip).abs() < 1e-6);
        assert_eq!(plan.route, route);
    }
}

#[test]
fn payload_over_limit_is_infeasible() {
    let model = AircraftModel::bundled("narrowbody").unwrap();
    let lattice = build_lattice(&Airport::new("A", 45.0, -50.0), &Airport::new("B", 45.0, -40.0), &LatticeSpec::default()).unwrap();
    let weather = calm(GridAxes::regular_box((40.0, 50.0), (-52.0, -38.0), 12.0));
    let err = Planner::new(&lattice, &model, CostIndex::new(10.0).unwrap(), 0.0)
        .optimize(&weather, model.max_payload + 1.0, "x")
        .unwrap_err();
    match err {
        RouterError::Infeasible(reason) => assert!(reason.contains("max_payload"), "{reason}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn range_beyond_fuel_capacity_is_infeasible() {
    let model = AircraftModel::bundled("narrowbody").unwrap();
    let lattice = build_lattice(&Airport::new("A", 40.0, -60.0), &Airport::new("B", 40.0, 60.0), &LatticeSpec { n_offsets: 1, ..Default::default() }).unwrap();
    let weather = calm(GridAxes::regular_box((30.0, 80.0), (-61.0, 61.0), 48.0));
    let err = Planner::new(&lattice, &model, CostIndex::new(10.0).unwrap(), 0.0)
        .optimize(&weather, 5_000.0, "x")
        .unwrap_err();
    assert!(matches!(err, RouterError::Infeasible(_)), "{err:?}");
}

#[test]
fn unknown_route_rejected() {
    let model = AircraftModel::bundled("narrowbody").unwrap();
    let lattice = build_lattice(&Airport::new("A", 45.0, -50.0), &Airport::new("B", 45.0, -40.0), &LatticeSpec::default()).unwrap();
    let weather = calm(GridAxes::regular_box((40.0, 50.0), (-52.0, -38.0), 12.0));
    let p = Planner::new(&lattice, &model, CostIndex::new(10.0).unwrap(), 0.0);
    let bogus = stochplan_core::Route::new(vec!["A".into(), "L01O00".into(), "L02O06".into(), "B".into()]);
    assert!(matches!(p.recost_route(&bogus, &weather, 1000.0, "x"), Err(RouterError::UnknownRoute(_))));
}

#[test]
fn randomized_oracle_equivalence_and_pruning_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    for trial in 0..60 {
        let instance = random_instance(&mut rng, 200);
        let oracle = enumerate(&instance);
        let pruned = planner(&instance).optimize(&instance.weather, instance.payload, "t");
        let full = planner(&instance).with_pruning(false).optimize(&instance.weather, instance.payload, "t");
        match (oracle, pruned, full) {
            (Some(o), Ok(p), Ok(f)) => {
                assert!((p.cost - o.cost).abs() < 1e-6, "trial {trial}: {} vs oracle {}", p.cost, o.cost);
                assert_eq!(p.cost, f.cost, "trial {trial}: pruning changed the optimum");
                let recost = planner(&instance).recost_route(&p.route, &instance.weather, instance.payload, "t").unwrap();
                assert_eq!(recost.cost, p.cost, "trial {trial}");
            }
            (None, Err(RouterError::Infeasible(_)), Err(RouterError::Infeasible(_))) => {}
            (o, p, f) => panic!("trial {trial}: oracle {o:?}, pruned {p:?}, full {f:?}"),
        }
    }
}

#[test]
fn plan_mass_balance() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let i = random_instance(&mut rng, 200);
        if let Ok(plan) = planner(&i).optimize(&i.weather, i.payload, "m") {
            let sum = i.model.oew + plan.payload + plan.trip_fuel + plan.reserve;
            assert!((plan.takeoff_mass - sum).abs() < 1e-6 * sum);
            assert!(plan.takeoff_mass <= i.model.max_takeoff_mass);
            assert!(plan.trip_fuel + plan.reserve <= i.model.max_fuel);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn more_payload_never_less_fuel(seed in 0u64..10_000, dp in 1.0f64..3_000.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let i = random_instance(&mut rng, 200);
        let p = planner(&i);
        let payload = (i.payload - dp).max(0.0);
        if let (Ok(light), Ok(heavy)) = (p.optimize(&i.weather, payload, "l"), p.optimize(&i.weather, payload + dp, "h")) {
            prop_assert!(heavy.trip_fuel >= light.trip_fuel - 1e-9);
        }
    }

    #[test]
    fn heavier_payload_burns_more_on_fixed_route(seed in 0u64..10_000, dp in 1.0f64..2_000.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut i = random_instance(&mut rng, 200);
        let nodes = i.lattice.all_paths().remove(0);
        let profile = vec![i.lattice.levels()[0]; nodes.len() - 1];
        let light = common::plan_cost(&i, &nodes, &profile);
        i.payload += dp;
        let heavy = common::plan_cost(&i, &nodes, &profile);
        if let (Some((_, lf)), Some((_, hf))) = (light, heavy) {
            prop_assert!(hf > lf);
        }
    }
}
