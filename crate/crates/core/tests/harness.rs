use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use stochplan_core::harness::*;
use stochplan_core::router::LatticeSpec;
use stochplan_core::stochastic::PayloadDistribution;
use stochplan_core::SyntheticWeatherSpec;

fn quick(n_flights: usize, sigma: f64, members: usize) -> ExperimentConfig {
    ExperimentConfig {
        n_flights,
        weather: SyntheticWeatherSpec { perturbation_sigma: sigma, nowcast_sigma: sigma, n_members: members, ..Default::default() },
        lattice: LatticeSpec { n_layers: 5, n_offsets: 5, ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn identical_information_gives_all_ties() {
    let r = run_comparison(&quick(12, 0.0, 6)).unwrap();
    assert_eq!((r.stoch_wins, r.ties, r.det_wins), (0, 12, 0));
    assert_eq!((r.stoch_win_fraction, r.tie_fraction, r.det_win_fraction), (0.0, 1.0, 0.0));
    for f in &r.flights {
        assert_eq!(f.det_route, f.stoch_route);
        assert_eq!(f.fuel_saving, 0.0);
        assert_eq!(f.audit.unique_candidates, 1);
    }
}

#[test]
fn twenty_member_accounting_is_463_per_flight() {
    let r = run_comparison(&quick(3, 8.0, 20)).unwrap();
    assert_eq!(r.n_flights, 3);
    assert_eq!(r.accounting.nominal_total, 3 * 463);
    assert_eq!(r.accounting.first_pass_runs, 3 * 21);
    for f in &r.flights {
        let a = &f.audit;
        assert_eq!(a.first_pass_runs, 21);
        assert_eq!(a.second_pass_cells, a.unique_candidates * 20);
        assert_eq!(a.second_pass_cells_without_dedup, 420);
        assert_eq!(f.truth_evaluations, a.unique_candidates + 1);
    }
    let a = &r.accounting;
    assert_eq!(a.total, a.first_pass_runs + a.second_pass_cells + a.truth_evaluations);
    let fractions = r.stoch_win_fraction + r.tie_fraction + r.det_win_fraction;
    assert!((fractions - 1.0).abs() < 1e-9);
}

#[test]
fn comparison_is_reproducible_and_ordered() {
    let cfg = quick(6, 8.0, 4);
    let a = serde_json::to_string(&run_comparison(&cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run_comparison(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    let r = run_comparison(&cfg).unwrap();
    let ids: Vec<&str> = r.flights.iter().map(|f| f.flight_id.as_str()).collect();
    assert_eq!(ids[0], "F0000_YQX_SNN");
    assert!(ids.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn truth_costs_come_from_the_nowcast() {
    let cfg = quick(2, 8.0, 4);
    let r = run_comparison(&cfg).unwrap();
    let model = cfg.model().unwrap();
    for f in &r.flights {
        let index: usize = f.flight_id[1..5].parse().unwrap();
        let ctx = FlightContext::build(&cfg, &model, index).unwrap();
        let planner = ctx.planner(&model, cfg.cost_index());
        let det = ctx.nowcast.evaluate(&planner, &f.det_route, f.payload).unwrap();
        let stoch = ctx.nowcast.evaluate(&planner, &f.stoch_route, f.payload).unwrap();
        assert_eq!(det.trip_fuel, f.det_truth_fuel);
        assert_eq!(stoch.trip_fuel, f.stoch_truth_fuel);
        assert_eq!(f.fuel_saving, stoch.trip_fuel - det.trip_fuel);
    }
}

#[test]
fn invalid_config_is_rejected() {
    let cfg = ExperimentConfig { city_pairs: vec![], ..quick(1, 0.0, 1) };
    assert!(matches!(run_comparison(&cfg), Err(HarnessError::InvalidConfig(_))));
}

#[test]
fn saving_prints_with_one_decimal() {
    assert_eq!(format_kg(-33.3), "-33.3 kg");
    assert_eq!(format_kg(-33.2501), "-33.3 kg");
    let r = run_comparison(&quick(2, 8.0, 3)).unwrap();
    assert!(r.summary_text().contains(&format!("mean fuel saving       {}", format_kg(r.mean_fuel_saving))));
}

#[test]
fn single_value_histogram() {
    let h = savings_histogram(&[4.2], 20).unwrap();
    assert_eq!(h.counts, [1]);
    assert_eq!(h.densities[0], 1.0 / h.bin_width());
}

#[test]
fn uniform_values_give_a_flat_histogram() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = Uniform::new(0.0, 1.0).unwrap();
    let n = 20_000;
    let bins = 20;
    let values: Vec<f64> = (0..n).map(|_| u.sample(&mut rng)).collect();
    let h = savings_histogram(&values, bins).unwrap();
    let p = 1.0 / bins as f64;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    for &c in &h.counts {
        assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sd + 1.0, "{c}");
    }
    let integral: f64 = h.densities.iter().map(|d| d * h.bin_width()).sum();
    assert!((integral - 1.0).abs() < 1e-12);
}

#[test]
fn normal_draws_have_histogram_mean_near_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let values: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let h = savings_histogram(&values, 30).unwrap();
    assert!(h.mean().abs() < 0.05, "{}", h.mean());
}

#[test]
fn payload_study_without_payload_spread_has_no_t() {
    let cfg = ExperimentConfig { payload: PayloadDistribution::explicit(14_000.0, 0.0).unwrap(), ..quick(4, 8.0, 3) };
    let r = run_payload_study(&cfg).unwrap();
    assert_eq!(r.rows.len(), 4);
    assert!(r.rows.iter().all(|row| row.difference == 0.0 && !row.routes_differ()));
    assert_eq!(r.t_test, None);
    assert_eq!(r.t_test_note.as_deref(), Some("NoVariance"));
}

#[test]
fn payload_study_rows_are_consistent() {
    let r = run_payload_study(&quick(6, 8.0, 3)).unwrap();
    assert_eq!(r.rows.len() + r.failures.len(), 6);
    for row in &r.rows {
        assert_eq!(row.difference, row.fixed_fuel - row.uncertain_fuel);
        if !row.routes_differ() {
            assert_eq!(row.difference, 0.0);
        }
    }
    let n = r.rows.len() as f64;
    assert!((r.mean_difference - r.rows.iter().map(|x| x.difference).sum::<f64>() / n).abs() < 1e-9);
    assert_eq!(r.n_positive, r.rows.iter().filter(|x| x.difference > 0.0).count());
}
