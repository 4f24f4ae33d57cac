use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};
use stochplan_core::stats::*;

#[test]
fn hand_vector() {
    let t = paired_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    assert!((t.t - 4.242640687119285).abs() < 1e-12);
    assert!((t.p_two_sided - 0.0132).abs() < 5e-5, "{}", t.p_two_sided);
    assert_eq!(t.df, 4.0);
}

#[test]
fn matches_reference_t_distribution_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let n = rng.random_range(2..40);
        let shift = rng.random_range(-2.0..2.0);
        let d: Vec<f64> = (0..n).map(|_| shift + rng.random_range(-3.0..3.0)).collect();
        let ours = paired_t_test(&d).unwrap();
        let mean = d.iter().sum::<f64>() / n as f64;
        let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let t = mean / (sd / (n as f64).sqrt());
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).unwrap();
        let p = 2.0 * dist.cdf(-t.abs());
        assert!((ours.t - t).abs() < 1e-9 * t.abs().max(1.0));
        assert!((ours.p_two_sided - p).abs() < 1e-6, "n={n} t={t}: {} vs {p}", ours.p_two_sided);
        assert!((student_t_cdf(t, (n - 1) as f64) - dist.cdf(t)).abs() < 1e-6);
    }
}

#[test]
fn degenerate_inputs() {
    assert!(matches!(paired_t_test(&[2.0, 2.0, 2.0]), Err(StatsError::NoVariance)));
    assert!(matches!(paired_t_test(&[1.0]), Err(StatsError::TooFewSamples { .. })));
}
