use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

use super::StochasticError;

/// Fraction of the mean used as σ_P when nothing better is known.
pub const DEFAULT_SIGMA_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadMode {
    ExplicitSigma,
    DerivedFromPassengers,
    FractionOfMean,
}

/// Normal payload-mass distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayloadDistribution {
    pub mean: f64,
    pub sigma_total: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_passenger_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_passengers: Option<u32>,
    pub mode: PayloadMode,
}

/// Total payload standard deviation for `n_passengers` independent
/// passenger masses of standard deviation `per_passenger_sigma`.
pub fn payload_sigma(per_passenger_sigma: f64, n_passengers: u32) -> f64 {
    (per_passenger_sigma * per_passenger_sigma * n_passengers as f64).sqrt()
}

fn check(mean: f64, sigma: f64) -> Result<(), StochasticError> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(StochasticError::InvalidPayload(format!("mean {mean} must be finite and >= 0")));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(StochasticError::InvalidPayload(format!("sigma {sigma} must be finite and >= 0")));
    }
    Ok(())
}

impl PayloadDistribution {
    pub fn explicit(mean: f64, sigma_total: f64) -> Result<Self, StochasticError> {
        check(mean, sigma_total)?;
        Ok(Self { mean, sigma_total, per_passenger_sigma: None, n_passengers: None, mode: PayloadMode::ExplicitSigma })
    }

    /// A payload known exactly.
    pub fn fixed(mean: f64) -> Result<Self, StochasticError> {
        Self::explicit(mean, 0.0)
    }

    pub fn from_passengers(mean: f64, per_passenger_sigma: f64, n_passengers: u32) -> Result<Self, StochasticError> {
        check(mean, per_passenger_sigma)?;
        Ok(Self {
            mean,
            sigma_total: payload_sigma(per_passenger_sigma, n_passengers),
            per_passenger_sigma: Some(per_passenger_sigma),
            n_passengers: Some(n_passengers),
            mode: PayloadMode::DerivedFromPassengers,
        })
    }

    /// σ_P = `fraction` × mean, 5% when `fraction` is `None`.
    pub fn fraction_of_mean(mean: f64, fraction: Option<f64>) -> Result<Self, StochasticError> {
        let f = fraction.unwrap_or(DEFAULT_SIGMA_FRACTION);
        check(mean, f)?;
        Ok(Self { mean, sigma_total: f * mean, per_passenger_sigma: None, n_passengers: None, mode: PayloadMode::FractionOfMean })
    }

    /// Re-checks the invariants of a deserialized value.
    pub fn validate(&self) -> Result<(), StochasticError> {
        check(self.mean, self.sigma_total)?;
        if self.mode == PayloadMode::DerivedFromPassengers {
            let (Some(s), Some(n)) = (self.per_passenger_sigma, self.n_passengers) else {
                return Err(StochasticError::InvalidPayload("derived mode needs per_passenger_sigma and n_passengers".into()));
            };
            let expected = payload_sigma(s, n);
            if (expected - self.sigma_total).abs() > 1e-9 * expected.max(1.0) {
                return Err(StochasticError::InvalidPayload(format!(
                    "sigma_total {} does not match passengers ({expected})",
                    self.sigma_total
                )));
            }
        }
        Ok(())
    }

    pub fn representatives(&self, k: usize) -> Result<Vec<f64>, StochasticError> {
        payload_representatives(self, k)
    }

    /// One random draw, truncated at zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sigma_total == 0.0 {
            return self.mean;
        }
        Normal::new(self.mean, self.sigma_total).map(|d| d.sample(rng)).unwrap_or(self.mean).max(0.0)
    }
}

/// `k` equiprobable payload values: the normal quantiles at the stratum
/// midpoints (2m − 1) / 2k, ascending. The lower half is mirrored onto the
/// upper half so the set is exactly symmetric about the mean.
pub fn payload_representatives(dist: &PayloadDistribution, k: usize) -> Result<Vec<f64>, StochasticError> {
    if k == 0 {
        return Err(StochasticError::InvalidPayload("k must be >= 1".into()));
    }
    let unit = StdNormal::standard();
    let z: Vec<f64> = (1..=k)
        .map(|m| {
            let mirror = k + 1 - m;
            if m == mirror {
                0.0
            } else if m < mirror {
                unit.inverse_cdf((2 * m - 1) as f64 / (2 * k) as f64)
            } else {
                -unit.inverse_cdf((2 * mirror - 1) as f64 / (2 * k) as f64)
            }
        })
        .collect();
    Ok(z.into_iter().map(|z| dist.mean + dist.sigma_total * z).collect())
}
