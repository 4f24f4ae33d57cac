//! Synthetic ensemble generator: a meandering zonal jet plus smooth,
//! correlated Gaussian perturbations.

use chrono::{DateTime, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EnsembleForecast, GridAxes, WeatherError, WeatherGrid, WindTemp};

/// Smooth zonal jet: Gaussian in latitude and pressure, optional meander.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JetSpec {
    /// Peak core speed, m/s.
    pub peak_ms: f64,
    pub center_lat: f64,
    /// Gaussian half-width in latitude, degrees.
    pub lat_width_deg: f64,
    pub core_pressure_hpa: f64,
    pub pressure_width_hpa: f64,
    /// Uniform westerly added everywhere, m/s.
    pub background_ms: f64,
    pub meander_amplitude_deg: f64,
    pub meander_wavelength_deg: f64,
    /// Longitude of a meander zero crossing at hour 0, degrees.
    pub meander_phase_deg: f64,
    /// Eastward drift of the meander pattern, degrees of longitude per hour.
    pub meander_phase_speed_deg_h: f64,
}

impl Default for JetSpec {
    fn default() -> Self {
        Self {
            peak_ms: 55.0,
            center_lat: 45.0,
            lat_width_deg: 5.0,
            core_pressure_hpa: 250.0,
            pressure_width_hpa: 120.0,
            background_ms: 8.0,
            meander_amplitude_deg: 3.0,
            meander_wavelength_deg: 40.0,
            meander_phase_deg: 0.0,
            meander_phase_speed_deg_h: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticWeatherSpec {
    pub base_jet: JetSpec,
    /// Pointwise std of member-minus-control wind components, m/s.
    pub perturbation_sigma: f64,
    /// Horizontal smoothing scale of the noise, degrees.
    pub correlation_length_deg: f64,
    pub correlation_time_h: f64,
    /// Vertical smoothing scale, in level-index units.
    pub correlation_levels: f64,
    /// Pointwise std of the nowcast's own noise, m/s.
    pub nowcast_sigma: f64,
    /// Temperature perturbation std, K. Temperature is carried through but
    /// does not affect performance.
    pub temperature_sigma: f64,
    pub n_members: usize,
    pub issuance_time: DateTime<Utc>,
    pub seed: u64,
}

impl Default for SyntheticWeatherSpec {
    fn default() -> Self {
        Self {
            base_jet: JetSpec::default(),
            perturbation_sigma: 8.0,
            correlation_length_deg: 5.0,
            correlation_time_h: 12.0,
            correlation_levels: 3.0,
            nowcast_sigma: 8.0,
            temperature_sigma: 0.5,
            n_members: 20,
            issuance_time: Utc.with_ymd_and_hms(2020, 1, 15, 0, 0, 0).unwrap(),
            seed: 0,
        }
    }
}

impl SyntheticWeatherSpec {
    pub fn validate(&self) -> Result<(), WeatherError> {
        let bad = |msg: &str| Err(WeatherError::InvalidSpec(msg.to_string()));
        let sigmas = [self.perturbation_sigma, self.nowcast_sigma, self.temperature_sigma];
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("sigmas must be finite and >= 0");
        }
        let lengths = [self.correlation_length_deg, self.correlation_time_h, self.correlation_levels];
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return bad("correlation lengths must be > 0");
        }
        let jet = &self.base_jet;
        if !(jet.lat_width_deg > 0.0 && jet.pressure_width_hpa > 0.0 && jet.meander_wavelength_deg > 0.0) {
            return bad("jet widths and meander wavelength must be > 0");
        }
        if ![jet.peak_ms, jet.center_lat, jet.core_pressure_hpa, jet.background_ms, jet.meander_amplitude_deg,
            jet.meander_phase_speed_deg_h, jet.meander_phase_deg]
            .iter()
            .all(|v| v.is_finite())
        {
            return bad("jet parameters must be finite");
        }
        Ok(())
    }
}

/// International standard atmosphere temperature at a pressure level, K.
pub fn isa_temperature(pressure_hpa: f64) -> f64 {
    (288.15 * (pressure_hpa / 1013.25).powf(0.190_263)).max(216.65)
}

/// The unperturbed base field evaluated at one point.
pub fn base_field(jet: &JetSpec, lat: f64, lon: f64, pressure_hpa: f64, hour: f64) -> WindTemp {
    let k = std::f64::consts::TAU / jet.meander_wavelength_deg;
    let phase = k * (lon - jet.meander_phase_deg - jet.meander_phase_speed_deg_h * hour);
    let center = jet.center_lat + jet.meander_amplitude_deg * phase.sin();
    let slope = jet.meander_amplitude_deg * k * phase.cos();
    let across = (lat - center) / jet.lat_width_deg;
    let vertical = (pressure_hpa - jet.core_pressure_hpa) / jet.pressure_width_hpa;
    let jet_speed = jet.peak_ms * (-0.5 * across * across).exp() * (-0.5 * vertical * vertical).exp();
    WindTemp {
        u: jet.background_ms + jet_speed,
        // flow follows the meander axis
        v: jet_speed * slope,
        temperature: isa_temperature(pressure_hpa),
    }
}

/// Per-axis smoothing operator. Row `j` holds (source index, weight) pairs
/// whose squared weights sum to 1, so unit-variance white noise stays unit
/// variance pointwise after each separable pass.
struct Smoother {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Smoother {
    fn new(coords: &[f64], scale: f64) -> Self {
        let rows = coords
            .iter()
            .map(|&c| {
                let mut row: Vec<(usize, f64)> = coords
                    .iter()
                    .enumerate()
                    .filter_map(|(k, &ck)| {
                        let d = (ck - c) / scale;
                        (d.abs() <= 3.0).then(|| (k, (-0.5 * d * d).exp()))
                    })
                    .collect();
                let norm = row.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
                row.iter_mut().for_each(|(_, w)| *w /= norm);
                row
            })
            .collect();
        Self { rows }
    }

    /// Smooths `data` along an axis of length `rows.len()` with the given stride.
    fn apply(&self, data: &[f64], stride: usize) -> Vec<f64> {
        let n = self.rows.len();
        let block = n * stride;
        let mut out = vec![0.0; data.len()];
        for base in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let start = base + inner;
                for (j, row) in self.rows.iter().enumerate() {
                    out[start + j * stride] = row.iter().map(|&(k, w)| w * data[start + k * stride]).sum();
                }
            }
        }
        out
    }
}

struct NoiseModel {
    smoothers: [Smoother; 4],
    strides: [usize; 4],
    n: usize,
}

impl NoiseModel {
    fn new(spec: &SyntheticWeatherSpec, axes: &GridAxes) -> Self {
        let [_, nlon, nlev, nt] = axes.shape();
        let level_index: Vec<f64> = (0..nlev).map(|i| i as f64).collect();
        Self {
            smoothers: [
                Smoother::new(&axes.lat, spec.correlation_length_deg),
                Smoother::new(&axes.lon, spec.correlation_length_deg),
                Smoother::new(&level_index, spec.correlation_levels),
                Smoother::new(&axes.time, spec.correlation_time_h),
            ],
            strides: [nlon * nlev * nt, nlev * nt, nt, 1],
            n: axes.n_points(),
        }
    }

    /// Smooth, pointwise unit-variance Gaussian field.
    fn field(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut data: Vec<f64> = (0..self.n).map(|_| StandardNormal.sample(rng)).collect();
        for (smoother, &stride) in self.smoothers.iter().zip(&self.strides) {
            data = smoother.apply(&data, stride);
        }
        data
    }

    fn perturb(&self, base: &WeatherGrid, sigma: f64, temp_sigma: f64, rng: &mut ChaCha8Rng) -> Result<WeatherGrid, WeatherError> {
        let (axes, mut u, mut v, mut t) = base.clone().into_parts();
        if sigma > 0.0 {
            let nu = self.field(rng);
            let nv = self.field(rng);
            u.iter_mut().zip(&nu).for_each(|(x, n)| *x += sigma * n);
            v.iter_mut().zip(&nv).for_each(|(x, n)| *x += sigma * n);
        }
        if temp_sigma > 0.0 {
            let nt = self.field(rng);
            t.iter_mut().zip(&nt).for_each(|(x, n)| *x += temp_sigma * n);
        }
        WeatherGrid::new(axes, u, v, t).map_err(|e| WeatherError::InvalidSpec(format!("generated field violates grid invariants: {e}")))
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The deterministic base field on `axes`.
pub fn base_grid(spec: &SyntheticWeatherSpec, axes: &GridAxes) -> Result<WeatherGrid, WeatherError> {
    spec.validate()?;
    WeatherGrid::from_fn(axes.clone(), |lat, lon, p, h| base_field(&spec.base_jet, lat, lon, p, h))
}

/// Generates the ensemble (control plus `n_members` perturbed members) and an
/// independent nowcast. Identical inputs give bit-identical output.
///
/// Member `m` draws from random stream `m + 1`, the nowcast from stream 0, so
/// generation order does not matter.
pub fn generate_ensemble(spec: &SyntheticWeatherSpec, axes: &GridAxes) -> Result<(EnsembleForecast, WeatherGrid), WeatherError> {
    spec.validate()?;
    axes.validate()?;
    let control = base_grid(spec, axes)?;
    let noise = NoiseModel::new(spec, axes);
    let members = (0..spec.n_members)
        .into_par_iter()
        .map(|m| {
            let mut rng = stream_rng(spec.seed, m as u64 + 1);
            noise.perturb(&control, spec.perturbation_sigma, spec.temperature_sigma, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let nowcast = {
        let mut rng = stream_rng(spec.seed, 0);
        let t_sigma = if spec.nowcast_sigma > 0.0 { spec.temperature_sigma } else { 0.0 };
        noise.perturb(&control, spec.nowcast_sigma, t_sigma, &mut rng)?
    };
    let ensemble = EnsembleForecast::new(control, members, spec.issuance_time)?;
    Ok((ensemble, nowcast))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes() -> GridAxes {
        GridAxes::regular_box((40.0, 50.0), (-20.0, -10.0), 12.0)
    }

    #[test]
    fn zero_perturbation_members_equal_control() {
        let spec = SyntheticWeatherSpec { perturbation_sigma: 0.0, temperature_sigma: 0.0, n_members: 4, ..Default::default() };
        let (ens, _) = generate_ensemble(&spec, &axes()).unwrap();
        assert_eq!(ens.members().len(), 4);
        for m in ens.members() {
            assert_eq!(m, ens.control());
        }
    }

    #[test]
    fn zero_nowcast_sigma_reproduces_control() {
        let spec = SyntheticWeatherSpec { nowcast_sigma: 0.0, n_members: 2, ..Default::default() };
        let (ens, nowcast) = generate_ensemble(&spec, &axes()).unwrap();
        assert_eq!(&nowcast, ens.control());
    }

    #[test]
    fn same_seed_same_ensemble() {
        let spec = SyntheticWeatherSpec { n_members: 3, seed: 42, ..Default::default() };
        let a = generate_ensemble(&spec, &axes()).unwrap();
        let b = generate_ensemble(&spec, &axes()).unwrap();
        assert_eq!(a, b);
        let c = generate_ensemble(&SyntheticWeatherSpec { seed: 43, ..spec }, &axes()).unwrap();
        assert_ne!(a.0.members()[0], c.0.members()[0]);
    }

    #[test]
    fn invalid_spec_rejected() {
        let spec = SyntheticWeatherSpec { perturbation_sigma: -1.0, ..Default::default() };
        assert!(matches!(generate_ensemble(&spec, &axes()), Err(WeatherError::InvalidSpec(_))));
        let spec = SyntheticWeatherSpec { correlation_length_deg: 0.0, ..Default::default() };
        assert!(matches!(generate_ensemble(&spec, &axes()), Err(WeatherError::InvalidSpec(_))));
    }

    #[test]
    fn smoother_rows_have_unit_energy() {
        let coords: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let s = Smoother::new(&coords, 4.0);
        for row in &s.rows {
            let e: f64 = row.iter().map(|(_, w)| w * w).sum();
            assert!((e - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn member_spread_matches_sigma() {
        let spec = SyntheticWeatherSpec { perturbation_sigma: 5.0, n_members: 20, seed: 9, ..Default::default() };
        let axes = GridAxes::regular_box((30.0, 60.0), (-60.0, -10.0), 24.0);
        let (ens, _) = generate_ensemble(&spec, &axes).unwrap();
        let control = ens.control();
        let mut sum_sq = 0.0;
        let mut n = 0usize;
        for m in ens.members() {
            for (a, b) in m.u_wind().iter().zip(control.u_wind()).step_by(7) {
                sum_sq += (a - b).powi(2);
                n += 1;
            }
        }
        assert!(n > 10_000);
        let std = (sum_sq / n as f64).sqrt();
        assert!((4.5..=5.5).contains(&std), "std {std}");
    }

    #[test]
    fn jet_core_is_fastest_at_core_pressure() {
        let jet = JetSpec { meander_amplitude_deg: 0.0, ..Default::default() };
        let core = base_field(&jet, 45.0, -30.0, 250.0, 0.0).u;
        assert!((core - (jet.peak_ms + jet.background_ms)).abs() < 1e-12);
        assert!(base_field(&jet, 50.0, -30.0, 250.0, 0.0).u < core);
        assert!(base_field(&jet, 45.0, -30.0, 350.0, 0.0).u < core);
    }
}
