use std::fmt;

use serde::{Deserialize, Serialize};

use super::WeatherError;

/// Wind speed bound used by the grid invariants, m/s.
pub const MAX_WIND_MS: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Lat,
    Lon,
    Level,
    Time,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Axis::Lat => "lat",
            Axis::Lon => "lon",
            Axis::Level => "level",
            Axis::Time => "time",
        };
        f.write_str(name)
    }
}

/// Interpolated weather at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindTemp {
    /// Eastward wind, m/s.
    pub u: f64,
    /// Northward wind, m/s.
    pub v: f64,
    /// Kelvin.
    pub temperature: f64,
}

/// Coordinate axes of a 4-D grid.
///
/// Latitude, longitude and time ascend. Pressure levels descend, so the level
/// index grows with altitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxes {
    pub lat: Vec<f64>,
    pub lon: Vec<f64>,
    /// Pressure levels, hPa.
    pub level: Vec<f64>,
    /// Hours from issuance.
    pub time: Vec<f64>,
}

/// Ten isobaric levels spanning the cruise band, hPa.
pub const DEFAULT_LEVELS_HPA: [f64; 10] =
    [500.0, 400.0, 350.0, 300.0, 275.0, 250.0, 225.0, 200.0, 175.0, 150.0];

fn regular(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

impl GridAxes {
    /// 1-degree box with the default pressure levels and a 6-hour cadence.
    pub fn regular_box(lat: (f64, f64), lon: (f64, f64), horizon_h: f64) -> Self {
        Self {
            lat: regular(lat.0, lat.1, 1.0),
            lon: regular(lon.0, lon.1, 1.0),
            level: DEFAULT_LEVELS_HPA.to_vec(),
            time: regular(0.0, horizon_h, 6.0),
        }
    }

    pub fn shape(&self) -> [usize; 4] {
        [self.lat.len(), self.lon.len(), self.level.len(), self.time.len()]
    }

    pub fn n_points(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn get(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::Lat => &self.lat,
            Axis::Lon => &self.lon,
            Axis::Level => &self.level,
            Axis::Time => &self.time,
        }
    }

    pub fn validate(&self) -> Result<(), WeatherError> {
        for axis in [Axis::Lat, Axis::Lon, Axis::Level, Axis::Time] {
            let values = self.get(axis);
            if values.is_empty() {
                return Err(WeatherError::InvalidAxes(format!("{axis} axis is empty")));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(WeatherError::InvalidAxes(format!("{axis} axis has non-finite values")));
            }
            let ordered = if axis == Axis::Level {
                values.windows(2).all(|w| w[1] < w[0])
            } else {
                values.windows(2).all(|w| w[1] > w[0])
            };
            if !ordered {
                return Err(WeatherError::InvalidAxes(format!("{axis} axis is not strictly monotone")));
            }
        }
        if self.level.len() < 2 {
            return Err(WeatherError::InvalidAxes("level axis needs at least 2 levels".into()));
        }
        if self.level.iter().any(|&p| p <= 0.0) {
            return Err(WeatherError::InvalidAxes("pressure levels must be positive".into()));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn index(&self, ilat: usize, ilon: usize, ilev: usize, it: usize) -> usize {
        let [_, nlon, nlev, nt] = self.shape();
        ((ilat * nlon + ilon) * nlev + ilev) * nt + it
    }

    /// Interpolation stencil along one axis: one node with weight 1, or two
    /// bracketing nodes.
    fn bracket(&self, axis: Axis, x: f64) -> Result<Stencil, WeatherError> {
        let values = self.get(axis);
        let descending = axis == Axis::Level;
        let out = || WeatherError::OutOfDomain { axis, value: x };
        if !x.is_finite() {
            return Err(out());
        }
        let (lo, hi) = if descending {
            (values[values.len() - 1], values[0])
        } else {
            (values[0], values[values.len() - 1])
        };
        if x < lo || x > hi {
            return Err(out());
        }
        if values.len() == 1 {
            return Ok(Stencil::Node(0));
        }
        // first index whose value lies beyond x in axis order
        let past = if descending {
            values.partition_point(|&a| a >= x)
        } else {
            values.partition_point(|&a| a <= x)
        };
        let i = past.saturating_sub(1).min(values.len() - 2);
        if values[i] == x {
            return Ok(Stencil::Node(i));
        }
        if values[i + 1] == x {
            return Ok(Stencil::Node(i + 1));
        }
        let frac = (x - values[i]) / (values[i + 1] - values[i]);
        Ok(Stencil::Span(i, frac))
    }
}

#[derive(Debug, Clone, Copy)]
enum Stencil {
    Node(usize),
    Span(usize, f64),
}

impl Stencil {
    fn terms(self) -> ([(usize, f64); 2], usize) {
        match self {
            Stencil::Node(i) => ([(i, 1.0), (i, 0.0)], 1),
            Stencil::Span(i, f) => ([(i, 1.0 - f), (i + 1, f)], 2),
        }
    }
}

/// Gridded u/v wind and temperature over (lat, lon, level, time).
///
/// Arrays are stored flat, lat-major then lon, level, time. Immutable once
/// constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherGrid {
    axes: GridAxes,
    u_wind: Vec<f64>,
    v_wind: Vec<f64>,
    temperature: Vec<f64>,
}

impl WeatherGrid {
    pub fn new(
        axes: GridAxes,
        u_wind: Vec<f64>,
        v_wind: Vec<f64>,
        temperature: Vec<f64>,
    ) -> Result<Self, WeatherError> {
        axes.validate()?;
        let n = axes.n_points();
        for (field, len) in [("u_wind", u_wind.len()), ("v_wind", v_wind.len()), ("temperature", temperature.len())] {
            if len != n {
                return Err(WeatherError::ShapeMismatch { field, expected: n, actual: len });
            }
        }
        if let Some(w) = u_wind.iter().chain(&v_wind).find(|w| !(w.abs() < MAX_WIND_MS)) {
            return Err(WeatherError::InvalidValue(format!(
                "wind component {w} outside (-{MAX_WIND_MS}, {MAX_WIND_MS}) m/s"
            )));
        }
        if let Some(t) = temperature.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(WeatherError::InvalidValue(format!("temperature {t} K is not positive")));
        }
        Ok(Self { axes, u_wind, v_wind, temperature })
    }

    /// Grid with the same value at every node.
    pub fn uniform(axes: GridAxes, value: WindTemp) -> Result<Self, WeatherError> {
        let n = axes.n_points();
        Self::new(axes, vec![value.u; n], vec![value.v; n], vec![value.temperature; n])
    }

    /// Builds a grid by evaluating `f(lat, lon, pressure, hour)` at every node.
    pub fn from_fn(
        axes: GridAxes,
        mut f: impl FnMut(f64, f64, f64, f64) -> WindTemp,
    ) -> Result<Self, WeatherError> {
        let n = axes.n_points();
        let (mut u, mut v, mut t) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for &lat in &axes.lat {
            for &lon in &axes.lon {
                for &p in &axes.level {
                    for &h in &axes.time {
                        let w = f(lat, lon, p, h);
                        u.push(w.u);
                        v.push(w.v);
                        t.push(w.temperature);
                    }
                }
            }
        }
        Self::new(axes, u, v, t)
    }

    pub fn axes(&self) -> &GridAxes {
        &self.axes
    }

    pub fn u_wind(&self) -> &[f64] {
        &self.u_wind
    }

    pub fn v_wind(&self) -> &[f64] {
        &self.v_wind
    }

    pub fn temperature(&self) -> &[f64] {
        &self.temperature
    }

    pub fn node(&self, ilat: usize, ilon: usize, ilev: usize, it: usize) -> WindTemp {
        let i = self.axes.index(ilat, ilon, ilev, it);
        WindTemp { u: self.u_wind[i], v: self.v_wind[i], temperature: self.temperature[i] }
    }

    pub(crate) fn into_parts(self) -> (GridAxes, Vec<f64>, Vec<f64>, Vec<f64>) {
        (self.axes, self.u_wind, self.v_wind, self.temperature)
    }

    /// Quadrilinear interpolation. Queries outside any axis range are errors,
    /// never clamped. Node queries return stored values bit-for-bit.
    pub fn sample_at(&self, lat: f64, lon: f64, pressure_hpa: f64, hour: f64) -> Result<WindTemp, WeatherError> {
        let (a, na) = self.axes.bracket(Axis::Lat, lat)?.terms();
        let (b, nb) = self.axes.bracket(Axis::Lon, lon)?.terms();
        let (c, nc) = self.axes.bracket(Axis::Level, pressure_hpa)?.terms();
        let (d, nd) = self.axes.bracket(Axis::Time, hour)?.terms();

        let mut acc: Option<WindTemp> = None;
        for &(i, wi) in &a[..na] {
            for &(j, wj) in &b[..nb] {
                for &(k, wk) in &c[..nc] {
                    for &(l, wl) in &d[..nd] {
                        let w = wi * wj * wk * wl;
                        let idx = self.axes.index(i, j, k, l);
                        let term = WindTemp {
                            u: self.u_wind[idx] * w,
                            v: self.v_wind[idx] * w,
                            temperature: self.temperature[idx] * w,
                        };
                        acc = Some(match acc {
                            None => term,
                            Some(s) => WindTemp {
                                u: s.u + term.u,
                                v: s.v + term.v,
                                temperature: s.temperature + term.temperature,
                            },
                        });
                    }
                }
            }
        }
        Ok(acc.expect("stencil has at least one node"))
    }
}

/// Free-function form of [`WeatherGrid::sample_at`].
pub fn sample_at(grid: &WeatherGrid, lat: f64, lon: f64, pressure_hpa: f64, hour: f64) -> Result<WindTemp, WeatherError> {
    grid.sample_at(lat, lon, pressure_hpa, hour)
}
