//! `WGRD1` grid container and the ensemble manifest sidecar.
//!
//! Layout (all multi-byte values little-endian):
//!
//! ```text
//! b"WGRD"  u8 version=1
//! u32 n_lat, u32 n_lon, u32 n_level, u32 n_time
//! f64 lat[n_lat], lon[n_lon], level[n_level], time[n_time]
//! f64 u_wind[N], v_wind[N], temperature[N]      N = n_lat*n_lon*n_level*n_time
//! ```
//!
//! Arrays are lat-major, then lon, level, time.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{EnsembleForecast, GridAxes, WeatherError, WeatherGrid};

pub const MAGIC: &[u8; 4] = b"WGRD";
pub const VERSION: u8 = 1;

pub fn encode(grid: &WeatherGrid) -> Vec<u8> {
    let axes = grid.axes();
    let n = axes.n_points();
    let n_axis: usize = axes.shape().iter().sum();
    let mut buf = Vec::with_capacity(5 + 16 + 8 * (n_axis + 3 * n));
    buf.extend_from_slice(MAGIC);
    buf.push(VERSION);
    for len in axes.shape() {
        buf.extend_from_slice(&(len as u32).to_le_bytes());
    }
    let arrays: [&[f64]; 7] = [&axes.lat, &axes.lon, &axes.level, &axes.time, grid.u_wind(), grid.v_wind(), grid.temperature()];
    for values in arrays {
        for v in values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl Reader<'_> {
    fn fail(&self, reason: impl Into<String>) -> WeatherError {
        WeatherError::Format { offset: self.offset, reason: reason.into() }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&[u8], WeatherError> {
        if self.bytes.len() - self.offset < n {
            return Err(self.fail(format!(
                "truncated {what}: need {n} bytes, {} available",
                self.bytes.len() - self.offset
            )));
        }
        let s = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, WeatherError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64s(&mut self, count: usize, what: &str) -> Result<Vec<f64>, WeatherError> {
        let raw = self.take(count.checked_mul(8).ok_or_else(|| self.fail(format!("{what} length overflows")))?, what)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn decode(bytes: &[u8]) -> Result<WeatherGrid, WeatherError> {
    let mut r = Reader { bytes, offset: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(WeatherError::Format { offset: 0, reason: "bad magic, expected WGRD".into() });
    }
    let version = r.take(1, "version")?[0];
    if version != VERSION {
        return Err(WeatherError::Format { offset: 4, reason: format!("unsupported version {version}") });
    }
    let mut shape = [0usize; 4];
    for (slot, name) in shape.iter_mut().zip(["n_lat", "n_lon", "n_level", "n_time"]) {
        *slot = r.u32(name)? as usize;
    }
    let axes = GridAxes {
        lat: r.f64s(shape[0], "lat axis")?,
        lon: r.f64s(shape[1], "lon axis")?,
        level: r.f64s(shape[2], "level axis")?,
        time: r.f64s(shape[3], "time axis")?,
    };
    let n = shape.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s)).ok_or_else(|| r.fail("grid size overflows"))?;
    let remaining = (bytes.len() - r.offset) / 8;
    let u_wind = r.f64s(n, &format!("u_wind array (declared {n} values, {} present)", remaining.min(n)))?;
    let remaining = (bytes.len() - r.offset) / 8;
    let v_wind = r.f64s(n, &format!("v_wind array (declared {n} values, {} present)", remaining.min(n)))?;
    let remaining = (bytes.len() - r.offset) / 8;
    let temperature = r.f64s(n, &format!("temperature array (declared {n} values, {} present)", remaining.min(n)))?;
    if r.offset != bytes.len() {
        return Err(r.fail(format!(
            "temperature array: {} trailing bytes beyond declared length",
            bytes.len() - r.offset
        )));
    }
    let offset = r.offset;
    WeatherGrid::new(axes, u_wind, v_wind, temperature)
        .map_err(|e| WeatherError::Format { offset, reason: e.to_string() })
}

pub fn save_grid(grid: &WeatherGrid, path: impl AsRef<Path>) -> Result<(), WeatherError> {
    fs::write(path, encode(grid))?;
    Ok(())
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<WeatherGrid, WeatherError> {
    decode(&fs::read(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridRole {
    Control,
    Member,
    Nowcast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub file: String,
    pub role: GridRole,
    pub member_index: Option<usize>,
}

/// JSON sidecar describing the grid files of one issuance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub format: String,
    pub issuance_time: DateTime<Utc>,
    pub n_members: usize,
    pub grids: Vec<GridEntry>,
}

pub const MANIFEST_FILE: &str = "ensemble.json";

/// Writes control, members and (optionally) the nowcast as `WGRD1` files plus
/// the manifest into `dir`. Returns the written file names.
pub fn save_ensemble(dir: &Path, ensemble: &EnsembleForecast, nowcast: Option<&WeatherGrid>) -> Result<Vec<String>, WeatherError> {
    fs::create_dir_all(dir)?;
    let mut grids = vec![GridEntry { file: "control.wgrd".into(), role: GridRole::Control, member_index: None }];
    save_grid(ensemble.control(), dir.join("control.wgrd"))?;
    for (i, m) in ensemble.members().iter().enumerate() {
        let file = format!("member_{:02}.wgrd", i + 1);
        save_grid(m, dir.join(&file))?;
        grids.push(GridEntry { file, role: GridRole::Member, member_index: Some(i + 1) });
    }
    if let Some(n) = nowcast {
        save_grid(n, dir.join("nowcast.wgrd"))?;
        grids.push(GridEntry { file: "nowcast.wgrd".into(), role: GridRole::Nowcast, member_index: None });
    }
    let manifest = EnsembleManifest {
        format: "WGRD1".into(),
        issuance_time: ensemble.issuance_time(),
        n_members: ensemble.n_members(),
        grids,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| WeatherError::Format { offset: 0, reason: e.to_string() })?;
    fs::write(dir.join(MANIFEST_FILE), json)?;
    let mut files: Vec<String> = manifest.grids.into_iter().map(|g| g.file).collect();
    files.push(MANIFEST_FILE.into());
    Ok(files)
}

/// Ingestion seam: anything that can hand the optimizer an ensemble.
pub trait EnsembleSource {
    fn load(&self) -> Result<(EnsembleForecast, Option<WeatherGrid>), WeatherError>;
}

/// Reads an ensemble written by [`save_ensemble`].
#[derive(Debug, Clone)]
pub struct WgrdDirectory(pub PathBuf);

impl EnsembleSource for WgrdDirectory {
    fn load(&self) -> Result<(EnsembleForecast, Option<WeatherGrid>), WeatherError> {
        let text = fs::read_to_string(self.0.join(MANIFEST_FILE))?;
        let manifest: EnsembleManifest =
            serde_json::from_str(&text).map_err(|e| WeatherError::Format { offset: 0, reason: format!("manifest: {e}") })?;
        let mut control = None;
        let mut members: Vec<(usize, WeatherGrid)> = Vec::new();
        let mut nowcast = None;
        for entry in &manifest.grids {
            let grid = load_grid(self.0.join(&entry.file))?;
            match entry.role {
                GridRole::Control => control = Some(grid),
                GridRole::Member => members.push((entry.member_index.unwrap_or(members.len() + 1), grid)),
                GridRole::Nowcast => nowcast = Some(grid),
            }
        }
        members.sort_by_key(|(i, _)| *i);
        let control = control.ok_or_else(|| WeatherError::Format { offset: 0, reason: "manifest lists no control grid".into() })?;
        let ensemble = EnsembleForecast::new(control, members.into_iter().map(|(_, g)| g).collect(), manifest.issuance_time)?;
        if ensemble.n_members() != manifest.n_members {
            return Err(WeatherError::Format { offset: 0, reason: "manifest n_members disagrees with listed grids".into() });
        }
        Ok((ensemble, nowcast))
    }
}
