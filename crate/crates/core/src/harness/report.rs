use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Equal-width density histogram. `densities` integrate to 1 over `edges`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub densities: Vec<f64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    /// Mean of the binned distribution (bin centres weighted by mass).
    pub fn mean(&self) -> f64 {
        let w = self.bin_width();
        self.edges.windows(2).zip(&self.densities).map(|(e, d)| 0.5 * (e[0] + e[1]) * d * w).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_start,bin_end,count,density\n");
        for (i, (c, d)) in self.counts.iter().zip(&self.densities).enumerate() {
            let _ = writeln!(out, "{},{},{},{}", self.edges[i], self.edges[i + 1], c, d);
        }
        out
    }
}

/// Density histogram with `n_bins` equal bins spanning the data. Identical
/// values (including a single value) give one bin of width 1 centred on it.
/// Returns `None` for empty or non-finite input.
pub fn savings_histogram(values: &[f64], n_bins: usize) -> Option<Histogram> {
    if values.is_empty() || n_bins == 0 || values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi, n_bins) = if hi > lo { (lo, hi, n_bins) } else { (lo - 0.5, lo + 0.5, 1) };
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| if i == n_bins { hi } else { lo + i as f64 * width }).collect();
    let mut counts = vec![0usize; n_bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let n = values.len() as f64;
    let densities = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    Some(Histogram { edges, counts, densities })
}

/// One decimal and a unit, e.g. `-33.3 kg`.
pub fn format_kg(value: f64) -> String {
    format!("{value:.1} kg")
}

/// Rounded to an integer with comma thousands separators, e.g. `56,448`.
pub fn thousands(value: f64) -> String {
    let rounded = value.round();
    let digits = format!("{:.0}", rounded.abs());
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    if rounded < 0.0 {
        format!("-{out}")
    } else {
        out
    }
}
