use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{predict, train, CostSample, PredictError, RegressorSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVEntry {
    pub label: String,
    pub spec: RegressorSpec,
    pub mae: f64,
    pub rmse: f64,
    pub fold_mae: Vec<f64>,
    /// Out-of-fold prediction per sample, dataset order.
    pub predictions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVReport {
    pub n_samples: usize,
    pub folds: usize,
    pub seed: u64,
    /// Test fold of each sample.
    pub fold_of: Vec<usize>,
    /// Sorted by ascending MAE; ties keep the input order.
    pub entries: Vec<CVEntry>,
}

/// Test fold of each of `n` samples: a seeded shuffle dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    fold_of
}

pub fn cross_validate(dataset: &[CostSample], specs: &[RegressorSpec], folds: usize, seed: u64) -> Result<CVReport, PredictError> {
    let n = dataset.len();
    if folds < 2 || n < folds {
        return Err(PredictError::TooFewSamples { needed: folds.max(2), got: n });
    }
    let fold_of = fold_assignment(n, folds, seed);
    // (spec, fold) jobs -> predictions for that fold's test rows
    let jobs: Vec<(usize, usize)> = (0..specs.len()).flat_map(|s| (0..folds).map(move |f| (s, f))).collect();
    let results: Vec<Result<Vec<(usize, f64)>, PredictError>> = jobs
        .par_iter()
        .map(|&(s, f)| {
            let train_set: Vec<CostSample> = dataset.iter().zip(&fold_of).filter(|(_, &k)| k != f).map(|(d, _)| d.clone()).collect();
            let model = train(&specs[s], &train_set)?;
            dataset
                .iter()
                .enumerate()
                .filter(|(i, _)| fold_of[*i] == f)
                .map(|(i, d)| predict(&model, d).map(|p| (i, p)))
                .collect()
        })
        .collect();
    let mut predictions = vec![vec![0.0; n]; specs.len()];
    let mut fold_abs = vec![vec![(0.0, 0usize); folds]; specs.len()];
    for (&(s, f), r) in jobs.iter().zip(results) {
        for (i, p) in r? {
            predictions[s][i] = p;
            fold_abs[s][f].0 += (p - dataset[i].c_actual).abs();
            fold_abs[s][f].1 += 1;
        }
    }
    let mut entries: Vec<CVEntry> = specs
        .iter()
        .zip(predictions)
        .zip(fold_abs)
        .map(|((spec, preds), fa)| {
            let errs: Vec<f64> = preds.iter().zip(dataset).map(|(p, d)| p - d.c_actual).collect();
            CVEntry {
                label: spec.label(),
                spec: spec.clone(),
                mae: errs.iter().map(|e| e.abs()).sum::<f64>() / n as f64,
                rmse: (errs.iter().map(|e| e * e).sum::<f64>() / n as f64).sqrt(),
                fold_mae: fa.iter().map(|(s, c)| s / *c as f64).collect(),
                predictions: preds,
            }
        })
        .collect();
    entries.sort_by(|a, b| a.mae.total_cmp(&b.mae));
    Ok(CVReport { n_samples: n, folds, seed, fold_of, entries })
}

impl CVReport {
    pub fn table(&self) -> String {
        let mut s = format!("{}-fold cross-validation, {} samples, seed {}\n", self.folds, self.n_samples, self.seed);
        let _ = writeln!(s, "{:<52} {:>10} {:>10}", "regressor", "MAE kg", "RMSE kg");
        for e in &self.entries {
            let _ = writeln!(s, "{:<52} {:>10.2} {:>10.2}", e.label, e.mae, e.rmse);
        }
        s
    }

    pub fn entry(&self, label: &str) -> Option<&CVEntry> {
        self.entries.iter().find(|e| e.label == label)
    }
}
