//! Flight-cost prediction from deterministic and ensemble forecasts.
//!
//! A sample holds the cost actually incurred (`c_actual`, optimized under
//! the nowcast), the cost predicted by the control forecast (`c_det`) and
//! one cost per ensemble member. Regressors map a chosen input set to a
//! prediction of the actual cost and are compared by k-fold
//! cross-validation.

mod cv;
mod ridge;
mod trees;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cv::{cross_validate, fold_assignment, CVEntry, CVReport};
pub use ridge::RidgeModel;
pub use trees::{TreeEnsembleModel, TreeParams};

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("empty member vector")]
    EmptyVector,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("expected {expected} inputs, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid regressor spec: {0}")]
    InvalidSpec(String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSample {
    pub flight_id: String,
    pub c_actual: f64,
    pub c_det: f64,
    pub c_members: Vec<f64>,
}

/// Mean of the member costs.
pub fn baseline_ensemble_cost(c_members: &[f64]) -> Result<f64, PredictError> {
    crate::stats::mean(c_members).ok_or(PredictError::EmptyVector)
}

/// Errors of the two untrained predictors: (actual − deterministic,
/// actual − ensemble mean).
pub fn baseline_errors(sample: &CostSample) -> Result<(f64, f64), PredictError> {
    Ok((sample.c_actual - sample.c_det, sample.c_actual - baseline_ensemble_cost(&sample.c_members)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Inputs {
    D,
    S,
    #[serde(rename = "D+S")]
    DS,
}

impl std::fmt::Display for Inputs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Inputs::D => "D",
            Inputs::S => "S",
            Inputs::DS => "D+S",
        })
    }
}

impl Inputs {
    pub fn uses_members(self) -> bool {
        matches!(self, Inputs::S | Inputs::DS)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    MeanBaseline,
    LinearRidge {
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    TreeEnsemble {
        #[serde(default)]
        params: TreeParams,
    },
}

fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    pub inputs: Inputs,
    #[serde(flatten)]
    pub family: Family,
    #[serde(default)]
    pub seed: u64,
}

impl RegressorSpec {
    pub fn new(inputs: Inputs, family: Family) -> Self {
        Self { inputs, family, seed: 0 }
    }

    pub fn label(&self) -> String {
        let family = match &self.family {
            Family::MeanBaseline => "mean_baseline".to_string(),
            Family::LinearRidge { lambda } => format!("linear_ridge(lambda={lambda})"),
            Family::TreeEnsemble { params } => {
                format!("tree_ensemble(trees={}, depth={}, rate={})", params.n_trees, params.max_depth, params.learning_rate)
            }
        };
        format!("{family}[{}]", self.inputs)
    }

    /// The default comparison set: both baselines plus ridge and trees on
    /// each input set.
    pub fn default_set() -> Vec<Self> {
        let mut specs = vec![RegressorSpec::new(Inputs::D, Family::MeanBaseline), RegressorSpec::new(Inputs::S, Family::MeanBaseline)];
        for inputs in [Inputs::D, Inputs::S, Inputs::DS] {
            specs.push(RegressorSpec::new(inputs, Family::LinearRidge { lambda: default_lambda() }));
            specs.push(RegressorSpec::new(inputs, Family::TreeEnsemble { params: TreeParams::default() }));
        }
        specs
    }
}

/// Feature vector for an input set. Member costs are sorted, so members are
/// treated as exchangeable, and followed by their mean and standard
/// deviation.
pub fn features(sample: &CostSample, inputs: Inputs) -> Result<Vec<f64>, PredictError> {
    let mut x = Vec::new();
    if matches!(inputs, Inputs::D | Inputs::DS) {
        x.push(sample.c_det);
    }
    if inputs.uses_members() {
        if sample.c_members.is_empty() {
            return Err(PredictError::EmptyVector);
        }
        let mut m = sample.c_members.clone();
        m.sort_by(f64::total_cmp);
        let mean = baseline_ensemble_cost(&m)?;
        let std = crate::stats::sample_std(&m).unwrap_or(0.0);
        x.extend(m);
        x.push(mean);
        x.push(std);
    }
    Ok(x)
}

/// The untrained prediction for an input set: the deterministic cost for D,
/// the ensemble mean otherwise.
pub fn baseline_prediction(sample: &CostSample, inputs: Inputs) -> Result<f64, PredictError> {
    match inputs {
        Inputs::D => Ok(sample.c_det),
        Inputs::S | Inputs::DS => baseline_ensemble_cost(&sample.c_members),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Regressor {
    MeanBaseline { inputs: Inputs },
    Ridge { inputs: Inputs, model: RidgeModel },
    Trees { inputs: Inputs, model: TreeEnsembleModel },
}

fn check_members(samples: &[CostSample]) -> Result<usize, PredictError> {
    let n = samples.first().map_or(0, |s| s.c_members.len());
    for s in samples {
        if s.c_members.len() != n {
            return Err(PredictError::DimensionMismatch { expected: n, got: s.c_members.len() });
        }
    }
    Ok(n)
}

pub fn train(spec: &RegressorSpec, samples: &[CostSample]) -> Result<Regressor, PredictError> {
    if samples.len() < 2 {
        return Err(PredictError::TooFewSamples { needed: 2, got: samples.len() });
    }
    check_members(samples)?;
    let inputs = spec.inputs;
    let x = samples.iter().map(|s| features(s, inputs)).collect::<Result<Vec<_>, _>>()?;
    let y: Vec<f64> = samples.iter().map(|s| s.c_actual).collect();
    Ok(match &spec.family {
        Family::MeanBaseline => Regressor::MeanBaseline { inputs },
        Family::LinearRidge { lambda } => Regressor::Ridge { inputs, model: RidgeModel::fit(&x, &y, *lambda)? },
        Family::TreeEnsemble { params } => {
            let offset = samples.iter().map(|s| baseline_prediction(s, inputs)).collect::<Result<Vec<_>, _>>()?;
            Regressor::Trees { inputs, model: TreeEnsembleModel::fit(&x, &y, &offset, params, spec.seed)? }
        }
    })
}

pub fn predict(regressor: &Regressor, sample: &CostSample) -> Result<f64, PredictError> {
    match regressor {
        Regressor::MeanBaseline { inputs } => baseline_prediction(sample, *inputs),
        Regressor::Ridge { inputs, model } => model.predict(&features(sample, *inputs)?),
        Regressor::Trees { inputs, model } => {
            Ok(baseline_prediction(sample, *inputs)? + model.predict(&features(sample, *inputs)?)?)
        }
    }
}

/// Writes `flight_id,C_A,C_D,C_S1..C_SN`.
pub fn write_dataset<W: Write>(samples: &[CostSample], writer: W) -> Result<(), PredictError> {
    let n = check_members(samples)?;
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["flight_id".to_string(), "C_A".to_string(), "C_D".to_string()];
    header.extend((1..=n).map(|i| format!("C_S{i}")));
    w.write_record(&header)?;
    for s in samples {
        let mut rec = vec![s.flight_id.clone(), s.c_actual.to_string(), s.c_det.to_string()];
        rec.extend(s.c_members.iter().map(|c| c.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| PredictError::Dataset(e.to_string()))?;
    Ok(())
}

pub fn read_dataset<R: Read>(reader: R) -> Result<Vec<CostSample>, PredictError> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.len() < 4 || &header[0] != "flight_id" || &header[1] != "C_A" || &header[2] != "C_D" {
        return Err(PredictError::Dataset("header must be flight_id,C_A,C_D,C_S1..".into()));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, PredictError> {
            let v: f64 = rec[i].trim().parse().map_err(|_| PredictError::Dataset(format!("row {}: column {} is not a number", line + 1, &header[i])))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(PredictError::Dataset(format!("row {}: column {} must be a positive cost", line + 1, &header[i])));
            }
            Ok(v)
        };
        out.push(CostSample {
            flight_id: rec[0].to_string(),
            c_actual: num(1)?,
            c_det: num(2)?,
            c_members: (3..rec.len()).map(num).collect::<Result<_, _>>()?,
        });
    }
    Ok(out)
}
