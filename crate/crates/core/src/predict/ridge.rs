use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::PredictError;

/// Ridge regression on standardized features with an unpenalized intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
}

impl RidgeModel {
    pub fn fit(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<Self, PredictError> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(PredictError::InvalidSpec(format!("lambda {lambda} must be finite and >= 0")));
        }
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(PredictError::TooFewSamples { needed: 2, got: n.min(y.len()) });
        }
        let p = x[0].len();
        if let Some(bad) = x.iter().find(|r| r.len() != p) {
            return Err(PredictError::DimensionMismatch { expected: p, got: bad.len() });
        }
        let mut feature_mean = vec![0.0; p];
        let mut feature_scale = vec![1.0; p];
        for j in 0..p {
            let m = x.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            let var = x.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n as f64;
            feature_mean[j] = m;
            if var > 0.0 {
                feature_scale[j] = var.sqrt();
            }
        }
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let z = DMatrix::from_fn(n, p, |i, j| (x[i][j] - feature_mean[j]) / feature_scale[j]);
        let t = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
        let mut gram = z.transpose() * &z;
        for j in 0..p {
            gram[(j, j)] += lambda;
        }
        let rhs = z.transpose() * t;
        let w = gram
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| PredictError::InvalidSpec(format!("ridge solve failed: {e}")))?;
        Ok(Self { feature_mean, feature_scale, weights: w.iter().copied().collect(), intercept: y_mean, lambda })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, PredictError> {
        if x.len() != self.weights.len() {
            return Err(PredictError::DimensionMismatch { expected: self.weights.len(), got: x.len() });
        }
        Ok(self.intercept
            + x.iter()
                .zip(&self.weights)
                .enumerate()
                .map(|(j, (v, w))| w * (v - self.feature_mean[j]) / self.feature_scale[j])
                .sum::<f64>())
    }

    /// Weights in original feature units.
    pub fn raw_slopes(&self) -> Vec<f64> {
        self.weights.iter().zip(&self.feature_scale).map(|(w, s)| w / s).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_fit() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.7 + 3.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0]).collect();
        let m = RidgeModel::fit(&x, &y, 1e-12).unwrap();
        assert!((m.raw_slopes()[0] - 2.0).abs() < 1e-6);
        assert!((m.predict(&[100.0]).unwrap() - 200.0).abs() < 1e-4);
    }

    #[test]
    fn shrinkage_with_lambda() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let small = RidgeModel::fit(&x, &y, 0.0).unwrap().raw_slopes()[0];
        let big = RidgeModel::fit(&x, &y, 100.0).unwrap().raw_slopes()[0];
        assert!((small - 1.0).abs() < 1e-10);
        assert!(big < small && big > 0.0);
    }

    #[test]
    fn constant_feature_is_harmless() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![5.0, i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| 3.0 * i as f64 + 1.0).collect();
        let m = RidgeModel::fit(&x, &y, 0.0).unwrap();
        assert!((m.predict(&[5.0, 4.0]).unwrap() - 13.0).abs() < 1e-9);
        assert!(m.predict(&[1.0]).is_err());
    }
}
