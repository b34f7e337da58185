use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ModelKind, TrainedModel};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateParams {
    pub n_samples: usize,
    pub kernel_width: f64,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        SurrogateParams {
            n_samples: 1000,
            kernel_width: 0.75,
        }
    }
}

/// Local linear approximation of `m` around `x`.
///
/// Draws `n_samples` points from an isotropic normal centred on `x` with
/// scale `kernel_width`, weights each by `exp(-|z - x|^2 / kernel_width^2)`,
/// and fits `m`'s decision value by weighted least squares.
pub fn fit_local_linear(
    m: &TrainedModel,
    x: &[f64],
    n_samples: usize,
    kernel_width: f64,
    seed: u64,
) -> Result<TrainedModel> {
    let d = x.len();
    if d != m.n_features() {
        return Err(Error::Dimension {
            expected: m.n_features(),
            got: d,
        });
    }
    if n_samples < 10 * d {
        return Err(Error::Argument(format!(
            "need at least {} samples for {d} features, got {n_samples}",
            10 * d
        )));
    }
    if !(kernel_width > 0.0 && kernel_width.is_finite()) {
        return Err(Error::Argument("kernel_width must be positive".into()));
    }

    let mut rng = seed::rng(seed);
    // design columns: intercept, then offsets from x
    let mut gram = DMatrix::<f64>::zeros(d + 1, d + 1);
    let mut rhs = DVector::<f64>::zeros(d + 1);
    let mut phi = DVector::<f64>::zeros(d + 1);
    let mut z = vec![0.0; d];
    let mut total_weight = 0.0;
    for _ in 0..n_samples {
        phi[0] = 1.0;
        let mut sq = 0.0;
        for j in 0..d {
            let off = kernel_width * rng.sample::<f64, _>(StandardNormal);
            z[j] = x[j] + off;
            phi[j + 1] = off;
            sq += off * off;
        }
        let w = (-sq / (kernel_width * kernel_width)).exp();
        let y = m.decision_value(&z)?;
        total_weight += w;
        gram.ger(w, &phi, &phi, 1.0);
        rhs.axpy(w * y, &phi, 1.0);
    }
    if total_weight.is_nan() || total_weight <= 0.0 {
        return Err(Error::Fit("all sample weights vanished".into()));
    }
    let beta = gram
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::Fit("weighted design is singular".into()))?;
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite coefficients".into()));
    }
    let w: Vec<f64> = beta.iter().skip(1).copied().collect();
    let b = beta[0] - w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
    TrainedModel::linear(ModelKind::LogisticRegression, m.schema().clone(), w, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    #[test]
    fn recovers_linear_target() {
        let m = TrainedModel::logistic(vec![1.0, 1.0], -0.3).unwrap();
        let s = fit_local_linear(&m, &[0.4, -1.2], 200, 0.75, 3).unwrap();
        assert!(cosine(s.weights().unwrap(), &[1.0, 1.0]) >= 0.99);
        // exact target: the fit reproduces it
        assert!((s.bias().unwrap() + 0.3).abs() < 1e-9);
    }

    #[test]
    fn flat_target_gives_zero_weights() {
        let m = TrainedModel::logistic(vec![0.0, 0.0], 2.0).unwrap();
        let s = fit_local_linear(&m, &[1.0, 1.0], 100, 0.5, 0).unwrap();
        assert!(s.weights().unwrap().iter().all(|w| w.abs() <= 1e-6));
    }

    #[test]
    fn deterministic_per_seed() {
        let m = TrainedModel::logistic(vec![0.5, -2.0], 0.1).unwrap();
        let a = fit_local_linear(&m, &[0.0, 0.0], 100, 0.75, 17).unwrap();
        let b = fit_local_linear(&m, &[0.0, 0.0], 100, 0.75, 17).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_samples() {
        let m = TrainedModel::logistic(vec![1.0, 1.0], 0.0).unwrap();
        assert!(matches!(
            fit_local_linear(&m, &[0.0, 0.0], 19, 0.75, 0),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn underflowing_kernel_is_a_fit_error() {
        let m = TrainedModel::logistic(vec![1.0], 0.0).unwrap();
        let r = fit_local_linear(&m, &[0.0], 10, 1e-200, 0);
        assert!(matches!(r, Err(Error::Fit(_))));
    }
}
