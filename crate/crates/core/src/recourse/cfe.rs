use serde::{Deserialize, Serialize};

use super::{CostFn, Method, RecourseRecord};
use crate::error::{Error, Result};
use crate::models::{numeric_gradient, TrainedModel};
use crate::optim::Adam;

/// Schedule for the penalty-form counterfactual search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CfeParams {
    pub lambda_init: f64,
    pub lambda_growth: f64,
    /// Number of times lambda grows; the search runs `lambda_steps + 1` stages.
    pub lambda_steps: usize,
    pub inner_iters: usize,
    pub step_size: f64,
    pub tolerance: f64,
    /// Score the penalty pushes towards; validity itself only needs `>= 0`.
    pub margin_target: f64,
    /// Central-difference step for score gradients.
    pub gradient_step: f64,
}

impl Default for CfeParams {
    fn default() -> Self {
        CfeParams {
            lambda_init: 0.1,
            lambda_growth: 10.0,
            lambda_steps: 6,
            inner_iters: 1000,
            step_size: 0.01,
            tolerance: 1e-6,
            margin_target: 1e-4,
            gradient_step: 1e-5,
        }
    }
}

impl CfeParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_init", self.lambda_init),
            ("step_size", self.step_size),
            ("gradient_step", self.gradient_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.lambda_growth >= 1.0 && self.lambda_growth.is_finite()) {
            return Err(Error::Argument("lambda_growth must be at least 1".into()));
        }
        if self.inner_iters == 0 {
            return Err(Error::Argument("inner_iters must be at least 1".into()));
        }
        if [self.tolerance, self.margin_target]
            .iter()
            .any(|v| v.is_nan() || *v < 0.0)
        {
            return Err(Error::Argument(
                "tolerance and margin_target must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Minimizes `lambda * max(0, margin_target - f(x'))^2 + cost(x, x')` with
/// Adam on numeric gradients, growing lambda geometrically until a stage
/// yields a valid point.
///
/// Each stage warm-starts from the previous iterate and keeps the cheapest
/// valid iterate it visits. Iterates are clamped to the schema bounds, and the
/// stage winner is snapped to the discrete grids and re-checked before it is
/// accepted.
pub fn cfe_search(
    m: &TrainedModel,
    x: &[f64],
    cost: CostFn,
    params: &CfeParams,
) -> Result<Option<RecourseRecord>> {
    params.validate()?;
    if m.predict(x)?.is_positive() {
        return RecourseRecord::identity(m, x, cost, Method::Cfe).map(Some);
    }
    let schema = m.schema();
    let d = x.len();
    let mut cur = x.to_vec();
    let mut iterations = 0;
    let mut lambda = params.lambda_init;

    for _stage in 0..=params.lambda_steps {
        let mut adam = Adam::new(d);
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut prev_objective = f64::INFINITY;
        for _ in 0..params.inner_iters {
            iterations += 1;
            let gap = (params.margin_target - m.score(&cur)).max(0.0);
            let mut grad = cost.subgradient(x, &cur);
            if gap > 0.0 {
                let score_grad = numeric_gradient(m, &cur, params.gradient_step)?;
                for (g, s) in grad.iter_mut().zip(&score_grad) {
                    *g -= 2.0 * lambda * gap * s;
                }
            }
            adam.step(&mut cur, &grad, params.step_size);
            schema.clamp(&mut cur);
            if cur.iter().any(|v| !v.is_finite()) {
                return Err(Error::Search(format!(
                    "non-finite iterate at iteration {iterations}"
                )));
            }

            let score = m.score(&cur);
            let c = cost.cost(x, &cur);
            if score >= 0.0 && best.as_ref().is_none_or(|(bc, _)| c < *bc) {
                best = Some((c, cur.clone()));
            }
            let objective = lambda * (params.margin_target - score).max(0.0).powi(2) + c;
            if (prev_objective - objective).abs() <= params.tolerance {
                break;
            }
            prev_objective = objective;
        }
        if let Some((_, mut candidate)) = best {
            schema.snap(&mut candidate);
            if m.predict(&candidate)?.is_positive() {
                let rec =
                    RecourseRecord::new(m, x.to_vec(), candidate, cost, Method::Cfe, iterations)?;
                return Ok(Some(rec));
            }
        }
        lambda *= params.lambda_growth;
    }
    Ok(None)
}
