//! Recourse generators and the records they produce.
//!
//! Four generators share one output type, [`RecourseRecord`]:
//!
//! - [`cfe_search`]: penalty-form gradient search for a sparse counterfactual.
//! - [`ar_search`]: exact best-first search over percentile action grids on a
//!   linear (or locally linearized) model.
//! - [`causal_recourse`]: interventions on a linear structural causal model.
//! - [`markov_search`]: a walk along the score gradient that stops with a
//!   constant probability per step once it is valid.
//!
//! A generator that finds nothing returns `Ok(None)`.

mod ar;
mod batch;
mod causal;
mod cfe;
mod markov;
mod surrogate;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::TrainedModel;

pub use ar::{ar_search, ar_search_with_grid, ActionGrid, ArParams, DEFAULT_PERCENTILES};
pub use batch::{batch_recourse, RecourseMethod, RecourseSet};
pub use causal::{causal_recourse, causal_recourse_with_grid, CausalParams, Scm, ScmVariable};
pub use cfe::{cfe_search, CfeParams};
pub use markov::{markov_search, markov_walk, MarkovParams, MarkovWalk, StopRule};
pub use surrogate::{fit_local_linear, SurrogateParams};

/// Distance `d(x, x')` between an origin and its recourse.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostFn {
    L1,
    #[default]
    L2,
}

impl CostFn {
    pub fn cost(self, origin: &[f64], x: &[f64]) -> f64 {
        let diffs = origin.iter().zip(x).map(|(a, b)| b - a);
        match self {
            CostFn::L1 => diffs.map(f64::abs).sum(),
            CostFn::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
        }
    }

    /// A subgradient with respect to `x`; zero where the norm is not
    /// differentiable.
    pub fn subgradient(self, origin: &[f64], x: &[f64]) -> Vec<f64> {
        match self {
            CostFn::L1 => origin
                .iter()
                .zip(x)
                .map(|(a, b)| {
                    if b > a {
                        1.0
                    } else if b < a {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect(),
            CostFn::L2 => {
                let norm = self.cost(origin, x);
                if norm == 0.0 {
                    vec![0.0; x.len()]
                } else {
                    origin.iter().zip(x).map(|(a, b)| (b - a) / norm).collect()
                }
            }
        }
    }

    /// Contribution of a single coordinate change to the monotone cost key
    /// (the plain sum for L1, the sum of squares for L2).
    pub(crate) fn coordinate_key(self, delta: f64) -> f64 {
        match self {
            CostFn::L1 => delta.abs(),
            CostFn::L2 => delta * delta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cfe,
    Ar,
    Causal,
    Markov,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Cfe => "CFE",
            Method::Ar => "AR",
            Method::Causal => "Causal",
            Method::Markov => "Markov",
        })
    }
}

/// One recourse: origin, the changed point, and bookkeeping.
///
/// Records can only be built through [`RecourseRecord::new`], which refuses
/// points the model does not classify as positive.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecourseRecord {
    origin: Vec<f64>,
    recourse: Vec<f64>,
    cost: f64,
    boundary_distance: Option<f64>,
    method: Method,
    iterations: usize,
}

impl RecourseRecord {
    pub fn new(
        model: &TrainedModel,
        origin: Vec<f64>,
        recourse: Vec<f64>,
        cost_fn: CostFn,
        method: Method,
        iterations: usize,
    ) -> Result<Self> {
        if origin.len() != recourse.len() {
            return Err(Error::Dimension {
                expected: origin.len(),
                got: recourse.len(),
            });
        }
        if !model.predict(&recourse)?.is_positive() {
            return Err(Error::InvalidRecourse);
        }
        Ok(RecourseRecord {
            cost: cost_fn.cost(&origin, &recourse),
            boundary_distance: model.boundary_distance(&recourse),
            origin,
            recourse,
            method,
            iterations,
        })
    }

    pub(crate) fn identity(
        model: &TrainedModel,
        x: &[f64],
        cost_fn: CostFn,
        method: Method,
    ) -> Result<Self> {
        Self::new(model, x.to_vec(), x.to_vec(), cost_fn, method, 0)
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn recourse(&self) -> &[f64] {
        &self.recourse
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// Signed distance from the generating model's boundary to the recourse
    /// (linear models only).
    pub fn boundary_distance(&self) -> Option<f64> {
        self.boundary_distance
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn record_requires_validity() {
        let m = TrainedModel::logistic(vec![1.0, 0.0], 0.0).unwrap();
        let bad = RecourseRecord::new(
            &m,
            vec![-1.0, 0.0],
            vec![-0.5, 0.0],
            CostFn::L2,
            Method::Cfe,
            3,
        );
        assert!(matches!(bad, Err(Error::InvalidRecourse)));
        let ok = RecourseRecord::new(
            &m,
            vec![-1.0, 0.0],
            vec![0.5, 0.0],
            CostFn::L1,
            Method::Cfe,
            3,
        )
        .unwrap();
        assert_eq!(ok.cost(), 1.5);
        assert_eq!(ok.boundary_distance(), Some(0.5));
    }

    fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..6).prop_flat_map(|d| {
            (
                prop::collection::vec(-10.0f64..10.0, d),
                prop::collection::vec(-10.0f64..10.0, d),
            )
        })
    }

    proptest! {
        #[test]
        fn cost_is_a_metric((a, b) in pair()) {
            for c in [CostFn::L1, CostFn::L2] {
                prop_assert_eq!(c.cost(&a, &a), 0.0);
                prop_assert!((c.cost(&a, &b) - c.cost(&b, &a)).abs() <= 1e-12);
                if a != b {
                    prop_assert!(c.cost(&a, &b) > 0.0);
                }
            }
        }
    }
}
