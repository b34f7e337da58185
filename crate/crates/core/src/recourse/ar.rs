use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{CostFn, Method, RecourseRecord, SurrogateParams};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::TrainedModel;

pub const DEFAULT_PERCENTILES: [f64; 9] = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArParams {
    pub grid_percentiles: Vec<f64>,
    pub max_changed_features: usize,
    /// Local linearization used when the model is not linear.
    pub surrogate: SurrogateParams,
}

impl Default for ArParams {
    fn default() -> Self {
        ArParams {
            grid_percentiles: DEFAULT_PERCENTILES.to_vec(),
            max_changed_features: 3,
            surrogate: SurrogateParams::default(),
        }
    }
}

/// Candidate values per feature. Non-actionable features get none.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionGrid {
    values: Vec<Vec<f64>>,
}

impl ActionGrid {
    pub fn new(values: Vec<Vec<f64>>) -> Self {
        ActionGrid { values }
    }

    /// Nearest-rank percentiles of each actionable column, deduplicated, so
    /// every candidate is a value that occurs in `data`.
    pub fn from_percentiles(data: &Dataset, percentiles: &[f64]) -> Result<Self> {
        if percentiles.iter().any(|p| !(0.0..=100.0).contains(p)) {
            return Err(Error::Argument("percentiles must lie in [0, 100]".into()));
        }
        if data.is_empty() {
            return Err(Error::Argument(
                "cannot build a grid from an empty dataset".into(),
            ));
        }
        let n = data.len();
        let values = data
            .schema()
            .features()
            .iter()
            .enumerate()
            .map(|(j, f)| {
                if !f.actionable {
                    return Vec::new();
                }
                let mut col = data.column(j);
                col.sort_by(f64::total_cmp);
                let mut picks: Vec<f64> = percentiles
                    .iter()
                    .map(|p| {
                        let rank = (p / 100.0 * n as f64).ceil() as usize;
                        col[rank.clamp(1, n) - 1]
                    })
                    .collect();
                picks.sort_by(f64::total_cmp);
                picks.dedup();
                picks
            })
            .collect();
        Ok(ActionGrid { values })
    }

    pub fn feature(&self, j: usize) -> &[f64] {
        self.values.get(j).map_or(&[], |v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Copy)]
struct Action {
    feature: usize,
    value: f64,
    key: f64,
    gain: f64,
}

struct Node {
    key: f64,
    order: u64,
    next: usize,
    score: f64,
    changes: Vec<Action>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // min-heap on (key, insertion order)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.order.cmp(&self.order))
    }
}

/// [`ar_search_with_grid`] on percentile grids of `data`. Nonlinear models
/// are first replaced by a local linear surrogate; the result is then
/// re-checked against the true model.
pub fn ar_search(
    m: &TrainedModel,
    x: &[f64],
    data: &Dataset,
    cost: CostFn,
    params: &ArParams,
    seed: u64,
) -> Result<Option<RecourseRecord>> {
    let grid = ActionGrid::from_percentiles(data, &params.grid_percentiles)?;
    if m.is_linear() {
        return ar_search_with_grid(m, x, &grid, cost, params.max_changed_features);
    }
    if m.predict(x)?.is_positive() {
        return RecourseRecord::identity(m, x, cost, Method::Ar).map(Some);
    }
    let s = &params.surrogate;
    let surrogate = fit_surrogate(m, x, s, seed)?;
    let Some(found) = ar_search_with_grid(&surrogate, x, &grid, cost, params.max_changed_features)?
    else {
        return Ok(None);
    };
    if !m.predict(found.recourse())?.is_positive() {
        return Ok(None);
    }
    RecourseRecord::new(
        m,
        x.to_vec(),
        found.recourse().to_vec(),
        cost,
        Method::Ar,
        found.iterations(),
    )
    .map(Some)
}

fn fit_surrogate(
    m: &TrainedModel,
    x: &[f64],
    s: &SurrogateParams,
    seed: u64,
) -> Result<TrainedModel> {
    super::fit_local_linear(m, x, s.n_samples, s.kernel_width, seed)
}

/// Minimum-cost change of at most `max_changed` actionable features, each
/// set to one of its grid values, that makes the linear model `m` score
/// `>= 0`.
///
/// Best-first branch and bound: nodes are partial assignments over features
/// in index order, expanded cheapest first, so the first valid node popped
/// is optimal for the grid. Subtrees that cannot reach a nonnegative score
/// even with their best remaining moves are pruned.
pub fn ar_search_with_grid(
    m: &TrainedModel,
    x: &[f64],
    grid: &ActionGrid,
    cost: CostFn,
    max_changed: usize,
) -> Result<Option<RecourseRecord>> {
    let w = m
        .weights()
        .ok_or_else(|| Error::UnsupportedKind(format!("{:?} is not linear", m.kind())))?;
    let schema = m.schema();
    if !schema.has_actionable() {
        return Err(Error::Argument("no actionable features".into()));
    }
    let start = m.decision_value(x)?;
    if start >= 0.0 {
        return RecourseRecord::identity(m, x, cost, Method::Ar).map(Some);
    }

    // actions grouped by feature, in feature order
    let groups: Vec<Vec<Action>> = schema
        .actionable()
        .map(|j| {
            let f = schema.feature(j);
            grid.feature(j)
                .iter()
                .filter(|&&v| v != x[j] && f.in_bounds(v) && f.on_grid(v))
                .map(|&v| Action {
                    feature: j,
                    value: v,
                    key: cost.coordinate_key(v - x[j]),
                    gain: w[j] * (v - x[j]),
                })
                .collect::<Vec<_>>()
        })
        .filter(|g| !g.is_empty())
        .collect();
    let best_gain: Vec<f64> = groups
        .iter()
        .map(|g| g.iter().map(|a| a.gain).fold(0.0, f64::max))
        .collect();
    // slack for the incremental score versus a fresh evaluation
    let tol = 1e-9 * (1.0 + start.abs());

    let optimistic = |from: usize, budget: usize, score: f64| -> bool {
        let mut gains: Vec<f64> = best_gain[from..].to_vec();
        gains.sort_by(|a, b| b.total_cmp(a));
        score + gains.iter().take(budget).sum::<f64>() >= -tol
    };

    let mut heap = BinaryHeap::new();
    let mut order = 0u64;
    heap.push(Node {
        key: 0.0,
        order,
        next: 0,
        score: start,
        changes: Vec::new(),
    });
    let mut expanded = 0usize;
    while let Some(node) = heap.pop() {
        expanded += 1;
        if !node.changes.is_empty() && node.score >= -tol {
            let mut candidate = x.to_vec();
            for a in &node.changes {
                candidate[a.feature] = a.value;
            }
            if m.decision_value(&candidate)? >= 0.0 {
                let rec =
                    RecourseRecord::new(m, x.to_vec(), candidate, cost, Method::Ar, expanded)?;
                return Ok(Some(rec));
            }
        }
        let budget = max_changed.saturating_sub(node.changes.len());
        if budget == 0 {
            continue;
        }
        for (g, group) in groups.iter().enumerate().skip(node.next) {
            if !optimistic(g, budget, node.score) {
                continue;
            }
            for a in group {
                let score = node.score + a.gain;
                if !optimistic(g + 1, budget - 1, score) {
                    continue;
                }
                order += 1;
                let mut changes = node.changes.clone();
                changes.push(*a);
                heap.push(Node {
                    key: node.key + a.key,
                    order,
                    next: g + 1,
                    score,
                    changes,
                });
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Feature, FeatureSchema, Label};
    use crate::models::ModelKind;

    #[test]
    fn picks_cheapest_grid_value() {
        let m = TrainedModel::logistic(vec![1.0, 0.0], -0.5).unwrap();
        let grid = ActionGrid::new(vec![vec![-1.0, 0.25, 0.75, 1.5], vec![-1.0, 1.0]]);
        let r = ar_search_with_grid(&m, &[0.0, 0.0], &grid, CostFn::L1, 3)
            .unwrap()
            .unwrap();
        assert_eq!(r.recourse(), &[0.75, 0.0]);
        assert_eq!(r.cost(), 0.75);
    }

    #[test]
    fn valid_point_is_identity() {
        let m = TrainedModel::logistic(vec![1.0, 0.0], -0.5).unwrap();
        let grid = ActionGrid::new(vec![vec![0.0], vec![0.0]]);
        let r = ar_search_with_grid(&m, &[1.0, 0.0], &grid, CostFn::L1, 3)
            .unwrap()
            .unwrap();
        assert_eq!((r.recourse(), r.cost()), (&[1.0, 0.0][..], 0.0));
    }

    #[test]
    fn needs_an_actionable_feature() {
        let schema = FeatureSchema::new(
            vec![
                Feature::continuous("a").immutable(),
                Feature::continuous("b").immutable(),
            ],
            "y",
        )
        .unwrap();
        let m = TrainedModel::linear(ModelKind::LogisticRegression, schema, vec![1.0, 1.0], -1.0)
            .unwrap();
        let grid = ActionGrid::new(vec![vec![2.0], vec![2.0]]);
        assert!(matches!(
            ar_search_with_grid(&m, &[0.0, 0.0], &grid, CostFn::L1, 3),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn frozen_features_stay_put() {
        let schema = FeatureSchema::new(
            vec![
                Feature::continuous("a").immutable(),
                Feature::continuous("b"),
            ],
            "y",
        )
        .unwrap();
        let m = TrainedModel::linear(ModelKind::LogisticRegression, schema, vec![5.0, 1.0], -1.0)
            .unwrap();
        let grid = ActionGrid::new(vec![vec![1.0], vec![0.5, 1.0, 2.0]]);
        let r = ar_search_with_grid(&m, &[0.0, 0.0], &grid, CostFn::L2, 3)
            .unwrap()
            .unwrap();
        assert_eq!(r.recourse(), &[0.0, 1.0]);
    }

    #[test]
    fn combination_needed() {
        let m = TrainedModel::logistic(vec![1.0, 1.0, 1.0], -2.5).unwrap();
        let grid = ActionGrid::new(vec![vec![1.0], vec![1.0], vec![1.0]]);
        let r = ar_search_with_grid(&m, &[0.0; 3], &grid, CostFn::L1, 3)
            .unwrap()
            .unwrap();
        assert_eq!(r.recourse(), &[1.0, 1.0, 1.0]);
        assert!(ar_search_with_grid(&m, &[0.0; 3], &grid, CostFn::L1, 2)
            .unwrap()
            .is_none());
    }

    #[test]
    fn percentile_grid_uses_data_values() {
        let d = Dataset::new(
            FeatureSchema::continuous(1),
            (1..=10).map(|i| vec![i as f64]).collect(),
            vec![Label::Positive; 10],
        )
        .unwrap();
        let g = ActionGrid::from_percentiles(&d, &DEFAULT_PERCENTILES).unwrap();
        assert_eq!(g.feature(0), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let g = ActionGrid::from_percentiles(&d, &[0.0, 100.0]).unwrap();
        assert_eq!(g.feature(0), &[1.0, 10.0]);
    }
}
