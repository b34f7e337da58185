use std::collections::HashSet;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ActionGrid, CostFn, Method, RecourseRecord, DEFAULT_PERCENTILES};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::TrainedModel;
use crate::seed;

/// `X_i = sum_j coef_j * X_parent_j + U_i`, with `U_i ~ N(0, noise_sd^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScmVariable {
    pub name: String,
    /// `(parent index, coefficient)`; parents must come earlier.
    #[serde(default)]
    pub parents: Vec<(usize, f64)>,
    #[serde(default = "unit")]
    pub noise_sd: f64,
    #[serde(default = "yes")]
    pub intervenable: bool,
}

fn unit() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

/// Linear-Gaussian structural causal model over topologically ordered
/// variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ScmVariable>", into = "Vec<ScmVariable>")]
pub struct Scm {
    variables: Vec<ScmVariable>,
}

impl TryFrom<Vec<ScmVariable>> for Scm {
    type Error = Error;

    fn try_from(v: Vec<ScmVariable>) -> Result<Self> {
        Scm::new(v)
    }
}

impl From<Scm> for Vec<ScmVariable> {
    fn from(s: Scm) -> Self {
        s.variables
    }
}

impl Scm {
    pub fn new(variables: Vec<ScmVariable>) -> Result<Self> {
        let mut names = HashSet::new();
        for (i, v) in variables.iter().enumerate() {
            if !names.insert(v.name.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate SCM variable `{}`",
                    v.name
                )));
            }
            if let Some((p, _)) = v.parents.iter().find(|(p, _)| *p >= i) {
                return Err(Error::Validation(format!(
                    "`{}` lists parent {p}, which is not an earlier variable",
                    v.name
                )));
            }
            if v.parents.iter().any(|(_, c)| !c.is_finite())
                || v.noise_sd.is_nan()
                || v.noise_sd < 0.0
            {
                return Err(Error::Validation(format!("bad equation for `{}`", v.name)));
            }
        }
        Ok(Scm { variables })
    }

    /// Chain `X0 -> X1 -> ...` with the given edge coefficients, unit noise,
    /// every variable intervenable.
    pub fn chain(names: &[&str], coefficients: &[f64]) -> Result<Self> {
        if coefficients.len() + 1 != names.len() {
            return Err(Error::Argument(
                "a chain of n variables has n-1 edges".into(),
            ));
        }
        let variables = names
            .iter()
            .enumerate()
            .map(|(i, n)| ScmVariable {
                name: n.to_string(),
                parents: if i == 0 {
                    vec![]
                } else {
                    vec![(i - 1, coefficients[i - 1])]
                },
                noise_sd: 1.0,
                intervenable: true,
            })
            .collect();
        Scm::new(variables)
    }

    /// Three-variable chain with coefficients 0.8 and 0.5.
    pub fn default_chain(names: [&str; 3]) -> Self {
        Scm::chain(&names, &[0.8, 0.5]).expect("fixed chain is acyclic")
    }

    pub fn variables(&self) -> &[ScmVariable] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    fn structural(&self, i: usize, x: &[f64]) -> f64 {
        self.variables[i]
            .parents
            .iter()
            .map(|(p, c)| c * x[*p])
            .sum()
    }

    /// Noise terms that reproduce `x` exactly.
    pub fn abduct(&self, x: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| x[i] - self.structural(i, x))
            .collect()
    }

    /// Sets intervened variables to their values and recomputes every other
    /// variable from its parents and its noise, in order.
    pub fn propagate(&self, noise: &[f64], interventions: &[(usize, f64)]) -> Vec<f64> {
        let mut x = vec![0.0; self.len()];
        for i in 0..self.len() {
            x[i] = match interventions.iter().find(|(j, _)| *j == i) {
                Some((_, v)) => *v,
                None => self.structural(i, &x) + noise[i],
            };
        }
        x
    }

    /// Counterfactual point under `interventions`, holding `x`'s noise fixed.
    pub fn intervene(&self, x: &[f64], interventions: &[(usize, f64)]) -> Vec<f64> {
        self.propagate(&self.abduct(x), interventions)
    }

    /// Draws `n` observational samples.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seed::rng(seed);
        (0..n)
            .map(|_| {
                let noise: Vec<f64> = self
                    .variables
                    .iter()
                    .map(|v| v.noise_sd * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                self.propagate(&noise, &[])
            })
            .collect()
    }

    /// True if `a` is an ancestor of `b`.
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        let mut stack = vec![b];
        let mut seen = vec![false; self.len()];
        while let Some(v) = stack.pop() {
            for (p, _) in &self.variables[v].parents {
                if *p == a {
                    return true;
                }
                if !seen[*p] {
                    seen[*p] = true;
                    stack.push(*p);
                }
            }
        }
        false
    }

    fn check_alignment(&self, m: &TrainedModel) -> Result<()> {
        let schema = m.schema();
        if schema.len() != self.len()
            || schema
                .names()
                .zip(&self.variables)
                .any(|(n, v)| n != v.name)
        {
            return Err(Error::Argument(
                "SCM variables must match the schema features in order".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalParams {
    pub scm: Scm,
    #[serde(default = "default_percentiles")]
    pub grid_percentiles: Vec<f64>,
    #[serde(default = "default_max_intervened")]
    pub max_intervened: usize,
}

fn default_percentiles() -> Vec<f64> {
    DEFAULT_PERCENTILES.to_vec()
}

fn default_max_intervened() -> usize {
    2
}

/// [`causal_recourse_with_grid`] with percentile grids taken from `data`.
pub fn causal_recourse(
    m: &TrainedModel,
    x: &[f64],
    data: &Dataset,
    cost: CostFn,
    params: &CausalParams,
) -> Result<Option<RecourseRecord>> {
    let grid = ActionGrid::from_percentiles(data, &params.grid_percentiles)?;
    causal_recourse_with_grid(&params.scm, m, x, &grid, cost, params.max_intervened)
}

/// Cheapest intervention of at most `max_intervened` intervenable variables,
/// each set to a grid value, whose propagated point `m` classifies as
/// positive. Cost is measured between `x` and the full post-intervention
/// point; ties go to the first intervention in enumeration order.
pub fn causal_recourse_with_grid(
    scm: &Scm,
    m: &TrainedModel,
    x: &[f64],
    grid: &ActionGrid,
    cost: CostFn,
    max_intervened: usize,
) -> Result<Option<RecourseRecord>> {
    scm.check_alignment(m)?;
    if m.predict(x)?.is_positive() {
        return RecourseRecord::identity(m, x, cost, Method::Causal).map(Some);
    }
    let noise = scm.abduct(x);
    let targets: Vec<usize> = (0..scm.len())
        .filter(|&i| scm.variables[i].intervenable && !grid.feature(i).is_empty())
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut evaluated = 0usize;
    let mut chosen: Vec<(usize, f64)> = Vec::new();
    let mut visit = |chosen: &[(usize, f64)]| -> Result<()> {
        evaluated += 1;
        let point = scm.propagate(&noise, chosen);
        if m.decision_value(&point)? >= 0.0 {
            let c = cost.cost(x, &point);
            if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
                best = Some((c, point));
            }
        }
        Ok(())
    };
    enumerate(&targets, grid, max_intervened, 0, &mut chosen, &mut visit)?;
    match best {
        Some((_, point)) => {
            RecourseRecord::new(m, x.to_vec(), point, cost, Method::Causal, evaluated).map(Some)
        }
        None => Ok(None),
    }
}

fn enumerate(
    targets: &[usize],
    grid: &ActionGrid,
    budget: usize,
    from: usize,
    chosen: &mut Vec<(usize, f64)>,
    visit: &mut impl FnMut(&[(usize, f64)]) -> Result<()>,
) -> Result<()> {
    if budget == 0 {
        return Ok(());
    }
    for t in from..targets.len() {
        let var = targets[t];
        for &v in grid.feature(var) {
            chosen.push((var, v));
            visit(chosen)?;
            enumerate(targets, grid, budget - 1, t + 1, chosen, visit)?;
            chosen.pop();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureSchema;
    use crate::models::ModelKind;

    fn two_chain() -> Scm {
        Scm::chain(&["x0", "x1"], &[0.5]).unwrap()
    }

    #[test]
    fn downstream_propagation() {
        let scm = two_chain();
        let x = [-1.0, -0.5 + 0.2];
        let u = scm.abduct(&x);
        assert!((u[1] - 0.2).abs() < 1e-12);
        let after = scm.intervene(&x, &[(0, 1.0)]);
        assert_eq!(after[0], 1.0);
        assert!((after[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn sink_intervention_leaves_root() {
        let scm = two_chain();
        let after = scm.intervene(&[0.3, 9.0], &[(1, -4.0)]);
        assert_eq!(after, vec![0.3, -4.0]);
    }

    #[test]
    fn cyclic_or_forward_parent_rejected() {
        let v = vec![
            ScmVariable {
                name: "a".into(),
                parents: vec![(1, 1.0)],
                noise_sd: 1.0,
                intervenable: true,
            },
            ScmVariable {
                name: "b".into(),
                parents: vec![],
                noise_sd: 1.0,
                intervenable: true,
            },
        ];
        assert!(Scm::new(v).is_err());
    }

    #[test]
    fn ancestry() {
        let scm = Scm::default_chain(["a", "b", "c"]);
        assert!(scm.is_ancestor(0, 2));
        assert!(!scm.is_ancestor(2, 0));
        assert!(!scm.is_ancestor(1, 1));
    }

    #[test]
    fn finds_downstream_effect_recourse() {
        // only x1 counts, but intervening on x0 moves it through the edge
        let scm = two_chain();
        let schema = FeatureSchema::continuous(2);
        let m = TrainedModel::linear(ModelKind::LogisticRegression, schema, vec![0.0, 1.0], -0.5)
            .unwrap();
        let grid = ActionGrid::new(vec![vec![2.0], vec![]]);
        let r = causal_recourse_with_grid(&scm, &m, &[0.0, 0.0], &grid, CostFn::L2, 1)
            .unwrap()
            .unwrap();
        assert_eq!(r.recourse(), &[2.0, 1.0]);
        assert_eq!(r.method(), Method::Causal);
    }

    #[test]
    fn misaligned_scm_rejected() {
        let scm = Scm::chain(&["p", "q"], &[0.5]).unwrap();
        let m = TrainedModel::logistic(vec![1.0, 1.0], -1.0).unwrap();
        let grid = ActionGrid::new(vec![vec![1.0], vec![1.0]]);
        assert!(causal_recourse_with_grid(&scm, &m, &[0.0, 0.0], &grid, CostFn::L2, 1).is_err());
    }

    #[test]
    fn scm_json_round_trip() {
        let scm = Scm::default_chain(["x0", "x1", "x2"]);
        let text = serde_json::to_string(&scm).unwrap();
        assert_eq!(serde_json::from_str::<Scm>(&text).unwrap(), scm);
    }
}
