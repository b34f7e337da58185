use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CostFn, Method, RecourseRecord};
use crate::error::{Error, Result};
use crate::models::{numeric_gradient, TrainedModel};
use crate::seed;

/// When the walk stops once it has crossed into the positive region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Constant stop probability per step, in `(0, 1]`.
    PerStep(f64),
    /// Stop rate per unit of distance travelled: a move of length `s` stops
    /// with probability `1 - exp(-rate * s)`, so post-crossing distances are
    /// exponential with this rate.
    Rate(f64),
}

impl StopRule {
    pub fn validate(self) -> Result<()> {
        match self {
            StopRule::PerStep(p) if p > 0.0 && p <= 1.0 => Ok(()),
            StopRule::Rate(r) if r > 0.0 && r.is_finite() => Ok(()),
            other => Err(Error::Argument(format!("invalid stop rule {other:?}"))),
        }
    }

    fn probability(self, move_length: f64) -> f64 {
        match self {
            StopRule::PerStep(p) => p,
            StopRule::Rate(r) => -(-r * move_length).exp_m1(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovParams {
    /// Move length on continuous schemas. Discrete schemas always move one
    /// grid unit.
    #[serde(default = "default_step")]
    pub step: f64,
    pub stop: StopRule,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_gradient_step")]
    pub gradient_step: f64,
}

fn default_step() -> f64 {
    1e-3
}

fn default_max_steps() -> usize {
    200_000
}

fn default_gradient_step() -> f64 {
    1e-5
}

impl MarkovParams {
    pub fn new(step: f64, stop: StopRule) -> Self {
        MarkovParams {
            step,
            stop,
            max_steps: default_max_steps(),
            gradient_step: default_gradient_step(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Argument("step must be positive".into()));
        }
        if self.gradient_step.is_nan() || self.gradient_step <= 0.0 {
            return Err(Error::Argument("gradient_step must be positive".into()));
        }
        self.stop.validate()
    }
}

/// A finished walk.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovWalk {
    pub record: RecourseRecord,
    /// First point of the walk the model classified as positive.
    pub crossing_point: Vec<f64>,
    /// Valid points visited, the final one included (`>= 1`).
    pub post_crossing_steps: usize,
}

/// [`markov_walk`] without the trace.
pub fn markov_search(
    m: &TrainedModel,
    x: &[f64],
    cost: CostFn,
    params: &MarkovParams,
    seed: u64,
) -> Result<Option<RecourseRecord>> {
    Ok(markov_walk(m, x, cost, params, seed)?.map(|w| w.record))
}

/// Walks from `x` up the score gradient. Once the walk reaches a point the
/// model classifies as positive, it flips a coin at every valid point and
/// stops with the probability given by the stop rule.
///
/// On continuous schemas each move has length `params.step` along the
/// normalized gradient (the boundary normal for linear models). On discrete
/// schemas each move changes the actionable feature with the steepest
/// feasible gradient by one grid unit, so post-crossing step counts are
/// geometric. Returns `Ok(None)` if `max_steps` runs out, or the walk
/// cannot move, before the stop.
pub fn markov_walk(
    m: &TrainedModel,
    x: &[f64],
    cost: CostFn,
    params: &MarkovParams,
    seed: u64,
) -> Result<Option<MarkovWalk>> {
    params.validate()?;
    if m.predict(x)?.is_positive() {
        return Ok(Some(MarkovWalk {
            record: RecourseRecord::identity(m, x, cost, Method::Markov)?,
            crossing_point: x.to_vec(),
            post_crossing_steps: 0,
        }));
    }
    let schema = m.schema();
    let discrete = schema.is_discrete();
    let actionable: Vec<bool> = schema.features().iter().map(|f| f.actionable).collect();
    let mut rng = seed::rng(seed);
    let mut cur = x.to_vec();
    let mut crossing: Option<Vec<f64>> = None;
    let mut post = 0usize;

    for steps in 1..=params.max_steps {
        let grad = match m.weights() {
            Some(w) => w.to_vec(),
            None => numeric_gradient(m, &cur, params.gradient_step)?,
        };
        let before = cur.clone();
        if discrete {
            let Some((j, dir)) = steepest_feasible(schema, &actionable, &grad, &cur) else {
                return Ok(None);
            };
            cur[j] += dir;
        } else {
            let norm = grad
                .iter()
                .zip(&actionable)
                .filter(|(_, a)| **a)
                .map(|(g, _)| g * g)
                .sum::<f64>()
                .sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Ok(None);
            }
            for ((c, g), a) in cur.iter_mut().zip(&grad).zip(&actionable) {
                if *a {
                    *c += params.step * g / norm;
                }
            }
            schema.clamp(&mut cur);
        }
        let moved = before
            .iter()
            .zip(&cur)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if moved == 0.0 {
            return Ok(None);
        }
        if !m.predict(&cur)?.is_positive() {
            if crossing.is_some() {
                post += 1;
            }
            continue;
        }
        if crossing.is_none() {
            crossing = Some(cur.clone());
        }
        post += 1;
        if rng.random::<f64>() < params.stop.probability(moved) {
            let record = RecourseRecord::new(m, x.to_vec(), cur, cost, Method::Markov, steps)?;
            return Ok(Some(MarkovWalk {
                record,
                crossing_point: crossing.expect("set on first valid step"),
                post_crossing_steps: post,
            }));
        }
    }
    Ok(None)
}

fn steepest_feasible(
    schema: &crate::dataset::FeatureSchema,
    actionable: &[bool],
    grad: &[f64],
    cur: &[f64],
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (j, g) in grad.iter().enumerate() {
        if !actionable[j] || *g == 0.0 {
            continue;
        }
        let dir = g.signum();
        if !schema.feature(j).in_bounds(cur[j] + dir) {
            continue;
        }
        if best.is_none_or(|(_, _, bg)| g.abs() > bg) {
            best = Some((j, dir, g.abs()));
        }
    }
    best.map(|(j, dir, _)| (j, dir))
}
