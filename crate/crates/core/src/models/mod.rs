//! Trainable binary classifiers with score, label and probability access,
//! numeric input gradients, and boundary translation.

mod cv;
mod serial;
mod train;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{FeatureSchema, Label};
use crate::error::{Error, Result};

pub use cv::{cross_val_accuracy, cross_val_accuracy_with};
pub use serial::FORMAT_VERSION;
pub use train::train;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    LogisticRegression,
    LinearSvm,
    Mlp,
}

impl ModelKind {
    pub fn is_linear(self) -> bool {
        !matches!(self, ModelKind::Mlp)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub hidden_layers: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    #[serde(default)]
    pub l2_penalty: f64,
    #[serde(default)]
    pub seed: u64,
    /// Mini-batch size; used by the MLP only.
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
}

fn default_batch_size() -> usize {
    32
}

impl ModelSpec {
    pub fn logistic_regression() -> Self {
        ModelSpec {
            kind: ModelKind::LogisticRegression,
            hidden_layers: Vec::new(),
            learning_rate: 0.5,
            epochs: 300,
            l2_penalty: 1e-3,
            seed: 0,
            batch_size: default_batch_size(),
        }
    }

    pub fn linear_svm() -> Self {
        ModelSpec {
            kind: ModelKind::LinearSvm,
            learning_rate: 0.1,
            l2_penalty: 1e-3,
            ..Self::logistic_regression()
        }
    }

    pub fn mlp(hidden_layers: Vec<usize>) -> Self {
        ModelSpec {
            kind: ModelKind::Mlp,
            hidden_layers,
            learning_rate: 1e-3,
            epochs: 30,
            l2_penalty: 0.0,
            seed: 0,
            batch_size: default_batch_size(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ModelKind::Mlp if self.hidden_layers.is_empty() => {
                return Err(Error::Argument(
                    "mlp needs at least one hidden layer".into(),
                ))
            }
            ModelKind::Mlp if self.hidden_layers.contains(&0) => {
                return Err(Error::Argument(
                    "hidden layer widths must be positive".into(),
                ))
            }
            k if k.is_linear() && !self.hidden_layers.is_empty() => {
                return Err(Error::Argument(format!("{k:?} takes no hidden layers")))
            }
            _ => {}
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument("learning_rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Argument("epochs must be at least 1".into()));
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return Err(Error::Argument("l2_penalty must be nonnegative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("batch_size must be at least 1".into()));
        }
        Ok(())
    }

    /// Short model label used in reports.
    pub fn label(&self) -> String {
        match self.kind {
            ModelKind::LogisticRegression => "LR".into(),
            ModelKind::LinearSvm => "SVM".into(),
            ModelKind::Mlp => format!("MLP {:?}", self.hidden_layers),
        }
    }
}

/// Dense affine layer, weights stored row-major as `outputs x inputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.outputs).map(|o| dot(self.row(o), x) + self.bias[o]));
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Anything with a signed score whose sign is the class.
pub trait Classifier {
    fn n_features(&self) -> usize;

    fn decision_value(&self, x: &[f64]) -> Result<f64>;

    fn predict(&self, x: &[f64]) -> Result<Label> {
        self.decision_value(x).map(Label::from_score)
    }
}

/// A fitted classifier. Linear kinds hold a single `1 x d` layer plus a
/// boundary offset accumulated by [`parallel_perturb`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    spec: ModelSpec,
    layers: Vec<Layer>,
    schema: FeatureSchema,
    offset: f64,
    weight_norm: f64,
}

impl TrainedModel {
    pub fn from_layers(spec: ModelSpec, schema: FeatureSchema, layers: Vec<Layer>) -> Result<Self> {
        Self::with_offset(spec, schema, layers, 0.0)
    }

    pub(crate) fn with_offset(
        spec: ModelSpec,
        schema: FeatureSchema,
        layers: Vec<Layer>,
        offset: f64,
    ) -> Result<Self> {
        spec.validate()?;
        let mut widths = vec![schema.len()];
        widths.extend(&spec.hidden_layers);
        widths.push(1);
        if layers.len() != widths.len() - 1 {
            return Err(Error::Validation(format!(
                "expected {} layers, got {}",
                widths.len() - 1,
                layers.len()
            )));
        }
        for (l, (layer, w)) in layers.iter().zip(widths.windows(2)).enumerate() {
            if layer.inputs != w[0]
                || layer.outputs != w[1]
                || layer.weights.len() != w[0] * w[1]
                || layer.bias.len() != w[1]
            {
                return Err(Error::Validation(format!(
                    "layer {l} shape does not match {} -> {}",
                    w[0], w[1]
                )));
            }
            if layer
                .weights
                .iter()
                .chain(&layer.bias)
                .any(|v| !v.is_finite())
            {
                return Err(Error::NonFinite(format!("layer {l} parameters")));
            }
        }
        if !offset.is_finite() || (offset != 0.0 && !spec.kind.is_linear()) {
            return Err(Error::Validation("invalid boundary offset".into()));
        }
        let weight_norm = dot(&layers[0].weights, &layers[0].weights).sqrt();
        Ok(TrainedModel {
            spec,
            layers,
            schema,
            offset,
            weight_norm,
        })
    }

    /// Linear model `w.x + b` of the given kind.
    pub fn linear(kind: ModelKind, schema: FeatureSchema, w: Vec<f64>, b: f64) -> Result<Self> {
        if !kind.is_linear() {
            return Err(Error::UnsupportedKind(format!("{kind:?} is not linear")));
        }
        if w.len() != schema.len() {
            return Err(Error::Dimension {
                expected: schema.len(),
                got: w.len(),
            });
        }
        let spec = ModelSpec {
            kind,
            ..ModelSpec::logistic_regression()
        };
        let layer = Layer {
            inputs: w.len(),
            outputs: 1,
            weights: w,
            bias: vec![b],
        };
        Self::from_layers(spec, schema, vec![layer])
    }

    /// Logistic-regression model over an anonymous continuous schema.
    pub fn logistic(w: Vec<f64>, b: f64) -> Result<Self> {
        let schema = FeatureSchema::continuous(w.len());
        Self::linear(ModelKind::LogisticRegression, schema, w, b)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind
    }

    pub fn is_linear(&self) -> bool {
        self.spec.kind.is_linear()
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    /// Weight vector of a linear model.
    pub fn weights(&self) -> Option<&[f64]> {
        self.is_linear().then(|| self.layers[0].weights.as_slice())
    }

    /// Effective bias of a linear model, boundary offset included.
    pub fn bias(&self) -> Option<f64> {
        self.is_linear()
            .then(|| self.layers[0].bias[0] - self.offset * self.weight_norm)
    }

    /// Accumulated boundary translation (linear kinds; zero otherwise).
    pub fn boundary_offset(&self) -> f64 {
        self.offset
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input vector".into()));
        }
        Ok(())
    }

    /// Signed score: `w.x + b` for linear kinds, the pre-sigmoid logit for
    /// the MLP. Its sign is the class.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.score(x))
    }

    pub(crate) fn score(&self, x: &[f64]) -> f64 {
        if self.is_linear() {
            let l = &self.layers[0];
            return dot(&l.weights, x) + l.bias[0] - self.offset * self.weight_norm;
        }
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.forward_into(&cur, &mut next);
            if i < last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        self.decision_value(x).map(Label::from_score)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.decision_value(x).map(sigmoid)
    }

    /// `f(a) - f(b)`. For linear kinds this is evaluated as `w.(a - b)`,
    /// which is exact when `a` and `b` differ in one coordinate.
    pub fn decision_difference(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check_input(a)?;
        self.check_input(b)?;
        if self.is_linear() {
            let w = &self.layers[0].weights;
            return Ok(w
                .iter()
                .zip(a.iter().zip(b))
                .map(|(w, (a, b))| w * (a - b))
                .sum());
        }
        Ok(self.score(a) - self.score(b))
    }

    /// Signed Euclidean distance from the decision boundary (linear kinds).
    pub fn boundary_distance(&self, x: &[f64]) -> Option<f64> {
        if !self.is_linear() || self.weight_norm == 0.0 || x.len() != self.n_features() {
            return None;
        }
        let l = &self.layers[0];
        Some((dot(&l.weights, x) + l.bias[0]) / self.weight_norm - self.offset)
    }

    pub fn weight_norm(&self) -> f64 {
        self.weight_norm
    }

    /// Same model with every score negated (all labels flip, ties aside).
    pub fn negated(&self) -> TrainedModel {
        let mut m = self.clone();
        let last = m.layers.len() - 1;
        let out = &mut m.layers[last];
        out.weights.iter_mut().for_each(|w| *w = -*w);
        out.bias.iter_mut().for_each(|b| *b = -*b);
        if m.is_linear() {
            m.offset = -m.offset;
        }
        m
    }

    /// Copy with the output bias moved by `delta`.
    pub fn shift_output_bias(&self, delta: f64) -> TrainedModel {
        let mut m = self.clone();
        let last = m.layers.len() - 1;
        m.layers[last].bias[0] += delta;
        m
    }

    /// Short hex digest identifying the parameters.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.schema.fingerprint().as_bytes());
        for l in &self.layers {
            for v in l.weights.iter().chain(&l.bias) {
                h.update(v.to_le_bytes());
            }
        }
        h.update(self.offset.to_le_bytes());
        hex::encode(&h.finalize()[..8])
    }
}

impl Classifier for TrainedModel {
    fn n_features(&self) -> usize {
        TrainedModel::n_features(self)
    }

    fn decision_value(&self, x: &[f64]) -> Result<f64> {
        TrainedModel::decision_value(self, x)
    }
}

/// Central-difference gradient of the decision value,
/// `(f(x + h e_i) - f(x - h e_i)) / 2h` per coordinate.
pub fn numeric_gradient(m: &TrainedModel, x: &[f64], h: f64) -> Result<Vec<f64>> {
    central_difference(m, x, h, |m, a, b| m.decision_difference(a, b))
}

/// Central-difference gradient of `predict_proba`.
pub fn numeric_gradient_proba(m: &TrainedModel, x: &[f64], h: f64) -> Result<Vec<f64>> {
    central_difference(m, x, h, |m, a, b| {
        Ok(m.predict_proba(a)? - m.predict_proba(b)?)
    })
}

fn central_difference(
    m: &TrainedModel,
    x: &[f64],
    h: f64,
    diff: impl Fn(&TrainedModel, &[f64], &[f64]) -> Result<f64>,
) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Argument(format!(
            "step size must be positive, got {h}"
        )));
    }
    m.check_input(x)?;
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        plus[i] = x[i] + h;
        minus[i] = x[i] - h;
        // the representable step, not 2h
        let g = diff(m, &plus, &minus)? / (plus[i] - minus[i]);
        if !g.is_finite() {
            return Err(Error::NonFinite(format!("gradient component {i}")));
        }
        grad.push(g);
        plus[i] = x[i];
        minus[i] = x[i];
    }
    Ok(grad)
}

/// Translates a linear boundary by `delta_m` along its unit normal into the
/// positive halfspace: every point's signed boundary distance drops by
/// exactly `delta_m`, so positive values shrink the `+1` region.
pub fn parallel_perturb(m: &TrainedModel, delta_m: f64) -> Result<TrainedModel> {
    if !m.is_linear() {
        return Err(Error::UnsupportedKind(format!(
            "parallel perturbation needs a linear model, got {:?}",
            m.kind()
        )));
    }
    if m.weight_norm == 0.0 {
        return Err(Error::Argument(
            "zero weight vector has no boundary normal".into(),
        ));
    }
    if !delta_m.is_finite() {
        return Err(Error::Argument("delta_m must be finite".into()));
    }
    let mut out = m.clone();
    out.offset = m.offset + delta_m;
    Ok(out)
}
