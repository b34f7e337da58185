use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    /// Integer grid with unit spacing.
    Ordinal,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default = "default_actionable")]
    pub actionable: bool,
    /// `None` means unbounded below.
    #[serde(default)]
    pub lower_bound: Option<f64>,
    /// `None` means unbounded above.
    #[serde(default)]
    pub upper_bound: Option<f64>,
}

fn default_actionable() -> bool {
    true
}

impl Feature {
    pub fn new(name: impl Into<String>, kind: FeatureKind) -> Self {
        Feature {
            name: name.into(),
            kind,
            actionable: true,
            lower_bound: None,
            upper_bound: None,
        }
    }

    pub fn continuous(name: impl Into<String>) -> Self {
        Self::new(name, FeatureKind::Continuous)
    }

    pub fn ordinal(name: impl Into<String>) -> Self {
        Self::new(name, FeatureKind::Ordinal)
    }

    pub fn binary(name: impl Into<String>) -> Self {
        let mut f = Self::new(name, FeatureKind::Binary);
        f.lower_bound = Some(0.0);
        f.upper_bound = Some(1.0);
        f
    }

    pub fn with_bounds(mut self, lower: Option<f64>, upper: Option<f64>) -> Self {
        self.lower_bound = lower;
        self.upper_bound = upper;
        self
    }

    pub fn immutable(mut self) -> Self {
        self.actionable = false;
        self
    }

    pub fn lower(&self) -> f64 {
        self.lower_bound.unwrap_or(f64::NEG_INFINITY)
    }

    pub fn upper(&self) -> f64 {
        self.upper_bound.unwrap_or(f64::INFINITY)
    }

    pub fn is_discrete(&self) -> bool {
        self.kind != FeatureKind::Continuous
    }

    pub fn on_grid(&self, v: f64) -> bool {
        match self.kind {
            FeatureKind::Continuous => v.is_finite(),
            FeatureKind::Ordinal => v.is_finite() && v.fract() == 0.0,
            FeatureKind::Binary => v == 0.0 || v == 1.0,
        }
    }

    pub fn in_bounds(&self, v: f64) -> bool {
        v >= self.lower() && v <= self.upper()
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.lower()).min(self.upper())
    }

    /// Rounds discrete features to their grid, then clamps.
    pub fn snap(&self, v: f64) -> f64 {
        let v = if self.is_discrete() { v.round() } else { v };
        let clamped = self.clamp(v);
        if self.is_discrete() && clamped.fract() != 0.0 {
            // fractional bound on a discrete feature: move inward
            if clamped > v {
                clamped.ceil()
            } else {
                clamped.floor()
            }
        } else {
            clamped
        }
    }
}

/// Ordered feature descriptions plus the label column name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema", into = "RawSchema")]
pub struct FeatureSchema {
    features: Vec<Feature>,
    label_name: String,
}

#[derive(Serialize, Deserialize)]
struct RawSchema {
    features: Vec<Feature>,
    label_name: String,
}

impl TryFrom<RawSchema> for FeatureSchema {
    type Error = Error;

    fn try_from(raw: RawSchema) -> Result<Self> {
        FeatureSchema::new(raw.features, raw.label_name)
    }
}

impl From<FeatureSchema> for RawSchema {
    fn from(s: FeatureSchema) -> Self {
        RawSchema {
            features: s.features,
            label_name: s.label_name,
        }
    }
}

impl FeatureSchema {
    pub fn new(features: Vec<Feature>, label_name: impl Into<String>) -> Result<Self> {
        let label_name = label_name.into();
        if label_name.is_empty() {
            return Err(Error::Validation("label name is empty".into()));
        }
        if features.is_empty() {
            return Err(Error::Validation("schema has no features".into()));
        }
        let mut seen = HashSet::new();
        for f in &features {
            if f.name.is_empty() {
                return Err(Error::Validation("feature name is empty".into()));
            }
            if f.name == label_name {
                return Err(Error::Validation(format!(
                    "feature `{}` collides with the label column",
                    f.name
                )));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Validation(format!("duplicate feature `{}`", f.name)));
            }
            for b in [f.lower_bound, f.upper_bound].into_iter().flatten() {
                if b.is_nan() {
                    return Err(Error::Validation(format!("NaN bound on `{}`", f.name)));
                }
            }
            if f.lower() > f.upper() {
                return Err(Error::Validation(format!(
                    "lower bound exceeds upper bound on `{}`",
                    f.name
                )));
            }
        }
        Ok(FeatureSchema {
            features,
            label_name,
        })
    }

    /// All-continuous, all-actionable, unbounded schema named `x0..x{d-1}`.
    pub fn continuous(d: usize) -> Self {
        let features = (0..d)
            .map(|i| Feature::continuous(format!("x{i}")))
            .collect();
        FeatureSchema::new(features, "y").expect("generated names are valid")
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &Feature {
        &self.features[i]
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn actionable(&self) -> impl Iterator<Item = usize> + '_ {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.actionable)
            .map(|(i, _)| i)
    }

    pub fn has_actionable(&self) -> bool {
        self.features.iter().any(|f| f.actionable)
    }

    /// True when every actionable feature lives on a discrete grid.
    pub fn is_discrete(&self) -> bool {
        self.has_actionable() && self.actionable().all(|i| self.features[i].is_discrete())
    }

    /// Same feature names and kinds in the same order (bounds may differ).
    pub fn is_compatible(&self, other: &FeatureSchema) -> bool {
        self.features.len() == other.features.len()
            && self
                .features
                .iter()
                .zip(&other.features)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind)
    }

    /// Hex digest over names and kinds; stable across bound rescaling.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for f in &self.features {
            h.update(f.name.as_bytes());
            h.update([0u8, f.kind as u8]);
        }
        h.update(self.label_name.as_bytes());
        hex::encode(h.finalize())
    }

    pub(crate) fn with_features(&self, features: Vec<Feature>) -> Self {
        FeatureSchema {
            features,
            label_name: self.label_name.clone(),
        }
    }

    /// Snaps every coordinate of `x` to its feature's grid and bounds.
    pub fn snap(&self, x: &mut [f64]) {
        for (v, f) in x.iter_mut().zip(&self.features) {
            *v = f.snap(*v);
        }
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, f) in x.iter_mut().zip(&self.features) {
            *v = f.clamp(*v);
        }
    }

    /// Checks one row against grid and bound invariants.
    pub fn check_row(&self, row: usize, x: &[f64]) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: x.len(),
            });
        }
        for (v, f) in x.iter().zip(&self.features) {
            if !v.is_finite() {
                return Err(Error::Validation(format!(
                    "row {row}: non-finite value in `{}`",
                    f.name
                )));
            }
            if !f.on_grid(*v) {
                return Err(Error::Validation(format!(
                    "row {row}: value {v} of `{}` is off its {:?} grid",
                    f.name, f.kind
                )));
            }
            if !f.in_bounds(*v) {
                return Err(Error::Validation(format!(
                    "row {row}: value {v} of `{}` outside [{}, {}]",
                    f.name,
                    f.lower(),
                    f.upper()
                )));
            }
        }
        Ok(())
    }
}
