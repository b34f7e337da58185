//! Datasets, CSV ingestion, splitting, standardization and the synthetic
//! base/shifted generators.

mod io;
mod scaler;
mod schema;
mod synthetic;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use io::load_csv;
pub use scaler::{standardize, Scaler};
pub use schema::{Feature, FeatureKind, FeatureSchema};
pub use synthetic::{
    synth_base, synth_curved, synth_ordinal, synth_shift, CoefficientMode, Scenario, ShiftSpec,
};

/// Binary class label. Classes are encoded as −1 and +1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    /// The sign rule used throughout: a score of exactly zero is positive.
    pub fn from_score(score: f64) -> Label {
        if score >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

/// Feature matrix (row-major) with labels and a schema.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: FeatureSchema,
    values: Vec<f64>,
    labels: Vec<Label>,
}

impl Dataset {
    pub fn new(schema: FeatureSchema, rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        let d = schema.len();
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::Validation(format!(
                    "row {i} has {} values, schema has {d} features",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::from_flat(schema, values, labels)
    }

    pub fn from_flat(schema: FeatureSchema, values: Vec<f64>, labels: Vec<Label>) -> Result<Self> {
        let d = schema.len();
        if values.len() != labels.len() * d {
            return Err(Error::Validation(format!(
                "{} values do not form {} rows of {d} features",
                values.len(),
                labels.len()
            )));
        }
        for (i, row) in values.chunks_exact(d).enumerate() {
            schema.check_row(i, row)?;
        }
        Ok(Dataset {
            schema,
            values,
            labels,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_features();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_features())
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn positive_fraction(&self) -> f64 {
        if self.is_empty() {
            return f64::NAN;
        }
        self.labels.iter().filter(|l| l.is_positive()).count() as f64 / self.len() as f64
    }

    pub fn has_both_classes(&self) -> bool {
        let pos = self.labels.iter().filter(|l| l.is_positive()).count();
        pos > 0 && pos < self.len()
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let d = self.n_features();
        let mut values = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            schema: self.schema.clone(),
            values,
            labels,
        }
    }

    pub(crate) fn with_parts(schema: FeatureSchema, values: Vec<f64>, labels: Vec<Label>) -> Self {
        debug_assert_eq!(values.len(), labels.len() * schema.len());
        Dataset {
            schema,
            values,
            labels,
        }
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }

    /// Serializes to the same CSV dialect `load_csv` reads.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        io::write_csv(self, out)
    }
}

/// Seeded random partition into `(train, holdout)`.
///
/// The holdout receives `round(fraction * n)` rows (halves round up). Both
/// parts keep the input row order.
pub fn split(data: &Dataset, holdout_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "holdout fraction must lie in (0, 1), got {holdout_fraction}"
        )));
    }
    let n = data.len();
    if n < 2 {
        return Err(Error::Argument(format!("cannot split {n} rows")));
    }
    let n_holdout = (holdout_fraction * n as f64 + 0.5).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let mut in_holdout = vec![false; n];
    for &i in &order[..n_holdout] {
        in_holdout[i] = true;
    }
    let (holdout, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| in_holdout[i]);
    Ok((data.subset(&train), data.subset(&holdout)))
}
