use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureKind, FeatureSchema};
use crate::error::{Error, Result};

/// Per-feature affine map `z = (x - offset) / scale`, fit on continuous
/// features only. Discrete features keep offset 0 and scale 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    schema_fingerprint: String,
    offsets: Vec<f64>,
    scales: Vec<f64>,
}

impl Scaler {
    pub fn fit(train: &Dataset) -> Scaler {
        let d = train.n_features();
        let n = train.len().max(1) as f64;
        let mut offsets = vec![0.0; d];
        let mut scales = vec![1.0; d];
        for (j, f) in train.schema().features().iter().enumerate() {
            if f.kind != FeatureKind::Continuous || train.is_empty() {
                continue;
            }
            let mean = train.rows().map(|r| r[j]).sum::<f64>() / n;
            let var = train.rows().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            offsets[j] = mean;
            let sd = var.sqrt();
            scales[j] = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
        }
        Scaler {
            schema_fingerprint: train.schema().fingerprint(),
            offsets,
            scales,
        }
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    fn check(&self, schema: &FeatureSchema) -> Result<()> {
        if schema.len() != self.offsets.len() {
            return Err(Error::Dimension {
                expected: self.offsets.len(),
                got: schema.len(),
            });
        }
        if schema.fingerprint() != self.schema_fingerprint {
            return Err(Error::SchemaMismatch {
                column: schema.label_name().to_string(),
                reason: "belongs to a schema the scaler was not fit on".into(),
            });
        }
        Ok(())
    }

    pub fn transform_point(&self, x: &mut [f64]) {
        for ((v, o), s) in x.iter_mut().zip(&self.offsets).zip(&self.scales) {
            *v = (*v - o) / s;
        }
    }

    pub fn inverse_point(&self, z: &mut [f64]) {
        for ((v, o), s) in z.iter_mut().zip(&self.offsets).zip(&self.scales) {
            *v = *v * s + o;
        }
    }

    /// Applies the map to a schema-compatible dataset; continuous bounds are
    /// mapped along with the values.
    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        self.check(data.schema())?;
        let features = data
            .schema()
            .features()
            .iter()
            .enumerate()
            .map(|(j, f)| {
                let mut f = f.clone();
                f.lower_bound = f
                    .lower_bound
                    .map(|b| (b - self.offsets[j]) / self.scales[j]);
                f.upper_bound = f
                    .upper_bound
                    .map(|b| (b - self.offsets[j]) / self.scales[j]);
                f
            })
            .collect();
        let schema = data.schema().with_features(features);
        let mut values = data.values().to_vec();
        for row in values.chunks_exact_mut(schema.len()) {
            self.transform_point(row);
            // float error must not push a value past its mapped bound
            schema.clamp(row);
        }
        Ok(Dataset::with_parts(schema, values, data.labels().to_vec()))
    }
}

/// Fits a [`Scaler`] on `train` and returns it with the transformed data.
pub fn standardize(train: &Dataset) -> Result<(Scaler, Dataset)> {
    let scaler = Scaler::fit(train);
    let out = scaler.apply(train)?;
    Ok((scaler, out))
}
