//! Versioned JSON documents for trained models.

use serde::{Deserialize, Serialize};

use super::{Layer, ModelKind, ModelSpec, TrainedModel};
use crate::dataset::FeatureSchema;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    kind: ModelKind,
    schema_hash: String,
    schema: FeatureSchema,
    spec: ModelSpec,
    layers: Vec<LayerDocument>,
    #[serde(default)]
    boundary_offset: f64,
}

#[derive(Serialize, Deserialize)]
struct LayerDocument {
    /// `[outputs, inputs]`
    shape: [usize; 2],
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl TrainedModel {
    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            format_version: FORMAT_VERSION,
            kind: self.kind(),
            schema_hash: self.schema.fingerprint(),
            schema: self.schema.clone(),
            spec: self.spec.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerDocument {
                    shape: [l.outputs, l.inputs],
                    weights: l.weights.clone(),
                    bias: l.bias.clone(),
                })
                .collect(),
            boundary_offset: self.offset,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<TrainedModel> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported model format version {}",
                doc.format_version
            )));
        }
        if doc.kind != doc.spec.kind {
            return Err(Error::Validation("kind disagrees with spec".into()));
        }
        if doc.schema_hash != doc.schema.fingerprint() {
            return Err(Error::Validation("schema hash mismatch".into()));
        }
        let layers = doc
            .layers
            .into_iter()
            .map(|l| Layer {
                inputs: l.shape[1],
                outputs: l.shape[0],
                weights: l.weights,
                bias: l.bias,
            })
            .collect();
        TrainedModel::with_offset(doc.spec, doc.schema, layers, doc.boundary_offset)
    }
}
