//! Canonical on-disk model format.
//!
//! A model is a versioned JSON document:
//!
//! ```json
//! {
//!   "version": 1,
//!   "input_dim": 2,
//!   "layers": [
//!     {"type": "linear", "weights": [[1.0, -1.0], [-1.0, 1.0]], "bias": [0.0, 0.0]},
//!     {"type": "activation", "fn": "relu"}
//!   ]
//! }
//! ```
//!
//! Weights are stored row-major with `d_in` rows of `d_out` columns. The
//! loader rejects unknown versions, ragged weight rows and non-finite values.

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::network::{Layer, Network};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    input_dim: usize,
    layers: Vec<LayerSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum LayerSpec {
    Linear {
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
    },
    Activation {
        #[serde(rename = "fn")]
        func: ActivationKind,
    },
}

pub fn network_from_json(json: &str) -> Result<Network> {
    let file: ModelFile =
        serde_json::from_str(json).map_err(|e| Error::InvalidModel(e.to_string()))?;
    if file.version != MODEL_FORMAT_VERSION {
        return Err(Error::InvalidModel(format!(
            "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
            file.version
        )));
    }
    let mut layers = Vec::with_capacity(file.layers.len());
    for (index, spec) in file.layers.into_iter().enumerate() {
        match spec {
            LayerSpec::Linear { weights, bias } => {
                let rows = weights.len();
                let cols = weights.first().map_or(0, Vec::len);
                if rows == 0 || cols == 0 {
                    return Err(Error::InvalidModel(format!(
                        "layer {index}: empty weight matrix"
                    )));
                }
                if weights.iter().any(|row| row.len() != cols) {
                    return Err(Error::InvalidModel(format!(
                        "layer {index}: ragged weight rows"
                    )));
                }
                let flat: Vec<f64> = weights.into_iter().flatten().collect();
                if flat.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "layer {index}: non-finite parameter"
                    )));
                }
                let weights = Array2::from_shape_vec((rows, cols), flat)
                    .expect("row-major shape matches flattened length");
                layers.push(Layer::linear(weights, Array1::from(bias)));
            }
            LayerSpec::Activation { func } => layers.push(Layer::activation(func)),
        }
    }
    Network::new(file.input_dim, layers)
}

pub fn network_to_json(net: &Network) -> String {
    let layers = net
        .layers()
        .iter()
        .map(|layer| match layer {
            Layer::Linear { weights, bias } => LayerSpec::Linear {
                weights: weights.rows().into_iter().map(|r| r.to_vec()).collect(),
                bias: bias.to_vec(),
            },
            Layer::Activation(kind) => LayerSpec::Activation { func: *kind },
        })
        .collect();
    let file = ModelFile {
        version: MODEL_FORMAT_VERSION,
        input_dim: net.input_dim(),
        layers,
    };
    serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
}

pub fn load_model(path: &Path) -> Result<Network> {
    let json = std::fs::read_to_string(path)?;
    network_from_json(&json)
}

pub fn save_model(net: &Network, path: &Path) -> Result<()> {
    std::fs::write(path, network_to_json(net))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::xnor_net;
    use ndarray::array;

    #[test]
    fn round_trips_the_xnor_net() {
        let net = xnor_net();
        let restored = network_from_json(&network_to_json(&net)).unwrap();
        assert_eq!(restored.input_dim(), 2);
        assert_eq!(restored.output_dim(), 1);
        for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
            assert_eq!(
                restored.output(&array![a, b].view()).unwrap(),
                net.output(&array![a, b].view()).unwrap()
            );
        }
    }

    #[test]
    fn rejects_nan_weights() {
        let json = r#"{"version":1,"input_dim":1,
            "layers":[{"type":"linear","weights":[[null]],"bias":[0.0]}]}"#;
        assert!(network_from_json(json).is_err());
        let json = r#"{"version":1,"input_dim":1,
            "layers":[{"type":"linear","weights":[[1e400]],"bias":[0.0]}]}"#;
        assert!(network_from_json(json).is_err());
    }

    #[test]
    fn rejects_unknown_version_and_ragged_rows() {
        let json = r#"{"version":2,"input_dim":1,"layers":[]}"#;
        assert!(matches!(
            network_from_json(json),
            Err(Error::InvalidModel(_))
        ));
        let json = r#"{"version":1,"input_dim":2,
            "layers":[{"type":"linear","weights":[[1.0,2.0],[3.0]],"bias":[0.0,0.0]}]}"#;
        assert!(network_from_json(json).is_err());
    }

    #[test]
    fn rejects_unknown_activation_name() {
        let json = r#"{"version":1,"input_dim":1,
            "layers":[{"type":"activation","fn":"swish"}]}"#;
        assert!(network_from_json(json).is_err());
    }
}
