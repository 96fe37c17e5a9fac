//! Feedforward network representation and forward evaluation.
//!
//! A network is an ordered sequence of linear and activation layers; linear
//! transformations and activations are kept in distinct layers. Weight
//! matrices have shape `(d_in, d_out)` and a linear layer computes
//! `a_out = W^T a_in + b`. Softmax outputs are not represented; classifiers
//! are expected to expose logits.

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;

#[derive(Debug, Clone)]
pub enum Layer {
    Linear { weights: Array2<f64>, bias: Array1<f64> },
    Activation(ActivationKind),
}

impl Layer {
    pub fn linear(weights: Array2<f64>, bias: Array1<f64>) -> Layer {
        Layer::Linear { weights, bias }
    }

    pub fn activation(kind: ActivationKind) -> Layer {
        Layer::Activation(kind)
    }

    fn out_dim(&self, in_dim: usize) -> usize {
        match self {
            Layer::Linear { weights, .. } => weights.ncols(),
            Layer::Activation(_) => in_dim,
        }
    }
}

/// An immutable feedforward network. Evaluation produces fresh traces, so a
/// shared `Network` may be evaluated concurrently from multiple threads.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<Layer>,
    input_dim: usize,
    output_dim: usize,
}

impl Network {
    /// Builds a network, checking that layer dimensions chain correctly from
    /// `input_dim` and that all parameters are finite.
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidModel("input_dim must be positive".into()));
        }
        let mut dim = input_dim;
        for (index, layer) in layers.iter().enumerate() {
            if let Layer::Linear { weights, bias } = layer {
                if weights.nrows() != dim {
                    return Err(Error::DimensionMismatch {
                        layer: index,
                        context: "linear weights rows",
                        expected: dim,
                        actual: weights.nrows(),
                    });
                }
                if bias.len() != weights.ncols() {
                    return Err(Error::DimensionMismatch {
                        layer: index,
                        context: "linear bias length",
                        expected: weights.ncols(),
                        actual: bias.len(),
                    });
                }
                if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "layer {index} contains non-finite parameters"
                    )));
                }
            }
            dim = layer.out_dim(dim);
        }
        Ok(Network {
            layers,
            input_dim,
            output_dim: dim,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn num_activation_layers(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| matches!(l, Layer::Activation(_)))
            .count()
    }

    fn check_input(&self, x: &ArrayView1<f64>) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                layer: 0,
                context: "input",
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                layer: 0,
                context: "input",
            });
        }
        Ok(())
    }

    fn eval_layers(&self, x: &ArrayView1<f64>, ablate_bias: bool) -> Result<Vec<Array1<f64>>> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_owned());
        for (index, layer) in self.layers.iter().enumerate() {
            let prev = acts.last().expect("non-empty activation trace");
            let next = match layer {
                Layer::Linear { weights, bias } => {
                    let mut out = prev.dot(weights);
                    if !ablate_bias {
                        out += bias;
                    }
                    out
                }
                Layer::Activation(kind) => prev.mapv(|v| kind.eval(v)),
            };
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    layer: index,
                    context: "forward",
                });
            }
            acts.push(next);
        }
        Ok(acts)
    }

    /// Forward pass recording every intermediate activation vector.
    /// `result[0]` is the input itself; `result.last()` is the model output.
    pub fn forward(&self, x: &ArrayView1<f64>) -> Result<Vec<Array1<f64>>> {
        self.eval_layers(x, false)
    }

    /// Forward pass of the bias-ablated network (every linear bias treated
    /// as zero), as used for reference activations.
    pub fn forward_reference(&self, x_ref: &ArrayView1<f64>) -> Result<Vec<Array1<f64>>> {
        self.eval_layers(x_ref, true)
    }

    /// Model output `M(x)`.
    pub fn output(&self, x: &ArrayView1<f64>) -> Result<Array1<f64>> {
        Ok(self
            .forward(x)?
            .pop()
            .expect("forward trace contains the output"))
    }

    /// Output of the bias-ablated network.
    pub fn output_reference(&self, x_ref: &ArrayView1<f64>) -> Result<Array1<f64>> {
        Ok(self
            .forward_reference(x_ref)?
            .pop()
            .expect("forward trace contains the output"))
    }

    /// Records activations for `x` and reference activations for `x_ref`.
    pub fn trace(&self, x: &ArrayView1<f64>, x_ref: &ArrayView1<f64>) -> Result<ForwardTrace> {
        Ok(ForwardTrace {
            activations: self.forward(x)?,
            ref_activations: self.forward_reference(x_ref)?,
        })
    }

    /// Returns a copy of the network with every linear bias set to zero.
    pub fn ablate_biases(&self) -> Network {
        let layers = self
            .layers
            .iter()
            .map(|layer| match layer {
                Layer::Linear { weights, bias } => Layer::Linear {
                    weights: weights.clone(),
                    bias: Array1::zeros(bias.len()),
                },
                Layer::Activation(kind) => Layer::Activation(*kind),
            })
            .collect();
        Network {
            layers,
            input_dim: self.input_dim,
            output_dim: self.output_dim,
        }
    }
}

/// Per-layer activations for an input and for the reference input run through
/// the bias-ablated network. Index 0 holds the (reference) input itself.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub activations: Vec<Array1<f64>>,
    pub ref_activations: Vec<Array1<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Array1<f64> {
        self.activations.last().expect("non-empty trace")
    }

    pub fn ref_output(&self) -> &Array1<f64> {
        self.ref_activations.last().expect("non-empty trace")
    }
}

/// Shape of randomly generated test networks.
#[derive(Debug, Clone)]
pub struct RandomNetConfig {
    pub max_linear_layers: usize,
    pub max_width: usize,
    pub activations: Vec<ActivationKind>,
    pub weight_scale: f64,
    pub bias_scale: f64,
}

impl Default for RandomNetConfig {
    fn default() -> Self {
        RandomNetConfig {
            max_linear_layers: 5,
            max_width: 16,
            activations: ActivationKind::ALL.to_vec(),
            weight_scale: 1.0,
            bias_scale: 0.5,
        }
    }
}

impl RandomNetConfig {
    pub fn bias_free(mut self) -> Self {
        self.bias_scale = 0.0;
        self
    }

    pub fn with_activations(mut self, kinds: &[ActivationKind]) -> Self {
        self.activations = kinds.to_vec();
        self
    }
}

/// Samples a random network with `1..=max_linear_layers` linear layers, an
/// activation drawn from the configured pool after every hidden linear layer,
/// and uniform weights in `[-weight_scale, weight_scale]`.
pub fn random_network<R: Rng + ?Sized>(
    rng: &mut R,
    input_dim: usize,
    output_dim: usize,
    config: &RandomNetConfig,
) -> Network {
    let n_linear = rng.gen_range(1..=config.max_linear_layers.max(1));
    let mut layers = Vec::new();
    let mut dim = input_dim;
    for li in 0..n_linear {
        let out = if li + 1 == n_linear {
            output_dim
        } else {
            rng.gen_range(1..=config.max_width.max(1))
        };
        let weights = Array2::from_shape_fn((dim, out), |_| {
            rng.gen_range(-config.weight_scale..=config.weight_scale)
        });
        let bias = Array1::from_shape_fn(out, |_| {
            if config.bias_scale > 0.0 {
                rng.gen_range(-config.bias_scale..=config.bias_scale)
            } else {
                0.0
            }
        });
        layers.push(Layer::Linear { weights, bias });
        dim = out;
        if li + 1 < n_linear {
            let kind = config.activations[rng.gen_range(0..config.activations.len())];
            layers.push(Layer::Activation(kind));
        }
    }
    Network::new(input_dim, layers).expect("generated layers chain by construction")
}
