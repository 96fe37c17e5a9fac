//! The two small example networks bundled with the CLI and used throughout
//! the test suite.

use crate::activation::ActivationKind;
use crate::network::{Layer, Network};
use ndarray::{array, Array1};

/// A 2-2-1 ReLU network computing binary XNOR via conflicting +/-1 weights
/// and a +1 output bias. At input (1, 1) both hidden pre-activations cancel
/// to zero and the output is carried entirely by the bias.
pub fn xnor_net() -> Network {
    Network::new(
        2,
        vec![
            Layer::linear(array![[1.0, -1.0], [-1.0, 1.0]], Array1::zeros(2)),
            Layer::activation(ActivationKind::Relu),
            Layer::linear(array![[-1.0], [-1.0]], array![1.0]),
        ],
    )
    .expect("static network is well-formed")
}

/// A single-neuron GELU network with weights (50, -51) and no bias. Large
/// opposing weights drive the pre-activation into GELU's flat negative tail,
/// which makes naive linearization overstate both features' effects.
pub fn gelu_net() -> Network {
    Network::new(
        2,
        vec![
            Layer::linear(array![[50.0], [-51.0]], Array1::zeros(1)),
            Layer::activation(ActivationKind::Gelu),
        ],
    )
    .expect("static network is well-formed")
}
