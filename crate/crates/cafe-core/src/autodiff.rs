//! Reverse-mode gradients over the recorded forward trace.
//!
//! The layer vocabulary is closed (linear and elementwise activation), so the
//! backward pass walks the trace directly instead of using a general tape.

use crate::error::{Error, Result};
use crate::network::{Layer, Network};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    Mse,
    BceWithLogits,
}

/// Gradients for the parameters of each linear layer, aligned with
/// `Network::layers` (activation layers hold `None`).
#[derive(Debug, Clone)]
pub struct ParamGrads {
    pub layers: Vec<Option<LinearGrads>>,
}

#[derive(Debug, Clone)]
pub struct LinearGrads {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Gradient of output `output_index` with respect to the input, evaluated by
/// backpropagating a one-hot seed through the recorded activations. The ReLU
/// subgradient at 0 is 0.
pub fn grad_input(net: &Network, x: &ArrayView1<f64>, output_index: usize) -> Result<Array1<f64>> {
    let acts = net.forward(x)?;
    Ok(backprop_from_seed(net, &acts, output_index))
}

/// Full input Jacobian, one row per input feature and one column per output.
pub fn input_jacobian(net: &Network, x: &ArrayView1<f64>) -> Result<Array2<f64>> {
    let acts = net.forward(x)?;
    let mut jac = Array2::zeros((net.input_dim(), net.output_dim()));
    for j in 0..net.output_dim() {
        let g = backprop_from_seed(net, &acts, j);
        jac.column_mut(j).assign(&g);
    }
    Ok(jac)
}

fn backprop_from_seed(net: &Network, acts: &[Array1<f64>], output_index: usize) -> Array1<f64> {
    let mut grad = Array1::zeros(net.output_dim());
    grad[output_index] = 1.0;
    for (index, layer) in net.layers().iter().enumerate().rev() {
        grad = match layer {
            Layer::Linear { weights, .. } => weights.dot(&grad),
            Layer::Activation(kind) => {
                let pre = &acts[index];
                &grad * &pre.mapv(|v| kind.derivative(v))
            }
        };
    }
    grad
}

fn loss_output_grad(loss: Loss, predicted: &Array1<f64>, target: &ArrayView1<f64>) -> Array1<f64> {
    match loss {
        // Per-sample loss: sum_j (y_hat_j - y_j)^2.
        Loss::Mse => (predicted - target).mapv(|d| 2.0 * d),
        // Per-sample loss: sum_j [softplus(z_j) - y_j * z_j].
        Loss::BceWithLogits => {
            predicted.iter().zip(target.iter()).map(|(&z, &y)| sigmoid(z) - y).collect()
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    crate::activation::ActivationKind::Sigmoid.eval(x)
}

/// Mean per-sample loss over a batch.
pub fn batch_loss(
    net: &Network,
    inputs: &ArrayView2<f64>,
    targets: &ArrayView2<f64>,
    loss: Loss,
) -> Result<f64> {
    check_batch(net, inputs, targets)?;
    let mut total = 0.0;
    for (x, y) in inputs.axis_iter(Axis(0)).zip(targets.axis_iter(Axis(0))) {
        let out = net.output(&x)?;
        total += match loss {
            Loss::Mse => out
                .iter()
                .zip(y.iter())
                .map(|(&p, &t)| (p - t) * (p - t))
                .sum::<f64>(),
            Loss::BceWithLogits => out
                .iter()
                .zip(y.iter())
                .map(|(&z, &t)| z.max(0.0) + (-z.abs()).exp().ln_1p() - t * z)
                .sum::<f64>(),
        };
    }
    Ok(total / inputs.nrows() as f64)
}

/// Mean-reduced gradients of the batch loss for every linear layer's weights
/// and bias.
pub fn grad_params(
    net: &Network,
    inputs: &ArrayView2<f64>,
    targets: &ArrayView2<f64>,
    loss: Loss,
) -> Result<ParamGrads> {
    check_batch(net, inputs, targets)?;
    let mut grads: Vec<Option<LinearGrads>> = net
        .layers()
        .iter()
        .map(|layer| match layer {
            Layer::Linear { weights, bias } => Some(LinearGrads {
                weights: Array2::zeros(weights.dim()),
                bias: Array1::zeros(bias.len()),
            }),
            Layer::Activation(_) => None,
        })
        .collect();

    for (x, y) in inputs.axis_iter(Axis(0)).zip(targets.axis_iter(Axis(0))) {
        let acts = net.forward(&x)?;
        let mut delta = loss_output_grad(loss, acts.last().expect("trace output"), &y);
        for (index, layer) in net.layers().iter().enumerate().rev() {
            match layer {
                Layer::Linear { weights, .. } => {
                    let a_in = &acts[index];
                    let slot = grads[index].as_mut().expect("linear layer has a grad slot");
                    // dW[i, j] += a_in[i] * delta[j]
                    for (i, &ai) in a_in.iter().enumerate() {
                        let mut row = slot.weights.row_mut(i);
                        row.scaled_add(ai, &delta);
                    }
                    slot.bias += &delta;
                    delta = weights.dot(&delta);
                }
                Layer::Activation(kind) => {
                    let pre = &acts[index];
                    delta = &delta * &pre.mapv(|v| kind.derivative(v));
                }
            }
        }
    }

    let n = inputs.nrows() as f64;
    for slot in grads.iter_mut().flatten() {
        slot.weights /= n;
        slot.bias /= n;
    }
    Ok(ParamGrads { layers: grads })
}

fn check_batch(net: &Network, inputs: &ArrayView2<f64>, targets: &ArrayView2<f64>) -> Result<()> {
    if inputs.nrows() == 0 {
        return Err(Error::EmptyBatch);
    }
    if inputs.ncols() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            layer: 0,
            context: "batch inputs",
            expected: net.input_dim(),
            actual: inputs.ncols(),
        });
    }
    if targets.nrows() != inputs.nrows() || targets.ncols() != net.output_dim() {
        return Err(Error::DimensionMismatch {
            layer: net.layers().len(),
            context: "batch targets",
            expected: net.output_dim(),
            actual: targets.ncols(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::examples::gelu_net;
    use crate::network::{random_network, RandomNetConfig};
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Axis};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn central_diff_grad(net: &Network, x: &Array1<f64>, j: usize, h: f64) -> Array1<f64> {
        Array1::from_shape_fn(x.len(), |f| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[f] += h;
            xm[f] -= h;
            (net.output(&xp.view()).unwrap()[j] - net.output(&xm.view()).unwrap()[j]) / (2.0 * h)
        })
    }

    #[test]
    fn gelu_net_gradient_matches_paper_figures() {
        let net = gelu_net();
        let x = array![2.0, 2.0];
        let g = grad_input(&net, &x.view(), 0).unwrap();
        // GELU'(-2) * (50, -51); Gradient*Input gives (-8.52, 8.69).
        assert_abs_diff_eq!(g[0] * 2.0, -8.523180107819691, epsilon = 1e-9);
        assert_abs_diff_eq!(g[1] * 2.0, 8.693643709976085, epsilon = 1e-9);
    }

    #[test]
    fn pure_linear_gradient_is_input_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = RandomNetConfig {
            activations: vec![ActivationKind::Identity],
            ..RandomNetConfig::default()
        };
        let net = random_network(&mut rng, 3, 2, &cfg);
        let a = grad_input(&net, &array![0.0, 0.0, 0.0].view(), 1).unwrap();
        let b = grad_input(&net, &array![5.0, -2.0, 0.7].view(), 1).unwrap();
        for (p, q) in a.iter().zip(b.iter()) {
            assert_abs_diff_eq!(p, q, epsilon = 1e-12);
        }
    }

    #[test]
    fn grad_input_matches_finite_differences_on_smooth_nets() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let cfg = RandomNetConfig {
            max_linear_layers: 3,
            max_width: 8,
            activations: ActivationKind::SMOOTH.to_vec(),
            ..RandomNetConfig::default()
        };
        for _ in 0..100 {
            let d0 = rng.gen_range(1..=4);
            let dl = rng.gen_range(1..=3);
            let net = random_network(&mut rng, d0, dl, &cfg);
            let x = Array1::from_shape_fn(d0, |_| rng.gen_range(-1.5..1.5));
            let j = rng.gen_range(0..dl);
            let ad = grad_input(&net, &x.view(), j).unwrap();
            let fd = central_diff_grad(&net, &x, j, 1e-5);
            for (a, n) in ad.iter().zip(fd.iter()) {
                let tol = 1e-6 * a.abs().max(n.abs()).max(1e-3);
                assert!((a - n).abs() <= tol, "ad {a} vs fd {n}");
            }
        }
    }

    #[test]
    fn gradient_is_linear_over_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = random_network(&mut rng, 4, 3, &RandomNetConfig::default());
        let x = Array1::from_shape_fn(4, |_| rng.gen_range(-1.0..1.0));
        let jac = input_jacobian(&net, &x.view()).unwrap();
        let summed = jac.sum_axis(Axis(1));
        let mut direct = Array1::zeros(4);
        for j in 0..3 {
            direct += &grad_input(&net, &x.view(), j).unwrap();
        }
        for (p, q) in summed.iter().zip(direct.iter()) {
            assert_abs_diff_eq!(p, q, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_neuron_mse_grads_have_closed_form() {
        let net = Network::new(
            3,
            vec![Layer::linear(
                array![[0.5], [-1.0], [2.0]],
                array![0.25],
            )],
        )
        .unwrap();
        let x = array![[1.0, 2.0, -1.0]];
        let y = array![[3.0]];
        let pred = net.output(&x.row(0)).unwrap()[0];
        let grads = grad_params(&net, &x.view(), &y.view(), Loss::Mse).unwrap();
        let lin = grads.layers[0].as_ref().unwrap();
        let residual = 2.0 * (pred - 3.0);
        for f in 0..3 {
            assert_abs_diff_eq!(lin.weights[[f, 0]], residual * x[[0, f]], epsilon = 1e-12);
        }
        assert_abs_diff_eq!(lin.bias[0], residual, epsilon = 1e-12);
    }

    #[test]
    fn zero_residual_batch_has_zero_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let net = random_network(&mut rng, 3, 2, &RandomNetConfig::default());
        let inputs = ndarray::Array2::from_shape_fn((4, 3), |_| rng.gen_range(-1.0..1.0));
        let mut targets = ndarray::Array2::zeros((4, 2));
        for (i, x) in inputs.axis_iter(Axis(0)).enumerate() {
            targets.row_mut(i).assign(&net.output(&x).unwrap());
        }
        let grads = grad_params(&net, &inputs.view(), &targets.view(), Loss::Mse).unwrap();
        for lin in grads.layers.iter().flatten() {
            assert!(lin.weights.iter().all(|&g| g.abs() < 1e-12));
            assert!(lin.bias.iter().all(|&g| g.abs() < 1e-12));
        }
    }

    #[test]
    fn param_grads_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let cfg = RandomNetConfig {
            max_linear_layers: 2,
            max_width: 5,
            activations: vec![ActivationKind::Tanh, ActivationKind::Gelu],
            ..RandomNetConfig::default()
        };
        for loss in [Loss::Mse, Loss::BceWithLogits] {
            let net = random_network(&mut rng, 3, 2, &cfg);
            let inputs = ndarray::Array2::from_shape_fn((5, 3), |_| rng.gen_range(-1.0..1.0));
            let targets = ndarray::Array2::from_shape_fn((5, 2), |_| {
                if loss == Loss::BceWithLogits {
                    f64::from(rng.gen_bool(0.5))
                } else {
                    rng.gen_range(-1.0..1.0)
                }
            });
            let analytic = grad_params(&net, &inputs.view(), &targets.view(), loss).unwrap();

            // Probe 20 random parameters with central differences.
            let h = 1e-6;
            for _ in 0..20 {
                let linear_indices: Vec<usize> = net
                    .layers()
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| matches!(l, Layer::Linear { .. }))
                    .map(|(i, _)| i)
                    .collect();
                let li = linear_indices[rng.gen_range(0..linear_indices.len())];
                let (rows, cols) = match &net.layers()[li] {
                    Layer::Linear { weights, .. } => weights.dim(),
                    Layer::Activation(_) => unreachable!(),
                };
                let probe_bias = rng.gen_bool(0.3);
                let (r, c) = (rng.gen_range(0..rows), rng.gen_range(0..cols));

                let perturbed = |delta: f64| -> f64 {
                    let layers: Vec<Layer> = net
                        .layers()
                        .iter()
                        .enumerate()
                        .map(|(i, l)| match l {
                            Layer::Linear { weights, bias } => {
                                let mut w = weights.clone();
                                let mut b = bias.clone();
                                if i == li {
                                    if probe_bias {
                                        b[c] += delta;
                                    } else {
                                        w[[r, c]] += delta;
                                    }
                                }
                                Layer::Linear { weights: w, bias: b }
                            }
                            Layer::Activation(k) => Layer::Activation(*k),
                        })
                        .collect();
                    let pnet = Network::new(3, layers).unwrap();
                    batch_loss(&pnet, &inputs.view(), &targets.view(), loss).unwrap()
                };
                let numeric = (perturbed(h) - perturbed(-h)) / (2.0 * h);
                let lin = analytic.layers[li].as_ref().unwrap();
                let a = if probe_bias { lin.bias[c] } else { lin.weights[[r, c]] };
                let tol = 1e-5 * a.abs().max(numeric.abs()).max(1e-3);
                assert!((a - numeric).abs() <= tol, "param grad {a} vs fd {numeric}");
            }
        }
    }

    #[test]
    fn empty_batch_is_rejected() {
        let net = gelu_net();
        let inputs = ndarray::Array2::<f64>::zeros((0, 2));
        let targets = ndarray::Array2::<f64>::zeros((0, 1));
        assert!(matches!(
            grad_params(&net, &inputs.view(), &targets.view(), Loss::Mse),
            Err(Error::EmptyBatch)
        ));
    }
}
