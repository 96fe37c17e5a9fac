//! MLP training on the synthetic benchmark with AdamW.
//!
//! `train` fits `n_restarts` differently initialised models and returns the
//! one with the best validation RMSE. Training is deterministic given the
//! config seed.

use crate::activation::ActivationKind;
use crate::autodiff::{self, Loss};
use crate::error::{Error, Result};
use crate::network::{Layer, Network};
use crate::synth::SyntheticDataset;
use ndarray::{s, Array1, Array2, Axis};
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden_dims: Vec<usize>,
    pub activation: ActivationKind,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub n_restarts: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_dims: vec![16, 16],
            activation: ActivationKind::Relu,
            epochs: 300,
            learning_rate: 1e-3,
            weight_decay: 1e-2,
            batch_size: 128,
            seed: 0,
            n_restarts: 2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.n_restarts == 0 {
            return Err(Error::InvalidConfig(
                "epochs, batch_size and n_restarts must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "weight decay must be nonnegative, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestartReport {
    pub seed: u64,
    pub epoch_losses: Vec<f64>,
    pub val_rmse: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingReport {
    pub restarts: Vec<RestartReport>,
    pub best_restart: usize,
    pub val_rmse: f64,
    pub test_rmse: f64,
}

/// Builds an MLP `input -> hidden... -> output` with an activation layer
/// after every hidden linear layer. He-uniform init for ReLU, Xavier-uniform
/// otherwise; biases start at zero.
pub fn mlp<R: Rng + ?Sized>(
    input_dim: usize,
    hidden_dims: &[usize],
    output_dim: usize,
    activation: ActivationKind,
    rng: &mut R,
) -> Network {
    let mut layers = Vec::new();
    let mut dims = vec![input_dim];
    dims.extend_from_slice(hidden_dims);
    dims.push(output_dim);
    for w in 0..dims.len() - 1 {
        let (fan_in, fan_out) = (dims[w] as f64, dims[w + 1] as f64);
        let limit = if activation == ActivationKind::Relu {
            (6.0 / fan_in).sqrt()
        } else {
            (6.0 / (fan_in + fan_out)).sqrt()
        };
        let weights =
            Array2::from_shape_fn((dims[w], dims[w + 1]), |_| rng.gen_range(-limit..limit));
        layers.push(Layer::linear(weights, Array1::zeros(dims[w + 1])));
        if w + 2 < dims.len() {
            layers.push(Layer::activation(activation));
        }
    }
    Network::new(input_dim, layers).expect("mlp dims chain by construction")
}

struct AdamW {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
    step: usize,
    m: Vec<Array1<f64>>,
    v: Vec<Array1<f64>>,
}

impl AdamW {
    fn new(lr: f64, weight_decay: f64, param_sizes: &[usize]) -> Self {
        AdamW {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            m: param_sizes.iter().map(|&n| Array1::zeros(n)).collect(),
            v: param_sizes.iter().map(|&n| Array1::zeros(n)).collect(),
        }
    }

    fn step(&mut self, params: &mut [Array1<f64>], grads: &[Array1<f64>]) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            ndarray::Zip::from(p)
                .and(g)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                    *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *p -= self.lr * (m_hat / (v_hat.sqrt() + self.eps) + self.weight_decay * *p);
                });
        }
    }
}

/// Flattened view of an MLP's parameters for the optimiser.
struct MlpParams {
    input_dim: usize,
    shapes: Vec<(usize, usize)>,
    activation: ActivationKind,
    /// Interleaved flattened weights and biases per linear layer.
    params: Vec<Array1<f64>>,
}

impl MlpParams {
    fn from_network(net: Network) -> Self {
        let input_dim = net.input_dim();
        let mut shapes = Vec::new();
        let mut params = Vec::new();
        let mut activation = ActivationKind::Identity;
        for layer in net.into_layers() {
            match layer {
                Layer::Linear { weights, bias } => {
                    shapes.push(weights.dim());
                    params.push(Array1::from_iter(weights.into_iter()));
                    params.push(bias);
                }
                Layer::Activation(kind) => activation = kind,
            }
        }
        MlpParams {
            input_dim,
            shapes,
            activation,
            params,
        }
    }

    fn to_network(&self) -> Network {
        let mut layers = Vec::new();
        for (li, &(rows, cols)) in self.shapes.iter().enumerate() {
            let weights =
                Array2::from_shape_vec((rows, cols), self.params[2 * li].to_vec())
                    .expect("shape matches flattened length");
            layers.push(Layer::linear(weights, self.params[2 * li + 1].clone()));
            if li + 1 < self.shapes.len() {
                layers.push(Layer::activation(self.activation));
            }
        }
        Network::new(self.input_dim, layers).expect("parameter shapes chain")
    }

    fn sizes(&self) -> Vec<usize> {
        self.params.iter().map(Array1::len).collect()
    }
}

/// Root-mean-square error of the network's first output against `targets`
/// over the rows of `inputs`.
pub fn prediction_rmse(
    net: &Network,
    inputs: &ndarray::ArrayView2<f64>,
    targets: &ndarray::ArrayView1<f64>,
) -> Result<f64> {
    let mut sq = 0.0;
    for (x, &t) in inputs.axis_iter(Axis(0)).zip(targets.iter()) {
        let p = net.output(&x)?[0];
        sq += (p - t) * (p - t);
    }
    Ok((sq / inputs.nrows() as f64).sqrt())
}

/// Trains on the dataset's train split, selecting the restart with the best
/// validation RMSE. Returns the selected network and the full report.
pub fn train(dataset: &SyntheticDataset, config: &TrainConfig) -> Result<(Network, TrainingReport)> {
    config.validate()?;
    let inputs = dataset.model_inputs();
    let train_range = dataset.train_range();
    let val_range = dataset.val_range();
    let test_range = dataset.test_range();
    if train_range.is_empty() || val_range.is_empty() {
        return Err(Error::InvalidConfig(
            "dataset split has empty train or validation portion".into(),
        ));
    }

    let train_x = inputs.slice(s![train_range.clone(), ..]);
    let train_y = dataset.y.slice(s![train_range.clone()]);
    let val_x = inputs.slice(s![val_range.clone(), ..]);
    let val_y = dataset.y.slice(s![val_range]);

    let mut best: Option<(Network, usize, f64)> = None;
    let mut restarts = Vec::with_capacity(config.n_restarts);
    for restart in 0..config.n_restarts {
        let seed = config.seed.wrapping_add(restart as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = mlp(
            inputs.ncols(),
            &config.hidden_dims,
            1,
            config.activation,
            &mut rng,
        );
        let mut state = MlpParams::from_network(net);
        let mut optimizer = AdamW::new(config.learning_rate, config.weight_decay, &state.sizes());

        let mut order: Vec<usize> = train_range.clone().map(|i| i - train_range.start).collect();
        let n_train = order.len();
        let mut epoch_losses = Vec::with_capacity(config.epochs);
        let mut batch_x = Array2::zeros((config.batch_size.min(n_train), train_x.ncols()));
        let mut batch_y = Array2::zeros((config.batch_size.min(n_train), 1));
        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(config.batch_size) {
                for (row, &k) in chunk.iter().enumerate() {
                    batch_x.row_mut(row).assign(&train_x.row(k));
                    batch_y[[row, 0]] = train_y[k];
                }
                let bx = batch_x.slice(s![..chunk.len(), ..]);
                let by = batch_y.slice(s![..chunk.len(), ..]);
                let net = state.to_network();
                let loss = autodiff::batch_loss(&net, &bx, &by, Loss::Mse)?;
                if !loss.is_finite() {
                    return Err(Error::Diverged { epoch });
                }
                epoch_loss += loss * chunk.len() as f64;
                let grads = autodiff::grad_params(&net, &bx, &by, Loss::Mse)?;
                let flat: Vec<Array1<f64>> = grads
                    .layers
                    .into_iter()
                    .flatten()
                    .flat_map(|lin| {
                        [Array1::from_iter(lin.weights.into_iter()), lin.bias]
                    })
                    .collect();
                optimizer.step(&mut state.params, &flat);
            }
            epoch_losses.push(epoch_loss / n_train as f64);
        }

        let net = state.to_network();
        let val_rmse = prediction_rmse(&net, &val_x, &val_y)?;
        restarts.push(RestartReport {
            seed,
            epoch_losses,
            val_rmse,
        });
        if best.as_ref().map_or(true, |(_, _, b)| val_rmse < *b) {
            best = Some((net, restart, val_rmse));
        }
    }

    let (net, best_restart, val_rmse) = best.expect("at least one restart");
    let test_rmse = if test_range.is_empty() {
        f64::NAN
    } else {
        prediction_rmse(
            &net,
            &inputs.slice(s![test_range.clone(), ..]),
            &dataset.y.slice(s![test_range]),
        )?
    };
    Ok((
        net,
        TrainingReport {
            restarts,
            best_restart,
            val_rmse,
            test_rmse,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};
    use ndarray::s;

    fn quick_config() -> TrainConfig {
        TrainConfig {
            hidden_dims: vec![16],
            epochs: 150,
            learning_rate: 1e-2,
            n_restarts: 1,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn constant_zero_labels_are_fit_to_near_zero() {
        let mut ds = generate(&SynthConfig {
            n_samples: 600,
            seed: 9,
            ..SynthConfig::default()
        })
        .unwrap();
        ds.y.fill(0.0);
        let config = TrainConfig {
            epochs: 400,
            ..quick_config()
        };
        let (net, report) = train(&ds, &config).unwrap();
        assert!(report.test_rmse <= 1e-2, "test rmse {}", report.test_rmse);
        let out = net.output(&ds.model_inputs().row(0)).unwrap()[0];
        assert!(out.abs() < 0.1);
    }

    #[test]
    fn linear_architecture_recovers_the_generative_weights() {
        let ds = generate(&SynthConfig {
            n_samples: 2_000,
            conflict_likelihood: 0.0,
            seed: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        let config = TrainConfig {
            hidden_dims: vec![],
            epochs: 400,
            weight_decay: 0.0,
            n_restarts: 1,
            ..TrainConfig::default()
        };
        let (net, _) = train(&ds, &config).unwrap();

        // Closed-form least-squares oracle: with l = 0 the problem is
        // exactly linear in the continuous features (the cancellation
        // columns are identically zero, so they are excluded to keep the
        // normal equations nonsingular).
        let train_rows = ds.x.slice(s![ds.train_range(), ..]);
        let gram = train_rows.t().dot(&train_rows);
        let rhs = train_rows.t().dot(&ds.y.slice(s![ds.train_range()]));
        let ls = solve_spd(&gram.view(), &rhs.view());
        for i in 0..ds.dim() {
            assert!(
                (ls[i] - ds.weights[i]).abs() <= 0.05 * ds.weights[i].abs(),
                "least squares {} vs generative {}",
                ls[i],
                ds.weights[i]
            );
        }

        let Layer::Linear { weights, .. } = &net.layers()[0] else {
            panic!("linear-only architecture")
        };
        for i in 0..ds.dim() {
            let learned = weights[[i, 0]];
            assert!(
                (learned - ds.weights[i]).abs() <= 0.05 * ds.weights[i].abs(),
                "learned {} vs generative {}",
                learned,
                ds.weights[i]
            );
        }
    }

    // Gaussian elimination with partial pivoting; fine for tiny SPD systems.
    fn solve_spd(a: &ndarray::ArrayView2<f64>, b: &ndarray::ArrayView1<f64>) -> Array1<f64> {
        let n = a.nrows();
        let mut m = a.to_owned();
        let mut r = b.to_owned();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| m[[i, col]].abs().total_cmp(&m[[j, col]].abs()))
                .unwrap();
            if pivot != col {
                for k in 0..n {
                    m.swap([col, k], [pivot, k]);
                }
                r.swap(col, pivot);
            }
            for row in col + 1..n {
                let f = m[[row, col]] / m[[col, col]];
                for k in col..n {
                    m[[row, k]] -= f * m[[col, k]];
                }
                r[row] -= f * r[col];
            }
        }
        let mut x = Array1::zeros(n);
        for row in (0..n).rev() {
            let mut acc = r[row];
            for k in row + 1..n {
                acc -= m[[row, k]] * x[k];
            }
            x[row] = acc / m[[row, row]];
        }
        x
    }

    #[test]
    fn training_is_deterministic_given_the_seed() {
        let ds = generate(&SynthConfig {
            n_samples: 400,
            ..SynthConfig::default()
        })
        .unwrap();
        let config = TrainConfig {
            epochs: 10,
            ..quick_config()
        };
        let (_, a) = train(&ds, &config).unwrap();
        let (_, b) = train(&ds, &config).unwrap();
        assert_eq!(a.restarts[0].epoch_losses, b.restarts[0].epoch_losses);
        assert_eq!(a.val_rmse, b.val_rmse);
        assert_eq!(a.test_rmse, b.test_rmse);
    }

    #[test]
    fn reports_track_every_restart_and_select_the_best() {
        let ds = generate(&SynthConfig {
            n_samples: 400,
            ..SynthConfig::default()
        })
        .unwrap();
        let config = TrainConfig {
            epochs: 8,
            n_restarts: 3,
            ..quick_config()
        };
        let (_, report) = train(&ds, &config).unwrap();
        assert_eq!(report.restarts.len(), 3);
        let best = report
            .restarts
            .iter()
            .map(|r| r.val_rmse)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(report.val_rmse, best);
        assert_eq!(
            report.restarts[report.best_restart].val_rmse,
            report.val_rmse
        );
        for r in &report.restarts {
            assert_eq!(r.epoch_losses.len(), 8);
        }
    }

    #[test]
    fn invalid_train_configs_are_rejected() {
        let ds = generate(&SynthConfig {
            n_samples: 100,
            ..SynthConfig::default()
        })
        .unwrap();
        for config_mod in [
            (|c: &mut TrainConfig| c.epochs = 0) as fn(&mut TrainConfig),
            |c| c.learning_rate = 0.0,
            |c| c.batch_size = 0,
            |c| c.n_restarts = 0,
            |c| c.weight_decay = -1.0,
        ] {
            let mut config = quick_config();
            config_mod(&mut config);
            assert!(train(&ds, &config).is_err());
        }
    }
}
