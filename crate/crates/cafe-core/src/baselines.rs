//! Reference implementations of competing attribution methods.
//!
//! All methods return a single joint score per input feature for one output
//! neuron. Monte-Carlo methods take an explicit seed, so results are
//! reproducible regardless of call order or concurrency.

use crate::error::{Error, Result};
use crate::network::{Layer, Network};
use crate::autodiff;
use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const DEFAULT_IG_STEPS: usize = 128;
pub const DEFAULT_LRP_EPSILON: f64 = 1e-9;
pub const DEFAULT_DEEPLIFT_FALLBACK: f64 = 1e-7;
pub const DEFAULT_SMOOTHGRAD_SAMPLES: usize = 50;
pub const DEFAULT_SVS_PERMUTATIONS: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineMethod {
    /// Gradient of the selected output multiplied with the input.
    GradientInput,
    /// Epsilon-stabilised z-rule relevance propagation over pre-activations.
    LrpEpsilon { epsilon: f64 },
    /// Layerwise rescale multipliers `(f(z) - f(z_ref)) / (z - z_ref)` with a
    /// local-derivative fallback when `|z - z_ref|` drops below the threshold.
    DeepLiftRescale { fallback_threshold: f64 },
    /// Midpoint-Riemann average of path gradients times `(x - x_ref)`.
    IntegratedGradients { steps: usize },
    /// Average gradient over Gaussian-perturbed inputs, times the input.
    SmoothGrad {
        samples: usize,
        noise_std: f64,
        seed: u64,
    },
    /// Mean marginal contribution over sampled feature permutations, with
    /// absent features held at the reference input.
    ShapleyValueSampling { permutations: usize, seed: u64 },
}

impl BaselineMethod {
    pub fn gradient_input() -> Self {
        BaselineMethod::GradientInput
    }

    pub fn lrp() -> Self {
        BaselineMethod::LrpEpsilon {
            epsilon: DEFAULT_LRP_EPSILON,
        }
    }

    pub fn deeplift_rescale() -> Self {
        BaselineMethod::DeepLiftRescale {
            fallback_threshold: DEFAULT_DEEPLIFT_FALLBACK,
        }
    }

    pub fn integrated_gradients() -> Self {
        BaselineMethod::IntegratedGradients {
            steps: DEFAULT_IG_STEPS,
        }
    }

    pub fn smoothgrad(noise_std: f64, seed: u64) -> Self {
        BaselineMethod::SmoothGrad {
            samples: DEFAULT_SMOOTHGRAD_SAMPLES,
            noise_std,
            seed,
        }
    }

    pub fn shapley_value_sampling(seed: u64) -> Self {
        BaselineMethod::ShapleyValueSampling {
            permutations: DEFAULT_SVS_PERMUTATIONS,
            seed,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaselineMethod::GradientInput => "gi",
            BaselineMethod::LrpEpsilon { .. } => "lrp",
            BaselineMethod::DeepLiftRescale { .. } => "dl-rescale",
            BaselineMethod::IntegratedGradients { .. } => "ig",
            BaselineMethod::SmoothGrad { .. } => "smoothgrad",
            BaselineMethod::ShapleyValueSampling { .. } => "svs",
        }
    }

    /// Whether the method consumes the reference input. Methods that do not
    /// accept one simply disregard it.
    pub fn uses_reference(&self) -> bool {
        matches!(
            self,
            BaselineMethod::DeepLiftRescale { .. }
                | BaselineMethod::IntegratedGradients { .. }
                | BaselineMethod::ShapleyValueSampling { .. }
        )
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match *self {
            BaselineMethod::LrpEpsilon { epsilon } if epsilon <= 0.0 => {
                bad(format!("lrp epsilon must be positive, got {epsilon}"))
            }
            BaselineMethod::DeepLiftRescale { fallback_threshold } if fallback_threshold <= 0.0 => {
                bad(format!(
                    "deeplift fallback threshold must be positive, got {fallback_threshold}"
                ))
            }
            BaselineMethod::IntegratedGradients { steps } if steps == 0 => {
                bad("integrated gradients needs at least one step".into())
            }
            BaselineMethod::SmoothGrad {
                samples, noise_std, ..
            } if samples == 0 || noise_std < 0.0 => {
                bad("smoothgrad needs samples >= 1 and noise_std >= 0".into())
            }
            BaselineMethod::ShapleyValueSampling { permutations, .. } if permutations == 0 => {
                bad("shapley value sampling needs at least one permutation".into())
            }
            _ => Ok(()),
        }
    }
}

/// Computes the method's joint attribution scores for output `output_index`.
pub fn attribute(
    method: &BaselineMethod,
    net: &Network,
    x: &ArrayView1<f64>,
    x_ref: Option<&ArrayView1<f64>>,
    output_index: usize,
) -> Result<Array1<f64>> {
    method.validate()?;
    if output_index >= net.output_dim() {
        return Err(Error::DimensionMismatch {
            layer: net.layers().len(),
            context: "output index",
            expected: net.output_dim(),
            actual: output_index,
        });
    }
    let require_ref = || x_ref.ok_or(Error::MissingReference(method.name()));
    match *method {
        BaselineMethod::GradientInput => {
            let g = autodiff::grad_input(net, x, output_index)?;
            Ok(&g * x)
        }
        BaselineMethod::LrpEpsilon { epsilon } => lrp_epsilon(net, x, output_index, epsilon),
        BaselineMethod::DeepLiftRescale { fallback_threshold } => {
            deeplift_rescale(net, x, require_ref()?, output_index, fallback_threshold)
        }
        BaselineMethod::IntegratedGradients { steps } => {
            integrated_gradients(net, x, require_ref()?, output_index, steps)
        }
        BaselineMethod::SmoothGrad {
            samples,
            noise_std,
            seed,
        } => smoothgrad(net, x, output_index, samples, noise_std, seed),
        BaselineMethod::ShapleyValueSampling { permutations, seed } => {
            shapley_value_sampling(net, x, require_ref()?, output_index, permutations, seed)
        }
    }
}

/// Epsilon-stabilised z-rule: relevance seeded with the selected output value
/// and redistributed per linear layer proportionally to the signed
/// pre-activation contributions `a_i * w_ij`. Activation layers pass
/// relevance through unchanged; the bias's share is dropped.
fn lrp_epsilon(
    net: &Network,
    x: &ArrayView1<f64>,
    output_index: usize,
    epsilon: f64,
) -> Result<Array1<f64>> {
    let acts = net.forward(x)?;
    let mut relevance = Array1::zeros(net.output_dim());
    relevance[output_index] = acts.last().expect("trace output")[output_index];
    for (index, layer) in net.layers().iter().enumerate().rev() {
        if let Layer::Linear { weights, .. } = layer {
            let z = &acts[index + 1];
            let scaled = ndarray::Zip::from(&relevance)
                .and(z)
                .map_collect(|&r, &zj| r / (zj + epsilon * if zj >= 0.0 { 1.0 } else { -1.0 }));
            relevance = &weights.dot(&scaled) * &acts[index];
        }
    }
    Ok(relevance)
}

/// Rescale-rule multipliers chained like gradients; scores are the final
/// multipliers times `(x - x_ref)`. Reference activations come from the full
/// network (biases included) applied to the reference input.
fn deeplift_rescale(
    net: &Network,
    x: &ArrayView1<f64>,
    x_ref: &ArrayView1<f64>,
    output_index: usize,
    fallback_threshold: f64,
) -> Result<Array1<f64>> {
    let acts = net.forward(x)?;
    let ref_acts = net.forward(x_ref)?;
    let mut mult = Array1::zeros(net.output_dim());
    mult[output_index] = 1.0;
    for (index, layer) in net.layers().iter().enumerate().rev() {
        mult = match layer {
            Layer::Linear { weights, .. } => weights.dot(&mult),
            Layer::Activation(kind) => {
                let factor = ndarray::Zip::from(&acts[index])
                    .and(&ref_acts[index])
                    .map_collect(|&z, &zr| {
                        if (z - zr).abs() < fallback_threshold {
                            kind.derivative(z)
                        } else {
                            (kind.eval(z) - kind.eval(zr)) / (z - zr)
                        }
                    });
                &mult * &factor
            }
        };
    }
    Ok(&mult * &(x - x_ref))
}

/// Midpoint-Riemann integration of the gradient along the straight path from
/// the reference to the input.
fn integrated_gradients(
    net: &Network,
    x: &ArrayView1<f64>,
    x_ref: &ArrayView1<f64>,
    output_index: usize,
    steps: usize,
) -> Result<Array1<f64>> {
    let direction = x - x_ref;
    let mut grad_sum = Array1::zeros(x.len());
    for k in 0..steps {
        let t = (k as f64 + 0.5) / steps as f64;
        let point = x_ref + &(&direction * t);
        grad_sum += &autodiff::grad_input(net, &point.view(), output_index)?;
    }
    Ok(&(grad_sum / steps as f64) * &direction)
}

fn smoothgrad(
    net: &Network,
    x: &ArrayView1<f64>,
    output_index: usize,
    samples: usize,
    noise_std: f64,
    seed: u64,
) -> Result<Array1<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grad_sum = Array1::zeros(x.len());
    for _ in 0..samples {
        let noisy = Array1::from_shape_fn(x.len(), |f| {
            x[f] + noise_std * rng.sample::<f64, _>(StandardNormal)
        });
        grad_sum += &autodiff::grad_input(net, &noisy.view(), output_index)?;
    }
    Ok(&(grad_sum / samples as f64) * x)
}

fn shapley_value_sampling(
    net: &Network,
    x: &ArrayView1<f64>,
    x_ref: &ArrayView1<f64>,
    output_index: usize,
    permutations: usize,
    seed: u64,
) -> Result<Array1<f64>> {
    if x.len() != x_ref.len() {
        return Err(Error::DimensionMismatch {
            layer: 0,
            context: "reference input",
            expected: x.len(),
            actual: x_ref.len(),
        });
    }
    let d = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..d).collect();
    let mut contrib = Array1::zeros(d);
    for _ in 0..permutations {
        // Fisher-Yates shuffle.
        for i in (1..d).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let mut current = x_ref.to_owned();
        let mut prev = net.output(&current.view())?[output_index];
        for &f in &order {
            current[f] = x[f];
            let out = net.output(&current.view())?[output_index];
            contrib[f] += out - prev;
            prev = out;
        }
    }
    Ok(contrib / permutations as f64)
}

/// Exhaustive Shapley values over all `d!` feature permutations. Only
/// tractable for a handful of features; used as an oracle for the sampler.
pub fn shapley_exact(
    net: &Network,
    x: &ArrayView1<f64>,
    x_ref: &ArrayView1<f64>,
    output_index: usize,
) -> Result<Array1<f64>> {
    let d = x.len();
    let mut contrib = Array1::zeros(d);
    let mut order: Vec<usize> = (0..d).collect();
    let mut count = 0usize;
    permute(&mut order, 0, &mut |perm| {
        count += 1;
        let mut current = x_ref.to_owned();
        let mut prev = net.output(&current.view()).expect("forward")[output_index];
        for &f in perm {
            current[f] = x[f];
            let out = net.output(&current.view()).expect("forward")[output_index];
            contrib[f] += out - prev;
            prev = out;
        }
    });
    Ok(contrib / count as f64)
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}
