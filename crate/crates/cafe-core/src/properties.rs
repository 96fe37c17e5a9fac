//! Executable property checks for the attribution engine.
//!
//! `check_properties` runs randomized completeness, missingness,
//! nonnegativity, peak-flow completeness and linearity checks against a
//! network and reports the maximum observed violation per property.

use crate::cafe::{explain_detailed, ConflictConfig, ExplanationResult};
use crate::error::{Error, Result};
use crate::network::{Layer, Network};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub const TOL_COMPLETENESS: f64 = 1e-6;
pub const TOL_MISSINGNESS: f64 = 0.0;
pub const TOL_NONNEGATIVITY: f64 = 0.0;
pub const TOL_PEAK_FLOW: f64 = 1e-9;
pub const TOL_LINEARITY: f64 = 1e-9;

/// Test hook: lets the checker observe deliberately corrupted explanations,
/// so the suite itself can be validated by mutation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FaultInjection {
    #[default]
    None,
    /// Adds the offset to every positive score after explanation.
    ScoreOffset(f64),
}

#[derive(Debug, Clone)]
pub struct PropertyCheckConfig {
    pub trials: usize,
    pub seed: u64,
    pub fault: FaultInjection,
}

impl PropertyCheckConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        PropertyCheckConfig {
            trials,
            seed,
            fault: FaultInjection::None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertyResult {
    pub property: String,
    pub trials: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PropertyReport {
    pub results: Vec<PropertyResult>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    /// Folds another report in, keeping the worst violation per property.
    pub fn merge(&mut self, other: &PropertyReport) {
        for r in &other.results {
            match self.results.iter_mut().find(|m| m.property == r.property) {
                Some(mine) => {
                    mine.trials += r.trials;
                    if r.max_violation > mine.max_violation {
                        mine.max_violation = r.max_violation;
                    }
                    mine.passed &= r.passed;
                }
                None => self.results.push(r.clone()),
            }
        }
    }
}

struct Tracker {
    name: &'static str,
    trials: usize,
    max_violation: f64,
    tolerance: f64,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tracker {
            name,
            trials: 0,
            max_violation: 0.0,
            tolerance,
        }
    }

    fn observe(&mut self, violation: f64) {
        self.trials += 1;
        if violation > self.max_violation {
            self.max_violation = violation;
        }
    }

    fn result(self) -> PropertyResult {
        PropertyResult {
            property: self.name.into(),
            trials: self.trials,
            max_violation: self.max_violation,
            tolerance: self.tolerance,
            passed: self.max_violation <= self.tolerance,
        }
    }
}

fn apply_fault(result: &mut ExplanationResult, fault: FaultInjection) {
    if let FaultInjection::ScoreOffset(offset) = fault {
        result.pos.mapv_inplace(|v| v + offset);
    }
}

fn random_conflict<R: Rng + ?Sized>(net: &Network, rng: &mut R) -> ConflictConfig {
    let n = net.num_activation_layers();
    if n == 0 {
        ConflictConfig::uniform(rng.gen_range(0.0..=1.0)).expect("valid c")
    } else {
        ConflictConfig::per_layer((0..n).map(|_| rng.gen_range(0.0..=1.0)).collect())
            .expect("valid c")
    }
}

fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Array1<f64> {
    Array1::from_shape_fn(dim, |_| rng.sample::<f64, _>(StandardNormal))
}

/// Runs the full randomized property suite against `net`.
pub fn check_properties(net: &Network, config: &PropertyCheckConfig) -> Result<PropertyReport> {
    if config.trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let d0 = net.input_dim();
    let d_l = net.output_dim();

    let mut completeness = Tracker::new("completeness", TOL_COMPLETENESS);
    let mut missingness = Tracker::new("missingness", TOL_MISSINGNESS);
    let mut nonnegativity = Tracker::new("nonnegativity", TOL_NONNEGATIVITY);
    let mut peak_flow = Tracker::new("peak_flow_completeness", TOL_PEAK_FLOW);
    let mut linearity = Tracker::new("linearity", TOL_LINEARITY);

    for trial in 0..config.trials {
        let mut x = gaussian_vec(&mut rng, d0);
        let x_ref = gaussian_vec(&mut rng, d0);
        // Pin a random subset of features to the reference for missingness.
        let mut pinned = Vec::new();
        for f in 0..d0 {
            if rng.gen_bool(0.5) {
                x[f] = x_ref[f];
                pinned.push(f);
            }
        }
        let conflict = random_conflict(net, &mut rng);
        let (mut result, analyses) = explain_detailed(net, &x.view(), &x_ref.view(), &conflict)?;
        apply_fault(&mut result, config.fault);

        // Completeness: joint scores (bias included) sum to
        // M(x) - M_ref(x_ref) per output, relative tolerance.
        let out = net.output(&x.view())?;
        let ref_out = net.output_reference(&x_ref.view())?;
        let joint = result.joint();
        let mut worst = 0.0_f64;
        for j in 0..d_l {
            let total: f64 = (0..=d0).map(|f| joint[[f, j]]).sum();
            let target = out[j] - ref_out[j];
            let gap = (total - target).abs() / target.abs().max(1.0);
            worst = worst.max(gap);
        }
        completeness.observe(worst);

        // Missingness: pinned features carry exactly zero scores.
        let mut worst = 0.0_f64;
        for &f in &pinned {
            for j in 0..d_l {
                worst = worst.max(result.pos[[f, j]].abs());
                worst = worst.max(result.neg[[f, j]].abs());
            }
        }
        missingness.observe(worst);

        // Nonnegativity of every positive/negative score magnitude.
        let min = result
            .pos
            .iter()
            .chain(result.neg.iter())
            .fold(f64::INFINITY, |m, &v| m.min(v));
        nonnegativity.observe((-min).max(0.0));

        // Peak-flow completeness per activation neuron:
        // p(+,+) + p(-,+) - p(+,-) - p(-,-) equals the combined-effect
        // activation change against the reference activation.
        let mut worst = 0.0_f64;
        for a in &analyses {
            for j in 0..a.effects.combined.len() {
                let lhs = a.peaks.pos_to_pos[j] + a.peaks.neg_to_pos[j]
                    - a.peaks.pos_to_neg[j]
                    - a.peaks.neg_to_neg[j];
                let rhs = a.act_points.combined[j] - a.act_points.reference[j];
                worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
            }
        }
        peak_flow.observe(worst);

        // Linearity every few trials (it costs three explanations).
        if trial % 4 == 0 {
            let a = rng.gen_range(-2.0..2.0);
            let b = rng.gen_range(-2.0..2.0);
            let combined = combine_linear(net, net, a, b)?;
            let x2 = gaussian_vec(&mut rng, d0);
            let conflict2 = random_conflict(net, &mut rng);
            let joint_single =
                crate::cafe::explain(net, &x2.view(), &x_ref.view(), &conflict2)?.joint();
            let joint_combined =
                crate::cafe::explain(&combined, &x2.view(), &x_ref.view(), &conflict2)?.joint();
            let mut worst = 0.0_f64;
            for f in 0..=d0 {
                for j in 0..d_l {
                    let expect = a * joint_single[[f, j]] + b * joint_single[[f, j]];
                    let got = joint_combined[[f, j]];
                    worst = worst.max((got - expect).abs() / expect.abs().max(1.0));
                }
            }
            linearity.observe(worst);
        }
    }

    Ok(PropertyReport {
        results: vec![
            completeness.result(),
            missingness.result(),
            nonnegativity.result(),
            peak_flow.result(),
            linearity.result(),
        ],
    })
}

/// Builds the model `x -> a * m1(x) + b * m2(x)` as a single network: the
/// input is duplicated into both halves, every original layer is embedded
/// block-diagonally, and a final bias-free linear layer applies the
/// coefficients. Requires aligned layer kinds and equal input/output dims.
pub fn combine_linear(m1: &Network, m2: &Network, a: f64, b: f64) -> Result<Network> {
    if m1.input_dim() != m2.input_dim()
        || m1.output_dim() != m2.output_dim()
        || m1.layers().len() != m2.layers().len()
    {
        return Err(Error::InvalidConfig(
            "linear combination requires matching input/output dims and layer counts".into(),
        ));
    }
    let d0 = m1.input_dim();
    let mut layers = Vec::with_capacity(m1.layers().len() + 2);

    // Duplication layer: [I | I].
    let mut dup = Array2::zeros((d0, 2 * d0));
    for f in 0..d0 {
        dup[[f, f]] = 1.0;
        dup[[f, d0 + f]] = 1.0;
    }
    layers.push(Layer::linear(dup, Array1::zeros(2 * d0)));

    for (l1, l2) in m1.layers().iter().zip(m2.layers()) {
        match (l1, l2) {
            (
                Layer::Linear {
                    weights: w1,
                    bias: b1,
                },
                Layer::Linear {
                    weights: w2,
                    bias: b2,
                },
            ) => {
                let (r1, c1) = w1.dim();
                let (r2, c2) = w2.dim();
                let mut weights = Array2::zeros((r1 + r2, c1 + c2));
                weights.slice_mut(ndarray::s![..r1, ..c1]).assign(w1);
                weights.slice_mut(ndarray::s![r1.., c1..]).assign(w2);
                let mut bias = Array1::zeros(c1 + c2);
                bias.slice_mut(ndarray::s![..c1]).assign(b1);
                bias.slice_mut(ndarray::s![c1..]).assign(b2);
                layers.push(Layer::linear(weights, bias));
            }
            (Layer::Activation(k1), Layer::Activation(k2)) if k1 == k2 => {
                layers.push(Layer::activation(*k1));
            }
            _ => {
                return Err(Error::InvalidConfig(
                    "linear combination requires aligned layer kinds".into(),
                ));
            }
        }
    }

    // Output combination: [a * I; b * I].
    let d_l = m1.output_dim();
    let mut combine = Array2::zeros((2 * d_l, d_l));
    for j in 0..d_l {
        combine[[j, j]] = a;
        combine[[d_l + j, j]] = b;
    }
    layers.push(Layer::linear(combine, Array1::zeros(d_l)));
    Network::new(d0, layers)
}

/// Samples a second network with the same layer-kind structure as `net` but
/// fresh widths and weights, for linearity checks across distinct models.
pub fn random_structure_clone<R: Rng + ?Sized>(
    rng: &mut R,
    net: &Network,
    max_width: usize,
    weight_scale: f64,
) -> Network {
    let mut dim = net.input_dim();
    let n_linear = net
        .layers()
        .iter()
        .filter(|l| matches!(l, Layer::Linear { .. }))
        .count();
    let mut seen_linear = 0;
    let layers = net
        .layers()
        .iter()
        .map(|layer| match layer {
            Layer::Linear { weights, .. } => {
                seen_linear += 1;
                let out = if seen_linear == n_linear {
                    weights.ncols()
                } else {
                    rng.gen_range(1..=max_width)
                };
                let w = Array2::from_shape_fn((dim, out), |_| {
                    rng.gen_range(-weight_scale..=weight_scale)
                });
                let b = Array1::from_shape_fn(out, |_| rng.gen_range(-0.5..=0.5));
                dim = out;
                Layer::linear(w, b)
            }
            Layer::Activation(kind) => Layer::activation(*kind),
        })
        .collect();
    Network::new(net.input_dim(), layers).expect("cloned structure chains")
}
