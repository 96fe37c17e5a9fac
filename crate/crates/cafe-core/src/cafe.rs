//! The conflict-aware attribution engine.
//!
//! Attribution state is propagated through the network in a single augmented
//! forward pass. Each neuron carries separate nonnegative positive/negative
//! score magnitudes for every input feature and for the accumulated biases.
//! Linear layers move scores along sign-split weights; activation layers
//! redistribute them with multipliers derived from the activation function's
//! behaviour over the interval spanned by the competing positive and negative
//! input effects.
//!
//! The conflict sensitivity constant `c` of each activation layer blends two
//! flow estimates: at `c = 0` scores follow a clipped linear approximation of
//! the activation on its active interval (focused, gradient-like scores); at
//! `c = 1` they follow the peak flows, which also surface the hypothetical
//! effects of features that cancelled each other out.

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::network::{ForwardTrace, Layer, Network};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

/// Conflict sensitivity schedule plus the numeric stabiliser.
///
/// Per-layer constants are addressed by activation-layer ordinal (the first,
/// second, ... activation layer of the network); a scalar is broadcast to all
/// activation layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictConfig {
    schedule: ConflictSchedule,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum ConflictSchedule {
    Uniform(f64),
    PerLayer(Vec<f64>),
}

pub const DEFAULT_EPSILON: f64 = 1e-10;

impl ConflictConfig {
    /// One conflict sensitivity constant for every activation layer.
    pub fn uniform(c: f64) -> Result<Self> {
        check_c(c)?;
        Ok(ConflictConfig {
            schedule: ConflictSchedule::Uniform(c),
            epsilon: DEFAULT_EPSILON,
        })
    }

    /// One constant per activation layer, by ordinal.
    pub fn per_layer(cs: Vec<f64>) -> Result<Self> {
        if cs.is_empty() {
            return Err(Error::InvalidConfig(
                "per-layer conflict list must not be empty".into(),
            ));
        }
        for &c in &cs {
            check_c(c)?;
        }
        Ok(ConflictConfig {
            schedule: ConflictSchedule::PerLayer(cs),
            epsilon: DEFAULT_EPSILON,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be a positive finite number, got {epsilon}"
            )));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    /// Resolves the constant for the activation layer with the given ordinal.
    pub fn c_for(&self, ordinal: usize, total: usize) -> Result<f64> {
        match &self.schedule {
            ConflictSchedule::Uniform(c) => Ok(*c),
            ConflictSchedule::PerLayer(cs) => {
                if cs.len() != total {
                    return Err(Error::InvalidConfig(format!(
                        "per-layer conflict list has {} entries but the network has {} activation layers",
                        cs.len(),
                        total
                    )));
                }
                Ok(cs[ordinal])
            }
        }
    }

    /// The resolved constants for a network with `total` activation layers.
    pub fn resolve(&self, total: usize) -> Result<Vec<f64>> {
        (0..total).map(|i| self.c_for(i, total)).collect()
    }
}

fn check_c(c: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidConfig(format!(
            "conflict sensitivity must lie in [0, 1], got {c}"
        )));
    }
    Ok(())
}

/// Layerwise attribution state: nonnegative score magnitudes per feature
/// (rows) and neuron (columns), plus bias score vectors.
#[derive(Debug, Clone)]
pub struct AttributionState {
    pub feat_pos: Array2<f64>,
    pub feat_neg: Array2<f64>,
    pub bias_pos: Array1<f64>,
    pub bias_neg: Array1<f64>,
}

impl AttributionState {
    pub fn width(&self) -> usize {
        self.feat_pos.ncols()
    }

    pub fn num_features(&self) -> usize {
        self.feat_pos.nrows()
    }
}

/// Total positive, negative and combined deviations of each neuron's
/// pre-activation from its reference pre-activation. `neg` is stored signed
/// (entrywise <= 0) and `combined == pos + neg`.
#[derive(Debug, Clone)]
pub struct EffectTriple {
    pub pos: Array1<f64>,
    pub neg: Array1<f64>,
    pub combined: Array1<f64>,
}

/// Activation values at the four pre-activation points of interest.
#[derive(Debug, Clone)]
pub struct ActPoints {
    pub pos: Array1<f64>,
    pub neg: Array1<f64>,
    pub combined: Array1<f64>,
    pub reference: Array1<f64>,
}

/// Rectified activation deltas per neuron, split by target effect and slope
/// direction. All entries are nonnegative and for each target at most one of
/// the up/down entries is nonzero.
#[derive(Debug, Clone)]
pub struct DeltaSet {
    pub combined_up: Array1<f64>,
    pub combined_down: Array1<f64>,
    pub pos_up: Array1<f64>,
    pub pos_down: Array1<f64>,
    pub neg_up: Array1<f64>,
    pub neg_down: Array1<f64>,
}

/// A quadruple of per-neuron flows indexed by input sign -> output sign.
#[derive(Debug, Clone)]
pub struct FlowSet {
    pub pos_to_pos: Array1<f64>,
    pub neg_to_pos: Array1<f64>,
    pub pos_to_neg: Array1<f64>,
    pub neg_to_neg: Array1<f64>,
}

/// Everything the activation rule derives at one activation layer.
#[derive(Debug, Clone)]
pub struct ActivationAnalysis {
    /// Index of the activation layer within `Network::layers`.
    pub layer_index: usize,
    /// Ordinal among activation layers (0-based).
    pub ordinal: usize,
    pub c: f64,
    pub effects: EffectTriple,
    pub act_points: ActPoints,
    pub deltas: DeltaSet,
    pub peaks: FlowSet,
    pub linear: FlowSet,
    pub multipliers: FlowSet,
}

/// Final attribution scores: `(d0 + 1) x d_L` matrices with one row per input
/// feature and the bias row last.
#[derive(Debug, Clone)]
pub struct ExplanationResult {
    pub pos: Array2<f64>,
    pub neg: Array2<f64>,
    pub meta: ExplanationMeta,
}

#[derive(Debug, Clone)]
pub struct ExplanationMeta {
    /// Conflict sensitivity constants as resolved per activation layer.
    pub conflict: Vec<f64>,
    pub epsilon: f64,
    pub reference: Array1<f64>,
}

impl ExplanationResult {
    /// Joint scores `pos - neg`, including the bias row.
    pub fn joint(&self) -> Array2<f64> {
        &self.pos - &self.neg
    }

    /// Joint scores for the input features only (bias row dropped).
    pub fn feature_joint(&self) -> Array2<f64> {
        let d0 = self.pos.nrows() - 1;
        self.pos.slice(ndarray::s![..d0, ..]).to_owned()
            - self.neg.slice(ndarray::s![..d0, ..])
    }

    pub fn num_features(&self) -> usize {
        self.pos.nrows() - 1
    }

    pub fn num_outputs(&self) -> usize {
        self.pos.ncols()
    }
}

/// Input layer rule: scores are the sign-split differences between the input
/// and the reference input, diagonal per feature; bias scores start at zero.
pub fn input_rule(x: &ArrayView1<f64>, x_ref: &ArrayView1<f64>) -> Result<AttributionState> {
    if x.len() != x_ref.len() {
        return Err(Error::DimensionMismatch {
            layer: 0,
            context: "reference input",
            expected: x.len(),
            actual: x_ref.len(),
        });
    }
    let d = x.len();
    let mut feat_pos = Array2::zeros((d, d));
    let mut feat_neg = Array2::zeros((d, d));
    for f in 0..d {
        let diff = x[f] - x_ref[f];
        feat_pos[[f, f]] = diff.max(0.0);
        feat_neg[[f, f]] = (-diff).max(0.0);
    }
    Ok(AttributionState {
        feat_pos,
        feat_neg,
        bias_pos: Array1::zeros(d),
        bias_neg: Array1::zeros(d),
    })
}

/// Linear layer rule: a sign-split forward pass. Positive target scores
/// collect positive scores along positive weights and negative scores along
/// negative weights (and vice versa); bias scores additionally absorb the
/// sign-split layer bias.
pub fn linear_rule(
    state: &AttributionState,
    weights: &ArrayView2<f64>,
    bias: &ArrayView1<f64>,
) -> Result<AttributionState> {
    if state.width() != weights.nrows() {
        return Err(Error::DimensionMismatch {
            layer: 0,
            context: "attribution state width",
            expected: weights.nrows(),
            actual: state.width(),
        });
    }
    let w_pos = weights.mapv(|w| w.max(0.0));
    let w_neg = weights.mapv(|w| (-w).max(0.0));
    Ok(linear_rule_split(state, &w_pos, &w_neg, bias))
}

fn linear_rule_split(
    state: &AttributionState,
    w_pos: &Array2<f64>,
    w_neg: &Array2<f64>,
    bias: &ArrayView1<f64>,
) -> AttributionState {
    let feat_pos = state.feat_pos.dot(w_pos) + state.feat_neg.dot(w_neg);
    let feat_neg = state.feat_pos.dot(w_neg) + state.feat_neg.dot(w_pos);
    let bias_pos =
        state.bias_pos.dot(w_pos) + state.bias_neg.dot(w_neg) + bias.mapv(|b| b.max(0.0));
    let bias_neg =
        state.bias_pos.dot(w_neg) + state.bias_neg.dot(w_pos) + bias.mapv(|b| (-b).max(0.0));
    AttributionState {
        feat_pos,
        feat_neg,
        bias_pos,
        bias_neg,
    }
}

/// Column sums of the state, signed: `pos >= 0`, `neg <= 0`,
/// `combined = pos + neg`.
pub fn input_effects(state: &AttributionState) -> EffectTriple {
    let pos = state.feat_pos.sum_axis(Axis(0)) + &state.bias_pos;
    let neg = (state.feat_neg.sum_axis(Axis(0)) + &state.bias_neg).mapv(|v| -v);
    let combined = &pos + &neg;
    EffectTriple { pos, neg, combined }
}

/// Evaluates the activation at the reference, positive-effect,
/// negative-effect and combined-effect pre-activation points.
pub fn act_points(
    effects: &EffectTriple,
    ref_preact: &ArrayView1<f64>,
    kind: ActivationKind,
) -> ActPoints {
    let eval = |shift: &Array1<f64>| (ref_preact + shift).mapv(|v| kind.eval(v));
    ActPoints {
        pos: eval(&effects.pos),
        neg: eval(&effects.neg),
        combined: eval(&effects.combined),
        reference: ref_preact.mapv(|v| kind.eval(v)),
    }
}

/// Rectified activation deltas over the intervals spanned by adjacent points
/// of interest. The interval pairing switches on the sign of the combined
/// effect because that sign determines the ordering of the four points.
pub fn rectified_deltas(
    effects: &EffectTriple,
    ref_preact: &ArrayView1<f64>,
    kind: ActivationKind,
) -> DeltaSet {
    let points = act_points(effects, ref_preact, kind);
    rectified_deltas_from_points(effects, &points)
}

pub fn rectified_deltas_from_points(effects: &EffectTriple, points: &ActPoints) -> DeltaSet {
    let n = effects.combined.len();
    let mut deltas = DeltaSet {
        combined_up: Array1::zeros(n),
        combined_down: Array1::zeros(n),
        pos_up: Array1::zeros(n),
        pos_down: Array1::zeros(n),
        neg_up: Array1::zeros(n),
        neg_down: Array1::zeros(n),
    };
    for j in 0..n {
        let (a_pos, a_neg, a_comb, a_ref) = (
            points.pos[j],
            points.neg[j],
            points.combined[j],
            points.reference[j],
        );
        // (from, to) in increasing pre-activation order for each target.
        let [(c_from, c_to), (p_from, p_to), (n_from, n_to)] = if effects.combined[j] >= 0.0 {
            [(a_ref, a_comb), (a_comb, a_pos), (a_neg, a_ref)]
        } else {
            [(a_comb, a_ref), (a_ref, a_pos), (a_neg, a_comb)]
        };
        deltas.combined_up[j] = (c_to - c_from).max(0.0);
        deltas.combined_down[j] = (c_from - c_to).max(0.0);
        deltas.pos_up[j] = (p_to - p_from).max(0.0);
        deltas.pos_down[j] = (p_from - p_to).max(0.0);
        deltas.neg_up[j] = (n_to - n_from).max(0.0);
        deltas.neg_down[j] = (n_from - n_to).max(0.0);
    }
    deltas
}

/// Peak attribution flows: the combined-effect delta, counted towards the
/// matching target sign only, plus the larger of the hypothetical
/// positive/negative-effect deltas (cancelled effects never arise together).
pub fn peak_flows(deltas: &DeltaSet, effects: &EffectTriple) -> FlowSet {
    let n = effects.combined.len();
    let mut flows = FlowSet {
        pos_to_pos: Array1::zeros(n),
        neg_to_pos: Array1::zeros(n),
        pos_to_neg: Array1::zeros(n),
        neg_to_neg: Array1::zeros(n),
    };
    for j in 0..n {
        let ind_pos = f64::from(effects.combined[j] >= 0.0);
        let ind_neg = f64::from(-effects.combined[j] >= 0.0);
        let hyp_up = deltas.pos_up[j].max(deltas.neg_up[j]);
        let hyp_down = deltas.pos_down[j].max(deltas.neg_down[j]);
        flows.pos_to_pos[j] = ind_pos * deltas.combined_up[j] + hyp_up;
        flows.neg_to_pos[j] = ind_neg * deltas.combined_down[j] + hyp_down;
        flows.pos_to_neg[j] = ind_pos * deltas.combined_down[j] + hyp_down;
        flows.neg_to_neg[j] = ind_neg * deltas.combined_up[j] + hyp_up;
    }
    flows
}

/// Ratio with the `0 / 0 = 0` convention made exact: a zero numerator
/// short-circuits instead of dividing by the stabilised denominator.
fn stabilised_ratio(numerator: f64, denominator_magnitude: f64, epsilon: f64) -> f64 {
    if numerator == 0.0 {
        0.0
    } else {
        numerator / (denominator_magnitude + epsilon)
    }
}

/// Clipped linear attribution flows: the linear approximation of the
/// activation over its active interval, redistributed by effect magnitude and
/// capped by the peak flows to prevent attribution explosion.
pub fn clipped_linear_flows(
    deltas: &DeltaSet,
    effects: &EffectTriple,
    peaks: &FlowSet,
    epsilon: f64,
) -> FlowSet {
    let n = effects.combined.len();
    let mut flows = FlowSet {
        pos_to_pos: Array1::zeros(n),
        neg_to_pos: Array1::zeros(n),
        pos_to_neg: Array1::zeros(n),
        neg_to_neg: Array1::zeros(n),
    };
    for j in 0..n {
        let comb_mag = effects.combined[j].abs();
        let lin = |mag: f64, delta: f64, peak: f64| -> f64 {
            stabilised_ratio(mag * delta, comb_mag, epsilon).min(peak)
        };
        let pos_mag = effects.pos[j].abs();
        let neg_mag = effects.neg[j].abs();
        flows.pos_to_pos[j] = lin(pos_mag, deltas.combined_up[j], peaks.pos_to_pos[j]);
        flows.neg_to_pos[j] = lin(neg_mag, deltas.combined_down[j], peaks.neg_to_pos[j]);
        flows.pos_to_neg[j] = lin(pos_mag, deltas.combined_down[j], peaks.pos_to_neg[j]);
        flows.neg_to_neg[j] = lin(neg_mag, deltas.combined_up[j], peaks.neg_to_neg[j]);
    }
    flows
}

/// Attribution multipliers: the `c`-blend of linear and peak flows,
/// normalised by the corresponding input effect magnitude.
pub fn multipliers(
    linear: &FlowSet,
    peaks: &FlowSet,
    effects: &EffectTriple,
    c: f64,
    epsilon: f64,
) -> FlowSet {
    let n = effects.combined.len();
    let mut mult = FlowSet {
        pos_to_pos: Array1::zeros(n),
        neg_to_pos: Array1::zeros(n),
        pos_to_neg: Array1::zeros(n),
        neg_to_neg: Array1::zeros(n),
    };
    for j in 0..n {
        let blend = |l: f64, p: f64, mag: f64| -> f64 {
            stabilised_ratio((1.0 - c) * l + c * p, mag, epsilon)
        };
        let pos_mag = effects.pos[j].abs();
        let neg_mag = effects.neg[j].abs();
        mult.pos_to_pos[j] = blend(linear.pos_to_pos[j], peaks.pos_to_pos[j], pos_mag);
        mult.neg_to_pos[j] = blend(linear.neg_to_pos[j], peaks.neg_to_pos[j], neg_mag);
        mult.pos_to_neg[j] = blend(linear.pos_to_neg[j], peaks.pos_to_neg[j], pos_mag);
        mult.neg_to_neg[j] = blend(linear.neg_to_neg[j], peaks.neg_to_neg[j], neg_mag);
    }
    mult
}

/// Runs the full activation rule for one activation layer, returning the
/// derived per-neuron quantities.
pub fn analyze_activation_layer(
    state: &AttributionState,
    ref_preact: &ArrayView1<f64>,
    kind: ActivationKind,
    c: f64,
    epsilon: f64,
) -> Result<ActivationAnalysis> {
    if state.width() != ref_preact.len() {
        return Err(Error::DimensionMismatch {
            layer: 0,
            context: "activation state width",
            expected: ref_preact.len(),
            actual: state.width(),
        });
    }
    let effects = input_effects(state);
    let points = act_points(&effects, ref_preact, kind);
    for arr in [&points.pos, &points.neg, &points.combined, &points.reference] {
        if arr.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                layer: 0,
                context: "activation rule",
            });
        }
    }
    let deltas = rectified_deltas_from_points(&effects, &points);
    let peaks = peak_flows(&deltas, &effects);
    let linear = clipped_linear_flows(&deltas, &effects, &peaks, epsilon);
    let mult = multipliers(&linear, &peaks, &effects, c, epsilon);
    Ok(ActivationAnalysis {
        layer_index: 0,
        ordinal: 0,
        c,
        effects,
        act_points: points,
        deltas,
        peaks,
        linear,
        multipliers: mult,
    })
}

/// Activation layer rule: every feature and bias score is redistributed
/// neuronwise by the attribution multipliers.
pub fn activation_rule(
    state: &AttributionState,
    ref_preact: &ArrayView1<f64>,
    kind: ActivationKind,
    c: f64,
    epsilon: f64,
) -> Result<AttributionState> {
    let analysis = analyze_activation_layer(state, ref_preact, kind, c, epsilon)?;
    Ok(apply_multipliers(state, &analysis.multipliers))
}

fn apply_multipliers(state: &AttributionState, m: &FlowSet) -> AttributionState {
    AttributionState {
        feat_pos: &state.feat_pos * &m.pos_to_pos + &state.feat_neg * &m.neg_to_pos,
        feat_neg: &state.feat_pos * &m.pos_to_neg + &state.feat_neg * &m.neg_to_neg,
        bias_pos: &state.bias_pos * &m.pos_to_pos + &state.bias_neg * &m.neg_to_pos,
        bias_neg: &state.bias_pos * &m.pos_to_neg + &state.bias_neg * &m.neg_to_neg,
    }
}

/// Reusable explanation pass over one network and reference input.
///
/// Construction computes the reference trace and the sign-split weights once;
/// `explain` then runs the augmented forward pass per sample. An `Explainer`
/// is immutable and can be shared across threads for batched explanation.
pub struct Explainer<'a> {
    net: &'a Network,
    config: ConflictConfig,
    conflict: Vec<f64>,
    x_ref: Array1<f64>,
    ref_acts: Vec<Array1<f64>>,
    split_weights: Vec<Option<(Array2<f64>, Array2<f64>)>>,
}

impl<'a> Explainer<'a> {
    pub fn new(net: &'a Network, x_ref: &ArrayView1<f64>, config: ConflictConfig) -> Result<Self> {
        let conflict = config.resolve(net.num_activation_layers())?;
        let ref_acts = net.forward_reference(x_ref)?;
        let split_weights = net
            .layers()
            .iter()
            .map(|layer| match layer {
                Layer::Linear { weights, .. } => Some((
                    weights.mapv(|w| w.max(0.0)),
                    weights.mapv(|w| (-w).max(0.0)),
                )),
                Layer::Activation(_) => None,
            })
            .collect();
        Ok(Explainer {
            net,
            config,
            conflict,
            x_ref: x_ref.to_owned(),
            ref_acts,
            split_weights,
        })
    }

    pub fn reference(&self) -> &Array1<f64> {
        &self.x_ref
    }

    pub fn explain(&self, x: &ArrayView1<f64>) -> Result<ExplanationResult> {
        self.run(x, false).map(|(result, _)| result)
    }

    /// As `explain`, additionally returning the per-activation-layer
    /// analysis (effects, deltas, flows and multipliers).
    pub fn explain_detailed(
        &self,
        x: &ArrayView1<f64>,
    ) -> Result<(ExplanationResult, Vec<ActivationAnalysis>)> {
        self.run(x, true)
    }

    fn run(
        &self,
        x: &ArrayView1<f64>,
        detailed: bool,
    ) -> Result<(ExplanationResult, Vec<ActivationAnalysis>)> {
        if x.len() != self.net.input_dim() {
            return Err(Error::DimensionMismatch {
                layer: 0,
                context: "input",
                expected: self.net.input_dim(),
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                layer: 0,
                context: "input",
            });
        }
        let mut state = input_rule(x, &self.x_ref.view())?;
        let mut analyses = Vec::new();
        let mut ordinal = 0usize;
        for (index, layer) in self.net.layers().iter().enumerate() {
            match layer {
                Layer::Linear { bias, .. } => {
                    let (w_pos, w_neg) = self.split_weights[index]
                        .as_ref()
                        .expect("linear layer has split weights");
                    state = linear_rule_split(&state, w_pos, w_neg, &bias.view());
                }
                Layer::Activation(kind) => {
                    let c = self.conflict[ordinal];
                    let ref_preact = &self.ref_acts[index];
                    let mut analysis = analyze_activation_layer(
                        &state,
                        &ref_preact.view(),
                        *kind,
                        c,
                        self.config.epsilon,
                    )
                    .map_err(|e| match e {
                        Error::NonFinite { context, .. } => Error::NonFinite {
                            layer: index,
                            context,
                        },
                        other => other,
                    })?;
                    state = apply_multipliers(&state, &analysis.multipliers);
                    if detailed {
                        analysis.layer_index = index;
                        analysis.ordinal = ordinal;
                        analyses.push(analysis);
                    }
                    ordinal += 1;
                }
            }
        }

        let d0 = self.net.input_dim();
        let d_l = self.net.output_dim();
        let mut pos = Array2::zeros((d0 + 1, d_l));
        let mut neg = Array2::zeros((d0 + 1, d_l));
        pos.slice_mut(ndarray::s![..d0, ..]).assign(&state.feat_pos);
        neg.slice_mut(ndarray::s![..d0, ..]).assign(&state.feat_neg);
        pos.row_mut(d0).assign(&state.bias_pos);
        neg.row_mut(d0).assign(&state.bias_neg);
        debug_assert!(pos.iter().chain(neg.iter()).all(|&v| v >= 0.0));
        let result = ExplanationResult {
            pos,
            neg,
            meta: ExplanationMeta {
                conflict: self.conflict.clone(),
                epsilon: self.config.epsilon,
                reference: self.x_ref.clone(),
            },
        };
        Ok((result, analyses))
    }
}

/// One-shot explanation of `net` at `x` against `x_ref`.
pub fn explain(
    net: &Network,
    x: &ArrayView1<f64>,
    x_ref: &ArrayView1<f64>,
    config: &ConflictConfig,
) -> Result<ExplanationResult> {
    Explainer::new(net, x_ref, config.clone())?.explain(x)
}

/// One-shot detailed explanation; see `Explainer::explain_detailed`.
pub fn explain_detailed(
    net: &Network,
    x: &ArrayView1<f64>,
    x_ref: &ArrayView1<f64>,
    config: &ConflictConfig,
) -> Result<(ExplanationResult, Vec<ActivationAnalysis>)> {
    Explainer::new(net, x_ref, config.clone())?.explain_detailed(x)
}

/// Convenience access to the trace an explanation conceptually runs over.
pub fn explanation_trace(
    net: &Network,
    x: &ArrayView1<f64>,
    x_ref: &ArrayView1<f64>,
) -> Result<ForwardTrace> {
    net.trace(x, x_ref)
}
