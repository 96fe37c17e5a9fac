//! Synthetic conflict benchmark data.
//!
//! Each sample pairs `D` continuous features with `D` binary cancellation
//! features. A cancellation feature, when set, nullifies the label
//! contribution of its continuous partner:
//!
//! `y = sum_i [c_i == 0] * w_i * x_i`
//!
//! which yields generative ground-truth attribution scores: `w_i * x_i` for
//! continuous feature `i` and `-[c_i == 1] * w_i * x_i` for its cancellation
//! feature.

use crate::error::{Error, Result};
use ndarray::{concatenate, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::ops::Range;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Number of continuous features `D` (the sample dimension is `2 * D`).
    pub dim: usize,
    /// Likelihood of each cancellation feature being active.
    pub conflict_likelihood: f64,
    /// Standard deviation of the continuous features.
    pub gaussian_std: f64,
    /// Uniform range the generative weights are drawn from.
    pub weight_range: (f64, f64),
    pub n_samples: usize,
    pub seed: u64,
    /// Train/validation/test ratios; must sum to 1.
    pub split: (f64, f64, f64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dim: 2,
            conflict_likelihood: 0.3,
            gaussian_std: 1.0,
            weight_range: (0.5, 2.0),
            n_samples: 10_000,
            seed: 0,
            split: (0.6, 0.2, 0.2),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.conflict_likelihood) {
            return bad(format!(
                "conflict likelihood must lie in [0, 1], got {}",
                self.conflict_likelihood
            ));
        }
        if !(self.gaussian_std > 0.0) {
            return bad(format!(
                "gaussian std must be positive, got {}",
                self.gaussian_std
            ));
        }
        if self.weight_range.0 >= self.weight_range.1 {
            return bad(format!(
                "weight range must satisfy a < b, got [{}, {}]",
                self.weight_range.0, self.weight_range.1
            ));
        }
        if self.n_samples == 0 {
            return bad("n_samples must be at least 1".into());
        }
        let (a, b, c) = self.split;
        if a < 0.0 || b < 0.0 || c < 0.0 || (a + b + c - 1.0).abs() > 1e-9 {
            return bad(format!("split ratios must sum to 1, got {:?}", self.split));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    /// Continuous features, `n x D`.
    pub x: Array2<f64>,
    /// Binary cancellation features, `n x D`.
    pub c: Array2<f64>,
    /// Labels.
    pub y: Array1<f64>,
    /// Ground-truth attribution scores, `n x 2D` (continuous then
    /// cancellation columns).
    pub truth: Array2<f64>,
    /// Generative weights.
    pub weights: Array1<f64>,
    pub config: SynthConfig,
}

impl SyntheticDataset {
    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Model inputs `[x | c]`, `n x 2D`.
    pub fn model_inputs(&self) -> Array2<f64> {
        concatenate![Axis(1), self.x, self.c]
    }

    pub fn train_range(&self) -> Range<usize> {
        0..self.split_point(self.config.split.0)
    }

    pub fn val_range(&self) -> Range<usize> {
        self.split_point(self.config.split.0)..self.split_point(self.config.split.0 + self.config.split.1)
    }

    pub fn test_range(&self) -> Range<usize> {
        self.split_point(self.config.split.0 + self.config.split.1)..self.len()
    }

    fn split_point(&self, fraction: f64) -> usize {
        ((self.len() as f64) * fraction).round() as usize
    }

    /// Writes the dataset as CSV (`x_1..x_D, c_1..c_D, y`) with the
    /// ground-truth scores in a sidecar CSV (`t_x_1..t_x_D, t_c_1..t_c_D`).
    pub fn write_csv(&self, data_path: &Path, truth_path: &Path) -> Result<()> {
        let d = self.dim();
        let mut writer = csv::Writer::from_path(data_path)?;
        let mut header: Vec<String> = (1..=d).map(|i| format!("x_{i}")).collect();
        header.extend((1..=d).map(|i| format!("c_{i}")));
        header.push("y".into());
        writer.write_record(&header)?;
        for k in 0..self.len() {
            let mut record: Vec<String> = Vec::with_capacity(2 * d + 1);
            record.extend(self.x.row(k).iter().map(|v| format_float(*v)));
            record.extend(self.c.row(k).iter().map(|v| format_float(*v)));
            record.push(format_float(self.y[k]));
            writer.write_record(&record)?;
        }
        writer.flush()?;

        let mut writer = csv::Writer::from_path(truth_path)?;
        let mut header: Vec<String> = (1..=d).map(|i| format!("t_x_{i}")).collect();
        header.extend((1..=d).map(|i| format!("t_c_{i}")));
        writer.write_record(&header)?;
        for k in 0..self.len() {
            let record: Vec<String> = self.truth.row(k).iter().map(|v| format_float(*v)).collect();
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Floats are rendered with 17 significant digits so CSV round-trips are
/// bit-exact.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Generates a dataset; identical seeds produce bit-identical datasets.
pub fn generate(config: &SynthConfig) -> Result<SyntheticDataset> {
    config.validate()?;
    let d = config.dim;
    let n = config.n_samples;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let weights = Array1::from_shape_fn(d, |_| {
        rng.gen_range(config.weight_range.0..config.weight_range.1)
    });
    let mut x = Array2::zeros((n, d));
    let mut c = Array2::zeros((n, d));
    let mut y = Array1::zeros(n);
    let mut truth = Array2::zeros((n, 2 * d));
    for k in 0..n {
        for i in 0..d {
            x[[k, i]] = config.gaussian_std * rng.sample::<f64, _>(StandardNormal);
        }
        for i in 0..d {
            c[[k, i]] = f64::from(rng.gen_bool(config.conflict_likelihood));
        }
        let mut label = 0.0;
        for i in 0..d {
            let contribution = weights[i] * x[[k, i]];
            truth[[k, i]] = contribution;
            if c[[k, i]] == 0.0 {
                label += contribution;
            } else {
                truth[[k, d + i]] = -contribution;
            }
        }
        y[k] = label;
    }
    Ok(SyntheticDataset {
        x,
        c,
        y,
        truth,
        weights,
        config: config.clone(),
    })
}
