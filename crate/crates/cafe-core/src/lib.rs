//! Conflict-aware feature attribution for feedforward neural networks.
//!
//! The crate provides:
//!
//! - a minimal network representation with forward and bias-ablated
//!   reference evaluation ([`network`], [`model_io`]),
//! - reverse-mode gradients over the recorded trace ([`autodiff`]),
//! - the conflict-aware attribution engine producing separate positive and
//!   negative scores per feature plus a bias score ([`cafe`]),
//! - reference implementations of gradient- and sampling-based attribution
//!   baselines ([`baselines`]),
//! - a synthetic conflict benchmark with generative ground-truth scores,
//!   an AdamW trainer and an experiment driver ([`synth`], [`train`],
//!   [`experiment`]),
//! - attribution-quality metrics and an executable property-check suite
//!   ([`metrics`], [`properties`], [`report`]).

pub mod activation;
pub mod autodiff;
pub mod baselines;
pub mod cafe;
pub mod error;
pub mod examples;
pub mod experiment;
pub mod metrics;
pub mod model_io;
pub mod network;
pub mod properties;
pub mod report;
pub mod synth;
pub mod train;

pub use activation::ActivationKind;
pub use cafe::{ConflictConfig, Explainer, ExplanationResult};
pub use error::{Error, Result};
pub use network::{ForwardTrace, Layer, Network};
