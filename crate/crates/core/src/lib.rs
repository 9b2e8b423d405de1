//! Toolkit for measuring how frozen convolutional encoders represent object
//! shape and texture.
//!
//! The crate has two measurement cores and a set of supporting analyses:
//!
//! * [`dims`] counts latent neurons encoding the semantic factors *shape* and
//!   *texture* via a correlation-based mutual-information lower bound over
//!   stylized image pairs, allocating the latent dimensions to factors with a
//!   softmax over factor scores and a baseline.
//! * [`readout`] quantifies per-pixel shape/semantic information by training
//!   shallow convolutional probes on frozen features for binary and semantic
//!   segmentation, scored with mean IoU.
//! * [`pairgen`] renders desk-scale textured-shape datasets, stylizes them
//!   with a style bank, and samples shape-similar / texture-similar pairs.
//! * [`encoders`] provides tiny reference encoders (standard and
//!   receptive-field-capped), training with snapshots, stage-tagged feature
//!   extraction, and an adapter for externally computed features.
//! * [`targeting`] masks ranked neurons (keep-top-X% / remove-top-N) and runs
//!   the corresponding probe experiments.
//! * [`dissection`] counts concept detectors from per-neuron activation
//!   quantiles as an independent consistency baseline.
//! * [`bias`] computes the cue-conflict shape-bias score.

pub mod bias;
pub mod dims;
pub mod dissection;
pub mod encoders;
pub mod error;
pub mod nn;
pub mod pairgen;
pub mod readout;
pub mod targeting;
pub mod util;

pub use error::{ProbeError, Result};
