//! Geographically weighted machine learning.
//!
//! Every observation point gets its own model, trained on spatially weighted
//! neighbors, and that model is explained at the point with exact Shapley
//! values, a LIME surrogate and (for trees) impurity importance. Mapping the
//! explanations across points yields spatially varying coefficient surfaces.

pub mod bench;
pub mod commands;
pub mod config;
pub mod engine;
pub mod error;
pub mod explain;
pub mod io;
pub mod kernels;
pub mod learners;
pub mod matrix;
pub mod spatial;
pub mod svg;
pub mod synth;

pub use engine::{recovery_metrics, AttributionField, Engine, ExplainConfig, ScanResult};
pub use error::{Error, Result};
pub use kernels::{weights_for, Bandwidth, BandwidthMode, KernelKind, KernelSpec, WeightVector};
pub use learners::{FittedModel, LearnerConfig, LearnerKind, Predictor, WeightedLearner, WeightingMode};
pub use matrix::Matrix;
pub use spatial::{pearson_correlation, DistanceIndex, Schema, SpatialDataset};
pub use synth::{GroundTruth, SynthSpec};
