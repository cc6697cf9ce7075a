//! Contrast response functions of LFP gamma power.
//!
//! The crate turns trial-aligned voltage traces into SNR tuning curves
//! ([`preprocess`]), fits eight model families to them ([`models`],
//! [`optim`]), and compares the families by leave-one-out cross-validation
//! and on a pooled train/validation/test split ([`eval`]). [`synth`]
//! generates recordings with known ground truth.
//!
//! Everything numeric is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases below fix the scalar to `f64`.

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod models;
pub mod optim;
pub mod preprocess;
pub mod report;
pub mod scalar;
pub mod synth;

pub use config::PipelineConfig;
pub use error::{CrfError, Result};
pub use models::ModelKind;
pub use scalar::Scalar;

pub type Model = models::KernelModel<f64>;
pub type Obs = models::Obs<f64>;
pub type Fitted = optim::FittedModel<f64>;
pub type Curve = preprocess::TuningCurve<f64>;
pub type Recording = preprocess::RawRecording<f64>;
pub type CvResult = eval::FitResult<f64>;
pub type Table = eval::ComparisonTable<f64>;
pub type Pooled = eval::PooledComparison<f64>;
