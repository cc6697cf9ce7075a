//! Parameter estimation for every model family.

pub mod classic;
pub mod fuzzy;
pub mod lm;
pub mod lolimot;
pub mod mlp;
pub mod rbf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CrfError, Result};
use crate::models::{mse, KernelModel, Obs};
use crate::scalar::Scalar;

pub use classic::fit_classic;
pub use fuzzy::{fit_fuzzy_grid, train_anfis};
pub use lm::{lm_minimize, lm_step, LmOptions, LmState};
pub use lolimot::fit_lolimot;
pub use mlp::train_mlp;
pub use rbf::fit_rbf_ols;

/// Normalized input range every estimator works on.
pub(crate) fn unit_range<T: Scalar>() -> (T, T) {
    (T::zero(), T::one())
}

/// Settings for iterative trainers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Initial LM damping (the "training step").
    pub init_step: f64,
    pub init_weight_range: (f64, f64),
    pub seed: u64,
    /// Training stops once the train MSE falls to this value.
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 3,
            init_step: 0.01,
            init_weight_range: (-0.6, 0.6),
            seed: 0,
            tolerance: 1e-14,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(CrfError::InvalidConfig("max_epochs must be at least 1".into()));
        }
        let (lo, hi) = self.init_weight_range;
        if !(lo < hi) {
            return Err(CrfError::InvalidConfig(format!("empty init weight range ({lo}, {hi})")));
        }
        if !(self.init_step > 0.0) {
            return Err(CrfError::InvalidConfig("init_step must be positive".into()));
        }
        Ok(())
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub(crate) fn draw_weights<T: Scalar>(&self, n: usize) -> Vec<T> {
        let (lo, hi) = self.init_weight_range;
        let mut rng = self.rng();
        (0..n).map(|_| T::lit(rng.gen_range(lo..hi))).collect()
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: Option<f64>,
}

/// An estimated model with its training history and any estimator warnings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel<T> {
    pub model: KernelModel<T>,
    pub trace: Vec<TraceRow>,
    pub notes: Vec<String>,
}

impl<T: Scalar> FittedModel<T> {
    pub(crate) fn new(model: KernelModel<T>) -> Self {
        Self {
            model,
            trace: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_input_range(mut self, range: (T, T)) -> Self {
        self.model.input_range = range;
        self
    }

    pub fn train_mse(&self, data: &[Obs<T>]) -> Result<T> {
        mse(&self.model, data)
    }
}

pub(crate) fn record<T: Scalar>(
    epoch: usize,
    model: &KernelModel<T>,
    train: &[Obs<T>],
    val: &[Obs<T>],
) -> Result<TraceRow> {
    Ok(TraceRow {
        epoch,
        train_mse: mse(model, train)?.as_f64(),
        val_mse: if val.is_empty() { None } else { Some(mse(model, val)?.as_f64()) },
    })
}

/// `trace.csv` body: `epoch,train_mse,val_mse`.
pub fn trace_to_csv(trace: &[TraceRow]) -> String {
    let mut s = String::from("epoch,train_mse,val_mse\n");
    for r in trace {
        let val = r.val_mse.map(|v| v.to_string()).unwrap_or_default();
        s.push_str(&format!("{},{},{}\n", r.epoch, r.train_mse, val));
    }
    s
}
