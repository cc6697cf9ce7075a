use serde::{Deserialize, Serialize};

use crate::error::{CrfError, Result};
use crate::models::{mse, Obs};
use crate::optim::{train_mlp, TrainConfig};
use crate::scalar::Scalar;
use crate::eval::compare::pool_observations;
use crate::eval::split::{proportional_sizes, split_with_sizes, PoolPoint, POOL_SIZE, SPLIT_SIZES};

/// Train and validation MSE of one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

/// The pick of one sweep and whether the crossing rule had to fall back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPick {
    pub value: usize,
    pub fallback: bool,
}

/// Smallest candidate after which validation MSE rises while training MSE
/// falls. Without such a crossing the validation minimum is taken and the
/// pick is flagged as a fallback.
///
/// Changes within a relative tolerance `tol` of the earlier value count as
/// neither a rise nor a fall, and the fallback takes the smallest candidate
/// whose validation MSE is within `tol` of the minimum. `tol = 0` gives the
/// strict rule.
pub fn pick_crossing(sweep: &[SweepPoint], tol: f64) -> Option<SweepPick> {
    let crossing = sweep.windows(2).find(|w| {
        w[1].val_mse > w[0].val_mse * (1.0 + tol) && w[1].train_mse < w[0].train_mse * (1.0 - tol)
    });
    if let Some(w) = crossing {
        return Some(SweepPick { value: w[0].value, fallback: false });
    }
    let min = sweep.iter().map(|p| p.val_mse).min_by(f64::total_cmp)?;
    let best = sweep.iter().find(|p| p.val_mse <= min * (1.0 + tol))?;
    Some(SweepPick { value: best.value, fallback: sweep.len() > 1 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperRun {
    pub seed: u64,
    pub neuron_sweep: Vec<SweepPoint>,
    pub neurons: SweepPick,
    pub epoch_sweep: Vec<SweepPoint>,
    pub epochs: SweepPick,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and population standard deviation.
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(Self { mean, std: var.sqrt() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperSearchResult {
    pub optimal_neurons: Vec<usize>,
    pub neurons: MeanStd,
    pub optimal_epochs: Vec<usize>,
    pub epochs: MeanStd,
    pub runs: Vec<HyperRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperSearchConfig {
    pub candidate_neurons: Vec<usize>,
    pub candidate_epochs: Vec<usize>,
    /// Epoch budget while sweeping the neuron count.
    pub sweep_epochs: usize,
    pub n_runs: usize,
    /// Relative MSE change below which a sweep step counts as flat.
    pub rel_tol: f64,
    /// Run `r` uses seed `base_seed + r`.
    pub base_seed: u64,
    pub train: TrainConfig,
}

impl Default for HyperSearchConfig {
    fn default() -> Self {
        Self {
            candidate_neurons: (1..=8).collect(),
            candidate_epochs: (1..=10).collect(),
            sweep_epochs: 100,
            n_runs: 50,
            rel_tol: 0.01,
            base_seed: 0,
            train: TrainConfig::default(),
        }
    }
}

impl HyperSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.candidate_neurons.is_empty() || self.candidate_epochs.is_empty() {
            return Err(CrfError::InvalidConfig("candidate ranges must be non-empty".into()));
        }
        if self.candidate_neurons.contains(&0) || self.candidate_epochs.contains(&0) || self.sweep_epochs == 0 {
            return Err(CrfError::InvalidConfig("neuron and epoch candidates must be at least 1".into()));
        }
        if !(self.rel_tol >= 0.0 && self.rel_tol < 1.0) {
            return Err(CrfError::InvalidConfig(format!("rel_tol = {} must lie in [0, 1)", self.rel_tol)));
        }
        if self.n_runs == 0 {
            return Err(CrfError::InvalidConfig("n_runs must be at least 1".into()));
        }
        self.train.validate()
    }
}

fn cell<T: Scalar>(train: &[Obs<T>], val: &[Obs<T>], units: usize, epochs: usize, cfg: &TrainConfig) -> Result<SweepPoint> {
    let c = TrainConfig { max_epochs: epochs, ..*cfg };
    let fit = train_mlp(train, &[], units, &c, None)?;
    Ok(SweepPoint {
        value: 0,
        train_mse: mse(&fit.model, train)?.as_f64(),
        val_mse: mse(&fit.model, val)?.as_f64(),
    })
}

fn run<T: Scalar>(train: &[Obs<T>], val: &[Obs<T>], config: &HyperSearchConfig, seed: u64) -> Result<HyperRun> {
    let cfg = TrainConfig { seed, ..config.train };
    let neuron_sweep = config
        .candidate_neurons
        .iter()
        .map(|&n| Ok(SweepPoint { value: n, ..cell(train, val, n, config.sweep_epochs, &cfg)? }))
        .collect::<Result<Vec<_>>>()?;
    let neurons = pick_crossing(&neuron_sweep, config.rel_tol).expect("non-empty sweep");
    let epoch_sweep = config
        .candidate_epochs
        .iter()
        .map(|&e| Ok(SweepPoint { value: e, ..cell(train, val, neurons.value, e, &cfg)? }))
        .collect::<Result<Vec<_>>>()?;
    let epochs = pick_crossing(&epoch_sweep, config.rel_tol).expect("non-empty sweep");
    Ok(HyperRun { seed, neuron_sweep, neurons, epoch_sweep, epochs, failure: None })
}

/// One search run on a fixed train/validation partition; `seed` draws the
/// initial weights.
pub fn search_run<T: Scalar>(train: &[Obs<T>], val: &[Obs<T>], config: &HyperSearchConfig, seed: u64) -> Result<HyperRun> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(CrfError::EmptyData);
    }
    run(train, val, config, seed)
}

/// Validation-based choice of hidden neurons, then epochs, repeated over
/// `n_runs` runs.
///
/// Run `r` uses seed `base_seed + r` both for a fresh stratified split of
/// the pool (156/34/34 for 224 points, proportional otherwise) and for the
/// initial weights. Each run sweeps the neuron count at a fixed epoch budget
/// and applies [`pick_crossing`], then sweeps epochs at the chosen neuron
/// count the same way. Runs whose training fails are kept with their error
/// and excluded from the statistics.
pub fn select_hyperparameters<T: Scalar>(pool: &[PoolPoint<T>], config: &HyperSearchConfig) -> Result<HyperSearchResult> {
    config.validate()?;
    if pool.len() < 3 {
        return Err(CrfError::InvalidConfig(format!("hyperparameter search needs at least 3 points, got {}", pool.len())));
    }
    let sizes = if pool.len() == POOL_SIZE { SPLIT_SIZES } else { proportional_sizes(pool.len()) };
    let (obs, _) = pool_observations(pool)?;
    use rayon::prelude::*;
    let runs: Vec<HyperRun> = (0..config.n_runs as u64)
        .into_par_iter()
        .map(|r| {
            let seed = config.base_seed + r;
            split_with_sizes(pool, sizes, seed)
                .and_then(|split| {
                    let [train, val, _] = split.select(&obs);
                    run(&train, &val, config, seed)
                })
                .unwrap_or_else(|e| HyperRun {
                    seed,
                    neuron_sweep: Vec::new(),
                    neurons: SweepPick { value: 0, fallback: true },
                    epoch_sweep: Vec::new(),
                    epochs: SweepPick { value: 0, fallback: true },
                    failure: Some(e.to_string()),
                })
        })
        .collect();
    let ok: Vec<&HyperRun> = runs.iter().filter(|r| r.failure.is_none()).collect();
    if ok.is_empty() {
        return Err(CrfError::InvalidConfig(format!(
            "every hyperparameter run failed: {}",
            runs[0].failure.as_deref().unwrap_or("")
        )));
    }
    let optimal_neurons: Vec<usize> = ok.iter().map(|r| r.neurons.value).collect();
    let optimal_epochs: Vec<usize> = ok.iter().map(|r| r.epochs.value).collect();
    let stats = |v: &[usize]| MeanStd::of(&v.iter().map(|&x| x as f64).collect::<Vec<_>>()).expect("non-empty");
    Ok(HyperSearchResult {
        neurons: stats(&optimal_neurons),
        epochs: stats(&optimal_epochs),
        optimal_neurons,
        optimal_epochs,
        runs,
    })
}
