use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CrfError, Result};
use crate::eval::fit::{c50_estimate, fit_model, ModelSettings};
use crate::eval::loocv::{loocv, FitResult};
use crate::eval::metrics::{nmse, r_squared};
use crate::eval::monotonicity::{monotonicity_index, CurveClass};
use crate::eval::split::{proportional_sizes, split_with_sizes, PoolPoint, Split, POOL_SIZE, SPLIT_SIZES};
use crate::models::{normalize_input, KernelModel, ModelKind, Obs};
use crate::preprocess::TuningCurve;
use crate::scalar::Scalar;

/// Inclusion threshold of the comparison table.
pub const R2_THRESHOLD: f64 = 0.6;

/// One table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindSummary {
    pub kind: ModelKind,
    /// Means over curves with `R² ≥ threshold`; `None` if there are none.
    pub mean_r2: Option<f64>,
    pub mean_nmse: Option<f64>,
    pub n_tuned: usize,
    pub n_curves: usize,
    /// Means over every curve with a defined metric.
    pub mean_r2_all: Option<f64>,
    pub mean_nmse_all: Option<f64>,
    /// Per-curve LOOCV R², in curve order; `None` for failed fits.
    pub r2_per_curve: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable<T> {
    pub threshold: f64,
    pub rows: Vec<KindSummary>,
    /// `fits[k][c]`: kind `k` (row order) on curve `c`.
    pub fits: Vec<Vec<FitResult<T>>>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = xs.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Summarizes the fits of one kind.
pub fn summarize<T: Scalar>(kind: ModelKind, fits: &[FitResult<T>], threshold: f64) -> KindSummary {
    let r2: Vec<Option<f64>> = fits.iter().map(|f| f.r2.map(|v| v.as_f64())).collect();
    let tuned: Vec<&FitResult<T>> = fits
        .iter()
        .filter(|f| f.r2.is_some_and(|v| v.as_f64() >= threshold))
        .collect();
    KindSummary {
        kind,
        mean_r2: mean(tuned.iter().filter_map(|f| f.r2.map(|v| v.as_f64()))),
        mean_nmse: mean(tuned.iter().filter_map(|f| f.nmse.map(|v| v.as_f64()))),
        n_tuned: tuned.len(),
        n_curves: fits.len(),
        mean_r2_all: mean(r2.iter().flatten().copied()),
        mean_nmse_all: mean(fits.iter().filter_map(|f| f.nmse.map(|v| v.as_f64()))),
        r2_per_curve: r2,
    }
}

fn failed_fit<T: Scalar>(curve: &TuningCurve<T>, kind: ModelKind, e: CrfError) -> FitResult<T> {
    FitResult {
        site_id: curve.site_id.clone(),
        kind,
        model: None,
        r2: None,
        nmse: None,
        per_fold: Vec::new(),
        c50_estimate: None,
        failed_folds: curve.points.len(),
        flagged: true,
        notes: vec![e.to_string()],
    }
}

/// Per-curve LOOCV of every kind, summarized in table form. Rows follow
/// `kinds`; curves are processed in parallel and collected in input order.
pub fn compare_models<T: Scalar>(
    curves: &[TuningCurve<T>],
    kinds: &[ModelKind],
    settings: &ModelSettings,
    threshold: f64,
) -> Result<ComparisonTable<T>> {
    if curves.is_empty() {
        return Err(CrfError::EmptyData);
    }
    settings.validate()?;
    let fits: Vec<Vec<FitResult<T>>> = kinds
        .iter()
        .map(|&kind| {
            curves
                .par_iter()
                .map(|c| loocv(c, kind, settings).unwrap_or_else(|e| failed_fit(c, kind, e)))
                .collect()
        })
        .collect();
    let rows = kinds
        .iter()
        .zip(&fits)
        .map(|(&k, f)| summarize(k, f, threshold))
        .collect();
    Ok(ComparisonTable { threshold, rows, fits })
}

/// Points of every curve classified as supersaturating, in curve order.
/// Curves that cannot be classified are skipped.
pub fn supersaturated_pool<T: Scalar>(curves: &[TuningCurve<T>]) -> Vec<PoolPoint<T>> {
    curves
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(monotonicity_index(c), Ok(r) if r.class == CurveClass::Supersaturating))
        .flat_map(|(k, c)| {
            c.points.iter().map(move |p| PoolPoint { curve: k, contrast: p.contrast, response: p.response })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledFit<T> {
    pub kind: ModelKind,
    pub model: Option<KernelModel<T>>,
    pub train_mse: Option<T>,
    pub test_nmse: Option<T>,
    pub test_r2: Option<T>,
    pub c50_estimate: Option<T>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledComparison<T> {
    pub seed: u64,
    pub pool_size: usize,
    pub sizes: [usize; 3],
    pub split: Split,
    pub fits: Vec<PooledFit<T>>,
}

impl<T: Scalar> PooledComparison<T> {
    pub fn test_nmse(&self, kind: ModelKind) -> Option<T> {
        self.fits.iter().find(|f| f.kind == kind).and_then(|f| f.test_nmse)
    }
}

/// Pool points with inputs normalized over the pooled contrast range, and
/// that range.
pub fn pool_observations<T: Scalar>(pool: &[PoolPoint<T>]) -> Result<(Vec<Obs<T>>, (T, T))> {
    let lo = pool.iter().map(|p| p.contrast).fold(T::infinity(), T::min);
    let hi = pool.iter().map(|p| p.contrast).fold(T::neg_infinity(), T::max);
    let obs = pool
        .iter()
        .map(|p| Ok(Obs::new(normalize_input(p.contrast, lo, hi)?.value, p.response)))
        .collect::<Result<_>>()?;
    Ok((obs, (lo, hi)))
}

/// Fits every kind to the pooled supersaturated points.
///
/// The pool is split 156/34/34 (proportionally for pools other than 224
/// points), stratified by contrast. Inputs are normalized over the pooled
/// contrast range. Each model trains on the training partition only; the
/// validation partition feeds the MLP and ANFIS traces. Test NMSE and R²
/// are computed on the held-out test partition.
pub fn pooled_comparison<T: Scalar>(
    pool: &[PoolPoint<T>],
    kinds: &[ModelKind],
    settings: &ModelSettings,
    seed: u64,
) -> Result<PooledComparison<T>> {
    if pool.len() < 3 {
        return Err(CrfError::InvalidConfig(format!("supersaturated pool has only {} points", pool.len())));
    }
    settings.validate()?;
    let sizes = if pool.len() == POOL_SIZE { SPLIT_SIZES } else { proportional_sizes(pool.len()) };
    let split = split_with_sizes(pool, sizes, seed)?;
    let (obs, (lo, hi)) = pool_observations(pool)?;
    let [train, val, test] = split.select(&obs);
    let settings = settings.with_seed(seed);
    let fits = kinds
        .par_iter()
        .map(|&kind| {
            let empty = |notes: Vec<String>| PooledFit {
                kind,
                model: None,
                train_mse: None,
                test_nmse: None,
                test_r2: None,
                c50_estimate: None,
                notes,
            };
            let fitted = match fit_model(kind, &train, &val, &settings, None) {
                Ok(f) => f.with_input_range((lo, hi)),
                Err(e) => return empty(vec![e.to_string()]),
            };
            let predict = |data: &[Obs<T>]| -> Result<Vec<T>> { data.iter().map(|o| fitted.model.eval(o.phi)).collect() };
            let targets: Vec<T> = test.iter().map(|o| o.y).collect();
            let (test_nmse, test_r2) = match predict(&test) {
                Ok(p) => (nmse(&targets, &p).ok(), r_squared(&targets, &p).ok()),
                Err(_) => (None, None),
            };
            PooledFit {
                kind,
                train_mse: fitted.train_mse(&train).ok(),
                test_nmse,
                test_r2,
                c50_estimate: c50_estimate(&fitted.model).unwrap_or(None),
                notes: fitted.notes.clone(),
                model: Some(fitted.model),
            }
        })
        .collect();
    Ok(PooledComparison { seed, pool_size: pool.len(), sizes, split, fits })
}
