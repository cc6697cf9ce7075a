use serde::{Deserialize, Serialize};

use crate::error::{CrfError, Result};
use crate::eval::fit::{c50_estimate, fit_model, ModelSettings};
use crate::eval::metrics::{nmse, r_squared};
use crate::models::{normalize_input, KernelModel, ModelKind, Obs};
use crate::preprocess::TuningCurve;
use crate::scalar::Scalar;

/// Outcome of one held-out point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord<T> {
    pub held_out: usize,
    pub contrast: T,
    pub target: T,
    pub prediction: Option<T>,
    pub error: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Cross-validated fit of one model kind to one tuning curve.
///
/// `r2` and `nmse` are computed from the held-out predictions of the
/// successful folds; they are `None` when fewer than two folds succeeded or
/// the metric is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    pub site_id: String,
    pub kind: ModelKind,
    pub model: Option<KernelModel<T>>,
    pub r2: Option<T>,
    pub nmse: Option<T>,
    pub per_fold: Vec<FoldRecord<T>>,
    pub c50_estimate: Option<T>,
    pub failed_folds: usize,
    pub flagged: bool,
    pub notes: Vec<String>,
}

/// Normalized observations of a curve over its own contrast range.
pub fn curve_observations<T: Scalar>(curve: &TuningCurve<T>) -> Result<Vec<Obs<T>>> {
    let (lo, hi) = curve.contrast_range();
    curve
        .points
        .iter()
        .map(|p| Ok(Obs::new(normalize_input(p.contrast, lo, hi)?.value, p.response)))
        .collect()
}

/// Leave-one-out cross-validation over the points of `curve`.
///
/// Fold `i` trains on every point but `i`, starting from the parameters of
/// fold `i − 1`, and predicts point `i`. The reported model is a final refit
/// on all points, started from the last successful fold.
pub fn loocv<T: Scalar>(curve: &TuningCurve<T>, kind: ModelKind, settings: &ModelSettings) -> Result<FitResult<T>> {
    settings.validate()?;
    let range = curve.contrast_range();
    let data = curve_observations(curve)?;
    let mut warm: Option<KernelModel<T>> = None;
    let mut per_fold = Vec::with_capacity(data.len());
    let mut notes = Vec::new();
    for i in 0..data.len() {
        let train: Vec<Obs<T>> = data
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &o)| o)
            .collect();
        let outcome = fit_model(kind, &train, &[], settings, warm.as_ref())
            .and_then(|f| f.model.eval(data[i].phi).map(|y| (f, y)))
            .and_then(|(f, y)| if y.is_finite() { Ok((f, y)) } else { Err(CrfError::NonFinite("prediction".into())) });
        let target = data[i].y;
        let contrast = curve.points[i].contrast;
        match outcome {
            Ok((fitted, y)) => {
                for n in fitted.notes {
                    notes.push(format!("fold {i}: {n}"));
                }
                warm = Some(fitted.model);
                per_fold.push(FoldRecord {
                    held_out: i,
                    contrast,
                    target,
                    prediction: Some(y),
                    error: Some(target - y),
                    failure: None,
                });
            }
            Err(e) => per_fold.push(FoldRecord {
                held_out: i,
                contrast,
                target,
                prediction: None,
                error: None,
                failure: Some(e.to_string()),
            }),
        }
    }
    let failed_folds = per_fold.iter().filter(|f| f.prediction.is_none()).count();
    let (ys, yhats): (Vec<T>, Vec<T>) = per_fold
        .iter()
        .filter_map(|f| f.prediction.map(|p| (f.target, p)))
        .unzip();
    let r2 = r_squared(&ys, &yhats).ok();
    let nm = nmse(&ys, &yhats).ok();

    let (model, c50) = match fit_model(kind, &data, &[], settings, warm.as_ref()) {
        Ok(f) => {
            notes.extend(f.notes.iter().map(|n| format!("final fit: {n}")));
            let m = f.with_input_range(range).model;
            let c50 = c50_estimate(&m).unwrap_or(None);
            (Some(m), c50)
        }
        Err(e) => {
            notes.push(format!("final fit failed: {e}"));
            (None, None)
        }
    };
    Ok(FitResult {
        site_id: curve.site_id.clone(),
        kind,
        flagged: failed_folds > 0 || model.is_none(),
        model,
        r2,
        nmse: nm,
        per_fold,
        c50_estimate: c50,
        failed_folds,
        notes,
    })
}

/// Fit of `kind` to all points of `curve`, without cross-validation.
pub fn fit_curve<T: Scalar>(curve: &TuningCurve<T>, kind: ModelKind, settings: &ModelSettings) -> Result<KernelModel<T>> {
    let data = curve_observations(curve)?;
    Ok(fit_model(kind, &data, &[], settings, None)?
        .with_input_range(curve.contrast_range())
        .model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::DEFAULT_CONTRASTS;

    #[test]
    fn linear_on_linear_data_is_exact() {
        let r: Vec<f64> = DEFAULT_CONTRASTS.iter().map(|c| 1.0 + 3.0 * c).collect();
        let curve = TuningCurve::from_pairs("lin", &DEFAULT_CONTRASTS, &r).unwrap();
        let res = loocv(&curve, ModelKind::Linear, &ModelSettings::default()).unwrap();
        assert!(res.per_fold.iter().all(|f| f.error.unwrap().abs() < 1e-9));
        assert!((res.r2.unwrap() - 1.0).abs() < 1e-12);
        assert!(!res.flagged);
        let m = res.model.unwrap();
        assert!((m.predict(0.5).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn every_point_is_held_out_once() {
        let r = [1.0, 1.2, 1.1, 1.6, 2.2, 2.9, 2.5, 2.0];
        let curve = TuningCurve::from_pairs("x", &DEFAULT_CONTRASTS, &r).unwrap();
        for kind in ModelKind::ALL {
            let res = loocv(&curve, kind, &ModelSettings::default()).unwrap();
            let mut idx: Vec<usize> = res.per_fold.iter().map(|f| f.held_out).collect();
            idx.sort_unstable();
            assert_eq!(idx, (0..8).collect::<Vec<_>>(), "{kind}");
        }
    }
}
