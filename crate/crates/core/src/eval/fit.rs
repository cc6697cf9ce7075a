//! Per-kind estimator settings and a single entry point that dispatches to
//! the right estimator.

use serde::{Deserialize, Serialize};

use crate::error::{CrfError, Result};
use crate::models::{KernelModel, ModelKind, Obs};
use crate::optim::{
    fit_classic, fit_fuzzy_grid, fit_lolimot, fit_rbf_ols, train_anfis, train_mlp, FittedModel, LmOptions,
    TrainConfig,
};
use crate::scalar::Scalar;

/// Structural choices and training settings for every model family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSettings {
    pub mlp_neurons: usize,
    pub mlp: TrainConfig,
    pub rbf_centers: usize,
    /// Gaussian width on the normalized input scale.
    pub rbf_width: f64,
    pub fuzzy_rules: usize,
    pub anfis_rules: usize,
    pub anfis_epochs: usize,
    pub anfis_step: f64,
    pub lolimot_locals: usize,
    pub lm: LmOptions,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            mlp_neurons: 3,
            mlp: TrainConfig::default(),
            rbf_centers: 3,
            rbf_width: 0.5,
            fuzzy_rules: 2,
            anfis_rules: 2,
            anfis_epochs: 1,
            anfis_step: 0.01,
            lolimot_locals: 2,
            lm: LmOptions::default(),
        }
    }
}

impl ModelSettings {
    pub fn validate(&self) -> Result<()> {
        self.mlp.validate()?;
        let counts = [
            ("mlp_neurons", self.mlp_neurons),
            ("rbf_centers", self.rbf_centers),
            ("fuzzy_rules", self.fuzzy_rules),
            ("anfis_rules", self.anfis_rules),
            ("anfis_epochs", self.anfis_epochs),
            ("lolimot_locals", self.lolimot_locals),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(CrfError::InvalidConfig(format!("{name} must be at least 1")));
        }
        if !(self.rbf_width > 0.0) {
            return Err(CrfError::InvalidConfig("rbf_width must be positive".into()));
        }
        if !(self.anfis_step >= 0.0) {
            return Err(CrfError::InvalidConfig("anfis_step must be non-negative".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.mlp.seed = seed;
        self
    }
}

/// Fits `kind` on normalized training points.
///
/// `val` only feeds the MLP and ANFIS traces. `warm` seeds the iterative
/// estimators (Naka-Rushton family, MLP) when its shape matches; the other
/// estimators are deterministic in the data and ignore it.
pub fn fit_model<T: Scalar>(
    kind: ModelKind,
    train: &[Obs<T>],
    val: &[Obs<T>],
    settings: &ModelSettings,
    warm: Option<&KernelModel<T>>,
) -> Result<FittedModel<T>> {
    let warm_params = warm
        .filter(|w| w.kind == kind && w.n_params() == kind.param_len(w.hyper.units))
        .map(|w| w.params.as_slice());
    match kind {
        ModelKind::Linear | ModelKind::NakaRushton | ModelKind::ModifiedNakaRushton => {
            fit_classic(train, kind, warm_params, settings.lm)
        }
        ModelKind::Mlp => {
            let init = warm_params.filter(|p| p.len() == kind.param_len(settings.mlp_neurons));
            train_mlp(train, val, settings.mlp_neurons, &settings.mlp, init)
        }
        ModelKind::Rbf => fit_rbf_ols(train, settings.rbf_centers, T::lit(settings.rbf_width)),
        ModelKind::TskFuzzy => fit_fuzzy_grid(train, settings.fuzzy_rules),
        ModelKind::Anfis => train_anfis(
            train,
            val,
            settings.anfis_rules,
            settings.anfis_epochs,
            T::lit(settings.anfis_step),
        ),
        ModelKind::Lolimot => fit_lolimot(train, settings.lolimot_locals),
    }
}

/// Points of the dense grid used to locate half-maximum crossings.
pub const C50_GRID: usize = 1001;

/// Contrast of half-maximum response.
///
/// For the Naka-Rushton family this is the fitted `C50` mapped back to the
/// contrast scale. For every other model it is the first contrast at which
/// the fitted curve reaches the midpoint between its zero-contrast value and
/// its maximum, located on a dense grid and refined by bisection. `None` if
/// the curve never rises above its zero-contrast value.
pub fn c50_estimate<T: Scalar>(model: &KernelModel<T>) -> Result<Option<T>> {
    let (lo, hi) = model.input_range;
    let to_contrast = |phi: T| lo + phi * (hi - lo);
    if matches!(model.kind, ModelKind::NakaRushton | ModelKind::ModifiedNakaRushton) {
        return Ok(Some(to_contrast(model.params[1])));
    }
    let step = T::one() / T::from_count(C50_GRID - 1);
    let ys: Vec<T> = (0..C50_GRID)
        .map(|i| model.eval(T::from_count(i) * step))
        .collect::<Result<_>>()?;
    let y0 = ys[0];
    let ymax = ys.iter().copied().fold(T::neg_infinity(), T::max);
    if !(ymax > y0) {
        return Ok(None);
    }
    let level = (y0 + ymax) * T::lit(0.5);
    let Some(k) = ys.iter().position(|&y| y >= level) else {
        return Ok(None);
    };
    let (mut a, mut b) = (T::from_count(k - 1) * step, T::from_count(k) * step);
    for _ in 0..60 {
        let m = (a + b) * T::lit(0.5);
        if model.eval(m)? >= level {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(Some(to_contrast((a + b) * T::lit(0.5))))
}
