//! Contrast response model families.
//!
//! Every model is a scalar function of normalized contrast `φ ∈ [0, 1]` with a
//! flat parameter vector `θ`. Parameter orderings:
//!
//! | kind | θ |
//! |------|---|
//! | `Linear` | `[A, B]` |
//! | `NakaRushton` | `[R_m, C50, n, B]` |
//! | `ModifiedNakaRushton` | `[R_m, C50, n, B, s]` |
//! | `Mlp` (n units) | `[w_1, b_1, α_1, …, w_n, b_n, α_n, α_0]` |
//! | `Rbf` (n centers, fixed σ) | `[c_1, α_1, …, c_n, α_n, α_0]` |
//! | `TskFuzzy` / `Anfis` / `Lolimot` (M rules) | `[a_1, b_1, c_1, σ_1, …]` |
//!
//! The three rule-based kinds share one evaluator; they differ only in how the
//! parameters are estimated.

mod forms;

use serde::{Deserialize, Serialize};

use crate::error::{CrfError, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub use forms::tsk_weights;

/// Lower bound applied to strictly positive parameters after each update.
pub const POSITIVE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    Linear,
    NakaRushton,
    ModifiedNakaRushton,
    Mlp,
    Rbf,
    TskFuzzy,
    Anfis,
    Lolimot,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Linear,
        ModelKind::NakaRushton,
        ModelKind::ModifiedNakaRushton,
        ModelKind::Mlp,
        ModelKind::Rbf,
        ModelKind::TskFuzzy,
        ModelKind::Anfis,
        ModelKind::Lolimot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Linear => "Linear",
            ModelKind::NakaRushton => "NakaRushton",
            ModelKind::ModifiedNakaRushton => "ModifiedNakaRushton",
            ModelKind::Mlp => "Mlp",
            ModelKind::Rbf => "Rbf",
            ModelKind::TskFuzzy => "TskFuzzy",
            ModelKind::Anfis => "Anfis",
            ModelKind::Lolimot => "Lolimot",
        }
    }

    pub fn is_rule_based(self) -> bool {
        matches!(self, ModelKind::TskFuzzy | ModelKind::Anfis | ModelKind::Lolimot)
    }

    /// Parameter count for `units` hidden neurons / centers / rules.
    pub fn param_len(self, units: usize) -> usize {
        match self {
            ModelKind::Linear => 2,
            ModelKind::NakaRushton => 4,
            ModelKind::ModifiedNakaRushton => 5,
            ModelKind::Mlp => 3 * units + 1,
            ModelKind::Rbf => 2 * units + 1,
            ModelKind::TskFuzzy | ModelKind::Anfis | ModelKind::Lolimot => 4 * units,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = CrfError;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| CrfError::InvalidConfig(format!("unknown model kind `{s}`")))
    }
}

/// Structural hyperparameters: neurons, centers or rules, plus the shared
/// RBF width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de>"))]
pub struct Hyper<T> {
    pub units: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rbf_width: Option<T>,
}

impl<T> Hyper<T> {
    pub fn units(units: usize) -> Self {
        Self { units, rbf_width: None }
    }
}

/// Input normalized to `[0, 1]` along with the range needed to invert it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedInput<T> {
    pub value: T,
    pub min: T,
    pub max: T,
}

impl<T: Scalar> NormalizedInput<T> {
    pub fn denormalize(&self) -> T {
        self.value * (self.max - self.min) + self.min
    }
}

/// `(φ − φ_min) / (φ_max − φ_min)`.
pub fn normalize_input<T: Scalar>(phi: T, min: T, max: T) -> Result<NormalizedInput<T>> {
    if !(min < max) {
        return Err(CrfError::DegenerateRange {
            min: min.as_f64(),
            max: max.as_f64(),
        });
    }
    Ok(NormalizedInput {
        value: (phi - min) / (max - min),
        min,
        max,
    })
}

/// One training observation on the normalized input scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obs<T> {
    pub phi: T,
    pub y: T,
}

impl<T> Obs<T> {
    pub fn new(phi: T, y: T) -> Self {
        Self { phi, y }
    }
}

/// A model family together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel<T> {
    pub kind: ModelKind,
    pub hyper: Hyper<T>,
    pub params: Vec<T>,
    /// Contrast range mapped onto `φ ∈ [0, 1]`.
    pub input_range: (T, T),
}

impl<T: Scalar> KernelModel<T> {
    pub fn new(kind: ModelKind, hyper: Hyper<T>, params: Vec<T>, input_range: (T, T)) -> Result<Self> {
        let m = Self {
            kind,
            hyper,
            params,
            input_range,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let expected = self.kind.param_len(self.hyper.units);
        if self.params.len() != expected {
            return Err(CrfError::ParamLength {
                kind: self.kind.name(),
                expected,
                got: self.params.len(),
            });
        }
        let needs_units = matches!(self.kind, ModelKind::Mlp | ModelKind::Rbf) || self.kind.is_rule_based();
        if needs_units && self.hyper.units == 0 {
            return Err(CrfError::InvalidParams(format!("{} needs at least one unit", self.kind)));
        }
        if self.params.iter().any(|v| !v.is_finite()) {
            return Err(CrfError::InvalidParams("non-finite parameter".into()));
        }
        if !(self.input_range.0 < self.input_range.1) {
            return Err(CrfError::DegenerateRange {
                min: self.input_range.0.as_f64(),
                max: self.input_range.1.as_f64(),
            });
        }
        let positive = |idx: &[usize], what: &str| -> Result<()> {
            for &i in idx {
                if !(self.params[i] > T::zero()) {
                    return Err(CrfError::InvalidParams(format!("{what} must be positive")));
                }
            }
            Ok(())
        };
        match self.kind {
            ModelKind::NakaRushton => positive(&[1, 2], "C50 and n"),
            ModelKind::ModifiedNakaRushton => positive(&[1, 2, 4], "C50, n and s"),
            ModelKind::Rbf => match self.hyper.rbf_width {
                Some(w) if w > T::zero() => Ok(()),
                _ => Err(CrfError::InvalidParams("RBF needs a positive width".into())),
            },
            k if k.is_rule_based() => {
                let idx: Vec<usize> = (0..self.hyper.units).map(|i| 4 * i + 3).collect();
                positive(&idx, "membership widths")
            }
            _ => Ok(()),
        }
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// `ŷ(φ)` for normalized input `φ`.
    pub fn eval(&self, phi: T) -> Result<T> {
        self.eval_impl(&self.params, phi, None)
    }

    /// `∂ŷ/∂θ` at normalized input `φ`.
    pub fn gradient(&self, phi: T) -> Result<Vec<T>> {
        let mut g = vec![T::zero(); self.params.len()];
        self.eval_impl(&self.params, phi, Some(&mut g))?;
        Ok(g)
    }

    /// Evaluates and writes the gradient into `grad` in one pass.
    pub fn eval_with_gradient(&self, phi: T, grad: &mut [T]) -> Result<T> {
        self.eval_impl(&self.params, phi, Some(grad))
    }

    /// Evaluates the same family at a different parameter vector.
    pub fn eval_at(&self, params: &[T], phi: T) -> Result<T> {
        self.eval_impl(params, phi, None)
    }

    /// Prediction at a raw contrast value.
    pub fn predict(&self, contrast: T) -> Result<T> {
        let x = normalize_input(contrast, self.input_range.0, self.input_range.1)?;
        self.eval(x.value)
    }

    fn eval_impl(&self, p: &[T], phi: T, grad: Option<&mut [T]>) -> Result<T> {
        let y = match self.kind {
            ModelKind::Linear => forms::linear(p, phi, grad),
            ModelKind::NakaRushton => forms::naka_rushton(p, phi, grad),
            ModelKind::ModifiedNakaRushton => forms::modified_naka_rushton(p, phi, grad),
            ModelKind::Mlp => forms::mlp(p, phi, grad),
            ModelKind::Rbf => {
                let w = self
                    .hyper
                    .rbf_width
                    .ok_or_else(|| CrfError::InvalidParams("RBF needs a width".into()))?;
                forms::rbf(p, w, phi, grad)
            }
            ModelKind::TskFuzzy | ModelKind::Anfis | ModelKind::Lolimot => forms::tsk(p, phi, grad)?,
        };
        Ok(y)
    }

    /// Clamps constrained parameters back into their feasible region.
    pub fn project(&self, params: &mut [T]) {
        let floor = T::lit(POSITIVE_FLOOR);
        let idx: Vec<usize> = match self.kind {
            ModelKind::NakaRushton => vec![1, 2],
            ModelKind::ModifiedNakaRushton => vec![1, 2, 4],
            k if k.is_rule_based() => (0..self.hyper.units).map(|i| 4 * i + 3).collect(),
            _ => Vec::new(),
        };
        for i in idx {
            if !(params[i] >= floor) {
                params[i] = floor;
            }
        }
    }

    pub fn with_params(&self, params: Vec<T>) -> Self {
        Self {
            params,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }
}

/// Residuals `e(k) = y(k) − ŷ(k)` and the Jacobian `∂ŷ(k)/∂θ` (one row per point).
pub fn residual_jacobian<T: Scalar>(model: &KernelModel<T>, data: &[Obs<T>]) -> Result<(Vec<T>, Matrix<T>)> {
    if data.is_empty() {
        return Err(CrfError::EmptyData);
    }
    let mut jac = Matrix::zeros(data.len(), model.n_params());
    let mut res = Vec::with_capacity(data.len());
    for (k, o) in data.iter().enumerate() {
        let y = model.eval_with_gradient(o.phi, jac.row_mut(k))?;
        res.push(o.y - y);
    }
    Ok((res, jac))
}

/// `J = ½ Σ e(k)²`.
pub fn cost<T: Scalar>(model: &KernelModel<T>, params: &[T], data: &[Obs<T>]) -> Result<T> {
    let mut j = T::zero();
    for o in data {
        let e = o.y - model.eval_at(params, o.phi)?;
        j += e * e;
    }
    Ok(j * T::lit(0.5))
}

/// Mean squared error of `model` on `data`.
pub fn mse<T: Scalar>(model: &KernelModel<T>, data: &[Obs<T>]) -> Result<T> {
    if data.is_empty() {
        return Err(CrfError::EmptyData);
    }
    Ok(cost(model, &model.params, data)? * T::lit(2.0) / T::from_count(data.len()))
}
