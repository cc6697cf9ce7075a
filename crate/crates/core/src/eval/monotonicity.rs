use serde::{Deserialize, Serialize};

use crate::error::{CrfError, Result};
use crate::preprocess::TuningCurve;
use crate::scalar::Scalar;

/// Class boundary tolerance: supersaturating iff `MI < 1 − MI_EPSILON`.
pub const MI_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurveClass {
    Supersaturating,
    MonotoneLinearOrSaturating,
}

impl CurveClass {
    pub fn name(self) -> &'static str {
        match self {
            CurveClass::Supersaturating => "supersaturating",
            CurveClass::MonotoneLinearOrSaturating => "monotone",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport<T> {
    pub mi: T,
    pub class: CurveClass,
}

/// `MI = 1 − (R_m − R_100)/(R_m − R_0)` with `R_m` the peak response, `R_100`
/// the response at the highest contrast and `R_0` at zero contrast.
pub fn monotonicity_index<T: Scalar>(curve: &TuningCurve<T>) -> Result<MonotonicityReport<T>> {
    let r = curve.responses();
    let (Some(&r0), Some(&r100)) = (r.first(), r.last()) else {
        return Err(CrfError::EmptyData);
    };
    let rm = r.iter().copied().fold(T::neg_infinity(), T::max);
    if rm == r0 {
        return Err(CrfError::FlatCurve);
    }
    let mi = T::one() - (rm - r100) / (rm - r0);
    let class = if mi < T::one() - T::lit(MI_EPSILON) {
        CurveClass::Supersaturating
    } else {
        CurveClass::MonotoneLinearOrSaturating
    };
    Ok(MonotonicityReport { mi, class })
}
