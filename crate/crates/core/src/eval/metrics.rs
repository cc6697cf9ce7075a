use crate::error::{CrfError, Result};
use crate::scalar::Scalar;

fn check<T>(y: &[T], yhat: &[T]) -> Result<()> {
    if y.is_empty() || y.len() != yhat.len() {
        return Err(CrfError::EmptyData);
    }
    Ok(())
}

/// Coefficient of determination, `1 − SSE/SST`.
pub fn r_squared<T: Scalar>(y: &[T], yhat: &[T]) -> Result<T> {
    check(y, yhat)?;
    if y.len() < 2 {
        return Err(CrfError::DegenerateVariance);
    }
    let mean = y.iter().copied().sum::<T>() / T::from_count(y.len());
    let sst: T = y.iter().map(|&v| (v - mean) * (v - mean)).sum();
    if !(sst > T::zero()) {
        return Err(CrfError::DegenerateVariance);
    }
    let sse: T = y.iter().zip(yhat).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok(T::one() - sse / sst)
}

/// Mean squared error divided by the product of the target and prediction means.
pub fn nmse<T: Scalar>(y: &[T], yhat: &[T]) -> Result<T> {
    check(y, yhat)?;
    let n = T::from_count(y.len());
    let ybar = y.iter().copied().sum::<T>() / n;
    let hbar = yhat.iter().copied().sum::<T>() / n;
    let denom = ybar * hbar;
    if denom == T::zero() || !denom.is_finite() {
        return Err(CrfError::DegenerateMean);
    }
    let mse = y.iter().zip(yhat).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>() / n;
    Ok(mse / denom)
}
