//! Closed-form evaluators and analytic gradients, one per model form.
//!
//! Every function returns `ŷ(φ)` and, when `grad` is given, writes `∂ŷ/∂θ`
//! in the parameter order documented on [`super::ModelKind`].

use crate::error::{CrfError, Result};
use crate::scalar::{sigmoid, Scalar};

/// `ln C`, with `None` standing for C = 0 (where every power term vanishes).
#[inline]
fn ln_contrast<T: Scalar>(phi: T) -> Option<T> {
    (phi > T::zero()).then(|| phi.ln())
}

pub fn linear<T: Scalar>(p: &[T], phi: T, grad: Option<&mut [T]>) -> T {
    if let Some(g) = grad {
        g[0] = phi;
        g[1] = T::one();
    }
    p[0] * phi + p[1]
}

/// `R_m · Cⁿ / (Cⁿ + C50ⁿ) + B`, evaluated as a logistic in `ln C`.
pub fn naka_rushton<T: Scalar>(p: &[T], phi: T, grad: Option<&mut [T]>) -> T {
    let (rm, c50, n, b) = (p[0], p[1], p[2], p[3]);
    let Some(lc) = ln_contrast(phi) else {
        if let Some(g) = grad {
            g.copy_from_slice(&[T::zero(), T::zero(), T::zero(), T::one()]);
        }
        return b;
    };
    let d = lc - c50.ln();
    let r = sigmoid(n * d);
    if let Some(g) = grad {
        let slope = rm * r * (T::one() - r);
        g[0] = r;
        g[1] = -slope * n / c50;
        g[2] = slope * d;
        g[3] = T::one();
    }
    rm * r + b
}

/// `R_m · Cⁿ / (C^{sn} + C50^{sn}) + B`, evaluated in log space.
pub fn modified_naka_rushton<T: Scalar>(p: &[T], phi: T, grad: Option<&mut [T]>) -> T {
    let (rm, c50, n, b, s) = (p[0], p[1], p[2], p[3], p[4]);
    let Some(lc) = ln_contrast(phi) else {
        if let Some(g) = grad {
            g.copy_from_slice(&[T::zero(), T::zero(), T::zero(), T::one(), T::zero()]);
        }
        return b;
    };
    let l50 = c50.ln();
    let sn = s * n;
    // ln(C^{sn} + C50^{sn}) via log-sum-exp
    let (u, v) = (sn * lc, sn * l50);
    let m = u.max(v);
    let lse = m + ((u - m).exp() + (v - m).exp()).ln();
    let f = (n * lc - lse).exp();
    if let Some(g) = grad {
        // share of the denominator carried by C^{sn}
        let w = sigmoid(u - v);
        let mix = w * lc + (T::one() - w) * l50;
        g[0] = f;
        g[1] = -rm * f * (T::one() - w) * sn / c50;
        g[2] = rm * f * (lc - s * mix);
        g[3] = T::one();
        g[4] = -rm * f * n * mix;
    }
    rm * f + b
}

/// `Σ α_i σ(w_i φ + b_i) + α_0`, parameters `[w_1, b_1, α_1, …, α_0]`.
pub fn mlp<T: Scalar>(p: &[T], phi: T, mut grad: Option<&mut [T]>) -> T {
    let units = (p.len() - 1) / 3;
    let mut y = p[3 * units];
    for i in 0..units {
        let (w, b, a) = (p[3 * i], p[3 * i + 1], p[3 * i + 2]);
        let s = sigmoid(w * phi + b);
        y += a * s;
        if let Some(g) = grad.as_deref_mut() {
            let ds = a * s * (T::one() - s);
            g[3 * i] = ds * phi;
            g[3 * i + 1] = ds;
            g[3 * i + 2] = s;
        }
    }
    if let Some(g) = grad {
        g[3 * units] = T::one();
    }
    y
}

/// `Σ α_i exp(−(φ − c_i)² / 2σ²) + α_0`, parameters `[c_1, α_1, …, α_0]`.
pub fn rbf<T: Scalar>(p: &[T], width: T, phi: T, mut grad: Option<&mut [T]>) -> T {
    let units = (p.len() - 1) / 2;
    let inv_var = T::one() / (width * width);
    let half = T::lit(0.5);
    let mut y = p[2 * units];
    for i in 0..units {
        let (c, a) = (p[2 * i], p[2 * i + 1]);
        let d = phi - c;
        let h = (-half * d * d * inv_var).exp();
        y += a * h;
        if let Some(g) = grad.as_deref_mut() {
            g[2 * i] = a * h * d * inv_var;
            g[2 * i + 1] = h;
        }
    }
    if let Some(g) = grad {
        g[2 * units] = T::one();
    }
    y
}

/// Normalized Gaussian validities of the rules at `phi`, parameters
/// `[a_i, b_i, c_i, σ_i]` per rule. Exponents are shifted by their maximum
/// before exponentiation so the weights cannot all underflow.
pub fn tsk_weights<T: Scalar>(p: &[T], phi: T, out: &mut Vec<T>) -> Result<()> {
    let rules = p.len() / 4;
    out.clear();
    let half = T::lit(0.5);
    let mut max_e = T::neg_infinity();
    for i in 0..rules {
        let (c, sigma) = (p[4 * i + 2], p[4 * i + 3]);
        let d = (phi - c) / sigma;
        let e = -half * d * d;
        max_e = max_e.max(e);
        out.push(e);
    }
    if !max_e.is_finite() {
        return Err(CrfError::DegenerateMembership(phi.as_f64()));
    }
    let mut total = T::zero();
    for e in out.iter_mut() {
        *e = (*e - max_e).exp();
        total += *e;
    }
    for w in out.iter_mut() {
        *w /= total;
    }
    Ok(())
}

/// `Σ w_i(φ) (a_i φ + b_i)` with normalized Gaussian validities `w_i`.
pub fn tsk<T: Scalar>(p: &[T], phi: T, grad: Option<&mut [T]>) -> Result<T> {
    let mut w = Vec::with_capacity(p.len() / 4);
    tsk_weights(p, phi, &mut w)?;
    let y: T = w
        .iter()
        .enumerate()
        .map(|(i, &wi)| wi * (p[4 * i] * phi + p[4 * i + 1]))
        .sum();
    if let Some(g) = grad {
        for (i, &wi) in w.iter().enumerate() {
            let (a, b, c, sigma) = (p[4 * i], p[4 * i + 1], p[4 * i + 2], p[4 * i + 3]);
            let local = a * phi + b;
            // ∂ŷ/∂e_i = w_i (y_i − ŷ), e_i = −(φ − c)² / 2σ²
            let de = wi * (local - y);
            let d = phi - c;
            g[4 * i] = wi * phi;
            g[4 * i + 1] = wi;
            g[4 * i + 2] = de * d / (sigma * sigma);
            g[4 * i + 3] = de * d * d / (sigma * sigma * sigma);
        }
    }
    Ok(y)
}
