//! Forward-selection orthogonal least squares for Gaussian RBF networks.

use crate::error::{CrfError, Result};
use crate::linalg::{dot, lstsq, norm_sq, Matrix};
use crate::models::{Hyper, KernelModel, ModelKind, Obs};
use crate::optim::{unit_range, FittedModel};
use crate::scalar::Scalar;

/// Distinct inputs, sorted.
pub fn distinct_inputs<T: Scalar>(data: &[Obs<T>]) -> Vec<T> {
    let mut xs: Vec<T> = data.iter().map(|o| o.phi).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite inputs"));
    xs.dedup_by(|a, b| (*a - *b).abs() <= T::lit(1e-12));
    xs
}

fn gaussian_column<T: Scalar>(data: &[Obs<T>], center: T, width: T) -> Vec<T> {
    let inv = T::lit(0.5) / (width * width);
    data.iter()
        .map(|o| {
            let d = o.phi - center;
            (-d * d * inv).exp()
        })
        .collect()
}

/// One step of the selection: which candidate entered and its error
/// reduction ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection<T> {
    pub candidate: usize,
    pub err: T,
}

/// Greedy selection of up to `n_centers` candidate centers.
///
/// The bias column is placed in the basis first; each round every remaining
/// candidate is Gram-Schmidt orthogonalized against the current basis and the
/// one with the largest error reduction ratio `(wᵀy)² / (wᵀw · yᵀy)` enters.
/// Candidates whose orthogonal part is numerically zero are skipped, so fewer
/// than `n_centers` may be returned.
pub fn ols_select<T: Scalar>(data: &[Obs<T>], candidates: &[T], n_centers: usize, width: T) -> Vec<Selection<T>> {
    let y: Vec<T> = data.iter().map(|o| o.y).collect();
    let yy = norm_sq(&y).max(T::min_positive_value());
    let cols: Vec<Vec<T>> = candidates.iter().map(|&c| gaussian_column(data, c, width)).collect();
    let mut basis: Vec<Vec<T>> = vec![vec![T::one(); data.len()]];
    let mut used = vec![false; candidates.len()];
    let mut picks = Vec::new();
    let tol = T::lit(1e-10);
    for _ in 0..n_centers {
        let mut best: Option<(usize, T, Vec<T>)> = None;
        for (j, col) in cols.iter().enumerate() {
            if used[j] {
                continue;
            }
            let mut w = col.clone();
            for b in &basis {
                let f = dot(b, &w) / norm_sq(b);
                for (wi, &bi) in w.iter_mut().zip(b) {
                    *wi -= f * bi;
                }
            }
            let ww = norm_sq(&w);
            if !(ww > tol * norm_sq(col)) {
                continue;
            }
            let g = dot(&w, &y);
            let err = g * g / (ww * yy);
            if best.as_ref().map_or(true, |b| err > b.1) {
                best = Some((j, err, w));
            }
        }
        let Some((j, err, w)) = best else { break };
        used[j] = true;
        basis.push(w);
        picks.push(Selection { candidate: j, err });
    }
    picks
}

/// RBF network with `n_centers` Gaussians of fixed `width`, centers chosen
/// among the training inputs, amplitudes and bias by least squares.
pub fn fit_rbf_ols<T: Scalar>(train: &[Obs<T>], n_centers: usize, width: T) -> Result<FittedModel<T>> {
    if train.is_empty() {
        return Err(CrfError::EmptyData);
    }
    if !(width > T::zero()) {
        return Err(CrfError::InvalidConfig("RBF width must be positive".into()));
    }
    let candidates = distinct_inputs(train);
    if n_centers == 0 || n_centers > candidates.len() {
        return Err(CrfError::InvalidConfig(format!(
            "n_centers = {n_centers} must lie in 1..={} (distinct training inputs)",
            candidates.len()
        )));
    }
    let picks = ols_select(train, &candidates, n_centers, width);
    if picks.is_empty() {
        return Err(CrfError::Singular);
    }
    let centers: Vec<T> = picks.iter().map(|s| candidates[s.candidate]).collect();
    let k = centers.len();
    let mut design = Matrix::zeros(train.len(), k + 1);
    for (j, &c) in centers.iter().enumerate() {
        for (i, v) in gaussian_column(train, c, width).into_iter().enumerate() {
            design[(i, j)] = v;
        }
    }
    for i in 0..train.len() {
        design[(i, k)] = T::one();
    }
    let y: Vec<T> = train.iter().map(|o| o.y).collect();
    let sol = lstsq(&design, &y)?;
    let mut params = Vec::with_capacity(2 * k + 1);
    for (j, &c) in centers.iter().enumerate() {
        params.push(c);
        params.push(sol.x[j]);
    }
    params.push(sol.x[k]);
    let hyper = Hyper {
        units: k,
        rbf_width: Some(width),
    };
    let mut fitted = FittedModel::new(KernelModel::new(ModelKind::Rbf, hyper, params, unit_range())?);
    if k < n_centers {
        fitted
            .notes
            .push(format!("rank-deficient basis: selected {k} of {n_centers} requested centers"));
    }
    Ok(fitted)
}
