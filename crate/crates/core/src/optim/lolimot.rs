//! Local linear model tree on the unit interval.
//!
//! Each local model owns an interval; its validity is a Gaussian centered on
//! the interval with width one third of the interval length, normalized over
//! all local models. Local lines are estimated by weighted least squares
//! using their own validities as weights.

use crate::error::{CrfError, Result};
use crate::linalg::{lstsq, Matrix};
use crate::models::{tsk_weights, Hyper, KernelModel, ModelKind, Obs};
use crate::optim::{unit_range, FittedModel};
use crate::scalar::Scalar;

/// Validity width as a fraction of the interval length.
pub const WIDTH_FACTOR: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell<T> {
    lo: T,
    hi: T,
}

struct Tree<T> {
    params: Vec<T>,
    sse: T,
}

fn premise_params<T: Scalar>(cells: &[Cell<T>]) -> Vec<T> {
    let half = T::lit(0.5);
    cells
        .iter()
        .flat_map(|c| [T::zero(), T::zero(), (c.lo + c.hi) * half, (c.hi - c.lo) * T::lit(WIDTH_FACTOR)])
        .collect()
}

/// Validities of every point, one row per observation.
fn validities<T: Scalar>(params: &[T], data: &[Obs<T>]) -> Result<Vec<Vec<T>>> {
    let mut w = Vec::new();
    data.iter()
        .map(|o| {
            tsk_weights(params, o.phi, &mut w)?;
            Ok(w.clone())
        })
        .collect()
}

fn estimate<T: Scalar>(cells: &[Cell<T>], data: &[Obs<T>]) -> Result<Tree<T>> {
    let mut params = premise_params(cells);
    let phi = validities(&params, data)?;
    for i in 0..cells.len() {
        let mut a = Matrix::zeros(data.len(), 2);
        let mut b = Vec::with_capacity(data.len());
        for (k, o) in data.iter().enumerate() {
            let s = phi[k][i].sqrt();
            a[(k, 0)] = s * o.phi;
            a[(k, 1)] = s;
            b.push(s * o.y);
        }
        let sol = lstsq(&a, &b)?;
        params[4 * i] = sol.x[0];
        params[4 * i + 1] = sol.x[1];
    }
    let sse = data
        .iter()
        .zip(&phi)
        .map(|(o, w)| {
            let yhat: T = (0..cells.len()).map(|i| w[i] * (params[4 * i] * o.phi + params[4 * i + 1])).sum();
            let e = o.y - yhat;
            e * e
        })
        .sum();
    Ok(Tree { params, sse })
}

/// Validity-weighted squared error of each local model.
fn local_losses<T: Scalar>(tree: &Tree<T>, cells: usize, data: &[Obs<T>]) -> Result<Vec<T>> {
    let phi = validities(&tree.params, data)?;
    let mut loss = vec![T::zero(); cells];
    for (o, w) in data.iter().zip(&phi) {
        let yhat: T = (0..cells).map(|i| w[i] * (tree.params[4 * i] * o.phi + tree.params[4 * i + 1])).sum();
        let e2 = (o.y - yhat) * (o.y - yhat);
        for i in 0..cells {
            loss[i] += w[i] * e2;
        }
    }
    Ok(loss)
}

fn occupied<T: Scalar>(lo: T, hi: T, data: &[Obs<T>]) -> bool {
    data.iter().any(|o| o.phi >= lo && o.phi <= hi)
}

/// Grows the tree up to `nl_max` local models.
///
/// Every round tries the local models from worst to best local loss, halving
/// the interval at its midpoint. A split is rejected if either half holds no
/// training input or if the global squared error does not drop; the first
/// accepted split ends the round. Growth stops when no split is accepted.
pub fn fit_lolimot<T: Scalar>(train: &[Obs<T>], nl_max: usize) -> Result<FittedModel<T>> {
    if nl_max == 0 {
        return Err(CrfError::InvalidConfig("LOLIMOT needs nl_max >= 1".into()));
    }
    if train.is_empty() {
        return Err(CrfError::EmptyData);
    }
    let mut cells = vec![Cell { lo: T::zero(), hi: T::one() }];
    let mut tree = estimate(&cells, train)?;
    let mut notes = Vec::new();
    while cells.len() < nl_max {
        let loss = local_losses(&tree, cells.len(), train)?;
        let mut order: Vec<usize> = (0..cells.len()).collect();
        order.sort_by(|&a, &b| loss[b].partial_cmp(&loss[a]).expect("finite losses"));
        let mut grown = None;
        for i in order {
            let Cell { lo, hi } = cells[i];
            let mid = (lo + hi) * T::lit(0.5);
            if !occupied(lo, mid, train) || !occupied(mid, hi, train) {
                continue;
            }
            let mut candidate = cells.clone();
            candidate[i] = Cell { lo, hi: mid };
            candidate.insert(i + 1, Cell { lo: mid, hi });
            let t = estimate(&candidate, train)?;
            if t.sse < tree.sse {
                grown = Some((candidate, t));
                break;
            }
        }
        match grown {
            Some((c, t)) => {
                cells = c;
                tree = t;
            }
            None => {
                notes.push(format!("stopped at {} local models: no split improved the fit", cells.len()));
                break;
            }
        }
    }
    let model = KernelModel::new(ModelKind::Lolimot, Hyper::units(cells.len()), tree.params, unit_range())?;
    let mut fitted = FittedModel::new(model);
    fitted.notes = notes;
    Ok(fitted)
}
