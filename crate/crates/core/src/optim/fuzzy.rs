//! Takagi-Sugeno fuzzy models: grid partitioning with least-squares
//! consequents, and the hybrid (ANFIS) premise refinement.

use crate::error::{CrfError, Result};
use crate::linalg::{lstsq, Matrix};
use crate::models::{tsk_weights, Hyper, KernelModel, ModelKind, Obs};
use crate::optim::{record, unit_range, FittedModel};
use crate::scalar::Scalar;

/// Smallest membership width ANFIS may reach.
pub const SIGMA_FLOOR: f64 = 1e-3;

/// Rule centers on a uniform grid over `[0, 1]`, widths half the spacing.
/// A single rule sits at 0.5 with width 0.5.
pub fn grid_premise<T: Scalar>(rules: usize) -> Vec<(T, T)> {
    if rules == 1 {
        return vec![(T::lit(0.5), T::lit(0.5))];
    }
    let spacing = T::one() / T::from_count(rules - 1);
    (0..rules)
        .map(|i| (T::from_count(i) * spacing, spacing * T::lit(0.5)))
        .collect()
}

pub(crate) fn params_from_premise<T: Scalar>(premise: &[(T, T)]) -> Vec<T> {
    premise
        .iter()
        .flat_map(|&(c, s)| [T::zero(), T::zero(), c, s])
        .collect()
}

/// Rows `[w_1 φ, w_1, …, w_M φ, w_M]` of normalized validities.
pub fn consequent_design<T: Scalar>(params: &[T], data: &[Obs<T>]) -> Result<Matrix<T>> {
    let rules = params.len() / 4;
    let mut design = Matrix::zeros(data.len(), 2 * rules);
    let mut w = Vec::with_capacity(rules);
    for (k, o) in data.iter().enumerate() {
        tsk_weights(params, o.phi, &mut w)?;
        let row = design.row_mut(k);
        for (i, &wi) in w.iter().enumerate() {
            row[2 * i] = wi * o.phi;
            row[2 * i + 1] = wi;
        }
    }
    Ok(design)
}

/// Re-solves every `(a_i, b_i)` by global least squares for fixed premises;
/// returns the rank of the design.
pub fn solve_consequents<T: Scalar>(params: &mut [T], data: &[Obs<T>]) -> Result<usize> {
    let design = consequent_design(params, data)?;
    let y: Vec<T> = data.iter().map(|o| o.y).collect();
    let sol = lstsq(&design, &y)?;
    for i in 0..params.len() / 4 {
        params[4 * i] = sol.x[2 * i];
        params[4 * i + 1] = sol.x[2 * i + 1];
    }
    Ok(sol.rank)
}

fn rank_note(rank: usize, rules: usize) -> Option<String> {
    (rank < 2 * rules).then(|| format!("consequent design rank {rank} < {} (rules exceed data support)", 2 * rules))
}

/// Fuzzy model with grid-partitioned premises and least-squares consequents.
pub fn fit_fuzzy_grid<T: Scalar>(train: &[Obs<T>], rules: usize) -> Result<FittedModel<T>> {
    if rules == 0 {
        return Err(CrfError::InvalidConfig("fuzzy model needs at least one rule".into()));
    }
    if train.is_empty() {
        return Err(CrfError::EmptyData);
    }
    let mut params = params_from_premise(&grid_premise::<T>(rules));
    let rank = solve_consequents(&mut params, train)?;
    let mut fitted = FittedModel::new(KernelModel::new(ModelKind::TskFuzzy, Hyper::units(rules), params, unit_range())?);
    fitted.notes.extend(rank_note(rank, rules));
    Ok(fitted)
}

/// `∂J/∂(c_i, σ_i)` for `J = ½ Σ e²`, laid out as `[c_1, σ_1, c_2, σ_2, …]`.
pub fn premise_gradient<T: Scalar>(model: &KernelModel<T>, data: &[Obs<T>]) -> Result<Vec<T>> {
    let rules = model.hyper.units;
    let mut out = vec![T::zero(); 2 * rules];
    let mut g = vec![T::zero(); model.n_params()];
    for o in data {
        let e = o.y - model.eval_with_gradient(o.phi, &mut g)?;
        for i in 0..rules {
            out[2 * i] -= e * g[4 * i + 2];
            out[2 * i + 1] -= e * g[4 * i + 3];
        }
    }
    Ok(out)
}

/// ANFIS hybrid learning.
///
/// Premises start from the grid partition. Every epoch solves the
/// consequents by least squares, then moves the premises `(c_i, σ_i)` one
/// gradient-descent step of size `step` on `½ Σ e²`. Consequents are solved
/// once more after the last epoch so they match the final premises.
pub fn train_anfis<T: Scalar>(
    train: &[Obs<T>],
    val: &[Obs<T>],
    rules: usize,
    epochs: usize,
    step: T,
) -> Result<FittedModel<T>> {
    if epochs == 0 {
        return Err(CrfError::InvalidConfig("ANFIS needs at least one epoch".into()));
    }
    let grid = fit_fuzzy_grid(train, rules)?;
    let mut model = grid.model;
    model.kind = ModelKind::Anfis;
    let mut fitted = FittedModel::new(model.clone());
    fitted.notes = grid.notes;
    let floor = T::lit(SIGMA_FLOOR);
    let mut clamped = false;
    for epoch in 1..=epochs {
        if epoch > 1 {
            solve_consequents(&mut model.params, train)?;
        }
        fitted.trace.push(record(epoch, &model, train, val)?);
        let grad = premise_gradient(&model, train)?;
        for i in 0..rules {
            model.params[4 * i + 2] -= step * grad[2 * i];
            let s = model.params[4 * i + 3] - step * grad[2 * i + 1];
            if s < floor {
                clamped = true;
                model.params[4 * i + 3] = floor;
            } else {
                model.params[4 * i + 3] = s;
            }
        }
    }
    let rank = solve_consequents(&mut model.params, train)?;
    fitted.notes.extend(rank_note(rank, rules));
    if clamped {
        fitted.notes.push(format!("membership width clamped at floor {SIGMA_FLOOR}"));
    }
    fitted.model = model;
    Ok(fitted)
}
