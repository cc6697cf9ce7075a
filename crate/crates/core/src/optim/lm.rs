//! Levenberg-Marquardt on the half sum of squared residuals.
//!
//! One step solves `(Σ g_k g_kᵀ + μ I) Δ = Σ e_k g_k` with `g_k = ∂ŷ_k/∂θ` and
//! moves to `θ + Δ` (equivalently `θ − (JᵀJ + μI)⁻¹ ∇J`). The step is kept
//! only if the cost drops; then `μ ← μ/10`. Otherwise `μ ← 10μ` and the solve
//! is retried, at most [`MAX_INFLATIONS`] times.

use serde::{Deserialize, Serialize};

use crate::error::{CrfError, Result};
use crate::linalg::{solve, Matrix};
use crate::models::{cost, residual_jacobian, KernelModel, Obs};
use crate::scalar::Scalar;

pub const MAX_INFLATIONS: usize = 20;
const MU_MIN: f64 = 1e-30;
const MU_MAX: f64 = 1e30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmState<T> {
    pub params: Vec<T>,
    /// Damping `μ > 0`.
    pub mu: T,
    pub iteration: usize,
    /// Cost after every step, starting with the initial cost.
    pub cost_history: Vec<T>,
    pub last_accepted: bool,
}

impl<T: Scalar> LmState<T> {
    pub fn new(model: &KernelModel<T>, data: &[Obs<T>], mu: T) -> Result<Self> {
        let c = cost(model, &model.params, data)?;
        if !c.is_finite() {
            return Err(CrfError::Divergence);
        }
        Ok(Self {
            params: model.params.clone(),
            mu,
            iteration: 0,
            cost_history: vec![c],
            last_accepted: false,
        })
    }

    pub fn cost(&self) -> T {
        *self.cost_history.last().expect("history starts non-empty")
    }
}

/// One damped Gauss-Newton step.
///
/// A step that cannot lower the cost after every inflation leaves the
/// parameters unchanged with `last_accepted = false`; a damped system that
/// stays singular through every inflation is an error.
pub fn lm_step<T: Scalar>(model: &KernelModel<T>, data: &[Obs<T>], state: LmState<T>) -> Result<LmState<T>> {
    let at = model.with_params(state.params.clone());
    let (res, jac) = residual_jacobian(&at, data)?;
    let cost0 = res.iter().map(|&e| e * e).sum::<T>() * T::lit(0.5);
    if !cost0.is_finite() {
        return Err(CrfError::Divergence);
    }
    let mut next = state;
    next.iteration += 1;
    next.last_accepted = false;

    let rhs = jac.t_mul_vec(&res);
    if rhs.iter().all(|g| *g == T::zero()) {
        next.cost_history.push(cost0);
        return Ok(next);
    }
    let gram = jac.gram();
    let n = rhs.len();
    let mut mu = next.mu;
    let mut solved_any = false;
    for _ in 0..=MAX_INFLATIONS {
        let mut damped: Matrix<T> = gram.clone();
        for i in 0..n {
            damped[(i, i)] += mu;
        }
        if let Ok(delta) = solve(&damped, &rhs) {
            solved_any = true;
            let mut trial: Vec<T> = next.params.iter().zip(&delta).map(|(&p, &d)| p + d).collect();
            model.project(&mut trial);
            // Evaluation errors at the trial point count as a failed step.
            if let Ok(c) = cost(model, &trial, data) {
                if c.is_finite() && c < cost0 {
                    next.params = trial;
                    next.mu = (mu / T::lit(10.0)).max(T::lit(MU_MIN));
                    next.cost_history.push(c);
                    next.last_accepted = true;
                    return Ok(next);
                }
            }
        }
        mu = (mu * T::lit(10.0)).min(T::lit(MU_MAX));
    }
    if !solved_any {
        return Err(CrfError::StepFailure);
    }
    next.mu = mu;
    next.cost_history.push(cost0);
    Ok(next)
}

/// Stopping rules for an LM run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LmOptions {
    pub max_iter: usize,
    pub init_mu: f64,
    /// Stop once an accepted step improves the cost by less than this fraction.
    pub rel_tol: f64,
    /// Stop once the cost falls to this value.
    pub abs_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            init_mu: 0.01,
            rel_tol: 1e-12,
            abs_tol: 1e-24,
        }
    }
}

/// Iterates [`lm_step`] until a stopping rule fires.
pub fn lm_minimize<T: Scalar>(model: &KernelModel<T>, data: &[Obs<T>], opts: LmOptions) -> Result<LmState<T>> {
    let mut state = LmState::new(model, data, T::lit(opts.init_mu))?;
    for _ in 0..opts.max_iter {
        if state.cost() <= T::lit(opts.abs_tol) {
            break;
        }
        let before = state.cost();
        state = lm_step(model, data, state)?;
        if !state.last_accepted {
            break;
        }
        if before - state.cost() <= T::lit(opts.rel_tol) * before {
            break;
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::lstsq;
    use crate::models::{Hyper, ModelKind};

    fn linear_data() -> Vec<Obs<f64>> {
        [(0.0, 1.1), (0.2, 1.45), (0.5, 2.2), (0.7, 2.35), (1.0, 3.1)]
            .iter()
            .map(|&(x, y)| Obs::new(x, y))
            .collect()
    }

    fn closed_form(data: &[Obs<f64>]) -> Vec<f64> {
        let rows: Vec<Vec<f64>> = data.iter().map(|o| vec![o.phi, 1.0]).collect();
        let y: Vec<f64> = data.iter().map(|o| o.y).collect();
        lstsq(&Matrix::from_rows(&rows), &y).unwrap().x
    }

    #[test]
    fn one_step_reaches_normal_equations_solution() {
        let data = linear_data();
        let m = KernelModel::new(ModelKind::Linear, Hyper::units(0), vec![-4.0, 9.0], (0.0, 1.0)).unwrap();
        let mut st = LmState::new(&m, &data, 1e-12).unwrap();
        st = lm_step(&m, &data, st).unwrap();
        assert!(st.last_accepted);
        for (p, q) in st.params.iter().zip(closed_form(&data)) {
            assert!((p - q).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_residual_is_a_fixed_point() {
        let m = KernelModel::new(ModelKind::Linear, Hyper::units(0), vec![2.0, 1.0], (0.0, 1.0)).unwrap();
        let data: Vec<Obs<f64>> = (0..5).map(|i| Obs::new(i as f64 / 4.0, 2.0 * i as f64 / 4.0 + 1.0)).collect();
        let st = lm_step(&m, &data, LmState::new(&m, &data, 0.01).unwrap()).unwrap();
        assert_eq!(st.params, vec![2.0, 1.0]);
    }

    #[test]
    fn huge_damping_gives_tiny_update() {
        let data = linear_data();
        let m = KernelModel::new(ModelKind::Linear, Hyper::units(0), vec![0.0, 0.0], (0.0, 1.0)).unwrap();
        let st = lm_step(&m, &data, LmState::new(&m, &data, 1e12).unwrap()).unwrap();
        let norm: f64 = st.params.iter().map(|p| p * p).sum::<f64>().sqrt();
        assert!(norm < 1e-9, "update norm {norm}");
    }

    #[test]
    fn accepted_steps_strictly_decrease_cost() {
        let data: Vec<Obs<f64>> = (0..8)
            .map(|i| {
                let x = i as f64 / 7.0;
                Obs::new(x, 1.0 + 2.0 * x * x / (x * x + 0.1) + 0.01 * (i as f64).sin())
            })
            .collect();
        let m = KernelModel::new(ModelKind::NakaRushton, Hyper::units(0), vec![1.0, 0.5, 1.0, 1.0], (0.0, 1.0)).unwrap();
        let mut st = LmState::new(&m, &data, 0.01).unwrap();
        for _ in 0..50 {
            let before = st.cost();
            st = lm_step(&m, &data, st).unwrap();
            if st.last_accepted {
                assert!(st.cost() < before);
            } else {
                assert_eq!(st.cost(), before);
            }
        }
    }
}
