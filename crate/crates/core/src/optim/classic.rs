//! Linear, Naka-Rushton and modified Naka-Rushton fits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CrfError, Result};
use crate::linalg::{lstsq, Matrix};
use crate::models::{cost, Hyper, KernelModel, ModelKind, Obs};
use crate::optim::lm::{lm_minimize, LmOptions};
use crate::optim::{unit_range, FittedModel};
use crate::scalar::Scalar;

/// Restarts attempted after a failed LM run.
pub const RESTARTS: u64 = 5;

/// Heuristic start: `R_m = max − min`, `C50 = 0.3`, `n = 2`, `s = 1`,
/// `B` = mean response at the lowest input.
pub fn heuristic_init<T: Scalar>(kind: ModelKind, data: &[Obs<T>]) -> Vec<T> {
    let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
    for o in data {
        lo = lo.min(o.y);
        hi = hi.max(o.y);
    }
    let min_phi = data.iter().map(|o| o.phi).fold(T::infinity(), T::min);
    let at_min: Vec<T> = data.iter().filter(|o| o.phi == min_phi).map(|o| o.y).collect();
    let base = at_min.iter().copied().sum::<T>() / T::from_count(at_min.len().max(1));
    let rm = hi - lo;
    match kind {
        ModelKind::NakaRushton => vec![rm, T::lit(0.3), T::lit(2.0), base],
        ModelKind::ModifiedNakaRushton => vec![rm, T::lit(0.3), T::lit(2.0), base, T::one()],
        _ => unreachable!("heuristic start only for the Naka-Rushton family"),
    }
}

fn fit_linear<T: Scalar>(train: &[Obs<T>]) -> Result<Vec<T>> {
    let rows: Vec<Vec<T>> = train.iter().map(|o| vec![o.phi, T::one()]).collect();
    let y: Vec<T> = train.iter().map(|o| o.y).collect();
    let sol = lstsq(&Matrix::from_rows(&rows), &y)?;
    Ok(sol.x)
}

fn jitter<T: Scalar>(base: &[T], seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    base.iter()
        .enumerate()
        .map(|(i, &p)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            // amplitude and baseline shift additively, shape parameters multiplicatively
            if i == 0 || i == 3 {
                p + T::lit(0.5 * z) * (p.abs() + T::lit(0.1))
            } else {
                p * T::lit((0.5 * z).exp())
            }
        })
        .collect()
}

/// Fits the linear model in closed form, or the Naka-Rushton family by LM
/// from `warm_start` (or [`heuristic_init`]) with positivity enforced by
/// projection. A failing LM run is retried from up to [`RESTARTS`] jittered
/// starts; the lowest-cost success wins.
pub fn fit_classic<T: Scalar>(
    train: &[Obs<T>],
    kind: ModelKind,
    warm_start: Option<&[T]>,
    opts: LmOptions,
) -> Result<FittedModel<T>> {
    if train.is_empty() {
        return Err(CrfError::EmptyData);
    }
    let hyper = Hyper::units(0);
    match kind {
        ModelKind::Linear => {
            let p = fit_linear(train)?;
            Ok(FittedModel::new(KernelModel::new(kind, hyper, p, unit_range())?))
        }
        ModelKind::NakaRushton | ModelKind::ModifiedNakaRushton => {
            let start = match warm_start {
                Some(p) if p.len() == kind.param_len(0) => p.to_vec(),
                Some(p) => {
                    return Err(CrfError::ParamLength {
                        kind: kind.name(),
                        expected: kind.param_len(0),
                        got: p.len(),
                    })
                }
                None => heuristic_init(kind, train),
            };
            let mut template = KernelModel {
                kind,
                hyper,
                params: start,
                input_range: unit_range(),
            };
            let mut p0 = template.params.clone();
            template.project(&mut p0);
            template.params = p0;

            let attempt = |params: Vec<T>| -> Result<(Vec<T>, T)> {
                let m = template.with_params(params);
                let st = lm_minimize(&m, train, opts)?;
                let c = st.cost();
                Ok((st.params, c))
            };
            let mut notes = Vec::new();
            let best = match attempt(template.params.clone()) {
                Ok(r) => r,
                Err(first) => {
                    notes.push(format!("initial LM run failed ({first}); restarting"));
                    let mut best: Option<(Vec<T>, T)> = None;
                    for seed in 0..RESTARTS {
                        let mut p = jitter(&template.params, seed);
                        template.project(&mut p);
                        if let Ok((q, c)) = attempt(p) {
                            if best.as_ref().map_or(true, |b| c < b.1) {
                                best = Some((q, c));
                            }
                        }
                    }
                    best.ok_or(first)?
                }
            };
            debug_assert!(best.1 <= cost(&template, &template.params, train).unwrap_or(T::infinity()));
            let mut fitted = FittedModel::new(KernelModel::new(kind, hyper, best.0, unit_range())?);
            fitted.notes = notes;
            Ok(fitted)
        }
        other => Err(CrfError::InvalidConfig(format!("{other} is not a classic model"))),
    }
}
