//! Helpers shared by the integration tests.
#![allow(dead_code)]

use crf::models::{Hyper, KernelModel, ModelKind, Obs};
use crf::preprocess::DEFAULT_CONTRASTS;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-6;
/// Gradients smaller than this are compared on an absolute scale.
pub const FD_FLOOR: f64 = 1e-3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random valid model of `kind` with 1 to 3 units where applicable.
pub fn random_model(kind: ModelKind, r: &mut ChaCha8Rng) -> KernelModel<f64> {
    let units = r.gen_range(1..=3);
    let u = |r: &mut ChaCha8Rng, lo: f64, hi: f64| r.gen_range(lo..hi);
    let (hyper, params) = match kind {
        ModelKind::Linear => (Hyper::units(0), vec![u(r, -3.0, 3.0), u(r, -3.0, 3.0)]),
        ModelKind::NakaRushton => (Hyper::units(0), vec![u(r, 0.1, 4.0), u(r, 0.05, 1.0), u(r, 0.5, 4.0), u(r, 0.0, 2.0)]),
        ModelKind::ModifiedNakaRushton => (
            Hyper::units(0),
            vec![u(r, 0.1, 4.0), u(r, 0.05, 1.0), u(r, 0.5, 4.0), u(r, 0.0, 2.0), u(r, 0.5, 2.5)],
        ),
        ModelKind::Mlp => (Hyper::units(units), (0..3 * units + 1).map(|_| u(r, -3.0, 3.0)).collect()),
        ModelKind::Rbf => {
            let mut p = Vec::new();
            for _ in 0..units {
                p.push(u(r, 0.0, 1.0));
                p.push(u(r, -3.0, 3.0));
            }
            p.push(u(r, -1.0, 1.0));
            (Hyper { units, rbf_width: Some(u(r, 0.1, 0.8)) }, p)
        }
        _ => {
            let mut p = Vec::new();
            for _ in 0..units {
                p.extend([u(r, -3.0, 3.0), u(r, -3.0, 3.0), u(r, 0.0, 1.0), u(r, 0.1, 0.8)]);
            }
            (Hyper::units(units), p)
        }
    };
    KernelModel::new(kind, hyper, params, (0.0, 1.0)).unwrap()
}

/// Largest relative gap between the analytic gradient and central
/// differences; gaps are scaled by `max(|fd|, FD_FLOOR)`.
pub fn gradient_gap(m: &KernelModel<f64>, phi: f64) -> f64 {
    let g = m.gradient(phi).unwrap();
    let mut worst = 0.0f64;
    for i in 0..m.params.len() {
        let mut p = m.params.clone();
        p[i] += FD_STEP;
        let up = m.eval_at(&p, phi).unwrap();
        p[i] -= 2.0 * FD_STEP;
        let dn = m.eval_at(&p, phi).unwrap();
        let fd = (up - dn) / (2.0 * FD_STEP);
        worst = worst.max((g[i] - fd).abs() / fd.abs().max(FD_FLOOR));
    }
    worst
}

/// Noise-free observations of `m` on the normalized default grid.
pub fn grid_obs(m: &KernelModel<f64>) -> Vec<Obs<f64>> {
    DEFAULT_CONTRASTS
        .iter()
        .map(|c| {
            let x = c / 0.76;
            Obs::new(x, m.eval(x).unwrap())
        })
        .collect()
}

/// Two-neuron MLP teacher rising then falling over `[0, 1]`.
pub fn mlp_teacher() -> KernelModel<f64> {
    KernelModel::new(ModelKind::Mlp, Hyper::units(2), vec![10.0, -3.0, 2.0, 8.0, -6.0, -1.5, 1.0], (0.0, 1.0)).unwrap()
}

/// Spearman rank correlation (no ties expected).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        for (k, &i) in idx.iter().enumerate() {
            r[i] = k as f64;
        }
        r
    };
    let (ra, rb) = (rank(a), rank(b));
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}
