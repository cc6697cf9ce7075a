mod common;

use std::collections::BTreeSet;

use crf::eval::{
    compare_models, curve_observations, fit_curve, loocv, monotonicity_index, nmse, pick_crossing, pooled_comparison,
    r_squared, select_hyperparameters, split_dataset, supersaturated_pool, CurveClass, HyperSearchConfig,
    ModelSettings, PoolPoint, SweepPoint,
};
use crf::models::ModelKind;
use crf::preprocess::{TuningCurve, DEFAULT_CONTRASTS};
use crf::synth::{gen_curves, CorpusSpec, CurveShape, SynthSpec};
use proptest::prelude::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn metric_worked_examples() {
    assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap(), 0.5);
    assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap(), 0.0);
    assert_eq!(nmse(&[2.0, 2.0], &[4.0, 4.0]).unwrap(), 0.5);
    assert!(r_squared(&[2.0, 2.0], &[1.0, 3.0]).is_err());
    assert!(nmse(&[1.0, -1.0], &[1.0, 2.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn r2_affine_invariant(
        y in prop::collection::vec(0.1f64..10.0, 3..12),
        noise in prop::collection::vec(-1.0f64..1.0, 12),
        a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
        b in -5.0f64..5.0,
    ) {
        let yhat: Vec<f64> = y.iter().zip(&noise).map(|(v, e)| v + e).collect();
        prop_assume!(r_squared(&y, &yhat).is_ok());
        let r = r_squared(&y, &yhat).unwrap();
        let ty: Vec<f64> = y.iter().map(|v| a * v + b).collect();
        let th: Vec<f64> = yhat.iter().map(|v| a * v + b).collect();
        prop_assert!((r_squared(&ty, &th).unwrap() - r).abs() < 1e-9 * (1.0 + r.abs()));
    }

    #[test]
    fn nmse_scale_invariant(
        y in prop::collection::vec(0.1f64..10.0, 3..12),
        noise in prop::collection::vec(-0.05f64..0.05, 12),
        a in 0.1f64..10.0,
    ) {
        let yhat: Vec<f64> = y.iter().zip(&noise).map(|(v, e)| v + e).collect();
        let n = nmse(&y, &yhat).unwrap();
        let sy: Vec<f64> = y.iter().map(|v| a * v).collect();
        let sh: Vec<f64> = yhat.iter().map(|v| a * v).collect();
        prop_assert!(close(nmse(&sy, &sh).unwrap(), n));
    }

    #[test]
    fn mi_is_one_iff_peak_at_top_contrast(r in prop::collection::vec(0.1f64..5.0, 8)) {
        let c = TuningCurve::from_pairs("p", &DEFAULT_CONTRASTS, &r).unwrap();
        let max = r.iter().copied().fold(f64::MIN, f64::max);
        prop_assume!(max != r[0]);
        let rep = monotonicity_index(&c).unwrap();
        let top = r[7] == max;
        prop_assert_eq!(rep.class == CurveClass::MonotoneLinearOrSaturating, top);
        prop_assert_eq!(rep.mi == 1.0, top);
        prop_assert!(rep.mi <= 1.0);
    }
}

#[test]
fn nmse_is_not_affine_invariant() {
    let (y, yh) = ([1.0, 2.0, 3.0], [1.5, 2.0, 2.5]);
    let shift = |v: &[f64]| v.iter().map(|x| x + 10.0).collect::<Vec<_>>();
    assert!(!close(nmse(&y, &yh).unwrap(), nmse(&shift(&y), &shift(&yh)).unwrap()));
}

#[test]
fn mi_worked_examples() {
    let c = TuningCurve::from_pairs("a", &DEFAULT_CONTRASTS, &[4.0, 5.0, 6.0, 8.0, 10.0, 9.0, 8.0, 7.0]).unwrap();
    assert_eq!(monotonicity_index(&c).unwrap().mi, 0.5);
    let back = TuningCurve::from_pairs("b", &DEFAULT_CONTRASTS, &[1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.5, 1.0]).unwrap();
    assert_eq!(monotonicity_index(&back).unwrap().mi, 0.0);
    let flat = TuningCurve::from_pairs("f", &DEFAULT_CONTRASTS, &[2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
    assert!(monotonicity_index(&flat).is_err());
}

fn noisy_saturating(n: usize, seed: u64) -> Vec<TuningCurve<f64>> {
    let spec = SynthSpec {
        kind: CurveShape::Saturating,
        true_params: vec![2.5, 0.3, 2.0, 1.0],
        noise_sd: 0.15,
        n_curves: n,
        seed,
        param_jitter: vec![0.2, 0.2, 0.1, 0.1],
        contrasts: DEFAULT_CONTRASTS.to_vec(),
    };
    gen_curves::<f64>(&spec).unwrap().into_iter().map(|c| c.curve).collect()
}

#[test]
fn loocv_r2_below_in_sample_r2() {
    let curves = noisy_saturating(100, 21);
    let s = ModelSettings::default();
    let mut below = 0;
    for c in &curves {
        let cv = loocv(c, ModelKind::NakaRushton, &s).unwrap();
        let m = fit_curve(c, ModelKind::NakaRushton, &s).unwrap();
        let pred: Vec<f64> = c.contrasts().iter().map(|&x| m.predict(x).unwrap()).collect();
        let full = r_squared(&c.responses(), &pred).unwrap();
        if cv.r2.is_some_and(|r| r <= full) {
            below += 1;
        }
    }
    assert!(below >= 95, "{below}/100");
}

#[test]
fn loocv_folds_cover_each_point_once() {
    let curves = noisy_saturating(5, 2);
    for kind in ModelKind::ALL {
        let r = loocv(&curves[0], kind, &ModelSettings::default()).unwrap();
        let held: Vec<usize> = r.per_fold.iter().map(|f| f.held_out).collect();
        assert_eq!(held, (0..8).collect::<Vec<_>>(), "{kind}");
    }
}

#[test]
fn linear_loocv_on_exact_line() {
    let ys: Vec<f64> = DEFAULT_CONTRASTS.iter().map(|c| 1.0 + 2.0 * c).collect();
    let c = TuningCurve::from_pairs("l", &DEFAULT_CONTRASTS, &ys).unwrap();
    let r = loocv(&c, ModelKind::Linear, &ModelSettings::default()).unwrap();
    assert!(r.per_fold.iter().all(|f| f.error.unwrap().abs() < 1e-9));
    assert!((r.r2.unwrap() - 1.0).abs() < 1e-12);
    let t = compare_models(&[c], &[ModelKind::Linear], &ModelSettings::default(), 0.6).unwrap();
    assert_eq!(t.rows[0].n_tuned, 1);
    assert!((t.rows[0].mean_r2.unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn table_counts_bounded_and_rows_in_kind_order() {
    let curves = noisy_saturating(6, 8);
    let kinds = [ModelKind::Lolimot, ModelKind::Linear, ModelKind::Mlp, ModelKind::NakaRushton];
    let s = ModelSettings::default();
    let t = compare_models(&curves, &kinds, &s, 0.6).unwrap();
    assert_eq!(t.rows.iter().map(|r| r.kind).collect::<Vec<_>>(), kinds);
    for r in &t.rows {
        assert!(r.n_tuned <= r.n_curves && r.n_curves == 6);
        assert_eq!(r.r2_per_curve.len(), 6);
    }
    let again = compare_models(&curves, &kinds, &s, 0.6).unwrap();
    assert_eq!(serde_json::to_string(&t).unwrap(), serde_json::to_string(&again).unwrap());
}

#[test]
fn fuzzy_tracks_anfis_on_pooled_set() {
    for seed in 0..5 {
        let corpus = CorpusSpec::default_corpus(seed).generate::<f64>().unwrap();
        let curves: Vec<TuningCurve<f64>> = corpus.into_iter().map(|c| c.curve).collect();
        let pool = supersaturated_pool(&curves);
        let p = pooled_comparison(&pool, &[ModelKind::TskFuzzy, ModelKind::Anfis], &ModelSettings::default(), seed).unwrap();
        let (f, a) = (p.test_nmse(ModelKind::TskFuzzy).unwrap(), p.test_nmse(ModelKind::Anfis).unwrap());
        assert!((f - a).abs() <= 0.05, "seed {seed}: fuzzy {f}, anfis {a}");
    }
}

fn grid_pool(curves: usize) -> Vec<PoolPoint<f64>> {
    (0..curves)
        .flat_map(|k| DEFAULT_CONTRASTS.iter().map(move |&c| PoolPoint { curve: k, contrast: c, response: 1.0 + c }))
        .collect()
}

#[test]
fn split_sizes_disjoint_and_seeded() {
    let pool = grid_pool(28);
    let s = split_dataset(&pool, 3).unwrap();
    assert_eq!(s.sizes(), [156, 34, 34]);
    let all: BTreeSet<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
    assert_eq!(all.len(), 224);
    assert_eq!(all, (0..224).collect());
    assert_eq!(s, split_dataset(&pool, 3).unwrap());
    assert_ne!(s, split_dataset(&pool, 4).unwrap());
    assert!(split_dataset(&grid_pool(27), 0).is_err());
}

#[test]
fn crossing_rule_examples() {
    let pt = |value, train_mse, val_mse| SweepPoint { value, train_mse, val_mse };
    let falling = [pt(1, 3.0, 3.0), pt(2, 2.0, 2.0), pt(3, 1.0, 1.0)];
    let pick = pick_crossing(&falling, 0.0).unwrap();
    assert_eq!((pick.value, pick.fallback), (3, true));
    let crossing = [pt(1, 3.0, 3.0), pt(2, 2.0, 1.0), pt(3, 1.0, 2.0)];
    let pick = pick_crossing(&crossing, 0.0).unwrap();
    assert_eq!((pick.value, pick.fallback), (2, false));
    let single = pick_crossing(&[pt(4, 1.0, 1.0)], 0.0).unwrap();
    assert_eq!((single.value, single.fallback), (4, false));
}

#[test]
fn single_candidates_give_zero_spread() {
    let curves: Vec<TuningCurve<f64>> = CorpusSpec::default_corpus(1)
        .generate::<f64>()
        .unwrap()
        .into_iter()
        .map(|c| c.curve)
        .collect();
    let pool = supersaturated_pool(&curves);
    let cfg = HyperSearchConfig {
        candidate_neurons: vec![2],
        candidate_epochs: vec![5],
        sweep_epochs: 5,
        n_runs: 4,
        ..Default::default()
    };
    let r = select_hyperparameters(&pool, &cfg).unwrap();
    assert_eq!((r.neurons.mean, r.neurons.std), (2.0, 0.0));
    assert_eq!((r.epochs.mean, r.epochs.std), (5.0, 0.0));
    assert_eq!(r.runs.len(), 4);
}

#[test]
fn pooled_points_come_from_supersaturating_curves() {
    let corpus = CorpusSpec::default_corpus(0).generate::<f64>().unwrap();
    let curves: Vec<TuningCurve<f64>> = corpus.iter().map(|c| c.curve.clone()).collect();
    let pool = supersaturated_pool(&curves);
    assert_eq!(pool.len() % 8, 0);
    for p in &pool {
        assert_eq!(monotonicity_index(&curves[p.curve]).unwrap().class, CurveClass::Supersaturating);
    }
    assert!(curve_observations(&curves[0]).unwrap().iter().all(|o| (0.0..=1.0).contains(&o.phi)));
}
