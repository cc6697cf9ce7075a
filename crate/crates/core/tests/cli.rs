use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crf::preprocess::io::parse_curves_csv;
use crf::report::{from_csv, ClassRow, FitReport, HyperReport, TableRow};
use crf::synth::{CurveShape, GroundTruth};
use tempfile::TempDir;

fn crf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crf"))
        .args(args)
        .env_remove("CRF_SEED")
        .env_remove("CRF_THREADS")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let o = crf(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Every file under `dir` with its bytes, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn synth_default(dir: &Path, seed: &str) -> PathBuf {
    ok(&["synth", "--seed", seed, "--out-dir", p(dir)]);
    dir.join("curves.csv")
}

#[test]
fn default_synth_and_classify_counts() {
    let t = TempDir::new().unwrap();
    let curves = synth_default(t.path(), "3");
    let parsed = parse_curves_csv::<f64>(&fs::read_to_string(&curves).unwrap(), "curves.csv").unwrap();
    assert_eq!(parsed.len(), 66);
    let truth: Vec<GroundTruth> = serde_json::from_str(&fs::read_to_string(t.path().join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth.iter().filter(|g| g.shape == CurveShape::Supersaturating).count(), 28);

    let classes = t.path().join("classes.csv");
    let o = ok(&["classify", "--curves", p(&curves), "--out", p(&classes)]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("supersaturating 28\tmonotone 38\tskipped 0"));
    let rows: Vec<ClassRow> = from_csv(&fs::read_to_string(&classes).unwrap(), "classes.csv").unwrap();
    assert_eq!(rows.len(), 66);
}

#[test]
fn noise_free_spec_reproduces_truth() {
    let t = TempDir::new().unwrap();
    let spec = t.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"kind":"Saturating","true_params":[2.0,0.3,2.0,1.0],"noise_sd":0.0,"n_curves":3,"seed":1}"#,
    )
    .unwrap();
    let out = t.path().join("out");
    ok(&["synth", "--spec", p(&spec), "--out-dir", p(&out)]);
    let curves = parse_curves_csv::<f64>(&fs::read_to_string(out.join("curves.csv")).unwrap(), "c").unwrap();
    let truth: Vec<GroundTruth> = serde_json::from_str(&fs::read_to_string(out.join("truth.json")).unwrap()).unwrap();
    assert_eq!(curves.len(), 3);
    for (c, g) in curves.iter().zip(&truth) {
        assert_eq!(c.responses(), g.responses);
    }
}

#[test]
fn missing_spec_fails() {
    let t = TempDir::new().unwrap();
    let o = crf(&["synth", "--spec", p(&t.path().join("nope.json")), "--out-dir", p(t.path())]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.json"));
}

#[test]
fn malformed_row_names_its_line() {
    let t = TempDir::new().unwrap();
    let bad = t.path().join("bad.csv");
    fs::write(&bad, "site_id,contrast,response,n_trials\ns1,0,1.0,20\ns1,0.02,abc,20\n").unwrap();
    let o = crf(&["classify", "--curves", p(&bad), "--out", p(&t.path().join("c.csv"))]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.csv:3") && err.contains("abc"), "{err}");
}

#[test]
fn empty_classify_input_warns() {
    let t = TempDir::new().unwrap();
    let empty = t.path().join("empty.csv");
    fs::write(&empty, "site_id,contrast,response,n_trials\n").unwrap();
    let out = t.path().join("c.csv");
    let o = ok(&["classify", "--curves", p(&empty), "--out", p(&out)]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert!(out.exists());
}

#[test]
fn linear_only_config_fits_exact_lines() {
    let t = TempDir::new().unwrap();
    let spec = t.path().join("spec.json");
    fs::write(&spec, r#"{"kind":"Linear","true_params":[2.0,1.0],"noise_sd":0.0,"n_curves":4,"seed":0}"#).unwrap();
    ok(&["synth", "--spec", p(&spec), "--out-dir", p(t.path())]);
    let cfg = t.path().join("cfg.toml");
    fs::write(&cfg, "kinds = [\"Linear\"]\n").unwrap();
    let out = t.path().join("fit");
    ok(&["fit", "--curves", p(&t.path().join("curves.csv")), "--config", p(&cfg), "--out-dir", p(&out)]);
    let rows: Vec<TableRow> = from_csv(&fs::read_to_string(out.join("table1.csv")).unwrap(), "table1.csv").unwrap();
    assert_eq!(rows.len(), 1);
    let report: FitReport = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let row = &report.table.rows[0];
    assert_eq!((row.n_tuned, row.n_curves), (4, 4));
    assert!((row.mean_r2.unwrap() - 1.0).abs() < 1e-12);
    assert!(report.pooled.is_none());
}

#[test]
fn single_run_search_has_zero_spread() {
    let t = TempDir::new().unwrap();
    let curves = synth_default(t.path(), "0");
    let cfg = t.path().join("cfg.toml");
    fs::write(&cfg, "[hyper]\nn_runs = 1\ncandidate_neurons = [1, 2, 3]\ncandidate_epochs = [1, 2, 3]\nsweep_epochs = 10\n").unwrap();
    let out = t.path().join("hyper.json");
    ok(&["hypersearch", "--curves", p(&curves), "--config", p(&cfg), "--out", p(&out)]);
    let r: HyperReport = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r.pool_size, 224);
    assert_eq!((r.result.neurons.std, r.result.epochs.std), (0.0, 0.0));
}

fn assert_same(a: &BTreeMap<PathBuf, Vec<u8>>, b: &BTreeMap<PathBuf, Vec<u8>>, skip: &[&str]) {
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (k, v) in a {
        if !skip.iter().any(|s| Path::new(s) == k) {
            assert!(v == &b[k], "{} differs", k.display());
        }
    }
}

#[test]
fn fit_reruns_are_byte_identical() {
    let t = TempDir::new().unwrap();
    let curves = synth_default(t.path(), "2");
    let (a, b, c) = (t.path().join("a"), t.path().join("b"), t.path().join("c"));
    ok(&["fit", "--seed", "5", "--curves", p(&curves), "--out-dir", p(&a)]);
    ok(&["fit", "--seed", "5", "--curves", p(&curves), "--out-dir", p(&b)]);
    ok(&["fit", "--seed", "5", "--threads", "1", "--curves", p(&curves), "--out-dir", p(&c)]);
    let (sa, sb, sc) = (snapshot(&a), snapshot(&b), snapshot(&c));
    assert!(sa.len() >= 5, "{:?}", sa.keys());
    assert_same(&sa, &sb, &[]);
    // only the echoed thread count may change with the pool size
    assert_same(&sa, &sc, &["report.json"]);
    let read = |m: &BTreeMap<PathBuf, Vec<u8>>| -> FitReport { serde_json::from_slice(&m[Path::new("report.json")]).unwrap() };
    let (ra, mut rc) = (read(&sa), read(&sc));
    assert_eq!(rc.config.threads, 1);
    rc.config.threads = 0;
    assert_eq!(ra, rc);
    assert_eq!(ra.config.seed, 5);
    assert_eq!(ra.classes.len(), 66);
}

#[test]
fn env_seed_applies_and_flag_wins() {
    let t = TempDir::new().unwrap();
    let run = |dir: &str, env: Option<&str>, flag: Option<&str>| {
        let out = t.path().join(dir);
        let mut c = Command::new(env!("CARGO_BIN_EXE_crf"));
        c.env_remove("CRF_SEED");
        if let Some(s) = env {
            c.env("CRF_SEED", s);
        }
        if let Some(s) = flag {
            c.args(["--seed", s]);
        }
        assert!(c.args(["synth", "--out-dir", p(&out)]).output().unwrap().status.success());
        fs::read(out.join("curves.csv")).unwrap()
    };
    let flag7 = run("a", None, Some("7"));
    assert_eq!(run("b", Some("7"), None), flag7);
    assert_eq!(run("c", Some("8"), Some("7")), flag7);
    assert_ne!(run("d", Some("8"), None), flag7);
}

#[test]
fn bad_env_value_is_an_error() {
    let t = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_crf"))
        .env("CRF_THREADS", "many")
        .args(["synth", "--out-dir", p(t.path())])
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("CRF_THREADS"));
}
