//! File formats at the preprocessing boundary.
//!
//! Trial file: a header line `site_id,contrast,onset_index,sample_rate`, one
//! line with those values, then one voltage sample per line.
//!
//! Raw directory: every `*.csv` trial file in lexical order, or the files
//! listed in `manifest.json` (`{"trials": ["a.csv", ...]}`) when present.
//!
//! Curves file: `site_id,contrast,response,n_trials`, one row per point.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CrfError, Result};
use crate::preprocess::{CurvePoint, RawRecording, Trial, TuningCurve};
use crate::scalar::Scalar;

pub const TRIAL_HEADER: &str = "site_id,contrast,onset_index,sample_rate";
pub const CURVES_HEADER: &str = "site_id,contrast,response,n_trials";
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub trials: Vec<PathBuf>,
}

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> CrfError {
    CrfError::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_num<T: Scalar>(field: &str, path: &str, line: usize, what: &str) -> Result<T> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("cannot parse {what} from `{field}`")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("{what} is not finite")));
    }
    Ok(T::lit(v))
}

/// A single parsed trial file.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialFile<T> {
    pub site_id: String,
    pub sample_rate: T,
    pub trial: Trial<T>,
}

pub fn parse_trial_csv<T: Scalar>(text: &str, path: &str) -> Result<TrialFile<T>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, h)) if h == TRIAL_HEADER => {}
        Some((n, h)) => return Err(parse_err(path, n, format!("expected header `{TRIAL_HEADER}`, found `{h}`"))),
        None => return Err(parse_err(path, 1, "empty file")),
    }
    let (meta_line, meta) = lines.next().ok_or_else(|| parse_err(path, 2, "missing metadata row"))?;
    let fields: Vec<&str> = meta.split(',').collect();
    if fields.len() != 4 {
        return Err(parse_err(path, meta_line, format!("expected 4 metadata fields, found {}", fields.len())));
    }
    let site_id = fields[0].trim().to_string();
    if site_id.is_empty() {
        return Err(parse_err(path, meta_line, "empty site_id"));
    }
    let contrast = parse_num(fields[1], path, meta_line, "contrast")?;
    let onset_index: usize = fields[2]
        .trim()
        .parse()
        .map_err(|_| parse_err(path, meta_line, format!("cannot parse onset_index from `{}`", fields[2])))?;
    let sample_rate: T = parse_num(fields[3], path, meta_line, "sample_rate")?;
    if !(sample_rate > T::zero()) {
        return Err(parse_err(path, meta_line, "sample_rate must be positive"));
    }
    let mut samples = Vec::new();
    for (n, l) in lines {
        if l.is_empty() {
            continue;
        }
        samples.push(parse_num(l, path, n, "sample")?);
    }
    if onset_index > samples.len() {
        return Err(parse_err(path, meta_line, "onset_index beyond the last sample"));
    }
    Ok(TrialFile {
        site_id,
        sample_rate,
        trial: Trial {
            contrast,
            onset_index,
            samples,
        },
    })
}

pub fn trial_to_csv<T: Scalar>(site_id: &str, sample_rate: T, trial: &Trial<T>) -> String {
    let mut s = String::with_capacity(trial.samples.len() * 12 + 64);
    let _ = writeln!(s, "{TRIAL_HEADER}");
    let _ = writeln!(s, "{site_id},{},{},{}", trial.contrast, trial.onset_index, sample_rate);
    for v in &trial.samples {
        let _ = writeln!(s, "{v}");
    }
    s
}

fn trial_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let manifest = dir.join(MANIFEST_NAME);
    if manifest.is_file() {
        let m: Manifest = serde_json::from_str(&std::fs::read_to_string(&manifest)?)?;
        return Ok(m.trials.into_iter().map(|p| if p.is_absolute() { p } else { dir.join(p) }).collect());
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Loads every trial under `dir` and groups them by site (sorted by site id).
pub fn read_raw_dir<T: Scalar>(dir: &Path) -> Result<Vec<RawRecording<T>>> {
    let mut sites: BTreeMap<String, RawRecording<T>> = BTreeMap::new();
    for path in trial_paths(dir)? {
        let label = path.display().to_string();
        let text = std::fs::read_to_string(&path)?;
        let tf = parse_trial_csv::<T>(&text, &label)?;
        let rec = sites.entry(tf.site_id.clone()).or_insert_with(|| RawRecording {
            site_id: tf.site_id.clone(),
            sample_rate: tf.sample_rate,
            trials: Vec::new(),
        });
        if rec.sample_rate != tf.sample_rate {
            return Err(parse_err(
                &label,
                2,
                format!("sample rate {} differs from {} used by site {}", tf.sample_rate, rec.sample_rate, rec.site_id),
            ));
        }
        rec.trials.push(tf.trial);
    }
    Ok(sites.into_values().collect())
}

pub fn curves_to_csv<T: Scalar>(curves: &[TuningCurve<T>]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{CURVES_HEADER}");
    for c in curves {
        for p in &c.points {
            let _ = writeln!(s, "{},{},{},{}", c.site_id, p.contrast, p.response, p.n_trials);
        }
    }
    s
}

/// Parses a curves file; sites keep their order of first appearance.
pub fn parse_curves_csv<T: Scalar>(text: &str, path: &str) -> Result<Vec<TuningCurve<T>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if headers != CURVES_HEADER {
        return Err(parse_err(path, 1, format!("expected header `{CURVES_HEADER}`, found `{headers}`")));
    }
    let mut order: Vec<String> = Vec::new();
    let mut points: BTreeMap<String, (usize, Vec<CurvePoint<T>>)> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 4 {
            return Err(parse_err(path, line, format!("expected 4 fields, found {}", rec.len())));
        }
        let site = rec[0].to_string();
        let contrast = parse_num(&rec[1], path, line, "contrast")?;
        let response = parse_num(&rec[2], path, line, "response")?;
        let n_trials: usize = rec[3]
            .parse()
            .map_err(|_| parse_err(path, line, format!("cannot parse n_trials from `{}`", &rec[3])))?;
        let entry = points.entry(site.clone()).or_insert_with(|| {
            order.push(site.clone());
            (line, Vec::new())
        });
        entry.1.push(CurvePoint { contrast, response, n_trials });
    }
    order
        .into_iter()
        .map(|site| {
            let (line, pts) = points.remove(&site).expect("site recorded");
            TuningCurve::new(site, pts).map_err(|e| parse_err(path, line, e.to_string()))
        })
        .collect()
}

pub fn read_curves_csv<T: Scalar>(path: &Path) -> Result<Vec<TuningCurve<T>>> {
    let text = std::fs::read_to_string(path)?;
    parse_curves_csv(&text, &path.display().to_string())
}
