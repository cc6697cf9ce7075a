//! Report, table and plot-data emission.
//!
//! Every file is written atomically: contents go to a temporary sibling
//! which is then renamed over the target. CSV rows are plain serde records,
//! so [`from_csv`] reads back anything [`to_csv`] writes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{OutputConfig, PipelineConfig};
use crate::error::{CrfError, Result};
use crate::eval::{monotonicity_index, ComparisonTable, CurveClass, HyperSearchResult, PooledComparison};
use crate::models::{KernelModel, ModelKind};
use crate::preprocess::TuningCurve;

/// Writes `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| CrfError::InvalidConfig(format!("output path {} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CrfError {
    CrfError::InvalidConfig(format!("csv: {e}"))
}

pub fn to_csv<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CrfError::InvalidConfig(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CrfError::InvalidConfig(format!("csv: {e}")))
}

/// Parses rows written by [`to_csv`]; errors name the offending line.
pub fn from_csv<R: DeserializeOwned>(text: &str, path: &str) -> Result<Vec<R>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize()
        .map(|r| {
            r.map_err(|e| CrfError::Parse {
                path: path.to_string(),
                line: e.position().map_or(0, |p| p.line() as usize),
                msg: e.to_string(),
            })
        })
        .collect()
}

/// One line of `classes.csv`. Flat curves have no MI and class `skipped`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub site_id: String,
    pub mi: Option<f64>,
    pub class: String,
    pub note: String,
}

pub const SKIPPED: &str = "skipped";

/// Classified sites first (input order), then the skipped ones.
pub fn classify_curves(curves: &[TuningCurve<f64>]) -> Vec<ClassRow> {
    let (mut ok, mut skipped) = (Vec::new(), Vec::new());
    for c in curves {
        match monotonicity_index(c) {
            Ok(r) => ok.push(ClassRow {
                site_id: c.site_id.clone(),
                mi: Some(r.mi),
                class: r.class.name().to_string(),
                note: String::new(),
            }),
            Err(e) => skipped.push(ClassRow {
                site_id: c.site_id.clone(),
                mi: None,
                class: SKIPPED.to_string(),
                note: e.to_string(),
            }),
        }
    }
    ok.extend(skipped);
    ok
}

/// Counts of (supersaturating, monotone, skipped) rows.
pub fn class_counts(rows: &[ClassRow]) -> (usize, usize, usize) {
    let count = |name: &str| rows.iter().filter(|r| r.class == name).count();
    (
        count(CurveClass::Supersaturating.name()),
        count(CurveClass::MonotoneLinearOrSaturating.name()),
        count(SKIPPED),
    )
}

/// One line of `table1.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub kind: ModelKind,
    pub n_tuned: usize,
    pub n_curves: usize,
    pub mean_r2: Option<f64>,
    pub mean_nmse: Option<f64>,
    pub mean_r2_all: Option<f64>,
    pub mean_nmse_all: Option<f64>,
}

pub fn table_rows(table: &ComparisonTable<f64>) -> Vec<TableRow> {
    table
        .rows
        .iter()
        .map(|r| TableRow {
            kind: r.kind,
            n_tuned: r.n_tuned,
            n_curves: r.n_curves,
            mean_r2: r.mean_r2,
            mean_nmse: r.mean_nmse,
            mean_r2_all: r.mean_r2_all,
            mean_nmse_all: r.mean_nmse_all,
        })
        .collect()
}

/// Everything `crf fit` produces, serialized as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub config: PipelineConfig,
    pub classes: Vec<ClassRow>,
    pub table: ComparisonTable<f64>,
    /// Absent when fewer than three supersaturated points exist.
    pub pooled: Option<PooledComparison<f64>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperReport {
    pub config: PipelineConfig,
    pub pool_size: usize,
    pub result: HyperSearchResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePointRow {
    pub site_id: String,
    pub class: String,
    pub contrast: f64,
    pub response: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub site_id: String,
    pub kind: ModelKind,
    pub contrast: f64,
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolRow {
    pub curve: usize,
    pub contrast: f64,
    pub response: f64,
    pub partition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Row {
    pub kind: ModelKind,
    pub site_id: String,
    pub r2: Option<f64>,
}

fn dense(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn predictions(site: &str, model: &KernelModel<f64>, n: usize) -> Vec<PredictionRow> {
    let (lo, hi) = model.input_range;
    dense(lo, hi, n)
        .into_iter()
        .filter_map(|c| {
            model.predict(c).ok().map(|p| PredictionRow {
                site_id: site.to_string(),
                kind: model.kind,
                contrast: c,
                prediction: p,
            })
        })
        .collect()
}

/// Plot data, keyed by file name inside the figure directory.
///
/// * `fig1_curves.csv`, `fig1_fits.csv`: every curve with its class, and the
///   final per-curve fits on a dense grid.
/// * `fig2_pool.csv`, `fig2_fits.csv`: the pooled supersaturated points with
///   their partition, and the pooled fits.
/// * `fig3_r2.csv`: per-curve cross-validated R² of every kind.
pub fn figure_data(
    curves: &[TuningCurve<f64>],
    report: &FitReport,
    outputs: &OutputConfig,
) -> Result<Vec<(String, String)>> {
    let class_of = |site: &str| {
        report
            .classes
            .iter()
            .find(|r| r.site_id == site)
            .map_or(SKIPPED.to_string(), |r| r.class.clone())
    };
    let points: Vec<CurvePointRow> = curves
        .iter()
        .flat_map(|c| {
            let class = class_of(&c.site_id);
            c.points.iter().map(move |p| CurvePointRow {
                site_id: c.site_id.clone(),
                class: class.clone(),
                contrast: p.contrast,
                response: p.response,
            })
        })
        .collect();
    let fits: Vec<PredictionRow> = report
        .table
        .fits
        .iter()
        .flatten()
        .filter_map(|f| f.model.as_ref().map(|m| predictions(&f.site_id, m, outputs.plot_points)))
        .flatten()
        .collect();
    let r2: Vec<R2Row> = report
        .table
        .rows
        .iter()
        .zip(&report.table.fits)
        .flat_map(|(row, fits)| {
            fits.iter().zip(&row.r2_per_curve).map(move |(f, r2)| R2Row {
                kind: row.kind,
                site_id: f.site_id.clone(),
                r2: *r2,
            })
        })
        .collect();
    let mut out = vec![
        ("fig1_curves.csv".to_string(), to_csv(&points)?),
        ("fig1_fits.csv".to_string(), to_csv(&fits)?),
    ];
    if let Some(p) = &report.pooled {
        let pool = pool_rows(curves, p);
        let pooled_fits: Vec<PredictionRow> = p
            .fits
            .iter()
            .filter_map(|f| f.model.as_ref().map(|m| predictions("pool", m, outputs.plot_points)))
            .flatten()
            .collect();
        out.push(("fig2_pool.csv".to_string(), to_csv(&pool)?));
        out.push(("fig2_fits.csv".to_string(), to_csv(&pooled_fits)?));
    }
    out.push(("fig3_r2.csv".to_string(), to_csv(&r2)?));
    if outputs.svg {
        if let Some(p) = &report.pooled {
            let pool = pool_rows(curves, p);
            out.push(("fig2.svg".to_string(), svg_pool(&pool, p, outputs.plot_points)));
        }
        out.push(("fig3.svg".to_string(), svg_r2(&report.table)));
    }
    Ok(out)
}

fn pool_rows(curves: &[TuningCurve<f64>], p: &PooledComparison<f64>) -> Vec<PoolRow> {
    let pool = crate::eval::supersaturated_pool(curves);
    let mut part = vec!["unused"; pool.len()];
    for (name, idx) in [("train", &p.split.train), ("val", &p.split.val), ("test", &p.split.test)] {
        for &i in idx {
            part[i] = name;
        }
    }
    pool.iter()
        .zip(part)
        .map(|(q, name)| PoolRow {
            curve: q.curve,
            contrast: q.contrast,
            response: q.response,
            partition: name.to_string(),
        })
        .collect()
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Self { x: widen(x), y: widen(y) }
    }
    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * PAD)
    }
    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * PAD)
    }
}

fn svg_open(s: &mut String, title: &str, f: &Frame, xlabel: &str, ylabel: &str) {
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, W / 2.0);
    let _ = writeln!(
        s,
        r#"<path d="M{PAD},{} H{} M{PAD},{} V{PAD}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD,
        H - PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(s, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{ylabel}</text>"#, H / 2.0, H / 2.0);
    for (v, at) in [(f.x.0, f.px(f.x.0)), (f.x.1, f.px(f.x.1))] {
        let _ = writeln!(s, r#"<text x="{at:.1}" y="{}" text-anchor="middle">{v:.2}</text>"#, H - PAD + 16.0);
    }
    for (v, at) in [(f.y.0, f.py(f.y.0)), (f.y.1, f.py(f.y.1))] {
        let _ = writeln!(s, r#"<text x="{}" y="{at:.1}" text-anchor="end">{v:.2}</text>"#, PAD - 4.0);
    }
}

fn legend(s: &mut String, i: usize, label: &str) {
    let y = PAD + 14.0 * i as f64;
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{y:.1}" fill="{}">{label}</text>"#,
        W - PAD - 110.0,
        PALETTE[i % PALETTE.len()]
    );
}

fn svg_pool(pool: &[PoolRow], p: &PooledComparison<f64>, n: usize) -> String {
    let curves: Vec<(ModelKind, Vec<(f64, f64)>)> = p
        .fits
        .iter()
        .filter_map(|f| {
            let m = f.model.as_ref()?;
            let (lo, hi) = m.input_range;
            let pts = dense(lo, hi, n).into_iter().filter_map(|c| m.predict(c).ok().map(|y| (c, y))).collect();
            Some((f.kind, pts))
        })
        .collect();
    let xs = pool.iter().map(|r| r.contrast);
    let ys = pool.iter().map(|r| r.response).chain(curves.iter().flat_map(|(_, v)| v.iter().map(|q| q.1)));
    let x = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let y = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let f = Frame::new(x, y);
    let mut s = String::new();
    svg_open(&mut s, "Pooled supersaturated responses and fits", &f, "contrast", "SNR");
    for r in pool {
        let fill = if r.partition == "test" { "black" } else { "#bbbbbb" };
        let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="2" fill="{fill}"/>"#, f.px(r.contrast), f.py(r.response));
    }
    for (i, (kind, pts)) in curves.iter().enumerate() {
        let d: Vec<String> = pts.iter().map(|&(c, y)| format!("{:.1},{:.1}", f.px(c), f.py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            d.join(" "),
            PALETTE[i % PALETTE.len()]
        );
        legend(&mut s, i, kind.name());
    }
    s.push_str("</svg>\n");
    s
}

fn svg_r2(table: &ComparisonTable<f64>) -> String {
    let k = table.rows.len().max(1);
    let lo = table
        .rows
        .iter()
        .flat_map(|r| r.r2_per_curve.iter().flatten())
        .fold(0.0f64, |a, &v| a.min(v))
        .max(-1.0);
    let f = Frame::new((0.0, k as f64), (lo, 1.0));
    let mut s = String::new();
    svg_open(&mut s, "Cross-validated R² per curve", &f, "model", "R²");
    let ty = f.py(table.threshold);
    let _ = writeln!(s, r#"<path d="M{PAD},{ty:.1} H{}" stroke="gray" stroke-dasharray="4 3"/>"#, W - PAD);
    for (i, row) in table.rows.iter().enumerate() {
        let cx = f.px(i as f64 + 0.5);
        for (j, v) in row.r2_per_curve.iter().enumerate() {
            let Some(v) = v else { continue };
            let jitter = ((j * 37) % 21) as f64 - 10.0;
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="2" fill="{}"/>"#,
                cx + jitter,
                f.py(v.max(lo)),
                PALETTE[i % PALETTE.len()]
            );
        }
        let _ = writeln!(s, r#"<text x="{cx:.1}" y="{}" text-anchor="middle" font-size="10">{}</text>"#, H - PAD + 30.0, row.kind.name());
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `report.json`, the table and the figure directory under `out_dir`.
/// Nothing is written unless every piece serialized successfully.
pub fn write_fit_outputs(out_dir: &Path, curves: &[TuningCurve<f64>], report: &FitReport) -> Result<Vec<PathBuf>> {
    let o = &report.config.outputs;
    let mut files: Vec<(PathBuf, String)> = vec![
        (out_dir.join(&o.report), serde_json::to_string_pretty(report)? + "\n"),
        (out_dir.join(&o.table), to_csv(&table_rows(&report.table))?),
    ];
    for (name, body) in figure_data(curves, report, o)? {
        files.push((out_dir.join(&o.fig_dir).join(name), body));
    }
    for (path, body) in &files {
        write_atomic(path, body.as_bytes())?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
