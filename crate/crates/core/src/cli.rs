//! Command-line front end.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::eval::{compare_models, pooled_comparison, select_hyperparameters, supersaturated_pool};
use crate::preprocess::io::{curves_to_csv, read_curves_csv, read_raw_dir, trial_to_csv};
use crate::preprocess::{build_tuning_curve, recording_stationarity, TuningCurve};
use crate::report::{
    class_counts, classify_curves, to_csv, write_atomic, write_fit_outputs, FitReport, HyperReport,
};
use crate::synth::{gen_raw, CorpusSpec, GroundTruth, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "crf", version, about = "Contrast response tuning of LFP gamma power")]
pub struct Cli {
    /// Seed for every seeded stage (overrides the config file and CRF_SEED).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for all cores (overrides the config file and CRF_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Pipeline configuration, TOML or JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce raw trial files to SNR tuning curves.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monotonicity index and class of every curve.
    Classify {
        #[arg(long)]
        curves: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validated model comparison and pooled supersaturated fits.
    Fit {
        #[arg(long)]
        curves: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Validation-based choice of MLP neurons and epochs.
    Hypersearch {
        #[arg(long)]
        curves: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate synthetic curves (and optionally raw trials).
    Synth {
        /// Corpus or single-spec JSON; the default corpus when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// File `[config]`, then `CRF_SEED`/`CRF_THREADS`, then flags.
pub fn load_config(path: Option<&Path>, seed: Option<u64>, threads: Option<usize>) -> anyhow::Result<PipelineConfig> {
    let mut c = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    c.apply_env(|k| std::env::var(k).ok())?;
    if let Some(s) = seed {
        c.seed = s;
    }
    if let Some(t) = threads {
        c.threads = t;
    }
    Ok(c.resolved()?)
}

fn init_threads(threads: usize) {
    // a second initialization in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
}

fn read_curves(path: &Path) -> anyhow::Result<Vec<TuningCurve<f64>>> {
    read_curves_csv(path).with_context(|| format!("reading curves from {}", path.display()))
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let (seed, threads) = (cli.seed, cli.threads);
    match cli.command {
        Command::Preprocess { input, config, out } => {
            let cfg = load_config(config.config.as_deref(), seed, threads)?;
            init_threads(cfg.threads);
            cmd_preprocess(&input, &cfg, &out)
        }
        Command::Classify { curves, out } => {
            let cfg = load_config(None, seed, threads)?;
            init_threads(cfg.threads);
            cmd_classify(&curves, &out)
        }
        Command::Fit { curves, config, out_dir } => {
            let cfg = load_config(config.config.as_deref(), seed, threads)?;
            init_threads(cfg.threads);
            cmd_fit(&curves, &cfg, &out_dir)
        }
        Command::Hypersearch { curves, config, out } => {
            let cfg = load_config(config.config.as_deref(), seed, threads)?;
            init_threads(cfg.threads);
            cmd_hypersearch(&curves, &cfg, &out)
        }
        Command::Synth { spec, out_dir } => {
            let cfg = load_config(None, seed, threads)?;
            init_threads(cfg.threads);
            cmd_synth(spec.as_deref(), cfg.seed, &out_dir)
        }
    }
}

pub fn cmd_preprocess(input: &Path, cfg: &PipelineConfig, out: &Path) -> anyhow::Result<()> {
    let recs = read_raw_dir::<f64>(input).with_context(|| format!("reading raw trials from {}", input.display()))?;
    if recs.is_empty() {
        eprintln!("warning: no trial files under {}", input.display());
    }
    let curves = recs
        .par_iter()
        .map(|r| build_tuning_curve(r, &cfg.preprocess).with_context(|| format!("site {}", r.site_id)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    for r in &recs {
        let s = recording_stationarity(r, cfg.preprocess.stationarity_segments);
        println!("{}\tstationary={}", r.site_id, s.stationary);
    }
    write_atomic(out, curves_to_csv(&curves).as_bytes())?;
    println!("wrote {} curves to {}", curves.len(), out.display());
    Ok(())
}

pub fn cmd_classify(curves_path: &Path, out: &Path) -> anyhow::Result<()> {
    let curves = read_curves(curves_path)?;
    if curves.is_empty() {
        eprintln!("warning: {} holds no curves", curves_path.display());
    }
    let rows = classify_curves(&curves);
    write_atomic(out, to_csv(&rows)?.as_bytes())?;
    let (sup, mono, skipped) = class_counts(&rows);
    println!("supersaturating {sup}\tmonotone {mono}\tskipped {skipped}");
    for r in rows.iter().filter(|r| r.mi.is_none()) {
        println!("skipped {}: {}", r.site_id, r.note);
    }
    Ok(())
}

pub fn cmd_fit(curves_path: &Path, cfg: &PipelineConfig, out_dir: &Path) -> anyhow::Result<()> {
    let curves = read_curves(curves_path)?;
    if curves.is_empty() {
        bail!("{} holds no curves", curves_path.display());
    }
    let classes = classify_curves(&curves);
    let table = compare_models(&curves, &cfg.kinds, &cfg.models, cfg.threshold)?;
    let pool = supersaturated_pool(&curves);
    let mut notes = Vec::new();
    let pooled = if pool.len() < 3 {
        notes.push(format!("pooled comparison skipped: {} supersaturated points", pool.len()));
        None
    } else {
        match pooled_comparison(&pool, &cfg.kinds, &cfg.pooled, cfg.seed) {
            Ok(p) => Some(p),
            Err(e) => {
                notes.push(format!("pooled comparison failed: {e}"));
                None
            }
        }
    };
    let report = FitReport { config: cfg.clone(), classes, table, pooled, notes };
    write_fit_outputs(out_dir, &curves, &report)?;
    println!("kind\tN(R2>={})\tmean R2\tmean NMSE", cfg.threshold);
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
    for r in &report.table.rows {
        println!("{}\t{}/{}\t{}\t{}", r.kind, r.n_tuned, r.n_curves, fmt(r.mean_r2), fmt(r.mean_nmse));
    }
    if let Some(p) = &report.pooled {
        for f in &p.fits {
            println!("pooled {}\ttest NMSE {}", f.kind, fmt(f.test_nmse));
        }
    }
    for n in &report.notes {
        println!("note: {n}");
    }
    Ok(())
}

pub fn cmd_hypersearch(curves_path: &Path, cfg: &PipelineConfig, out: &Path) -> anyhow::Result<()> {
    let curves = read_curves(curves_path)?;
    let pool = supersaturated_pool(&curves);
    if pool.is_empty() {
        bail!("{} has no supersaturated curves to search on", curves_path.display());
    }
    let result = select_hyperparameters(&pool, &cfg.hyper)?;
    let report = HyperReport { config: cfg.clone(), pool_size: pool.len(), result };
    write_atomic(out, (serde_json::to_string_pretty(&report)? + "\n").as_bytes())?;
    let r = &report.result;
    println!("neurons {:.2} ± {:.2}\tepochs {:.2} ± {:.2}", r.neurons.mean, r.neurons.std, r.epochs.mean, r.epochs.std);
    let failed = r.runs.iter().filter(|x| x.failure.is_some()).count();
    if failed > 0 {
        println!("{failed} runs failed");
    }
    Ok(())
}

/// Parses a corpus spec, or a single curve spec wrapped as a corpus.
pub fn parse_spec(text: &str, path: &Path) -> anyhow::Result<CorpusSpec> {
    match serde_json::from_str::<CorpusSpec>(text) {
        Ok(c) => Ok(c),
        Err(corpus_err) => match serde_json::from_str::<SynthSpec>(text) {
            Ok(s) => Ok(CorpusSpec { specs: vec![s], raw: None }),
            Err(_) => bail!("{}: not a corpus or curve spec: {corpus_err}", path.display()),
        },
    }
}

/// Seed of the raw trials of curve `j` of a spec seeded with `seed`.
pub fn raw_seed(seed: u64, j: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(j as u64 + 1)
}

pub fn cmd_synth(spec: Option<&Path>, seed: u64, out_dir: &Path) -> anyhow::Result<()> {
    let corpus = match spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading spec {}", p.display()))?;
            parse_spec(&text, p)?
        }
        None => CorpusSpec::default_corpus(seed),
    };
    corpus.validate()?;
    let mut curves = Vec::new();
    let mut truth: Vec<GroundTruth> = Vec::new();
    let mut raw_files: Vec<(PathBuf, String)> = Vec::new();
    for s in &corpus.specs {
        let generated = crate::synth::gen_curves::<f64>(s)?;
        if let Some(raw) = &corpus.raw {
            let recs = generated
                .par_iter()
                .enumerate()
                .map(|(j, c)| gen_raw(&c.curve, raw, raw_seed(s.seed, j)))
                .collect::<crate::error::Result<Vec<_>>>()?;
            for rec in recs {
                for (k, t) in rec.trials.iter().enumerate() {
                    let name = format!("{}_t{k:04}.csv", rec.site_id);
                    raw_files.push((out_dir.join("raw").join(name), trial_to_csv(&rec.site_id, rec.sample_rate, t)));
                }
            }
        }
        for c in generated {
            curves.push(c.curve);
            truth.push(c.truth);
        }
    }
    write_atomic(&out_dir.join("curves.csv"), curves_to_csv(&curves).as_bytes())?;
    write_atomic(&out_dir.join("truth.json"), (serde_json::to_string_pretty(&truth)? + "\n").as_bytes())?;
    write_atomic(&out_dir.join("spec.json"), (serde_json::to_string_pretty(&corpus)? + "\n").as_bytes())?;
    if let Some(raw) = &corpus.raw {
        let cfg = PipelineConfig { preprocess: raw.preprocess.clone(), ..Default::default() };
        write_atomic(&out_dir.join("preprocess.toml"), toml::to_string(&cfg)?.as_bytes())?;
    }
    for (path, body) in &raw_files {
        write_atomic(path, body.as_bytes())?;
    }
    let sup = truth.iter().filter(|t| t.shape == crate::synth::CurveShape::Supersaturating).count();
    println!("wrote {} curves ({sup} supersaturating) to {}", curves.len(), out_dir.display());
    if !raw_files.is_empty() {
        println!("wrote {} raw trial files", raw_files.len());
    }
    Ok(())
}
