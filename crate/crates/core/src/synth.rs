//! Ground-truth synthetic tuning curves and raw recordings.
//!
//! Generating parameters live on the normalized contrast scale
//! `φ = c / c_max` of the contrast grid, in the parameter order of the
//! corresponding model family.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rustfft::FftNum;
use serde::{Deserialize, Serialize};

use crate::error::{CrfError, Result};
use crate::eval::monotonicity_index;
use crate::models::{Hyper, KernelModel, ModelKind};
use crate::preprocess::spectrum::{bin_freqs, random_phase_noise};
use crate::preprocess::{Biquad, PreprocessConfig, RawRecording, Trial, TuningCurve, CurvePoint, DEFAULT_CONTRASTS};
use crate::scalar::Scalar;

/// Responses are clamped to at least this value.
pub const RESPONSE_FLOOR: f64 = 1e-3;

/// Attempts at drawing jittered parameters that keep the curve's shape.
const JITTER_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurveShape {
    Linear,
    Saturating,
    Supersaturating,
}

impl CurveShape {
    pub fn model_kind(self) -> ModelKind {
        match self {
            CurveShape::Linear => ModelKind::Linear,
            CurveShape::Saturating => ModelKind::NakaRushton,
            CurveShape::Supersaturating => ModelKind::ModifiedNakaRushton,
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            CurveShape::Linear => "lin",
            CurveShape::Saturating => "sat",
            CurveShape::Supersaturating => "sup",
        }
    }
}

/// A family of synthetic curves drawn around one generating model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub kind: CurveShape,
    pub true_params: Vec<f64>,
    /// Standard deviation of the additive Gaussian response noise.
    pub noise_sd: f64,
    pub n_curves: usize,
    pub seed: u64,
    /// Per-curve heterogeneity: parameter `i` is multiplied by
    /// `exp(param_jitter[i] · z)`, `z ~ N(0, 1)`. Empty means none.
    #[serde(default)]
    pub param_jitter: Vec<f64>,
    #[serde(default = "default_contrasts")]
    pub contrasts: Vec<f64>,
}

fn default_contrasts() -> Vec<f64> {
    DEFAULT_CONTRASTS.to_vec()
}

impl SynthSpec {
    fn model(&self, params: Vec<f64>) -> Result<KernelModel<f64>> {
        let range = (self.contrasts[0], self.contrasts[self.contrasts.len() - 1]);
        KernelModel::new(self.kind.model_kind(), Hyper::units(0), params, range)
    }

    /// Whether `params` give a curve of this spec's shape on the grid.
    fn shape_holds(&self, params: &[f64]) -> Result<bool> {
        if self.kind != CurveShape::Supersaturating {
            return Ok(true);
        }
        if !(params[4] > 1.0) {
            return Ok(false);
        }
        let m = self.model(params.to_vec())?;
        let ys: Vec<f64> = self.contrasts.iter().map(|&c| m.predict(c)).collect::<Result<_>>()?;
        let argmax = (0..ys.len()).max_by(|&a, &b| ys[a].total_cmp(&ys[b])).expect("non-empty grid");
        Ok(argmax > 0 && argmax + 1 < ys.len())
    }

    pub fn validate(&self) -> Result<()> {
        let expected = self.kind.model_kind().param_len(0);
        if self.true_params.len() != expected {
            return Err(CrfError::ParamLength {
                kind: self.kind.model_kind().name(),
                expected,
                got: self.true_params.len(),
            });
        }
        if !(self.noise_sd >= 0.0) || self.param_jitter.iter().any(|j| !(*j >= 0.0)) {
            return Err(CrfError::InvalidConfig("noise_sd and param_jitter must be non-negative".into()));
        }
        if !self.param_jitter.is_empty() && self.param_jitter.len() != expected {
            return Err(CrfError::InvalidConfig(format!(
                "param_jitter needs {expected} entries, got {}",
                self.param_jitter.len()
            )));
        }
        PreprocessConfig { contrasts: self.contrasts.clone(), ..Default::default() }.validate()?;
        self.model(self.true_params.clone())?;
        if !self.shape_holds(&self.true_params)? {
            return Err(CrfError::InvalidConfig(
                "supersaturating spec needs s > 1 and an interior maximum on the contrast grid".into(),
            ));
        }
        Ok(())
    }
}

/// Generating parameters and noise-free responses of one synthetic curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub site_id: String,
    pub shape: CurveShape,
    pub params: Vec<f64>,
    pub contrasts: Vec<f64>,
    pub responses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCurve<T> {
    pub curve: TuningCurve<T>,
    pub truth: GroundTruth,
}

fn jittered(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if spec.param_jitter.iter().all(|&j| j == 0.0) {
        return Ok(spec.true_params.clone());
    }
    for _ in 0..JITTER_ATTEMPTS {
        let p: Vec<f64> = spec
            .true_params
            .iter()
            .zip(&spec.param_jitter)
            .map(|(&v, &j)| {
                let z: f64 = StandardNormal.sample(rng);
                v * (j * z).exp()
            })
            .collect();
        if spec.shape_holds(&p)? {
            return Ok(p);
        }
    }
    Err(CrfError::InvalidConfig(format!(
        "param_jitter {:?} keeps breaking the {:?} shape",
        spec.param_jitter, spec.kind
    )))
}

/// Draws `spec.n_curves` noisy curves.
///
/// Each curve evaluates its (jittered) generating model on the contrast grid,
/// adds seeded Gaussian noise and clamps responses to [`RESPONSE_FLOOR`].
pub fn gen_curves<T: Scalar>(spec: &SynthSpec) -> Result<Vec<SynthCurve<T>>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| CrfError::InvalidConfig(e.to_string()))?;
    (0..spec.n_curves)
        .map(|k| {
            let site_id = format!("{}-{:03}", spec.kind.prefix(), k);
            let params = jittered(spec, &mut rng)?;
            let m = spec.model(params.clone())?;
            let truth: Vec<f64> = spec.contrasts.iter().map(|&c| m.predict(c)).collect::<Result<_>>()?;
            let mut clamped = 0;
            let responses: Vec<f64> = truth
                .iter()
                .map(|&t| {
                    let y = t + noise.sample(&mut rng);
                    if y < RESPONSE_FLOOR {
                        clamped += 1;
                        RESPONSE_FLOOR
                    } else {
                        y
                    }
                })
                .collect();
            if 2 * clamped > responses.len() {
                return Err(CrfError::InvalidConfig(format!(
                    "{site_id}: {clamped} of {} responses clamped; noise too large",
                    responses.len()
                )));
            }
            let contrasts: Vec<T> = spec.contrasts.iter().map(|&c| T::lit(c)).collect();
            let ys: Vec<T> = responses.iter().map(|&r| T::lit(r)).collect();
            Ok(SynthCurve {
                curve: TuningCurve::from_pairs(site_id.clone(), &contrasts, &ys)?,
                truth: GroundTruth {
                    site_id,
                    shape: spec.kind,
                    params,
                    contrasts: spec.contrasts.clone(),
                    responses: truth,
                },
            })
        })
        .collect()
}

/// A set of specs generated together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub specs: Vec<SynthSpec>,
    /// Raw-trace generation; curves only when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<RawSpec>,
}

/// Number of supersaturating and monotone curves in the default corpus.
pub const DEFAULT_SUPERSATURATING: usize = 28;
pub const DEFAULT_LINEAR: usize = 19;
pub const DEFAULT_SATURATING: usize = 19;

impl CorpusSpec {
    /// 28 supersaturating, 19 saturating and 19 linear curves; spec `i` is
    /// seeded with `seed · 1000 + i`.
    pub fn default_corpus(seed: u64) -> Self {
        let noise_sd = 0.03;
        let mk = |i: u64, kind, true_params: Vec<f64>, param_jitter: Vec<f64>, n_curves| SynthSpec {
            kind,
            true_params,
            noise_sd,
            n_curves,
            seed: seed.wrapping_mul(1000).wrapping_add(i),
            param_jitter,
            contrasts: default_contrasts(),
        };
        Self {
            specs: vec![
                mk(
                    0,
                    CurveShape::Supersaturating,
                    vec![1.2, 0.3, 2.5, 1.0, 1.5],
                    vec![0.2, 0.15, 0.1, 0.1, 0.05],
                    DEFAULT_SUPERSATURATING,
                ),
                mk(1, CurveShape::Saturating, vec![2.5, 0.5, 2.0, 1.0], vec![0.2, 0.15, 0.1, 0.1], DEFAULT_SATURATING),
                mk(2, CurveShape::Linear, vec![2.0, 1.0], vec![0.2, 0.1], DEFAULT_LINEAR),
            ],
            raw: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.specs.is_empty() {
            return Err(CrfError::InvalidConfig("corpus has no specs".into()));
        }
        for s in &self.specs {
            s.validate()?;
        }
        if let Some(r) = &self.raw {
            r.validate()?;
        }
        Ok(())
    }

    pub fn generate<T: Scalar>(&self) -> Result<Vec<SynthCurve<T>>> {
        self.validate()?;
        let mut out = Vec::new();
        for s in &self.specs {
            out.extend(gen_curves(s)?);
        }
        Ok(out)
    }
}

/// Layout of synthetic raw trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawSpec {
    /// Frequency of the injected gamma tone.
    pub carrier_hz: f64,
    pub sample_rate: f64,
    pub trials_per_contrast: usize,
    /// Samples before the baseline window.
    pub pre_roll_ms: f64,
    /// Per-bin periodogram power of the background noise.
    pub noise_power: f64,
    pub preprocess: PreprocessConfig,
}

impl Default for RawSpec {
    fn default() -> Self {
        Self {
            carrier_hz: 50.0,
            sample_rate: 1000.0,
            trials_per_contrast: 20,
            pre_roll_ms: 100.0,
            noise_power: 1.0,
            preprocess: PreprocessConfig::default(),
        }
    }
}

impl RawSpec {
    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        let band = self.preprocess.band;
        if !(self.carrier_hz > band.low && self.carrier_hz < band.high) {
            return Err(CrfError::InvalidConfig(format!(
                "carrier {} Hz lies outside the gamma band ({}, {}) Hz",
                self.carrier_hz, band.low, band.high
            )));
        }
        if !(self.sample_rate > 2.0 * band.high) || self.trials_per_contrast == 0 || !(self.noise_power > 0.0) {
            return Err(CrfError::InvalidConfig(
                "raw spec needs sample_rate above twice the band edge, trials and positive noise power".into(),
            ));
        }
        let w = self.preprocess.baseline_window;
        if !(w.start_ms <= -200.0 && w.end_ms <= self.preprocess.stimulus_window.start_ms) || self.pre_roll_ms < 0.0 {
            return Err(CrfError::InvalidConfig("layout must provide at least 200 ms of baseline before onset".into()));
        }
        Ok(())
    }

    fn samples(&self, ms: f64) -> usize {
        (ms * self.sample_rate / 1000.0).round() as usize
    }

    /// Power gain of the preprocessing filter at `freq`.
    fn gain(&self, biquad: &Biquad<f64>, freq: f64) -> f64 {
        let g = biquad.power_gain(freq, self.sample_rate);
        if self.preprocess.zero_phase {
            g * g
        } else {
            g
        }
    }

    /// Mean filter power gain over the in-band bins of an `n`-sample window.
    fn band_gain(&self, biquad: &Biquad<f64>, n: usize) -> (f64, usize) {
        let band = self.preprocess.band;
        let freqs: Vec<f64> = bin_freqs(n, self.sample_rate)
            .into_iter()
            .filter(|&f| f >= band.low && f <= band.high)
            .collect();
        let g = freqs.iter().map(|&f| self.gain(biquad, f)).sum::<f64>() / freqs.len().max(1) as f64;
        (g, freqs.len())
    }
}

/// Raw trials whose preprocessed SNR curve is `curve` in expectation.
///
/// Each trial is random-phase flat-spectrum noise of per-bin power
/// `noise_power`, drawn separately for the pre-roll, baseline and stimulus
/// segments. In the stimulus segment the noise power is matched to the
/// baseline after filtering, and a tone at `carrier_hz` is added whose
/// filtered in-band power raises the expected band power ratio to the target
/// response. Targets below 1 scale the stimulus noise down instead.
pub fn gen_raw<T: Scalar + FftNum>(curve: &TuningCurve<T>, raw: &RawSpec, seed: u64) -> Result<RawRecording<T>> {
    raw.validate()?;
    let pre = &raw.preprocess;
    let biquad = Biquad::<f64>::butterworth_lowpass(raw.sample_rate, pre.cutoff_hz)?;
    let pre_roll = raw.samples(raw.pre_roll_ms);
    let onset = pre_roll + raw.samples(-pre.baseline_window.start_ms);
    let (b0, b1) = pre.baseline_window.indices(onset, raw.sample_rate, usize::MAX)?;
    let (s0, s1) = pre.stimulus_window.indices(onset, raw.sample_rate, usize::MAX)?;
    if b1 > s0 {
        return Err(CrfError::InvalidConfig("baseline and stimulus windows overlap".into()));
    }
    let (g_base, _) = raw.band_gain(&biquad, b1 - b0);
    let n_stim = s1 - s0;
    let (g_stim, n_bins) = raw.band_gain(&biquad, n_stim);
    let g_carrier = raw.gain(&biquad, raw.carrier_hz);
    let v = raw.noise_power;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::with_capacity(curve.points.len() * raw.trials_per_contrast);
    for p in &curve.points {
        let r = p.response.as_f64();
        let v_stim = v * g_base / g_stim * r.min(1.0);
        let amp = (4.0 * n_bins as f64 * v * g_base * (r - 1.0).max(0.0) / (n_stim as f64 * g_carrier)).sqrt();
        for _ in 0..raw.trials_per_contrast {
            let mut phases = || rng.gen_range(0.0..std::f64::consts::TAU);
            let mut x = random_phase_noise(b0, v, &mut phases);
            x.extend(random_phase_noise(b1 - b0, v, &mut phases));
            x.extend(random_phase_noise(s0 - b1, v, &mut phases));
            let stim = random_phase_noise(n_stim, v_stim, &mut phases);
            let phase = phases();
            x.extend(stim.iter().enumerate().map(|(i, &e)| {
                let t = i as f64 / raw.sample_rate;
                e + amp * (std::f64::consts::TAU * raw.carrier_hz * t + phase).sin()
            }));
            trials.push(Trial {
                contrast: p.contrast,
                onset_index: onset,
                samples: x.into_iter().map(T::lit).collect(),
            });
        }
    }
    Ok(RawRecording {
        site_id: curve.site_id.clone(),
        sample_rate: T::lit(raw.sample_rate),
        trials,
    })
}

/// Contrast/response pairs of the noise-free truth as a curve.
pub fn truth_curve<T: Scalar>(truth: &GroundTruth) -> Result<TuningCurve<T>> {
    let points = truth
        .contrasts
        .iter()
        .zip(&truth.responses)
        .map(|(&c, &r)| CurvePoint { contrast: T::lit(c), response: T::lit(r.max(RESPONSE_FLOOR)), n_trials: 1 })
        .collect();
    TuningCurve::new(truth.site_id.clone(), points)
}

/// Whether the default corpus classifies as generated: supersaturating
/// curves have `MI < 1`, the rest `MI = 1`.
pub fn classification_matches<T: Scalar>(curves: &[SynthCurve<T>]) -> usize {
    curves
        .iter()
        .filter(|c| {
            let sup = matches!(
                monotonicity_index(&c.curve),
                Ok(r) if r.class == crate::eval::CurveClass::Supersaturating
            );
            sup == (c.truth.shape == CurveShape::Supersaturating)
        })
        .count()
}
