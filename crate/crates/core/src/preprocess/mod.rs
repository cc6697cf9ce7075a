//! Raw LFP traces to gamma-band SNR tuning curves.
//!
//! Per contrast level every trial is low-pass filtered, its gamma-band power
//! is measured over a stimulus window and over the pre-onset baseline, and the
//! ratio of the trial-averaged powers becomes the response at that contrast.

pub mod filter;
pub mod io;
pub mod spectrum;
pub mod stationarity;

use rustfft::FftNum;
use serde::{Deserialize, Serialize};

use crate::error::{CrfError, Result};
use crate::scalar::Scalar;

pub use filter::{butterworth_lowpass, Biquad};
pub use spectrum::{band_power, periodogram, Band, Periodogram};
pub use stationarity::{stationarity_flag, StationarityReport};

/// Number of contrast levels in every tuning curve.
pub const CURVE_POINTS: usize = 8;

/// Default contrast grid, fractions from 0 to 0.76.
pub const DEFAULT_CONTRASTS: [f64; CURVE_POINTS] = [0.0, 0.02, 0.04, 0.09, 0.19, 0.38, 0.57, 0.76];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial<T> {
    pub contrast: T,
    pub onset_index: usize,
    pub samples: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecording<T> {
    pub site_id: String,
    pub sample_rate: T,
    pub trials: Vec<Trial<T>>,
}

impl<T: Scalar> RawRecording<T> {
    /// Checks the sample rate against the analysis band and that every trial
    /// has finite samples.
    pub fn validate(&self, band: Band<T>) -> Result<()> {
        if !(self.sample_rate > band.high + band.high) {
            return Err(CrfError::InvalidConfig(format!(
                "site {}: sample rate {} Hz is not above twice the band edge {} Hz",
                self.site_id, self.sample_rate, band.high
            )));
        }
        for (i, t) in self.trials.iter().enumerate() {
            if t.samples.iter().any(|v| !v.is_finite()) {
                return Err(CrfError::NonFinite(format!("site {} trial {i}", self.site_id)));
            }
        }
        Ok(())
    }
}

/// Analysis window in milliseconds relative to stimulus onset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start_ms: f64,
    pub end_ms: f64,
}

impl Window {
    pub const BASELINE: Window = Window { start_ms: -200.0, end_ms: 0.0 };
    pub const STIMULUS: Window = Window { start_ms: 0.0, end_ms: 2000.0 };

    /// Sample index range `[start, end)` for a trial with the given onset.
    pub fn indices<T: Scalar>(&self, onset: usize, sample_rate: T, len: usize) -> Result<(usize, usize)> {
        let fs = sample_rate.as_f64();
        let start = onset as f64 + (self.start_ms * fs / 1000.0).round();
        let end = onset as f64 + (self.end_ms * fs / 1000.0).round();
        if start < 0.0 || end > len as f64 || start >= end {
            return Err(CrfError::DegenerateWindow(format!(
                "[{} ms, {} ms) around onset {onset} exceeds a {len}-sample trial",
                self.start_ms, self.end_ms
            )));
        }
        Ok((start as usize, end as usize))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    pub contrasts: Vec<f64>,
    pub cutoff_hz: f64,
    pub zero_phase: bool,
    pub band: Band<f64>,
    pub stimulus_window: Window,
    pub baseline_window: Window,
    pub stationarity_segments: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            contrasts: DEFAULT_CONTRASTS.to_vec(),
            cutoff_hz: 100.0,
            zero_phase: false,
            band: Band::gamma(),
            stimulus_window: Window::STIMULUS,
            baseline_window: Window::BASELINE,
            stationarity_segments: 4,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.contrasts.len() != CURVE_POINTS {
            return Err(CrfError::InvalidConfig(format!(
                "contrast grid needs {CURVE_POINTS} levels, got {}",
                self.contrasts.len()
            )));
        }
        if self.contrasts.windows(2).any(|w| !(w[0] < w[1])) || self.contrasts[0] != 0.0 {
            return Err(CrfError::InvalidConfig(
                "contrast grid must start at 0 and strictly increase".into(),
            ));
        }
        if !(self.band.low < self.band.high) {
            return Err(CrfError::InvalidConfig("band low edge must be below high edge".into()));
        }
        Ok(())
    }
}

/// One (contrast, response) pair of a tuning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint<T> {
    pub contrast: T,
    pub response: T,
    pub n_trials: usize,
}

/// Eight contrast/SNR pairs for one recording site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningCurve<T> {
    pub site_id: String,
    pub points: Vec<CurvePoint<T>>,
}

impl<T: Scalar> TuningCurve<T> {
    pub fn new(site_id: impl Into<String>, points: Vec<CurvePoint<T>>) -> Result<Self> {
        let site_id = site_id.into();
        if points.len() != CURVE_POINTS {
            return Err(CrfError::InvalidConfig(format!(
                "site {site_id}: tuning curve needs {CURVE_POINTS} points, got {}",
                points.len()
            )));
        }
        if points[0].contrast != T::zero() || points.windows(2).any(|w| !(w[0].contrast < w[1].contrast)) {
            return Err(CrfError::InvalidConfig(format!(
                "site {site_id}: contrasts must start at 0 and strictly increase"
            )));
        }
        if points.iter().any(|p| !(p.response > T::zero()) || !p.response.is_finite()) {
            return Err(CrfError::InvalidConfig(format!(
                "site {site_id}: responses must be finite and positive"
            )));
        }
        Ok(Self { site_id, points })
    }

    /// Convenience constructor from parallel slices with unit trial counts.
    pub fn from_pairs(site_id: impl Into<String>, contrasts: &[T], responses: &[T]) -> Result<Self> {
        let points = contrasts
            .iter()
            .zip(responses)
            .map(|(&contrast, &response)| CurvePoint { contrast, response, n_trials: 1 })
            .collect();
        Self::new(site_id, points)
    }

    pub fn contrasts(&self) -> Vec<T> {
        self.points.iter().map(|p| p.contrast).collect()
    }

    pub fn responses(&self) -> Vec<T> {
        self.points.iter().map(|p| p.response).collect()
    }

    /// `(min, max)` contrast, the normalization range of the curve.
    pub fn contrast_range(&self) -> (T, T) {
        (self.points[0].contrast, self.points[self.points.len() - 1].contrast)
    }
}

/// Ratio of trial-averaged stimulus power to trial-averaged baseline power.
pub fn snr_from_powers<T: Scalar>(stimulus: &[T], baseline: &[T]) -> Result<T> {
    if stimulus.is_empty() || stimulus.len() != baseline.len() {
        return Err(CrfError::EmptyData);
    }
    let n = T::from_count(stimulus.len());
    let s = stimulus.iter().copied().sum::<T>() / n;
    let b = baseline.iter().copied().sum::<T>() / n;
    if !(b > T::zero()) {
        return Err(CrfError::DegenerateBaseline);
    }
    Ok(s / b)
}

/// SNR response for the (already filtered) trials of one contrast level.
pub fn snr_response<T: Scalar + FftNum>(
    trials: &[Trial<T>],
    sample_rate: T,
    stimulus_window: Window,
    baseline_window: Window,
    band: Band<T>,
) -> Result<T> {
    if trials.is_empty() {
        return Err(CrfError::EmptyData);
    }
    let mut stim = Vec::with_capacity(trials.len());
    let mut base = Vec::with_capacity(trials.len());
    for t in trials {
        let n = t.samples.len();
        let sw = stimulus_window.indices(t.onset_index, sample_rate, n)?;
        let bw = baseline_window.indices(t.onset_index, sample_rate, n)?;
        stim.push(band_power(&t.samples, sample_rate, band, sw)?);
        base.push(band_power(&t.samples, sample_rate, band, bw)?);
    }
    snr_from_powers(&stim, &base)
}

fn same_contrast<T: Scalar>(a: T, b: T) -> bool {
    (a - b).abs() <= T::lit(1e-9) * (T::one() + b.abs())
}

/// Filters every trial and reduces each configured contrast to one SNR point.
pub fn build_tuning_curve<T: Scalar + FftNum>(
    rec: &RawRecording<T>,
    config: &PreprocessConfig,
) -> Result<TuningCurve<T>> {
    config.validate()?;
    let band = Band::new(T::lit(config.band.low), T::lit(config.band.high));
    rec.validate(band)?;
    let biquad = Biquad::butterworth_lowpass(rec.sample_rate, T::lit(config.cutoff_hz))?;
    let mut points = Vec::with_capacity(config.contrasts.len());
    for &c in &config.contrasts {
        let contrast = T::lit(c);
        let filtered: Vec<Trial<T>> = rec
            .trials
            .iter()
            .filter(|t| same_contrast(t.contrast, contrast))
            .map(|t| Trial {
                contrast: t.contrast,
                onset_index: t.onset_index,
                samples: if config.zero_phase {
                    biquad.apply_zero_phase(&t.samples)
                } else {
                    biquad.apply(&t.samples)
                },
            })
            .collect();
        if filtered.is_empty() {
            return Err(CrfError::IncompleteRecording {
                site: rec.site_id.clone(),
                contrast: c,
            });
        }
        let response = snr_response(
            &filtered,
            rec.sample_rate,
            config.stimulus_window,
            config.baseline_window,
            band,
        )?;
        points.push(CurvePoint {
            contrast,
            response,
            n_trials: filtered.len(),
        });
    }
    TuningCurve::new(rec.site_id.clone(), points)
}

/// Stationarity of a recording, judged on the concatenation of its trials.
pub fn recording_stationarity<T: Scalar>(rec: &RawRecording<T>, n_segments: usize) -> StationarityReport {
    let all: Vec<T> = rec.trials.iter().flat_map(|t| t.samples.iter().copied()).collect();
    stationarity_flag(&all, n_segments)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise_trial(contrast: f64, seed: u64, gain_after_onset: f64) -> Trial<f64> {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let onset = 300;
        let samples = (0..onset + 2000)
            .map(|i| {
                let v: f64 = StandardNormal.sample(&mut rng);
                if i >= onset { v * gain_after_onset } else { v }
            })
            .collect();
        Trial { contrast, onset_index: onset, samples }
    }

    #[test]
    fn hand_evaluated_ratio_of_means() {
        let snr = snr_from_powers(&[2.0, 4.0, 6.0], &[1.0, 1.0, 2.0]).unwrap();
        assert!((snr - 3.0f64).abs() < 1e-15);
        assert!(matches!(snr_from_powers(&[1.0], &[0.0]), Err(CrfError::DegenerateBaseline)));
    }

    #[test]
    fn identical_windows_give_unit_snr() {
        // stimulus window content copied from the baseline window
        let mut t = noise_trial(0.0, 1, 1.0);
        let base: Vec<f64> = t.samples[100..300].to_vec();
        t.samples[300..500].copy_from_slice(&base);
        let snr = snr_response(
            &[t],
            1000.0,
            Window { start_ms: 0.0, end_ms: 200.0 },
            Window::BASELINE,
            Band::gamma(),
        )
        .unwrap();
        assert!((snr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn doubled_power_gives_snr_two() {
        let mut t = noise_trial(0.0, 2, 1.0);
        let base: Vec<f64> = t.samples[100..300].iter().map(|v| v * 2f64.sqrt()).collect();
        t.samples[300..500].copy_from_slice(&base);
        let snr = snr_response(
            &[t.clone(), t],
            1000.0,
            Window { start_ms: 0.0, end_ms: 200.0 },
            Window::BASELINE,
            Band::gamma(),
        )
        .unwrap();
        assert!((snr - 2.0).abs() < 1e-12);
    }

    #[test]
    fn snr_is_scale_invariant() {
        let trials: Vec<Trial<f64>> = (0..3).map(|s| noise_trial(0.1, s, 1.5)).collect();
        let scaled: Vec<Trial<f64>> = trials
            .iter()
            .map(|t| Trial { samples: t.samples.iter().map(|v| v * 37.5).collect(), ..t.clone() })
            .collect();
        let a = snr_response(&trials, 1000.0, Window::STIMULUS, Window::BASELINE, Band::gamma()).unwrap();
        let b = snr_response(&scaled, 1000.0, Window::STIMULUS, Window::BASELINE, Band::gamma()).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn unit_curve_when_stimulus_matches_baseline_spectrum() {
        // A 200-sample periodic signal: once the filter has settled, the
        // baseline and a 200 ms stimulus window hold identical samples.
        let period: Vec<f64> = {
            let mut state = 7u64;
            let mut phases = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                (state >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU
            };
            spectrum::random_phase_noise(200, 1.0, &mut phases)
        };
        let trials: Vec<Trial<f64>> = DEFAULT_CONTRASTS
            .iter()
            .map(|&c| Trial {
                contrast: c,
                onset_index: 1000,
                samples: period.iter().copied().cycle().take(1200).collect(),
            })
            .collect();
        let rec = RawRecording { site_id: "s".into(), sample_rate: 1000.0, trials };
        let cfg = PreprocessConfig {
            stimulus_window: Window { start_ms: 0.0, end_ms: 200.0 },
            ..Default::default()
        };
        let curve = build_tuning_curve(&rec, &cfg).unwrap();
        assert_eq!(curve.points.len(), CURVE_POINTS);
        for p in &curve.points {
            assert!((p.response - 1.0).abs() < 1e-9, "{p:?}");
        }
    }

    #[test]
    fn missing_contrast_is_reported() {
        let trials: Vec<Trial<f64>> = DEFAULT_CONTRASTS
            .iter()
            .filter(|&&c| c != 0.38)
            .map(|&c| noise_trial(c, 0, 1.0))
            .collect();
        let rec = RawRecording { site_id: "s".into(), sample_rate: 1000.0, trials };
        match build_tuning_curve(&rec, &PreprocessConfig::default()) {
            Err(CrfError::IncompleteRecording { contrast, .. }) => assert_eq!(contrast, 0.38),
            other => panic!("expected incomplete recording, got {other:?}"),
        }
    }

    #[test]
    fn curve_invariants_are_enforced() {
        let c = DEFAULT_CONTRASTS;
        assert!(TuningCurve::from_pairs("a", &c, &[1.0; 8]).is_ok());
        assert!(TuningCurve::from_pairs("a", &c[..7], &[1.0; 7]).is_err());
        let mut bad = c;
        bad.swap(2, 3);
        assert!(TuningCurve::from_pairs("a", &bad, &[1.0; 8]).is_err());
        let mut neg = [1.0; 8];
        neg[4] = 0.0;
        assert!(TuningCurve::from_pairs("a", &c, &neg).is_err());
    }
}
