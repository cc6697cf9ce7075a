//! Second-order Butterworth low-pass section.

use crate::error::{CrfError, Result};
use crate::scalar::Scalar;

/// Biquad coefficients normalized so that `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad<T> {
    pub b0: T,
    pub b1: T,
    pub b2: T,
    pub a1: T,
    pub a2: T,
}

impl<T: Scalar> Biquad<T> {
    /// Second-order Butterworth low-pass via the bilinear transform with
    /// prewarping, so the -3 dB point lands exactly on `cutoff`.
    pub fn butterworth_lowpass(sample_rate: T, cutoff: T) -> Result<Self> {
        let nyquist = sample_rate / T::lit(2.0);
        if !(sample_rate > T::zero()) || !sample_rate.is_finite() {
            return Err(CrfError::InvalidConfig(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if !(cutoff > T::zero() && cutoff < nyquist) {
            return Err(CrfError::InvalidConfig(format!(
                "cutoff {cutoff} Hz must lie in (0, {nyquist}) Hz"
            )));
        }
        let k = (T::PI() * cutoff / sample_rate).tan();
        let k2 = k * k;
        let sqrt2 = T::SQRT_2();
        let norm = T::one() / (T::one() + sqrt2 * k + k2);
        let b0 = k2 * norm;
        Ok(Self {
            b0,
            b1: b0 + b0,
            b2: b0,
            a1: T::lit(2.0) * (k2 - T::one()) * norm,
            a2: (T::one() - sqrt2 * k + k2) * norm,
        })
    }

    /// `|H(e^{jω})|²` at frequency `freq` for the given sample rate.
    pub fn power_gain(&self, freq: T, sample_rate: T) -> T {
        let w = T::lit(2.0) * T::PI() * freq / sample_rate;
        let (c1, s1) = (w.cos(), w.sin());
        let (c2, s2) = ((w + w).cos(), (w + w).sin());
        let nr = self.b0 + self.b1 * c1 + self.b2 * c2;
        let ni = -(self.b1 * s1 + self.b2 * s2);
        let dr = T::one() + self.a1 * c1 + self.a2 * c2;
        let di = -(self.a1 * s1 + self.a2 * s2);
        (nr * nr + ni * ni) / (dr * dr + di * di)
    }

    fn dc_gain(&self) -> T {
        (self.b0 + self.b1 + self.b2) / (T::one() + self.a1 + self.a2)
    }

    /// Runs the section forward (transposed direct form II).
    ///
    /// The state starts at the steady state of a constant input equal to the
    /// first sample, so a DC signal passes through without a start-up transient.
    pub fn apply(&self, samples: &[T]) -> Vec<T> {
        let Some(&x0) = samples.first() else {
            return Vec::new();
        };
        let y0 = self.dc_gain() * x0;
        let mut z1 = y0 - self.b0 * x0;
        let mut z2 = self.b2 * x0 - self.a2 * y0;
        samples
            .iter()
            .map(|&x| {
                let y = self.b0 * x + z1;
                z1 = self.b1 * x - self.a1 * y + z2;
                z2 = self.b2 * x - self.a2 * y;
                y
            })
            .collect()
    }

    /// Forward then backward pass; zero phase, squared magnitude response.
    pub fn apply_zero_phase(&self, samples: &[T]) -> Vec<T> {
        let mut fwd = self.apply(samples);
        fwd.reverse();
        let mut out = self.apply(&fwd);
        out.reverse();
        out
    }
}

/// Filters `samples` with a causal second-order Butterworth low-pass.
pub fn butterworth_lowpass<T: Scalar>(samples: &[T], sample_rate: T, cutoff: T) -> Result<Vec<T>> {
    if samples.is_empty() {
        return Err(CrfError::DegenerateWindow("no samples to filter".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(CrfError::NonFinite("filter input".into()));
    }
    Ok(Biquad::butterworth_lowpass(sample_rate, cutoff)?.apply(samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin())
            .collect()
    }

    fn steady_amplitude(y: &[f64]) -> f64 {
        let tail = &y[y.len() / 2..];
        tail.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn dc_passes_unchanged() {
        let y = butterworth_lowpass(&vec![3.0f64; 2000], 1000.0, 100.0).unwrap();
        assert!(y.iter().all(|v| (v - 3.0).abs() < 1e-9));
    }

    #[test]
    fn minus_three_db_at_cutoff() {
        let fs = 5000.0;
        let y = butterworth_lowpass(&sine(100.0, fs, 50_000), fs, 100.0).unwrap();
        let db = 20.0 * steady_amplitude(&y).log10();
        assert!((db + 3.0103).abs() < 0.5, "gain {db} dB");
    }

    #[test]
    fn forty_db_per_decade_rolloff() {
        // Analog prototype: |H| = 1/sqrt(1 + (f/fc)^4) -> -40.0004 dB at 10 fc.
        let expected = -10.0 * (1.0 + 10f64.powi(4)).log10();
        let fs = 20_000.0;
        let y = butterworth_lowpass(&sine(1000.0, fs, 100_000), fs, 100.0).unwrap();
        let db = 20.0 * steady_amplitude(&y).log10();
        assert!((db - expected).abs() < 2.0, "gain {db} dB");
    }

    #[test]
    fn power_gain_matches_half_at_cutoff() {
        let bq = Biquad::<f64>::butterworth_lowpass(1000.0, 100.0).unwrap();
        assert!((bq.power_gain(100.0, 1000.0) - 0.5).abs() < 1e-12);
        assert!((bq.power_gain(0.0, 1000.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_cutoff_at_nyquist_and_bad_samples() {
        assert!(matches!(
            butterworth_lowpass(&[1.0, 2.0], 200.0, 100.0),
            Err(CrfError::InvalidConfig(_))
        ));
        assert!(matches!(
            butterworth_lowpass(&[1.0, f64::NAN], 1000.0, 100.0),
            Err(CrfError::NonFinite(_))
        ));
    }

    #[test]
    fn zero_phase_keeps_dc_and_f32_works() {
        let bq = Biquad::<f32>::butterworth_lowpass(1000.0, 50.0).unwrap();
        let y = bq.apply_zero_phase(&[2.0f32; 500]);
        assert!(y.iter().all(|v| (v - 2.0).abs() < 1e-4));
    }
}
