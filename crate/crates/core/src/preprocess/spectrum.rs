//! FFT periodograms and band power.

use rustfft::num_complex::Complex;
use rustfft::{FftNum, FftPlanner};

use crate::error::{CrfError, Result};
use crate::scalar::Scalar;

/// Frequency band in Hz, inclusive at both edges.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Band<T> {
    pub low: T,
    pub high: T,
}

impl<T: Scalar> Band<T> {
    pub fn new(low: T, high: T) -> Self {
        Self { low, high }
    }

    /// Gamma band, 30 to 90 Hz.
    pub fn gamma() -> Self {
        Self::new(T::lit(30.0), T::lit(90.0))
    }

    #[inline]
    pub fn contains(&self, f: T) -> bool {
        self.low <= f && f <= self.high
    }
}

/// One-sided periodogram of a rectangular-windowed segment.
///
/// Bin `k` holds `|X_k|² / N` at frequency `k · fs / N`, for `k = 0..=N/2`.
/// With this scaling the expected bin value of white noise equals its
/// variance regardless of segment length.
#[derive(Debug, Clone)]
pub struct Periodogram<T> {
    pub freqs: Vec<T>,
    pub power: Vec<T>,
}

impl<T: Scalar> Periodogram<T> {
    /// Mean power over bins inside `band`, if any bin falls inside.
    pub fn band_mean(&self, band: Band<T>) -> Option<T> {
        let (sum, count) = self
            .freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| band.contains(**f))
            .fold((T::zero(), 0usize), |(s, c), (_, &p)| (s + p, c + 1));
        (count > 0).then(|| sum / T::from_count(count))
    }

    /// Sum of power over bins inside `band`.
    pub fn band_sum(&self, band: Band<T>) -> T {
        self.freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| band.contains(**f))
            .map(|(_, &p)| p)
            .sum()
    }

    pub fn total(&self) -> T {
        self.power.iter().copied().sum()
    }

    pub fn band_bin_count(&self, band: Band<T>) -> usize {
        self.freqs.iter().filter(|f| band.contains(**f)).count()
    }
}

/// Frequencies of the one-sided bins for a segment of `n` samples.
pub fn bin_freqs<T: Scalar>(n: usize, sample_rate: T) -> Vec<T> {
    let df = sample_rate / T::from_count(n);
    (0..=n / 2).map(|k| T::from_count(k) * df).collect()
}

pub fn periodogram<T: Scalar + FftNum>(segment: &[T], sample_rate: T) -> Result<Periodogram<T>> {
    let n = segment.len();
    if n == 0 {
        return Err(CrfError::DegenerateWindow("empty segment".into()));
    }
    let mut buf: Vec<Complex<T>> = segment.iter().map(|&x| Complex::new(x, T::zero())).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let inv_n = T::one() / T::from_count(n);
    let power = buf[..=n / 2].iter().map(|c| c.norm_sqr() * inv_n).collect();
    Ok(Periodogram {
        freqs: bin_freqs(n, sample_rate),
        power,
    })
}

/// Mean periodogram power inside `band` over `samples[start..end]`.
pub fn band_power<T: Scalar + FftNum>(
    samples: &[T],
    sample_rate: T,
    band: Band<T>,
    window: (usize, usize),
) -> Result<T> {
    let (start, end) = window;
    if start >= end || end > samples.len() {
        return Err(CrfError::DegenerateWindow(format!(
            "window [{start}, {end}) invalid for {} samples",
            samples.len()
        )));
    }
    let nyquist = sample_rate / T::lit(2.0);
    if !(band.low < band.high && band.high < nyquist) {
        return Err(CrfError::InvalidConfig(format!(
            "band [{}, {}] Hz must satisfy low < high < Nyquist ({nyquist} Hz)",
            band.low, band.high
        )));
    }
    periodogram(&samples[start..end], sample_rate)?
        .band_mean(band)
        .ok_or_else(|| {
            CrfError::DegenerateWindow(format!(
                "no FFT bin of a {}-sample window falls in [{}, {}] Hz",
                end - start,
                band.low,
                band.high
            ))
        })
}

/// Real signal whose periodogram over its own length is exactly `power` in
/// every bin except DC (zero), with independent uniformly random phases.
pub fn random_phase_noise<T: Scalar + FftNum>(
    n: usize,
    power: T,
    phases: &mut impl FnMut() -> T,
) -> Vec<T> {
    if n == 0 {
        return Vec::new();
    }
    let mag = (power * T::from_count(n)).sqrt();
    let mut spec = vec![Complex::new(T::zero(), T::zero()); n];
    for k in 1..=(n - 1) / 2 {
        let ph = phases();
        let c = Complex::new(mag * ph.cos(), mag * ph.sin());
        spec[k] = c;
        spec[n - k] = c.conj();
    }
    if n % 2 == 0 {
        let sign = if phases() < T::PI() { T::one() } else { -T::one() };
        spec[n / 2] = Complex::new(sign * mag, T::zero());
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    let inv_n = T::one() / T::from_count(n);
    spec.iter().map(|c| c.re * inv_n).collect()
}
