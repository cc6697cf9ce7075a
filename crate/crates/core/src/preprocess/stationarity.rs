use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Outcome of the segment-wise weak-stationarity heuristic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub stationary: bool,
    pub segment_means: Vec<f64>,
    pub segment_variances: Vec<f64>,
    /// Largest |segment mean − grand mean| in units of the pooled standard error.
    pub max_mean_deviation: f64,
    /// Largest over smallest segment variance.
    pub variance_ratio: f64,
}

pub const MEAN_DEVIATION_LIMIT: f64 = 3.0;
pub const VARIANCE_RATIO_LIMIT: f64 = 4.0;

/// Splits `samples` into `n_segments` equal parts and compares their first two
/// moments. Advisory only: a `false` never blocks the pipeline.
///
/// A segment count below 2, or too few samples to fill every segment with at
/// least two values, yields a report with `stationary = true` and empty moments.
pub fn stationarity_flag<T: Scalar>(samples: &[T], n_segments: usize) -> StationarityReport {
    let seg_len = if n_segments >= 2 { samples.len() / n_segments } else { 0 };
    if seg_len < 2 {
        return StationarityReport {
            stationary: true,
            segment_means: Vec::new(),
            segment_variances: Vec::new(),
            max_mean_deviation: 0.0,
            variance_ratio: 1.0,
        };
    }
    let (means, vars): (Vec<f64>, Vec<f64>) = samples
        .chunks_exact(seg_len)
        .take(n_segments)
        .map(|seg| {
            let n = seg.len() as f64;
            let m = seg.iter().map(|v| v.as_f64()).sum::<f64>() / n;
            let v = seg.iter().map(|x| (x.as_f64() - m).powi(2)).sum::<f64>() / (n - 1.0);
            (m, v)
        })
        .unzip();
    let k = means.len() as f64;
    let grand = means.iter().sum::<f64>() / k;
    let pooled = vars.iter().sum::<f64>() / k;
    let se = (pooled / seg_len as f64).sqrt();
    let max_dev = means
        .iter()
        .map(|m| (m - grand).abs())
        .fold(0.0f64, f64::max);
    let max_mean_deviation = if se > 0.0 {
        max_dev / se
    } else if max_dev > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let vmax = vars.iter().copied().fold(f64::MIN, f64::max);
    let vmin = vars.iter().copied().fold(f64::MAX, f64::min);
    let variance_ratio = if vmin > 0.0 {
        vmax / vmin
    } else if vmax > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    StationarityReport {
        stationary: max_mean_deviation <= MEAN_DEVIATION_LIMIT && variance_ratio <= VARIANCE_RATIO_LIMIT,
        segment_means: means,
        segment_variances: vars,
        max_mean_deviation,
        variance_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn white_noise_is_stationary() {
        let r = stationarity_flag(&noise(4000, 3), 4);
        assert!(r.stationary, "{r:?}");
        assert_eq!(r.segment_means.len(), 4);
    }

    #[test]
    fn ramp_is_flagged() {
        let x: Vec<f64> = noise(4000, 4).iter().enumerate().map(|(i, v)| v + 0.01 * i as f64).collect();
        assert!(!stationarity_flag(&x, 4).stationary);
    }

    #[test]
    fn variance_step_is_flagged() {
        let x: Vec<f64> = noise(4000, 5)
            .iter()
            .enumerate()
            .map(|(i, v)| if i < 2000 { *v } else { v * 10f64.sqrt() })
            .collect();
        let r = stationarity_flag(&x, 4);
        assert!(r.variance_ratio > VARIANCE_RATIO_LIMIT);
        assert!(!r.stationary);
    }

    #[test]
    fn too_short_input_never_panics() {
        assert!(stationarity_flag(&[1.0f64, 2.0], 4).stationary);
        assert!(stationarity_flag::<f64>(&[], 2).stationary);
    }
}
