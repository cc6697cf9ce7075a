use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CrfError, Result};
use crate::scalar::Scalar;

/// Pool size and partition sizes of the supersaturated workflow.
pub const POOL_SIZE: usize = 224;
pub const SPLIT_SIZES: [usize; 3] = [156, 34, 34];

/// A pooled data point with its source curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolPoint<T> {
    pub curve: usize,
    pub contrast: T,
    pub response: T,
}

/// Train, validation and test partitions of a pool, as indices into it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn sizes(&self) -> [usize; 3] {
        [self.train.len(), self.val.len(), self.test.len()]
    }

    pub fn select<'a, P: Copy>(&self, pool: &'a [P]) -> [Vec<P>; 3] {
        let pick = |idx: &[usize]| idx.iter().map(|&i| pool[i]).collect();
        [pick(&self.train), pick(&self.val), pick(&self.test)]
    }
}

/// Partition sizes proportional to 156/34/34 for a pool of `n` points.
pub fn proportional_sizes(n: usize) -> [usize; 3] {
    let val = (n * SPLIT_SIZES[1] + POOL_SIZE / 2) / POOL_SIZE;
    [n - 2 * val, val, val]
}

/// The 156/34/34 split of a 224-point pool.
pub fn split_dataset<T: Scalar>(points: &[PoolPoint<T>], seed: u64) -> Result<Split> {
    if points.len() != POOL_SIZE {
        return Err(CrfError::InvalidConfig(format!(
            "supersaturated pool has {} points; the 156/34/34 split needs {POOL_SIZE}",
            points.len()
        )));
    }
    split_with_sizes(points, SPLIT_SIZES, seed)
}

/// Random split stratified by contrast level.
///
/// Each level contributes to each partition in proportion to its share of
/// the pool: integer counts are the floors of the exact shares, and the
/// leftover slots go to the partitions with the largest fractional shares,
/// visiting levels in a seeded random order. Within a level the points are
/// shuffled before being dealt out.
pub fn split_with_sizes<T: Scalar>(points: &[PoolPoint<T>], sizes: [usize; 3], seed: u64) -> Result<Split> {
    let total: usize = sizes.iter().sum();
    if total != points.len() {
        return Err(CrfError::InvalidConfig(format!(
            "split sizes {sizes:?} sum to {total}, pool has {} points",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut levels: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        levels.entry(p.contrast.as_f64().to_bits()).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = levels.into_values().collect();

    let mut counts: Vec<[usize; 3]> = Vec::with_capacity(groups.len());
    let mut frac: Vec<[f64; 3]> = Vec::with_capacity(groups.len());
    for g in &groups {
        let mut c = [0; 3];
        let mut f = [0.0; 3];
        for p in 0..3 {
            let exact = g.len() as f64 * sizes[p] as f64 / total as f64;
            c[p] = exact.floor() as usize;
            f[p] = exact - exact.floor();
        }
        counts.push(c);
        frac.push(f);
    }
    let mut deficit: [usize; 3] = std::array::from_fn(|p| sizes[p] - counts.iter().map(|c| c[p]).sum::<usize>());
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.shuffle(&mut rng);
    for &l in &order {
        while counts[l].iter().sum::<usize>() < groups[l].len() {
            let p = (0..3)
                .filter(|&p| deficit[p] > 0)
                .max_by(|&a, &b| frac[l][a].total_cmp(&frac[l][b]).then(b.cmp(&a)))
                .expect("leftover slots match leftover points");
            counts[l][p] += 1;
            deficit[p] -= 1;
            frac[l][p] = -1.0;
        }
    }

    let mut split = Split { train: Vec::new(), val: Vec::new(), test: Vec::new() };
    for (g, c) in groups.iter().zip(&counts) {
        let mut idx = g.clone();
        idx.shuffle(&mut rng);
        split.train.extend_from_slice(&idx[..c[0]]);
        split.val.extend_from_slice(&idx[c[0]..c[0] + c[1]]);
        split.test.extend_from_slice(&idx[c[0] + c[1]..]);
    }
    for part in [&mut split.train, &mut split.val, &mut split.test] {
        part.sort_unstable();
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::DEFAULT_CONTRASTS;

    fn pool(curves: usize) -> Vec<PoolPoint<f64>> {
        (0..curves)
            .flat_map(|k| {
                DEFAULT_CONTRASTS.iter().map(move |&c| PoolPoint { curve: k, contrast: c, response: 1.0 + c * k as f64 })
            })
            .collect()
    }

    #[test]
    fn fixed_sizes_disjoint_and_complete() {
        let p = pool(28);
        let s = split_dataset(&p, 3).unwrap();
        assert_eq!(s.sizes(), [156, 34, 34]);
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..224).collect::<Vec<_>>());
    }

    #[test]
    fn stratified_per_level() {
        let p = pool(28);
        let s = split_dataset(&p, 11).unwrap();
        for &c in &DEFAULT_CONTRASTS {
            let n = |idx: &[usize]| idx.iter().filter(|&&i| p[i].contrast == c).count();
            // exact shares per level: 19.5 / 4.25 / 4.25
            assert!((19..=20).contains(&n(&s.train)), "{c}");
            assert!((4..=5).contains(&n(&s.val)));
            assert!((4..=5).contains(&n(&s.test)));
        }
    }

    #[test]
    fn seeded() {
        let p = pool(28);
        assert_eq!(split_dataset(&p, 5).unwrap(), split_dataset(&p, 5).unwrap());
        assert_ne!(split_dataset(&p, 5).unwrap(), split_dataset(&p, 6).unwrap());
    }

    #[test]
    fn wrong_pool_size() {
        let err = split_dataset(&pool(27), 0).unwrap_err().to_string();
        assert!(err.contains("216"), "{err}");
    }

    #[test]
    fn proportional_for_other_pools() {
        assert_eq!(proportional_sizes(224), SPLIT_SIZES);
        let s = split_with_sizes(&pool(10), proportional_sizes(80), 0).unwrap();
        assert_eq!(s.sizes().iter().sum::<usize>(), 80);
    }
}
