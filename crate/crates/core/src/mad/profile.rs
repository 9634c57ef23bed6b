//! Matrix profile and distance profiles at a fixed length.

use crate::distance::{sliding_dot_products, znorm_euclidean_from_stats, DotProductRow};
use crate::error::{Error, Result};
use crate::mad::is_trivial_match;
use crate::series::DataSeries;

/// Per-anchor nearest-neighbor distance and offset at one window length.
#[derive(Debug, Clone)]
pub struct MatrixProfile {
    pub len: usize,
    pub distances: Vec<f64>,
    pub neighbors: Vec<usize>,
}

impl MatrixProfile {
    pub fn num_anchors(&self) -> usize {
        self.distances.len()
    }

    /// The motif pair implied by the profile: global minimum entry, pair
    /// normalized to (smaller, larger) offset.
    pub fn motif_pair(&self) -> (usize, usize, f64) {
        let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
        for (i, &dist) in self.distances.iter().enumerate() {
            let j = self.neighbors[i];
            let (a, b) = (i.min(j), i.max(j));
            let key = (dist, a, b);
            if key.0 < best.0 || (key.0 == best.0 && (key.1, key.2) < (best.1, best.2)) {
                best = key;
            }
        }
        (best.1, best.2, best.0)
    }
}

/// Precomputed per-offset window statistics at one length.
pub(crate) struct WindowStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl WindowStats {
    pub fn new(d: &DataSeries, len: usize) -> Self {
        let n = d.len() - len + 1;
        let mut means = Vec::with_capacity(n);
        let mut stds = Vec::with_capacity(n);
        for offset in 0..n {
            let (mean, std) = d.stats_unchecked(offset, len);
            means.push(mean);
            stds.push(std);
        }
        WindowStats { means, stds }
    }
}

pub(crate) fn check_profile_len(d: &DataSeries, len: usize) -> Result<()> {
    if len < 4 || len > d.len() / 2 {
        return Err(Error::LengthTooLargeForProfile {
            len,
            series_len: d.len(),
        });
    }
    Ok(())
}

/// Distances from one anchor to every non-trivial offset, least first in
/// offset order. `row` is the anchor's dot-product row.
pub(crate) fn distances_from_row(
    row: &DotProductRow,
    stats: &WindowStats,
    anchor: usize,
    len: usize,
    mut emit: impl FnMut(usize, f64),
) {
    for j in 0..row.num_offsets() {
        if is_trivial_match(anchor, j, len) {
            continue;
        }
        let dist = znorm_euclidean_from_stats(
            row.qt(j),
            len,
            stats.means[anchor],
            stats.stds[anchor],
            stats.means[j],
            stats.stds[j],
        );
        emit(j, dist);
    }
}

/// Matrix profile at one length, built from successive distance profiles
/// via the incremental dot-product recurrence. Exclusion zone: offsets
/// within len/2 of the anchor are trivial matches.
pub fn matrix_profile(d: &DataSeries, len: usize) -> Result<MatrixProfile> {
    check_profile_len(d, len)?;
    let stats = WindowStats::new(d, len);
    let n = d.len() - len + 1;
    let mut distances = Vec::with_capacity(n);
    let mut neighbors = Vec::with_capacity(n);
    let mut row: Option<DotProductRow> = None;
    for anchor in 0..n {
        let next = sliding_dot_products(d, anchor, len, row.as_ref())?;
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        distances_from_row(&next, &stats, anchor, len, |j, dist| {
            if dist < best {
                best = dist;
                best_j = j;
            }
        });
        distances.push(best);
        neighbors.push(best_j);
        row = Some(next);
    }
    Ok(MatrixProfile {
        len,
        distances,
        neighbors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{znormalize, SeriesId};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn walk_series(n: usize, seed: u64) -> DataSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc = 0.0;
        let values = (0..n)
            .map(|_| {
                acc += rng.sample::<f64, _>(StandardNormal);
                acc
            })
            .collect();
        DataSeries::new(SeriesId(0), values).unwrap()
    }

    /// Brute-force oracle: per-pair explicit normalization.
    fn brute_profile(d: &DataSeries, len: usize) -> (Vec<f64>, Vec<usize>) {
        let n = d.len() - len + 1;
        let mut dist = vec![f64::INFINITY; n];
        let mut nn = vec![usize::MAX; n];
        for i in 0..n {
            let zi = znormalize(d.window(i, len));
            for j in 0..n {
                if is_trivial_match(i, j, len) {
                    continue;
                }
                let zj = znormalize(d.window(j, len));
                let e = crate::distance::euclidean(&zi, &zj).unwrap();
                if e < dist[i] {
                    dist[i] = e;
                    nn[i] = j;
                }
            }
        }
        (dist, nn)
    }

    #[test]
    fn sine_profile_is_zero() {
        let values: Vec<f64> = (0..512)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / 64.0).sin())
            .collect();
        let d = DataSeries::new(SeriesId(0), values).unwrap();
        let mp = matrix_profile(&d, 64).unwrap();
        for (i, &v) in mp.distances.iter().enumerate() {
            assert!(v < 1e-6, "entry {i} = {v}");
        }
    }

    #[test]
    fn alternating_series_zone() {
        // [0,1,0,1,0,1,0,1], len 4: anchor 0 matches offset 4 exactly;
        // offset 2 is identical too but inside the exclusion zone of 2.
        let d =
            DataSeries::new(SeriesId(0), vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        let mp = matrix_profile(&d, 4).unwrap();
        assert!(mp.distances[0] < 1e-9);
        assert_eq!(mp.neighbors[0], 4);
    }

    #[test]
    fn profile_matches_brute_force() {
        let d = walk_series(600, 11);
        let len = 32;
        let mp = matrix_profile(&d, len).unwrap();
        let (bd, bn) = brute_profile(&d, len);
        for i in 0..mp.num_anchors() {
            assert!(
                (mp.distances[i] - bd[i]).abs() < 1e-6,
                "anchor {i}: {} vs {}",
                mp.distances[i],
                bd[i]
            );
            assert_eq!(mp.neighbors[i], bn[i], "anchor {i} neighbor");
        }
    }

    #[test]
    fn profile_invariant_under_affine_transform() {
        let d = walk_series(400, 12);
        let len = 24;
        let transformed: Vec<f64> = d.values().iter().map(|v| 2.5 * v - 7.0).collect();
        let dt = DataSeries::new(SeriesId(0), transformed).unwrap();
        let a = matrix_profile(&d, len).unwrap();
        let b = matrix_profile(&dt, len).unwrap();
        for i in 0..a.num_anchors() {
            assert!((a.distances[i] - b.distances[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn length_bounds_enforced() {
        let d = walk_series(100, 13);
        assert!(matches!(
            matrix_profile(&d, 3),
            Err(Error::LengthTooLargeForProfile { .. })
        ));
        assert!(matches!(
            matrix_profile(&d, 51),
            Err(Error::LengthTooLargeForProfile { .. })
        ));
        assert!(matrix_profile(&d, 50).is_ok());
    }

    #[test]
    fn global_minimum_is_symmetric_pair() {
        let d = walk_series(500, 14);
        let mp = matrix_profile(&d, 25).unwrap();
        let (a, b, dist) = mp.motif_pair();
        assert!((mp.distances[a] - dist).abs() < 1e-12);
        assert!((mp.distances[b] - dist).abs() < 1e-12);
        assert!(a < b);
        assert!(!is_trivial_match(a, b, 25));
    }
}
