//! Length-extensible lower bound on the z-normalized distance.
//!
//! For an anchor window fixed at its true target length and a candidate
//! whose first `lmin` points are fixed but whose trailing `k` points are
//! free, the bound is the infimum of the z-normalized Euclidean distance
//! over all real tail extensions. Since the candidate's actual extension is
//! one feasible tail, the bound never exceeds the true distance at the
//! target length.
//!
//! Writing the normalized anchor as `x` (mean 0, norm sqrt(L)) and
//! maximizing the correlation over feasible normalized candidates, whose
//! head must be an affine image of the known head and whose tail is free,
//! splits into a head term and a tail term; Cauchy-Schwarz on the centered
//! tail gives the closed form
//!
//! ```text
//! rho = sqrt( (max(c, 0)^2 / A  +  h^2 (A + k) / (A k)  +  V) / L )
//! d   = sqrt( 2 L (1 - rho) )
//! ```
//!
//! with `A = lmin`, `c` the head correlation of the normalized anchor
//! against the head-normalized candidate, `h` the head sum of the
//! normalized anchor, and `V` the centered tail energy `L - W_h - h^2 / k`.
//! Every length-dependent factor is shared by the whole profile; the only
//! per-candidate quantity is `c = c0 / std(anchor, L)` with
//!
//! ```text
//! c0 = (qt - A mean_i mean_j) / std_j        (head stats at lmin)
//! ```
//!
//! so ranking candidates by the bound at any target length is ranking by
//! `max(c0, 0)` descending: the rank is preserved across lengths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::DataSeries;

/// Cached per-pair quantities from the length-`lmin` head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairBound {
    pub anchor: usize,
    pub candidate: usize,
    /// Dot product of the two heads at lmin.
    pub qt: f64,
    pub candidate_mean: f64,
    pub candidate_std: f64,
    /// The rank-preserving per-pair scalar (0 for a flat candidate head).
    pub c0: f64,
    pub flat_head: bool,
}

/// Initializes the cached state for one pair from true length-`lmin`
/// computations.
pub fn lb_init(
    d: &DataSeries,
    anchor: usize,
    candidate: usize,
    lmin: usize,
) -> Result<PairBound> {
    let (anchor_mean, _) = d.subsequence_stats(anchor, lmin)?;
    let (candidate_mean, candidate_std) = d.subsequence_stats(candidate, lmin)?;
    let qt = crate::distance::dot(d.window(anchor, lmin), d.window(candidate, lmin));
    Ok(PairBound {
        anchor,
        candidate,
        qt,
        candidate_mean,
        candidate_std,
        c0: pair_c0(qt, lmin, anchor_mean, candidate_mean, candidate_std),
        flat_head: candidate_std == 0.0,
    })
}

#[inline]
pub(crate) fn pair_c0(
    qt: f64,
    lmin: usize,
    anchor_mean: f64,
    candidate_mean: f64,
    candidate_std: f64,
) -> f64 {
    if candidate_std == 0.0 {
        0.0
    } else {
        (qt - lmin as f64 * anchor_mean * candidate_mean) / candidate_std
    }
}

/// Anchor-side terms at one target length, shared by every candidate of the
/// anchor's profile. O(1) from prefix sums.
#[derive(Debug, Clone, Copy)]
pub struct AnchorTerms {
    pub lmin: usize,
    pub target: usize,
    pub anchor_std_lmin: f64,
    /// std of the anchor at the target length; 0 marks a flat anchor.
    std_target: f64,
    /// h^2 (A + k)/(A k) + V, the candidate-independent part of rho^2 * L.
    inner_const: f64,
    /// 1 / (std_target^2 * A): scales c0^2 into the rho expression.
    c0_scale: f64,
}

impl AnchorTerms {
    pub fn new(d: &DataSeries, anchor: usize, lmin: usize, target: usize) -> Result<Self> {
        if target < lmin {
            return Err(Error::InvalidLengthRange {
                lmin,
                lmax: target,
                series_len: d.len(),
            });
        }
        let (_, std_lmin) = d.subsequence_stats(anchor, lmin)?;
        let (mean_t, std_t) = d.subsequence_stats(anchor, target)?;
        let a = lmin as f64;
        let l = target as f64;
        let k = l - a;
        if target == lmin || std_t == 0.0 {
            return Ok(AnchorTerms {
                lmin,
                target,
                anchor_std_lmin: std_lmin,
                std_target: std_t,
                inner_const: 0.0,
                c0_scale: 0.0,
            });
        }
        let head_sum = d.range_sum(anchor, lmin);
        let head_sum_sq = d.range_sum_sq(anchor, lmin);
        let h = (head_sum - a * mean_t) / std_t;
        let w_h = (head_sum_sq - 2.0 * mean_t * head_sum + a * mean_t * mean_t)
            / (std_t * std_t);
        let v = (l - w_h - h * h / k).max(0.0);
        let inner_const = h * h * (a + k) / (a * k) + v;
        Ok(AnchorTerms {
            lmin,
            target,
            anchor_std_lmin: std_lmin,
            std_target: std_t,
            inner_const,
            c0_scale: 1.0 / (std_t * std_t * a),
        })
    }

    /// Evaluates the bound for one candidate in O(1).
    #[inline]
    pub fn eval(&self, c0: f64, flat_head: bool) -> f64 {
        let a = self.lmin as f64;
        let l = self.target as f64;
        if self.target == self.lmin {
            // No free tail: the bound is the true distance at lmin.
            let std_i = self.anchor_std_lmin;
            if std_i == 0.0 || flat_head {
                return if std_i == 0.0 && flat_head { 0.0 } else { a.sqrt() };
            }
            let corr = (c0 / (a * std_i)).clamp(-1.0, 1.0);
            return (2.0 * a * (1.0 - corr)).max(0.0).sqrt();
        }
        if self.std_target == 0.0 {
            // Flat anchor normalizes to zeros; a flat candidate head can be
            // extended flat (distance 0), anything else normalizes to unit
            // scale at distance sqrt(L).
            return if flat_head { 0.0 } else { l.sqrt() };
        }
        let c = c0.max(0.0);
        let rho_sq = (c * c * self.c0_scale + self.inner_const) / l;
        let rho = rho_sq.sqrt().min(1.0);
        (2.0 * l * (1.0 - rho)).max(0.0).sqrt()
    }
}

/// One-off evaluation of the bound for a pair at a target length. The bound
/// only looks at the candidate head, so it stays defined even past the
/// candidate's last full window; callers normally drop such candidates.
pub fn lb_eval(d: &DataSeries, pair: &PairBound, lmin: usize, target: usize) -> Result<f64> {
    let terms = AnchorTerms::new(d, pair.anchor, lmin, target)?;
    Ok(terms.eval(pair.c0, pair.flat_head))
}

/// The key the partial-profile machinery sorts candidates by: ascending
/// bound at any target length beyond lmin. Larger `max(c0, 0)` means a
/// smaller bound; ties go to the smaller offset.
#[inline]
pub(crate) fn lb_sort_key(c0: f64) -> f64 {
    c0.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::euclidean;
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

    /// Direct oracle: z-normalize both true windows and take the distance.
    fn true_znorm_distance(d: &DataSeries, i: usize, j: usize, len: usize) -> f64 {
        euclidean(
            &znormalize(d.window(i, len)),
            &znormalize(d.window(j, len)),
        )
        .unwrap()
    }

    #[test]
    fn bound_at_lmin_is_true_distance() {
        let d = walk_series(500, 1);
        let lmin = 32;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let i = rng.gen_range(0..d.len() - lmin);
            let j = rng.gen_range(0..d.len() - lmin);
            let pair = lb_init(&d, i, j, lmin).unwrap();
            let bound = lb_eval(&d, &pair, lmin, lmin).unwrap();
            let truth = true_znorm_distance(&d, i, j, lmin);
            assert!(
                (bound - truth).abs() < 1e-9,
                "bound {bound} vs true {truth} at ({i},{j})"
            );
        }
    }

    #[test]
    fn identical_windows_bound_zero_at_every_length() {
        // Series with an exact repeat so the two heads are identical.
        let mut values = walk_series(400, 3).values().to_vec();
        let copy: Vec<f64> = values[10..74].to_vec();
        values.splice(200..264, copy);
        let d = DataSeries::new(SeriesId(0), values).unwrap();
        let lmin = 32;
        let pair = lb_init(&d, 10, 200, lmin).unwrap();
        for target in lmin..=96 {
            let bound = lb_eval(&d, &pair, lmin, target).unwrap();
            assert!(bound < 1e-6, "bound {bound} at target {target}");
        }
    }

    #[test]
    fn cached_statistics_match_subseq_stats() {
        let d = walk_series(300, 4);
        let lmin = 24;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let i = rng.gen_range(0..d.len() - lmin);
            let j = rng.gen_range(0..d.len() - lmin);
            let pair = lb_init(&d, i, j, lmin).unwrap();
            let (mean, std) = d.subsequence_stats(j, lmin).unwrap();
            assert_eq!(pair.candidate_mean, mean);
            assert_eq!(pair.candidate_std, std);
            let qt = crate::distance::dot(d.window(i, lmin), d.window(j, lmin));
            assert_eq!(pair.qt, qt);
        }
    }

    #[test]
    fn bound_never_exceeds_true_distance() {
        // Randomized validity trial; the acceptance suite runs the full
        // 10^4-trial version.
        let d = walk_series(2000, 6);
        let lmin = 64;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let k = rng.gen_range(0..=64usize);
            let target = lmin + k;
            let i = rng.gen_range(0..=d.len() - target);
            let j = rng.gen_range(0..=d.len() - target);
            let pair = lb_init(&d, i, j, lmin).unwrap();
            let bound = lb_eval(&d, &pair, lmin, target).unwrap();
            let truth = true_znorm_distance(&d, i, j, target);
            assert!(
                bound <= truth + 1e-9,
                "violation: bound {bound} > true {truth} at ({i},{j}) target {target}"
            );
        }
    }

    #[test]
    fn bound_valid_on_flat_windows() {
        let mut values = walk_series(300, 8).values().to_vec();
        for v in values[40..80].iter_mut() {
            *v = 3.25;
        }
        for v in values[150..190].iter_mut() {
            *v = -1.5;
        }
        let d = DataSeries::new(SeriesId(0), values).unwrap();
        let lmin = 16;
        for (i, j) in [(40usize, 150usize), (40, 0), (0, 150), (0, 200)] {
            for target in [lmin, lmin + 8, lmin + 30] {
                let pair = lb_init(&d, i, j, lmin).unwrap();
                let bound = lb_eval(&d, &pair, lmin, target).unwrap();
                let truth = true_znorm_distance(&d, i, j, target);
                assert!(
                    bound <= truth + 1e-9,
                    "flat violation at ({i},{j}) target {target}: {bound} > {truth}"
                );
            }
        }
    }

    #[test]
    fn rank_preserved_across_target_lengths() {
        let d = walk_series(3000, 9);
        let lmin = 64;
        let anchor = 1200;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let candidates: Vec<usize> = (0..100)
            .map(|_| rng.gen_range(0..d.len() - lmin - 32))
            .collect();
        let pairs: Vec<PairBound> = candidates
            .iter()
            .map(|&j| lb_init(&d, anchor, j, lmin).unwrap())
            .collect();
        let order_at = |target: usize| -> Vec<usize> {
            let terms = AnchorTerms::new(&d, anchor, lmin, target).unwrap();
            let mut idx: Vec<usize> = (0..pairs.len()).collect();
            idx.sort_by(|&a, &b| {
                terms
                    .eval(pairs[a].c0, pairs[a].flat_head)
                    .total_cmp(&terms.eval(pairs[b].c0, pairs[b].flat_head))
                    .then(pairs[a].candidate.cmp(&pairs[b].candidate))
            });
            idx
        };
        let reference = order_at(lmin + 1);
        for k in 2..=32 {
            assert_eq!(order_at(lmin + k), reference, "order changed at k={k}");
        }
    }
}
