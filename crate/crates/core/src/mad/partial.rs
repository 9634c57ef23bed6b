//! Partial distance profiles: per anchor, the p candidates with the
//! smallest lower bounds, carrying exactly-updated true distances.
//!
//! Rank preservation makes this cheap: the candidate ordering by bound is
//! the same at every target length, so the sorted candidate list is built
//! once at lmin. Because the exclusion zone grows and the tail shrinks as
//! the target length grows, the list keeps enough extra candidates beyond p
//! that the first p admissible ones at any length in range are always the
//! globally p smallest by bound.

use crate::distance::{sliding_dot_products, znorm_euclidean_from_stats, DotProductRow};
use crate::error::{Error, Result};
use crate::mad::lower_bound::{lb_sort_key, pair_c0, AnchorTerms};
use crate::mad::profile::{check_profile_len, WindowStats};
use crate::mad::{exclusion_zone, is_trivial_match};
use crate::series::DataSeries;

/// One cached candidate of one anchor.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CandidateEntry {
    pub offset: u32,
    pub flat_head: bool,
    /// Rank-preserving pair scalar; see the lower_bound module.
    pub c0: f64,
    /// Running dot product at the state's current target length.
    pub qt: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct AnchorEntries {
    /// Sorted by (max(c0, 0) descending, offset ascending): ascending lower
    /// bound at every target length past lmin.
    pub entries: Vec<CandidateEntry>,
    /// True when `entries` holds every candidate admissible at lmin.
    pub complete: bool,
}

/// Per-anchor candidate caches for one series and length range, initialized
/// from true length-lmin computations, advanced one point at a time.
#[derive(Debug)]
pub struct LowerBoundState {
    pub lmin: usize,
    pub lmax: usize,
    pub p: usize,
    /// Current target length the running dot products correspond to.
    pub target: usize,
    pub(crate) anchors: Vec<AnchorEntries>,
}

/// Spec default for p: max(16, ceil(0.05 * profile length)).
pub fn default_partial_size(profile_len: usize) -> usize {
    16.max(profile_len.div_ceil(20))
}

/// Candidates retained beyond p so that growth of the exclusion zone and
/// loss of the tail can never leave fewer than p admissible entries while
/// candidates remain.
fn retention_cap(p: usize, lmin: usize, lmax: usize) -> usize {
    let zone_growth = exclusion_zone(lmax) - exclusion_zone(lmin);
    p + 2 * zone_growth + (lmax - lmin)
}

impl LowerBoundState {
    /// Builds the state with one pass of dot-product rows at lmin, calling
    /// `per_anchor` with each anchor's full distance profile row on the way
    /// (the caller extracts the matrix profile and lmin summaries from it).
    pub(crate) fn initialize(
        d: &DataSeries,
        lmin: usize,
        lmax: usize,
        p: usize,
        stats: &WindowStats,
        mut per_anchor: impl FnMut(usize, &DotProductRow),
    ) -> Result<Self> {
        check_profile_len(d, lmin)?;
        if lmax < lmin || lmax > d.len() / 2 {
            return Err(Error::InvalidLengthRange {
                lmin,
                lmax,
                series_len: d.len(),
            });
        }
        let cap = retention_cap(p, lmin, lmax);
        let n = d.len() - lmin + 1;
        let mut anchors = Vec::with_capacity(n);
        let mut row: Option<DotProductRow> = None;
        let mut scratch: Vec<CandidateEntry> = Vec::new();
        for anchor in 0..n {
            let next = sliding_dot_products(d, anchor, lmin, row.as_ref())?;
            per_anchor(anchor, &next);
            scratch.clear();
            for j in 0..next.num_offsets() {
                if is_trivial_match(anchor, j, lmin) {
                    continue;
                }
                let std_j = stats.stds[j];
                scratch.push(CandidateEntry {
                    offset: j as u32,
                    flat_head: std_j == 0.0,
                    c0: pair_c0(next.qt(j), lmin, stats.means[anchor], stats.means[j], std_j),
                    qt: next.qt(j),
                });
            }
            let complete = scratch.len() <= cap;
            if !complete {
                scratch.select_nth_unstable_by(cap - 1, |a, b| entry_order(a, b));
                scratch.truncate(cap);
            }
            scratch.sort_unstable_by(entry_order);
            anchors.push(AnchorEntries {
                entries: scratch.clone(),
                complete,
            });
            row = Some(next);
        }
        Ok(LowerBoundState {
            lmin,
            lmax,
            p,
            target: lmin,
            anchors,
        })
    }

    /// Advances every live running dot product by one trailing point.
    pub fn advance(&mut self, d: &DataSeries) -> Result<()> {
        let target = self.target + 1;
        if target > self.lmax {
            return Err(Error::InvalidLengthRange {
                lmin: self.lmin,
                lmax: target,
                series_len: d.len(),
            });
        }
        let values = d.values();
        let n = values.len();
        for (anchor, state) in self.anchors.iter_mut().enumerate() {
            if anchor + target > n {
                continue; // anchor has no window this long
            }
            let x_new = values[anchor + target - 1];
            for e in state.entries.iter_mut() {
                let j = e.offset as usize;
                if j + target <= n {
                    e.qt += x_new * values[j + target - 1];
                }
            }
        }
        self.target = target;
        Ok(())
    }

    pub fn num_anchors(&self) -> usize {
        self.anchors.len()
    }
}

#[inline]
fn entry_order(a: &CandidateEntry, b: &CandidateEntry) -> std::cmp::Ordering {
    lb_sort_key(b.c0)
        .total_cmp(&lb_sort_key(a.c0))
        .then(a.offset.cmp(&b.offset))
}

/// The p smallest-LB candidates of one anchor at the state's current
/// length, with exactly-updated true distances.
#[derive(Debug, Clone)]
pub struct PartialDistanceProfile {
    pub anchor: usize,
    pub target_len: usize,
    /// (offset, true distance) in ascending-bound order.
    pub candidates: Vec<(usize, f64)>,
    /// Largest lower bound within the partial set.
    pub max_lb: f64,
    /// Smallest lower bound within the partial set.
    pub min_lb: f64,
    /// Lower bounds of the selected candidates, aligned with `candidates`.
    pub bounds: Vec<f64>,
    /// All admissible candidates are present: a full profile.
    pub complete: bool,
}

impl PartialDistanceProfile {
    pub fn min_true(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for &(offset, dist) in &self.candidates {
            match best {
                Some((bo, bd)) if dist > bd || (dist == bd && offset >= bo) => {}
                _ => best = Some((offset, dist)),
            }
        }
        best
    }

    /// m-th smallest true distance in the partial set (1-based m).
    pub fn mth_true(&self, m: usize) -> Option<f64> {
        if self.candidates.len() < m {
            return None;
        }
        let mut dists: Vec<f64> = self.candidates.iter().map(|c| c.1).collect();
        dists.sort_by(f64::total_cmp);
        Some(dists[m - 1])
    }
}

/// Builds the partial profile of one anchor at the state's current target
/// length. Each selected candidate's true distance comes from its running
/// dot product and O(1) window statistics.
pub fn partial_profile(
    d: &DataSeries,
    state: &LowerBoundState,
    anchor: usize,
) -> Result<PartialDistanceProfile> {
    let target = state.target;
    if anchor + target > d.len() {
        return Err(Error::OutOfBounds {
            offset: anchor,
            length: target,
            series_len: d.len(),
        });
    }
    let terms = AnchorTerms::new(d, anchor, state.lmin, target)?;
    let (mean_i, std_i) = d.stats_unchecked(anchor, target);
    let entry_state = &state.anchors[anchor];
    let mut candidates = Vec::with_capacity(state.p);
    let mut bounds = Vec::with_capacity(state.p);
    let mut admissible_seen = 0usize;
    for e in &entry_state.entries {
        let j = e.offset as usize;
        if j + target > d.len() || is_trivial_match(anchor, j, target) {
            continue;
        }
        admissible_seen += 1;
        let (mean_j, std_j) = d.stats_unchecked(j, target);
        let dist = znorm_euclidean_from_stats(e.qt, target, mean_i, std_i, mean_j, std_j);
        candidates.push((j, dist));
        bounds.push(terms.eval(e.c0, e.flat_head));
        if admissible_seen == state.p {
            break;
        }
    }
    // Complete when the retained list is the whole lmin candidate set and
    // we exhausted it, or when every admissible candidate fit within p.
    let complete = entry_state.complete
        && (admissible_seen < state.p
            || admissible_seen == admissible_count(d.len(), anchor, target));
    let max_lb = bounds.last().copied().unwrap_or(f64::INFINITY);
    let min_lb = bounds.first().copied().unwrap_or(f64::INFINITY);
    Ok(PartialDistanceProfile {
        anchor,
        target_len: target,
        candidates,
        max_lb,
        min_lb,
        bounds,
        complete,
    })
}

/// Admissible candidates of an anchor at one length, in closed form.
pub(crate) fn admissible_count(series_len: usize, anchor: usize, target: usize) -> usize {
    let n = series_len - target + 1;
    let zone = exclusion_zone(target);
    let excluded = (anchor + zone).min(n - 1) - anchor.saturating_sub(zone) + 1;
    n - excluded
}

/// Motif validity (m = 1): the minimum true distance does not exceed the
/// largest lower bound in the set, so no unexplored candidate can beat it.
/// Discord validity: the m smallest true distances all stay within maxLB.
/// A complete profile is valid by construction.
pub fn validity_check(pp: &PartialDistanceProfile, m: usize) -> bool {
    if pp.complete {
        return true;
    }
    match pp.mth_true(m) {
        Some(dist) => dist <= pp.max_lb,
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mad::profile::WindowStats;
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

    fn make_state(d: &DataSeries, lmin: usize, lmax: usize, p: usize) -> LowerBoundState {
        let stats = WindowStats::new(d, lmin);
        LowerBoundState::initialize(d, lmin, lmax, p, &stats, |_, _| {}).unwrap()
    }

    fn true_distance(d: &DataSeries, i: usize, j: usize, len: usize) -> f64 {
        crate::distance::euclidean(&znormalize(d.window(i, len)), &znormalize(d.window(j, len)))
            .unwrap()
    }

    #[test]
    fn running_dot_products_stay_true() {
        let d = walk_series(400, 1);
        let mut state = make_state(&d, 16, 48, 8);
        for _ in 0..20 {
            state.advance(&d).unwrap();
        }
        let target = state.target;
        for anchor in [0usize, 50, 200] {
            for e in &state.anchors[anchor].entries {
                let j = e.offset as usize;
                if j + target > d.len() || anchor + target > d.len() {
                    continue;
                }
                let direct =
                    crate::distance::dot(d.window(anchor, target), d.window(j, target));
                assert!(
                    (e.qt - direct).abs() <= 1e-6 * direct.abs().max(1.0),
                    "qt drift at ({anchor},{j})"
                );
            }
        }
    }

    #[test]
    fn partial_true_distances_match_direct() {
        let d = walk_series(500, 2);
        let mut state = make_state(&d, 16, 48, 12);
        for _ in 0..13 {
            state.advance(&d).unwrap();
        }
        let target = state.target;
        for anchor in [3usize, 100, 350] {
            let pp = partial_profile(&d, &state, anchor).unwrap();
            assert_eq!(pp.target_len, target);
            for &(j, dist) in &pp.candidates {
                let direct = true_distance(&d, anchor, j, target);
                assert!(
                    (dist - direct).abs() < 1e-6,
                    "({anchor},{j}): {dist} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn full_partial_profile_is_valid_and_exact() {
        let d = walk_series(200, 3);
        // p larger than any profile: every partial set is complete.
        let state = make_state(&d, 16, 24, 1000);
        let pp = partial_profile(&d, &state, 10).unwrap();
        assert!(pp.complete);
        assert!(validity_check(&pp, 1));
        let (j, dist) = pp.min_true().unwrap();
        // Direct scan oracle.
        let mut best = (usize::MAX, f64::INFINITY);
        for cand in 0..=d.len() - 16 {
            if is_trivial_match(10, cand, 16) {
                continue;
            }
            let dd = true_distance(&d, 10, cand, 16);
            if dd < best.1 {
                best = (cand, dd);
            }
        }
        assert_eq!(j, best.0);
        assert!((dist - best.1).abs() < 1e-6);
    }

    #[test]
    fn planted_pair_profile_valid_with_zero_min() {
        let mut values = walk_series(600, 4).values().to_vec();
        let copy: Vec<f64> = values[50..114].to_vec();
        values.splice(400..464, copy);
        let d = DataSeries::new(SeriesId(0), values).unwrap();
        let mut state = make_state(&d, 32, 64, 8);
        for _ in 0..16 {
            state.advance(&d).unwrap();
        }
        let pp = partial_profile(&d, &state, 50).unwrap();
        assert!(validity_check(&pp, 1), "planted profile should be valid");
        let (j, dist) = pp.min_true().unwrap();
        assert_eq!(j, 400);
        assert!(dist < 1e-6, "min {dist}");
    }

    #[test]
    fn selected_candidates_are_smallest_bounds() {
        let d = walk_series(800, 5);
        let lmin = 32;
        let mut state = make_state(&d, lmin, 64, 10);
        for _ in 0..10 {
            state.advance(&d).unwrap();
        }
        let target = state.target;
        let anchor = 300;
        let pp = partial_profile(&d, &state, anchor).unwrap();
        // Oracle: evaluate the bound for every admissible candidate.
        let terms = AnchorTerms::new(&d, anchor, lmin, target).unwrap();
        let stats = WindowStats::new(&d, lmin);
        let mut all: Vec<(usize, f64)> = (0..=d.len() - target)
            .filter(|&j| !is_trivial_match(anchor, j, target))
            .map(|j| {
                let qt = crate::distance::dot(d.window(anchor, lmin), d.window(j, lmin));
                let c0 = pair_c0(qt, lmin, stats.means[anchor], stats.means[j], stats.stds[j]);
                (j, terms.eval(c0, stats.stds[j] == 0.0))
            })
            .collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let expected: Vec<usize> = all.iter().take(10).map(|&(j, _)| j).collect();
        let got: Vec<usize> = pp.candidates.iter().map(|&(j, _)| j).collect();
        assert_eq!(got, expected);
        // maxLB is the largest bound in the set; everything not selected
        // has a bound at least that large.
        assert!((pp.max_lb - all[9].1).abs() < 1e-12);
        for &(_, b) in all.iter().skip(10) {
            assert!(b >= pp.max_lb - 1e-12);
        }
    }

    #[test]
    fn validity_confirmed_by_brute_force() {
        let d = walk_series(900, 6);
        let lmin = 24;
        let mut state = make_state(&d, lmin, 48, 16);
        for _ in 0..12 {
            state.advance(&d).unwrap();
        }
        let target = state.target;
        let mut checked = 0;
        for anchor in (0..=d.len() - target).step_by(7) {
            let pp = partial_profile(&d, &state, anchor).unwrap();
            for m in 1..=3usize {
                if !validity_check(&pp, m) {
                    continue;
                }
                // Brute force m-th NN.
                let mut dists: Vec<f64> = (0..=d.len() - target)
                    .filter(|&j| !is_trivial_match(anchor, j, target))
                    .map(|j| true_distance(&d, anchor, j, target))
                    .collect();
                dists.sort_by(f64::total_cmp);
                if dists.len() < m {
                    continue;
                }
                let claimed = pp.mth_true(m).unwrap();
                assert!(
                    (claimed - dists[m - 1]).abs() < 1e-6,
                    "anchor {anchor} m {m}: {claimed} vs {}",
                    dists[m - 1]
                );
                checked += 1;
            }
        }
        assert!(checked > 50, "only {checked} valid profiles checked");
    }
}
