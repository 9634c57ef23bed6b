//! Exact variable-length motif and discord extraction.
//!
//! Per length, each anchor contributes a profile summary: either complete
//! (full distance profile known) or partial (p smallest-bound candidates
//! with true distances, plus its bound extremes). Extraction certifies the
//! result against the bounds of the non-valid profiles and recomputes, in
//! full, exactly the profiles that could still hide a better answer,
//! batch-then-re-decide, until the result is certified.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::sliding_dot_products;
use crate::error::{Error, Result};

use crate::mad::partial::{
    default_partial_size, partial_profile, LowerBoundState,
    PartialDistanceProfile,
};
use crate::mad::profile::{check_profile_len, distances_from_row, MatrixProfile, WindowStats};
use crate::mad::exclusion_zone;
use crate::series::DataSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotifEntry {
    pub length: usize,
    pub offset_a: usize,
    pub offset_b: usize,
    pub distance: f64,
    /// distance / sqrt(length), for comparing across lengths.
    pub normalized_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscordEntry {
    pub length: usize,
    /// Which nearest neighbor the distance refers to (1-based).
    pub m: usize,
    /// Rank within the Top-a list (1-based).
    pub rank: usize,
    pub offset: usize,
    pub distance: f64,
    pub normalized_distance: f64,
}

/// The (length, m) grid of ranked discords.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DiscordGrid {
    pub entries: Vec<DiscordEntry>,
}

impl DiscordGrid {
    pub fn slice(&self, length: usize, m: usize) -> Vec<&DiscordEntry> {
        self.entries
            .iter()
            .filter(|e| e.length == length && e.m == m)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct DiscoveryCounters {
    /// Full distance profiles computed: the initial sweep plus recomputes.
    pub full_profile_computations: u64,
    /// Recomputation events alone.
    pub profiles_recomputed: u64,
    pub true_distance_computations: u64,
    pub lb_evaluations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscoverConfig {
    pub lmin: usize,
    pub lmax: usize,
    /// Discord ranks to report (Top-a).
    pub top_a: usize,
    /// Neighbor depth for discords (m in 1..=b).
    pub neighbors_b: usize,
    /// Partial profile size; defaults to max(16, 5% of the profile length).
    pub p: Option<usize>,
    /// Drop flat (zero-std) anchors from discord ranking.
    pub exclude_flat: bool,
}

impl DiscoverConfig {
    pub fn new(lmin: usize, lmax: usize) -> Self {
        DiscoverConfig {
            lmin,
            lmax,
            top_a: 1,
            neighbors_b: 1,
            p: None,
            exclude_flat: false,
        }
    }

    pub fn resolved_p(&self, series_len: usize) -> usize {
        self.p
            .unwrap_or_else(|| default_partial_size(series_len - self.lmin + 1))
            .max(self.neighbors_b)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscoverOutput {
    pub motifs: Vec<MotifEntry>,
    pub discords: DiscordGrid,
    pub counters: DiscoveryCounters,
    /// Matrix profile at lmin, the base of the incremental computation.
    pub base_profile_len: usize,
}

/// What extraction needs to know about one anchor's profile at one length.
#[derive(Debug, Clone)]
pub struct ProfileSummary {
    pub anchor: usize,
    /// Smallest computed true distance and its offset (offset usize::MAX
    /// when the profile is empty).
    pub min_dist: f64,
    pub min_offset: usize,
    /// The up-to-b smallest computed true distances, ascending.
    pub smallest: Vec<f64>,
    pub max_lb: f64,
    pub min_lb: f64,
    pub complete: bool,
    /// Anchor window has zero std at this length.
    pub flat: bool,
}

impl ProfileSummary {
    /// Certified for m: a complete profile, or the m smallest computed true
    /// distances all within the largest lower bound of the partial set.
    pub fn valid_for(&self, m: usize) -> bool {
        if self.complete {
            return true;
        }
        self.smallest.get(m - 1).is_some_and(|&d| d <= self.max_lb)
    }

    fn from_partial(pp: &PartialDistanceProfile, b: usize, flat: bool) -> Self {
        let (min_offset, min_dist) = pp.min_true().unwrap_or((usize::MAX, f64::INFINITY));
        let mut smallest: Vec<f64> = pp.candidates.iter().map(|c| c.1).collect();
        smallest.sort_by(f64::total_cmp);
        smallest.truncate(b);
        ProfileSummary {
            anchor: pp.anchor,
            min_dist,
            min_offset,
            smallest,
            max_lb: pp.max_lb,
            min_lb: pp.min_lb,
            complete: pp.complete,
            flat,
        }
    }
}

/// Recomputes one anchor's profile in full at `len`.
fn recompute_summary(
    d: &DataSeries,
    stats: &WindowStats,
    anchor: usize,
    len: usize,
    b: usize,
    counters: &mut DiscoveryCounters,
) -> Result<ProfileSummary> {
    let row = sliding_dot_products(d, anchor, len, None)?;
    let mut min_dist = f64::INFINITY;
    let mut min_offset = usize::MAX;
    let mut smallest: Vec<f64> = Vec::with_capacity(b + 1);
    let mut count = 0u64;
    distances_from_row(&row, stats, anchor, len, |j, dist| {
        count += 1;
        if dist < min_dist {
            min_dist = dist;
            min_offset = j;
        }
        let pos = smallest.partition_point(|&s| s <= dist);
        if pos < b {
            smallest.insert(pos, dist);
            smallest.truncate(b);
        }
    });
    counters.full_profile_computations += 1;
    counters.profiles_recomputed += 1;
    counters.true_distance_computations += count;
    Ok(ProfileSummary {
        anchor,
        min_dist,
        min_offset,
        smallest,
        max_lb: f64::INFINITY,
        min_lb: f64::INFINITY,
        complete: true,
        flat: stats.stds[anchor] == 0.0,
    })
}

/// Exact motif at one length from the profile summaries. The global
/// minimum over valid profiles is certified when it beats the smallest
/// lower bound of every non-valid profile; otherwise the profiles that
/// could hide a smaller distance are recomputed in full and the decision
/// repeats.
pub fn exact_motif_at(
    d: &DataSeries,
    len: usize,
    summaries: &mut [ProfileSummary],
    b: usize,
    counters: &mut DiscoveryCounters,
) -> Result<Option<MotifEntry>> {
    let stats = WindowStats::new(d, len);
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for s in summaries.iter() {
            if !s.valid_for(1) || s.min_offset == usize::MAX {
                continue;
            }
            let (a, bb) = (s.anchor.min(s.min_offset), s.anchor.max(s.min_offset));
            let key = (s.min_dist, a, bb);
            if best.is_none()
                || key.0 < best.unwrap().0
                || (key.0 == best.unwrap().0 && (key.1, key.2) < (best.unwrap().1, best.unwrap().2))
            {
                best = Some(key);
            }
        }
        let min_lb_abs = summaries
            .iter()
            .filter(|s| !s.valid_for(1))
            .map(|s| s.min_lb)
            .fold(f64::INFINITY, f64::min);
        match best {
            Some((dist, a, bb)) if dist < min_lb_abs => {
                return Ok(Some(MotifEntry {
                    length: len,
                    offset_a: a,
                    offset_b: bb,
                    distance: dist,
                    normalized_distance: dist / (len as f64).sqrt(),
                }));
            }
            None if min_lb_abs == f64::INFINITY => return Ok(None),
            _ => {}
        }
        let threshold = best.map(|(dist, _, _)| dist).unwrap_or(f64::INFINITY);
        let mut targets: Vec<usize> = (0..summaries.len())
            .filter(|&i| !summaries[i].valid_for(1) && summaries[i].max_lb < threshold)
            .collect();
        if targets.is_empty() {
            // Certification blocked by bounds tied with the best distance.
            targets = (0..summaries.len())
                .filter(|&i| !summaries[i].valid_for(1) && summaries[i].min_lb <= threshold)
                .collect();
        }
        debug_assert!(!targets.is_empty());
        for idx in targets {
            summaries[idx] =
                recompute_summary(d, &stats, summaries[idx].anchor, len, b, counters)?;
        }
    }
}

/// Exact Top-a m-th discords at one length, for every m in 1..=b.
///
/// A non-valid profile's true m-th neighbor distance is bounded above by
/// its m-th smallest computed true distance, so any non-valid profile whose
/// upper bound reaches the provisional a-th best discord is recomputed in
/// full before the ranking is final.
pub fn exact_discords_at(
    d: &DataSeries,
    len: usize,
    summaries: &mut [ProfileSummary],
    top_a: usize,
    b: usize,
    exclude_flat: bool,
    counters: &mut DiscoveryCounters,
) -> Result<Vec<DiscordEntry>> {
    if top_a < 1 || b < 1 {
        return Err(Error::ZeroParameter { what: "a and b" });
    }
    let stats = WindowStats::new(d, len);
    let zone = exclusion_zone(len);
    let mut out = Vec::new();
    for m in 1..=b {
        loop {
            let ranked = rank_discords(summaries, m, top_a, zone, exclude_flat);
            let threshold = if ranked.len() == top_a {
                ranked[top_a - 1].1
            } else {
                f64::NEG_INFINITY
            };
            let refine: Vec<usize> = (0..summaries.len())
                .filter(|&i| {
                    let s = &summaries[i];
                    if s.complete || s.valid_for(m) {
                        return false;
                    }
                    if exclude_flat && s.flat {
                        return false;
                    }
                    // Upper bound on the true m-th NN distance.
                    s.smallest.get(m - 1).is_some_and(|&t| t >= threshold)
                })
                .collect();
            if refine.is_empty() {
                for (rank, &(anchor, dist)) in ranked.iter().enumerate() {
                    out.push(DiscordEntry {
                        length: len,
                        m,
                        rank: rank + 1,
                        offset: anchor,
                        distance: dist,
                        normalized_distance: dist / (len as f64).sqrt(),
                    });
                }
                break;
            }
            for idx in refine {
                summaries[idx] =
                    recompute_summary(d, &stats, summaries[idx].anchor, len, b, counters)?;
            }
        }
    }
    Ok(out)
}

/// Ranks certified anchors by m-th neighbor distance descending, greedily
/// keeping pairwise non-trivial offsets, up to `top_a`.
fn rank_discords(
    summaries: &[ProfileSummary],
    m: usize,
    top_a: usize,
    zone: usize,
    exclude_flat: bool,
) -> Vec<(usize, f64)> {
    let mut certified: Vec<(usize, f64)> = summaries
        .iter()
        .filter(|s| s.valid_for(m) && !(exclude_flat && s.flat))
        .filter_map(|s| s.smallest.get(m - 1).map(|&dist| (s.anchor, dist)))
        .collect();
    certified.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut kept: Vec<(usize, f64)> = Vec::with_capacity(top_a);
    for (anchor, dist) in certified {
        if kept.len() == top_a {
            break;
        }
        if kept.iter().all(|&(o, _)| o.abs_diff(anchor) > zone) {
            kept.push((anchor, dist));
        }
    }
    kept
}

/// Variable-length discovery: full matrix profile at lmin, then partial
/// profiles driven by the length-extensible lower bound for every longer
/// length, with per-length exact extraction.
pub fn discover_range(d: &DataSeries, config: &DiscoverConfig) -> Result<DiscoverOutput> {
    check_profile_len(d, config.lmin)?;
    if config.lmax < config.lmin || config.lmax > d.len() / 2 {
        return Err(Error::InvalidLengthRange {
            lmin: config.lmin,
            lmax: config.lmax,
            series_len: d.len(),
        });
    }
    if config.top_a < 1 || config.neighbors_b < 1 {
        return Err(Error::ZeroParameter { what: "a and b" });
    }
    let p = config.resolved_p(d.len());
    if p < config.neighbors_b {
        return Err(Error::PartialTooSmall {
            p,
            m: config.neighbors_b,
        });
    }
    let b = config.neighbors_b;
    let mut counters = DiscoveryCounters::default();

    // Initial sweep at lmin: distance profiles in full, folded into both
    // the matrix profile and complete summaries, while the lower-bound
    // state caches candidates.
    let stats_lmin = WindowStats::new(d, config.lmin);
    let mut mp_dist = Vec::new();
    let mut mp_nn = Vec::new();
    let mut summaries: Vec<ProfileSummary> = Vec::new();
    let mut state = LowerBoundState::initialize(
        d,
        config.lmin,
        config.lmax,
        p,
        &stats_lmin,
        |anchor, row| {
            let mut min_dist = f64::INFINITY;
            let mut min_offset = usize::MAX;
            let mut smallest: Vec<f64> = Vec::with_capacity(b + 1);
            let mut count = 0u64;
            distances_from_row(row, &stats_lmin, anchor, config.lmin, |j, dist| {
                count += 1;
                if dist < min_dist {
                    min_dist = dist;
                    min_offset = j;
                }
                let pos = smallest.partition_point(|&s| s <= dist);
                if pos < b {
                    smallest.insert(pos, dist);
                    smallest.truncate(b);
                }
            });
            counters.full_profile_computations += 1;
            counters.true_distance_computations += count;
            mp_dist.push(min_dist);
            mp_nn.push(min_offset);
            summaries.push(ProfileSummary {
                anchor,
                min_dist,
                min_offset,
                smallest,
                max_lb: f64::INFINITY,
                min_lb: f64::INFINITY,
                complete: true,
                flat: stats_lmin.stds[anchor] == 0.0,
            });
        },
    )?;
    let base_profile = MatrixProfile {
        len: config.lmin,
        distances: mp_dist,
        neighbors: mp_nn,
    };

    let mut motifs = Vec::new();
    let mut discords = DiscordGrid::default();
    if let Some(entry) = exact_motif_at(d, config.lmin, &mut summaries, b, &mut counters)? {
        motifs.push(entry);
    }
    discords.entries.extend(exact_discords_at(
        d,
        config.lmin,
        &mut summaries,
        config.top_a,
        b,
        config.exclude_flat,
        &mut counters,
    )?);

    for target in config.lmin + 1..=config.lmax {
        state.advance(d)?;
        let alive = d.len() - target + 1;
        let stats_target = WindowStats::new(d, target);
        let partials: Vec<PartialDistanceProfile> = (0..alive)
            .into_par_iter()
            .map(|anchor| partial_profile(d, &state, anchor))
            .collect::<Result<Vec<_>>>()?;
        let mut level: Vec<ProfileSummary> = partials
            .iter()
            .map(|pp| {
                ProfileSummary::from_partial(pp, b, stats_target.stds[pp.anchor] == 0.0)
            })
            .collect();
        for pp in &partials {
            counters.true_distance_computations += pp.candidates.len() as u64;
            counters.lb_evaluations += pp.bounds.len() as u64;
        }
        if let Some(entry) = exact_motif_at(d, target, &mut level, b, &mut counters)? {
            motifs.push(entry);
        }
        discords.entries.extend(exact_discords_at(
            d,
            target,
            &mut level,
            config.top_a,
            b,
            config.exclude_flat,
            &mut counters,
        )?);
    }
    Ok(DiscoverOutput {
        motifs,
        discords,
        counters,
        base_profile_len: base_profile.len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::SeriesId;
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

    #[test]
    fn all_valid_profiles_mean_no_recomputation() {
        let d = walk_series(800, 1);
        let config = DiscoverConfig {
            lmin: 32,
            lmax: 32,
            top_a: 2,
            neighbors_b: 2,
            p: None,
            exclude_flat: false,
        };
        let out = discover_range(&d, &config).unwrap();
        // The degenerate range is served entirely by the initial full
        // sweep: complete profiles, nothing to recompute.
        assert_eq!(out.counters.profiles_recomputed, 0);
        assert_eq!(
            out.counters.full_profile_computations,
            (d.len() - 32 + 1) as u64
        );
    }

    #[test]
    fn degenerate_range_matches_matrix_profile() {
        let d = walk_series(700, 2);
        let len = 28;
        let config = DiscoverConfig::new(len, len);
        let out = discover_range(&d, &config).unwrap();
        let mp = crate::mad::matrix_profile(&d, len).unwrap();
        let (a, b, dist) = mp.motif_pair();
        assert_eq!(out.motifs.len(), 1);
        assert_eq!((out.motifs[0].offset_a, out.motifs[0].offset_b), (a, b));
        assert!((out.motifs[0].distance - dist).abs() < 1e-9);
    }

    #[test]
    fn planted_pair_found_at_every_length() {
        let mut values = walk_series(3000, 3).values().to_vec();
        let pattern: Vec<f64> = walk_series(120, 99).values().to_vec();
        let base_a = values[300];
        let base_b = values[1800];
        for t in 0..120 {
            values[300 + t] = base_a + pattern[t] - pattern[0];
            values[1800 + t] = base_b + pattern[t] - pattern[0];
        }
        let d = DataSeries::new(SeriesId(0), values).unwrap();
        let config = DiscoverConfig {
            lmin: 48,
            lmax: 64,
            top_a: 1,
            neighbors_b: 1,
            p: Some(16),
            exclude_flat: false,
        };
        let out = discover_range(&d, &config).unwrap();
        assert_eq!(out.motifs.len(), 17);
        for entry in &out.motifs {
            assert!(entry.distance < 1e-9, "len {}: {}", entry.length, entry.distance);
            assert_eq!(entry.offset_b - entry.offset_a, 1500);
            assert!(
                entry.offset_a >= 300 && entry.offset_a + entry.length <= 420,
                "len {}: offset {}",
                entry.length,
                entry.offset_a
            );
        }
    }

    #[test]
    fn counters_beat_naive_recomputation() {
        let d = walk_series(2000, 4);
        let config = DiscoverConfig {
            lmin: 64,
            lmax: 80,
            top_a: 1,
            neighbors_b: 1,
            p: Some(24),
            exclude_flat: false,
        };
        let out = discover_range(&d, &config).unwrap();
        let lengths = (80 - 64 + 1) as u64;
        let anchors = (d.len() - 64 + 1) as u64;
        assert!(
            out.counters.full_profile_computations < anchors * lengths,
            "{} full profiles vs naive {}",
            out.counters.full_profile_computations,
            anchors * lengths
        );
    }
}
