//! Brute-force ground truth: sequential-scan k-NN and quadratic per-length
//! motif / discord enumeration. These exist to be slow and right; they
//! share the engine's distance kernels, tie rules and exclusion rules, so
//! a diff against them tests algorithms rather than conventions.

use rayon::prelude::*;

use crate::distance::{
    dot, dtw_unchecked, euclidean_unchecked, sliding_dot_products, znorm_euclidean_from_stats,
    DotProductRow,
};
use crate::error::{Error, Result};
use crate::mad::discover::{DiscordEntry, MotifEntry};

use crate::mad::profile::{check_profile_len, distances_from_row, WindowStats};
use crate::series::{znormalize, znormalize_into, DataSeries, SeriesCollection, SubsequenceRef};
use crate::ulisse::{hit_order, Hit, Measure, Mode};

/// Result set in the same shape as engine outputs, plus audit counters.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub hits: Vec<Hit>,
    pub distance_computations: u64,
    pub wall_seconds: f64,
}

/// Exhaustive k-NN over every admissible (series, offset): no pruning, no
/// index, running statistics for the z-normalized mode.
pub fn scan_knn(
    collection: &SeriesCollection,
    query: &[f64],
    k: usize,
    measure: Measure,
    mode: Mode,
) -> Result<OracleReport> {
    if k == 0 {
        return Err(Error::ZeroParameter { what: "k" });
    }
    let len = query.len();
    if len == 0 {
        return Err(Error::EmptySeries);
    }
    let start = std::time::Instant::now();
    let (q, q_std) = match mode {
        Mode::Raw => (query.to_vec(), f64::NAN),
        Mode::ZNormalized => {
            let z = znormalize(query);
            let flat = z.iter().all(|&v| v == 0.0);
            let std = if flat { 0.0 } else { 1.0 };
            (z, std)
        }
    };
    let mut hits: Vec<Hit> = Vec::new();
    let mut computed = 0u64;
    for d in collection.iter() {
        if d.len() < len {
            continue;
        }
        let offsets = 0..=d.len() - len;
        let distances: Vec<f64> = offsets
            .clone()
            .collect::<Vec<_>>()
            .par_iter()
            .map_init(Vec::new, |scratch, &offset| {
                candidate_distance(d, offset, &q, q_std, measure, mode, scratch)
            })
            .collect();
        computed += distances.len() as u64;
        for (offset, distance) in offsets.zip(distances) {
            hits.push(Hit {
                subsequence: SubsequenceRef {
                    series: d.id(),
                    offset,
                    length: len,
                },
                distance,
            });
        }
    }
    hits.sort_by(hit_order);
    hits.truncate(k);
    Ok(OracleReport {
        hits,
        distance_computations: computed,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Same per-candidate composition as the index's leaf visits, so matching
/// answers are bit-identical.
fn candidate_distance(
    d: &DataSeries,
    offset: usize,
    q: &[f64],
    q_std: f64,
    measure: Measure,
    mode: Mode,
    scratch: &mut Vec<f64>,
) -> f64 {
    let len = q.len();
    let window = d.window(offset, len);
    match (mode, measure) {
        (Mode::Raw, Measure::Euclidean) => euclidean_unchecked(q, window),
        (Mode::ZNormalized, Measure::Euclidean) => {
            let (mean_j, std_j) = d.stats_unchecked(offset, len);
            znorm_euclidean_from_stats(dot(q, window), len, 0.0, q_std, mean_j, std_j)
        }
        (Mode::Raw, Measure::Dtw(band)) => dtw_unchecked(q, window, band.radius),
        (Mode::ZNormalized, Measure::Dtw(band)) => {
            let (mean_j, std_j) = d.stats_unchecked(offset, len);
            znormalize_into(window, mean_j, std_j, scratch);
            dtw_unchecked(q, scratch, band.radius)
        }
    }
}

/// Full distance profile of one anchor by direct dot products.
fn profile_row(d: &DataSeries, anchor: usize, len: usize) -> Result<DotProductRow> {
    sliding_dot_products(d, anchor, len, None)
}

/// Exact motif pair at one length by full enumeration.
pub fn brute_motif(d: &DataSeries, len: usize) -> Result<MotifEntry> {
    check_profile_len(d, len)?;
    let stats = WindowStats::new(d, len);
    let n = d.len() - len + 1;
    let mut best: Option<(f64, usize, usize)> = None;
    let mut row: Option<DotProductRow> = None;
    for anchor in 0..n {
        let next = sliding_dot_products(d, anchor, len, row.as_ref())?;
        distances_from_row(&next, &stats, anchor, len, |j, dist| {
            let (a, b) = (anchor.min(j), anchor.max(j));
            let key = (dist, a, b);
            if best.is_none()
                || key.0 < best.unwrap().0
                || (key.0 == best.unwrap().0 && (key.1, key.2) < (best.unwrap().1, best.unwrap().2))
            {
                best = Some(key);
            }
        });
        row = Some(next);
    }
    let (distance, offset_a, offset_b) = best.ok_or(Error::LengthTooLargeForProfile {
        len,
        series_len: d.len(),
    })?;
    Ok(MotifEntry {
        length: len,
        offset_a,
        offset_b,
        distance,
        normalized_distance: distance / (len as f64).sqrt(),
    })
}

/// Exact Top-a m-th discords at one length: per anchor the full sorted
/// non-trivial distance list, the m-th entry read off, ranked descending
/// with the shared non-overlap rule.
pub fn brute_discords(
    d: &DataSeries,
    len: usize,
    top_a: usize,
    b: usize,
    exclude_flat: bool,
) -> Result<(Vec<DiscordEntry>, u64)> {
    check_profile_len(d, len)?;
    if top_a < 1 || b < 1 {
        return Err(Error::ZeroParameter { what: "a and b" });
    }
    let stats = WindowStats::new(d, len);
    let n = d.len() - len + 1;
    let mut per_anchor_smallest: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut computed = 0u64;
    let mut row: Option<DotProductRow> = None;
    for anchor in 0..n {
        let next = sliding_dot_products(d, anchor, len, row.as_ref())?;
        let mut smallest: Vec<f64> = Vec::with_capacity(b + 1);
        distances_from_row(&next, &stats, anchor, len, |_, dist| {
            computed += 1;
            let pos = smallest.partition_point(|&s| s <= dist);
            if pos < b {
                smallest.insert(pos, dist);
                smallest.truncate(b);
            }
        });
        per_anchor_smallest.push(smallest);
        row = Some(next);
    }
    let zone = crate::mad::exclusion_zone(len);
    let mut out = Vec::new();
    for m in 1..=b {
        let mut ranked: Vec<(usize, f64)> = per_anchor_smallest
            .iter()
            .enumerate()
            .filter(|(anchor, smallest)| {
                smallest.len() >= m && !(exclude_flat && stats.stds[*anchor] == 0.0)
            })
            .map(|(anchor, smallest)| (anchor, smallest[m - 1]))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut kept: Vec<(usize, f64)> = Vec::with_capacity(top_a);
        for (anchor, dist) in ranked {
            if kept.len() == top_a {
                break;
            }
            if kept.iter().all(|&(o, _)| o.abs_diff(anchor) > zone) {
                kept.push((anchor, dist));
            }
        }
        for (rank, (offset, distance)) in kept.into_iter().enumerate() {
            out.push(DiscordEntry {
                length: len,
                m,
                rank: rank + 1,
                offset,
                distance,
                normalized_distance: distance / (len as f64).sqrt(),
            });
        }
    }
    Ok((out, computed))
}

/// Full per-anchor nearest-neighbor distances by enumeration, for diffing
/// against the matrix profile.
pub fn brute_matrix_profile(d: &DataSeries, len: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    check_profile_len(d, len)?;
    let stats = WindowStats::new(d, len);
    let n = d.len() - len + 1;
    let rows: Vec<(f64, usize)> = (0..n)
        .into_par_iter()
        .map(|anchor| {
            let row = profile_row(d, anchor, len).expect("anchor in range");
            let mut best = f64::INFINITY;
            let mut best_j = usize::MAX;
            distances_from_row(&row, &stats, anchor, len, |j, dist| {
                if dist < best {
                    best = dist;
                    best_j = j;
                }
            });
            (best, best_j)
        })
        .collect();
    Ok(rows.into_iter().unzip())
}
