//! Approximate and exact k-NN subsequence search over the envelope tree.
//!
//! Both searches walk nodes best-first by `mindist`. The approximate search
//! stops the first time a completed leaf visit improves none of the k
//! best-so-far answers; the exact search instead visits or prunes every
//! node, pruning a subtree only when its `mindist` exceeds the current k-th
//! best distance, which guarantees exact results.

use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::distance::{
    dtw_query_envelope, dtw_unchecked, euclidean_unchecked, lb_keogh, DtwBand, QueryEnvelope,
};
use crate::error::{Error, Result};
use crate::series::{paa, znormalize, znormalize_into, DataSeries, SeriesCollection, SubsequenceRef};
use crate::ulisse::tree::{LeafNode, Node, NodeEnvelope};
use crate::ulisse::{Mode, UlisseIndex};

/// Distance measure for a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    Euclidean,
    Dtw(DtwBand),
}

impl Measure {
    pub fn kind(&self) -> MeasureKind {
        match self {
            Measure::Euclidean => MeasureKind::Euclidean,
            Measure::Dtw(_) => MeasureKind::Dtw,
        }
    }
}

/// Serializable tag of the measure, with the resolved band radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Euclidean,
    Dtw,
}

/// One ranked answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    #[serde(flatten)]
    pub subsequence: SubsequenceRef,
    pub distance: f64,
}

/// Ties are broken by (series id, offset) ascending everywhere.
#[inline]
pub fn hit_order(a: &Hit, b: &Hit) -> std::cmp::Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then_with(|| a.subsequence.series.cmp(&b.subsequence.series))
        .then_with(|| a.subsequence.offset.cmp(&b.subsequence.offset))
}

/// Search instrumentation. `nodes_pruned` counts whole pruned subtrees, so
/// for an exhaustive exact search `nodes_visited + nodes_pruned` equals
/// `total_nodes`.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct SearchCounters {
    pub nodes_visited: u64,
    pub nodes_pruned: u64,
    pub total_nodes: u64,
    pub leaf_visits: u64,
    pub improving_leaf_visits: u64,
    pub true_distances: u64,
    pub lb_skips: u64,
    pub exhausted: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryResult {
    pub hits: Vec<Hit>,
    pub query_len: usize,
    pub k: usize,
    pub mode: Mode,
    pub measure: MeasureKind,
    pub band_radius: Option<usize>,
    pub counters: SearchCounters,
}

/// Query state shared across node evaluations: mode-consistent values, the
/// PAA bounds used by mindist, and the DTW envelope when applicable.
pub struct PreparedQuery {
    pub values: Vec<f64>,
    /// Stats of the prepared values (0/1 for a z-normalized non-flat query,
    /// 0/0 for a flat one).
    mean: f64,
    std: f64,
    paa_lo: Vec<f64>,
    paa_hi: Vec<f64>,
    keogh: Option<QueryEnvelope>,
    radius: Option<usize>,
    w_prime: usize,
    segment_length: usize,
    mode: Mode,
}

impl PreparedQuery {
    pub fn new(index: &UlisseIndex, query: &[f64], measure: Measure) -> Result<Self> {
        let params = index.params();
        let len = query.len();
        if len < params.lmin || len > params.lmax {
            return Err(Error::QueryLengthOutOfRange {
                len,
                lmin: params.lmin,
                lmax: params.lmax,
            });
        }
        if let Some(position) = query.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { position });
        }
        let (values, mean, std) = match params.mode {
            Mode::Raw => {
                let n = len as f64;
                let mean = query.iter().sum::<f64>() / n;
                let var =
                    query.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                (query.to_vec(), mean, var.sqrt())
            }
            Mode::ZNormalized => {
                let z = znormalize(query);
                let flat = z.iter().all(|&v| v == 0.0);
                (z, 0.0, if flat { 0.0 } else { 1.0 })
            }
        };
        let w_prime = len / params.segment_length;
        let (paa_lo, paa_hi, keogh, radius) = match measure {
            Measure::Euclidean => {
                let coefs = if w_prime > 0 {
                    paa(&values, params.segment_length)?.coefficients
                } else {
                    Vec::new()
                };
                (coefs.clone(), coefs, None, None)
            }
            Measure::Dtw(band) => {
                if band.radius >= len {
                    return Err(Error::InvalidBand {
                        radius: band.radius,
                        len,
                    });
                }
                let env = dtw_query_envelope(&values, band);
                let lo = if w_prime > 0 {
                    paa(&env.lower, params.segment_length)?.coefficients
                } else {
                    Vec::new()
                };
                let hi = if w_prime > 0 {
                    paa(&env.upper, params.segment_length)?.coefficients
                } else {
                    Vec::new()
                };
                (lo, hi, Some(env), Some(band.radius))
            }
        };
        Ok(PreparedQuery {
            values,
            mean,
            std,
            paa_lo,
            paa_hi,
            keogh,
            radius,
            w_prime,
            segment_length: params.segment_length,
            mode: params.mode,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Lower bound on the distance from this query to anything represented
    /// by an envelope with the given per-segment symbol bounds.
    pub fn mindist_symbols(&self, index: &UlisseIndex, lo: &[u16], hi: &[u16]) -> f64 {
        if lo.len() < self.w_prime {
            // Nothing under this envelope has a subsequence this long.
            return f64::INFINITY;
        }
        let bp = index.breakpoints();
        let mut acc = 0.0;
        for k in 0..self.w_prime {
            let region_lo = bp.region_lower(lo[k]);
            let region_hi = bp.region_upper(hi[k]);
            let gap = (region_lo - self.paa_hi[k]).max(self.paa_lo[k] - region_hi);
            if gap > 0.0 {
                acc += gap * gap;
            }
        }
        (self.segment_length as f64 * acc).sqrt()
    }

    fn mindist_node(&self, index: &UlisseIndex, env: &NodeEnvelope) -> f64 {
        self.mindist_symbols(index, &env.lo, &env.hi)
    }

    /// True distance to the candidate window, or None when the DTW envelope
    /// bound proves the candidate cannot beat `skip_above` (strictly).
    fn candidate_distance(
        &self,
        d: &DataSeries,
        offset: usize,
        skip_above: f64,
        scratch: &mut Vec<f64>,
        counters: &mut SearchCounters,
    ) -> Option<f64> {
        let len = self.values.len();
        let window = d.window(offset, len);
        match (self.mode, self.radius) {
            (Mode::Raw, None) => {
                counters.true_distances += 1;
                Some(euclidean_unchecked(&self.values, window))
            }
            (Mode::ZNormalized, None) => {
                counters.true_distances += 1;
                let (mean_j, std_j) = d.stats_unchecked(offset, len);
                let qt = crate::distance::dot(&self.values, window);
                Some(crate::distance::znorm_euclidean_from_stats(
                    qt, len, self.mean, self.std, mean_j, std_j,
                ))
            }
            (mode, Some(radius)) => {
                let candidate: &[f64] = match mode {
                    Mode::Raw => window,
                    Mode::ZNormalized => {
                        let (mean_j, std_j) = d.stats_unchecked(offset, len);
                        znormalize_into(window, mean_j, std_j, scratch);
                        scratch
                    }
                };
                let env = self.keogh.as_ref().expect("dtw query has envelope");
                if lb_keogh(env, candidate) > skip_above {
                    counters.lb_skips += 1;
                    return None;
                }
                counters.true_distances += 1;
                Some(dtw_unchecked(&self.values, candidate, radius))
            }
        }
    }
}

/// Fixed-size best-so-far set ordered by the shared tie rule.
struct BestSoFar {
    k: usize,
    heap: BinaryHeap<OrderedHit>,
}

struct OrderedHit(Hit);

impl PartialEq for OrderedHit {
    fn eq(&self, other: &Self) -> bool {
        hit_order(&self.0, &other.0) == std::cmp::Ordering::Equal
    }
}
impl Eq for OrderedHit {}
impl PartialOrd for OrderedHit {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrderedHit {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        hit_order(&self.0, &other.0)
    }
}

impl BestSoFar {
    fn new(k: usize) -> Self {
        BestSoFar {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    /// Current k-th best distance (infinite until k answers exist).
    fn kth_distance(&self) -> f64 {
        if self.heap.len() < self.k {
            f64::INFINITY
        } else {
            self.heap.peek().map_or(f64::INFINITY, |h| h.0.distance)
        }
    }

    /// Inserts if the hit beats the current k-th best; returns whether the
    /// best-so-far set changed.
    fn offer(&mut self, hit: Hit) -> bool {
        if self.heap.len() < self.k {
            self.heap.push(OrderedHit(hit));
            return true;
        }
        let worst = self.heap.peek().expect("non-empty");
        if hit_order(&hit, &worst.0) == std::cmp::Ordering::Less {
            self.heap.pop();
            self.heap.push(OrderedHit(hit));
            true
        } else {
            false
        }
    }

    fn into_sorted(self) -> Vec<Hit> {
        let mut hits: Vec<Hit> = self.heap.into_iter().map(|h| h.0).collect();
        hits.sort_by(hit_order);
        hits
    }
}

/// Min-heap entry: nodes ordered by (mindist, pre-order id).
struct Frontier<'a> {
    mindist: f64,
    node: &'a Node,
}

impl PartialEq for Frontier<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for Frontier<'_> {}
impl PartialOrd for Frontier<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Frontier<'_> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the smallest mindist.
        other
            .mindist
            .total_cmp(&self.mindist)
            .then_with(|| other.node.meta().id.cmp(&self.node.meta().id))
    }
}

fn visit_leaf(
    leaf: &LeafNode,
    prepared: &PreparedQuery,
    collection: &SeriesCollection,
    best: &mut BestSoFar,
    scratch: &mut Vec<f64>,
    counters: &mut SearchCounters,
) -> bool {
    let mut improved = false;
    for entry in &leaf.entries {
        let d = collection.get(entry.series);
        let Some(offsets) = entry.candidate_offsets(d.len(), prepared.len()) else {
            continue;
        };
        for offset in offsets {
            let skip_above = best.kth_distance();
            if let Some(distance) =
                prepared.candidate_distance(d, offset, skip_above, scratch, counters)
            {
                let hit = Hit {
                    subsequence: SubsequenceRef {
                        series: entry.series,
                        offset,
                        length: prepared.len(),
                    },
                    distance,
                };
                improved |= best.offer(hit);
            }
        }
    }
    improved
}

pub(crate) fn run_search(
    index: &UlisseIndex,
    collection: &SeriesCollection,
    prepared: &PreparedQuery,
    k: usize,
    measure: Measure,
    exact: bool,
) -> Result<QueryResult> {
    if k == 0 {
        return Err(Error::ZeroParameter { what: "k" });
    }
    index.check_collection(collection)?;
    let mut counters = SearchCounters {
        total_nodes: u64::from(index.node_count()),
        exhausted: true,
        ..SearchCounters::default()
    };
    let mut best = BestSoFar::new(k);
    let mut scratch = Vec::new();
    let mut frontier = BinaryHeap::new();
    frontier.push(Frontier {
        mindist: prepared.mindist_node(index, index.root().env()),
        node: index.root(),
    });
    while let Some(Frontier { mindist, node }) = frontier.pop() {
        if exact && mindist > best.kth_distance() {
            counters.nodes_pruned += u64::from(node.meta().subtree);
            continue;
        }
        counters.nodes_visited += 1;
        match node {
            Node::Internal(internal) => {
                for child in internal.children.iter().flatten() {
                    frontier.push(Frontier {
                        mindist: prepared.mindist_node(index, child.env()),
                        node: child,
                    });
                }
            }
            Node::Leaf(leaf) => {
                let improved =
                    visit_leaf(leaf, prepared, collection, &mut best, &mut scratch, &mut counters);
                counters.leaf_visits += 1;
                if improved {
                    counters.improving_leaf_visits += 1;
                } else if !exact {
                    counters.exhausted = false;
                    break;
                }
            }
        }
    }
    Ok(QueryResult {
        hits: best.into_sorted(),
        query_len: prepared.len(),
        k,
        mode: prepared.mode,
        measure: measure.kind(),
        band_radius: prepared.radius,
        counters,
    })
}

/// Keeps the highest-ranked hits whose windows do not overlap (per series,
/// offsets at least the query length apart). Optional post-filter; the
/// result may hold fewer than k answers.
pub fn filter_non_overlapping(hits: &[Hit], query_len: usize) -> Vec<Hit> {
    let mut kept: Vec<Hit> = Vec::new();
    for hit in hits {
        let clashes = kept.iter().any(|other| {
            other.subsequence.series == hit.subsequence.series
                && other.subsequence.offset.abs_diff(hit.subsequence.offset) < query_len
        });
        if !clashes {
            kept.push(*hit);
        }
    }
    kept
}
