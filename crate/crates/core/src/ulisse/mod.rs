//! The ULISSE index: variable-length subsequence matching over a series
//! collection.
//!
//! Master series are grouped `gamma + 1` at a time into iSAX envelopes; a
//! bit-split tree over `iSAX(L)` routes and merges them. One index answers
//! queries of any length in `[lmin, lmax]`, approximately or exactly, under
//! Euclidean or banded DTW distance, on raw or z-normalized data.

pub mod envelope;
pub mod persist;
pub mod search;
pub mod tree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Breakpoints, SeriesCollection};

pub use envelope::{build_paa_envelope, enumerate_master_series, envelope_to_uenv};
pub use envelope::{MasterSeries, PaaEnvelope, UEnvelope};
pub use search::{
    filter_non_overlapping, hit_order, Hit, Measure, MeasureKind, PreparedQuery, QueryResult,
    SearchCounters,
};
use tree::Node;

/// Whether subsequences are compared as stored or after z-normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Raw,
    ZNormalized,
}

/// Index construction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexParams {
    pub lmin: usize,
    pub lmax: usize,
    pub segment_length: usize,
    pub alphabet_size: usize,
    /// Extra consecutive master series folded into one envelope
    /// (group size gamma + 1).
    pub gamma: usize,
    pub mode: Mode,
    pub leaf_capacity: usize,
}

impl IndexParams {
    /// Defaults: 16 points per segment, alphabet 256, maximal grouping
    /// (gamma = lmax - lmin), leaf capacity 100.
    pub fn new(lmin: usize, lmax: usize, mode: Mode) -> Self {
        IndexParams {
            lmin,
            lmax,
            segment_length: 16,
            alphabet_size: 256,
            gamma: lmax - lmin,
            mode,
            leaf_capacity: 100,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.lmin < 1 || self.lmin > self.lmax {
            return Err(Error::InvalidLengthRange {
                lmin: self.lmin,
                lmax: self.lmax,
                series_len: usize::MAX,
            });
        }
        if self.segment_length == 0 {
            return Err(Error::ZeroParameter {
                what: "segment length",
            });
        }
        if self.leaf_capacity == 0 {
            return Err(Error::ZeroParameter {
                what: "leaf capacity",
            });
        }
        if self.alphabet_size < 2
            || !self.alphabet_size.is_power_of_two()
            || self.alphabet_size > 1 << 16
        {
            return Err(Error::InvalidAlphabet {
                alphabet: self.alphabet_size,
            });
        }
        Ok(())
    }

    /// Number of PAA segments an envelope can have.
    pub fn num_segments(&self) -> usize {
        self.lmax / self.segment_length
    }

    /// Envelopes built per series of the given length.
    pub fn envelopes_per_series(&self, series_len: usize) -> usize {
        let masters = series_len - self.lmin + 1;
        masters.div_ceil(self.gamma + 1)
    }
}

/// An immutable envelope tree over a series collection. The collection
/// itself is passed back in at query time; a digest recorded at build time
/// guards against querying different data.
#[derive(Debug, Clone)]
pub struct UlisseIndex {
    params: IndexParams,
    breakpoints: Breakpoints,
    root: Node,
    node_count: u32,
    dataset_digest: [u8; 32],
}

impl UlisseIndex {
    /// Builds the index: per series, master series are enumerated, grouped
    /// into runs of `gamma + 1` (the last run smaller), summarized into
    /// envelopes, and inserted. Envelope construction runs in parallel;
    /// insertion is sequential so the split structure is deterministic.
    pub fn build(collection: &SeriesCollection, params: IndexParams) -> Result<Self> {
        params.validate()?;
        if collection.is_empty() {
            return Err(Error::EmptyCollection);
        }
        let breakpoints = Breakpoints::gaussian(params.alphabet_size)?;
        let mut root = Node::empty_leaf(params.num_segments());
        for d in collection.iter() {
            let masters = enumerate_master_series(d, params.lmin, params.lmax)?;
            let groups: Vec<&[MasterSeries]> = masters.chunks(params.gamma + 1).collect();
            let envelopes = groups
                .par_iter()
                .map(|group| {
                    build_paa_envelope(d, group, params.segment_length, params.lmin, params.mode)
                        .map(|e| envelope_to_uenv(&e, &breakpoints))
                })
                .collect::<Result<Vec<_>>>()?;
            debug_assert_eq!(envelopes.len(), params.envelopes_per_series(d.len()));
            for env in envelopes {
                root.insert(env, &breakpoints, params.leaf_capacity);
            }
        }
        let node_count = root.finalize();
        Ok(UlisseIndex {
            params,
            breakpoints,
            root,
            node_count,
            dataset_digest: crate::io::collection_digest(collection),
        })
    }

    pub(crate) fn from_parts(
        params: IndexParams,
        root: Node,
        dataset_digest: [u8; 32],
    ) -> Result<Self> {
        params.validate()?;
        let mut root = root;
        let node_count = root.finalize();
        Ok(UlisseIndex {
            params,
            breakpoints: Breakpoints::gaussian(params.alphabet_size)?,
            root,
            node_count,
            dataset_digest,
        })
    }

    pub fn params(&self) -> &IndexParams {
        &self.params
    }

    pub fn breakpoints(&self) -> &Breakpoints {
        &self.breakpoints
    }

    pub(crate) fn root(&self) -> &Node {
        &self.root
    }

    pub fn node_count(&self) -> u32 {
        self.node_count
    }

    pub fn dataset_digest(&self) -> &[u8; 32] {
        &self.dataset_digest
    }

    /// Total envelopes stored in leaves.
    pub fn envelope_count(&self) -> usize {
        tree::collect_entries(&self.root).len()
    }

    /// Errors unless the collection digest matches the one recorded at
    /// build time.
    pub fn check_collection(&self, collection: &SeriesCollection) -> Result<()> {
        if crate::io::collection_digest(collection) != self.dataset_digest {
            return Err(Error::DigestMismatch);
        }
        Ok(())
    }

    /// Best-first search that stops at the first leaf visit improving none
    /// of the k best-so-far answers. Fast, and never better than exact:
    /// sorted approximate distances dominate sorted exact distances.
    pub fn approx_knn(
        &self,
        collection: &SeriesCollection,
        query: &[f64],
        k: usize,
        measure: Measure,
    ) -> Result<QueryResult> {
        let prepared = PreparedQuery::new(self, query, measure)?;
        search::run_search(self, collection, &prepared, k, measure, false)
    }

    /// Exact k-NN: visits or prunes every node, pruning only on a sound
    /// lower bound, so the answer matches a sequential scan.
    pub fn exact_knn(
        &self,
        collection: &SeriesCollection,
        query: &[f64],
        k: usize,
        measure: Measure,
    ) -> Result<QueryResult> {
        let prepared = PreparedQuery::new(self, query, measure)?;
        search::run_search(self, collection, &prepared, k, measure, true)
    }

    /// Structural audit used by tests and the verify command: returns the
    /// list of invariant violations (containment, leaf bit agreement,
    /// master-series coverage), empty when sound.
    pub fn audit(&self, collection: &SeriesCollection) -> Vec<String> {
        let mut problems = tree::audit(&self.root, self.breakpoints.symbol_bits());
        let mut seen: std::collections::BTreeMap<(u32, usize), usize> =
            std::collections::BTreeMap::new();
        for entry in tree::collect_entries(&self.root) {
            for offset in entry.first_offset..=entry.last_offset {
                *seen.entry((entry.series.0, offset)).or_insert(0) += 1;
            }
        }
        for d in collection.iter() {
            for offset in 0..=d.len() - self.params.lmin {
                match seen.remove(&(d.id().0, offset)) {
                    Some(1) => {}
                    Some(n) => problems.push(format!(
                        "master (series {}, offset {offset}) covered {n} times",
                        d.id()
                    )),
                    None => problems.push(format!(
                        "master (series {}, offset {offset}) not covered",
                        d.id()
                    )),
                }
            }
        }
        for ((series, offset), _) in seen {
            problems.push(format!(
                "envelope points at nonexistent master (series {series}, offset {offset})"
            ));
        }
        problems
    }
}
