//! Variable-length motif and discord discovery.
//!
//! A full matrix profile at the smallest length seeds per-anchor candidate
//! caches; for every longer length a rank-preserving lower bound selects
//! the p most promising candidates per anchor, true distances are updated
//! in constant time, and the per-length extraction certifies exact motifs
//! and Top-a m-th discords, recomputing a profile in full only when the
//! bounds cannot certify it.

pub mod discover;
pub mod lower_bound;
pub mod partial;
pub mod profile;

pub use discover::{
    discover_range, exact_discords_at, exact_motif_at, DiscordEntry, DiscordGrid,
    DiscoverConfig, DiscoverOutput, DiscoveryCounters, MotifEntry, ProfileSummary,
};
pub use lower_bound::{lb_eval, lb_init, AnchorTerms, PairBound};
pub use partial::{
    default_partial_size, partial_profile, validity_check, LowerBoundState,
    PartialDistanceProfile,
};
pub use profile::{matrix_profile, MatrixProfile};

/// Shared exclusion rule: offsets within half the window length of the
/// anchor are trivial matches. Engine and oracle both use these, so their
/// diffs test algorithms rather than conventions.
#[inline]
pub fn exclusion_zone(len: usize) -> usize {
    len / 2
}

#[inline]
pub fn is_trivial_match(i: usize, j: usize, len: usize) -> bool {
    i.abs_diff(j) <= exclusion_zone(len)
}
