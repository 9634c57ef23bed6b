//! Variable-length data series analytics.
//!
//! Two engines over one set of series primitives:
//!
//! * [`ulisse`] — an envelope tree over iSAX-summarized master series that
//!   answers approximate and exact k-NN subsequence queries for any query
//!   length inside an indexed range, under Euclidean or banded DTW distance,
//!   on raw or z-normalized data.
//! * [`mad`] — exact variable-length motif and Top-k m-th discord discovery
//!   driven by a matrix profile at the smallest length plus a
//!   length-extensible, rank-preserving lower bound that prunes most work at
//!   the larger lengths.
//!
//! Everything is checked against the brute-force implementations in
//! [`oracle`], which exist to be slow and right.

pub mod distance;
pub mod error;
pub mod io;
pub mod mad;
pub mod oracle;
pub mod results;
pub mod series;
pub mod ulisse;

pub use error::{Error, Result};
pub use series::{DataSeries, SeriesCollection, SeriesId, SubsequenceRef};
