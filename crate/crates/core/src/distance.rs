//! Distance kernels shared by index search and discovery: Euclidean,
//! z-normalized Euclidean via statistics, sliding dot products, and banded
//! DTW with its query envelope.

use crate::error::{Error, Result};
use crate::series::DataSeries;

/// Incremental dot-product rows drift; recompute from scratch this often.
pub const DOT_PRODUCT_REBASE_INTERVAL: u32 = 4096;

/// Plain Euclidean distance between equal-length sequences.
pub fn euclidean(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(euclidean_unchecked(x, y))
}

#[inline]
pub(crate) fn euclidean_unchecked(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Z-normalized Euclidean distance from the dot product and per-window
/// statistics:
///
/// d = sqrt(2 * len * (1 - (qt - len * mean_i * mean_j) / (len * std_i * std_j)))
///
/// The correlation is clamped to [-1, 1] before the distance formula. If
/// either std is zero the all-zeros normalization rule applies: both flat
/// gives 0, one flat gives sqrt(len).
#[inline]
pub fn znorm_euclidean_from_stats(
    qt: f64,
    len: usize,
    mean_i: f64,
    std_i: f64,
    mean_j: f64,
    std_j: f64,
) -> f64 {
    let n = len as f64;
    if std_i == 0.0 || std_j == 0.0 {
        return if std_i == 0.0 && std_j == 0.0 {
            0.0
        } else {
            n.sqrt()
        };
    }
    let corr = ((qt - n * mean_i * mean_j) / (n * std_i * std_j)).clamp(-1.0, 1.0);
    (2.0 * n * (1.0 - corr)).max(0.0).sqrt()
}

/// Dot products of the length-`len` window anchored at `anchor` against the
/// window at every other valid offset of the same series.
#[derive(Debug, Clone)]
pub struct DotProductRow {
    pub anchor: usize,
    pub len: usize,
    pub values: Vec<f64>,
    incremental_steps: u32,
}

impl DotProductRow {
    #[inline]
    pub fn qt(&self, offset: usize) -> f64 {
        self.values[offset]
    }

    pub fn num_offsets(&self) -> usize {
        self.values.len()
    }
}

/// Computes the dot-product row for `anchor` at window length `len`.
///
/// With `previous` (the row for `anchor - 1` at the same length) each entry
/// follows the incremental recurrence
/// `QT(i, j) = QT(i-1, j-1) - d[i-1] * d[j-1] + d[i+len-1] * d[j+len-1]`
/// for O(|D|) total work; rows are rebased to direct summation every
/// [`DOT_PRODUCT_REBASE_INTERVAL`] incremental steps to bound drift.
/// Without `previous` the row is computed by direct summation.
pub fn sliding_dot_products(
    d: &DataSeries,
    anchor: usize,
    len: usize,
    previous: Option<&DotProductRow>,
) -> Result<DotProductRow> {
    if len == 0 {
        return Err(Error::ZeroParameter { what: "length" });
    }
    if anchor + len > d.len() {
        return Err(Error::OutOfBounds {
            offset: anchor,
            length: len,
            series_len: d.len(),
        });
    }
    let num_offsets = d.len() - len + 1;
    let values = d.values();
    if let Some(prev) = previous {
        debug_assert_eq!(prev.anchor + 1, anchor, "previous row must be anchor - 1");
        debug_assert_eq!(prev.len, len);
        if prev.incremental_steps + 1 < DOT_PRODUCT_REBASE_INTERVAL {
            let mut row = vec![0.0; num_offsets];
            let drop_i = values[anchor - 1];
            let add_i = values[anchor + len - 1];
            for j in (1..num_offsets).rev() {
                row[j] = prev.values[j - 1] - drop_i * values[j - 1]
                    + add_i * values[j + len - 1];
            }
            row[0] = dot(&values[anchor..anchor + len], &values[0..len]);
            return Ok(DotProductRow {
                anchor,
                len,
                values: row,
                incremental_steps: prev.incremental_steps + 1,
            });
        }
    }
    let window = &values[anchor..anchor + len];
    let row = (0..num_offsets)
        .map(|j| dot(window, &values[j..j + len]))
        .collect();
    Ok(DotProductRow {
        anchor,
        len,
        values: row,
        incremental_steps: 0,
    })
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
}

/// Sakoe-Chiba band constraint: maximum index offset of the warping path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DtwBand {
    pub radius: usize,
}

impl DtwBand {
    pub fn new(radius: usize, query_len: usize) -> Result<Self> {
        if radius >= query_len {
            return Err(Error::InvalidBand {
                radius,
                len: query_len,
            });
        }
        Ok(DtwBand { radius })
    }

    /// Default radius: ceil(fraction * query length), clamped into the band.
    pub fn from_fraction(fraction: f64, query_len: usize) -> Self {
        let radius = ((fraction * query_len as f64).ceil() as usize).min(query_len - 1);
        DtwBand { radius }
    }
}

/// Band-constrained DTW: square root of the accumulated squared cost along
/// the best warping path. With radius 0 this equals the Euclidean distance.
pub fn dtw(x: &[f64], y: &[f64], band: DtwBand) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n == 0 {
        return Err(Error::ZeroParameter { what: "length" });
    }
    if band.radius >= n {
        return Err(Error::InvalidBand {
            radius: band.radius,
            len: n,
        });
    }
    Ok(dtw_unchecked(x, y, band.radius))
}

/// Two-row banded DP over squared costs. Callers guarantee equal non-zero
/// lengths and radius < n.
pub(crate) fn dtw_unchecked(x: &[f64], y: &[f64], radius: usize) -> f64 {
    let n = x.len();
    let mut prev = vec![f64::INFINITY; n];
    let mut curr = vec![f64::INFINITY; n];
    for i in 0..n {
        let j_lo = i.saturating_sub(radius);
        let j_hi = (i + radius).min(n - 1);
        let xi = x[i];
        for j in j_lo..=j_hi {
            let cost = (xi - y[j]) * (xi - y[j]);
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let up = if i > 0 { prev[j] } else { f64::INFINITY };
                let left = if j > j_lo { curr[j - 1] } else { f64::INFINITY };
                let diag = if i > 0 && j > 0 {
                    prev[j - 1]
                } else {
                    f64::INFINITY
                };
                up.min(left).min(diag)
            };
            curr[j] = best + cost;
        }
        std::mem::swap(&mut prev, &mut curr);
        for v in curr[j_lo..=j_hi].iter_mut() {
            *v = f64::INFINITY;
        }
    }
    prev[n - 1].sqrt()
}

/// Per-position running min/max of the query over the band window; the
/// lower/upper sequences of the LB_Keogh-style bound.
#[derive(Debug, Clone)]
pub struct QueryEnvelope {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Builds the band envelope of a query: lower_t / upper_t are the min / max
/// of q over [t - r, t + r] clipped to bounds. For any candidate c of the
/// same length, dtw(q, c) is at least the envelope overflow bound of
/// [`lb_keogh`].
pub fn dtw_query_envelope(q: &[f64], band: DtwBand) -> QueryEnvelope {
    let n = q.len();
    let r = band.radius;
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for t in 0..n {
        let lo = t.saturating_sub(r);
        let hi = (t + r).min(n - 1);
        let mut mn = f64::INFINITY;
        let mut mx = f64::NEG_INFINITY;
        for &v in &q[lo..=hi] {
            mn = mn.min(v);
            mx = mx.max(v);
        }
        lower.push(mn);
        upper.push(mx);
    }
    QueryEnvelope { lower, upper }
}

/// Envelope overflow bound: sqrt of the summed squared overflow of `c`
/// outside [lower, upper]. Always a lower bound on dtw(q, c) for the band
/// the envelope was built with.
pub fn lb_keogh(envelope: &QueryEnvelope, c: &[f64]) -> f64 {
    debug_assert_eq!(envelope.lower.len(), c.len());
    let mut acc = 0.0;
    for t in 0..c.len() {
        let v = c[t];
        if v > envelope.upper[t] {
            let g = v - envelope.upper[t];
            acc += g * g;
        } else if v < envelope.lower[t] {
            let g = envelope.lower[t] - v;
            acc += g * g;
        }
    }
    acc.sqrt()
}
