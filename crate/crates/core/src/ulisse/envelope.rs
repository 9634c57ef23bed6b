//! Master-series enumeration and envelope construction.
//!
//! A master series is the longest subsequence (capped at `lmax`) starting at
//! each offset; its prefixes cover every query length in the indexed range.
//! Grouping `gamma + 1` consecutive master series and folding their
//! zero-aligned PAA summaries pointwise gives the [L, U] containment area of
//! a [`PaaEnvelope`]; discretizing L and U yields the [`UEnvelope`] the tree
//! is built from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{paa, znormalize_into, Breakpoints, DataSeries, SaxWord, SeriesId};
use crate::ulisse::Mode;

/// One master series: the subsequence at `offset` of length
/// `min(|D| - offset, lmax)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MasterSeries {
    pub offset: usize,
    pub len: usize,
}

/// Enumerates all master series for the range [lmin, lmax]: one per offset
/// in `0 ..= |D| - lmin`, so every subsequence with a length in range is a
/// prefix of exactly one of them.
pub fn enumerate_master_series(
    d: &DataSeries,
    lmin: usize,
    lmax: usize,
) -> Result<Vec<MasterSeries>> {
    if lmin < 1 || lmin > lmax || lmax > d.len() {
        return Err(Error::InvalidLengthRange {
            lmin,
            lmax,
            series_len: d.len(),
        });
    }
    Ok((0..=d.len() - lmin)
        .map(|offset| MasterSeries {
            offset,
            len: (d.len() - offset).min(lmax),
        })
        .collect())
}

/// Pointwise [L, U] PAA bounds over a group of consecutive master series.
/// Segments past a master's own coverage are excluded from that master's
/// contribution, so the envelope dimension is the largest member dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PaaEnvelope {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub series: SeriesId,
    pub first_offset: usize,
    pub last_offset: usize,
    pub segment_length: usize,
}

impl PaaEnvelope {
    pub fn ndims(&self) -> usize {
        self.lower.len()
    }
}

/// Builds the envelope of a non-empty group of consecutive master series.
///
/// Raw mode folds each master's own PAA; by the prefix property those
/// coefficients are exactly the coefficients of every shorter represented
/// subsequence. Z-normalized mode has no prefix property, so every
/// represented (offset, length) pair is normalized individually and its PAA
/// folded. Both modes compute coefficients through the same [`paa`] /
/// [`znormalize_into`] routines the rest of the crate uses, so containment
/// holds bit-for-bit.
pub fn build_paa_envelope(
    d: &DataSeries,
    group: &[MasterSeries],
    segment_length: usize,
    lmin: usize,
    mode: Mode,
) -> Result<PaaEnvelope> {
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    if segment_length == 0 {
        return Err(Error::ZeroParameter {
            what: "segment length",
        });
    }
    let mut lower: Vec<f64> = Vec::new();
    let mut upper: Vec<f64> = Vec::new();
    let mut fold = |k: usize, coef: f64| {
        if k == lower.len() {
            lower.push(coef);
            upper.push(coef);
        } else {
            if coef < lower[k] {
                lower[k] = coef;
            }
            if coef > upper[k] {
                upper[k] = coef;
            }
        }
    };
    let mut scratch = Vec::new();
    for master in group {
        match mode {
            Mode::Raw => {
                if master.len >= segment_length {
                    let p = paa(d.window(master.offset, master.len), segment_length)?;
                    for (k, &coef) in p.coefficients.iter().enumerate() {
                        fold(k, coef);
                    }
                }
            }
            Mode::ZNormalized => {
                for len in lmin..=master.len {
                    if len < segment_length {
                        continue;
                    }
                    let window = d.window(master.offset, len);
                    let (mean, std) = d.stats_unchecked(master.offset, len);
                    znormalize_into(window, mean, std, &mut scratch);
                    for (k, chunk) in scratch.chunks_exact(segment_length).enumerate() {
                        fold(k, chunk.iter().sum::<f64>() / segment_length as f64);
                    }
                }
            }
        }
    }
    Ok(PaaEnvelope {
        lower,
        upper,
        series: d.id(),
        first_offset: group[0].offset,
        last_offset: group[group.len() - 1].offset,
        segment_length,
    })
}

/// The iSAX form of an envelope plus the pointer into the raw data that
/// recovers every represented subsequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UEnvelope {
    pub isax_lower: SaxWord,
    pub isax_upper: SaxWord,
    pub series: SeriesId,
    pub first_offset: usize,
    pub last_offset: usize,
}

impl UEnvelope {
    pub fn ndims(&self) -> usize {
        self.isax_lower.symbols.len()
    }

    /// Offsets with a represented subsequence of `query_len`, given the
    /// backing series length.
    pub fn candidate_offsets(
        &self,
        series_len: usize,
        query_len: usize,
    ) -> Option<std::ops::RangeInclusive<usize>> {
        if query_len > series_len {
            return None;
        }
        let last = self.last_offset.min(series_len - query_len);
        if last < self.first_offset {
            None
        } else {
            Some(self.first_offset..=last)
        }
    }
}

/// Discretizes the PAA extremes of an envelope into its iSAX form.
pub fn envelope_to_uenv(e: &PaaEnvelope, breakpoints: &Breakpoints) -> UEnvelope {
    let to_word = |coefs: &[f64]| SaxWord {
        symbols: coefs.iter().map(|&c| breakpoints.symbol_for(c)).collect(),
        alphabet_size: breakpoints.alphabet_size(),
    };
    UEnvelope {
        isax_lower: to_word(&e.lower),
        isax_upper: to_word(&e.upper),
        series: e.series,
        first_offset: e.first_offset,
        last_offset: e.last_offset,
    }
}
