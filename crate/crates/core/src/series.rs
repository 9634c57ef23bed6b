//! Series representation and summarization: constant-time subsequence
//! statistics from prefix sums, z-normalization, PAA and iSAX words.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Position of a series inside its collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeriesId(pub u32);

impl std::fmt::Display for SeriesId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A contiguous run of `length` points starting at `offset` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsequenceRef {
    pub series: SeriesId,
    pub offset: usize,
    pub length: usize,
}

/// Prefix sums with Neumaier compensation. Each stored entry carries the
/// running compensation so that range sums over long series keep close to
/// full f64 accuracy instead of accumulating drift.
#[derive(Debug, Clone)]
struct PrefixSums {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl PrefixSums {
    fn build<'a>(values: impl Iterator<Item = f64>, n: usize) -> Self {
        let mut sum = Vec::with_capacity(n + 1);
        let mut comp = Vec::with_capacity(n + 1);
        sum.push(0.0);
        comp.push(0.0);
        let mut s = 0.0_f64;
        let mut c = 0.0_f64;
        for x in values {
            let t = s + x;
            if s.abs() >= x.abs() {
                c += (s - t) + x;
            } else {
                c += (x - t) + s;
            }
            s = t;
            sum.push(s);
            comp.push(c);
        }
        PrefixSums { sum, comp }
    }

    #[inline]
    fn range_sum(&self, start: usize, end: usize) -> f64 {
        (self.sum[end] - self.sum[start]) + (self.comp[end] - self.comp[start])
    }
}

/// An ordered sequence of finite values plus prefix sums of the values and
/// their squares, giving O(1) mean/std for any subsequence.
#[derive(Debug, Clone)]
pub struct DataSeries {
    id: SeriesId,
    values: Vec<f64>,
    prefix: PrefixSums,
    prefix_sq: PrefixSums,
}

impl DataSeries {
    /// Validates and wraps a value vector. Rejects empty input and names the
    /// first non-finite position.
    pub fn new(id: SeriesId, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(position) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { position });
        }
        let prefix = PrefixSums::build(values.iter().copied(), values.len());
        let prefix_sq = PrefixSums::build(values.iter().map(|v| v * v), values.len());
        Ok(DataSeries {
            id,
            values,
            prefix,
            prefix_sq,
        })
    }

    pub fn id(&self) -> SeriesId {
        self.id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn window(&self, offset: usize, length: usize) -> &[f64] {
        &self.values[offset..offset + length]
    }

    fn check_range(&self, offset: usize, length: usize) -> Result<()> {
        if length == 0 {
            return Err(Error::ZeroParameter { what: "length" });
        }
        if offset + length > self.values.len() {
            return Err(Error::OutOfBounds {
                offset,
                length,
                series_len: self.values.len(),
            });
        }
        Ok(())
    }

    /// Sum of the window, O(1).
    #[inline]
    pub fn range_sum(&self, offset: usize, length: usize) -> f64 {
        self.prefix.range_sum(offset, offset + length)
    }

    /// Sum of squares of the window, O(1).
    #[inline]
    pub fn range_sum_sq(&self, offset: usize, length: usize) -> f64 {
        self.prefix_sq.range_sum(offset, offset + length)
    }

    /// Population mean and standard deviation of a window in O(1).
    /// The variance expression is clamped at zero against rounding.
    #[inline]
    pub fn stats_unchecked(&self, offset: usize, length: usize) -> (f64, f64) {
        let n = length as f64;
        let mean = self.range_sum(offset, length) / n;
        let var = (self.range_sum_sq(offset, length) / n - mean * mean).max(0.0);
        (mean, var.sqrt())
    }

    /// Bounds-checked version of [`stats_unchecked`].
    ///
    /// [`stats_unchecked`]: DataSeries::stats_unchecked
    pub fn subsequence_stats(&self, offset: usize, length: usize) -> Result<(f64, f64)> {
        self.check_range(offset, length)?;
        Ok(self.stats_unchecked(offset, length))
    }

    /// Mean of one PAA segment of a subsequence, O(1).
    #[inline]
    pub fn segment_mean(&self, offset: usize, segment: usize, segment_len: usize) -> f64 {
        self.range_sum(offset + segment * segment_len, segment_len) / segment_len as f64
    }
}

/// A collection of series; ids are positions in the collection.
#[derive(Debug, Clone, Default)]
pub struct SeriesCollection {
    series: Vec<DataSeries>,
}

impl SeriesCollection {
    pub fn new(series: Vec<DataSeries>) -> Self {
        SeriesCollection { series }
    }

    /// Builds a collection from raw value vectors, assigning sequential ids.
    pub fn from_values(values: Vec<Vec<f64>>) -> Result<Self> {
        let series = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| DataSeries::new(SeriesId(i as u32), v))
            .collect::<Result<Vec<_>>>()?;
        Ok(SeriesCollection { series })
    }

    pub fn push(&mut self, values: Vec<f64>) -> Result<SeriesId> {
        let id = SeriesId(self.series.len() as u32);
        self.series.push(DataSeries::new(id, values)?);
        Ok(id)
    }

    pub fn get(&self, id: SeriesId) -> &DataSeries {
        &self.series[id.0 as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = &DataSeries> {
        self.series.iter()
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}

/// Shift/scale a sequence to mean 0 and population std 1. A constant
/// sequence maps to all zeros, which keeps every caller total; flat windows
/// stay valid candidates everywhere.
pub fn znormalize(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / std).collect()
}

/// Z-normalize into a caller-provided buffer, given precomputed stats.
pub fn znormalize_into(values: &[f64], mean: f64, std: f64, out: &mut Vec<f64>) {
    out.clear();
    if std == 0.0 {
        out.resize(values.len(), 0.0);
    } else {
        out.extend(values.iter().map(|v| (v - mean) / std));
    }
}

/// Piecewise aggregate approximation: per-segment means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaaVector {
    pub coefficients: Vec<f64>,
    pub segment_length: usize,
}

/// Segment means over the longest prefix that is a multiple of the segment
/// length; the trailing remainder is ignored.
pub fn paa(values: &[f64], segment_length: usize) -> Result<PaaVector> {
    if segment_length == 0 {
        return Err(Error::ZeroParameter {
            what: "segment length",
        });
    }
    if values.len() < segment_length {
        return Err(Error::SequenceShorterThanSegment {
            len: values.len(),
            segment: segment_length,
        });
    }
    let coefficients = values
        .chunks_exact(segment_length)
        .map(|chunk| chunk.iter().sum::<f64>() / segment_length as f64)
        .collect();
    Ok(PaaVector {
        coefficients,
        segment_length,
    })
}

/// The `alphabet_size - 1` ascending thresholds partitioning the real line
/// into equal-probability regions under the standard normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakpoints {
    thresholds: Vec<f64>,
    alphabet_size: usize,
}

impl Breakpoints {
    /// Standard-normal quantiles at i/alphabet_size. Symmetry about zero is
    /// enforced by construction so the table is deterministic.
    pub fn gaussian(alphabet_size: usize) -> Result<Self> {
        if alphabet_size < 2 || !alphabet_size.is_power_of_two() {
            return Err(Error::InvalidAlphabet {
                alphabet: alphabet_size,
            });
        }
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut thresholds = vec![0.0; alphabet_size - 1];
        for i in 1..=(alphabet_size / 2 - 1) {
            let q = normal.inverse_cdf(i as f64 / alphabet_size as f64);
            thresholds[i - 1] = q;
            thresholds[alphabet_size - 1 - i] = -q;
        }
        thresholds[alphabet_size / 2 - 1] = 0.0;
        Ok(Breakpoints {
            thresholds,
            alphabet_size,
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Bits per symbol for this alphabet.
    pub fn symbol_bits(&self) -> u32 {
        self.alphabet_size.trailing_zeros()
    }

    /// Region index of a value. A value exactly on a threshold belongs to
    /// the upper region.
    #[inline]
    pub fn symbol_for(&self, value: f64) -> u16 {
        self.thresholds.partition_point(|t| *t <= value) as u16
    }

    /// Lower bound of a region (negative infinity for the lowest region).
    #[inline]
    pub fn region_lower(&self, symbol: u16) -> f64 {
        if symbol == 0 {
            f64::NEG_INFINITY
        } else {
            self.thresholds[symbol as usize - 1]
        }
    }

    /// Upper bound of a region (positive infinity for the highest region).
    #[inline]
    pub fn region_upper(&self, symbol: u16) -> f64 {
        if symbol as usize == self.alphabet_size - 1 {
            f64::INFINITY
        } else {
            self.thresholds[symbol as usize]
        }
    }
}

/// A PAA vector discretized into breakpoint regions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaxWord {
    pub symbols: Vec<u16>,
    pub alphabet_size: usize,
}

impl SaxWord {
    pub fn from_paa(paa: &PaaVector, breakpoints: &Breakpoints) -> Self {
        SaxWord {
            symbols: paa
                .coefficients
                .iter()
                .map(|&c| breakpoints.symbol_for(c))
                .collect(),
            alphabet_size: breakpoints.alphabet_size(),
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Extract bit `bit` (0 = most significant) of a symbol with `bits` bits.
#[inline]
pub fn symbol_bit(symbol: u16, bits: u32, bit: u32) -> u8 {
    ((symbol >> (bits - 1 - bit)) & 1) as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_walk(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc = 0.0;
        (0..n)
            .map(|_| {
                let step: f64 = rng.sample(StandardNormal);
                acc += step;
                acc
            })
            .collect()
    }

    #[test]
    fn prefix_sums_simple() {
        let d = DataSeries::new(SeriesId(0), vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(d.prefix.sum, vec![0.0, 1.0, 3.0, 6.0]);
        assert_eq!(d.range_sum(0, 3), 6.0);
        assert_eq!(d.range_sum_sq(0, 3), 14.0);
    }

    #[test]
    fn empty_series_rejected() {
        assert!(matches!(
            DataSeries::new(SeriesId(0), vec![]),
            Err(Error::EmptySeries)
        ));
    }

    #[test]
    fn non_finite_rejected_with_position() {
        let err = DataSeries::new(SeriesId(0), vec![1.0, f64::NAN, 3.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { position: 1 }));
    }

    #[test]
    fn two_point_stats() {
        let d = DataSeries::new(SeriesId(0), vec![0.0, 2.0]).unwrap();
        let (mean, std) = d.subsequence_stats(0, 2).unwrap();
        assert_eq!(mean, 1.0);
        assert_eq!(std, 1.0);
    }

    #[test]
    fn constant_window_std_zero() {
        let d = DataSeries::new(SeriesId(0), vec![5.0, 5.0, 5.0, 5.0]).unwrap();
        let (mean, std) = d.subsequence_stats(1, 3).unwrap();
        assert_eq!(mean, 5.0);
        assert_eq!(std, 0.0);
    }

    #[test]
    fn stats_out_of_range() {
        let d = DataSeries::new(SeriesId(0), vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            d.subsequence_stats(1, 2),
            Err(Error::OutOfBounds { .. })
        ));
    }

    /// Direct-summation oracle: two-pass mean/std over the raw window.
    fn direct_stats(window: &[f64]) -> (f64, f64) {
        let n = window.len() as f64;
        let mean = window.iter().sum::<f64>() / n;
        let var = window.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    }

    #[test]
    fn stats_match_direct_on_long_walk() {
        let values = random_walk(1_000_000, 7);
        let d = DataSeries::new(SeriesId(0), values).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let len = rng.gen_range(4..=4096);
            let offset = rng.gen_range(0..=d.len() - len);
            let (mean, std) = d.stats_unchecked(offset, len);
            let (dm, ds) = direct_stats(d.window(offset, len));
            assert!(
                (mean - dm).abs() <= 1e-9 * dm.abs().max(1.0),
                "mean {mean} vs {dm} at offset {offset} len {len}"
            );
            assert!(
                (std - ds).abs() <= 1e-9 * ds.abs().max(1.0),
                "std {std} vs {ds} at offset {offset} len {len}"
            );
        }
    }

    #[test]
    fn znormalize_two_points() {
        assert_eq!(znormalize(&[0.0, 2.0]), vec![-1.0, 1.0]);
    }

    #[test]
    fn znormalize_constant_is_zeros() {
        assert_eq!(znormalize(&[5.0, 5.0, 5.0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn znormalize_output_stats() {
        let values = random_walk(64, 3);
        let z = znormalize(&values);
        let (mean, std) = direct_stats(&z);
        assert!(mean.abs() < 1e-12, "mean {mean}");
        assert!((std - 1.0).abs() < 1e-9, "std {std}");
    }

    #[test]
    fn paa_segment_means() {
        let p = paa(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(p.coefficients, vec![1.5, 3.5]);
    }

    #[test]
    fn paa_drops_remainder() {
        let p = paa(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], 2).unwrap();
        assert_eq!(p.coefficients, vec![1.5, 3.5, 5.5]);
    }

    #[test]
    fn paa_identity_at_segment_one() {
        let values = random_walk(17, 5);
        let p = paa(&values, 1).unwrap();
        assert_eq!(p.coefficients, values);
    }

    #[test]
    fn paa_too_short() {
        assert!(matches!(
            paa(&[1.0], 2),
            Err(Error::SequenceShorterThanSegment { len: 1, segment: 2 })
        ));
    }

    #[test]
    fn breakpoints_alphabet_two() {
        let bp = Breakpoints::gaussian(2).unwrap();
        assert_eq!(bp.thresholds(), &[0.0]);
    }

    #[test]
    fn breakpoints_alphabet_four() {
        // Standard-normal quantiles at 0.25 / 0.5 / 0.75.
        let bp = Breakpoints::gaussian(4).unwrap();
        let t = bp.thresholds();
        assert!((t[0] - (-0.674_489_750_196_081_7)).abs() < 1e-12, "{}", t[0]);
        assert_eq!(t[1], 0.0);
        assert!((t[2] - 0.674_489_750_196_081_7).abs() < 1e-12, "{}", t[2]);
    }

    #[test]
    fn breakpoints_alphabet_eight() {
        let bp = Breakpoints::gaussian(8).unwrap();
        let t = bp.thresholds();
        assert_eq!(t.len(), 7);
        for w in t.windows(2) {
            assert!(w[0] < w[1]);
        }
        for i in 0..7 {
            assert_eq!(t[i], -t[6 - i]);
        }
    }

    #[test]
    fn breakpoints_reject_non_power_of_two() {
        assert!(Breakpoints::gaussian(3).is_err());
        assert!(Breakpoints::gaussian(0).is_err());
        assert!(Breakpoints::gaussian(1).is_err());
    }

    #[test]
    fn isax_symbols_alphabet_four() {
        let bp = Breakpoints::gaussian(4).unwrap();
        assert_eq!(bp.symbol_for(-0.7), 0);
        assert_eq!(bp.symbol_for(0.1), 2);
        // Boundary value goes to the upper region.
        assert_eq!(bp.symbol_for(0.0), 2);
    }

    #[test]
    fn isax_alphabet_two_is_sign() {
        let bp = Breakpoints::gaussian(2).unwrap();
        for v in [-3.0, -0.1, 0.0, 0.1, 3.0] {
            assert_eq!(bp.symbol_for(v), u16::from(v >= 0.0));
        }
    }

    #[test]
    fn region_lookup_inverts_bounds() {
        let bp = Breakpoints::gaussian(8).unwrap();
        for sym in 0..8u16 {
            let lo = bp.region_lower(sym).max(-5.0);
            let hi = bp.region_upper(sym).min(5.0);
            let mid = 0.5 * (lo + hi);
            assert_eq!(bp.symbol_for(mid), sym);
        }
    }

    #[test]
    fn paa_prefix_property_bit_identical() {
        let values = random_walk(500, 11);
        let s = 8;
        for &offset in &[0usize, 13, 97] {
            let long = paa(&values[offset..offset + 256], s).unwrap();
            let short = paa(&values[offset..offset + 128], s).unwrap();
            for k in 0..short.coefficients.len() {
                assert_eq!(long.coefficients[k].to_bits(), short.coefficients[k].to_bits());
            }
        }
    }

    #[test]
    fn symbol_bit_msb_first() {
        // 0b10110000 with 8 bits: bit 0 is 1, bit 1 is 0, bit 2 is 1.
        let sym = 0b1011_0000u16;
        assert_eq!(symbol_bit(sym, 8, 0), 1);
        assert_eq!(symbol_bit(sym, 8, 1), 0);
        assert_eq!(symbol_bit(sym, 8, 2), 1);
        assert_eq!(symbol_bit(sym, 8, 3), 1);
        assert_eq!(symbol_bit(sym, 8, 7), 0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn znormalize_idempotent(values in proptest::collection::vec(-1e3f64..1e3, 2..64)) {
                let z1 = znormalize(&values);
                let z2 = znormalize(&z1);
                for (a, b) in z1.iter().zip(z2.iter()) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }

            #[test]
            fn znormalize_affine_invariant(
                values in proptest::collection::vec(-1e3f64..1e3, 2..64),
                a in 0.01f64..100.0,
                b in -100.0f64..100.0,
            ) {
                let z = znormalize(&values);
                let transformed: Vec<f64> = values.iter().map(|v| a * v + b).collect();
                let zt = znormalize(&transformed);
                // Constant inputs normalize to zeros on both sides.
                for (x, y) in z.iter().zip(zt.iter()) {
                    prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}");
                }
            }

            #[test]
            fn symbols_round_trip_regions(v in -4.0f64..4.0) {
                let bp = Breakpoints::gaussian(16).unwrap();
                let sym = bp.symbol_for(v);
                prop_assert!(bp.region_lower(sym) <= v);
                prop_assert!(v < bp.region_upper(sym));
            }
        }
    }
}
