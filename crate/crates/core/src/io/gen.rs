//! Seeded synthetic data and query generation.
//!
//! All randomness comes from ChaCha8 seeded with the spec's seed, with one
//! fixed stream per purpose, so identical specs produce bit-identical output
//! on every platform.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{znormalize, DataSeries};

const STREAM_BASE: u64 = 0;
const STREAM_PATTERN: u64 = 1;
const STREAM_PLACEMENT: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_ANOMALY: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GenKind {
    /// Cumulative sum of standard-normal steps.
    RandomWalk,
    /// sin(2 pi t / period).
    Sine { period: f64 },
    /// Random walk with pattern copies pasted in at recorded offsets.
    Planted {
        pattern_len: usize,
        copies: usize,
        /// Std of the Gaussian noise added to each pasted copy.
        noise_std: f64,
        /// Pattern amplitude relative to the walk's unit steps.
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
}

fn default_amplitude() -> f64 {
    3.0
}

/// Additive burst at a seeded offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalySpec {
    pub magnitude: f64,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    #[serde(flatten)]
    pub kind: GenKind,
    pub length: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anomaly: Option<AnomalySpec>,
}

/// Generated values plus the ground-truth positions of whatever was
/// planted, for oracle-side checks.
#[derive(Debug, Clone)]
pub struct GeneratedSeries {
    pub values: Vec<f64>,
    pub planted_offsets: Vec<usize>,
    pub anomaly_offset: Option<usize>,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn walk(length: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut acc = 0.0;
    (0..length)
        .map(|_| {
            acc += rng.sample::<f64, _>(StandardNormal);
            acc
        })
        .collect()
}

pub fn generate(spec: &GenSpec) -> Result<GeneratedSeries> {
    if spec.length == 0 {
        return Err(Error::EmptySeries);
    }
    let mut values = match &spec.kind {
        GenKind::RandomWalk | GenKind::Planted { .. } => {
            walk(spec.length, &mut rng_for(spec.seed, STREAM_BASE))
        }
        GenKind::Sine { period } => (0..spec.length)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / period).sin())
            .collect(),
    };
    let mut planted_offsets = Vec::new();
    if let GenKind::Planted {
        pattern_len,
        copies,
        noise_std,
        amplitude,
    } = &spec.kind
    {
        let pattern_len = *pattern_len;
        if pattern_len == 0 || pattern_len > spec.length {
            return Err(Error::PlantsDoNotFit {
                copies: *copies,
                len: pattern_len,
                series_len: spec.length,
            });
        }
        // Shape shared by all copies: a z-normalized walk, scaled.
        let shape: Vec<f64> = znormalize(&walk(pattern_len, &mut rng_for(spec.seed, STREAM_PATTERN)))
            .iter()
            .map(|v| v * amplitude)
            .collect();
        planted_offsets = place_windows(
            *copies,
            pattern_len,
            spec.length,
            &mut rng_for(spec.seed, STREAM_PLACEMENT),
        )
        .ok_or(Error::PlantsDoNotFit {
            copies: *copies,
            len: pattern_len,
            series_len: spec.length,
        })?;
        let mut noise_rng = rng_for(spec.seed, STREAM_NOISE);
        for &offset in &planted_offsets {
            // Anchor the copy at the local walk level so pasting does not
            // create a level jump larger than the pattern itself.
            let level = values[offset];
            for t in 0..pattern_len {
                let noise: f64 = noise_rng.sample::<f64, _>(StandardNormal) * noise_std;
                values[offset + t] = level + shape[t] + noise;
            }
        }
    }
    let mut anomaly_offset = None;
    if let Some(anomaly) = &spec.anomaly {
        if anomaly.width == 0 || anomaly.width > spec.length {
            return Err(Error::PlantsDoNotFit {
                copies: 1,
                len: anomaly.width,
                series_len: spec.length,
            });
        }
        let mut rng = rng_for(spec.seed, STREAM_ANOMALY);
        // Keep the burst clear of planted copies.
        let offset = (0..10_000)
            .map(|_| rng.gen_range(0..=spec.length - anomaly.width))
            .find(|&o| {
                planted_offsets.iter().all(|&p| {
                    o + anomaly.width <= p
                        || p + pattern_len_of(&spec.kind).unwrap_or(0) <= o
                })
            })
            .ok_or(Error::PlantsDoNotFit {
                copies: 1,
                len: anomaly.width,
                series_len: spec.length,
            })?;
        for v in values[offset..offset + anomaly.width].iter_mut() {
            *v += anomaly.magnitude;
        }
        anomaly_offset = Some(offset);
    }
    Ok(GeneratedSeries {
        values,
        planted_offsets,
        anomaly_offset,
    })
}

fn pattern_len_of(kind: &GenKind) -> Option<usize> {
    match kind {
        GenKind::Planted { pattern_len, .. } => Some(*pattern_len),
        _ => None,
    }
}

/// Seeded rejection sampling of non-overlapping window starts, sorted.
fn place_windows(
    copies: usize,
    len: usize,
    series_len: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<usize>> {
    if copies * len > series_len {
        return None;
    }
    let mut placed: Vec<usize> = Vec::with_capacity(copies);
    let mut attempts = 0;
    while placed.len() < copies {
        attempts += 1;
        if attempts > 100_000 {
            return None;
        }
        let o = rng.gen_range(0..=series_len - len);
        if placed.iter().all(|&p| o + len <= p || p + len <= o) {
            placed.push(o);
        }
    }
    placed.sort_unstable();
    Some(placed)
}

/// Where a query was extracted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySource {
    pub series: u32,
    pub offset: usize,
    pub length: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuerySet {
    pub seed: u64,
    pub noise_fraction: f64,
    pub sources: Vec<QuerySource>,
    #[serde(skip)]
    pub queries: Vec<Vec<f64>>,
}

/// Extracts `count` subsequences at seeded uniform offsets and lengths in
/// [lmin, lmax], adding Gaussian noise with std `noise_fraction` times the
/// source series' std.
pub fn make_queries(
    d: &DataSeries,
    count: usize,
    lmin: usize,
    lmax: usize,
    noise_fraction: f64,
    seed: u64,
) -> Result<QuerySet> {
    if lmin < 1 || lmin > lmax || lmax > d.len() {
        return Err(Error::InvalidLengthRange {
            lmin,
            lmax,
            series_len: d.len(),
        });
    }
    let (_, series_std) = d.subsequence_stats(0, d.len())?;
    let noise_std = noise_fraction * series_std;
    let mut pick = rng_for(seed, STREAM_PLACEMENT);
    let mut noise = rng_for(seed, STREAM_NOISE);
    let mut sources = Vec::with_capacity(count);
    let mut queries = Vec::with_capacity(count);
    for _ in 0..count {
        let length = pick.gen_range(lmin..=lmax);
        let offset = pick.gen_range(0..=d.len() - length);
        let values: Vec<f64> = d
            .window(offset, length)
            .iter()
            .map(|v| v + noise.sample::<f64, _>(StandardNormal) * noise_std)
            .collect();
        sources.push(QuerySource {
            series: d.id().0,
            offset,
            length,
        });
        queries.push(values);
    }
    Ok(QuerySet {
        seed,
        noise_fraction,
        sources,
        queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let spec = GenSpec {
            kind: GenKind::Planted {
                pattern_len: 32,
                copies: 2,
                noise_std: 0.1,
                amplitude: 3.0,
            },
            length: 1000,
            seed: 99,
            anomaly: Some(AnomalySpec {
                magnitude: 20.0,
                width: 2,
            }),
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.planted_offsets, b.planted_offsets);
        assert_eq!(a.anomaly_offset, b.anomaly_offset);
        for (x, y) in a.values.iter().zip(b.values.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn planted_copies_do_not_overlap() {
        let spec = GenSpec {
            kind: GenKind::Planted {
                pattern_len: 100,
                copies: 5,
                noise_std: 0.0,
                amplitude: 3.0,
            },
            length: 2000,
            seed: 5,
            anomaly: None,
        };
        let g = generate(&spec).unwrap();
        assert_eq!(g.planted_offsets.len(), 5);
        for pair in g.planted_offsets.windows(2) {
            assert!(pair[0] + 100 <= pair[1]);
        }
    }

    #[test]
    fn impossible_plants_rejected() {
        let spec = GenSpec {
            kind: GenKind::Planted {
                pattern_len: 400,
                copies: 3,
                noise_std: 0.0,
                amplitude: 3.0,
            },
            length: 1000,
            seed: 5,
            anomaly: None,
        };
        assert!(matches!(generate(&spec), Err(Error::PlantsDoNotFit { .. })));
    }

    #[test]
    fn sine_is_pure() {
        let spec = GenSpec {
            kind: GenKind::Sine { period: 64.0 },
            length: 256,
            seed: 0,
            anomaly: None,
        };
        let g = generate(&spec).unwrap();
        // One full period apart, values repeat.
        for t in 0..192 {
            assert!((g.values[t] - g.values[t + 64]).abs() < 1e-9);
        }
    }

    #[test]
    fn queries_are_deterministic_and_sized() {
        let d = DataSeries::new(
            crate::SeriesId(0),
            generate(&GenSpec {
                kind: GenKind::RandomWalk,
                length: 2000,
                seed: 1,
                anomaly: None,
            })
            .unwrap()
            .values,
        )
        .unwrap();
        let a = make_queries(&d, 100, 64, 128, 0.1, 7).unwrap();
        let b = make_queries(&d, 100, 64, 128, 0.1, 7).unwrap();
        assert_eq!(a.sources, b.sources);
        assert_eq!(a.queries.len(), 100);
        for (qa, qb) in a.queries.iter().zip(b.queries.iter()) {
            assert_eq!(qa, qb);
        }
        for (q, s) in a.queries.iter().zip(a.sources.iter()) {
            assert_eq!(q.len(), s.length);
            assert!(s.length >= 64 && s.length <= 128);
        }
    }

    #[test]
    fn zero_noise_queries_match_source() {
        let d = DataSeries::new(
            crate::SeriesId(0),
            generate(&GenSpec {
                kind: GenKind::RandomWalk,
                length: 500,
                seed: 2,
                anomaly: None,
            })
            .unwrap()
            .values,
        )
        .unwrap();
        let set = make_queries(&d, 10, 32, 64, 0.0, 3).unwrap();
        for (q, s) in set.queries.iter().zip(set.sources.iter()) {
            assert_eq!(q.as_slice(), d.window(s.offset, s.length));
        }
    }
}
