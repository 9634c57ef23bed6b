//! Shared result table: one row schema for motifs, discords and k-NN hits,
//! emitted as CSV or JSON by both the engines and the oracles.

use serde::{Deserialize, Serialize};

use crate::mad::{DiscordEntry, MotifEntry};
use crate::ulisse::Hit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultKind {
    Motif,
    Discord,
    Knn,
}

impl std::fmt::Display for ResultKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ResultKind::Motif => "motif",
            ResultKind::Discord => "discord",
            ResultKind::Knn => "knn",
        })
    }
}

/// One row of the shared result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub length: usize,
    pub kind: ResultKind,
    pub rank: usize,
    /// Neighbor depth for discords; 0 otherwise.
    pub m: usize,
    pub offset_a: usize,
    /// Second offset for motif pairs; series id for k-NN hits; absent for
    /// discords.
    pub offset_b: Option<usize>,
    pub distance: f64,
    pub normalized_distance: f64,
}

pub fn rows_from_motifs(motifs: &[MotifEntry]) -> Vec<ResultRow> {
    motifs
        .iter()
        .map(|m| ResultRow {
            length: m.length,
            kind: ResultKind::Motif,
            rank: 1,
            m: 0,
            offset_a: m.offset_a,
            offset_b: Some(m.offset_b),
            distance: m.distance,
            normalized_distance: m.normalized_distance,
        })
        .collect()
}

pub fn rows_from_discords(discords: &[DiscordEntry]) -> Vec<ResultRow> {
    discords
        .iter()
        .map(|e| ResultRow {
            length: e.length,
            kind: ResultKind::Discord,
            rank: e.rank,
            m: e.m,
            offset_a: e.offset,
            offset_b: None,
            distance: e.distance,
            normalized_distance: e.normalized_distance,
        })
        .collect()
}

pub fn rows_from_hits(hits: &[Hit]) -> Vec<ResultRow> {
    hits.iter()
        .enumerate()
        .map(|(i, h)| ResultRow {
            length: h.subsequence.length,
            kind: ResultKind::Knn,
            rank: i + 1,
            m: 0,
            offset_a: h.subsequence.offset,
            offset_b: Some(h.subsequence.series.0 as usize),
            distance: h.distance,
            normalized_distance: h.distance / (h.subsequence.length as f64).sqrt(),
        })
        .collect()
}

pub const CSV_HEADER: &str =
    "length,kind,rank,m,offset_a,offset_b,distance,normalized_distance";

/// Renders rows as CSV. Floats use the shortest round-trip representation,
/// so identical results are byte-identical.
pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let offset_b = r.offset_b.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.length, r.kind, r.rank, r.m, r.offset_a, offset_b, r.distance, r.normalized_distance
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_shape() {
        let rows = vec![ResultRow {
            length: 64,
            kind: ResultKind::Discord,
            rank: 1,
            m: 2,
            offset_a: 10,
            offset_b: None,
            distance: 1.5,
            normalized_distance: 0.1875,
        }];
        let csv = to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(lines.next().unwrap(), "64,discord,1,2,10,,1.5,0.1875");
    }
}
