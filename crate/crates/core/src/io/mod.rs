//! Dataset ingestion and persistence, synthetic generation, and query
//! extraction.

pub mod dataset;
pub mod gen;

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::series::SeriesCollection;

pub use dataset::{
    collection_digest, read_csv_series, read_dataset, write_csv_series, write_dataset,
};
pub use gen::{
    generate, make_queries, AnomalySpec, GenKind, GenSpec, GeneratedSeries, QuerySet, QuerySource,
};

/// Sidecar path for a query file: `<stem>.queries.json` next to the data.
pub fn query_sidecar_path(data_path: &Path) -> PathBuf {
    let stem = data_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "queries".to_string());
    data_path.with_file_name(format!("{stem}.queries.json"))
}

/// Writes a query set: the queries as a dataset file (one series per query)
/// plus a JSON sidecar recording seed, noise, and source positions.
pub fn write_queries(data_path: &Path, set: &QuerySet) -> Result<()> {
    let collection = SeriesCollection::from_values(set.queries.clone())?;
    write_dataset(data_path, &collection)?;
    let sidecar = query_sidecar_path(data_path);
    std::fs::write(&sidecar, serde_json::to_vec_pretty(set)?)?;
    Ok(())
}

pub fn read_queries(data_path: &Path) -> Result<QuerySet> {
    let collection = read_dataset(data_path)?;
    let sidecar = query_sidecar_path(data_path);
    let mut set: QuerySet = serde_json::from_slice(&std::fs::read(&sidecar)?)?;
    set.queries = collection.iter().map(|d| d.values().to_vec()).collect();
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::gen::{generate, make_queries, GenKind, GenSpec};
    use crate::series::DataSeries;

    #[test]
    fn query_files_round_trip() {
        let d = DataSeries::new(
            crate::SeriesId(0),
            generate(&GenSpec {
                kind: GenKind::RandomWalk,
                length: 800,
                seed: 4,
                anomaly: None,
            })
            .unwrap()
            .values,
        )
        .unwrap();
        let set = make_queries(&d, 7, 32, 64, 0.05, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.usds");
        write_queries(&path, &set).unwrap();
        let loaded = read_queries(&path).unwrap();
        assert_eq!(loaded.seed, set.seed);
        assert_eq!(loaded.sources, set.sources);
        assert_eq!(loaded.queries.len(), set.queries.len());
        for (a, b) in loaded.queries.iter().zip(set.queries.iter()) {
            assert_eq!(a, b);
        }
    }
}
