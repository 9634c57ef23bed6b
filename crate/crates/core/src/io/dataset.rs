//! Dataset persistence.
//!
//! Binary layout (little-endian throughout):
//!
//! ```text
//! magic "USDS" | version u32 | series count u64 | length u64 per series
//! | payload: concatenated IEEE-754 f64 values
//! ```
//!
//! CSV import reads one series per file, one decimal literal per line, with
//! an optional non-numeric header line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::series::SeriesCollection;

const MAGIC: [u8; 4] = *b"USDS";
const VERSION: u32 = 1;

/// SHA-256 over per-series lengths and raw value bytes; identifies the data
/// an index was built over.
pub fn collection_digest(collection: &SeriesCollection) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for d in collection.iter() {
        hasher.update((d.len() as u64).to_le_bytes());
        for v in d.values() {
            hasher.update(v.to_le_bytes());
        }
    }
    hasher.finalize().into()
}

pub fn write_dataset(path: &Path, collection: &SeriesCollection) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(collection.len() as u64).to_le_bytes())?;
    for d in collection.iter() {
        w.write_all(&(d.len() as u64).to_le_bytes())?;
    }
    for d in collection.iter() {
        for v in d.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<SeriesCollection> {
    let mut r = BufReader::new(File::open(path)?);
    let mut pos = 0u64;
    let mut read = |buf: &mut [u8], what: &'static str| -> Result<()> {
        r.read_exact(buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Truncated { at: pos, what },
            _ => Error::Io(e),
        })?;
        pos += buf.len() as u64;
        Ok(())
    };
    let mut magic = [0u8; 4];
    read(&mut magic, "magic")?;
    if magic != MAGIC {
        return Err(Error::BadMagic {
            at: 0,
            expected: MAGIC,
        });
    }
    let mut buf4 = [0u8; 4];
    read(&mut buf4, "version")?;
    let version = u32::from_le_bytes(buf4);
    if version != VERSION {
        return Err(Error::BadVersion { version });
    }
    let mut buf8 = [0u8; 8];
    read(&mut buf8, "series count")?;
    let count = u64::from_le_bytes(buf8) as usize;
    let mut lengths = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        read(&mut buf8, "series length")?;
        lengths.push(u64::from_le_bytes(buf8) as usize);
    }
    let mut all = Vec::with_capacity(count.min(1 << 20));
    for len in lengths {
        let mut values = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            read(&mut buf8, "payload value")?;
            values.push(f64::from_le_bytes(buf8));
        }
        all.push(values);
    }
    // Reject trailing garbage so the declared lengths fully account for
    // the payload.
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => {}
        _ => {
            return Err(Error::Corrupt {
                at: pos,
                what: "trailing bytes after declared payload".into(),
            })
        }
    }
    SeriesCollection::from_values(all)
}

/// One series, one value per line; a first line that does not parse as a
/// decimal literal is treated as a header and skipped.
pub fn read_csv_series(path: &Path) -> Result<Vec<f64>> {
    let reader = BufReader::new(File::open(path)?);
    let mut values = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match trimmed.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if lineno == 0 => continue, // header
            Err(_) => {
                return Err(Error::Corrupt {
                    at: lineno as u64,
                    what: format!("line {} is not a number: {trimmed:?}", lineno + 1),
                })
            }
        }
    }
    Ok(values)
}

pub fn write_csv_series(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "value")?;
    for v in values {
        // Shortest representation that parses back to the same f64.
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}
