//! Index file format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "ULSE" | version u32 | lmin u64 | lmax u64 | segment u64
//! | alphabet u32 | gamma u64 | mode u8 | leaf_capacity u32
//! | dataset digest [u8; 32] | node count u64 | pre-order node dump
//! ```
//!
//! Node dump: tag u8 (0 leaf, 1 internal), routing bits u8 per segment,
//! merged envelope (ndims u32, lo u16 x ndims, hi u16 x ndims), then
//! leaf: entry count u32 and per entry (ndims u32, lo, hi, series u32,
//! first u64, last u64); internal: split segment u32, split bit u8, child
//! mask u8, then present children in order. Raw data stays in the dataset
//! file; the digest is re-checked against the collection on use.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::SaxWord;
use crate::ulisse::envelope::UEnvelope;
use crate::ulisse::tree::{InternalNode, LeafNode, Node, NodeEnvelope, NodeMeta};
use crate::ulisse::{IndexParams, Mode, SeriesCollection, UlisseIndex};
use crate::SeriesId;

const MAGIC: [u8; 4] = *b"ULSE";
const VERSION: u32 = 1;

impl UlisseIndex {
    /// Serializes the tree to `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        let p = self.params();
        w.write_all(&(p.lmin as u64).to_le_bytes())?;
        w.write_all(&(p.lmax as u64).to_le_bytes())?;
        w.write_all(&(p.segment_length as u64).to_le_bytes())?;
        w.write_all(&(p.alphabet_size as u32).to_le_bytes())?;
        w.write_all(&(p.gamma as u64).to_le_bytes())?;
        w.write_all(&[match p.mode {
            Mode::Raw => 0u8,
            Mode::ZNormalized => 1u8,
        }])?;
        w.write_all(&(p.leaf_capacity as u32).to_le_bytes())?;
        w.write_all(self.dataset_digest())?;
        w.write_all(&u64::from(self.node_count()).to_le_bytes())?;
        write_node(&mut w, self.root())?;
        w.flush()?;
        Ok(())
    }

    /// Loads an index; the matching collection must be supplied again at
    /// query time and is checked against the stored digest.
    pub fn load(path: &Path) -> Result<UlisseIndex> {
        let mut r = Reader {
            inner: BufReader::new(File::open(path)?),
            pos: 0,
        };
        let magic = r.bytes::<4>("magic")?;
        if magic != MAGIC {
            return Err(Error::BadMagic {
                at: 0,
                expected: MAGIC,
            });
        }
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(Error::BadVersion { version });
        }
        let lmin = r.u64("lmin")? as usize;
        let lmax = r.u64("lmax")? as usize;
        let segment_length = r.u64("segment length")? as usize;
        let alphabet_size = r.u32("alphabet")? as usize;
        let gamma = r.u64("gamma")? as usize;
        let mode = match r.u8("mode")? {
            0 => Mode::Raw,
            1 => Mode::ZNormalized,
            other => {
                return Err(Error::Corrupt {
                    at: r.pos - 1,
                    what: format!("unknown mode tag {other}"),
                })
            }
        };
        let leaf_capacity = r.u32("leaf capacity")? as usize;
        let mut digest = [0u8; 32];
        r.fill(&mut digest, "digest")?;
        let node_count = r.u64("node count")?;
        let params = IndexParams {
            lmin,
            lmax,
            segment_length,
            alphabet_size,
            gamma,
            mode,
            leaf_capacity,
        };
        let root = read_node(&mut r, &params)?;
        let index = UlisseIndex::from_parts(params, root, digest)?;
        if u64::from(index.node_count()) != node_count {
            return Err(Error::Corrupt {
                at: r.pos,
                what: format!(
                    "node count mismatch: header says {node_count}, dump has {}",
                    index.node_count()
                ),
            });
        }
        Ok(index)
    }

    /// Convenience: verify the digest, then save.
    pub fn save_for(&self, path: &Path, collection: &SeriesCollection) -> Result<()> {
        self.check_collection(collection)?;
        self.save(path)
    }
}

fn write_node<W: Write>(w: &mut W, node: &Node) -> Result<()> {
    match node {
        Node::Leaf(leaf) => {
            w.write_all(&[0u8])?;
            w.write_all(&leaf.bits)?;
            write_env(w, &leaf.env)?;
            w.write_all(&(leaf.entries.len() as u32).to_le_bytes())?;
            for e in &leaf.entries {
                w.write_all(&(e.ndims() as u32).to_le_bytes())?;
                for &s in &e.isax_lower.symbols {
                    w.write_all(&s.to_le_bytes())?;
                }
                for &s in &e.isax_upper.symbols {
                    w.write_all(&s.to_le_bytes())?;
                }
                w.write_all(&e.series.0.to_le_bytes())?;
                w.write_all(&(e.first_offset as u64).to_le_bytes())?;
                w.write_all(&(e.last_offset as u64).to_le_bytes())?;
            }
        }
        Node::Internal(i) => {
            w.write_all(&[1u8])?;
            w.write_all(&i.bits)?;
            write_env(w, &i.env)?;
            w.write_all(&(i.split_segment as u32).to_le_bytes())?;
            w.write_all(&[i.split_bit])?;
            let mask = i.children[0].is_some() as u8 | ((i.children[1].is_some() as u8) << 1);
            w.write_all(&[mask])?;
            for child in i.children.iter().flatten() {
                write_node(w, child)?;
            }
        }
    }
    Ok(())
}

fn write_env<W: Write>(w: &mut W, env: &NodeEnvelope) -> Result<()> {
    w.write_all(&(env.ndims() as u32).to_le_bytes())?;
    for &s in &env.lo {
        w.write_all(&s.to_le_bytes())?;
    }
    for &s in &env.hi {
        w.write_all(&s.to_le_bytes())?;
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
    pos: u64,
}

impl<R: Read> Reader<R> {
    fn fill(&mut self, buf: &mut [u8], what: &'static str) -> Result<()> {
        let at = self.pos;
        self.inner
            .read_exact(buf)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::UnexpectedEof => Error::Truncated { at, what },
                _ => Error::Io(e),
            })?;
        self.pos += buf.len() as u64;
        Ok(())
    }

    fn bytes<const N: usize>(&mut self, what: &'static str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.fill(&mut buf, what)?;
        Ok(buf)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.bytes::<1>(what)?[0])
    }

    fn u16(&mut self, what: &'static str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes(what)?))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(what)?))
    }
}

fn read_env<R: Read>(r: &mut Reader<R>, params: &IndexParams) -> Result<NodeEnvelope> {
    let ndims = r.u32("envelope dims")? as usize;
    if ndims > params.num_segments() {
        return Err(Error::Corrupt {
            at: r.pos - 4,
            what: format!("envelope dims {ndims} exceed {}", params.num_segments()),
        });
    }
    let mut lo = Vec::with_capacity(ndims);
    let mut hi = Vec::with_capacity(ndims);
    for _ in 0..ndims {
        lo.push(r.u16("envelope lower symbol")?);
    }
    for _ in 0..ndims {
        hi.push(r.u16("envelope upper symbol")?);
    }
    Ok(NodeEnvelope { lo, hi })
}

fn read_node<R: Read>(r: &mut Reader<R>, params: &IndexParams) -> Result<Node> {
    let tag = r.u8("node tag")?;
    let mut bits = vec![0u8; params.num_segments()];
    r.fill(&mut bits, "routing bits")?;
    let env = read_env(r, params)?;
    match tag {
        0 => {
            let count = r.u32("leaf entry count")? as usize;
            let mut entries = Vec::with_capacity(count.min(1 << 20));
            for _ in 0..count {
                let ndims = r.u32("entry dims")? as usize;
                if ndims > params.num_segments() {
                    return Err(Error::Corrupt {
                        at: r.pos - 4,
                        what: format!("entry dims {ndims} exceed {}", params.num_segments()),
                    });
                }
                let mut lower = Vec::with_capacity(ndims);
                let mut upper = Vec::with_capacity(ndims);
                for _ in 0..ndims {
                    lower.push(r.u16("entry lower symbol")?);
                }
                for _ in 0..ndims {
                    upper.push(r.u16("entry upper symbol")?);
                }
                let series = SeriesId(r.u32("entry series id")?);
                let first_offset = r.u64("entry first offset")? as usize;
                let last_offset = r.u64("entry last offset")? as usize;
                if last_offset < first_offset {
                    return Err(Error::Corrupt {
                        at: r.pos - 8,
                        what: format!("entry offsets {first_offset}..{last_offset} inverted"),
                    });
                }
                entries.push(UEnvelope {
                    isax_lower: SaxWord {
                        symbols: lower,
                        alphabet_size: params.alphabet_size,
                    },
                    isax_upper: SaxWord {
                        symbols: upper,
                        alphabet_size: params.alphabet_size,
                    },
                    series,
                    first_offset,
                    last_offset,
                });
            }
            Ok(Node::Leaf(LeafNode {
                env,
                bits,
                entries,
                meta: NodeMeta::default(),
            }))
        }
        1 => {
            let split_segment = r.u32("split segment")? as usize;
            let split_bit = r.u8("split bit")?;
            let mask = r.u8("child mask")?;
            if mask == 0 || mask > 3 {
                return Err(Error::Corrupt {
                    at: r.pos - 1,
                    what: format!("invalid child mask {mask}"),
                });
            }
            let mut children: [Option<Box<Node>>; 2] = [None, None];
            for (b, slot) in children.iter_mut().enumerate() {
                if mask & (1 << b) != 0 {
                    *slot = Some(Box::new(read_node(r, params)?));
                }
            }
            Ok(Node::Internal(InternalNode {
                env,
                bits,
                split_segment,
                split_bit,
                children,
                meta: NodeMeta::default(),
            }))
        }
        other => Err(Error::Corrupt {
            at: r.pos - 1,
            what: format!("unknown node tag {other}"),
        }),
    }
}
