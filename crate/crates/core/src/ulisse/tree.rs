//! The envelope tree.
//!
//! Internal nodes route on one bit of `iSAX(L)` of one segment; every node
//! carries the merged envelope of its subtree. Leaves hold envelopes that
//! agree on all routing bits taken so far, so they share `iSAX(L)` at the
//! leaf's cardinality, while the leaf's merged upper word loosens with every
//! insertion. An overflowing leaf splits on the segment with the widest
//! aggregate region span by taking one more bit of cardinality there.

use crate::series::{symbol_bit, Breakpoints, SaxWord};
use crate::ulisse::envelope::UEnvelope;

/// Merged per-segment symbol bounds of a subtree. Segment `k` reflects only
/// the member envelopes that cover `k`; envelopes too short for a segment
/// contribute nothing there (and have no candidates at the lengths that
/// would need it).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodeEnvelope {
    pub lo: Vec<u16>,
    pub hi: Vec<u16>,
}

impl NodeEnvelope {
    pub fn ndims(&self) -> usize {
        self.lo.len()
    }

    fn merge_words(&mut self, lower: &SaxWord, upper: &SaxWord) {
        for k in 0..lower.symbols.len() {
            if k == self.lo.len() {
                self.lo.push(lower.symbols[k]);
                self.hi.push(upper.symbols[k]);
            } else {
                self.lo[k] = self.lo[k].min(lower.symbols[k]);
                self.hi[k] = self.hi[k].max(upper.symbols[k]);
            }
        }
    }

    fn merge_envelope(&mut self, env: &UEnvelope) {
        self.merge_words(&env.isax_lower, &env.isax_upper);
    }

    fn from_entries(entries: &[UEnvelope]) -> Self {
        let mut out = NodeEnvelope::default();
        for e in entries {
            out.merge_envelope(e);
        }
        out
    }

    /// Contains check against a child envelope, per common segment.
    pub fn contains(&self, other: &NodeEnvelope) -> bool {
        other.ndims() <= self.ndims()
            && (0..other.ndims()).all(|k| self.lo[k] <= other.lo[k] && other.hi[k] <= self.hi[k])
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NodeMeta {
    pub id: u32,
    pub subtree: u32,
}

#[derive(Debug, Clone)]
pub struct LeafNode {
    pub env: NodeEnvelope,
    /// Routing bits taken per segment on the path to this leaf.
    pub bits: Vec<u8>,
    pub entries: Vec<UEnvelope>,
    pub meta: NodeMeta,
}

#[derive(Debug, Clone)]
pub struct InternalNode {
    pub env: NodeEnvelope,
    /// Routing bits taken per segment on the path to this node.
    pub bits: Vec<u8>,
    pub split_segment: usize,
    /// Bit position within the symbol (0 = most significant).
    pub split_bit: u8,
    pub children: [Option<Box<Node>>; 2],
    pub meta: NodeMeta,
}

#[derive(Debug, Clone)]
pub enum Node {
    Leaf(LeafNode),
    Internal(InternalNode),
}

impl Node {
    pub fn empty_leaf(num_segments: usize) -> Node {
        Node::Leaf(LeafNode {
            env: NodeEnvelope::default(),
            bits: vec![0; num_segments],
            entries: Vec::new(),
            meta: NodeMeta::default(),
        })
    }

    pub fn env(&self) -> &NodeEnvelope {
        match self {
            Node::Leaf(l) => &l.env,
            Node::Internal(i) => &i.env,
        }
    }

    pub fn meta(&self) -> NodeMeta {
        match self {
            Node::Leaf(l) => l.meta,
            Node::Internal(i) => i.meta,
        }
    }

    fn meta_mut(&mut self) -> &mut NodeMeta {
        match self {
            Node::Leaf(l) => &mut l.meta,
            Node::Internal(i) => &mut i.meta,
        }
    }

    /// Routes an envelope to the leaf matching its `iSAX(L)` under the
    /// current split structure, merging node envelopes on the way down, and
    /// splits the receiving leaf if it now exceeds `leaf_capacity`.
    pub fn insert(&mut self, env: UEnvelope, breakpoints: &Breakpoints, leaf_capacity: usize) {
        if let Node::Internal(internal) = self {
            internal.env.merge_envelope(&env);
            let b = routing_bit(
                &env.isax_lower,
                internal.split_segment,
                internal.split_bit,
                breakpoints.symbol_bits(),
            );
            let mut child_bits = internal.bits.clone();
            child_bits[internal.split_segment] += 1;
            internal.children[b as usize]
                .get_or_insert_with(|| {
                    Box::new(Node::Leaf(LeafNode {
                        env: NodeEnvelope::default(),
                        bits: child_bits,
                        entries: Vec::new(),
                        meta: NodeMeta::default(),
                    }))
                })
                .insert(env, breakpoints, leaf_capacity);
            return;
        }
        if let Node::Leaf(leaf) = self {
            leaf.env.merge_envelope(&env);
            leaf.entries.push(env);
        }
        split_to_capacity(self, breakpoints, leaf_capacity);
    }

    /// Assigns pre-order ids and subtree sizes. Run once after construction
    /// or load; queries rely on the ids for deterministic tie-breaking.
    pub fn finalize(&mut self) -> u32 {
        fn walk(node: &mut Node, next: &mut u32) -> u32 {
            node.meta_mut().id = *next;
            *next += 1;
            let count = match node {
                Node::Leaf(_) => 1,
                Node::Internal(i) => {
                    let mut c = 1;
                    for child in i.children.iter_mut().flatten() {
                        c += walk(child, next);
                    }
                    c
                }
            };
            node.meta_mut().subtree = count;
            count
        }
        let mut next = 0;
        walk(self, &mut next)
    }
}

#[inline]
fn routing_bit(word: &SaxWord, segment: usize, bit: u8, bits_per_symbol: u32) -> u8 {
    // Envelopes too short for the split segment route left.
    if segment >= word.symbols.len() {
        0
    } else {
        symbol_bit(word.symbols[segment], bits_per_symbol, bit as u32)
    }
}

/// Splits leaves exceeding capacity, recursively. Kept outside `insert`
/// because splitting consumes the leaf.
pub fn split_to_capacity(node: &mut Node, breakpoints: &Breakpoints, leaf_capacity: usize) {
    match node {
        Node::Internal(internal) => {
            for child in internal.children.iter_mut().flatten() {
                split_to_capacity(child, breakpoints, leaf_capacity);
            }
        }
        Node::Leaf(leaf) => {
            if leaf.entries.len() <= leaf_capacity {
                return;
            }
            if let Some(internal) = split_leaf(leaf, breakpoints) {
                *node = Node::Internal(internal);
                split_to_capacity(node, breakpoints, leaf_capacity);
            }
            // else: cardinality exhausted, the oversized leaf stays.
        }
    }
}

/// One split step: picks the widest-span segment that still has cardinality
/// left, preferring a bit that actually separates the entries; a
/// non-separating bit still makes progress toward deeper bits.
fn split_leaf(leaf: &mut LeafNode, breakpoints: &Breakpoints) -> Option<InternalNode> {
    let bits_per_symbol = breakpoints.symbol_bits();
    let mut candidates: Vec<(f64, usize)> = (0..leaf.env.ndims())
        .filter(|&k| u32::from(leaf.bits[k]) < bits_per_symbol)
        .map(|k| {
            let lo = clamp_low(breakpoints, leaf.env.lo[k]);
            let hi = clamp_high(breakpoints, leaf.env.hi[k]);
            (hi - lo, k)
        })
        .collect();
    if candidates.is_empty() {
        return None;
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let separates = |k: usize, bit: u8| {
        let first = routing_bit(&leaf.entries[0].isax_lower, k, bit, bits_per_symbol);
        leaf.entries
            .iter()
            .any(|e| routing_bit(&e.isax_lower, k, bit, bits_per_symbol) != first)
    };
    let (_, segment) = candidates
        .iter()
        .copied()
        .find(|&(_, k)| separates(k, leaf.bits[k]))
        .unwrap_or(candidates[0]);
    let bit = leaf.bits[segment];

    let mut child_bits = leaf.bits.clone();
    child_bits[segment] += 1;
    let mut sides: [Vec<UEnvelope>; 2] = [Vec::new(), Vec::new()];
    for e in leaf.entries.drain(..) {
        let b = routing_bit(&e.isax_lower, segment, bit, bits_per_symbol);
        sides[b as usize].push(e);
    }
    let children = sides.map(|entries| {
        if entries.is_empty() {
            None
        } else {
            Some(Box::new(Node::Leaf(LeafNode {
                env: NodeEnvelope::from_entries(&entries),
                bits: child_bits.clone(),
                entries,
                meta: NodeMeta::default(),
            })))
        }
    });
    Some(InternalNode {
        env: std::mem::take(&mut leaf.env),
        bits: std::mem::take(&mut leaf.bits),
        split_segment: segment,
        split_bit: bit,
        children,
        meta: NodeMeta::default(),
    })
}

fn clamp_low(bp: &Breakpoints, symbol: u16) -> f64 {
    let v = bp.region_lower(symbol);
    if v.is_finite() {
        v
    } else {
        bp.thresholds()[0] - 1.0
    }
}

fn clamp_high(bp: &Breakpoints, symbol: u16) -> f64 {
    let v = bp.region_upper(symbol);
    if v.is_finite() {
        v
    } else {
        bp.thresholds()[bp.thresholds().len() - 1] + 1.0
    }
}

/// Structural audit: subtree containment, leaf bit-prefix agreement, and
/// global coverage of (series, master offset) pairs. Returns the list of
/// violations, empty when the tree is sound.
pub fn audit(root: &Node, bits_per_symbol: u32) -> Vec<String> {
    let mut problems = Vec::new();
    // (segment, bit, value) constraints accumulated along the path.
    fn walk(
        node: &Node,
        path: &mut Vec<(usize, u8, u8)>,
        bits_per_symbol: u32,
        problems: &mut Vec<String>,
    ) {
        match node {
            Node::Internal(internal) => {
                for (b, child) in internal.children.iter().enumerate() {
                    let Some(child) = child else { continue };
                    if !internal.env.contains(child.env()) {
                        problems.push(format!(
                            "node {} does not contain child {}",
                            internal.meta.id,
                            child.meta().id
                        ));
                    }
                    path.push((internal.split_segment, internal.split_bit, b as u8));
                    walk(child, path, bits_per_symbol, problems);
                    path.pop();
                }
            }
            Node::Leaf(leaf) => {
                for e in &leaf.entries {
                    for &(segment, bit, value) in path.iter() {
                        if routing_bit(&e.isax_lower, segment, bit, bits_per_symbol) != value {
                            problems.push(format!(
                                "leaf {}: entry (series {}, offsets {}..={}) disagrees on segment {} bit {}",
                                leaf.meta.id, e.series, e.first_offset, e.last_offset, segment, bit
                            ));
                        }
                    }
                    // Entry inside the leaf envelope.
                    for k in 0..e.ndims() {
                        if e.isax_lower.symbols[k] < leaf.env.lo[k]
                            || e.isax_upper.symbols[k] > leaf.env.hi[k]
                        {
                            problems.push(format!(
                                "leaf {}: entry outside merged envelope at segment {k}",
                                leaf.meta.id
                            ));
                        }
                    }
                }
            }
        }
    }
    walk(root, &mut Vec::new(), bits_per_symbol, &mut problems);
    problems
}

/// All leaf entries, with a borrow per leaf for coverage checks.
pub fn collect_entries(root: &Node) -> Vec<&UEnvelope> {
    let mut out = Vec::new();
    fn walk<'a>(node: &'a Node, out: &mut Vec<&'a UEnvelope>) {
        match node {
            Node::Leaf(l) => out.extend(l.entries.iter()),
            Node::Internal(i) => {
                for child in i.children.iter().flatten() {
                    walk(child, out);
                }
            }
        }
    }
    walk(root, &mut out);
    out
}
