//! Layered graph: a weak-tie graph whose edges carry a strong-tie flag.
//!
//! Storage is CSR over the weak graph with a parallel flag array, plus a
//! second CSR holding only the strong edges. Neighbor lists are sorted and
//! duplicate-free; the structure is immutable once built.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(v: usize) -> Self {
        NodeId(u32::try_from(v).expect("node index exceeds u32"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Unordered edge, stored with `u < v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    pub u: NodeId,
    pub v: NodeId,
}

impl EdgeKey {
    /// Returns `None` for a self-loop.
    pub fn new(a: NodeId, b: NodeId) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(EdgeKey { u: a, v: b }),
            std::cmp::Ordering::Greater => Some(EdgeKey { u: b, v: a }),
            std::cmp::Ordering::Equal => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    Weak,
    Strong,
}

/// What to do with strong edges that are missing from the weak graph and
/// with self-loops.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StrongPolicy {
    #[default]
    Drop,
    Strict,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub dropped_strong: usize,
    pub dropped_self_loops: usize,
    pub merged_duplicates: usize,
}

#[derive(Clone, Debug)]
pub struct Loaded {
    pub graph: LayeredGraph,
    pub stats: LoadStats,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayeredGraph {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    strong_flags: Vec<bool>,
    strong_offsets: Vec<usize>,
    strong_targets: Vec<NodeId>,
    external_ids: Vec<u64>,
}

impl LayeredGraph {
    /// Builds a graph over nodes `0..node_count` from `(u, v, strong)`
    /// triples. Duplicates merge (strong wins); self-loops are skipped.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (NodeId, NodeId, bool)>,
    {
        let mut merged: BTreeMap<EdgeKey, bool> = BTreeMap::new();
        for (a, b, strong) in edges {
            assert!(
                a.index() < node_count && b.index() < node_count,
                "edge ({a}, {b}) outside 0..{node_count}"
            );
            if let Some(key) = EdgeKey::new(a, b) {
                *merged.entry(key).or_insert(false) |= strong;
            }
        }
        let external_ids = (0..node_count as u64).collect();
        Self::from_merged(node_count, &merged, external_ids)
    }

    fn from_merged(
        node_count: usize,
        merged: &BTreeMap<EdgeKey, bool>,
        external_ids: Vec<u64>,
    ) -> Self {
        let mut degree = vec![0usize; node_count];
        let mut strong_degree = vec![0usize; node_count];
        for (e, &s) in merged {
            degree[e.u.index()] += 1;
            degree[e.v.index()] += 1;
            if s {
                strong_degree[e.u.index()] += 1;
                strong_degree[e.v.index()] += 1;
            }
        }
        let offsets = prefix_sums(&degree);
        let strong_offsets = prefix_sums(&strong_degree);
        let mut targets = vec![NodeId(0); offsets[node_count]];
        let mut strong_flags = vec![false; offsets[node_count]];
        let mut strong_targets = vec![NodeId(0); strong_offsets[node_count]];
        let mut fill = offsets[..node_count].to_vec();
        let mut strong_fill = strong_offsets[..node_count].to_vec();
        // Keys arrive in (u, v) order, which fills every list ascending.
        for (e, &s) in merged {
            for (from, to) in [(e.u, e.v), (e.v, e.u)] {
                let i = from.index();
                targets[fill[i]] = to;
                strong_flags[fill[i]] = s;
                fill[i] += 1;
                if s {
                    strong_targets[strong_fill[i]] = to;
                    strong_fill[i] += 1;
                }
            }
        }
        LayeredGraph {
            offsets,
            targets,
            strong_flags,
            strong_offsets,
            strong_targets,
            external_ids,
        }
    }

    /// Loads a single edge-list file (`u<TAB>v<TAB>label`, label 1 = strong).
    pub fn load(path: impl AsRef<Path>, policy: StrongPolicy) -> Result<Loaded> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut ingest = Ingest::new(policy);
        ingest.read(BufReader::new(file), Source::Combined, path)?;
        ingest.finish()
    }

    /// Loads a weak-graph edge list together with a separate strong-tie edge
    /// list. Strong edges absent from the weak list are dropped and counted
    /// (or rejected under [`StrongPolicy::Strict`]).
    pub fn load_pair(
        weak_path: impl AsRef<Path>,
        strong_path: impl AsRef<Path>,
        policy: StrongPolicy,
    ) -> Result<Loaded> {
        let mut ingest = Ingest::new(policy);
        for (path, source) in [
            (weak_path.as_ref(), Source::Combined),
            (strong_path.as_ref(), Source::StrongOnly),
        ] {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            ingest.read(BufReader::new(file), source, path)?;
        }
        ingest.finish()
    }

    /// Parses the edge-list format from any reader.
    pub fn read_edge_list<R: BufRead>(reader: R, policy: StrongPolicy) -> Result<Loaded> {
        let mut ingest = Ingest::new(policy);
        ingest.read(reader, Source::Combined, Path::new("<reader>"))?;
        ingest.finish()
    }

    /// Writes the edge list using external ids, one line per edge.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (e, strong) in self.edges() {
            writeln!(
                w,
                "{}\t{}\t{}",
                self.external_ids[e.u.index()],
                self.external_ids[e.v.index()],
                u8::from(strong)
            )?;
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn weak_edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn strong_edge_count(&self) -> usize {
        self.strong_targets.len() / 2
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v.index() < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                node: v.index(),
                node_count: self.node_count(),
            })
        }
    }

    /// Sorted neighbor list in the requested layer.
    pub fn neighbors(&self, v: NodeId, layer: Layer) -> Result<&[NodeId]> {
        self.check_node(v)?;
        Ok(match layer {
            Layer::Weak => self.weak(v),
            Layer::Strong => self.strong(v),
        })
    }

    /// Unchecked weak neighbors; panics if `v` is out of range.
    #[inline]
    pub fn weak(&self, v: NodeId) -> &[NodeId] {
        let i = v.index();
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn strong(&self, v: NodeId) -> &[NodeId] {
        let i = v.index();
        &self.strong_targets[self.strong_offsets[i]..self.strong_offsets[i + 1]]
    }

    /// Weak neighbors of `v` zipped with their strong flags.
    pub fn weak_with_flags(&self, v: NodeId) -> impl Iterator<Item = (NodeId, bool)> + '_ {
        let i = v.index();
        let r = self.offsets[i]..self.offsets[i + 1];
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.strong_flags[r].iter().copied())
    }

    #[inline]
    pub fn weak_degree(&self, v: NodeId) -> usize {
        let i = v.index();
        self.offsets[i + 1] - self.offsets[i]
    }

    #[inline]
    pub fn strong_degree(&self, v: NodeId) -> usize {
        let i = v.index();
        self.strong_offsets[i + 1] - self.strong_offsets[i]
    }

    pub fn degree(&self, v: NodeId, layer: Layer) -> Result<usize> {
        self.check_node(v)?;
        Ok(match layer {
            Layer::Weak => self.weak_degree(v),
            Layer::Strong => self.strong_degree(v),
        })
    }

    #[inline]
    pub fn is_weak_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.weak(u).binary_search(&v).is_ok()
    }

    #[inline]
    pub fn is_strong_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.strong(u).binary_search(&v).is_ok()
    }

    /// Nodes at weak-graph distance exactly two from `a`, ascending.
    pub fn frontier_two(&self, a: NodeId) -> Result<Vec<NodeId>> {
        self.check_node(a)?;
        let mut seen = vec![false; self.node_count()];
        seen[a.index()] = true;
        for &b in self.weak(a) {
            seen[b.index()] = true;
        }
        let mut out = Vec::new();
        for &b in self.weak(a) {
            for &c in self.weak(b) {
                if !seen[c.index()] {
                    seen[c.index()] = true;
                    out.push(c);
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// All weak edges with their strong flag, ordered by `(u, v)`.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeKey, bool)> + '_ {
        (0..self.node_count()).flat_map(move |i| {
            let u = NodeId::from(i);
            self.weak_with_flags(u)
                .filter(move |&(v, _)| v > u)
                .map(move |(v, s)| (EdgeKey { u, v }, s))
        })
    }

    pub fn external_id(&self, v: NodeId) -> u64 {
        self.external_ids[v.index()]
    }

    pub fn external_ids(&self) -> &[u64] {
        &self.external_ids
    }

    /// Dense id for an external label.
    pub fn lookup_external(&self, ext: u64) -> Result<NodeId> {
        self.external_ids
            .binary_search(&ext)
            .map(NodeId::from)
            .map_err(|_| Error::UnknownExternalId(ext))
    }

    /// Copy of the graph where every strong edge touching `nodes` is
    /// demoted to weak-only. Weak edges are unchanged.
    pub fn with_strong_cleared(&self, nodes: &[NodeId]) -> LayeredGraph {
        let mut mask = vec![false; self.node_count()];
        for &v in nodes {
            mask[v.index()] = true;
        }
        self.rebuild(|e, s| s && !mask[e.u.index()] && !mask[e.v.index()])
    }

    /// Copy of the graph with the strong flag of `edge` set (the weak edge
    /// must already exist).
    pub fn with_strong_set(&self, edge: EdgeKey) -> LayeredGraph {
        debug_assert!(self.is_weak_edge(edge.u, edge.v));
        self.rebuild(|e, s| s || e == edge)
    }

    fn rebuild(&self, mut flag: impl FnMut(EdgeKey, bool) -> bool) -> LayeredGraph {
        let merged: BTreeMap<EdgeKey, bool> = self.edges().map(|(e, s)| (e, flag(e, s))).collect();
        Self::from_merged(self.node_count(), &merged, self.external_ids.clone())
    }

    /// Verifies symmetry, sortedness and strong ⊆ weak. Intended for tests
    /// and post-load sanity checks.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for i in 0..self.node_count() {
            let u = NodeId::from(i);
            let weak = self.weak(u);
            if weak.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("weak list of {u} not strictly sorted"));
            }
            let strong = self.strong(u);
            if strong.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("strong list of {u} not strictly sorted"));
            }
            for &v in weak {
                if v == u {
                    return Err(format!("self-loop at {u}"));
                }
                if !self.is_weak_edge(v, u) {
                    return Err(format!("asymmetric weak edge {u}-{v}"));
                }
            }
            for &v in strong {
                if !self.is_weak_edge(u, v) {
                    return Err(format!("strong edge {u}-{v} missing from weak graph"));
                }
                if !self.is_strong_edge(v, u) {
                    return Err(format!("asymmetric strong edge {u}-{v}"));
                }
            }
            let flagged = self.weak_with_flags(u).filter(|&(_, s)| s).count();
            if flagged != strong.len() {
                return Err(format!("strong flags disagree with strong list at {u}"));
            }
        }
        Ok(())
    }
}

fn prefix_sums(counts: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(counts.len() + 1);
    let mut acc = 0;
    out.push(0);
    for &c in counts {
        acc += c;
        out.push(acc);
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Source {
    /// Label 0 = weak only, label 1 = strong (and therefore weak).
    Combined,
    /// Every line is a strong-tie report; must be label 1.
    StrongOnly,
}

struct Ingest {
    policy: StrongPolicy,
    weak: BTreeMap<(u64, u64), bool>,
    strong_reports: Vec<(usize, u64, u64)>,
    stats: LoadStats,
}

impl Ingest {
    fn new(policy: StrongPolicy) -> Self {
        Ingest {
            policy,
            weak: BTreeMap::new(),
            strong_reports: Vec::new(),
            stats: LoadStats::default(),
        }
    }

    fn read<R: BufRead>(&mut self, reader: R, source: Source, path: &Path) -> Result<()> {
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            let u = parse_id(fields[0], lineno)?;
            let v = parse_id(fields[1], lineno)?;
            let strong = match fields[2].trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("bad label {other:?} (expected 0 or 1)"),
                    })
                }
            };
            if u == v {
                match self.policy {
                    StrongPolicy::Strict => return Err(Error::SelfLoop { line: lineno, node: u }),
                    StrongPolicy::Drop => {
                        self.stats.dropped_self_loops += 1;
                        continue;
                    }
                }
            }
            let key = (u.min(v), u.max(v));
            match source {
                Source::Combined => {
                    use std::collections::btree_map::Entry;
                    match self.weak.entry(key) {
                        Entry::Vacant(slot) => {
                            slot.insert(strong);
                        }
                        Entry::Occupied(mut slot) => {
                            self.stats.merged_duplicates += 1;
                            *slot.get_mut() |= strong;
                        }
                    }
                }
                Source::StrongOnly => {
                    if !strong {
                        return Err(Error::Parse {
                            line: lineno,
                            message: "strong edge list must use label 1".into(),
                        });
                    }
                    self.strong_reports.push((lineno, key.0, key.1));
                }
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<Loaded> {
        for (line, u, v) in std::mem::take(&mut self.strong_reports) {
            match self.weak.get_mut(&(u, v)) {
                Some(flag) => *flag = true,
                None => match self.policy {
                    StrongPolicy::Strict => return Err(Error::StrongNotWeak { line, u, v }),
                    StrongPolicy::Drop => self.stats.dropped_strong += 1,
                },
            }
        }
        let mut ids: Vec<u64> = self.weak.keys().flat_map(|&(u, v)| [u, v]).collect();
        ids.sort_unstable();
        ids.dedup();
        let dense = |x: u64| NodeId::from(ids.binary_search(&x).expect("id collected above"));
        let merged: BTreeMap<EdgeKey, bool> = self
            .weak
            .iter()
            .map(|(&(u, v), &s)| (EdgeKey::new(dense(u), dense(v)).expect("no self-loops"), s))
            .collect();
        let graph = LayeredGraph::from_merged(ids.len(), &merged, ids);
        Ok(Loaded {
            graph,
            stats: self.stats,
        })
    }
}

fn parse_id(field: &str, line: usize) -> Result<u64> {
    field.trim().parse::<u64>().map_err(|_| Error::Parse {
        line,
        message: format!("node id {field:?} is not a non-negative integer"),
    })
}
