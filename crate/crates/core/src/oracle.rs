//! Exhaustive cycle enumeration used as ground truth for the motif scorers.
//!
//! The oracle rebuilds adjacency from the raw edge list and walks every
//! ordered tuple of interior nodes, so it shares no code path with
//! [`crate::motif`]. Cost is `O(n^(len-2))`; keep graphs small.

use std::collections::HashSet;

use crate::error::Result;
use crate::graph::{Layer, LayeredGraph, NodeId};

/// Where the interior nodes of a cycle `a – b – x1 – … – xk – a` may lie.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionRule {
    /// Every interior node is a weak neighbor of `a`.
    Inside,
    /// The last interior node is a weak neighbor of `a`; the others lie at
    /// weak distance exactly two.
    Outside,
    /// No region restriction beyond the closing edge to `a`.
    Any,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CycleConstraint {
    /// Layer required of the edges not incident to `a`.
    pub layer: Layer,
    pub region: RegionRule,
}

impl CycleConstraint {
    pub const fn strong(region: RegionRule) -> Self {
        CycleConstraint {
            layer: Layer::Strong,
            region,
        }
    }

    pub const fn weak(region: RegionRule) -> Self {
        CycleConstraint {
            layer: Layer::Weak,
            region,
        }
    }
}

struct Sets {
    n: usize,
    weak: HashSet<(u32, u32)>,
    strong: HashSet<(u32, u32)>,
}

impl Sets {
    fn new(g: &LayeredGraph) -> Self {
        let mut weak = HashSet::new();
        let mut strong = HashSet::new();
        for (e, s) in g.edges() {
            for (x, y) in [(e.u.0, e.v.0), (e.v.0, e.u.0)] {
                weak.insert((x, y));
                if s {
                    strong.insert((x, y));
                }
            }
        }
        Sets {
            n: g.node_count(),
            weak,
            strong,
        }
    }

    fn has(&self, layer: Layer, x: u32, y: u32) -> bool {
        match layer {
            Layer::Weak => self.weak.contains(&(x, y)),
            Layer::Strong => self.strong.contains(&(x, y)),
        }
    }

    fn inner(&self, a: u32, v: u32) -> bool {
        self.weak.contains(&(a, v))
    }

    fn frontier(&self, a: u32, v: u32) -> bool {
        v != a && !self.inner(a, v) && (0..self.n as u32).any(|w| self.inner(a, w) && self.weak.contains(&(w, v)))
    }
}

/// Counts cycles of `length` nodes through the weak edge `(a, b)` as ordered
/// interior paths `b → x1 → … → xk` closing back to `a` with a weak edge.
/// Returns 0 when `(a, b)` is not a weak edge.
pub fn oracle_count_cycles(
    g: &LayeredGraph,
    a: NodeId,
    b: NodeId,
    length: usize,
    constraint: CycleConstraint,
) -> Result<u64> {
    g.check_node(a)?;
    g.check_node(b)?;
    assert!((3..=6).contains(&length), "oracle supports cycles of 3 to 6 nodes");
    let sets = Sets::new(g);
    let (a, b) = (a.0, b.0);
    if !sets.inner(a, b) {
        return Ok(0);
    }
    let k = length - 2;
    let mut path = Vec::with_capacity(k);
    Ok(extend(&sets, a, b, k, constraint, &mut path))
}

fn extend(sets: &Sets, a: u32, b: u32, k: usize, c: CycleConstraint, path: &mut Vec<u32>) -> u64 {
    if path.len() == k {
        return u64::from(accept(sets, a, b, c, path));
    }
    let prev = path.last().copied().unwrap_or(b);
    let mut total = 0;
    for x in 0..sets.n as u32 {
        if x == a || x == b || path.contains(&x) || !sets.has(c.layer, prev, x) {
            continue;
        }
        path.push(x);
        total += extend(sets, a, b, k, c, path);
        path.pop();
    }
    total
}

fn accept(sets: &Sets, a: u32, b: u32, c: CycleConstraint, path: &[u32]) -> bool {
    let mut prev = b;
    for &x in path {
        if !sets.has(c.layer, prev, x) {
            return false;
        }
        prev = x;
    }
    let last = *path.last().expect("k >= 1");
    if !sets.weak.contains(&(last, a)) {
        return false;
    }
    match c.region {
        RegionRule::Any => true,
        RegionRule::Inside => path.iter().all(|&x| sets.inner(a, x)),
        RegionRule::Outside => {
            sets.inner(a, last) && path[..path.len() - 1].iter().all(|&x| sets.frontier(a, x))
        }
    }
}

/// Triangles and unordered 4-cycles through every weak edge, by brute force.
pub fn oracle_edge_motifs(g: &LayeredGraph) -> Vec<(NodeId, NodeId, u64, u64)> {
    let sets = Sets::new(g);
    let n = sets.n as u32;
    let mut out = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            if !sets.weak.contains(&(x, y)) {
                continue;
            }
            let tri = (0..n)
                .filter(|&z| z != x && z != y && sets.weak.contains(&(x, z)) && sets.weak.contains(&(y, z)))
                .count() as u64;
            let mut sq = 0;
            for u in 0..n {
                for v in 0..n {
                    let distinct = u != v && u != x && u != y && v != x && v != y;
                    if distinct
                        && sets.weak.contains(&(x, u))
                        && sets.weak.contains(&(u, v))
                        && sets.weak.contains(&(v, y))
                    {
                        sq += 1;
                    }
                }
            }
            out.push((NodeId(x), NodeId(y), tri, sq));
        }
    }
    out
}
