//! HyperLogLog sketches and sketch-based counting of weak-graph squares
//! through the distance-two frontier.
//!
//! For a focal node `a` with weak neighbors `B` and frontier `C`, the weak
//! 4-cycles `a – b – c – b′ – a` with `c ∈ C` through candidate `b` number
//! `Σ_{c ∈ N(b) ∩ C} (|N(c) ∩ B| − 1)`. Each `|N(c) ∩ B|` is estimated by
//! intersecting a sketch of `N(c)` with a sketch of `B`.
//!
//! These counts ignore strong flags: they approximate the weak-graph
//! topology behind the square-outside score, not the labeled score itself.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{LayeredGraph, NodeId};
use crate::motif::{EgoNetwork, Region};
use crate::rng::mix64;

pub const MIN_PRECISION: u8 = 4;
pub const MAX_PRECISION: u8 = 18;
pub const DEFAULT_PRECISION: u8 = 14;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HllSketch {
    precision: u8,
    seed: u64,
    registers: Vec<u8>,
}

impl HllSketch {
    pub fn new(precision: u8, seed: u64) -> Result<Self> {
        if !(MIN_PRECISION..=MAX_PRECISION).contains(&precision) {
            return Err(Error::InvalidPrecision(precision));
        }
        Ok(HllSketch {
            precision,
            seed,
            registers: vec![0; 1 << precision],
        })
    }

    pub fn from_items<I: IntoIterator<Item = u64>>(precision: u8, seed: u64, items: I) -> Result<Self> {
        let mut s = Self::new(precision, seed)?;
        for it in items {
            s.insert(it);
        }
        Ok(s)
    }

    pub fn precision(&self) -> u8 {
        self.precision
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn registers(&self) -> &[u8] {
        &self.registers
    }

    fn hash(&self, item: u64) -> u64 {
        mix64(mix64(item ^ self.seed).wrapping_add(self.seed.rotate_left(29)))
    }

    pub fn insert(&mut self, item: u64) {
        let h = self.hash(item);
        let p = u32::from(self.precision);
        let idx = (h >> (64 - p)) as usize;
        let rest = h << p;
        let max_rank = 64 - p;
        let rank = (rest.leading_zeros() + 1).min(max_rank) as u8;
        let r = &mut self.registers[idx];
        *r = (*r).max(rank);
    }

    pub fn insert_node(&mut self, v: NodeId) {
        self.insert(u64::from(v.0));
    }

    /// Raw HyperLogLog estimate with linear counting for small cardinalities.
    pub fn estimate(&self) -> f64 {
        let m = self.registers.len() as f64;
        let alpha = match self.registers.len() {
            16 => 0.673,
            32 => 0.697,
            64 => 0.709,
            _ => 0.7213 / (1.0 + 1.079 / m),
        };
        let mut sum = 0.0;
        let mut zeros = 0usize;
        for &r in &self.registers {
            sum += (-(f64::from(r))).exp2();
            zeros += usize::from(r == 0);
        }
        let raw = alpha * m * m / sum;
        if raw <= 2.5 * m && zeros > 0 {
            m * (m / zeros as f64).ln()
        } else {
            raw
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.precision != other.precision {
            return Err(Error::IncompatibleSketch(format!(
                "precision {} vs {}",
                self.precision, other.precision
            )));
        }
        if self.seed != other.seed {
            return Err(Error::IncompatibleSketch(format!(
                "hash seed {:#x} vs {:#x}",
                self.seed, other.seed
            )));
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        for (r, &o) in self.registers.iter_mut().zip(&other.registers) {
            *r = (*r).max(o);
        }
        Ok(())
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.merge(other)?;
        Ok(out)
    }

    /// Inclusion–exclusion estimate of `|A ∩ B|`, clamped at 0.
    pub fn intersect_estimate(&self, other: &Self) -> Result<f64> {
        let union = self.union(other)?;
        Ok((self.estimate() + other.estimate() - union.estimate()).max(0.0))
    }
}

/// Overlap (or an estimate of it) between two summaries of the same kind.
pub trait Overlap: Sync {
    fn overlap_with(&self, other: &Self) -> Result<f64>;
}

impl Overlap for HllSketch {
    fn overlap_with(&self, other: &Self) -> Result<f64> {
        self.intersect_estimate(other)
    }
}

/// Exact sets, for checking the sketch path without estimation error.
#[derive(Clone, Debug)]
pub struct ExactSet(BTreeSet<NodeId>);

impl ExactSet {
    pub fn new(items: &[NodeId]) -> Result<Self> {
        Ok(ExactSet(items.iter().copied().collect()))
    }
}

impl Overlap for ExactSet {
    fn overlap_with(&self, other: &Self) -> Result<f64> {
        Ok(self.0.intersection(&other.0).count() as f64)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SketchParams {
    pub precision: u8,
    pub seed: u64,
}

/// Per-candidate `Σ_{c ∈ N(b) ∩ C} max(0, overlap(N(c), B) − 1)`, generic
/// over the set summary.
pub fn square_count_with<S, F>(g: &LayeredGraph, a: NodeId, summarize: F) -> Result<Vec<(NodeId, f64)>>
where
    S: Overlap + Send,
    F: Fn(&[NodeId]) -> Result<S> + Sync,
{
    let ego = EgoNetwork::new(g, a)?;
    let inner = summarize(ego.candidates())?;
    let frontier = ego.frontier();
    let frontier_summaries: Vec<S> = frontier
        .par_iter()
        .map(|&c| summarize(g.weak(c)))
        .collect::<Result<_>>()?;
    let mut per_frontier = vec![0.0; g.node_count()];
    for (&c, s) in frontier.iter().zip(&frontier_summaries) {
        per_frontier[c.index()] = (s.overlap_with(&inner)? - 1.0).max(0.0);
    }
    Ok(ego
        .candidates()
        .iter()
        .map(|&b| {
            let total = g
                .weak(b)
                .iter()
                .filter(|&&c| ego.region(c) == Region::Frontier)
                .map(|&c| per_frontier[c.index()])
                .sum();
            (b, total)
        })
        .collect())
}

/// Sketch-based per-candidate counts.
pub fn approx_square_count(g: &LayeredGraph, a: NodeId, params: SketchParams) -> Result<Vec<(NodeId, f64)>> {
    HllSketch::new(params.precision, params.seed)?;
    square_count_with(g, a, |items| {
        HllSketch::from_items(params.precision, params.seed, items.iter().map(|v| u64::from(v.0)))
    })
}

/// The same computation with exact sets in place of sketches.
pub fn exact_set_square_count(g: &LayeredGraph, a: NodeId) -> Result<Vec<(NodeId, f64)>> {
    square_count_with(g, a, ExactSet::new)
}

/// Direct exact count of weak 4-cycles `a – b – c – b′` with `c` in the
/// frontier, for each candidate `b`.
pub fn weak_square_outside_counts(g: &LayeredGraph, a: NodeId) -> Result<Vec<(NodeId, u64)>> {
    let ego = EgoNetwork::new(g, a)?;
    Ok(ego
        .candidates()
        .iter()
        .map(|&b| {
            let mut total = 0u64;
            for &c in g.weak(b) {
                if ego.region(c) != Region::Frontier {
                    continue;
                }
                total += g
                    .weak(c)
                    .iter()
                    .filter(|&&y| y != b && ego.region(y) == Region::Inner)
                    .count() as u64;
            }
            (b, total)
        })
        .collect())
}
