//! Ego-network scores for the candidate neighbors of a focal node.
//!
//! Given a focal node `a`, its weak neighbors `B` are the candidates and the
//! nodes at weak distance two form the frontier `C`. Cycle-based scores
//! count *ordered interior paths* starting at the candidate `b`, where every
//! edge not incident to `a` must be strong:
//!
//! | score            | interior path          | regions         |
//! |------------------|------------------------|-----------------|
//! | triangle         | b → x                  | x ∈ B           |
//! | square inside    | b → x → y              | x, y ∈ B        |
//! | square outside   | b → x → y              | x ∈ C, y ∈ B    |
//! | pentagon inside  | b → x → y → z          | x, y, z ∈ B     |
//! | pentagon outside | b → x → y → z          | x, y ∈ C, z ∈ B |
//!
//! All nodes on a cycle are distinct. Strong edges incident to the focal
//! node are never consulted, so a focal node scored during training sees
//! the same information as a test node whose strong ties were hidden.
//!
//! Every count reduces to `s(y) = |N_S(y) ∩ B|`, computed once per focal
//! node for the nodes of `B ∪ C`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LayeredGraph, NodeId};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Outside,
    Focal,
    Inner,
    Frontier,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankDirection {
    Minimize,
    Maximize,
}

/// A named column of [`CandidateScores`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScoreKey {
    Degree,
    Embeddedness,
    AdamicAdar,
    H1,
    Triangle,
    SquareInside,
    SquareOutside,
    PentagonInside,
    PentagonOutside,
}

impl ScoreKey {
    pub const ALL: [ScoreKey; 9] = [
        ScoreKey::Degree,
        ScoreKey::Embeddedness,
        ScoreKey::AdamicAdar,
        ScoreKey::H1,
        ScoreKey::Triangle,
        ScoreKey::SquareInside,
        ScoreKey::SquareOutside,
        ScoreKey::PentagonInside,
        ScoreKey::PentagonOutside,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScoreKey::Degree => "degree",
            ScoreKey::Embeddedness => "embeddedness",
            ScoreKey::AdamicAdar => "adamic_adar",
            ScoreKey::H1 => "h1",
            ScoreKey::Triangle => "triangle",
            ScoreKey::SquareInside => "square_in",
            ScoreKey::SquareOutside => "square_out",
            ScoreKey::PentagonInside => "pent_in",
            ScoreKey::PentagonOutside => "pent_out",
        }
    }

    pub fn direction(self) -> RankDirection {
        match self {
            ScoreKey::Degree | ScoreKey::H1 => RankDirection::Minimize,
            _ => RankDirection::Maximize,
        }
    }

    pub fn value(self, s: &CandidateScores) -> f64 {
        match self {
            ScoreKey::Degree => s.degree as f64,
            ScoreKey::Embeddedness => s.embeddedness as f64,
            ScoreKey::AdamicAdar => s.adamic_adar,
            ScoreKey::H1 => s.h1,
            ScoreKey::Triangle => s.triangle as f64,
            ScoreKey::SquareInside => s.square_in as f64,
            ScoreKey::SquareOutside => s.square_out as f64,
            ScoreKey::PentagonInside => s.pent_in as f64,
            ScoreKey::PentagonOutside => s.pent_out as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateScores {
    pub candidate: NodeId,
    pub degree: usize,
    pub embeddedness: usize,
    pub adamic_adar: f64,
    pub h1: f64,
    pub triangle: u64,
    pub square_in: u64,
    pub square_out: u64,
    pub pent_in: u64,
    pub pent_out: u64,
}

/// Per-focal-node context: region labels and strong-into-`B` counts.
pub struct EgoNetwork<'g> {
    graph: &'g LayeredGraph,
    focal: NodeId,
    region: Vec<Region>,
    strong_into_inner: Vec<u32>,
}

impl<'g> EgoNetwork<'g> {
    pub fn new(graph: &'g LayeredGraph, focal: NodeId) -> Result<Self> {
        graph.check_node(focal)?;
        let mut region = vec![Region::Outside; graph.node_count()];
        region[focal.index()] = Region::Focal;
        let inner = graph.weak(focal);
        for &b in inner {
            region[b.index()] = Region::Inner;
        }
        for &b in inner {
            for &c in graph.weak(b) {
                if region[c.index()] == Region::Outside {
                    region[c.index()] = Region::Frontier;
                }
            }
        }
        let mut strong_into_inner = vec![0u32; graph.node_count()];
        // Every strong edge into B is reached from its B endpoint.
        for &b in inner {
            for &y in graph.strong(b) {
                strong_into_inner[y.index()] += 1;
            }
        }
        Ok(EgoNetwork {
            graph,
            focal,
            region,
            strong_into_inner,
        })
    }

    pub fn focal(&self) -> NodeId {
        self.focal
    }

    pub fn graph(&self) -> &'g LayeredGraph {
        self.graph
    }

    /// The candidate set `B`, ascending.
    pub fn candidates(&self) -> &'g [NodeId] {
        self.graph.weak(self.focal)
    }

    pub fn region(&self, v: NodeId) -> Region {
        self.region[v.index()]
    }

    /// Frontier `C`, ascending.
    pub fn frontier(&self) -> Vec<NodeId> {
        (0..self.graph.node_count())
            .map(NodeId::from)
            .filter(|&v| self.region[v.index()] == Region::Frontier)
            .collect()
    }

    fn require_candidate(&self, b: NodeId) -> Result<()> {
        self.graph.check_node(b)?;
        if self.region[b.index()] == Region::Inner {
            Ok(())
        } else {
            Err(Error::NotACandidate {
                focal: self.focal,
                candidate: b,
            })
        }
    }

    #[inline]
    fn s(&self, v: NodeId) -> u64 {
        u64::from(self.strong_into_inner[v.index()])
    }

    #[inline]
    fn in_region(&self, v: NodeId, r: Region) -> bool {
        self.region[v.index()] == r
    }

    pub fn lowest_degree(&self, b: NodeId) -> Result<usize> {
        self.require_candidate(b)?;
        Ok(self.graph.weak_degree(b))
    }

    pub fn embeddedness(&self, b: NodeId) -> Result<usize> {
        self.require_candidate(b)?;
        Ok(self
            .graph
            .weak(b)
            .iter()
            .filter(|&&v| self.in_region(v, Region::Inner))
            .count())
    }

    pub fn adamic_adar(&self, b: NodeId) -> Result<f64> {
        self.require_candidate(b)?;
        Ok(self
            .graph
            .weak(b)
            .iter()
            .filter(|&&v| self.in_region(v, Region::Inner))
            .map(|&v| {
                let d = self.graph.weak_degree(v);
                // a mutual neighbor is adjacent to both a and b
                debug_assert!(d >= 2);
                1.0 / (d as f64).ln()
            })
            // fold from +0.0: an empty f64 sum is -0.0
            .fold(0.0, |acc, x| acc + x))
    }

    /// `d_L(b)` if `b` has a strong tie other than to the focal node, else 0.
    pub fn h1(&self, b: NodeId) -> Result<f64> {
        self.require_candidate(b)?;
        let own = usize::from(self.graph.is_strong_edge(b, self.focal));
        Ok(if self.graph.strong_degree(b) > own {
            self.graph.weak_degree(b) as f64
        } else {
            0.0
        })
    }

    pub fn triangle(&self, b: NodeId) -> Result<u64> {
        self.require_candidate(b)?;
        Ok(self.s(b))
    }

    pub fn square_inside(&self, b: NodeId) -> Result<u64> {
        self.require_candidate(b)?;
        Ok(self.square_via(b, Region::Inner))
    }

    pub fn square_outside(&self, b: NodeId) -> Result<u64> {
        self.require_candidate(b)?;
        Ok(self.square_via(b, Region::Frontier))
    }

    pub fn pentagon_inside(&self, b: NodeId) -> Result<u64> {
        self.require_candidate(b)?;
        let g = self.graph;
        let mut total = 0;
        for &x in g.strong(b) {
            if !self.in_region(x, Region::Inner) {
                continue;
            }
            for &y in g.strong(x) {
                if y == b || !self.in_region(y, Region::Inner) {
                    continue;
                }
                // z ranges over N_S(y) ∩ B minus x and b
                total += self.s(y) - 1 - u64::from(g.is_strong_edge(y, b));
            }
        }
        Ok(total)
    }

    pub fn pentagon_outside(&self, b: NodeId) -> Result<u64> {
        self.require_candidate(b)?;
        let g = self.graph;
        let mut total = 0;
        for &x in g.strong(b) {
            if !self.in_region(x, Region::Frontier) {
                continue;
            }
            for &y in g.strong(x) {
                if !self.in_region(y, Region::Frontier) {
                    continue;
                }
                total += self.s(y) - u64::from(g.is_strong_edge(y, b));
            }
        }
        Ok(total)
    }

    // b → x → y with x in `via` and y ∈ B \ {b}; (x, b) is strong so b is
    // always among the s(x) strong B-neighbors of x.
    fn square_via(&self, b: NodeId, via: Region) -> u64 {
        self.graph
            .strong(b)
            .iter()
            .filter(|&&x| self.in_region(x, via))
            .map(|&x| self.s(x) - 1)
            .sum()
    }

    pub fn scores(&self, b: NodeId) -> Result<CandidateScores> {
        Ok(CandidateScores {
            candidate: b,
            degree: self.lowest_degree(b)?,
            embeddedness: self.embeddedness(b)?,
            adamic_adar: self.adamic_adar(b)?,
            h1: self.h1(b)?,
            triangle: self.triangle(b)?,
            square_in: self.square_inside(b)?,
            square_out: self.square_outside(b)?,
            pent_in: self.pentagon_inside(b)?,
            pent_out: self.pentagon_outside(b)?,
        })
    }

    /// Scores for every candidate, in ascending candidate order.
    pub fn all_scores(&self) -> Vec<CandidateScores> {
        self.candidates()
            .iter()
            .map(|&b| self.scores(b).expect("b is a candidate"))
            .collect()
    }
}

macro_rules! single_score {
    ($(#[$doc:meta])* $name:ident, $method:ident, $ty:ty) => {
        $(#[$doc])*
        pub fn $name(g: &LayeredGraph, a: NodeId, b: NodeId) -> Result<$ty> {
            EgoNetwork::new(g, a)?.$method(b)
        }
    };
}

single_score!(
    /// `d_L(b)`; lower is better.
    score_lowest_degree, lowest_degree, usize);
single_score!(
    /// Mutual weak neighbors of `a` and `b`.
    score_embeddedness, embeddedness, usize);
single_score!(
    /// Sum of `1 / ln d_L(v)` over mutual weak neighbors.
    score_adamic_adar, adamic_adar, f64);
single_score!(score_h1, h1, f64);
single_score!(score_triangle, triangle, u64);
single_score!(score_square_inside, square_inside, u64);
single_score!(score_square_outside, square_outside, u64);
single_score!(score_pentagon_inside, pentagon_inside, u64);
single_score!(score_pentagon_outside, pentagon_outside, u64);

/// Orders candidates by `values` (parallel to `scores`) under `direction`,
/// breaking ties by smaller weak degree and then smaller node id. With
/// `zero_is_worst`, a value of exactly 0 ranks after every non-zero value.
pub fn rank_by_values(
    scores: &[CandidateScores],
    values: &[f64],
    direction: RankDirection,
    zero_is_worst: bool,
) -> Result<Vec<NodeId>> {
    if scores.is_empty() {
        return Err(Error::NoCandidates);
    }
    assert_eq!(scores.len(), values.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| {
        let (vi, vj) = (values[i], values[j]);
        let zero_first = if zero_is_worst {
            (vi == 0.0).cmp(&(vj == 0.0))
        } else {
            std::cmp::Ordering::Equal
        };
        let primary = match direction {
            RankDirection::Minimize => vi.total_cmp(&vj),
            RankDirection::Maximize => vj.total_cmp(&vi),
        };
        zero_first
            .then(primary)
            .then(scores[i].degree.cmp(&scores[j].degree))
            .then(scores[i].candidate.cmp(&scores[j].candidate))
    });
    Ok(order.into_iter().map(|i| scores[i].candidate).collect())
}

/// Ranks candidates by one score column. H1 treats 0 as the worst score.
pub fn rank_candidates(
    scores: &[CandidateScores],
    key: ScoreKey,
    direction: RankDirection,
) -> Result<Vec<NodeId>> {
    let values: Vec<f64> = scores.iter().map(|s| key.value(s)).collect();
    rank_by_values(scores, &values, direction, key == ScoreKey::H1)
}

/// Uniformly random ordering of `B`, seeded by `(seed, a)`.
pub fn random_ranking(g: &LayeredGraph, a: NodeId, seed: u64) -> Result<Vec<NodeId>> {
    g.check_node(a)?;
    let mut order = g.weak(a).to_vec();
    if order.is_empty() {
        return Err(Error::NoCandidates);
    }
    let mut rng = rng::chacha(seed, &[u64::from(a.0)]);
    order.shuffle(&mut rng);
    Ok(order)
}

/// A uniformly random candidate from `B`.
pub fn score_random(g: &LayeredGraph, a: NodeId, seed: u64) -> Result<NodeId> {
    Ok(random_ranking(g, a, seed)?[0])
}
