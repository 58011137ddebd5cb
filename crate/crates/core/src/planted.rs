//! Planted-community graph generators and the triangle/square statistics
//! used to compare the two features.
//!
//! Nodes join one of `⌈n/c⌉` communities uniformly at random (one per type
//! in the double model). Each pair sharing a community of some type is
//! linked with probability `p·q/√c` per shared type; those edges are the
//! strong ties. Pairs sharing no community are linked with probability `r`
//! as weak-only noise. Each pair draws from its own counter-keyed stream,
//! so generation is deterministic and order-independent.

use std::io::Write;

use log::warn;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeKey, LayeredGraph, NodeId};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Single,
    Double,
}

impl ModelKind {
    pub fn types(self) -> usize {
        match self {
            ModelKind::Single => 1,
            ModelKind::Double => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub n: usize,
    pub c: usize,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub model: ModelKind,
    pub seed: u64,
}

impl PlantedConfig {
    /// `n = 4000, c = 30, p = 0.85, q = 1, r = ln n / n`.
    pub fn paper_defaults(model: ModelKind, seed: u64) -> Self {
        let n = 4000;
        PlantedConfig {
            n,
            c: 30,
            p: 0.85,
            q: 1.0,
            r: default_noise(n),
            model,
            seed,
        }
    }

    pub fn rho(&self) -> f64 {
        self.p * self.q
    }

    pub fn within_prob(&self) -> f64 {
        self.rho() / (self.c as f64).sqrt()
    }

    pub fn community_count(&self) -> usize {
        self.n.div_ceil(self.c.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.c == 0 {
            return bad("community size c must be positive".into());
        }
        if self.community_count() < 2 {
            return bad(format!("need at least 2 communities, ⌈n/c⌉ = {}", self.community_count()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p = {} outside [0, 1]", self.p));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return bad(format!("r = {} outside [0, 1]", self.r));
        }
        if !(self.q >= 0.0) || !self.q.is_finite() {
            return bad(format!("q = {} must be a non-negative number", self.q));
        }
        if self.within_prob() > 1.0 {
            return bad(format!("p·q/√c = {} exceeds 1", self.within_prob()));
        }
        Ok(())
    }
}

/// `ln n / n`.
pub fn default_noise(n: usize) -> f64 {
    (n as f64).ln() / n as f64
}

#[derive(Clone, Debug)]
pub struct PlantedGraph {
    pub graph: LayeredGraph,
    /// `communities[t][v]` is node `v`'s community of type `t`.
    pub communities: Vec<Vec<u32>>,
}

impl PlantedGraph {
    pub fn shared_types(&self, x: NodeId, y: NodeId) -> usize {
        self.communities
            .iter()
            .filter(|t| t[x.index()] == t[y.index()])
            .count()
    }

    /// Realized size of every community of type `t`.
    pub fn community_sizes(&self, t: usize, count: usize) -> Vec<usize> {
        let mut sizes = vec![0; count];
        for &k in &self.communities[t] {
            sizes[k as usize] += 1;
        }
        sizes
    }

    /// Largest overlap between a type-1 and a type-2 community.
    pub fn max_cross_type_intersection(&self, count: usize) -> usize {
        if self.communities.len() < 2 {
            return 0;
        }
        let mut cells = vec![0usize; count * count];
        for (&i, &j) in self.communities[0].iter().zip(&self.communities[1]) {
            cells[i as usize * count + j as usize] += 1;
        }
        cells.into_iter().max().unwrap_or(0)
    }

    /// Writes `node<TAB>type<TAB>community_id` lines (types numbered from 1).
    pub fn write_memberships<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for v in 0..self.graph.node_count() {
            for (t, comm) in self.communities.iter().enumerate() {
                writeln!(w, "{}\t{}\t{}", self.graph.external_id(NodeId::from(v)), t + 1, comm[v])?;
            }
        }
        Ok(())
    }
}

const STREAM_ASSIGN: u64 = 0xA551;
const STREAM_CROSS: u64 = 0;
const STREAM_WITHIN: u64 = 1;

fn assign(n: usize, count: usize, seed: u64, t: usize) -> Vec<u32> {
    let mut rng = rng::chacha(seed, &[STREAM_ASSIGN, t as u64]);
    (0..n).map(|_| rng.gen_range(0..count as u32)).collect()
}

fn sample_edges(
    n: usize,
    communities: &[Vec<u32>],
    within: f64,
    cross: f64,
    seed: u64,
) -> LayeredGraph {
    let cross_key = rng::derive(seed, &[STREAM_CROSS]);
    let within_keys: Vec<u64> = (0..communities.len())
        .map(|t| rng::derive(seed, &[STREAM_WITHIN, t as u64]))
        .collect();
    let rows: Vec<Vec<(NodeId, NodeId, bool)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            for j in i + 1..n {
                let mut shared = false;
                let mut strong = false;
                for (t, comm) in communities.iter().enumerate() {
                    if comm[i] == comm[j] {
                        shared = true;
                        strong |= rng::keyed_unit(within_keys[t], i as u64, j as u64) < within;
                    }
                }
                let linked = if shared {
                    strong
                } else {
                    rng::keyed_unit(cross_key, i as u64, j as u64) < cross
                };
                if linked {
                    row.push((NodeId::from(i), NodeId::from(j), strong));
                }
            }
            row
        })
        .collect();
    LayeredGraph::from_edges(n, rows.into_iter().flatten())
}

fn generate_kind(cfg: &PlantedConfig, expected: ModelKind) -> Result<PlantedGraph> {
    if cfg.model != expected {
        return Err(Error::InvalidConfig(format!(
            "expected a {expected:?} model config, got {:?}",
            cfg.model
        )));
    }
    cfg.validate()?;
    let count = cfg.community_count();
    let communities: Vec<Vec<u32>> = (0..cfg.model.types())
        .map(|t| assign(cfg.n, count, cfg.seed, t))
        .collect();
    let graph = sample_edges(cfg.n, &communities, cfg.within_prob(), cfg.r, cfg.seed);
    Ok(PlantedGraph { graph, communities })
}

pub fn gen_single(cfg: &PlantedConfig) -> Result<PlantedGraph> {
    generate_kind(cfg, ModelKind::Single)
}

pub fn gen_double(cfg: &PlantedConfig) -> Result<PlantedGraph> {
    generate_kind(cfg, ModelKind::Double)
}

pub fn generate(cfg: &PlantedConfig) -> Result<PlantedGraph> {
    generate_kind(cfg, cfg.model)
}

/// A single isolated community of exactly `size` nodes, each pair linked
/// (strong) with probability `within`.
pub fn gen_block(size: usize, within: f64, seed: u64) -> Result<PlantedGraph> {
    if !(0.0..=1.0).contains(&within) {
        return Err(Error::InvalidConfig(format!("edge probability {within} outside [0, 1]")));
    }
    let communities = vec![vec![0u32; size]];
    let graph = sample_edges(size, &communities, within, 0.0, seed);
    Ok(PlantedGraph { graph, communities })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeMotifCounts {
    pub edge: EdgeKey,
    pub triangles: u64,
    pub squares: u64,
}

fn intersection_size(a: &[NodeId], b: &[NodeId]) -> u64 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Triangles and unordered 4-cycles through every weak edge, ignoring
/// strong flags. Ordered like [`LayeredGraph::edges`].
pub fn edge_motif_counts(g: &LayeredGraph) -> Vec<EdgeMotifCounts> {
    let rows: Vec<Vec<EdgeMotifCounts>> = (0..g.node_count())
        .into_par_iter()
        .map(|i| {
            let x = NodeId::from(i);
            let nx = g.weak(x);
            nx.iter()
                .filter(|&&y| y > x)
                .map(|&y| {
                    let ny = g.weak(y);
                    let triangles = intersection_size(nx, ny);
                    // u ∈ N(x) \ {y}, v ∈ N(y) ∩ N(u) \ {x}; x is always in
                    // N(y) ∩ N(u), hence the −1.
                    let squares = nx
                        .iter()
                        .filter(|&&u| u != y)
                        .map(|&u| intersection_size(g.weak(u), ny) - 1)
                        .sum();
                    EdgeMotifCounts {
                        edge: EdgeKey { u: x, v: y },
                        triangles,
                        squares,
                    }
                })
                .collect()
        })
        .collect();
    rows.into_iter().flatten().collect()
}

/// `(1 − 5/n)·√c·ρ³`.
pub fn bound_square_within(cfg: &PlantedConfig) -> f64 {
    (1.0 - 5.0 / cfg.n as f64) * (cfg.c as f64).sqrt() * cfg.rho().powi(3)
}

/// `√c·ρ³`.
pub fn square_gap(cfg: &PlantedConfig) -> f64 {
    (cfg.c as f64).sqrt() * cfg.rho().powi(3)
}

/// `1 − (1 − (ρ/√c)²)^(c−2)`; 0 when `c < 3`.
pub fn prob_triangle_within(cfg: &PlantedConfig) -> f64 {
    if cfg.c < 3 {
        warn!("community size {} < 3: triangle probability degenerate, using 0", cfg.c);
        return 0.0;
    }
    let pi = cfg.within_prob();
    1.0 - (1.0 - pi * pi).powi(cfg.c as i32 - 2)
}

/// `1 − (1 − (ρ/√c)³)^((c−2)(c−3))`; 0 when `c < 4`.
pub fn prob_square_within(cfg: &PlantedConfig) -> f64 {
    if cfg.c < 4 {
        warn!("community size {} < 4: square probability degenerate, using 0", cfg.c);
        return 0.0;
    }
    let pi = cfg.within_prob();
    let pairs = ((cfg.c - 2) * (cfg.c - 3)) as f64;
    1.0 - (1.0 - pi.powi(3)).powf(pairs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeClass {
    /// Endpoints share at least one community.
    Within,
    /// Endpoints share no community.
    Cross,
    /// Endpoints share both communities (double model only).
    BothShared,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StratumStats {
    pub class: EdgeClass,
    /// Trials in which the stratum held at least one edge.
    pub trials: usize,
    pub edges: usize,
    pub mean_triangles: f64,
    pub se_triangles: f64,
    pub mean_squares: f64,
    pub se_squares: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub mean: f64,
    pub stderr: f64,
    pub bound: f64,
    /// `true` for `mean < bound`, `false` for `mean > bound`.
    pub upper: bool,
    pub satisfied: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpectationReport {
    pub config: PlantedConfig,
    pub trials: usize,
    pub strata: Vec<StratumStats>,
    pub checks: Vec<BoundCheck>,
    pub notes: Vec<String>,
}

impl ExpectationReport {
    pub fn stratum(&self, class: EdgeClass) -> Option<&StratumStats> {
        self.strata.iter().find(|s| s.class == class)
    }

    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }
}

/// Mean and standard error of the mean (sample sd / √k).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let k = xs.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / k as f64;
    if k == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

/// Monte-Carlo means of Δ and □ per edge class, with each theorem
/// inequality checked at the 3-standard-error level. Standard errors are
/// taken across trials of the per-trial stratum means.
pub fn verify_expectations(cfg: &PlantedConfig, trials: usize) -> Result<ExpectationReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    cfg.validate()?;
    let classes: &[EdgeClass] = match cfg.model {
        ModelKind::Single => &[EdgeClass::Within, EdgeClass::Cross],
        ModelKind::Double => &[EdgeClass::Within, EdgeClass::Cross, EdgeClass::BothShared],
    };
    // per trial: per class (sum Δ, sum □, edge count)
    let per_trial: Vec<Vec<(f64, f64, usize)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_cfg = PlantedConfig {
                seed: rng::derive(cfg.seed, &[0x7121, t as u64]),
                ..cfg.clone()
            };
            let pg = generate(&trial_cfg).expect("validated above");
            let mut acc = vec![(0.0, 0.0, 0usize); classes.len()];
            for m in edge_motif_counts(&pg.graph) {
                let shared = pg.shared_types(m.edge.u, m.edge.v);
                for (slot, class) in acc.iter_mut().zip(classes) {
                    let member = match class {
                        EdgeClass::Within => shared >= 1,
                        EdgeClass::Cross => shared == 0,
                        EdgeClass::BothShared => shared == 2,
                    };
                    if member {
                        slot.0 += m.triangles as f64;
                        slot.1 += m.squares as f64;
                        slot.2 += 1;
                    }
                }
            }
            acc
        })
        .collect();

    let mut strata = Vec::new();
    let mut notes = Vec::new();
    for (ci, &class) in classes.iter().enumerate() {
        let mut tri = Vec::new();
        let mut sq = Vec::new();
        let mut edges = 0;
        for trial in &per_trial {
            let (st, ss, k) = trial[ci];
            edges += k;
            if k > 0 {
                tri.push(st / k as f64);
                sq.push(ss / k as f64);
            }
        }
        if tri.is_empty() {
            notes.push(format!("stratum {class:?} is empty in every trial"));
        }
        let (mean_triangles, se_triangles) = mean_stderr(&tri);
        let (mean_squares, se_squares) = mean_stderr(&sq);
        strata.push(StratumStats {
            class,
            trials: tri.len(),
            edges,
            mean_triangles,
            se_triangles,
            mean_squares,
            se_squares,
        });
    }

    let find = |c: EdgeClass| strata.iter().find(|s| s.class == c).expect("stratum present");
    let mut checks = Vec::new();
    let mut push = |name: &str, mean: f64, stderr: f64, bound: f64, upper: bool| {
        if mean.is_nan() {
            return;
        }
        let satisfied = if upper {
            mean < bound + 3.0 * stderr
        } else {
            mean > bound - 3.0 * stderr
        };
        checks.push(BoundCheck {
            name: name.to_string(),
            mean,
            stderr,
            bound,
            upper,
            satisfied,
        });
    };
    let within = find(EdgeClass::Within);
    let cross = find(EdgeClass::Cross);
    match cfg.model {
        ModelKind::Single => {
            push("within: E[triangles] < 1", within.mean_triangles, within.se_triangles, 1.0, true);
            push("cross: E[triangles] < 1", cross.mean_triangles, cross.se_triangles, 1.0, true);
            push("cross: E[squares] < 1", cross.mean_squares, cross.se_squares, 1.0, true);
            push(
                "within: E[squares] > (1 - 5/n) sqrt(c) rho^3",
                within.mean_squares,
                within.se_squares,
                bound_square_within(cfg),
                false,
            );
        }
        ModelKind::Double => {
            push("within: E[triangles] < 2", within.mean_triangles, within.se_triangles, 2.0, true);
            push(
                "within: E[squares] > sqrt(c) rho^3",
                within.mean_squares,
                within.se_squares,
                square_gap(cfg),
                false,
            );
            push("cross: E[triangles] < 1", cross.mean_triangles, cross.se_triangles, 1.0, true);
            push("cross: E[squares] < 1", cross.mean_squares, cross.se_squares, 1.0, true);
        }
    }
    Ok(ExpectationReport {
        config: cfg.clone(),
        trials,
        strata,
        checks,
        notes,
    })
}
