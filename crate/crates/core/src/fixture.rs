//! The ten-node toy graph centred on node `a`, used as a canonical check
//! of every scorer.
//!
//! External ids: a=0, b1=1, b2=2, b3=3, c1=4, c2=5, d1..d4=6..9.

use crate::error::Result;
use crate::graph::{LayeredGraph, NodeId};
use crate::motif::EgoNetwork;
use crate::oracle::{oracle_count_cycles, CycleConstraint, RegionRule};

pub const NAMES: [&str; 10] = ["a", "b1", "b2", "b3", "c1", "c2", "d1", "d2", "d3", "d4"];

#[derive(Clone, Copy, Debug)]
pub struct Fixture {
    pub a: NodeId,
    pub b1: NodeId,
    pub b2: NodeId,
    pub b3: NodeId,
    pub c1: NodeId,
    pub c2: NodeId,
    pub d1: NodeId,
    pub d2: NodeId,
    pub d3: NodeId,
    pub d4: NodeId,
}

impl Fixture {
    pub fn ids() -> Self {
        let n = NodeId;
        Fixture {
            a: n(0),
            b1: n(1),
            b2: n(2),
            b3: n(3),
            c1: n(4),
            c2: n(5),
            d1: n(6),
            d2: n(7),
            d3: n(8),
            d4: n(9),
        }
    }
}

/// `(u, v, strong)` listing of the fixture.
pub fn edge_list() -> Vec<(NodeId, NodeId, bool)> {
    let f = Fixture::ids();
    vec![
        (f.a, f.b1, false),
        (f.a, f.b2, false),
        (f.a, f.b3, false),
        (f.b1, f.b3, false),
        (f.b2, f.d1, false),
        (f.b2, f.d2, false),
        (f.b3, f.d3, false),
        (f.b3, f.d4, false),
        (f.b1, f.b2, true),
        (f.b2, f.b3, true),
        (f.b1, f.c1, true),
        (f.b1, f.c2, true),
        (f.b2, f.c2, true),
        (f.c1, f.c2, true),
    ]
}

pub fn graph() -> LayeredGraph {
    LayeredGraph::from_edges(NAMES.len(), edge_list())
}

/// The fixture in edge-list file format.
pub fn edge_list_text() -> String {
    let mut out = String::from("# toy graph: a=0 b1=1 b2=2 b3=3 c1=4 c2=5 d1..d4=6..9\n");
    for (u, v, s) in edge_list() {
        out.push_str(&format!("{}\t{}\t{}\n", u, v, u8::from(s)));
    }
    out
}

/// Expected scores for candidate b1 of focal node a.
pub mod expected_b1 {
    pub const DEGREE: usize = 5;
    pub const EMBEDDEDNESS: usize = 2;
    pub const H1: f64 = 5.0;
    pub const TRIANGLE: usize = 1;
    pub const SQUARE_INSIDE: usize = 1;
    pub const SQUARE_OUTSIDE: usize = 1;
    pub const PENTAGON_INSIDE: usize = 0;
    pub const PENTAGON_OUTSIDE: usize = 1;

    pub fn adamic_adar() -> f64 {
        1.0 / 5f64.ln() + 1.0 / 6f64.ln()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub item: String,
    pub expected: f64,
    pub actual: f64,
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: expected {}, got {}", self.item, self.expected, self.actual)
    }
}

/// Compares the scores of `(a, b1)` in `g` with the reference values and
/// every cycle score of every candidate of `a` with the brute-force oracle.
/// `g` is expected to use the fixture's node numbering. An empty result
/// means the check passed.
pub fn check(g: &LayeredGraph) -> Result<Vec<Mismatch>> {
    let f = Fixture::ids();
    let ego = EgoNetwork::new(g, f.a)?;
    let mut out = Vec::new();
    let mut cmp = |item: String, expected: f64, actual: f64, tol: f64| {
        if (expected - actual).abs() > tol {
            out.push(Mismatch { item, expected, actual });
        }
    };

    let s = ego.scores(f.b1)?;
    let reference = [
        ("degree", expected_b1::DEGREE as f64, s.degree as f64),
        ("embeddedness", expected_b1::EMBEDDEDNESS as f64, s.embeddedness as f64),
        ("h1", expected_b1::H1, s.h1),
        ("triangle", expected_b1::TRIANGLE as f64, s.triangle as f64),
        ("square_in", expected_b1::SQUARE_INSIDE as f64, s.square_in as f64),
        ("square_out", expected_b1::SQUARE_OUTSIDE as f64, s.square_out as f64),
        ("pent_in", expected_b1::PENTAGON_INSIDE as f64, s.pent_in as f64),
        ("pent_out", expected_b1::PENTAGON_OUTSIDE as f64, s.pent_out as f64),
    ];
    for (name, e, a) in reference {
        cmp(format!("(a,b1) {name}"), e, a, 0.0);
    }
    cmp("(a,b1) adamic_adar".into(), expected_b1::adamic_adar(), s.adamic_adar, 1e-9);

    let strong = |region| CycleConstraint::strong(region);
    for scores in ego.all_scores() {
        let b = scores.candidate;
        let name = NAMES.get(b.index()).map_or_else(|| b.to_string(), |s| s.to_string());
        let checks = [
            ("triangle", scores.triangle, 3, RegionRule::Inside),
            ("square_in", scores.square_in, 4, RegionRule::Inside),
            ("square_out", scores.square_out, 4, RegionRule::Outside),
            ("pent_in", scores.pent_in, 5, RegionRule::Inside),
            ("pent_out", scores.pent_out, 5, RegionRule::Outside),
        ];
        for (score, actual, len, region) in checks {
            let expected = oracle_count_cycles(g, f.a, b, len, strong(region))?;
            cmp(format!("(a,{name}) {score} vs oracle"), expected as f64, actual as f64, 0.0);
        }
    }
    Ok(out)
}
