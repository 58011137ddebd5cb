#![allow(dead_code)]

use rand::Rng;
use strongtie::rng;
use strongtie::{LayeredGraph, NodeId};

/// Erdős–Rényi weak graph with each edge independently strong.
pub fn random_layered(seed: u64, nodes: usize, density: f64, strong: f64) -> LayeredGraph {
    let mut r = rng::chacha(seed, &[0xE5]);
    let mut edges = Vec::new();
    for i in 0..nodes {
        for j in i + 1..nodes {
            if r.gen::<f64>() < density {
                edges.push((NodeId::from(i), NodeId::from(j), r.gen::<f64>() < strong));
            }
        }
    }
    LayeredGraph::from_edges(nodes, edges)
}

/// Small random graphs with varied size, density and strong fraction.
pub fn random_small(seed: u64) -> LayeredGraph {
    let mut r = rng::chacha(seed, &[0x5A]);
    let nodes = r.gen_range(5..=25);
    let density = r.gen_range(0.1..0.5);
    let strong = r.gen_range(0.2..0.9);
    random_layered(seed, nodes, density, strong)
}
