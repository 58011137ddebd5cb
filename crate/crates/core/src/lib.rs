//! Strong-tie detection from cycle motifs in a layered weak/strong graph.
//!
//! A [`graph::LayeredGraph`] holds a dense weak graph whose edges may be
//! flagged strong. [`motif`] scores the candidates of a focal node by
//! counting cycles whose non-focal edges are strong; [`learner`] combines
//! scores with logistic regression; [`eval`] runs hide-and-predict and the
//! planted-model classifier sweep; [`planted`] generates planted-community
//! graphs; [`sketch`] estimates square counts with HyperLogLog.

pub mod error;
pub mod eval;
pub mod fixture;
pub mod graph;
pub mod learner;
pub mod motif;
pub mod oracle;
pub mod planted;
pub mod rng;
pub mod sketch;

pub use error::{Error, Result};
pub use graph::{EdgeKey, Layer, LayeredGraph, NodeId, StrongPolicy};
