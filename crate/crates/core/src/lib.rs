//! Optimal assignments under tree metrics and their use for approximating
//! the graph edit distance in linear time.
//!
//! When the cost between objects is the path length in a weighted tree, an
//! optimal assignment between two object sets can be priced and constructed
//! in time linear in the input. This crate provides that solver together
//! with trees built by Weisfeiler-Lehman refinement or bisecting k-means,
//! cubic-time baselines, dataset loaders and an evaluation harness.

pub mod assign;
pub mod baseline;
pub mod cluster;
pub mod error;
pub mod eval;
pub mod ged;
pub mod graph;
pub mod tree;
pub mod tudataset;
pub mod wl;

pub use error::{Error, Result};
