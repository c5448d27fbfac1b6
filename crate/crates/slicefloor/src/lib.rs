//! Slicing-floorplan toolkit: exact evaluation of slicing trees, Polish
//! expression encoding, dataset generation, exhaustive optimality oracles,
//! simulated annealing, language-model inference plumbing, an evaluation
//! harness, and SVG rendering.

pub mod anneal;
pub mod datagen;
pub mod encoding;
pub mod geometry;
pub mod harness;
pub mod llm;
pub mod oracle;
mod polish;
pub mod render;
pub mod rng;
