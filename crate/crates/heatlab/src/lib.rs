//! heatlab: a numerical laboratory for potential theory on weighted graphs.
//!
//! The crate computes heat kernels, Green functions, effective
//! resistances, exit times, and spectral gaps for reversible random
//! walks, fits volume and time-scaling exponents, and checks a family
//! of named regularity conditions (volume doubling, elliptic Harnack,
//! Einstein relations, kernel bounds, parabolic mean value and Harnack
//! inequalities) on finite graphs with marked truncation frontiers.

pub mod error;
pub mod fileio;
pub mod generators;
pub mod graph;
pub mod kernel;
pub mod mc;
pub mod potential;
pub mod report;
pub mod scaling;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{Vertex, VertexSet, WeightedGraph};
