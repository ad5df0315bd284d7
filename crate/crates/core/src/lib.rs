//! Contact processes on Galton–Watson trees and configuration-model graphs:
//! an event-driven simulator on the graphical representation, exact Markov
//! chain oracles for small instances, and the expander construction used for
//! long survival.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod acceptance;
pub mod distributions;
pub mod dynamics;
pub mod error;
pub mod expander;
pub mod experiments;
pub mod graph;
pub mod graphgen;
pub mod linalg;
pub mod oracle;
pub mod rng;

pub use distributions::{DegreeDistribution, TailClass};
pub use dynamics::{ClockStream, Rules, SimOptions, Trajectory, Variant};
pub use error::{Error, Result};
pub use graph::{HalfEdgeGraph, RootedTree};
pub use rng::{derive_stream, Stream};
