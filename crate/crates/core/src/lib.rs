//! Deterministic scale-free tree growth.
//!
//! Builds trees with the edge-subdividing operator Φ and its leaf-only
//! variant Φ*, evaluates their exact closed forms (vertex count, diameter,
//! Wiener index, mean hitting time, degree census) and measures the same
//! quantities on generated trees, both exactly and by random-walk simulation.

pub mod cli;
pub mod closed_form;
pub mod growth;
pub mod metrics;
pub mod report;
pub mod scaling;
pub mod tree;
pub mod walk;

pub use growth::{grow, GrowthModel, Operator, DEFAULT_VERTEX_BUDGET};
pub use tree::{resolve_seed, SeedSpec, Tree};
