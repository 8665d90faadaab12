//! One-dimensional shallow-water flow in channel networks with arbitrary
//! cross-sections.
//!
//! The solver is a central-upwind finite-volume scheme that keeps water depths
//! non-negative, preserves lakes at rest exactly (including partially flooded
//! cells) and couples links at junctions through storage control volumes.

pub mod boundary;
pub mod geometry;
pub mod junction;
pub mod network;
pub mod reconstruction;
pub mod scheme;
pub mod scenario;
pub mod simulation;
pub mod presets;
pub mod checks;
pub mod convergence;
pub mod oracle;
pub mod output;
