//! Approximate Lie symmetry analysis for a perturbed creeping-flow system.

pub mod catalog;
pub mod cli;
pub mod deck;
pub mod error;
pub mod expr;
pub mod invariance;
pub mod model;
pub mod numeric;
pub mod prolong;
pub mod report;
pub mod series;
