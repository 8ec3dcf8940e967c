//! Embodied lifelong active learning in procedurally generated 2-D buildings.

pub mod agents;
pub mod error;
pub mod grid;
pub mod harness;
pub mod rl;
pub mod rng;
pub mod mapper;
pub mod perception;
pub mod planner;
pub mod world;

pub use error::{Error, Result};
