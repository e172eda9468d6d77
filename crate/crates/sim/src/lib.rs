//! Election simulator and security experiments.

pub mod config;
pub mod election;
pub mod experiments;
pub mod state;
