//! Solvers for optimal strategic network diffusion.
//!
//! Starting from a single active seed, an agent activates nodes one at a
//! time; each attempt on node `i` succeeds with a probability that grows with
//! the influence `i` receives from already active neighbours. The goal is the
//! activation order of `z` nodes with the smallest total expected time.
//!
//! The crate provides
//! - the model itself ([`network`]),
//! - an exhaustive oracle and the subset dynamic program ([`exact`]),
//! - a block decomposition for full diffusion ([`decompose`]),
//! - fixed-parameter solvers over a tree decomposition ([`treewidth`]),
//! - the greedy and majority heuristics ([`heuristics`]),
//! - instance families and hardness gadgets ([`generators`]),
//! - a Monte Carlo check of analytic times ([`simulate`]).

pub mod decompose;
pub mod error;
pub mod exact;
pub mod generators;
pub mod heuristics;
pub mod io;
pub mod network;
pub mod nodeset;
pub mod simulate;
pub mod timefmt;
pub mod treewidth;

pub use error::{Error, Result};
pub use network::{
    activation_probability, expected_step_time, sequence_time, ActivationSequence, DiffusionInstance, Edge,
    InfluenceNetwork, Model, SolveResult,
};
pub use nodeset::{Membership, NodeSet};

/// Size guards for the exponential solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest network the subset dynamic program accepts.
    pub max_dp_nodes: usize,
    /// Largest network the exhaustive search accepts.
    pub max_brute_nodes: usize,
    /// Largest closed bag (bag plus neighbours) the treewidth solvers enumerate.
    pub max_closed_bag: usize,
    /// Ignore the guards above.
    pub force: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_dp_nodes: 28,
            max_brute_nodes: 10,
            max_closed_bag: 9,
            force: false,
        }
    }
}

/// Environment variable overriding [`Limits::max_dp_nodes`].
pub const DP_NODES_ENV: &str = "SD_MAX_DP_NODES";

impl Limits {
    /// Defaults with `SD_MAX_DP_NODES` applied when it parses.
    pub fn from_env() -> Self {
        let mut limits = Limits::default();
        if let Some(cap) = std::env::var(DP_NODES_ENV).ok().and_then(|v| v.trim().parse().ok()) {
            limits.max_dp_nodes = cap;
        }
        limits
    }

    pub fn forced() -> Self {
        Limits { force: true, ..Limits::default() }
    }

    pub(crate) fn check(&self, what: &'static str, size: usize, limit: usize) -> Result<()> {
        if !self.force && size > limit {
            return Err(Error::SizeLimit { what, size, limit });
        }
        Ok(())
    }
}

/// `H_k = 1 + 1/2 + ... + 1/k`.
pub fn harmonic(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}
