//! Minimal common-randomness rate over the auxiliary unions of the inner bound and of the
//! more-capable region.
//!
//! Both regions are unions over auxiliaries, so the solver is a multi-start local search on
//! products of simplices. Every witness it returns is re-evaluated through [`crate::prob`].

mod decompose;
mod problem;
mod simplex;
mod solver;
mod wiretap;

pub use decompose::{decompose_markov, AuxDecomposition};
pub use problem::{ProblemSpec, W1_LABEL, W2_LABEL};
pub use simplex::{for_each_grid_point, grid_size};
pub use solver::{min_r0_corollary, min_r0_inner, Diagnostics, RatePoint, Witness, WITNESS_TOL};
pub use wiretap::{
    is_more_capable, secrecy_capacity, wiretap_advantage, Advantage, MoreCapable, SecrecyCapacity, WiretapInput, MAX_GRID_POINTS,
    MORE_CAPABLE_TOL,
};

use serde::{Deserialize, Serialize};

/// Largest ℓ1 residual for a factorization to count as exact.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Shortfall of `I(W2;Y)` below `I(W1;U)` tolerated while searching.
pub(crate) const CONSTRAINT_SLACK: f64 = 1e-9;

/// Effort limits of the searches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchBudget {
    /// Random starts per search, on top of the structural ones.
    pub restarts: usize,
    /// Objective evaluations per local search.
    pub max_evals: usize,
    /// Resolution `1/m` of the coarse grid pass over channel inputs.
    pub grid_resolution: usize,
    /// The grid pass is skipped when it would exceed this many points.
    pub grid_points: usize,
    /// Most distinct `I(W1;U)` levels handed to the channel search.
    pub tau_levels: usize,
    /// Grid resolution of the more-capable check.
    pub more_capable_resolution: usize,
    /// Random inputs added to the more-capable check.
    pub more_capable_samples: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            restarts: 8,
            max_evals: 3000,
            grid_resolution: 16,
            grid_points: 50_000,
            tau_levels: 8,
            more_capable_resolution: 64,
            more_capable_samples: 256,
        }
    }
}
