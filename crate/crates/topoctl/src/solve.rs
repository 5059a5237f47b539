//! Solver engines and their shared result shape.
//!
//! Four engines produce assignments for the same instances:
//!
//! * [`exact`] — depth-first branch and bound with unit propagation; proves
//!   optimality or infeasibility when its budget allows,
//! * [`lr`] — Lagrangian relaxation of the coupling rows with subgradient
//!   multiplier updates and an iterative repair step,
//! * [`pso`] — particle-swarm search over route tables and per-link settings,
//! * [`first_fit`] — the greedy seeding heuristic, usable on its own.

pub mod exact;
pub mod first_fit;
pub mod lr;
pub mod pso;
pub mod routes;

use serde::{Deserialize, Serialize};

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    /// The returned assignment is proven optimal.
    Optimal,
    /// A feasible assignment was found but optimality is not proven.
    Feasible,
    /// The instance is proven to admit no feasible assignment.
    Infeasible,
    /// The engine completed its schedule without finding a feasible assignment.
    NoFeasibleFound,
    /// The budget ran out before any feasible assignment appeared.
    Timeout,
}

impl SolveStatus {
    pub fn found_feasible(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

/// Work limits shared by every engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Search-node cap for tree engines (deterministic limit).
    pub max_nodes: u64,
    /// Wall-clock cap in seconds (crossed between nodes/iterations, so slightly soft).
    pub max_wall_s: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_nodes: 5_000_000, max_wall_s: 30.0 }
    }
}

/// Outcome of one engine run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Best assignment found, if any (dense over variable ids).
    pub assignment: Option<Vec<bool>>,
    /// Objective of that assignment.
    pub objective: Option<f64>,
    /// Best proven lower bound on the optimum, when the engine computes one.
    pub lower_bound: Option<f64>,
    /// Search nodes, fitness evaluations, or subgradient iterations — the engine's
    /// natural unit of work.
    pub nodes_explored: u64,
    pub wall_time_s: f64,
    /// Requests left unserved: empty when feasible; on failure, the requests the
    /// engine attributes the failure to (every request when nothing is proven).
    pub blocked: Vec<usize>,
}

impl SolveResult {
    /// All-requests-blocked failure shell, shared by engines that end with nothing.
    pub(crate) fn failure(status: SolveStatus, n_requests: usize) -> Self {
        SolveResult {
            status,
            assignment: None,
            objective: None,
            lower_bound: None,
            nodes_explored: 0,
            wall_time_s: 0.0,
            blocked: (0..n_requests).collect(),
        }
    }
}
