//! Topology control for hybrid RF/FSO wireless mesh networks.
//!
//! Nodes carry a mix of radio-frequency and free-space-optical transceivers with
//! discrete power levels and beam openings. Given a set of connection requests with
//! hop-delay and throughput requirements, the crate builds a 0/1 integer program that
//! selects links, routes, beams and power levels minimizing total transmit power, and
//! solves it with three interchangeable engines:
//!
//! * [`solve::exact`] — depth-first branch and bound with unit propagation (optimal),
//! * [`solve::lr`] — Lagrangian relaxation of the power-activation and beam rows with
//!   subgradient multiplier updates and an iterative constraint-repair loop,
//! * [`solve::pso`] — particle swarm over per-request route tables seeded by a
//!   first-fit heuristic, with an iteration-growing constraint penalty.
//!
//! Scenario I/O (JSON), report generation, LP/DOT export and the sweep experiment
//! harness live in [`scenario`], [`report`], [`ilp::lp_export`], [`dot`] and
//! [`experiment`].

pub mod channel;
pub mod dot;
pub mod experiment;
pub mod ilp;
pub mod links;
pub mod report;
pub mod scenario;
pub mod solve;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Scenario validation failed; every offending field is listed.
    #[error("invalid scenario:\n  - {}", problems.join("\n  - "))]
    InvalidScenario { problems: Vec<String> },
    /// A numeric argument is outside the model's domain (e.g. non-positive noise power).
    #[error("domain error: {0}")]
    Domain(String),
    /// Inputs that must agree structurally (instance vs assignment, sets vs indices) do not.
    #[error("mismatch: {0}")]
    Mismatch(String),
    /// The operation refuses the input by contract (e.g. brute force above its size cap).
    #[error("{0}")]
    Refused(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
