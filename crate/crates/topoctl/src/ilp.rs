//! The 0/1 integer program: variables, constraint rows, instance construction,
//! closed-form size formulas, feasibility checking and LP-format export.
//!
//! Variable classes (ids are dense, blocks in this order):
//!
//! * `RouteUse` — request `r` routes over link `(i, j, t)`,
//! * `SelectTuple` — availability tuple `(i, j, t, p, beam_tx, beam_rx)` is active;
//!   one variable per [`crate::links::LinkCandidate`],
//! * `PowerOn` — slot `(i, t)` transmits at power level `p`.
//!
//! Constraint classes mirror the formulation: per-node flow conservation and
//! hop budgets for each request, route-to-tuple linking, per-link throughput
//! against BER-derated shared bandwidth, power-activation bounds in both
//! directions (big-M = node count, optionally tightened to the true tuple count),
//! selector caps (FSO: one tuple out and one in per slot; RF: one tuple per
//! destination), beam-consistency rows, and the two alignment families (the
//! third-party family only for triples whose witness has line of sight to both
//! endpoints). Incoming-side rows use the slot-symmetric reading: a tuple on
//! slot `t` occupies slot `t` at both endpoints.

pub mod build;
pub mod check;
pub mod counts;
pub mod lp_export;

use serde::{Deserialize, Serialize};

use crate::links::BeamSetting;

// ---- requests ------------------------------------------------------------------------

/// One connection request: route `s -> d` within `max_hops` hops, delivering at
/// least `min_throughput_mbps` on every traversed link. Node fields are dense
/// indices into the scenario's node list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosRequest {
    pub s: usize,
    pub d: usize,
    pub max_hops: u32,
    pub min_throughput_mbps: f64,
}

impl QosRequest {
    pub fn validate(&self, n_nodes: usize, what: &str, problems: &mut Vec<String>) {
        if self.s == self.d {
            problems.push(format!("{what}: source and destination coincide ({})", self.s));
        }
        if self.s >= n_nodes {
            problems.push(format!("{what}: source index {} out of range", self.s));
        }
        if self.d >= n_nodes {
            problems.push(format!("{what}: destination index {} out of range", self.d));
        }
        if self.max_hops < 1 {
            problems.push(format!("{what}: max_hops must be >= 1"));
        }
        if !(self.min_throughput_mbps > 0.0) {
            problems.push(format!(
                "{what}: min_throughput_mbps must be > 0 (got {})",
                self.min_throughput_mbps
            ));
        }
    }
}

// ---- variables -----------------------------------------------------------------------

/// What a binary variable means. Ordering of the enum matches the id-block layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarKind {
    /// Request `req` routes over link `(from, to, tx)`.
    RouteUse { from: usize, to: usize, tx: usize, req: usize },
    /// Tuple `(from, to, tx, power_idx, beam_tx, beam_rx)` is selected; `cand` is the
    /// index of the matching candidate in the scenario's [`crate::links::CandidateSet`].
    SelectTuple {
        from: usize,
        to: usize,
        tx: usize,
        power_idx: usize,
        beam_tx: BeamSetting,
        beam_rx: BeamSetting,
        cand: usize,
    },
    /// Slot `(node, tx)` transmits at power level `power_idx`.
    PowerOn { node: usize, tx: usize, power_idx: usize },
}

/// One binary variable: dense id, meaning, objective coefficient (mW for `PowerOn`,
/// 0 elsewhere in the primal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlpVariable {
    pub id: usize,
    pub kind: VarKind,
    pub objective: f64,
}

// ---- constraints ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// Which structural family a row belongs to, with enough indices to attribute a
/// violation back to requests/links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RowTag {
    /// Net route flow of `req` at `node` (+1 at source, -1 at destination, 0 elsewhere).
    RouteFlow { node: usize, req: usize },
    /// A request may use a link only if some tuple on it is selected.
    RouteLink { from: usize, to: usize, tx: usize, req: usize },
    /// Total hops of `req` within its delay budget.
    HopBudget { req: usize },
    /// Sum of routed demand over `(from, to, tx)` within the BER-derated bandwidth
    /// of the selected tuples.
    LinkThroughput { from: usize, to: usize, tx: usize },
    /// Selected tuples at `(node, tx, power_idx)` require the power var (big-M side).
    PowerUpper { node: usize, tx: usize, power_idx: usize },
    /// The power var requires at least one selected tuple at that level.
    PowerLower { node: usize, tx: usize, power_idx: usize },
    /// An FSO slot transmits at most one tuple.
    FsoOutSelect { node: usize, tx: usize },
    /// An FSO slot receives at most one tuple (slot-symmetric reading).
    FsoInSelect { node: usize, tx: usize },
    /// An RF slot keeps at most one tuple per destination.
    RfPairSelect { from: usize, to: usize, tx: usize },
    /// A slot transmitting with beam `beam_tx` must be received from its peer with
    /// the same opening.
    BeamConsistency { from: usize, to: usize, tx: usize, beam_tx: usize },
    /// Same-pair alignment family: transmissions into `from` (any origin) must match
    /// its active transmit beam.
    AlignmentPair { from: usize, to: usize, tx: usize, beam_tx: usize },
    /// Third-party alignment family for a witness `k` in line of sight of both ends.
    AlignmentWitness { from: usize, to: usize, witness: usize, tx: usize, beam_tx: usize },
}

impl RowTag {
    /// Stable family name used in exports, summaries and reports.
    pub fn family(&self) -> &'static str {
        match self {
            RowTag::RouteFlow { .. } => "route_flow",
            RowTag::RouteLink { .. } => "route_link",
            RowTag::HopBudget { .. } => "hop_budget",
            RowTag::LinkThroughput { .. } => "link_throughput",
            RowTag::PowerUpper { .. } => "power_upper",
            RowTag::PowerLower { .. } => "power_lower",
            RowTag::FsoOutSelect { .. } => "fso_out_select",
            RowTag::FsoInSelect { .. } => "fso_in_select",
            RowTag::RfPairSelect { .. } => "rf_pair_select",
            RowTag::BeamConsistency { .. } => "beam_consistency",
            RowTag::AlignmentPair { .. } => "alignment_pair",
            RowTag::AlignmentWitness { .. } => "alignment_witness",
        }
    }
}

/// One linear row: `sum coeff * var  <sense>  rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub tag: RowTag,
    /// `(variable id, coefficient)`, ids strictly increasing.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    /// Evaluate the left-hand side under a 0/1 assignment.
    pub fn lhs(&self, assignment: &[bool]) -> f64 {
        self.terms
            .iter()
            .map(|&(v, c)| if assignment[v] { c } else { 0.0 })
            .sum()
    }

    /// Signed slack: negative means violated (by that amount), for every sense.
    pub fn slack(&self, assignment: &[bool]) -> f64 {
        let lhs = self.lhs(assignment);
        match self.sense {
            Sense::Le => self.rhs - lhs,
            Sense::Ge => lhs - self.rhs,
            Sense::Eq => -(lhs - self.rhs).abs(),
        }
    }
}

// ---- the instance --------------------------------------------------------------------

/// A fully materialized 0/1 program plus the metadata needed to interpret it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IlpInstance {
    pub variables: Vec<IlpVariable>,
    pub constraints: Vec<LinearConstraint>,
    /// Constant added to the objective (0 for primal instances; Lagrangian duals use it).
    pub objective_offset: f64,
    pub requests: Vec<QosRequest>,
    pub n_nodes: usize,
    /// Transceiver count per node (slot validity and big-M come from here).
    pub slots_per_node: Vec<usize>,
    /// Short fingerprint of the scenario the instance was built from.
    pub scenario_digest: String,
}

impl IlpInstance {
    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn n_rows(&self) -> usize {
        self.constraints.len()
    }

    /// Objective value of a 0/1 assignment (includes the offset).
    pub fn objective_value(&self, assignment: &[bool]) -> f64 {
        let mut sum = 0.0;
        for v in &self.variables {
            if assignment[v.id] {
                sum += v.objective;
            }
        }
        sum + self.objective_offset
    }

    /// Per-family row counts, sorted by family name.
    pub fn rows_by_family(&self) -> Vec<(&'static str, usize)> {
        let mut map = std::collections::BTreeMap::new();
        for c in &self.constraints {
            *map.entry(c.tag.family()).or_insert(0usize) += 1;
        }
        map.into_iter().collect()
    }
}
