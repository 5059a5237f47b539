//! Assignment checking: slack evaluation against a fixed tolerance, violation
//! listing, and attribution of violations back to the requests they strand.

use crate::{Error, Result};

use super::build::VarIndex;
use super::{IlpInstance, RowTag};

/// Absolute slack tolerance: a row is violated when its signed slack is below
/// `-FEASIBILITY_TOLERANCE`.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

/// One violated row.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Index into `IlpInstance::constraints`.
    pub row: usize,
    pub tag: RowTag,
    /// Positive violation magnitude (`-slack`).
    pub amount: f64,
}

/// Result of checking a 0/1 assignment against every row.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub feasible: bool,
    /// Objective of the assignment under the instance (offset included).
    pub objective: f64,
    /// Violated rows in row order.
    pub violations: Vec<Violation>,
}

/// Evaluate every row of `inst` under `assignment`.
pub fn check_feasible(inst: &IlpInstance, assignment: &[bool]) -> Result<CheckReport> {
    if assignment.len() != inst.n_vars() {
        return Err(Error::Mismatch(format!(
            "assignment has {} entries but the instance has {} variables",
            assignment.len(),
            inst.n_vars()
        )));
    }
    let mut violations = Vec::new();
    for (row, c) in inst.constraints.iter().enumerate() {
        let slack = c.slack(assignment);
        if slack < -FEASIBILITY_TOLERANCE {
            violations.push(Violation { row, tag: c.tag, amount: -slack });
        }
    }
    Ok(CheckReport {
        feasible: violations.is_empty(),
        objective: inst.objective_value(assignment),
        violations,
    })
}

/// Which requests are stranded by the violated rows of `assignment`.
///
/// Rows that name a request are attributed directly. Link- and slot-level rows are
/// attributed to every request routed over a link touching the offending slot
/// (outgoing side always; incoming side too for receive-capacity and witness rows).
/// The result is sorted and deduplicated.
pub fn blocked_requests(inst: &IlpInstance, assignment: &[bool]) -> Vec<usize> {
    let report = match check_feasible(inst, assignment) {
        Ok(r) => r,
        Err(_) => return (0..inst.requests.len()).collect(),
    };
    if report.feasible {
        return Vec::new();
    }
    let idx = VarIndex::of(inst);
    let mut hit = vec![false; inst.requests.len()];

    // Requests actually routed over each (from, tx) and into each (to, tx).
    let mut out_users: std::collections::BTreeMap<(usize, usize), Vec<usize>> = Default::default();
    let mut in_users: std::collections::BTreeMap<(usize, usize), Vec<usize>> = Default::default();
    let mut link_users: std::collections::BTreeMap<(usize, usize, usize), Vec<usize>> =
        Default::default();
    for (&(from, to, tx, req), &id) in &idx.route {
        if assignment[id] {
            out_users.entry((from, tx)).or_default().push(req);
            in_users.entry((to, tx)).or_default().push(req);
            link_users.entry((from, to, tx)).or_default().push(req);
        }
    }
    let mark_slot = |hit: &mut Vec<bool>, node: usize, tx: usize, incoming_too: bool| {
        if let Some(rs) = out_users.get(&(node, tx)) {
            for &r in rs {
                hit[r] = true;
            }
        }
        if incoming_too {
            if let Some(rs) = in_users.get(&(node, tx)) {
                for &r in rs {
                    hit[r] = true;
                }
            }
        }
    };

    for v in &report.violations {
        match v.tag {
            RowTag::RouteFlow { req, .. }
            | RowTag::RouteLink { req, .. }
            | RowTag::HopBudget { req } => hit[req] = true,
            RowTag::LinkThroughput { from, to, tx } => {
                if let Some(rs) = link_users.get(&(from, to, tx)) {
                    for &r in rs {
                        hit[r] = true;
                    }
                }
            }
            RowTag::PowerUpper { node, tx, .. } | RowTag::PowerLower { node, tx, .. } => {
                mark_slot(&mut hit, node, tx, false)
            }
            RowTag::FsoOutSelect { node, tx } => mark_slot(&mut hit, node, tx, false),
            RowTag::FsoInSelect { node, tx } => mark_slot(&mut hit, node, tx, true),
            RowTag::RfPairSelect { from, to: _, tx }
            | RowTag::BeamConsistency { from, tx, .. }
            | RowTag::AlignmentPair { from, tx, .. } => mark_slot(&mut hit, from, tx, false),
            RowTag::AlignmentWitness { from, witness, tx, .. } => {
                mark_slot(&mut hit, from, tx, false);
                mark_slot(&mut hit, witness, tx, true);
            }
        }
    }
    // A violation that strands nobody routed (an all-zero assignment violating flow
    // rows, say) still names its request above; slot-level rows with no routed user
    // simply add nothing.
    hit.iter()
        .enumerate()
        .filter_map(|(r, &h)| if h { Some(r) } else { None })
        .collect()
}
