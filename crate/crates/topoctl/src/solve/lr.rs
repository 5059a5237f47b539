//! Lagrangian relaxation of the coupling rows with subgradient multiplier updates
//! and an iterative repair step that turns dual solutions into feasible ones.
//!
//! The power-activation rows (both directions) and the peer beam-consistency rows
//! are dualized: their violations are priced into the objective with nonnegative
//! multipliers, and the remaining program — routing, hops, throughput, selector
//! caps, alignment — is solved exactly per iteration. Multipliers move by a fixed
//! step: up on violated rows, down (floored at zero) on strictly slack ones; the
//! step starts at the largest objective coefficient and halves after a run of
//! non-improving dual values. Repair fixes every variable outside the violated
//! rows, re-solves the small free subproblem, and widens one neighborhood level if
//! that subproblem comes back infeasible.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ilp::check::{check_feasible, FEASIBILITY_TOLERANCE};
use crate::ilp::{IlpInstance, IlpVariable, LinearConstraint};

use super::{exact, Budget, SolveResult, SolveStatus};

/// Row families priced into the objective instead of being enforced.
pub const DUALIZED_FAMILIES: [&str; 3] = ["power_upper", "power_lower", "beam_consistency"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrOptions {
    /// Outer subgradient iterations.
    pub max_iterations: usize,
    /// Non-improving dual values tolerated before the step halves.
    pub non_improving_before_halving: usize,
    /// Initial step size; defaults to the largest objective coefficient.
    pub initial_step: Option<f64>,
    /// Budget for each dual subproblem solve.
    pub subproblem_budget: Budget,
    /// Budget for each repair subproblem solve.
    pub repair_budget: Budget,
}

impl Default for LrOptions {
    fn default() -> Self {
        LrOptions {
            max_iterations: 50,
            non_improving_before_halving: 5,
            initial_step: None,
            subproblem_budget: Budget { max_nodes: 200_000, max_wall_s: 5.0 },
            repair_budget: Budget { max_nodes: 200_000, max_wall_s: 5.0 },
        }
    }
}

/// One subgradient iteration, as reported in traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrTraceRow {
    pub iteration: usize,
    /// Value of the dual subproblem at the current multipliers.
    pub dual_value: f64,
    /// Dualized rows violated by the dual solution.
    pub violated_rows: usize,
    /// Non-dualized rows the repair subproblem had to keep active (0 when no
    /// repair was needed).
    pub active_rows: usize,
    /// Step size used for the multiplier update of this iteration.
    pub step: f64,
}

/// Relaxation outcome: the engine result plus its per-iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrOutcome {
    pub result: SolveResult,
    pub trace: Vec<LrTraceRow>,
    /// Active (non-dualized) row count of the first repair subproblem — the basis
    /// of the constraint-reduction metric. `None` when no repair ever ran.
    pub first_repair_active_rows: Option<usize>,
}

fn is_dualized(c: &LinearConstraint) -> bool {
    DUALIZED_FAMILIES.contains(&c.tag.family())
}

/// The dual subproblem at multipliers `lambda` (indexed over `dual_rows`).
fn build_dual(inst: &IlpInstance, dual_rows: &[usize], lambda: &[f64]) -> IlpInstance {
    let mut variables: Vec<IlpVariable> = inst.variables.clone();
    let mut offset = inst.objective_offset;
    for (&row, &l) in dual_rows.iter().zip(lambda) {
        if l == 0.0 {
            continue;
        }
        let c = &inst.constraints[row];
        for &(v, coeff) in &c.terms {
            variables[v].objective += l * coeff;
        }
        offset -= l * c.rhs;
    }
    IlpInstance {
        variables,
        constraints: inst
            .constraints
            .iter()
            .filter(|c| !is_dualized(c))
            .cloned()
            .collect(),
        objective_offset: offset,
        requests: inst.requests.clone(),
        n_nodes: inst.n_nodes,
        slots_per_node: inst.slots_per_node.clone(),
        scenario_digest: inst.scenario_digest.clone(),
    }
}

struct Repair {
    assignment: Vec<bool>,
    /// Non-dualized rows in the repair subproblem (0 when none was needed).
    active_rows: usize,
    repaired: bool,
    nodes: u64,
}

/// Fix everything outside the violated rows and re-solve the free part. One
/// widening retry on an infeasible subproblem; `None` when that fails too.
fn repair(inst: &IlpInstance, start: &[bool], budget: &Budget) -> Option<Repair> {
    let violated: Vec<usize> = inst
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| c.slack(start) < -FEASIBILITY_TOLERANCE)
        .map(|(i, _)| i)
        .collect();
    if violated.is_empty() {
        return Some(Repair {
            assignment: start.to_vec(),
            active_rows: 0,
            repaired: false,
            nodes: 0,
        });
    }
    let mut free: BTreeSet<usize> = violated
        .iter()
        .flat_map(|&r| inst.constraints[r].terms.iter().map(|&(v, _)| v))
        .collect();
    for _attempt in 0..2 {
        // Sub-instance over the free variables; fixed contributions fold into rhs.
        let mut sub_id = vec![usize::MAX; inst.n_vars()];
        let mut sub_vars = Vec::with_capacity(free.len());
        for (&v, new_id) in free.iter().zip(0..) {
            sub_id[v] = new_id;
            let mut var = inst.variables[v].clone();
            var.id = new_id;
            sub_vars.push(var);
        }
        let mut sub_rows = Vec::new();
        let mut active_rows = 0usize;
        for c in &inst.constraints {
            let terms: Vec<(usize, f64)> = c
                .terms
                .iter()
                .filter(|&&(v, _)| sub_id[v] != usize::MAX)
                .map(|&(v, coeff)| (sub_id[v], coeff))
                .collect();
            if terms.is_empty() {
                continue;
            }
            let fixed: f64 = c
                .terms
                .iter()
                .filter(|&&(v, _)| sub_id[v] == usize::MAX && start[v])
                .map(|&(_, coeff)| coeff)
                .sum();
            sub_rows.push(LinearConstraint {
                tag: c.tag,
                terms,
                sense: c.sense,
                rhs: c.rhs - fixed,
            });
            if !is_dualized(c) {
                active_rows += 1;
            }
        }
        let sub = IlpInstance {
            variables: sub_vars,
            constraints: sub_rows,
            objective_offset: 0.0,
            requests: inst.requests.clone(),
            n_nodes: inst.n_nodes,
            slots_per_node: inst.slots_per_node.clone(),
            scenario_digest: inst.scenario_digest.clone(),
        };
        let res = exact::solve(&sub, budget);
        if let Some(sub_a) = res.assignment {
            let mut merged = start.to_vec();
            for (&v, &sv) in free.iter().zip(sub_a.iter()) {
                merged[v] = sv;
            }
            return Some(Repair {
                assignment: merged,
                active_rows,
                repaired: true,
                nodes: res.nodes_explored,
            });
        }
        // One-level backtrack: widen to every variable sharing a row with the
        // current free set, then give up.
        let wider: BTreeSet<usize> = inst
            .constraints
            .iter()
            .filter(|c| c.terms.iter().any(|&(v, _)| free.contains(&v)))
            .flat_map(|c| c.terms.iter().map(|&(v, _)| v))
            .collect();
        if wider.len() == free.len() {
            return None;
        }
        free = wider;
    }
    None
}

/// Run the relaxation. The outer `budget` caps wall time across iterations.
pub fn solve(inst: &IlpInstance, opts: &LrOptions, budget: &Budget) -> LrOutcome {
    let started = Instant::now();
    let n_req = inst.requests.len();
    let dual_rows: Vec<usize> = inst
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| is_dualized(c))
        .map(|(i, _)| i)
        .collect();
    let mut lambda = vec![0.0f64; dual_rows.len()];
    let mut step = opts.initial_step.unwrap_or_else(|| {
        inst.variables.iter().map(|v| v.objective.abs()).fold(0.0, f64::max).max(1.0)
    });

    let mut trace = Vec::new();
    let mut best_dual = f64::NEG_INFINITY;
    let mut proven_lower = f64::NEG_INFINITY;
    let mut non_improving = 0usize;
    let mut best_primal: Option<(f64, Vec<bool>)> = None;
    let mut first_repair_active: Option<usize> = None;
    let mut nodes_total = 0u64;
    let mut proven_infeasible = false;

    for iteration in 0..opts.max_iterations {
        if started.elapsed().as_secs_f64() > budget.max_wall_s {
            break;
        }
        let dual = build_dual(inst, &dual_rows, &lambda);
        let dres = exact::solve(&dual, &opts.subproblem_budget);
        nodes_total += dres.nodes_explored;
        if dres.status == SolveStatus::Infeasible {
            // The dual keeps a subset of the primal rows, so its infeasibility
            // proves the primal infeasible.
            proven_infeasible = true;
            break;
        }
        let Some(dual_a) = dres.assignment else {
            break; // subproblem budget ran out with nothing to iterate on
        };
        let dual_value = dres.objective.unwrap();
        if dres.status == SolveStatus::Optimal {
            proven_lower = proven_lower.max(dual_value);
        }
        if dual_value > best_dual + 1e-9 {
            best_dual = dual_value;
            non_improving = 0;
        } else {
            non_improving += 1;
            if non_improving >= opts.non_improving_before_halving {
                step *= 0.5;
                non_improving = 0;
            }
        }

        let mut active_rows = 0usize;
        if let Some(rep) = repair(inst, &dual_a, &opts.repair_budget) {
            nodes_total += rep.nodes;
            if rep.repaired {
                active_rows = rep.active_rows;
                if first_repair_active.is_none() {
                    first_repair_active = Some(rep.active_rows);
                }
            }
            let check = check_feasible(inst, &rep.assignment).expect("repair keeps var count");
            debug_assert!(check.feasible, "repair must return feasible assignments");
            if check.feasible
                && best_primal
                    .as_ref()
                    .map_or(true, |(obj, _)| check.objective < obj - 1e-9)
            {
                best_primal = Some((check.objective, rep.assignment));
            }
        }

        let mut violated_rows = 0usize;
        for (&row, l) in dual_rows.iter().zip(lambda.iter_mut()) {
            let slack = inst.constraints[row].slack(&dual_a);
            if slack < -FEASIBILITY_TOLERANCE {
                violated_rows += 1;
                *l += step;
            } else if slack > FEASIBILITY_TOLERANCE {
                *l = (*l - step).max(0.0);
            }
        }
        trace.push(LrTraceRow { iteration, dual_value, violated_rows, active_rows, step });

        // A primal meeting the proven bound is optimal; stop early.
        if let Some((obj, _)) = &best_primal {
            if *obj - proven_lower <= 1e-6 {
                break;
            }
        }
    }

    let wall = started.elapsed().as_secs_f64();
    let lower_bound = if proven_lower > f64::NEG_INFINITY { Some(proven_lower) } else { None };
    let result = match best_primal {
        Some((obj, a)) => SolveResult {
            status: if lower_bound.is_some_and(|lb| obj - lb <= 1e-6) {
                SolveStatus::Optimal
            } else {
                SolveStatus::Feasible
            },
            assignment: Some(a),
            objective: Some(obj),
            lower_bound,
            nodes_explored: nodes_total,
            wall_time_s: wall,
            blocked: Vec::new(),
        },
        None => SolveResult {
            lower_bound,
            nodes_explored: nodes_total,
            wall_time_s: wall,
            ..SolveResult::failure(
                if proven_infeasible {
                    SolveStatus::Infeasible
                } else {
                    SolveStatus::NoFeasibleFound
                },
                n_req,
            )
        },
    };
    LrOutcome { result, trace, first_repair_active_rows: first_repair_active }
}
