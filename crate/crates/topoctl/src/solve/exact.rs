//! Depth-first branch and bound over the 0/1 program, with unit propagation and a
//! power-aware lower bound; plus an exhaustive reference search for tiny instances.
//!
//! Determinism: branching follows one fixed variable permutation — route-use vars
//! in id order, then tuple-select vars per link with higher power levels and wider
//! openings first, then power vars in id order — always trying 0 before 1, and the
//! incumbent is replaced only on strict improvement. Zero-first search therefore
//! leaves the cheapest adequate tuple of each link as the propagation survivor, and
//! two runs return bit-identical assignments.

use std::time::Instant;

use crate::ilp::{IlpInstance, Sense, VarKind};
use crate::links::BeamSetting;
use crate::{Error, Result};

use super::{Budget, SolveResult, SolveStatus};

const EPS: f64 = 1e-9;

const UNFIXED: u8 = 2;

/// Branch-and-bound solve within `budget`.
pub fn solve(inst: &IlpInstance, budget: &Budget) -> SolveResult {
    Search::new(inst).run(budget)
}

struct Search<'a> {
    inst: &'a IlpInstance,
    /// Per variable: the rows it appears in, with its coefficient there.
    var_rows: Vec<Vec<(u32, f64)>>,
    /// Per row: lhs range over the current partial assignment.
    min_lhs: Vec<f64>,
    max_lhs: Vec<f64>,
    value: Vec<u8>,
    trail: Vec<u32>,
    queue: Vec<u32>,
    in_queue: Vec<bool>,
    order: Vec<u32>,
    /// Objective over vars fixed to 1.
    fixed_obj: f64,
    /// Sum of negative objective coefficients over unfixed vars.
    unfixed_neg: f64,
    // Slot bookkeeping for the routed-but-unpowered bound term.
    slot_of_var: Vec<u32>,
    routed_count: Vec<u32>,
    powered_count: Vec<u32>,
    /// Per slot: power-on var ids of levels that have at least one tuple.
    slot_power_vars: Vec<Vec<u32>>,
    /// The bound term is only sound when tuples imply power vars and routes imply
    /// tuples, i.e. when the instance carries both row families.
    route_term_enabled: bool,
    incumbent: Option<(f64, Vec<bool>)>,
    nodes: u64,
    aborted: bool,
}

const NO_SLOT: u32 = u32::MAX;

impl<'a> Search<'a> {
    fn new(inst: &'a IlpInstance) -> Self {
        let n = inst.n_vars();
        let mut var_rows = vec![Vec::new(); n];
        let mut min_lhs = Vec::with_capacity(inst.n_rows());
        let mut max_lhs = Vec::with_capacity(inst.n_rows());
        for (ri, c) in inst.constraints.iter().enumerate() {
            let (mut lo, mut hi) = (0.0, 0.0);
            for &(v, coeff) in &c.terms {
                var_rows[v].push((ri as u32, coeff));
                lo += coeff.min(0.0);
                hi += coeff.max(0.0);
            }
            min_lhs.push(lo);
            max_lhs.push(hi);
        }

        // Dense slot ids over (node, transceiver).
        let mut slot_base = Vec::with_capacity(inst.slots_per_node.len());
        let mut n_slots = 0usize;
        for &s in &inst.slots_per_node {
            slot_base.push(n_slots);
            n_slots += s;
        }
        let slot_id = |node: usize, tx: usize| (slot_base[node] + tx) as u32;
        let mut slot_of_var = vec![NO_SLOT; n];
        let mut has_tuples: Vec<std::collections::BTreeSet<usize>> =
            vec![Default::default(); n_slots];
        for v in &inst.variables {
            match v.kind {
                VarKind::RouteUse { from, tx, .. } => slot_of_var[v.id] = slot_id(from, tx),
                VarKind::SelectTuple { from, tx, power_idx, .. } => {
                    has_tuples[slot_id(from, tx) as usize].insert(power_idx);
                }
                VarKind::PowerOn { node, tx, .. } => slot_of_var[v.id] = slot_id(node, tx),
            }
        }
        let mut slot_power_vars = vec![Vec::new(); n_slots];
        for v in &inst.variables {
            if let VarKind::PowerOn { node, tx, power_idx } = v.kind {
                if has_tuples[slot_id(node, tx) as usize].contains(&power_idx) {
                    slot_power_vars[slot_id(node, tx) as usize].push(v.id as u32);
                }
            }
        }
        let fams: std::collections::BTreeSet<&str> =
            inst.constraints.iter().map(|c| c.tag.family()).collect();
        let route_term_enabled = fams.contains("route_link") && fams.contains("power_upper");

        // Branch permutation: route block as laid out; tuple block re-ordered per
        // link toward high power and wide openings first; power block as laid out.
        let beam_rank = |b: BeamSetting| match b {
            BeamSetting::Omni => 0usize,
            BeamSetting::Index(i) => i + 1,
        };
        let mut order: Vec<u32> = (0..n as u32).collect();
        let sort_key = |id: u32| -> (u8, usize, usize, usize, usize, usize, usize, usize) {
            match self_kind(inst, id) {
                VarKind::RouteUse { from, to, tx, req } => (0, from, to, tx, req, 0, 0, 0),
                VarKind::SelectTuple { from, to, tx, power_idx, beam_tx, beam_rx, .. } => (
                    1,
                    from,
                    to,
                    tx,
                    usize::MAX - power_idx,
                    usize::MAX - beam_rank(beam_tx),
                    usize::MAX - beam_rank(beam_rx),
                    0,
                ),
                VarKind::PowerOn { node, tx, power_idx } => (2, node, tx, power_idx, 0, 0, 0, 0),
            }
        };
        order.sort_by_key(|&id| sort_key(id));

        let unfixed_neg = inst.variables.iter().map(|v| v.objective.min(0.0)).sum();
        Search {
            inst,
            var_rows,
            min_lhs,
            max_lhs,
            value: vec![UNFIXED; n],
            trail: Vec::with_capacity(n),
            queue: Vec::new(),
            in_queue: vec![false; inst.n_rows()],
            order,
            fixed_obj: 0.0,
            unfixed_neg,
            slot_of_var,
            routed_count: vec![0; n_slots],
            powered_count: vec![0; n_slots],
            slot_power_vars,
            route_term_enabled,
            incumbent: None,
            nodes: 0,
            aborted: false,
        }
    }

    fn fix(&mut self, var: u32, val: u8) {
        debug_assert_eq!(self.value[var as usize], UNFIXED);
        self.value[var as usize] = val;
        self.trail.push(var);
        for &(row, c) in &self.var_rows[var as usize] {
            let fixed = if val == 1 { c } else { 0.0 };
            self.min_lhs[row as usize] += fixed - c.min(0.0);
            self.max_lhs[row as usize] += fixed - c.max(0.0);
            if !self.in_queue[row as usize] {
                self.in_queue[row as usize] = true;
                self.queue.push(row);
            }
        }
        let obj = self.inst.variables[var as usize].objective;
        self.unfixed_neg -= obj.min(0.0);
        if val == 1 {
            self.fixed_obj += obj;
            let slot = self.slot_of_var[var as usize];
            if slot != NO_SLOT {
                match self.inst.variables[var as usize].kind {
                    VarKind::RouteUse { .. } => self.routed_count[slot as usize] += 1,
                    VarKind::PowerOn { .. } => self.powered_count[slot as usize] += 1,
                    VarKind::SelectTuple { .. } => {}
                }
            }
        }
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let var = self.trail.pop().unwrap();
            let val = self.value[var as usize];
            self.value[var as usize] = UNFIXED;
            for &(row, c) in &self.var_rows[var as usize] {
                let fixed = if val == 1 { c } else { 0.0 };
                self.min_lhs[row as usize] -= fixed - c.min(0.0);
                self.max_lhs[row as usize] -= fixed - c.max(0.0);
            }
            let obj = self.inst.variables[var as usize].objective;
            self.unfixed_neg += obj.min(0.0);
            if val == 1 {
                self.fixed_obj -= obj;
                let slot = self.slot_of_var[var as usize];
                if slot != NO_SLOT {
                    match self.inst.variables[var as usize].kind {
                        VarKind::RouteUse { .. } => self.routed_count[slot as usize] -= 1,
                        VarKind::PowerOn { .. } => self.powered_count[slot as usize] -= 1,
                        VarKind::SelectTuple { .. } => {}
                    }
                }
            }
        }
        for &row in &self.queue {
            self.in_queue[row as usize] = false;
        }
        self.queue.clear();
    }

    /// Drain the row queue, fixing forced variables; false on conflict.
    fn propagate(&mut self) -> bool {
        while let Some(row) = self.queue.pop() {
            self.in_queue[row as usize] = false;
            let c = &self.inst.constraints[row as usize];
            let (le_side, ge_side) = match c.sense {
                Sense::Le => (true, false),
                Sense::Ge => (false, true),
                Sense::Eq => (true, true),
            };
            if le_side && self.min_lhs[row as usize] > c.rhs + EPS {
                return false;
            }
            if ge_side && self.max_lhs[row as usize] < c.rhs - EPS {
                return false;
            }
            for k in 0..c.terms.len() {
                let (v, coeff) = c.terms[k];
                if self.value[v] != UNFIXED {
                    continue;
                }
                let min = self.min_lhs[row as usize];
                let max = self.max_lhs[row as usize];
                if le_side {
                    if coeff > 0.0 && min + coeff > c.rhs + EPS {
                        self.fix(v as u32, 0);
                        continue;
                    }
                    if coeff < 0.0 && min - coeff > c.rhs + EPS {
                        self.fix(v as u32, 1);
                        continue;
                    }
                }
                if ge_side {
                    if coeff > 0.0 && max - coeff < c.rhs - EPS {
                        self.fix(v as u32, 1);
                        continue;
                    }
                    if coeff < 0.0 && max + coeff < c.rhs - EPS {
                        self.fix(v as u32, 0);
                    }
                }
            }
        }
        true
    }

    /// Lower bound on any completion of the current partial assignment.
    fn bound(&self) -> f64 {
        let mut b = self.fixed_obj + self.unfixed_neg + self.inst.objective_offset;
        if self.route_term_enabled {
            for (slot, powers) in self.slot_power_vars.iter().enumerate() {
                if self.routed_count[slot] == 0 || self.powered_count[slot] > 0 {
                    continue;
                }
                let cheapest = powers
                    .iter()
                    .filter(|&&x| self.value[x as usize] == UNFIXED)
                    .map(|&x| self.inst.variables[x as usize].objective)
                    .fold(f64::INFINITY, f64::min);
                if cheapest.is_finite() && cheapest > 0.0 {
                    b += cheapest;
                }
            }
        }
        b
    }

    fn cutoff(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::INFINITY, |(obj, _)| obj - EPS)
    }

    fn record_leaf(&mut self) {
        let mut obj = 0.0;
        for v in &self.inst.variables {
            if self.value[v.id] == 1 {
                obj += v.objective;
            }
        }
        obj += self.inst.objective_offset;
        debug_assert!(self.inst.constraints.iter().all(|c| {
            let a: Vec<bool> = self.value.iter().map(|&x| x == 1).collect();
            c.slack(&a) >= -1e-6
        }));
        if obj < self.cutoff() {
            self.incumbent = Some((obj, self.value.iter().map(|&x| x == 1).collect()));
        }
    }

    fn dfs(&mut self, from: usize, budget: &Budget, started: &Instant) {
        self.nodes += 1;
        if self.nodes >= budget.max_nodes
            || (self.nodes % 512 == 0 && started.elapsed().as_secs_f64() > budget.max_wall_s)
        {
            self.aborted = true;
            return;
        }
        let mut k = from;
        while k < self.order.len() && self.value[self.order[k] as usize] != UNFIXED {
            k += 1;
        }
        if k == self.order.len() {
            self.record_leaf();
            return;
        }
        let var = self.order[k];
        for val in [0u8, 1u8] {
            let mark = self.trail.len();
            self.fix(var, val);
            if self.propagate() && self.bound() < self.cutoff() {
                self.dfs(k + 1, budget, started);
            }
            self.undo_to(mark);
            if self.aborted {
                return;
            }
        }
    }

    fn run(mut self, budget: &Budget) -> SolveResult {
        let started = Instant::now();
        let n_req = self.inst.requests.len();
        // Root propagation over every row.
        for row in 0..self.inst.n_rows() as u32 {
            self.in_queue[row as usize] = true;
            self.queue.push(row);
        }
        if !self.propagate() {
            return SolveResult {
                wall_time_s: started.elapsed().as_secs_f64(),
                ..SolveResult::failure(SolveStatus::Infeasible, n_req)
            };
        }
        let root_bound = self.bound();
        self.dfs(0, budget, &started);
        let wall = started.elapsed().as_secs_f64();
        let nodes = self.nodes;
        match (self.aborted, self.incumbent) {
            (false, Some((obj, a))) => SolveResult {
                status: SolveStatus::Optimal,
                assignment: Some(a),
                objective: Some(obj),
                lower_bound: Some(obj),
                nodes_explored: nodes,
                wall_time_s: wall,
                blocked: Vec::new(),
            },
            (false, None) => SolveResult {
                nodes_explored: nodes,
                wall_time_s: wall,
                ..SolveResult::failure(SolveStatus::Infeasible, n_req)
            },
            (true, Some((obj, a))) => SolveResult {
                status: SolveStatus::Feasible,
                assignment: Some(a),
                objective: Some(obj),
                lower_bound: Some(root_bound),
                nodes_explored: nodes,
                wall_time_s: wall,
                blocked: Vec::new(),
            },
            (true, None) => SolveResult {
                lower_bound: Some(root_bound),
                nodes_explored: nodes,
                wall_time_s: wall,
                ..SolveResult::failure(SolveStatus::Timeout, n_req)
            },
        }
    }
}

fn self_kind(inst: &IlpInstance, id: u32) -> VarKind {
    inst.variables[id as usize].kind
}

/// Exhaustive search over all assignments; the agreement oracle for [`solve`].
///
/// Refuses instances above 25 variables. Candidate `counter` maps to bits with
/// variable 0 as the most significant, counted upward, and ties keep the first
/// optimum encountered — a fixed, implementation-independent order.
pub fn brute_force(inst: &IlpInstance) -> Result<SolveResult> {
    let n = inst.n_vars();
    if n > 25 {
        return Err(Error::Refused(format!(
            "exhaustive search is for tiny instances; got {n} variables (limit 25)"
        )));
    }
    let started = Instant::now();
    let mut best: Option<(f64, Vec<bool>)> = None;
    let mut assignment = vec![false; n];
    for counter in 0u64..(1u64 << n) {
        for (v, slot) in assignment.iter_mut().enumerate() {
            *slot = (counter >> (n - 1 - v)) & 1 == 1;
        }
        if inst.constraints.iter().any(|c| c.slack(&assignment) < -EPS) {
            continue;
        }
        let obj = inst.objective_value(&assignment);
        if best.as_ref().map_or(true, |(b, _)| obj < b - EPS) {
            best = Some((obj, assignment.clone()));
        }
    }
    let n_req = inst.requests.len();
    Ok(match best {
        Some((obj, a)) => SolveResult {
            status: SolveStatus::Optimal,
            assignment: Some(a),
            objective: Some(obj),
            lower_bound: Some(obj),
            nodes_explored: 1 << n,
            wall_time_s: started.elapsed().as_secs_f64(),
            blocked: Vec::new(),
        },
        None => SolveResult {
            nodes_explored: 1 << n,
            wall_time_s: started.elapsed().as_secs_f64(),
            ..SolveResult::failure(SolveStatus::Infeasible, n_req)
        },
    })
}
