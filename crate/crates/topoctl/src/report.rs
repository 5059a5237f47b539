//! Human- and machine-readable solve reports: decoded assignments (routes over
//! original node ids, powered slots with their settings), engine comparisons,
//! and blocking statistics. Reports serialize deterministically; in
//! deterministic mode the wall-clock field is zeroed so reruns are byte-identical.

use serde::{Deserialize, Serialize};

use crate::channel::TransceiverKind;
use crate::ilp::build::VarIndex;
use crate::ilp::IlpInstance;
use crate::links::{BeamSetting, CandidateSet};
use crate::scenario::Scenario;
use crate::solve::{SolveResult, SolveStatus};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HopView {
    pub from: i64,
    pub to: i64,
    pub slot: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteView {
    pub request: usize,
    pub s: i64,
    pub d: i64,
    pub min_throughput_mbps: f64,
    pub max_hops: u32,
    pub hops: Vec<HopView>,
    /// True when the hops form a complete walk from source to destination.
    pub served: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlotView {
    pub node: i64,
    pub slot: usize,
    pub kind: String,
    pub power_mw: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beam_mrad: Option<f64>,
    pub destinations: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssignmentView {
    pub routes: Vec<RouteView>,
    pub slots: Vec<SlotView>,
    pub total_power_mw: f64,
}

/// Decode a dense 0/1 assignment into routes and powered slots, rendered with
/// the scenario's original node ids.
pub fn describe_assignment(
    sc: &Scenario,
    inst: &IlpInstance,
    cands: &CandidateSet,
    assignment: &[bool],
) -> AssignmentView {
    let idx = VarIndex::of(inst);
    let id = |dense: usize| sc.raw_ids[dense];

    let mut routes = Vec::new();
    for (r, q) in inst.requests.iter().enumerate() {
        let mut chosen: Vec<(usize, usize, usize)> = idx
            .route
            .iter()
            .filter(|((_, _, _, req), &var)| *req == r && assignment[var])
            .map(|(&(i, j, t, _), _)| (i, j, t))
            .collect();
        // Walk the hops in path order from the source.
        let mut hops = Vec::new();
        let mut at = q.s;
        for _ in 0..inst.n_nodes {
            let Some(pos) = chosen.iter().position(|&(i, _, _)| i == at) else {
                break;
            };
            let (i, j, t) = chosen.swap_remove(pos);
            hops.push(HopView { from: id(i), to: id(j), slot: t });
            at = j;
            if at == q.d {
                break;
            }
        }
        let served = !hops.is_empty() && at == q.d && chosen.is_empty();
        routes.push(RouteView {
            request: r,
            s: id(q.s),
            d: id(q.d),
            min_throughput_mbps: q.min_throughput_mbps,
            max_hops: q.max_hops,
            hops,
            served,
        });
    }

    let mut slots = Vec::new();
    let mut total = 0.0;
    for (&(node, slot, level), &var) in &idx.power {
        if !assignment[var] {
            continue;
        }
        let power_mw = sc.sets.powers_mw[level];
        total += power_mw;
        let mut destinations = Vec::new();
        let mut beam_mrad = None;
        for (ci, c) in cands.candidates.iter().enumerate() {
            if (c.from, c.tx, c.power_idx) == (node, slot, level)
                && assignment[idx.tuple_of_cand[ci]]
            {
                destinations.push(id(c.to));
                if let BeamSetting::Index(b) = c.beam_tx {
                    beam_mrad = Some(sc.sets.beams_mrad[b]);
                }
            }
        }
        destinations.sort_unstable();
        destinations.dedup();
        let kind = match sc.nodes[node].transceivers[slot].kind {
            TransceiverKind::Rf => "rf",
            TransceiverKind::Fso => "fso",
        };
        slots.push(SlotView {
            node: id(node),
            slot,
            kind: kind.to_string(),
            power_mw,
            beam_mrad,
            destinations,
        });
    }

    AssignmentView { routes, slots, total_power_mw: total }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub engine: String,
    pub scenario_digest: String,
    pub status: SolveStatus,
    pub n_requests: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_power_mw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_bound_mw: Option<f64>,
    pub blocked_requests: Vec<usize>,
    pub blocking_probability: f64,
    pub nodes_explored: u64,
    pub wall_time_s: f64,
    /// Caller-supplied knobs (budgets, seeds, menu flags) echoed verbatim so a
    /// report is reproducible from its own content.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub options: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<AssignmentView>,
}

/// Fraction of requests that could not be served; zero when nothing was asked.
pub fn blocking_probability(blocked: usize, offered: usize) -> f64 {
    if offered == 0 {
        0.0
    } else {
        blocked as f64 / offered as f64
    }
}

/// Assemble the report for one engine run. `deterministic` zeroes the wall
/// clock so identical reruns serialize byte-identically.
pub fn build_report(
    sc: &Scenario,
    inst: &IlpInstance,
    cands: &CandidateSet,
    engine: &str,
    result: &SolveResult,
    deterministic: bool,
) -> SolveReport {
    let assignment = result
        .assignment
        .as_ref()
        .map(|a| describe_assignment(sc, inst, cands, a));
    SolveReport {
        engine: engine.to_string(),
        scenario_digest: sc.digest.clone(),
        status: result.status,
        n_requests: inst.requests.len(),
        total_power_mw: result.objective,
        lower_bound_mw: result.lower_bound,
        blocked_requests: result.blocked.clone(),
        blocking_probability: blocking_probability(result.blocked.len(), inst.requests.len()),
        nodes_explored: result.nodes_explored,
        wall_time_s: if deterministic { 0.0 } else { result.wall_time_s },
        options: None,
        assignment,
    }
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub engine: String,
    pub status: SolveStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_power_mw: Option<f64>,
    /// Objective relative to the best feasible engine (1.0 = matched the best).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_to_best: Option<f64>,
    pub blocked: usize,
    pub nodes_explored: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario_digest: String,
    /// Shared engine knobs echoed by callers that apply one set to every row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub options: Option<serde_json::Value>,
    pub rows: Vec<ComparisonRow>,
}

pub fn compare(reports: &[SolveReport]) -> Comparison {
    let best = reports
        .iter()
        .filter_map(|r| r.total_power_mw)
        .fold(f64::INFINITY, f64::min);
    let rows = reports
        .iter()
        .map(|r| ComparisonRow {
            engine: r.engine.clone(),
            status: r.status,
            total_power_mw: r.total_power_mw,
            ratio_to_best: r.total_power_mw.map(|o| {
                if best > 0.0 && best.is_finite() {
                    o / best
                } else {
                    1.0
                }
            }),
            blocked: r.blocked_requests.len(),
            nodes_explored: r.nodes_explored,
            wall_time_s: r.wall_time_s,
        })
        .collect();
    Comparison {
        scenario_digest: reports.first().map(|r| r.scenario_digest.clone()).unwrap_or_default(),
        options: None,
        rows,
    }
}

impl Comparison {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("comparison serializes");
        s.push('\n');
        s
    }

    /// Fixed-width text table for terminal output.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:<16} {:>12} {:>8} {:>8} {:>12} {:>10}\n",
            "engine", "status", "power_mw", "ratio", "blocked", "nodes", "wall_s"
        ));
        for r in &self.rows {
            let power = r
                .total_power_mw
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "-".to_string());
            let ratio = r
                .ratio_to_best
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "-".to_string());
            out.push_str(&format!(
                "{:<10} {:<16} {:>12} {:>8} {:>8} {:>12} {:>10.3}\n",
                r.engine,
                format!("{:?}", r.status),
                power,
                ratio,
                r.blocked,
                r.nodes_explored,
                r.wall_time_s
            ));
        }
        out
    }
}
