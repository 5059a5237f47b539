//! Greedy first-fit assignment: requests in canonical order take the first route
//! option whose links still have headroom, links get minimal adequate settings,
//! and whatever does not fit is reported blocked.
//!
//! The same machinery seeds the particle swarm: [`canonical_order`],
//! [`greedy_choices`], [`minimal_picks`] and [`assignment_from_links`] are shared.

use std::collections::BTreeMap;

use crate::ilp::build::VarIndex;
use crate::ilp::check::{blocked_requests, check_feasible};
use crate::ilp::{IlpInstance, QosRequest};
use crate::links::{BeamSetting, CandidateSet};

use super::routes::RouteTable;
use super::{SolveResult, SolveStatus};

/// Deterministic service order: tightest hop budget first, then largest demand,
/// then source and destination indices.
pub fn canonical_order(requests: &[QosRequest]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&requests[a], &requests[b]);
        ra.max_hops
            .cmp(&rb.max_hops)
            .then(rb.min_throughput_mbps.total_cmp(&ra.min_throughput_mbps))
            .then(ra.s.cmp(&rb.s))
            .then(ra.d.cmp(&rb.d))
            .then(a.cmp(&b))
    });
    order
}

fn link_is_fso(cands: &CandidateSet, link: (usize, usize, usize)) -> bool {
    cands
        .link_candidates(link.0, link.1, link.2)
        .first()
        .map_or(false, |c| matches!(c.beam_tx, BeamSetting::Index(_)))
}

/// Pick one route option per request, greedily, respecting per-link headroom and
/// the one-out/one-in exclusivity of FSO slots. `None` = request not placed.
pub fn greedy_choices(
    table: &RouteTable,
    requests: &[QosRequest],
    cands: &CandidateSet,
    order: &[usize],
) -> Vec<Option<usize>> {
    let mut cap: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    for link in cands.links() {
        let best = cands
            .link_candidates(link.0, link.1, link.2)
            .iter()
            .map(|c| c.effective_mbps())
            .fold(0.0, f64::max);
        cap.insert(link, best);
    }
    let mut load: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    let mut out_to: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut in_from: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut choice = vec![None; requests.len()];

    for &r in order {
        let th = requests[r].min_throughput_mbps;
        'options: for (oi, option) in table.options(r).iter().enumerate() {
            for &(u, v, t) in &option.hops {
                if load.get(&(u, v, t)).copied().unwrap_or(0.0) + th
                    > cap[&(u, v, t)] + 1e-9
                {
                    continue 'options;
                }
                if link_is_fso(cands, (u, v, t))
                    && (out_to.get(&(u, t)).is_some_and(|&w| w != v)
                        || in_from.get(&(v, t)).is_some_and(|&w| w != u))
                {
                    continue 'options;
                }
            }
            for &(u, v, t) in &option.hops {
                *load.entry((u, v, t)).or_insert(0.0) += th;
                if link_is_fso(cands, (u, v, t)) {
                    out_to.insert((u, t), v);
                    in_from.insert((v, t), u);
                }
            }
            choice[r] = Some(oi);
            break;
        }
    }
    choice
}

/// Minimal adequate tuple per used link: the cheapest power (RF slots unified to
/// one level), the narrowest sufficient transmit opening, and receive openings
/// matched to what the peer end transmits on that slot.
pub fn minimal_picks(
    cands: &CandidateSet,
    table: &RouteTable,
    requests: &[QosRequest],
    choice: &[Option<usize>],
) -> BTreeMap<(usize, usize, usize), usize> {
    let mut load: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    for (r, c) in choice.iter().enumerate() {
        if let Some(oi) = c {
            for &hop in &table.options(r)[*oi].hops {
                *load.entry(hop).or_insert(0.0) += requests[r].min_throughput_mbps;
            }
        }
    }
    // First pass: cheapest adequate (power, tx opening) per link.
    let mut level: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    let mut opening: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    for (&link, &need) in &load {
        let cl = cands.link_candidates(link.0, link.1, link.2);
        let pick = cl
            .iter()
            .filter(|c| c.effective_mbps() + 1e-9 >= need)
            .min_by(|a, b| {
                (a.power_idx, a.beam_tx).cmp(&(b.power_idx, b.beam_tx))
            })
            .or_else(|| cl.iter().max_by(|a, b| a.effective_mbps().total_cmp(&b.effective_mbps())));
        if let Some(c) = pick {
            level.insert(link, c.power_idx);
            if let BeamSetting::Index(bt) = c.beam_tx {
                opening.insert(link, bt);
            }
        }
    }
    // Unify RF levels per transmitting slot (one power variable instead of two).
    let mut slot_level: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&(u, _v, t), &lv) in &level {
        slot_level
            .entry((u, t))
            .and_modify(|m| *m = (*m).max(lv))
            .or_insert(lv);
    }
    // What each node transmits with on each slot, for receive-opening matching.
    let mut tx_opening: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&(u, _v, t), &bt) in &opening {
        tx_opening.insert((u, t), bt);
    }

    let mut picked = BTreeMap::new();
    for (&link, base_level) in &level {
        let (u, v, t) = link;
        let cl = cands.link_candidates(u, v, t);
        let cand_index_base = cands
            .candidates
            .iter()
            .position(|c| (c.from, c.to, c.tx) == (u, v, t))
            .expect("link came from this candidate set");
        let chosen = if link_is_fso(cands, link) {
            let bt = opening[&link];
            let br = tx_opening.get(&(v, t)).copied().unwrap_or(bt);
            let want = |c: &crate::links::LinkCandidate, br_want: usize| {
                c.power_idx == *base_level
                    && c.beam_tx == BeamSetting::Index(bt)
                    && c.beam_rx == BeamSetting::Index(br_want)
            };
            cl.iter()
                .position(|c| want(c, br))
                .or_else(|| cl.iter().position(|c| want(c, bt)))
        } else {
            let unified = slot_level[&(u, t)];
            cl.iter()
                .position(|c| c.power_idx == unified)
                .or_else(|| cl.iter().position(|c| c.power_idx == *base_level))
        };
        if let Some(offset) = chosen {
            picked.insert(link, cand_index_base + offset);
        }
    }
    picked
}

/// Materialize route choices and tuple picks as a dense 0/1 assignment: route
/// bits along every chosen option, one tuple bit per picked link, and a power bit
/// for every level in use at a slot.
pub fn assignment_from_links(
    inst: &IlpInstance,
    idx: &VarIndex,
    cands: &CandidateSet,
    table: &RouteTable,
    choice: &[Option<usize>],
    picked: &BTreeMap<(usize, usize, usize), usize>,
) -> Vec<bool> {
    let mut a = vec![false; inst.n_vars()];
    for (r, c) in choice.iter().enumerate() {
        if let Some(oi) = c {
            for &(u, v, t) in &table.options(r)[*oi].hops {
                if let Some(&id) = idx.route.get(&(u, v, t, r)) {
                    a[id] = true;
                }
            }
        }
    }
    for &ci in picked.values() {
        a[idx.tuple_of_cand[ci]] = true;
        let c = &cands.candidates[ci];
        if let Some(&id) = idx.power.get(&(c.from, c.tx, c.power_idx)) {
            a[id] = true;
        }
    }
    a
}

/// Run first-fit as a standalone engine.
pub fn solve(inst: &IlpInstance, cands: &CandidateSet, table: &RouteTable) -> SolveResult {
    let started = std::time::Instant::now();
    let order = canonical_order(&inst.requests);
    let choice = greedy_choices(table, &inst.requests, cands, &order);
    let picked = minimal_picks(cands, table, &inst.requests, &choice);
    let idx = VarIndex::of(inst);
    let assignment = assignment_from_links(inst, &idx, cands, table, &choice, &picked);
    let report = check_feasible(inst, &assignment).expect("assignment sized to instance");
    let mut blocked: Vec<usize> = choice
        .iter()
        .enumerate()
        .filter_map(|(r, c)| if c.is_none() { Some(r) } else { None })
        .collect();
    if !report.feasible {
        for r in blocked_requests(inst, &assignment) {
            if !blocked.contains(&r) {
                blocked.push(r);
            }
        }
        blocked.sort_unstable();
    }
    SolveResult {
        status: if report.feasible {
            SolveStatus::Feasible
        } else {
            SolveStatus::NoFeasibleFound
        },
        objective: if report.feasible { Some(report.objective) } else { None },
        assignment: Some(assignment),
        lower_bound: None,
        nodes_explored: 1,
        wall_time_s: started.elapsed().as_secs_f64(),
        blocked,
    }
}
