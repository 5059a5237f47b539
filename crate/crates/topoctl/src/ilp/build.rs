//! Instance construction.
//!
//! Variables are laid out in three dense blocks — route-use, tuple-select, power-on —
//! each internally sorted by its structural coordinates, so two builds of the same
//! scenario produce byte-identical instances. Rows are emitted family by family in a
//! fixed order; within a row, term ids are strictly increasing.
//!
//! Emission scopes worth knowing:
//!
//! * power-activation rows (both directions) are emitted for *every* slot/level
//!   combination, even when no tuple exists there — the lower row then pins the
//!   power variable to zero;
//! * selector, beam-consistency and alignment rows are emitted only where they can
//!   bind: selector rows need at least one tuple, beam/alignment rows need both of
//!   their sums non-empty;
//! * incoming-side rows follow the slot-symmetric reading (a tuple on slot `t`
//!   occupies slot `t` at both endpoints), so they exist only where the receiving
//!   node actually has a slot `t` of the right kind.

use std::collections::{BTreeMap, BTreeSet};

use crate::channel::{DiscreteSets, NodeSpec, TransceiverKind};
use crate::links::{has_los, BeamSetting, CandidateSet};
use crate::{Error, Result};

use super::{IlpInstance, IlpVariable, LinearConstraint, QosRequest, RowTag, Sense, VarKind};

/// Options affecting row generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BuildOptions {
    /// Replace the node-count big-M in the power-activation upper rows with the true
    /// number of tuples at that slot and level (never weaker, usually much tighter).
    pub tighten_big_m: bool,
}

/// Reverse lookup from structural coordinates to variable ids, derived from an
/// instance on demand (it is not serialized with it).
#[derive(Debug, Clone)]
pub struct VarIndex {
    /// `(from, to, tx, req) -> id` of the route-use variable.
    pub route: BTreeMap<(usize, usize, usize, usize), usize>,
    /// Candidate index -> id of its tuple-select variable.
    pub tuple_of_cand: Vec<usize>,
    /// `(node, tx, power_idx) -> id` of the power-on variable.
    pub power: BTreeMap<(usize, usize, usize), usize>,
}

impl VarIndex {
    pub fn of(inst: &IlpInstance) -> Self {
        let mut route = BTreeMap::new();
        let mut power = BTreeMap::new();
        let mut max_cand = 0usize;
        for v in &inst.variables {
            if let VarKind::SelectTuple { cand, .. } = v.kind {
                max_cand = max_cand.max(cand + 1);
            }
        }
        let mut tuple_of_cand = vec![usize::MAX; max_cand];
        for v in &inst.variables {
            match v.kind {
                VarKind::RouteUse { from, to, tx, req } => {
                    route.insert((from, to, tx, req), v.id);
                }
                VarKind::SelectTuple { cand, .. } => tuple_of_cand[cand] = v.id,
                VarKind::PowerOn { node, tx, power_idx } => {
                    power.insert((node, tx, power_idx), v.id);
                }
            }
        }
        VarIndex { route, tuple_of_cand, power }
    }
}

fn push_row(
    rows: &mut Vec<LinearConstraint>,
    tag: RowTag,
    mut terms: Vec<(usize, f64)>,
    sense: Sense,
    rhs: f64,
) {
    terms.sort_unstable_by_key(|t| t.0);
    debug_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0), "duplicate term in {tag:?}");
    rows.push(LinearConstraint { tag, terms, sense, rhs });
}

/// Build the full 0/1 program for one scenario.
///
/// `blocked` holds the same normalized no-line-of-sight pairs the candidate set was
/// enumerated with; the alignment-witness rows need it to qualify witnesses.
pub fn build_instance(
    nodes: &[NodeSpec],
    sets: &DiscreteSets,
    cands: &CandidateSet,
    requests: &[QosRequest],
    blocked: &BTreeSet<(usize, usize)>,
    scenario_digest: &str,
    opts: &BuildOptions,
) -> Result<IlpInstance> {
    let n = nodes.len();
    let mut problems = Vec::new();
    for (r, req) in requests.iter().enumerate() {
        req.validate(n, &format!("request {r}"), &mut problems);
    }
    if !problems.is_empty() {
        return Err(Error::InvalidScenario { problems });
    }
    let n_req = requests.len();
    let n_powers = sets.powers_mw.len();
    let n_beams = sets.beams_mrad.len();
    let slots_per_node: Vec<usize> = nodes.iter().map(|nd| nd.transceivers.len()).collect();
    let is_fso_slot = |i: usize, t: usize| {
        t < slots_per_node[i] && nodes[i].transceivers[t].kind == TransceiverKind::Fso
    };
    let is_rf_slot = |i: usize, t: usize| {
        t < slots_per_node[i] && nodes[i].transceivers[t].kind == TransceiverKind::Rf
    };

    // Structural maps over the candidate set, all keyed in sorted order.
    let links = cands.links();
    let mut cands_of_link: BTreeMap<(usize, usize, usize), Vec<usize>> = BTreeMap::new();
    let mut departing: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut incoming: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (ci, c) in cands.candidates.iter().enumerate() {
        cands_of_link.entry((c.from, c.to, c.tx)).or_default().push(ci);
        departing.entry((c.from, c.tx)).or_default().push(ci);
        incoming.entry((c.to, c.tx)).or_default().push(ci);
    }

    // ---- variables: route block, tuple block, power block --------------------------

    let mut variables = Vec::new();
    let mut route_id: BTreeMap<(usize, usize, usize, usize), usize> = BTreeMap::new();
    for &(i, j, t) in &links {
        for r in 0..n_req {
            let id = variables.len();
            route_id.insert((i, j, t, r), id);
            variables.push(IlpVariable {
                id,
                kind: VarKind::RouteUse { from: i, to: j, tx: t, req: r },
                objective: 0.0,
            });
        }
    }
    let tuple_base = variables.len();
    for (ci, c) in cands.candidates.iter().enumerate() {
        let id = variables.len();
        variables.push(IlpVariable {
            id,
            kind: VarKind::SelectTuple {
                from: c.from,
                to: c.to,
                tx: c.tx,
                power_idx: c.power_idx,
                beam_tx: c.beam_tx,
                beam_rx: c.beam_rx,
                cand: ci,
            },
            objective: 0.0,
        });
        debug_assert_eq!(id, tuple_base + ci);
    }
    let tuple_id = |ci: usize| tuple_base + ci;
    let mut power_id: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    for (i, &n_slots) in slots_per_node.iter().enumerate() {
        for t in 0..n_slots {
            for p in 0..n_powers {
                let id = variables.len();
                power_id.insert((i, t, p), id);
                variables.push(IlpVariable {
                    id,
                    kind: VarKind::PowerOn { node: i, tx: t, power_idx: p },
                    objective: sets.powers_mw[p],
                });
            }
        }
    }

    // ---- rows ----------------------------------------------------------------------

    let mut rows = Vec::new();

    // Flow conservation: every node of every request, sources +1, destinations -1.
    for (r, req) in requests.iter().enumerate() {
        for v in 0..n {
            let mut terms = Vec::new();
            for (&(i, j, t), _) in &cands_of_link {
                if i == v {
                    terms.push((route_id[&(i, j, t, r)], 1.0));
                } else if j == v {
                    terms.push((route_id[&(i, j, t, r)], -1.0));
                }
            }
            let rhs = if v == req.s {
                1.0
            } else if v == req.d {
                -1.0
            } else {
                0.0
            };
            push_row(&mut rows, RowTag::RouteFlow { node: v, req: r }, terms, Sense::Eq, rhs);
        }
    }

    // A request may ride a link only if some tuple on it is selected.
    for (&(i, j, t), cis) in &cands_of_link {
        for r in 0..n_req {
            let mut terms = vec![(route_id[&(i, j, t, r)], 1.0)];
            terms.extend(cis.iter().map(|&ci| (tuple_id(ci), -1.0)));
            push_row(
                &mut rows,
                RowTag::RouteLink { from: i, to: j, tx: t, req: r },
                terms,
                Sense::Le,
                0.0,
            );
        }
    }

    // Hop budget per request.
    for (r, req) in requests.iter().enumerate() {
        let terms = cands_of_link
            .keys()
            .map(|&(i, j, t)| (route_id[&(i, j, t, r)], 1.0))
            .collect();
        push_row(&mut rows, RowTag::HopBudget { req: r }, terms, Sense::Le, f64::from(req.max_hops));
    }

    // Demand routed over a link fits inside its BER-derated shared bandwidth.
    for (&(i, j, t), cis) in &cands_of_link {
        let mut terms: Vec<(usize, f64)> = (0..n_req)
            .map(|r| (route_id[&(i, j, t, r)], requests[r].min_throughput_mbps))
            .collect();
        terms.extend(
            cis.iter()
                .map(|&ci| (tuple_id(ci), -cands.candidates[ci].effective_mbps())),
        );
        push_row(
            &mut rows,
            RowTag::LinkThroughput { from: i, to: j, tx: t },
            terms,
            Sense::Le,
            0.0,
        );
    }

    // Power activation, both directions, for every slot/level combination.
    for (i, &n_slots) in slots_per_node.iter().enumerate() {
        for t in 0..n_slots {
            let at_level: Vec<Vec<usize>> = {
                let mut v = vec![Vec::new(); n_powers];
                if let Some(cis) = departing.get(&(i, t)) {
                    for &ci in cis {
                        v[cands.candidates[ci].power_idx].push(ci);
                    }
                }
                v
            };
            for p in 0..n_powers {
                let big_m = if opts.tighten_big_m && !at_level[p].is_empty() {
                    at_level[p].len() as f64
                } else {
                    n as f64
                };
                let mut terms: Vec<(usize, f64)> =
                    at_level[p].iter().map(|&ci| (tuple_id(ci), 1.0)).collect();
                terms.push((power_id[&(i, t, p)], -big_m));
                push_row(
                    &mut rows,
                    RowTag::PowerUpper { node: i, tx: t, power_idx: p },
                    terms,
                    Sense::Le,
                    0.0,
                );
            }
            for p in 0..n_powers {
                let mut terms = vec![(power_id[&(i, t, p)], 1.0)];
                terms.extend(at_level[p].iter().map(|&ci| (tuple_id(ci), -1.0)));
                push_row(
                    &mut rows,
                    RowTag::PowerLower { node: i, tx: t, power_idx: p },
                    terms,
                    Sense::Le,
                    0.0,
                );
            }
        }
    }

    // FSO slots transmit at most one tuple...
    for (i, &n_slots) in slots_per_node.iter().enumerate() {
        for t in 0..n_slots {
            if !is_fso_slot(i, t) {
                continue;
            }
            if let Some(cis) = departing.get(&(i, t)) {
                let terms = cis.iter().map(|&ci| (tuple_id(ci), 1.0)).collect();
                push_row(&mut rows, RowTag::FsoOutSelect { node: i, tx: t }, terms, Sense::Le, 1.0);
            }
        }
    }
    // ...and receive at most one (the receiving end occupies the same slot index).
    for (i, &n_slots) in slots_per_node.iter().enumerate() {
        for t in 0..n_slots {
            if !is_fso_slot(i, t) {
                continue;
            }
            if let Some(cis) = incoming.get(&(i, t)) {
                let terms: Vec<(usize, f64)> = cis
                    .iter()
                    .filter(|&&ci| matches!(cands.candidates[ci].beam_tx, BeamSetting::Index(_)))
                    .map(|&ci| (tuple_id(ci), 1.0))
                    .collect();
                if !terms.is_empty() {
                    push_row(
                        &mut rows,
                        RowTag::FsoInSelect { node: i, tx: t },
                        terms,
                        Sense::Le,
                        1.0,
                    );
                }
            }
        }
    }

    // RF slots keep at most one power level per destination.
    for (&(i, j, t), cis) in &cands_of_link {
        if !is_rf_slot(i, t) {
            continue;
        }
        let terms = cis.iter().map(|&ci| (tuple_id(ci), 1.0)).collect();
        push_row(&mut rows, RowTag::RfPairSelect { from: i, to: j, tx: t }, terms, Sense::Le, 1.0);
    }

    // Beam bookkeeping. All three families share the same shape: the forward sum
    // (tuples of (i, j, t) transmitting with opening bt) plus a mismatch sum of
    // FSO tuples received somewhere with a different opening, capped at one.
    let mismatch_terms = |cis: &[usize], bt: usize| -> Vec<(usize, f64)> {
        cis.iter()
            .filter(|&&ci| match cands.candidates[ci].beam_rx {
                BeamSetting::Index(br) => br != bt,
                BeamSetting::Omni => false,
            })
            .map(|&ci| (tuple_id(ci), 1.0))
            .collect()
    };
    let forward_terms = |cis: &[usize], bt: usize| -> Vec<(usize, f64)> {
        cis.iter()
            .filter(|&&ci| cands.candidates[ci].beam_tx == BeamSetting::Index(bt))
            .map(|&ci| (tuple_id(ci), 1.0))
            .collect()
    };
    let empty = Vec::new();

    // Peer consistency: if (i, j, t) transmits with bt, tuples j -> i on the same
    // slot must be received at i with the same opening.
    for (&(i, j, t), cis) in &cands_of_link {
        if !is_fso_slot(i, t) {
            continue;
        }
        let reverse = cands_of_link.get(&(j, i, t)).unwrap_or(&empty);
        for bt in 0..n_beams {
            let fwd = forward_terms(cis, bt);
            if fwd.is_empty() {
                continue;
            }
            let mis = mismatch_terms(reverse, bt);
            if mis.is_empty() {
                continue;
            }
            let mut terms = fwd;
            terms.extend(mis);
            push_row(
                &mut rows,
                RowTag::BeamConsistency { from: i, to: j, tx: t, beam_tx: bt },
                terms,
                Sense::Le,
                1.0,
            );
        }
    }

    // Same-node alignment: anything received at i on slot t (from any origin) must
    // match the opening i transmits with on that slot.
    for (&(i, j, t), cis) in &cands_of_link {
        if !is_fso_slot(i, t) {
            continue;
        }
        let into_i = incoming.get(&(i, t)).unwrap_or(&empty);
        for bt in 0..n_beams {
            let fwd = forward_terms(cis, bt);
            if fwd.is_empty() {
                continue;
            }
            let mis = mismatch_terms(into_i, bt);
            if mis.is_empty() {
                continue;
            }
            let mut terms = fwd;
            terms.extend(mis);
            push_row(
                &mut rows,
                RowTag::AlignmentPair { from: i, to: j, tx: t, beam_tx: bt },
                terms,
                Sense::Le,
                1.0,
            );
        }
    }

    // Third-party alignment: a witness k seeing both ends of (i, j) must not be
    // receiving on slot t with an opening different from the one i transmits with.
    for (&(i, j, t), cis) in &cands_of_link {
        if !is_fso_slot(i, t) {
            continue;
        }
        for k in 0..n {
            if k == i || k == j || !has_los(blocked, i, k) || !has_los(blocked, j, k) {
                continue;
            }
            let into_k = incoming.get(&(k, t)).unwrap_or(&empty);
            if into_k.is_empty() {
                continue;
            }
            for bt in 0..n_beams {
                let fwd = forward_terms(cis, bt);
                if fwd.is_empty() {
                    continue;
                }
                let mis = mismatch_terms(into_k, bt);
                if mis.is_empty() {
                    continue;
                }
                let mut terms = fwd;
                terms.extend(mis);
                push_row(
                    &mut rows,
                    RowTag::AlignmentWitness { from: i, to: j, witness: k, tx: t, beam_tx: bt },
                    terms,
                    Sense::Le,
                    1.0,
                );
            }
        }
    }

    Ok(IlpInstance {
        variables,
        constraints: rows,
        objective_offset: 0.0,
        requests: requests.to_vec(),
        n_nodes: n,
        slots_per_node,
        scenario_digest: scenario_digest.to_string(),
    })
}
