//! Particle swarm engine over a compact encoding: one dimension per request
//! (route option), one per link (power level) and one per optical link (transmit
//! opening). Receive openings are derived from what the peer end transmits.
//!
//! Infeasibility is handled with a penalty that grows with the square root of
//! the iteration count, so early exploration is cheap and late iterations are
//! pushed hard toward feasibility. The swarm is seeded with greedy first-fit
//! solutions; the best feasible assignment ever evaluated is what gets returned.

use std::collections::BTreeMap;

use crate::ilp::build::VarIndex;
use crate::ilp::check::{blocked_requests, check_feasible, FEASIBILITY_TOLERANCE};
use crate::ilp::IlpInstance;
use crate::links::{BeamSetting, CandidateSet};

use super::first_fit::{assignment_from_links, canonical_order, greedy_choices, minimal_picks};
use super::routes::RouteTable;
use super::{SolveResult, SolveStatus};

#[derive(Debug, Clone)]
pub struct PsoOptions {
    pub swarm_size: usize,
    pub max_iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Every n-th seeded particle is drawn fully at random instead.
    pub full_random_stride: usize,
    /// Stop once the best feasible objective has not moved for this many iterations.
    pub stall_limit: usize,
    /// Divisor applied to throughput-row violations so they weigh like power terms.
    /// `None` uses the largest requested throughput.
    pub throughput_penalty_scale: Option<f64>,
    pub seed: u64,
}

impl Default for PsoOptions {
    fn default() -> Self {
        PsoOptions {
            swarm_size: 30,
            max_iterations: 150,
            inertia: 0.72,
            cognitive: 1.49,
            social: 1.49,
            full_random_stride: 5,
            stall_limit: 100,
            throughput_penalty_scale: None,
            seed: 0xA11CE,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-keyed uniform draw in [0, 1): the same key always yields the same
/// value, independent of call order, which keeps the whole swarm reproducible.
fn unit(seed: u64, key: [u64; 4]) -> f64 {
    let mut h = splitmix64(seed ^ 0x6A09_E667_F3BC_C909);
    for w in key {
        h = splitmix64(h ^ w.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    ((h >> 11) as f64) / (1u64 << 53) as f64
}

struct Dim {
    hi: f64,
}

struct Encoding {
    dims: Vec<Dim>,
    /// Distinct power levels available per link, ascending.
    powers_of: BTreeMap<(usize, usize, usize), Vec<usize>>,
    /// Distinct transmit-opening indices per optical link, ascending.
    beams_of: BTreeMap<(usize, usize, usize), Vec<usize>>,
    /// Offset of each link's first candidate in the flat candidate list.
    base_of: BTreeMap<(usize, usize, usize), usize>,
    power_dim: BTreeMap<(usize, usize, usize), usize>,
    beam_dim: BTreeMap<(usize, usize, usize), usize>,
    route_dim: Vec<usize>,
}

impl Encoding {
    fn build(cands: &CandidateSet, table: &RouteTable, n_requests: usize) -> Encoding {
        let mut enc = Encoding {
            dims: Vec::new(),
            powers_of: BTreeMap::new(),
            beams_of: BTreeMap::new(),
            base_of: BTreeMap::new(),
            power_dim: BTreeMap::new(),
            beam_dim: BTreeMap::new(),
            route_dim: Vec::new(),
        };
        for r in 0..n_requests {
            enc.route_dim.push(enc.dims.len());
            let n = table.options(r).len().max(1);
            enc.dims.push(Dim { hi: (n - 1) as f64 });
        }
        for link in cands.links() {
            let cl = cands.link_candidates(link.0, link.1, link.2);
            let base = cands
                .candidates
                .iter()
                .position(|c| (c.from, c.to, c.tx) == link)
                .expect("link listed by its own candidate set");
            enc.base_of.insert(link, base);
            let mut powers: Vec<usize> = cl.iter().map(|c| c.power_idx).collect();
            powers.sort_unstable();
            powers.dedup();
            enc.power_dim.insert(link, enc.dims.len());
            enc.dims.push(Dim { hi: (powers.len() - 1) as f64 });
            enc.powers_of.insert(link, powers);
            let mut beams: Vec<usize> = cl
                .iter()
                .filter_map(|c| match c.beam_tx {
                    BeamSetting::Index(i) => Some(i),
                    BeamSetting::Omni => None,
                })
                .collect();
            if !beams.is_empty() {
                beams.sort_unstable();
                beams.dedup();
                enc.beam_dim.insert(link, enc.dims.len());
                enc.dims.push(Dim { hi: (beams.len() - 1) as f64 });
                enc.beams_of.insert(link, beams);
            }
        }
        enc
    }

    fn slot_index(&self, x: f64, len: usize) -> usize {
        (x.round().max(0.0) as usize).min(len - 1)
    }

    /// Positions -> route choices plus one candidate per used link.
    fn decode(
        &self,
        position: &[f64],
        cands: &CandidateSet,
        table: &RouteTable,
    ) -> (Vec<Option<usize>>, BTreeMap<(usize, usize, usize), usize>) {
        let n_requests = self.route_dim.len();
        let mut choice = vec![None; n_requests];
        for r in 0..n_requests {
            let options = table.options(r);
            if !options.is_empty() {
                choice[r] = Some(self.slot_index(position[self.route_dim[r]], options.len()));
            }
        }
        let mut used: BTreeMap<(usize, usize, usize), ()> = BTreeMap::new();
        for (r, c) in choice.iter().enumerate() {
            if let Some(oi) = c {
                for &hop in &table.options(r)[*oi].hops {
                    used.insert(hop, ());
                }
            }
        }
        // First pass: transmit-side settings.
        let mut level: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
        let mut opening: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
        for &link in used.keys() {
            let powers = &self.powers_of[&link];
            level.insert(link, powers[self.slot_index(position[self.power_dim[&link]], powers.len())]);
            if let Some(beams) = self.beams_of.get(&link) {
                opening.insert(
                    link,
                    beams[self.slot_index(position[self.beam_dim[&link]], beams.len())],
                );
            }
        }
        let mut tx_opening: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (&(u, _v, t), &bt) in &opening {
            tx_opening.entry((u, t)).or_insert(bt);
        }
        // Second pass: receive openings follow the peer's transmit opening.
        let mut picked = BTreeMap::new();
        for &link in used.keys() {
            let (u, v, t) = link;
            let cl = cands.link_candidates(u, v, t);
            let p = level[&link];
            let offset = match opening.get(&link) {
                None => cl.iter().position(|c| c.power_idx == p),
                Some(&bt) => {
                    let br = tx_opening.get(&(v, t)).copied().unwrap_or(bt);
                    let score = |c: &crate::links::LinkCandidate| {
                        let cb = match c.beam_tx {
                            BeamSetting::Index(i) => i,
                            BeamSetting::Omni => usize::MAX,
                        };
                        let cr = match c.beam_rx {
                            BeamSetting::Index(i) => i,
                            BeamSetting::Omni => usize::MAX,
                        };
                        (
                            c.power_idx.abs_diff(p),
                            cb.abs_diff(bt),
                            cr.abs_diff(br),
                        )
                    };
                    cl.iter()
                        .enumerate()
                        .min_by(|(_, a), (_, b)| score(a).cmp(&score(b)))
                        .map(|(i, _)| i)
                }
            };
            if let Some(off) = offset {
                picked.insert(link, self.base_of[&link] + off);
            }
        }
        (choice, picked)
    }

    fn encode(
        &self,
        choice: &[Option<usize>],
        picked: &BTreeMap<(usize, usize, usize), usize>,
        cands: &CandidateSet,
        fill: impl Fn(usize, f64) -> f64,
    ) -> Vec<f64> {
        let mut pos: Vec<f64> = self
            .dims
            .iter()
            .enumerate()
            .map(|(d, dim)| fill(d, dim.hi))
            .collect();
        for (r, c) in choice.iter().enumerate() {
            if let Some(oi) = c {
                pos[self.route_dim[r]] = *oi as f64;
            }
        }
        for (&link, &ci) in picked {
            let c = &cands.candidates[ci];
            let powers = &self.powers_of[&link];
            if let Ok(i) = powers.binary_search(&c.power_idx) {
                pos[self.power_dim[&link]] = i as f64;
            }
            if let BeamSetting::Index(bt) = c.beam_tx {
                if let Ok(i) = self.beams_of[&link].binary_search(&bt) {
                    pos[self.beam_dim[&link]] = i as f64;
                }
            }
        }
        pos
    }
}

/// Sum of constraint violations, with throughput rows rescaled so a few Mbps of
/// shortfall weighs like a few milliwatts of excess power.
pub fn penalty(inst: &IlpInstance, assignment: &[bool], throughput_scale: f64) -> f64 {
    let mut total = 0.0;
    for row in &inst.constraints {
        let s = row.slack(assignment);
        if s < 0.0 {
            let w = if row.tag.family() == "link_throughput" { throughput_scale } else { 1.0 };
            total += -s / w;
        }
    }
    total
}

/// Penalized fitness at (1-based) iteration `k`: the objective plus the
/// violation sum weighted by `sqrt(k)`.
pub fn fitness(inst: &IlpInstance, assignment: &[bool], k: usize, throughput_scale: f64) -> f64 {
    inst.objective_value(assignment) + (k as f64).sqrt() * penalty(inst, assignment, throughput_scale)
}

struct Particle {
    position: Vec<f64>,
    velocity: Vec<f64>,
    best_position: Vec<f64>,
    best_objective: f64,
    best_penalty: f64,
}

impl Particle {
    fn best_score(&self, k: usize) -> f64 {
        self.best_objective + (k as f64).sqrt() * self.best_penalty
    }
}

pub fn solve(
    inst: &IlpInstance,
    cands: &CandidateSet,
    table: &RouteTable,
    opts: &PsoOptions,
) -> SolveResult {
    let started = std::time::Instant::now();
    let n_requests = inst.requests.len();
    let enc = Encoding::build(cands, table, n_requests);
    let idx = VarIndex::of(inst);
    let th_scale = opts.throughput_penalty_scale.unwrap_or_else(|| {
        inst.requests
            .iter()
            .map(|r| r.min_throughput_mbps)
            .fold(1.0, f64::max)
    });
    let seed = opts.seed;
    // One pass per evaluation: the scaled violation sum steers the swarm, while
    // acceptance into the incumbent uses the checker's own per-row tolerance —
    // the scaled sum can round a real throughput shortfall below tolerance.
    let evaluate = |choice: &[Option<usize>], picked: &BTreeMap<(usize, usize, usize), usize>| {
        let a = assignment_from_links(inst, &idx, cands, table, choice, picked);
        let obj = inst.objective_value(&a);
        let mut pen = 0.0;
        let mut feasible = true;
        for row in &inst.constraints {
            let s = row.slack(&a);
            if s < -FEASIBILITY_TOLERANCE {
                feasible = false;
            }
            if s < 0.0 {
                let w = if row.tag.family() == "link_throughput" { th_scale } else { 1.0 };
                pen += -s / w;
            }
        }
        (a, obj, pen, feasible)
    };

    // --- Seeding -------------------------------------------------------------
    let mut particles: Vec<Particle> = Vec::with_capacity(opts.swarm_size);
    let mut evaluations: u64 = 0;
    let mut best_feasible: Option<(f64, Vec<bool>)> = None;
    let consider = |obj: f64, feasible: bool, a: &[bool], best: &mut Option<(f64, Vec<bool>)>| {
        if feasible && best.as_ref().map_or(true, |(b, _)| obj < *b) {
            *best = Some((obj, a.to_vec()));
        }
    };
    for p in 0..opts.swarm_size.max(1) {
        let random_particle = p > 0 && opts.full_random_stride > 0 && p % opts.full_random_stride == 0;
        let position = if random_particle {
            enc.dims
                .iter()
                .enumerate()
                .map(|(d, dim)| unit(seed, [0, p as u64, d as u64, 0]) * dim.hi)
                .collect()
        } else {
            let order = if p == 0 {
                canonical_order(&inst.requests)
            } else {
                let mut order = canonical_order(&inst.requests);
                for i in (1..order.len()).rev() {
                    let r = unit(seed, [0, p as u64, i as u64, 1]);
                    let j = ((r * (i + 1) as f64) as usize).min(i);
                    order.swap(i, j);
                }
                order
            };
            let choice = greedy_choices(table, &inst.requests, cands, &order);
            let picked = minimal_picks(cands, table, &inst.requests, &choice);
            enc.encode(&choice, &picked, cands, |d, hi| {
                unit(seed, [0, p as u64, d as u64, 2]) * hi
            })
        };
        let (choice, picked) = enc.decode(&position, cands, table);
        let (a, obj, pen, feasible) = evaluate(&choice, &picked);
        evaluations += 1;
        consider(obj, feasible, &a, &mut best_feasible);
        particles.push(Particle {
            velocity: vec![0.0; position.len()],
            best_position: position.clone(),
            position,
            best_objective: obj,
            best_penalty: pen,
        });
    }

    // --- Iterations ----------------------------------------------------------
    let gbest_index = |particles: &[Particle], k: usize| {
        let mut gi = 0;
        for (i, p) in particles.iter().enumerate() {
            if p.best_score(k) < particles[gi].best_score(k) {
                gi = i;
            }
        }
        gi
    };
    let mut stall = 0usize;
    let mut last_best = best_feasible.as_ref().map(|(o, _)| *o);
    for k in 2..=opts.max_iterations.max(1) {
        let gi = gbest_index(&particles, k);
        let gbest_position = particles[gi].best_position.clone();
        for p in 0..particles.len() {
            for d in 0..enc.dims.len() {
                let r1 = unit(seed, [k as u64, p as u64, d as u64, 3]);
                let r2 = unit(seed, [k as u64, p as u64, d as u64, 4]);
                let part = &mut particles[p];
                let v = opts.inertia * part.velocity[d]
                    + opts.cognitive * r1 * (part.best_position[d] - part.position[d])
                    + opts.social * r2 * (gbest_position[d] - part.position[d]);
                let vmax = enc.dims[d].hi.max(1.0);
                part.velocity[d] = v.clamp(-vmax, vmax);
                part.position[d] = (part.position[d] + part.velocity[d]).clamp(0.0, enc.dims[d].hi);
            }
            let (choice, picked) = enc.decode(&particles[p].position, cands, table);
            let (a, obj, pen, feasible) = evaluate(&choice, &picked);
            evaluations += 1;
            consider(obj, feasible, &a, &mut best_feasible);
            let score = obj + (k as f64).sqrt() * pen;
            if score < particles[p].best_score(k) {
                particles[p].best_position = particles[p].position.clone();
                particles[p].best_objective = obj;
                particles[p].best_penalty = pen;
            }
        }
        let now_best = best_feasible.as_ref().map(|(o, _)| *o);
        if now_best.is_some() && now_best == last_best {
            stall += 1;
            if stall >= opts.stall_limit {
                break;
            }
        } else {
            stall = 0;
            last_best = now_best;
        }
    }

    // --- Result --------------------------------------------------------------
    match best_feasible {
        Some((obj, assignment)) => {
            debug_assert!(check_feasible(inst, &assignment).unwrap().feasible);
            SolveResult {
                status: SolveStatus::Feasible,
                objective: Some(obj),
                assignment: Some(assignment),
                lower_bound: None,
                nodes_explored: evaluations,
                wall_time_s: started.elapsed().as_secs_f64(),
                blocked: Vec::new(),
            }
        }
        None => {
            let gi = gbest_index(&particles, opts.max_iterations.max(1));
            let (choice, picked) = enc.decode(&particles[gi].best_position, cands, table);
            let a = assignment_from_links(inst, &idx, cands, table, &choice, &picked);
            let mut blocked: Vec<usize> = (0..n_requests)
                .filter(|&r| table.options(r).is_empty())
                .collect();
            for r in blocked_requests(inst, &a) {
                if !blocked.contains(&r) {
                    blocked.push(r);
                }
            }
            blocked.sort_unstable();
            SolveResult {
                status: SolveStatus::NoFeasibleFound,
                objective: None,
                assignment: Some(a),
                lower_bound: None,
                nodes_explored: evaluations,
                wall_time_s: started.elapsed().as_secs_f64(),
                blocked,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::super::routes::build_route_table;
    use super::super::{exact, Budget};
    use super::*;
    use crate::channel::{
        ChannelParams, DiscreteSets, NodeSpec, TransceiverKind, TransceiverSpec,
    };
    use crate::ilp::build::{build_instance, BuildOptions};
    use crate::ilp::QosRequest;

    fn spec(kind: TransceiverKind) -> TransceiverSpec {
        match kind {
            TransceiverKind::Rf => TransceiverSpec {
                kind,
                c_max_mbps: 50.0,
                sensitivity_dbm: -84.0,
                diameter_m: 0.05,
                max_beam_mrad: 240.0,
                max_power_mw: 100.0,
            },
            TransceiverKind::Fso => TransceiverSpec {
                kind,
                c_max_mbps: 500.0,
                sensitivity_dbm: -43.0,
                diameter_m: 0.5,
                max_beam_mrad: 240.0,
                max_power_mw: 100.0,
            },
        }
    }

    fn setup(
        positions: &[(f64, f64)],
        kinds: &[TransceiverKind],
        requests: &[QosRequest],
    ) -> (CandidateSet, IlpInstance, RouteTable) {
        let nodes: Vec<NodeSpec> = positions
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| NodeSpec {
                id: i as i64 + 1,
                x,
                y,
                transceivers: kinds.iter().map(|&k| spec(k)).collect(),
            })
            .collect();
        let sets = DiscreteSets::new(vec![5.0, 10.0], vec![80.0, 120.0]).unwrap();
        let cs = crate::links::enumerate_candidates(
            &nodes,
            &sets,
            &ChannelParams::default(),
            &BTreeSet::new(),
        )
        .unwrap();
        let inst = build_instance(
            &nodes,
            &sets,
            &cs,
            requests,
            &BTreeSet::new(),
            "t",
            &BuildOptions::default(),
        )
        .unwrap();
        let table = build_route_table(nodes.len(), &cs, requests, 4);
        (cs, inst, table)
    }

    #[test]
    fn swarm_recovers_the_pair_optimum() {
        let (cs, inst, table) = setup(
            &[(0.0, 0.0), (10.0, 0.0)],
            &[TransceiverKind::Rf],
            &[QosRequest { s: 0, d: 1, max_hops: 1, min_throughput_mbps: 5.0 }],
        );
        let res = solve(&inst, &cs, &table, &PsoOptions::default());
        let ex = exact::solve(&inst, &Budget::default());
        assert_eq!(res.status, SolveStatus::Feasible);
        assert_eq!(res.objective, ex.objective);
    }

    #[test]
    fn runs_are_reproducible() {
        let (cs, inst, table) = setup(
            &[(0.0, 0.0), (12.0, 0.0), (24.0, 0.0)],
            &[TransceiverKind::Rf, TransceiverKind::Fso],
            &[
                QosRequest { s: 0, d: 2, max_hops: 2, min_throughput_mbps: 20.0 },
                QosRequest { s: 2, d: 0, max_hops: 2, min_throughput_mbps: 5.0 },
            ],
        );
        let opts = PsoOptions { max_iterations: 40, ..PsoOptions::default() };
        let a = solve(&inst, &cs, &table, &opts);
        let b = solve(&inst, &cs, &table, &opts);
        assert_eq!(a.status, b.status);
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.nodes_explored, b.nodes_explored);
    }

    #[test]
    fn penalty_weight_grows_exactly_with_sqrt_iteration() {
        let (_cs, inst, _table) = setup(
            &[(0.0, 0.0), (10.0, 0.0)],
            &[TransceiverKind::Rf],
            &[QosRequest { s: 0, d: 1, max_hops: 1, min_throughput_mbps: 5.0 }],
        );
        // All-zero assignment violates the flow rows, so the penalty is nonzero.
        let a = vec![false; inst.n_vars()];
        let base = inst.objective_value(&a);
        let p1 = fitness(&inst, &a, 1, 1.0) - base;
        let p4 = fitness(&inst, &a, 4, 1.0) - base;
        assert!(p1 > 0.0);
        assert_eq!(p4, 2.0 * p1);
    }

    #[test]
    fn impossible_demand_reports_the_blocked_request() {
        let (cs, inst, table) = setup(
            &[(0.0, 0.0), (10.0, 0.0)],
            &[TransceiverKind::Rf],
            &[QosRequest { s: 0, d: 1, max_hops: 1, min_throughput_mbps: 30.0 }],
        );
        let opts = PsoOptions { max_iterations: 30, ..PsoOptions::default() };
        let res = solve(&inst, &cs, &table, &opts);
        assert_eq!(res.status, SolveStatus::NoFeasibleFound);
        assert_eq!(res.blocked, vec![0]);
        assert!(res.objective.is_none());
    }

    #[test]
    fn never_worse_than_its_own_seed() {
        let (cs, inst, table) = setup(
            &[(0.0, 0.0), (11.0, 0.0), (22.0, 0.0), (11.0, 12.0)],
            &[TransceiverKind::Rf, TransceiverKind::Fso],
            &[
                QosRequest { s: 0, d: 2, max_hops: 3, min_throughput_mbps: 10.0 },
                QosRequest { s: 3, d: 0, max_hops: 2, min_throughput_mbps: 5.0 },
                QosRequest { s: 2, d: 3, max_hops: 2, min_throughput_mbps: 5.0 },
            ],
        );
        let ff = super::super::first_fit::solve(&inst, &cs, &table);
        let opts = PsoOptions { max_iterations: 60, ..PsoOptions::default() };
        let res = solve(&inst, &cs, &table, &opts);
        if let (Some(seed_obj), Some(pso_obj)) = (ff.objective, res.objective) {
            assert!(pso_obj <= seed_obj + 1e-9, "pso {pso_obj} vs seed {seed_obj}");
        }
        assert!(res.status == SolveStatus::Feasible || ff.status != SolveStatus::Feasible);
    }
}
