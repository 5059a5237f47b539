//! Link-availability enumeration.
//!
//! Walks every ordered node pair, transmit slot, power level and beam opening, and
//! keeps the tuples whose receiver-side power meets the sensitivity. The surviving
//! tuples are the constants of the integer program:
//!
//! * FSO slots are freely steerable, so availability is a pure range test (plus the
//!   blocked-pair list, which models missing line of sight and only affects FSO),
//! * a candidate carries both a transmit and a receive beam label; receive beams do
//!   not change the physics, they only participate in beam-consistency rows, so an
//!   available `(power, beam_tx)` pair fans out over every receive beam,
//! * RF slots are omnidirectional: both beam labels collapse to [`BeamSetting::Omni`]
//!   and each `(from, to, slot, power)` yields exactly one tuple,
//! * every tuple on the same transmitting slot `(from, tx)` shares that slot's raw
//!   capacity equally: `bandwidth = c_max / count(from, tx)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::channel::{
    ber_fso_ook, ber_rf_fsk, geometric_loss, max_range, mrad_to_rad, rf_path_loss, ChannelParams,
    DiscreteSets, NodeSpec, TransceiverKind,
};
use crate::{Error, Result};

// ---- candidate types -----------------------------------------------------------------

/// Beam label on a candidate: an index into the configured beam set, or the RF
/// omni sentinel. `Omni` sorts before any indexed beam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BeamSetting {
    Omni,
    Index(usize),
}

impl BeamSetting {
    pub fn mrad(&self, sets: &DiscreteSets) -> Option<f64> {
        match self {
            BeamSetting::Omni => None,
            BeamSetting::Index(k) => Some(sets.beams_mrad[*k]),
        }
    }

    /// Compact token for variable/row names: `o` for omni, else the beam index.
    pub fn token(&self) -> String {
        match self {
            BeamSetting::Omni => "o".to_string(),
            BeamSetting::Index(k) => k.to_string(),
        }
    }
}

/// One availability tuple: slot `tx` on node `from` can reach `to` at this power
/// and beam setting, with the derived received power, BER and shared bandwidth.
/// Node and slot fields are dense indices (positions in the scenario's node and
/// transceiver lists), not raw scenario ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkCandidate {
    pub from: usize,
    pub to: usize,
    pub tx: usize,
    pub power_idx: usize,
    pub beam_tx: BeamSetting,
    pub beam_rx: BeamSetting,
    pub power_mw: f64,
    pub p_rx_mw: f64,
    pub ber: f64,
    /// Equal share of the slot's raw capacity, before the `(1 - BER)` derating.
    pub bandwidth_mbps: f64,
}

impl LinkCandidate {
    pub fn sort_key(&self) -> (usize, usize, usize, usize, BeamSetting, BeamSetting) {
        (self.from, self.to, self.tx, self.power_idx, self.beam_tx, self.beam_rx)
    }

    /// BER-derated deliverable throughput over this tuple, in Mbps.
    pub fn effective_mbps(&self) -> f64 {
        self.bandwidth_mbps * (1.0 - self.ber)
    }
}

/// All availability tuples of a scenario, sorted by
/// `(from, to, tx, power_idx, beam_tx, beam_rx)`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CandidateSet {
    pub candidates: Vec<LinkCandidate>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Distinct `(from, to, tx)` triples, in sorted order.
    pub fn links(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for c in &self.candidates {
            let key = (c.from, c.to, c.tx);
            if out.last() != Some(&key) {
                out.push(key);
            }
        }
        out
    }

    /// Candidates of one `(from, to, tx)` link, as a contiguous sorted slice.
    pub fn link_candidates(&self, from: usize, to: usize, tx: usize) -> &[LinkCandidate] {
        let lo = self
            .candidates
            .partition_point(|c| (c.from, c.to, c.tx) < (from, to, tx));
        let hi = self
            .candidates
            .partition_point(|c| (c.from, c.to, c.tx) <= (from, to, tx));
        &self.candidates[lo..hi]
    }

    /// Number of tuples departing slot `(from, tx)` — the bandwidth-sharing denominator.
    pub fn departing_count(&self, from: usize, tx: usize) -> usize {
        self.candidates.iter().filter(|c| c.from == from && c.tx == tx).count()
    }

    /// The equal capacity share every candidate on slot `(from, tx)` receives, or
    /// `None` if the slot has no candidates. All tuples of one slot agree by
    /// construction, so this just reads the first one.
    pub fn shared_bandwidth(&self, from: usize, tx: usize) -> Option<f64> {
        self.candidates
            .iter()
            .find(|c| c.from == from && c.tx == tx)
            .map(|c| c.bandwidth_mbps)
    }
}

/// Normalize an unordered node pair for blocked-pair lookups.
pub fn pair_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Line-of-sight oracle: a pair has LOS unless listed as blocked.
pub fn has_los(blocked: &BTreeSet<(usize, usize)>, a: usize, b: usize) -> bool {
    a != b && !blocked.contains(&pair_key(a, b))
}

// ---- enumeration ---------------------------------------------------------------------

/// Enumerate every available tuple for the given nodes and discrete sets.
///
/// `blocked` holds normalized node-index pairs without line of sight; it suppresses
/// FSO tuples only. The bandwidth-sharing rule (equal split over the tuples leaving
/// one slot) is applied here, in one place, after enumeration.
pub fn enumerate_candidates(
    nodes: &[NodeSpec],
    sets: &DiscreteSets,
    params: &ChannelParams,
    blocked: &BTreeSet<(usize, usize)>,
) -> Result<CandidateSet> {
    if nodes.is_empty() {
        return Err(Error::Mismatch("cannot enumerate links of an empty node list".into()));
    }
    let mut problems = Vec::new();
    sets.validate(&mut problems);
    params.validate(&mut problems);
    if !problems.is_empty() {
        return Err(Error::InvalidScenario { problems });
    }

    let mut out = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        for (t, spec) in node.transceivers.iter().enumerate() {
            for (j, peer) in nodes.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d = node.distance_to(peer);
                match spec.kind {
                    TransceiverKind::Rf => {
                        for (pi, &p) in sets.powers_mw.iter().enumerate() {
                            if p > spec.max_power_mw {
                                continue;
                            }
                            if d > max_range(spec, p, 0.0, params) {
                                continue;
                            }
                            let p_rx = rf_path_loss(p, d, params);
                            let ber = ber_rf_fsk(p_rx, params)?;
                            out.push(LinkCandidate {
                                from: i,
                                to: j,
                                tx: t,
                                power_idx: pi,
                                beam_tx: BeamSetting::Omni,
                                beam_rx: BeamSetting::Omni,
                                power_mw: p,
                                p_rx_mw: p_rx,
                                ber,
                                bandwidth_mbps: 0.0, // filled below
                            });
                        }
                    }
                    TransceiverKind::Fso => {
                        if !has_los(blocked, i, j) {
                            continue;
                        }
                        for (pi, &p) in sets.powers_mw.iter().enumerate() {
                            if p > spec.max_power_mw {
                                continue;
                            }
                            for (bt, &theta_mrad) in sets.beams_mrad.iter().enumerate() {
                                if theta_mrad > spec.max_beam_mrad {
                                    continue;
                                }
                                let theta = mrad_to_rad(theta_mrad);
                                if d > max_range(spec, p, theta, params) {
                                    continue;
                                }
                                let p_rx = geometric_loss(p, spec.diameter_m, d, theta);
                                let ber = ber_fso_ook(p_rx, params)?;
                                for (br, &rx_mrad) in sets.beams_mrad.iter().enumerate() {
                                    if rx_mrad > spec.max_beam_mrad {
                                        continue;
                                    }
                                    out.push(LinkCandidate {
                                        from: i,
                                        to: j,
                                        tx: t,
                                        power_idx: pi,
                                        beam_tx: BeamSetting::Index(bt),
                                        beam_rx: BeamSetting::Index(br),
                                        power_mw: p,
                                        p_rx_mw: p_rx,
                                        ber,
                                        bandwidth_mbps: 0.0,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));

    // Equal bandwidth split per transmitting slot.
    let mut counts = std::collections::BTreeMap::<(usize, usize), usize>::new();
    for c in &out {
        *counts.entry((c.from, c.tx)).or_insert(0) += 1;
    }
    for c in &mut out {
        let n = counts[&(c.from, c.tx)] as f64;
        c.bandwidth_mbps = nodes[c.from].transceivers[c.tx].c_max_mbps / n;
    }

    Ok(CandidateSet { candidates: out })
}

// ---- tests ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::TransceiverSpec;
    use proptest::prelude::*;

    fn fso(max_power: f64) -> TransceiverSpec {
        TransceiverSpec {
            kind: TransceiverKind::Fso,
            c_max_mbps: 500.0,
            sensitivity_dbm: -43.0,
            diameter_m: 0.5,
            max_beam_mrad: 240.0,
            max_power_mw: max_power,
        }
    }

    fn rf(max_power: f64) -> TransceiverSpec {
        TransceiverSpec {
            kind: TransceiverKind::Rf,
            c_max_mbps: 50.0,
            sensitivity_dbm: -84.0,
            diameter_m: 0.05,
            max_beam_mrad: 0.0,
            max_power_mw: max_power,
        }
    }

    fn node(id: i64, x: f64, y: f64, ts: Vec<TransceiverSpec>) -> NodeSpec {
        NodeSpec { id, x, y, transceivers: ts }
    }

    fn sets(powers: &[f64], beams: &[f64]) -> DiscreteSets {
        DiscreteSets { powers_mw: powers.to_vec(), beams_mrad: beams.to_vec() }
    }

    #[test]
    fn empty_node_list_is_an_error() {
        let r = enumerate_candidates(
            &[],
            &sets(&[5.0], &[80.0]),
            &ChannelParams::default(),
            &BTreeSet::new(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn single_node_yields_empty_set() {
        let cs = enumerate_candidates(
            &[node(1, 0.0, 0.0, vec![fso(10.0), rf(10.0)])],
            &sets(&[5.0, 10.0], &[80.0, 160.0]),
            &ChannelParams::default(),
            &BTreeSet::new(),
        )
        .unwrap();
        assert!(cs.is_empty());
    }

    #[test]
    fn coincident_nodes_have_candidates_at_every_power_and_beam() {
        let cs = enumerate_candidates(
            &[node(1, 3.0, 4.0, vec![fso(10.0)]), node(2, 3.0, 4.0, vec![fso(10.0)])],
            &sets(&[5.0, 10.0], &[80.0, 160.0]),
            &ChannelParams::default(),
            &BTreeSet::new(),
        )
        .unwrap();
        // 2 directions x 2 powers x 2 beam_tx x 2 beam_rx.
        assert_eq!(cs.len(), 16, "got {:?}", cs.candidates);
    }

    #[test]
    fn out_of_range_pair_yields_empty_set() {
        // FSO reach at 10 mW / 80 mrad / 0.5 m aperture is ~27.9 m.
        let cs = enumerate_candidates(
            &[node(1, 0.0, 0.0, vec![fso(10.0)]), node(2, 100.0, 0.0, vec![fso(10.0)])],
            &sets(&[5.0, 10.0], &[80.0, 160.0, 240.0]),
            &ChannelParams::default(),
            &BTreeSet::new(),
        )
        .unwrap();
        assert!(cs.is_empty(), "got {} candidates", cs.len());
    }

    #[test]
    fn rf_collapses_beam_labels_to_one_omni_tuple_per_power() {
        let cs = enumerate_candidates(
            &[node(1, 0.0, 0.0, vec![rf(10.0)]), node(2, 10.0, 0.0, vec![rf(10.0)])],
            &sets(&[5.0, 10.0], &[80.0, 160.0, 240.0]),
            &ChannelParams::default(),
            &BTreeSet::new(),
        )
        .unwrap();
        // 2 directions x 2 powers, regardless of the 3-beam set.
        assert_eq!(cs.len(), 4);
        assert!(cs
            .candidates
            .iter()
            .all(|c| c.beam_tx == BeamSetting::Omni && c.beam_rx == BeamSetting::Omni));
    }

    #[test]
    fn blocked_pairs_suppress_fso_but_not_rf() {
        let nodes = [
            node(1, 0.0, 0.0, vec![fso(10.0), rf(10.0)]),
            node(2, 10.0, 0.0, vec![fso(10.0), rf(10.0)]),
        ];
        let blocked = BTreeSet::from([pair_key(0, 1)]);
        let cs = enumerate_candidates(
            &nodes,
            &sets(&[5.0], &[80.0]),
            &ChannelParams::default(),
            &blocked,
        )
        .unwrap();
        assert!(cs.candidates.iter().all(|c| c.tx == 1), "FSO tuples must be gone: {cs:?}");
        assert_eq!(cs.len(), 2);
    }

    #[test]
    fn shared_bandwidth_splits_capacity_equally() {
        // Two peers in FSO range, 1 power, 2 tx beams x 2 rx beams reach only at the
        // narrow beam: count the tuples and check the split. Distance 25 m: at 5->10 mW
        // and 0.5 m aperture, 80 mrad reaches 27.9 m but 160 mrad only 13.9 m.
        let nodes = [
            node(1, 0.0, 0.0, vec![fso(10.0)]),
            node(2, 25.0, 0.0, vec![fso(10.0)]),
            node(3, -25.0, 0.0, vec![fso(10.0)]),
        ];
        let cs = enumerate_candidates(
            &nodes,
            &sets(&[10.0], &[80.0, 160.0]),
            &ChannelParams::default(),
            &BTreeSet::new(),
        )
        .unwrap();
        // Node 1 slot 0: reaches both peers at beam_tx=80 only, each over 2 rx beams -> 4 tuples.
        assert_eq!(cs.departing_count(0, 0), 4);
        let b = cs.shared_bandwidth(0, 0).unwrap();
        assert!((b - 125.0).abs() < 1e-12, "four-way split of 500 must be 125, got {b}");
        // The leaf nodes see only node 1 -> 2 tuples each -> 250.
        assert!((cs.shared_bandwidth(1, 0).unwrap() - 250.0).abs() < 1e-12);
    }

    #[test]
    fn candidates_are_sorted_and_link_slices_work() {
        let nodes = [
            node(1, 0.0, 0.0, vec![fso(10.0), rf(10.0)]),
            node(2, 20.0, 0.0, vec![fso(10.0), rf(10.0)]),
            node(3, 0.0, 20.0, vec![fso(10.0), rf(10.0)]),
        ];
        let cs = enumerate_candidates(
            &nodes,
            &sets(&[5.0, 10.0], &[80.0, 160.0]),
            &ChannelParams::default(),
            &BTreeSet::new(),
        )
        .unwrap();
        let mut sorted = cs.candidates.clone();
        sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        assert_eq!(cs.candidates, sorted);
        for (i, j, t) in cs.links() {
            let slice = cs.link_candidates(i, j, t);
            assert!(!slice.is_empty());
            assert!(slice.iter().all(|c| (c.from, c.to, c.tx) == (i, j, t)));
        }
        assert_eq!(cs.link_candidates(0, 1, 9).len(), 0);
    }

    #[test]
    fn mirrored_placement_preserves_the_candidate_set() {
        let nodes = [
            node(1, 3.0, 7.0, vec![fso(10.0), rf(10.0)]),
            node(2, 28.0, 7.0, vec![fso(10.0)]),
            node(3, 10.0, 30.0, vec![rf(10.0)]),
        ];
        let mirrored: Vec<NodeSpec> = nodes
            .iter()
            .map(|n| NodeSpec { id: n.id, x: -n.x, y: n.y, transceivers: n.transceivers.clone() })
            .collect();
        let s = sets(&[5.0, 10.0], &[80.0, 160.0]);
        let p = ChannelParams::default();
        let a = enumerate_candidates(&nodes, &s, &p, &BTreeSet::new()).unwrap();
        let b = enumerate_candidates(&mirrored, &s, &p, &BTreeSet::new()).unwrap();
        assert_eq!(a.candidates, b.candidates);
    }

    /// Semantic view of a candidate that survives set relabeling: physical values
    /// instead of set indices.
    fn semantic(cs: &CandidateSet, s: &DiscreteSets) -> BTreeSet<String> {
        cs.candidates
            .iter()
            .map(|c| {
                format!(
                    "{}-{}-{}-p{}-bt{:?}-br{:?}",
                    c.from,
                    c.to,
                    c.tx,
                    c.power_mw,
                    c.beam_tx.mrad(s),
                    c.beam_rx.mrad(s)
                )
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn every_candidate_meets_sensitivity_at_its_setting(
            xs in proptest::collection::vec(0.0f64..60.0, 2..5),
            ys in proptest::collection::vec(0.0f64..60.0, 2..5),
        ) {
            let n = xs.len().min(ys.len());
            let nodes: Vec<NodeSpec> = (0..n)
                .map(|k| node(k as i64, xs[k], ys[k], vec![fso(10.0), rf(10.0)]))
                .collect();
            let s = sets(&[5.0, 10.0], &[80.0, 160.0]);
            let p = ChannelParams::default();
            let cs = enumerate_candidates(&nodes, &s, &p, &BTreeSet::new()).unwrap();
            for c in &cs.candidates {
                let spec = &nodes[c.from].transceivers[c.tx];
                let d = nodes[c.from].distance_to(&nodes[c.to]);
                let p_rx = match spec.kind {
                    TransceiverKind::Fso => geometric_loss(
                        c.power_mw,
                        spec.diameter_m,
                        d,
                        mrad_to_rad(c.beam_tx.mrad(&s).unwrap()),
                    ),
                    TransceiverKind::Rf => rf_path_loss(c.power_mw, d, &p),
                };
                // max_range inversion is exact up to rounding; allow 1e-9 relative.
                prop_assert!(
                    p_rx >= spec.sensitivity_mw() * (1.0 - 1e-9),
                    "candidate {c:?} received {p_rx} below sensitivity {}",
                    spec.sensitivity_mw()
                );
                prop_assert!(c.ber > 0.0 && c.ber <= 0.5);
                prop_assert!(c.bandwidth_mbps > 0.0);
            }
        }

        #[test]
        fn growing_the_discrete_sets_never_removes_candidates(
            d in 5.0f64..60.0,
            extra_power in 11.0f64..20.0,
        ) {
            let nodes = [
                node(1, 0.0, 0.0, vec![fso(30.0), rf(30.0)]),
                node(2, d, 0.0, vec![fso(30.0), rf(30.0)]),
            ];
            let p = ChannelParams::default();
            let small = sets(&[5.0, 10.0], &[80.0]);
            let big = sets(&[5.0, 10.0, extra_power], &[80.0, 160.0]);
            let a = enumerate_candidates(&nodes, &small, &p, &BTreeSet::new()).unwrap();
            let b = enumerate_candidates(&nodes, &big, &p, &BTreeSet::new()).unwrap();
            prop_assert!(b.len() >= a.len());
            let sa = semantic(&a, &small);
            let sb = semantic(&b, &big);
            prop_assert!(sa.is_subset(&sb), "missing: {:?}", sa.difference(&sb).collect::<Vec<_>>());
        }

        #[test]
        fn raising_transceiver_caps_never_removes_candidates(
            d in 5.0f64..60.0,
            cap_power in 5.0f64..20.0,
            cap_beam in 80.0f64..240.0,
        ) {
            let p = ChannelParams::default();
            let s = sets(&[5.0, 10.0, 15.0, 20.0], &[80.0, 160.0, 240.0]);
            let mut lo_spec = fso(cap_power);
            lo_spec.max_beam_mrad = cap_beam;
            let lo_nodes = [
                node(1, 0.0, 0.0, vec![lo_spec.clone()]),
                node(2, d, 0.0, vec![lo_spec]),
            ];
            let hi_nodes = [
                node(1, 0.0, 0.0, vec![fso(20.0)]),
                node(2, d, 0.0, vec![fso(20.0)]),
            ];
            let a = enumerate_candidates(&lo_nodes, &s, &p, &BTreeSet::new()).unwrap();
            let b = enumerate_candidates(&hi_nodes, &s, &p, &BTreeSet::new()).unwrap();
            prop_assert!(b.len() >= a.len(), "{} -> {}", a.len(), b.len());
            prop_assert!(semantic(&a, &s).is_subset(&semantic(&b, &s)));
        }
    }
}
