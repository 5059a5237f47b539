//! Scenario files: a JSON description of the deployment area, nodes and their
//! transceivers, the discrete power/beam menus, traffic requests, and optional
//! channel overrides. Node ids in the file are arbitrary; internally everything
//! runs on dense indices in file order.
//!
//! Transceiver entries only need a `kind`; per-kind defaults fill in capacity,
//! sensitivity and aperture, and the power cap defaults to the largest menu entry.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::channel::{
    BerMode, ChannelParams, DiscreteSets, NodeSpec, TransceiverKind, TransceiverSpec,
};
use crate::ilp::build::{build_instance, BuildOptions};
use crate::ilp::{IlpInstance, QosRequest};
use crate::links::{enumerate_candidates, pair_key, CandidateSet};
use crate::{Error, Result};

pub const RF_DEFAULT_CAPACITY_MBPS: f64 = 50.0;
pub const RF_DEFAULT_SENSITIVITY_DBM: f64 = -84.0;
pub const RF_DEFAULT_DIAMETER_M: f64 = 0.05;
pub const FSO_DEFAULT_CAPACITY_MBPS: f64 = 500.0;
pub const FSO_DEFAULT_SENSITIVITY_DBM: f64 = -43.0;
pub const FSO_DEFAULT_DIAMETER_M: f64 = 0.5;
pub const DEFAULT_MAX_BEAM_MRAD: f64 = 240.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AreaEntry {
    pub width_m: f64,
    pub height_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransceiverEntry {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_max_mbps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensitivity_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diameter_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_beam_mrad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_power_mw: Option<f64>,
}

impl TransceiverEntry {
    pub fn of_kind(kind: &str) -> TransceiverEntry {
        TransceiverEntry {
            kind: kind.to_string(),
            c_max_mbps: None,
            sensitivity_dbm: None,
            diameter_m: None,
            max_beam_mrad: None,
            max_power_mw: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: i64,
    pub x: f64,
    pub y: f64,
    pub transceivers: Vec<TransceiverEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RequestEntry {
    pub s: i64,
    pub d: i64,
    pub max_hops: u32,
    pub min_throughput_mbps: f64,
}

/// Optional overrides for the propagation model; anything omitted uses the
/// built-in defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ChannelEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_noise_rf_mw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_noise_fso_mw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub responsivity_a_per_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ber_mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rf_pathloss_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rf_reference_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range_cap_m: Option<f64>,
}

/// On-disk scenario shape, exactly as serialized.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub area: AreaEntry,
    #[serde(default)]
    pub seed: u64,
    pub nodes: Vec<NodeEntry>,
    pub powers_mw: Vec<f64>,
    #[serde(default)]
    pub beams_mrad: Vec<f64>,
    pub requests: Vec<RequestEntry>,
    #[serde(default)]
    pub blocked_pairs: Vec<(i64, i64)>,
    #[serde(default)]
    pub channel: ChannelEntry,
}

/// A validated scenario on dense node indices, ready to enumerate and solve.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub nodes: Vec<NodeSpec>,
    pub sets: DiscreteSets,
    pub params: ChannelParams,
    pub requests: Vec<QosRequest>,
    pub blocked: BTreeSet<(usize, usize)>,
    pub seed: u64,
    pub area: (f64, f64),
    /// Hash of the canonical serialization; stamped into instances and reports.
    pub digest: String,
    /// Original node id per dense index, for rendering results.
    pub raw_ids: Vec<i64>,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<ScenarioFile> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    /// Validate and resolve into dense-index form. Every problem found is
    /// reported, not just the first.
    pub fn resolve(&self) -> Result<Scenario> {
        let mut problems = Vec::new();
        if self.nodes.is_empty() {
            problems.push("nodes: list is empty".to_string());
        }
        if !(self.area.width_m > 0.0) || !(self.area.height_m > 0.0) {
            problems.push(format!(
                "area: dimensions must be positive, got {} x {}",
                self.area.width_m, self.area.height_m
            ));
        }
        let mut raw_ids = Vec::new();
        let mut lookup = std::collections::BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if lookup.insert(n.id, i).is_some() {
                problems.push(format!("nodes[{i}]: duplicate id {}", n.id));
            }
            raw_ids.push(n.id);
            if !n.x.is_finite() || !n.y.is_finite() {
                problems.push(format!("nodes[{i}]: non-finite coordinates"));
            }
            if n.transceivers.is_empty() {
                problems.push(format!("nodes[{i}] (id {}): no transceivers", n.id));
            }
        }

        let default_cap = self.powers_mw.last().copied().unwrap_or(0.0);
        let mut any_fso = false;
        let mut nodes = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let mut slots = Vec::new();
            for (t, e) in n.transceivers.iter().enumerate() {
                let kind = match e.kind.to_ascii_lowercase().as_str() {
                    "rf" => TransceiverKind::Rf,
                    "fso" => TransceiverKind::Fso,
                    other => {
                        problems.push(format!(
                            "nodes[{i}].transceivers[{t}]: unknown kind {other:?} (expected \"rf\" or \"fso\")"
                        ));
                        continue;
                    }
                };
                any_fso |= kind == TransceiverKind::Fso;
                let (cap, sens, diam) = match kind {
                    TransceiverKind::Rf => (
                        RF_DEFAULT_CAPACITY_MBPS,
                        RF_DEFAULT_SENSITIVITY_DBM,
                        RF_DEFAULT_DIAMETER_M,
                    ),
                    TransceiverKind::Fso => (
                        FSO_DEFAULT_CAPACITY_MBPS,
                        FSO_DEFAULT_SENSITIVITY_DBM,
                        FSO_DEFAULT_DIAMETER_M,
                    ),
                };
                let spec = TransceiverSpec {
                    kind,
                    c_max_mbps: e.c_max_mbps.unwrap_or(cap),
                    sensitivity_dbm: e.sensitivity_dbm.unwrap_or(sens),
                    diameter_m: e.diameter_m.unwrap_or(diam),
                    max_beam_mrad: e.max_beam_mrad.unwrap_or(DEFAULT_MAX_BEAM_MRAD),
                    max_power_mw: e.max_power_mw.unwrap_or(default_cap),
                };
                spec.validate(&format!("nodes[{i}].transceivers[{t}]"), &mut problems);
                slots.push(spec);
            }
            nodes.push(NodeSpec { id: n.id, x: n.x, y: n.y, transceivers: slots });
        }

        let sets = match DiscreteSets::new(self.powers_mw.clone(), self.beams_mrad.clone()) {
            Ok(s) => Some(s),
            Err(Error::InvalidScenario { problems: p }) => {
                problems.extend(p);
                None
            }
            Err(e) => return Err(e),
        };
        if any_fso && self.beams_mrad.is_empty() {
            problems.push(
                "beams_mrad: empty, but the scenario has optical transceivers".to_string(),
            );
        }

        let mut requests = Vec::new();
        for (r, q) in self.requests.iter().enumerate() {
            let s = lookup.get(&q.s);
            let d = lookup.get(&q.d);
            if s.is_none() {
                problems.push(format!("requests[{r}]: unknown source node id {}", q.s));
            }
            if d.is_none() {
                problems.push(format!("requests[{r}]: unknown destination node id {}", q.d));
            }
            if let (Some(&s), Some(&d)) = (s, d) {
                let q = QosRequest {
                    s,
                    d,
                    max_hops: q.max_hops,
                    min_throughput_mbps: q.min_throughput_mbps,
                };
                q.validate(self.nodes.len(), &format!("requests[{r}]"), &mut problems);
                requests.push(q);
            }
        }

        let mut blocked = BTreeSet::new();
        for (b, &(x, y)) in self.blocked_pairs.iter().enumerate() {
            match (lookup.get(&x), lookup.get(&y)) {
                (Some(&i), Some(&j)) if i != j => {
                    blocked.insert(pair_key(i, j));
                }
                (Some(_), Some(_)) => {
                    problems.push(format!("blocked_pairs[{b}]: pair ({x}, {y}) blocks a node against itself"));
                }
                _ => problems.push(format!("blocked_pairs[{b}]: unknown node id in ({x}, {y})")),
            }
        }

        let mut params = ChannelParams::default();
        let c = &self.channel;
        if let Some(v) = c.p_noise_rf_mw {
            params.p_noise_rf_mw = v;
        }
        if let Some(v) = c.p_noise_fso_mw {
            params.p_noise_fso_mw = v;
        }
        if let Some(v) = c.responsivity_a_per_w {
            params.responsivity_a_per_w = v;
        }
        if let Some(v) = c.rf_pathloss_exponent {
            params.rf_pathloss_exponent = v;
        }
        if let Some(v) = c.rf_reference_gain {
            params.rf_reference_gain = v;
        }
        if let Some(v) = c.range_cap_m {
            params.range_cap_m = v;
        }
        match c.ber_mode.as_deref() {
            None => {}
            Some("monotone") => params.ber_mode = BerMode::Monotone,
            Some("literal") => params.ber_mode = BerMode::Literal,
            Some(other) => problems.push(format!(
                "channel.ber_mode: unknown mode {other:?} (expected \"monotone\" or \"literal\")"
            )),
        }

        if !problems.is_empty() {
            return Err(Error::InvalidScenario { problems });
        }
        let digest = format!(
            "{:016x}",
            fnv1a64(serde_json::to_string(self).expect("scenario serializes").as_bytes())
        );
        Ok(Scenario {
            nodes,
            sets: sets.expect("set errors were reported above"),
            params,
            requests,
            blocked,
            seed: self.seed,
            area: (self.area.width_m, self.area.height_m),
            digest,
            raw_ids,
        })
    }
}

impl Scenario {
    pub fn load(path: &std::path::Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        ScenarioFile::from_json(&text)?.resolve()
    }

    pub fn node_index(&self, raw_id: i64) -> Option<usize> {
        self.raw_ids.iter().position(|&id| id == raw_id)
    }

    pub fn candidates(&self) -> Result<CandidateSet> {
        enumerate_candidates(&self.nodes, &self.sets, &self.params, &self.blocked)
    }

    pub fn instance(&self, cands: &CandidateSet, opts: &BuildOptions) -> Result<IlpInstance> {
        build_instance(
            &self.nodes,
            &self.sets,
            cands,
            &self.requests,
            &self.blocked,
            &self.digest,
            opts,
        )
    }
}

/// Knobs for the random scenario generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_nodes: usize,
    pub area_m: (f64, f64),
    pub rf_per_node: usize,
    pub fso_per_node: usize,
    pub powers_mw: Vec<f64>,
    pub beams_mrad: Vec<f64>,
    pub n_requests: usize,
    pub max_hops: u32,
    pub min_throughput_mbps: f64,
    /// Fraction of node pairs that lose optical line of sight.
    pub blocked_fraction: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_nodes: 10,
            area_m: (150.0, 150.0),
            rf_per_node: 1,
            fso_per_node: 3,
            powers_mw: vec![5.0, 10.0],
            beams_mrad: vec![80.0],
            n_requests: 4,
            max_hops: 3,
            min_throughput_mbps: 5.0,
            blocked_fraction: 0.0,
            seed: 7,
        }
    }
}

/// Draw a random scenario: uniform node positions, identical transceiver menus
/// everywhere, distinct random source-destination pairs, and a random sample of
/// blocked pairs. Fully determined by `cfg.seed`.
pub fn generate(cfg: &GenConfig) -> ScenarioFile {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let nodes: Vec<NodeEntry> = (0..cfg.n_nodes)
        .map(|i| {
            // Centimeter grid keeps the files readable without visible quantization.
            let x = (rng.gen::<f64>() * cfg.area_m.0 * 100.0).round() / 100.0;
            let y = (rng.gen::<f64>() * cfg.area_m.1 * 100.0).round() / 100.0;
            let mut transceivers = Vec::new();
            for _ in 0..cfg.rf_per_node {
                transceivers.push(TransceiverEntry::of_kind("rf"));
            }
            for _ in 0..cfg.fso_per_node {
                transceivers.push(TransceiverEntry::of_kind("fso"));
            }
            NodeEntry { id: i as i64 + 1, x, y, transceivers }
        })
        .collect();

    let mut pairs: Vec<(i64, i64)> = Vec::new();
    for a in 0..cfg.n_nodes {
        for b in 0..cfg.n_nodes {
            if a != b {
                pairs.push((a as i64 + 1, b as i64 + 1));
            }
        }
    }
    pairs.shuffle(&mut rng);
    let requests: Vec<RequestEntry> = pairs
        .iter()
        .take(cfg.n_requests)
        .map(|&(s, d)| RequestEntry {
            s,
            d,
            max_hops: cfg.max_hops,
            min_throughput_mbps: cfg.min_throughput_mbps,
        })
        .collect();

    let mut unordered: Vec<(i64, i64)> = Vec::new();
    for a in 0..cfg.n_nodes {
        for b in (a + 1)..cfg.n_nodes {
            unordered.push((a as i64 + 1, b as i64 + 1));
        }
    }
    unordered.shuffle(&mut rng);
    let n_blocked = (unordered.len() as f64 * cfg.blocked_fraction).round() as usize;
    let blocked_pairs: Vec<(i64, i64)> = unordered.into_iter().take(n_blocked).collect();

    ScenarioFile {
        area: AreaEntry { width_m: cfg.area_m.0, height_m: cfg.area_m.1 },
        seed: cfg.seed,
        nodes,
        powers_mw: cfg.powers_mw.clone(),
        beams_mrad: cfg.beams_mrad.clone(),
        requests,
        blocked_pairs,
        channel: ChannelEntry::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> String {
        r#"{
            "area": {"width_m": 100.0, "height_m": 100.0},
            "nodes": [
                {"id": 7, "x": 0.0, "y": 0.0, "transceivers": [{"kind": "rf"}]},
                {"id": 9, "x": 10.0, "y": 0.0, "transceivers": [{"kind": "rf"}]}
            ],
            "powers_mw": [5.0, 10.0],
            "requests": [{"s": 7, "d": 9, "max_hops": 1, "min_throughput_mbps": 5.0}]
        }"#
        .to_string()
    }

    #[test]
    fn defaults_fill_in_rf_spec_and_power_cap() {
        let sc = ScenarioFile::from_json(&minimal_json()).unwrap().resolve().unwrap();
        let spec = &sc.nodes[0].transceivers[0];
        assert_eq!(spec.kind, TransceiverKind::Rf);
        assert_eq!(spec.c_max_mbps, RF_DEFAULT_CAPACITY_MBPS);
        assert_eq!(spec.sensitivity_dbm, RF_DEFAULT_SENSITIVITY_DBM);
        assert_eq!(spec.max_power_mw, 10.0);
        assert_eq!(sc.requests[0].s, 0);
        assert_eq!(sc.requests[0].d, 1);
        assert_eq!(sc.raw_ids, vec![7, 9]);
        assert_eq!(sc.node_index(9), Some(1));
        assert_eq!(sc.digest.len(), 16);
    }

    #[test]
    fn every_problem_is_reported_at_once() {
        let text = r#"{
            "area": {"width_m": 100.0, "height_m": -1.0},
            "nodes": [
                {"id": 1, "x": 0.0, "y": 0.0, "transceivers": [{"kind": "laser"}]},
                {"id": 1, "x": 5.0, "y": 0.0, "transceivers": []}
            ],
            "powers_mw": [5.0],
            "requests": [
                {"s": 1, "d": 99, "max_hops": 1, "min_throughput_mbps": 5.0},
                {"s": 1, "d": 1, "max_hops": 0, "min_throughput_mbps": -2.0}
            ],
            "blocked_pairs": [[1, 42]]
        }"#;
        let err = ScenarioFile::from_json(text).unwrap().resolve().unwrap_err();
        match err {
            Error::InvalidScenario { problems } => {
                let all = problems.join("\n");
                for needle in [
                    "dimensions must be positive",
                    "duplicate id 1",
                    "unknown kind \"laser\"",
                    "no transceivers",
                    "unknown destination node id 99",
                    "requests[1]",
                    "blocked_pairs[0]",
                ] {
                    assert!(all.contains(needle), "missing {needle:?} in:\n{all}");
                }
            }
            other => panic!("expected a validation report, got {other:?}"),
        }
    }

    #[test]
    fn channel_overrides_apply() {
        let text = r#"{
            "area": {"width_m": 100.0, "height_m": 100.0},
            "nodes": [{"id": 1, "x": 0.0, "y": 0.0, "transceivers": [{"kind": "rf"}]}],
            "powers_mw": [5.0],
            "requests": [],
            "channel": {"rf_pathloss_exponent": 2.7, "ber_mode": "literal", "p_noise_rf_mw": 2e-9}
        }"#;
        let sc = ScenarioFile::from_json(text).unwrap().resolve().unwrap();
        assert_eq!(sc.params.rf_pathloss_exponent, 2.7);
        assert_eq!(sc.params.ber_mode, BerMode::Literal);
        assert_eq!(sc.params.p_noise_rf_mw, 2e-9);
    }

    #[test]
    fn blocked_pairs_map_to_dense_indices() {
        let text = r#"{
            "area": {"width_m": 100.0, "height_m": 100.0},
            "nodes": [
                {"id": 5, "x": 0.0, "y": 0.0, "transceivers": [{"kind": "fso"}]},
                {"id": 3, "x": 10.0, "y": 0.0, "transceivers": [{"kind": "fso"}]}
            ],
            "powers_mw": [5.0],
            "beams_mrad": [80.0],
            "requests": [],
            "blocked_pairs": [[3, 5]]
        }"#;
        let sc = ScenarioFile::from_json(text).unwrap().resolve().unwrap();
        assert!(sc.blocked.contains(&(0, 1)));
        let cands = sc.candidates().unwrap();
        assert!(cands.is_empty(), "optical pair without line of sight has no links");
    }

    #[test]
    fn generation_is_deterministic_and_loadable() {
        let cfg = GenConfig { n_nodes: 6, n_requests: 3, blocked_fraction: 0.2, ..GenConfig::default() };
        let a = generate(&cfg);
        let b = generate(&cfg);
        assert_eq!(a.to_json(), b.to_json());
        let sc = a.resolve().unwrap();
        assert_eq!(sc.nodes.len(), 6);
        assert_eq!(sc.requests.len(), 3);
        assert_eq!(sc.blocked.len(), 3, "15 unordered pairs at 20% rounds to 3");
        for n in &sc.nodes {
            assert!(n.x >= 0.0 && n.x <= 150.0 && n.y >= 0.0 && n.y <= 150.0);
            assert_eq!(n.transceivers.len(), 4);
        }
        for q in &sc.requests {
            assert_ne!(q.s, q.d);
        }
        let different = generate(&GenConfig { seed: 8, ..cfg });
        assert_ne!(a.to_json(), different.to_json());
    }

    #[test]
    fn round_trip_preserves_the_digest() {
        let file = generate(&GenConfig::default());
        let d1 = file.resolve().unwrap().digest;
        let reparsed = ScenarioFile::from_json(&file.to_json()).unwrap();
        let s1 = serde_json::to_string(&file).unwrap();
        let s2 = serde_json::to_string(&reparsed).unwrap();
        if s1 != s2 {
            let i = s1
                .bytes()
                .zip(s2.bytes())
                .position(|(a, b)| a != b)
                .unwrap_or(s1.len().min(s2.len()));
            panic!(
                "serializations diverge at byte {i}:\n before: {}\n after:  {}",
                &s1[i.saturating_sub(60)..(i + 60).min(s1.len())],
                &s2[i.saturating_sub(60)..(i + 60).min(s2.len())]
            );
        }
        let d2 = reparsed.resolve().unwrap().digest;
        assert_eq!(d1, d2);
    }
}
