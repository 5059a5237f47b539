//! Graphviz DOT export of scenarios and solved topologies. Output is fully
//! deterministic: nodes and edges are emitted in sorted order, and positions are
//! pinned (`pos="x,y!"`) so `neato -n` reproduces the deployment geometry.

use std::fmt::Write as _;

use crate::channel::TransceiverKind;
use crate::ilp::build::VarIndex;
use crate::ilp::IlpInstance;
use crate::links::{BeamSetting, CandidateSet};
use crate::scenario::Scenario;

fn node_lines(sc: &Scenario, out: &mut String) {
    for (i, n) in sc.nodes.iter().enumerate() {
        let kinds: String = n
            .transceivers
            .iter()
            .map(|s| match s.kind {
                TransceiverKind::Rf => 'r',
                TransceiverKind::Fso => 'f',
            })
            .collect();
        writeln!(
            out,
            "  n{} [label=\"{} [{}]\", pos=\"{:.2},{:.2}!\", shape=circle];",
            sc.raw_ids[i], sc.raw_ids[i], kinds, n.x, n.y
        )
        .expect("write to string");
    }
}

/// The deployment with every physically available link drawn dashed. Each node
/// pair appears once per transmitting slot kind, not once per power/beam tuple.
pub fn scenario_dot(sc: &Scenario, cands: &CandidateSet) -> String {
    let mut out = String::from("digraph deployment {\n");
    out.push_str("  graph [splines=line];\n");
    node_lines(sc, &mut out);
    for (from, to, tx) in cands.links() {
        let kind = match sc.nodes[from].transceivers[tx].kind {
            TransceiverKind::Rf => "rf",
            TransceiverKind::Fso => "fso",
        };
        writeln!(
            out,
            "  n{} -> n{} [style=dashed, color={}, label=\"t{} {}\"];",
            sc.raw_ids[from],
            sc.raw_ids[to],
            if kind == "rf" { "gray50" } else { "steelblue" },
            tx,
            kind
        )
        .expect("write to string");
    }
    out.push_str("}\n");
    out
}

/// The solved topology: only selected links, labelled with slot, power and
/// (for optical links) the transmit opening.
pub fn assignment_dot(
    sc: &Scenario,
    inst: &IlpInstance,
    cands: &CandidateSet,
    assignment: &[bool],
) -> String {
    let idx = VarIndex::of(inst);
    let mut out = String::from("digraph topology {\n");
    out.push_str("  graph [splines=line];\n");
    node_lines(sc, &mut out);
    for (ci, c) in cands.candidates.iter().enumerate() {
        if !assignment[idx.tuple_of_cand[ci]] {
            continue;
        }
        let beam = match c.beam_tx {
            BeamSetting::Omni => String::new(),
            BeamSetting::Index(b) => format!(" {}mrad", sc.sets.beams_mrad[b]),
        };
        let color = match c.beam_tx {
            BeamSetting::Omni => "gray30",
            BeamSetting::Index(_) => "steelblue",
        };
        writeln!(
            out,
            "  n{} -> n{} [color={}, label=\"t{} {}mW{}\"];",
            sc.raw_ids[c.from], sc.raw_ids[c.to], color, c.tx, c.power_mw, beam
        )
        .expect("write to string");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ilp::build::BuildOptions;
    use crate::scenario::{generate, GenConfig};
    use crate::solve::routes::build_route_table;
    use crate::solve::first_fit;

    fn check_grammar(dot: &str) {
        assert!(dot.starts_with("digraph "));
        assert!(dot.ends_with("}\n"));
        assert_eq!(dot.matches('{').count(), dot.matches('}').count());
        for line in dot.lines().skip(1) {
            if line == "}" || line.starts_with("  graph ") {
                continue;
            }
            assert!(
                line.starts_with("  n") && line.ends_with("];"),
                "unexpected dot line: {line}"
            );
        }
    }

    #[test]
    fn exports_are_deterministic_and_well_formed() {
        let file = generate(&GenConfig { n_nodes: 6, n_requests: 3, ..GenConfig::default() });
        let sc = file.resolve().unwrap();
        let cands = sc.candidates().unwrap();
        let a = scenario_dot(&sc, &cands);
        let b = scenario_dot(&sc, &cands);
        assert_eq!(a, b);
        check_grammar(&a);
        assert_eq!(a.matches("shape=circle").count(), 6);

        let inst = sc.instance(&cands, &BuildOptions::default()).unwrap();
        let table = build_route_table(sc.nodes.len(), &cands, &inst.requests, 4);
        let res = first_fit::solve(&inst, &cands, &table);
        let dot = assignment_dot(&sc, &inst, &cands, res.assignment.as_ref().unwrap());
        check_grammar(&dot);
        // Selected links only: never more edges than the full candidate drawing.
        assert!(dot.matches(" -> ").count() <= a.matches(" -> ").count());
    }

    #[test]
    fn empty_assignment_draws_nodes_only() {
        let file = generate(&GenConfig { n_nodes: 4, n_requests: 0, ..GenConfig::default() });
        let sc = file.resolve().unwrap();
        let cands = sc.candidates().unwrap();
        let inst = sc.instance(&cands, &BuildOptions::default()).unwrap();
        let dot = assignment_dot(&sc, &inst, &cands, &vec![false; inst.n_vars()]);
        check_grammar(&dot);
        assert_eq!(dot.matches(" -> ").count(), 0);
        assert_eq!(dot.matches("shape=circle").count(), 4);
    }
}
