//! End-to-end checks on the bundled five-node deployment
//! (`scenarios/five_node_qos.json`).
//!
//! The deployment is built so that the cheapest topology serving all eight
//! requests costs exactly 35 mW and needs two relayed routes: 2 -> 4 must go
//! through 5 (the direct radio hop cannot carry 100 Mbps once the slot is
//! shared) and 4 -> 2 must go through 3 (node 4 carries a low-sensitivity
//! radio that cannot reach 2 directly). Every engine is run against it and
//! every returned assignment is re-checked row by row with the independent
//! feasibility checker.

use std::path::PathBuf;

use topoctl::ilp::build::BuildOptions;
use topoctl::ilp::check::check_feasible;
use topoctl::ilp::IlpInstance;
use topoctl::links::CandidateSet;
use topoctl::report::describe_assignment;
use topoctl::scenario::Scenario;
use topoctl::solve::routes::build_route_table;
use topoctl::solve::{exact, first_fit, lr, pso, Budget, SolveStatus};

const OPTIMUM_MW: f64 = 35.0;
const EPS: f64 = 1e-9;

fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/five_node_qos.json")
}

fn load_fixture() -> (Scenario, CandidateSet, IlpInstance) {
    let sc = Scenario::load(&fixture_path()).expect("fixture loads and resolves");
    let cands = sc.candidates().expect("candidate enumeration");
    let inst = sc
        .instance(&cands, &BuildOptions::default())
        .expect("instance construction");
    (sc, cands, inst)
}

/// Re-check an engine's assignment independently and return its audited objective.
fn audit(inst: &IlpInstance, assignment: &[bool], engine: &str) -> f64 {
    let report = check_feasible(inst, assignment).expect("checker accepts the assignment shape");
    assert!(
        report.feasible,
        "{engine} output violates {} rows: {:?}",
        report.violations.len(),
        report.violations.iter().take(3).collect::<Vec<_>>()
    );
    report.objective
}

#[test]
fn fixture_loads_with_expected_shape() {
    let (sc, cands, inst) = load_fixture();
    assert_eq!(sc.nodes.len(), 5);
    assert_eq!(inst.requests.len(), 8);
    // Four transceiver slots per node, all candidate links enumerated.
    assert!(cands.len() > 0, "no candidate links enumerated");
    // Request list keeps file order: the two relay-forced requests sit at 2 and 6.
    let raw = |i: usize| {
        let r = &inst.requests[i];
        (sc.nodes[r.s].id, sc.nodes[r.d].id, r.min_throughput_mbps, r.max_hops)
    };
    assert_eq!(raw(2), (2, 4, 100.0, 2));
    assert_eq!(raw(6), (4, 2, 5.0, 2));
}

#[test]
fn exact_engine_proves_the_35_mw_optimum() {
    let (sc, cands, inst) = load_fixture();
    let budget = Budget { max_nodes: 20_000_000, max_wall_s: f64::INFINITY };
    let result = exact::solve(&inst, &budget);
    assert_eq!(result.status, SolveStatus::Optimal, "exact search must close the gap");
    let obj = result.objective.expect("optimal result carries an objective");
    assert!((obj - OPTIMUM_MW).abs() < EPS, "optimum is {obj}, expected {OPTIMUM_MW}");

    let assignment = result.assignment.as_ref().expect("optimal result carries an assignment");
    let audited = audit(&inst, assignment, "exact");
    assert!((audited - OPTIMUM_MW).abs() < EPS);

    // The optimal topology: five slots at 5 mW plus one optical slot at 10 mW.
    let view = describe_assignment(&sc, &inst, &cands, assignment);
    assert!((view.total_power_mw - OPTIMUM_MW).abs() < EPS);
    let mut slots: Vec<(i64, String, f64)> = view
        .slots
        .iter()
        .map(|s| (s.node, s.kind.clone(), s.power_mw))
        .collect();
    slots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let expect = vec![
        (1, "rf".to_string(), 5.0),
        (2, "fso".to_string(), 5.0),
        (3, "fso".to_string(), 10.0),
        (3, "rf".to_string(), 5.0),
        (4, "rf".to_string(), 5.0),
        (5, "fso".to_string(), 5.0),
    ];
    assert_eq!(slots, expect, "powered slots differ from the known optimum");

    // Both congested requests are relayed; everything else runs direct.
    for route in &view.routes {
        assert!(route.served, "request {} unserved in an optimal solution", route.request);
        let path: Vec<(i64, i64)> = route.hops.iter().map(|h| (h.from, h.to)).collect();
        match (route.s, route.d) {
            (2, 4) => assert_eq!(path, vec![(2, 5), (5, 4)], "2->4 must relay through 5"),
            (4, 2) => assert_eq!(path, vec![(4, 3), (3, 2)], "4->2 must relay through 3"),
            (s, d) => assert_eq!(path, vec![(s, d)], "{s}->{d} should be a direct hop"),
        }
    }
}

#[test]
fn first_fit_matches_the_optimum_here() {
    let (_sc, cands, inst) = load_fixture();
    let table = build_route_table(5, &cands, &inst.requests, 4);
    let result = first_fit::solve(&inst, &cands, &table);
    assert_eq!(result.status, SolveStatus::Feasible);
    let assignment = result.assignment.as_ref().expect("feasible result carries an assignment");
    let audited = audit(&inst, assignment, "first-fit");
    assert!(
        (audited - OPTIMUM_MW).abs() < EPS,
        "first-fit found {audited} mW, expected {OPTIMUM_MW}"
    );
}

#[test]
fn swarm_engine_matches_the_optimum_here() {
    let (_sc, cands, inst) = load_fixture();
    let table = build_route_table(5, &cands, &inst.requests, 4);
    let result = pso::solve(&inst, &cands, &table, &pso::PsoOptions::default());
    assert_eq!(result.status, SolveStatus::Feasible);
    let assignment = result.assignment.as_ref().expect("feasible result carries an assignment");
    let audited = audit(&inst, assignment, "swarm");
    // The seed particle already sits on the optimum, so the swarm can only return it.
    assert!(
        (audited - OPTIMUM_MW).abs() < EPS,
        "swarm found {audited} mW, expected {OPTIMUM_MW}"
    );
}

#[test]
fn relaxation_engine_repairs_to_a_feasible_topology() {
    let (_sc, _cands, inst) = load_fixture();
    // The multiplier schedule needs roomy subproblem budgets on this instance;
    // two outer iterations are enough to reach a repaired feasible point.
    let sub = Budget { max_nodes: 10_000_000, max_wall_s: f64::INFINITY };
    let opts = lr::LrOptions {
        max_iterations: 2,
        subproblem_budget: sub,
        repair_budget: sub,
        ..lr::LrOptions::default()
    };
    let outcome = lr::solve(&inst, &opts, &Budget { max_nodes: u64::MAX, max_wall_s: f64::INFINITY });
    let result = &outcome.result;
    assert!(
        matches!(result.status, SolveStatus::Feasible | SolveStatus::Optimal),
        "relaxation engine failed on the fixture: {:?}",
        result.status
    );
    let assignment = result.assignment.as_ref().expect("success carries an assignment");
    let audited = audit(&inst, assignment, "relaxation");
    assert!(
        audited >= OPTIMUM_MW - EPS,
        "audited objective {audited} undercuts the proven optimum {OPTIMUM_MW}"
    );
    assert!(!outcome.trace.is_empty(), "trace rows should be recorded");
}
