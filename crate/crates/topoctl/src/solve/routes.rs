//! Loopless K-shortest routing by hop count, and the per-request route tables the
//! population engines index into.
//!
//! Everything here is deterministic: shortest paths break ties toward the
//! lexicographically smallest node sequence, alternatives are ranked by
//! `(length, node sequence)`, and table expansion enumerates per-hop transceiver
//! choices in ascending slot order.

use std::collections::BTreeSet;

use crate::ilp::QosRequest;
use crate::links::CandidateSet;

/// Upper limit on expanded options per request, to keep particle dimensions sane.
pub const MAX_OPTIONS_PER_REQUEST: usize = 512;

/// Lexicographically smallest among the hop-count-shortest `s -> d` paths in the
/// arc set, avoiding `banned_nodes` and `banned_arcs`. Returns the node sequence.
fn shortest_route(
    n: usize,
    arcs: &BTreeSet<(usize, usize)>,
    s: usize,
    d: usize,
    banned_nodes: &BTreeSet<usize>,
    banned_arcs: &BTreeSet<(usize, usize)>,
) -> Option<Vec<usize>> {
    if banned_nodes.contains(&s) || banned_nodes.contains(&d) {
        return None;
    }
    let allowed =
        |u: usize, v: usize| !banned_arcs.contains(&(u, v)) && !banned_nodes.contains(&v);
    // Hop distance to `d` over the filtered graph (reverse breadth-first sweep).
    let mut dist = vec![usize::MAX; n];
    dist[d] = 0;
    let mut queue = std::collections::VecDeque::from([d]);
    while let Some(v) = queue.pop_front() {
        for &(u, w) in arcs.iter() {
            if w == v && dist[u] == usize::MAX && allowed(u, w) && !banned_nodes.contains(&u) {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    if dist[s] == usize::MAX {
        return None;
    }
    // Greedy descent: always the smallest next node that stays on a shortest path.
    let mut path = vec![s];
    let mut cur = s;
    while cur != d {
        let next = arcs
            .iter()
            .filter(|&&(u, v)| u == cur && allowed(u, v) && dist[v] == dist[cur] - 1)
            .map(|&(_, v)| v)
            .min()?;
        path.push(next);
        cur = next;
    }
    Some(path)
}

/// Up to `k` loopless `s -> d` paths, sorted by `(hop count, node sequence)`.
pub fn k_shortest_routes(
    n: usize,
    arcs: &BTreeSet<(usize, usize)>,
    s: usize,
    d: usize,
    k: usize,
) -> Vec<Vec<usize>> {
    let empty_nodes = BTreeSet::new();
    let empty_arcs = BTreeSet::new();
    let Some(first) = shortest_route(n, arcs, s, d, &empty_nodes, &empty_arcs) else {
        return Vec::new();
    };
    let mut accepted = vec![first];
    let mut pool: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
    while accepted.len() < k {
        let prev = accepted.last().unwrap().clone();
        for i in 0..prev.len() - 1 {
            let spur = prev[i];
            let root = &prev[..=i];
            let mut banned_arcs = BTreeSet::new();
            for p in &accepted {
                if p.len() > i + 1 && p[..=i] == *root {
                    banned_arcs.insert((p[i], p[i + 1]));
                }
            }
            let banned_nodes: BTreeSet<usize> = root[..i].iter().copied().collect();
            if let Some(sp) = shortest_route(n, arcs, spur, d, &banned_nodes, &banned_arcs) {
                let mut whole = root[..i].to_vec();
                whole.extend(sp);
                pool.insert((whole.len(), whole));
            }
        }
        let next = pool.iter().find(|(_, p)| !accepted.contains(p)).cloned();
        match next {
            Some(entry) => {
                pool.remove(&entry);
                accepted.push(entry.1);
            }
            None => break,
        }
    }
    accepted
}

/// One concrete way to carry a request: an ordered list of `(from, to, tx)` links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteOption {
    pub hops: Vec<(usize, usize, usize)>,
}

/// Per-request route options: K shortest node paths within the hop budget, each
/// expanded over the transceiver slots available on every hop.
#[derive(Debug, Clone)]
pub struct RouteTable {
    pub per_request: Vec<Vec<RouteOption>>,
}

impl RouteTable {
    pub fn options(&self, req: usize) -> &[RouteOption] {
        &self.per_request[req]
    }
}

/// Build the table from the candidate set's connectivity.
pub fn build_route_table(
    n_nodes: usize,
    cands: &CandidateSet,
    requests: &[QosRequest],
    k: usize,
) -> RouteTable {
    let links = cands.links();
    let arcs: BTreeSet<(usize, usize)> = links.iter().map(|&(i, j, _)| (i, j)).collect();
    let mut per_request = Vec::with_capacity(requests.len());
    for req in requests {
        let mut options = Vec::new();
        'paths: for path in k_shortest_routes(n_nodes, &arcs, req.s, req.d, k) {
            if path.len() - 1 > req.max_hops as usize {
                continue;
            }
            // Slots usable on each hop, ascending.
            let slot_choices: Vec<Vec<usize>> = path
                .windows(2)
                .map(|w| {
                    links
                        .iter()
                        .filter(|&&(i, j, _)| i == w[0] && j == w[1])
                        .map(|&(_, _, t)| t)
                        .collect()
                })
                .collect();
            if slot_choices.iter().any(|c| c.is_empty()) {
                continue;
            }
            // Odometer over per-hop choices, last hop least significant.
            let mut pick = vec![0usize; slot_choices.len()];
            loop {
                options.push(RouteOption {
                    hops: path
                        .windows(2)
                        .enumerate()
                        .map(|(h, w)| (w[0], w[1], slot_choices[h][pick[h]]))
                        .collect(),
                });
                if options.len() >= MAX_OPTIONS_PER_REQUEST {
                    break 'paths;
                }
                let mut h = slot_choices.len();
                let advanced = loop {
                    if h == 0 {
                        break false;
                    }
                    h -= 1;
                    pick[h] += 1;
                    if pick[h] < slot_choices[h].len() {
                        break true;
                    }
                    pick[h] = 0;
                };
                if !advanced {
                    break;
                }
            }
        }
        per_request.push(options);
    }
    RouteTable { per_request }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arcs(pairs: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn line_graph_has_one_route() {
        let a = arcs(&[(0, 1), (1, 0), (1, 2), (2, 1)]);
        assert_eq!(k_shortest_routes(3, &a, 0, 2, 4), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn routes_rank_by_length_then_node_sequence() {
        // 0 -> 3 directly, via 1, or via 2; ties resolved toward smaller nodes.
        let a = arcs(&[(0, 3), (0, 1), (1, 3), (0, 2), (2, 3)]);
        let routes = k_shortest_routes(4, &a, 0, 3, 4);
        assert_eq!(routes, vec![vec![0, 3], vec![0, 1, 3], vec![0, 2, 3]]);
    }

    #[test]
    fn k_caps_the_route_count() {
        let a = arcs(&[(0, 3), (0, 1), (1, 3), (0, 2), (2, 3)]);
        assert_eq!(k_shortest_routes(4, &a, 0, 3, 2).len(), 2);
    }

    #[test]
    fn routes_are_loopless_and_deterministic() {
        // Dense 5-node digraph.
        let mut pairs = Vec::new();
        for i in 0..5usize {
            for j in 0..5usize {
                if i != j {
                    pairs.push((i, j));
                }
            }
        }
        let a = arcs(&pairs);
        let r1 = k_shortest_routes(5, &a, 0, 4, 6);
        let r2 = k_shortest_routes(5, &a, 0, 4, 6);
        assert_eq!(r1, r2);
        assert_eq!(r1.len(), 6);
        for p in &r1 {
            let unique: BTreeSet<_> = p.iter().collect();
            assert_eq!(unique.len(), p.len(), "loop in {p:?}");
            assert_eq!(*p.first().unwrap(), 0);
            assert_eq!(*p.last().unwrap(), 4);
        }
        // Shortest first, then longer detours.
        assert_eq!(r1[0], vec![0, 4]);
        assert!(r1.windows(2).all(|w| w[0].len() <= w[1].len()));
    }

    #[test]
    fn unreachable_destination_yields_no_routes() {
        let a = arcs(&[(0, 1)]);
        assert!(k_shortest_routes(3, &a, 0, 2, 3).is_empty());
    }

    fn omni_candidate(from: usize, to: usize, tx: usize) -> crate::links::LinkCandidate {
        crate::links::LinkCandidate {
            from,
            to,
            tx,
            power_idx: 0,
            beam_tx: crate::links::BeamSetting::Omni,
            beam_rx: crate::links::BeamSetting::Omni,
            power_mw: 5.0,
            p_rx_mw: 1e-6,
            ber: 1e-9,
            bandwidth_mbps: 25.0,
        }
    }

    #[test]
    fn table_expands_per_hop_slot_choices_in_order() {
        let cands = CandidateSet {
            candidates: vec![
                omni_candidate(0, 1, 0),
                omni_candidate(0, 1, 1),
                omni_candidate(1, 2, 0),
            ],
        };
        let reqs = [QosRequest { s: 0, d: 2, max_hops: 2, min_throughput_mbps: 5.0 }];
        let table = build_route_table(3, &cands, &reqs, 4);
        assert_eq!(table.options(0).len(), 2);
        assert_eq!(table.options(0)[0].hops, vec![(0, 1, 0), (1, 2, 0)]);
        assert_eq!(table.options(0)[1].hops, vec![(0, 1, 1), (1, 2, 0)]);
    }

    #[test]
    fn hop_budget_filters_table_routes() {
        let cands = CandidateSet {
            candidates: vec![omni_candidate(0, 1, 0), omni_candidate(1, 2, 0)],
        };
        let tight = [QosRequest { s: 0, d: 2, max_hops: 1, min_throughput_mbps: 5.0 }];
        let table = build_route_table(3, &cands, &tight, 4);
        assert!(table.options(0).is_empty());
    }
}
