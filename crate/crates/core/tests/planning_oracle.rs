mod common;

use common::{all_simple_paths, random_graph};
use heatroute_core::planning::{dijkstra_idx, edge_cost, k_shortest_idx, ComfortCost, LengthCost};
use proptest::prelude::*;

#[test]
fn dijkstra_and_yen_match_enumeration_on_random_graphs() {
    for seed in 0..50u64 {
        let n = 4 + (seed % 9) as usize;
        let (net, comfort) = random_graph(seed, n, 0.3);
        let lambda = (seed % 5) as f64 * 0.5;
        let cost = ComfortCost::new(&net, &comfort, lambda);
        let oracle_cost = |e: usize, _from: usize| edge_cost(net.edge(e).length_m, comfort[e], lambda);
        for (s, d) in [(0, n - 1), (n / 2, 0), (1, n - 2)] {
            if s == d {
                continue;
            }
            let truth = all_simple_paths(&net, s, d, &oracle_cost);
            let best = dijkstra_idx(&net, s, d, &cost).unwrap();
            assert_eq!(best.nodes, truth[0].0, "seed {seed} {s}->{d}");
            assert_eq!(best.cost, truth[0].1);
            let top = k_shortest_idx(&net, s, d, 5, &cost).unwrap();
            assert_eq!(top.len(), truth.len().min(5));
            for (got, want) in top.iter().zip(&truth) {
                assert_eq!(got.nodes, want.0, "seed {seed} {s}->{d}");
                assert_eq!(got.cost, want.1);
            }
        }
    }
}

fn graph() -> impl Strategy<Value = (u64, usize, f64)> {
    (any::<u64>(), 2usize..=12, 0.0..0.6f64)
}

/// Length-weighted discomfort share `1 − mean_comfort` of a node sequence.
fn discomfort_share(net: &heatroute_core::RoadNetwork, comfort: &[f64], nodes: &[usize]) -> f64 {
    let (mut len, mut bad) = (0.0, 0.0);
    for w in nodes.windows(2) {
        let e = net.edge_between(w[0], w[1]).unwrap();
        len += net.edge(e).length_m;
        bad += net.edge(e).length_m * (1.0 - comfort[e]);
    }
    bad / len
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lambda_zero_equals_pure_distance((seed, n, p) in graph()) {
        let (net, comfort) = random_graph(seed, n, p);
        let fused = ComfortCost::new(&net, &comfort, 0.0);
        for s in 0..n {
            for d in 0..n {
                if s == d { continue; }
                let a = k_shortest_idx(&net, s, d, 5, &fused).unwrap();
                let b = k_shortest_idx(&net, s, d, 5, &LengthCost(&net)).unwrap();
                let na: Vec<_> = a.iter().map(|p| p.nodes.clone()).collect();
                let nb: Vec<_> = b.iter().map(|p| p.nodes.clone()).collect();
                prop_assert_eq!(na, nb);
            }
        }
    }

    #[test]
    fn candidates_are_simple_and_sorted((seed, n, p) in graph(), lambda in 0.0..4.0f64, k in 1usize..8) {
        let (net, comfort) = random_graph(seed, n, p);
        let cost = ComfortCost::new(&net, &comfort, lambda);
        let paths = k_shortest_idx(&net, 0, n - 1, k, &cost).unwrap();
        prop_assert!(!paths.is_empty() && paths.len() <= k);
        for p in &paths {
            let mut seen = std::collections::HashSet::new();
            prop_assert!(p.nodes.iter().all(|v| seen.insert(*v)));
            prop_assert_eq!(p.nodes.first(), Some(&0));
            prop_assert_eq!(p.nodes.last(), Some(&(n - 1)));
        }
        for w in paths.windows(2) {
            prop_assert!(w[0].cost <= w[1].cost);
        }
    }

    #[test]
    fn discomfort_share_non_increasing_in_lambda((seed, n, p) in graph()) {
        let (net, comfort) = random_graph(seed, n, p);
        let (s, d) = (0, n - 1);
        let mut prev = f64::INFINITY;
        for lambda in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let oracle = |e: usize, _: usize| edge_cost(net.edge(e).length_m, comfort[e], lambda);
            let truth = all_simple_paths(&net, s, d, &oracle);
            let chosen = dijkstra_idx(&net, s, d, &ComfortCost::new(&net, &comfort, lambda)).unwrap();
            prop_assert_eq!(&chosen.nodes, &truth[0].0);
            let share = discomfort_share(&net, &comfort, &chosen.nodes);
            prop_assert!(share <= prev + 1e-12, "λ={} share {} > {}", lambda, share, prev);
            prev = share;
        }
    }
}
