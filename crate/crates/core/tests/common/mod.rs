#![allow(dead_code)]

use heatroute_core::road_network::{Edge, Node, RoadNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random connected graph with `n` nodes: a random spanning tree plus extra
/// edges with probability `p`. Lengths in [10, 500), comfort in [0, 1].
pub fn random_graph(seed: u64, n: usize, p: f64) -> (RoadNetwork, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<Node> = (0..n)
        .map(|i| {
            Node::new(
                format!("n{i:02}"),
                22.3 + rng.gen::<f64>() * 0.01,
                114.17 + rng.gen::<f64>() * 0.01,
            )
        })
        .collect();
    let mut pairs = std::collections::BTreeSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        pairs.insert((j, i));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                pairs.insert((i, j));
            }
        }
    }
    let edges: Vec<Edge> = pairs
        .iter()
        .map(|&(a, b)| Edge::new(nodes[a].id.clone(), nodes[b].id.clone(), rng.gen_range(10.0..500.0)))
        .collect();
    let comfort = (0..edges.len()).map(|_| rng.gen::<f64>()).collect();
    (RoadNetwork::new(nodes, edges).unwrap(), comfort)
}

/// Every simple path from `s` to `d` with its cost summed left to right,
/// sorted by (cost, edge count, node-id sequence).
pub fn all_simple_paths(
    net: &RoadNetwork,
    s: usize,
    d: usize,
    cost: &dyn Fn(usize, usize) -> f64,
) -> Vec<(Vec<usize>, f64)> {
    fn dfs(
        net: &RoadNetwork,
        cur: usize,
        d: usize,
        cost: &dyn Fn(usize, usize) -> f64,
        stack: &mut Vec<usize>,
        acc: f64,
        out: &mut Vec<(Vec<usize>, f64)>,
    ) {
        if cur == d {
            out.push((stack.clone(), acc));
            return;
        }
        for &(v, e) in net.neighbors(cur) {
            if stack.contains(&v) {
                continue;
            }
            stack.push(v);
            dfs(net, v, d, cost, stack, acc + cost(e, cur), out);
            stack.pop();
        }
    }
    let mut out = Vec::new();
    dfs(net, s, d, cost, &mut vec![s], 0.0, &mut out);
    out.sort_by(|a, b| {
        a.1.total_cmp(&b.1).then(a.0.len().cmp(&b.0.len())).then_with(|| {
            let ia: Vec<&str> = a.0.iter().map(|&i| net.node(i).id.as_str()).collect();
            let ib: Vec<&str> = b.0.iter().map(|&i| net.node(i).id.as_str()).collect();
            ia.cmp(&ib)
        })
    });
    out
}
