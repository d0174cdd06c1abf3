//! Shortest and Top-K loopless routes under a fused distance–comfort cost,
//! and the persona-level choice among candidates.
//!
//! Paths are totally ordered by `(cost, edge count, node-id sequence)`.
//! Costs accumulate left to right from the origin, so the brute-force
//! enumeration and the searches below agree bit for bit.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::{apply_bias, BehaviorSummary};
use crate::personas::Persona;
use crate::road_network::{bearing_deg, NetworkError, RoadNetwork};

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("no path from `{src}` to `{dst}`")]
    Unreachable { src: String, dst: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("empty candidate list")]
    EmptyCandidateList,
    #[error("invalid plan config: {0}")]
    InvalidConfig(String),
}

impl From<NetworkError> for PlanError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::UnknownNode(id) => PlanError::UnknownNode(id),
            other => PlanError::InvalidConfig(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConfig {
    pub k: usize,
    pub lambda_override: Option<f64>,
    pub turn_threshold_deg: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            k: 5,
            lambda_override: None,
            turn_threshold_deg: 30.0,
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.k == 0 {
            return Err(PlanError::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.turn_threshold_deg > 0.0 && self.turn_threshold_deg < 180.0) {
            return Err(PlanError::InvalidConfig(
                "turn_threshold_deg must lie in (0, 180)".into(),
            ));
        }
        if let Some(l) = self.lambda_override {
            if !(l.is_finite() && l >= 0.0) {
                return Err(PlanError::InvalidConfig("lambda must be finite and >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn lambda_for(&self, persona: &Persona) -> f64 {
        self.lambda_override.unwrap_or(persona.heat_sensitivity_lambda)
    }
}

/// `length · (1 + λ·(1 − comfort))`: a fully uncomfortable meter feels like
/// `1 + λ` meters.
pub fn edge_cost(length_m: f64, comfort: f64, lambda: f64) -> f64 {
    length_m * (1.0 + lambda * (1.0 - comfort))
}

/// Cost of traversing `edge` starting at node `from`. Non-finite costs mark
/// the traversal as forbidden.
pub trait EdgeCost {
    fn cost(&self, edge: usize, from: usize) -> f64;
}

impl<F: Fn(usize, usize) -> f64> EdgeCost for F {
    fn cost(&self, edge: usize, from: usize) -> f64 {
        self(edge, from)
    }
}

/// Pure edge length.
pub struct LengthCost<'a>(pub &'a RoadNetwork);

impl EdgeCost for LengthCost<'_> {
    fn cost(&self, edge: usize, _from: usize) -> f64 {
        self.0.edge(edge).length_m
    }
}

/// The fused distance–comfort cost, with optional directed penalties and
/// bans used by stepwise replanning.
pub struct ComfortCost<'a> {
    pub net: &'a RoadNetwork,
    pub comfort: &'a [f64],
    pub lambda: f64,
    /// Directed traversals `(edge, from)` whose cost is multiplied.
    pub penalized: Option<&'a HashSet<(usize, usize)>>,
    pub penalty_factor: f64,
    /// Directed traversals that are not allowed at all.
    pub banned: Option<&'a HashSet<(usize, usize)>>,
}

impl<'a> ComfortCost<'a> {
    pub fn new(net: &'a RoadNetwork, comfort: &'a [f64], lambda: f64) -> Self {
        ComfortCost {
            net,
            comfort,
            lambda,
            penalized: None,
            penalty_factor: 1.0,
            banned: None,
        }
    }
}

impl EdgeCost for ComfortCost<'_> {
    fn cost(&self, edge: usize, from: usize) -> f64 {
        if self.banned.is_some_and(|b| b.contains(&(edge, from))) {
            return f64::INFINITY;
        }
        let base = edge_cost(self.net.edge(edge).length_m, self.comfort[edge], self.lambda);
        match self.penalized {
            Some(p) if p.contains(&(edge, from)) => base * self.penalty_factor,
            _ => base,
        }
    }
}

/// Index-level path: `nodes.len() == edges.len() + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
    pub edge_costs: Vec<f64>,
    pub cost: f64,
}

impl Path {
    pub fn hops(&self) -> usize {
        self.edges.len()
    }

    /// Builds a path from a node sequence, accumulating cost left to right.
    pub fn from_nodes(net: &RoadNetwork, nodes: Vec<usize>, cost: &dyn EdgeCost) -> Option<Path> {
        let mut edges = Vec::with_capacity(nodes.len().saturating_sub(1));
        let mut edge_costs = Vec::with_capacity(edges.capacity());
        let mut total = 0.0;
        for w in nodes.windows(2) {
            let e = net.edge_between(w[0], w[1])?;
            let c = cost.cost(e, w[0]);
            total += c;
            edges.push(e);
            edge_costs.push(c);
        }
        Some(Path {
            nodes,
            edges,
            edge_costs,
            cost: total,
        })
    }
}

/// Lexicographic comparison of node-id sequences.
pub fn cmp_node_ids(net: &RoadNetwork, a: &[usize], b: &[usize]) -> Ordering {
    a.iter()
        .map(|&i| net.node(i).id.as_str())
        .cmp(b.iter().map(|&i| net.node(i).id.as_str()))
}

/// The total order on paths: cost, then edge count, then node ids.
pub fn cmp_paths(net: &RoadNetwork, a: &Path, b: &Path) -> Ordering {
    a.cost
        .total_cmp(&b.cost)
        .then(a.hops().cmp(&b.hops()))
        .then_with(|| cmp_node_ids(net, &a.nodes, &b.nodes))
}

#[derive(Clone, Copy, PartialEq)]
struct Label {
    cost: f64,
    hops: usize,
}

impl Label {
    fn less(self, other: Label) -> bool {
        self.cost < other.cost || (self.cost == other.cost && self.hops < other.hops)
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    label: Label,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (cost, hops)
        other
            .label
            .cost
            .total_cmp(&self.label.cost)
            .then(other.label.hops.cmp(&self.label.hops))
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Restrictions<'a> {
    nodes: &'a HashSet<usize>,
    edges: &'a HashSet<usize>,
}

/// Single-pair search with a starting label, honoring removed nodes and
/// edges. Returns the least path under the total order.
fn search(
    net: &RoadNetwork,
    cost: &dyn EdgeCost,
    src: usize,
    dst: usize,
    start: Label,
    removed: &Restrictions<'_>,
) -> Option<Path> {
    let n = net.node_count();
    let unreached = Label {
        cost: f64::INFINITY,
        hops: usize::MAX,
    };
    let mut label = vec![unreached; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    label[src] = start;
    heap.push(HeapEntry {
        label: start,
        node: src,
    });

    let allowed = |u: usize, v: usize, e: usize| -> Option<f64> {
        if removed.nodes.contains(&v) || removed.edges.contains(&e) {
            return None;
        }
        let w = cost.cost(e, u);
        w.is_finite().then_some(w)
    };

    while let Some(HeapEntry { label: l, node: u }) = heap.pop() {
        if settled[u] || l != label[u] {
            continue;
        }
        settled[u] = true;
        if u == dst {
            break;
        }
        for &(v, e) in net.neighbors(u) {
            if settled[v] {
                continue;
            }
            let Some(w) = allowed(u, v, e) else { continue };
            debug_assert!(w > 0.0, "edge costs must be positive");
            let cand = Label {
                cost: l.cost + w,
                hops: l.hops + 1,
            };
            if cand.less(label[v]) {
                label[v] = cand;
                heap.push(HeapEntry { label: cand, node: v });
            }
        }
    }
    if !settled[dst] {
        return None;
    }

    let tight = |u: usize, x: usize, e: usize| -> Option<f64> {
        if !settled[u] {
            return None;
        }
        let w = allowed(u, x, e)?;
        (label[u].cost + w == label[x].cost && label[u].hops + 1 == label[x].hops).then_some(w)
    };

    // nodes with a tight path to dst
    let mut on_tight = vec![false; n];
    on_tight[dst] = true;
    let mut stack = vec![dst];
    while let Some(x) = stack.pop() {
        if x == src {
            continue;
        }
        for &(u, e) in net.neighbors(x) {
            if !on_tight[u] && tight(u, x, e).is_some() {
                on_tight[u] = true;
                stack.push(u);
            }
        }
    }

    // smallest node-id sequence through the tight DAG
    let mut nodes = vec![src];
    let mut edges = Vec::new();
    let mut edge_costs = Vec::new();
    let mut cur = src;
    while cur != dst {
        let (next, e, w) = net
            .neighbors(cur)
            .iter()
            .filter(|&&(v, _)| on_tight[v])
            .filter_map(|&(v, e)| tight(cur, v, e).map(|w| (v, e, w)))
            .min_by(|a, b| net.node(a.0).id.cmp(&net.node(b.0).id))
            .expect("tight DAG reaches dst");
        nodes.push(next);
        edges.push(e);
        edge_costs.push(w);
        cur = next;
    }
    Some(Path {
        nodes,
        edges,
        edge_costs,
        cost: label[dst].cost,
    })
}

fn resolve(net: &RoadNetwork, id: &str) -> Result<usize, PlanError> {
    net.index_of(id).ok_or_else(|| PlanError::UnknownNode(id.to_string()))
}

/// Least-cost path; ties go to fewer edges, then the smallest node-id
/// sequence.
pub fn dijkstra(net: &RoadNetwork, src: &str, dst: &str, cost: &dyn EdgeCost) -> Result<Path, PlanError> {
    let (s, d) = (resolve(net, src)?, resolve(net, dst)?);
    dijkstra_idx(net, s, d, cost)
}

pub fn dijkstra_idx(net: &RoadNetwork, src: usize, dst: usize, cost: &dyn EdgeCost) -> Result<Path, PlanError> {
    let none_n = HashSet::new();
    let none_e = HashSet::new();
    let removed = Restrictions {
        nodes: &none_n,
        edges: &none_e,
    };
    search(net, cost, src, dst, Label { cost: 0.0, hops: 0 }, &removed).ok_or_else(|| PlanError::Unreachable {
        src: net.node(src).id.clone(),
        dst: net.node(dst).id.clone(),
    })
}

/// Up to `k` loopless paths in ascending path order (Yen's algorithm).
pub fn k_shortest(
    net: &RoadNetwork,
    src: &str,
    dst: &str,
    k: usize,
    cost: &dyn EdgeCost,
) -> Result<Vec<Path>, PlanError> {
    let (s, d) = (resolve(net, src)?, resolve(net, dst)?);
    k_shortest_idx(net, s, d, k, cost)
}

pub fn k_shortest_idx(
    net: &RoadNetwork,
    src: usize,
    dst: usize,
    k: usize,
    cost: &dyn EdgeCost,
) -> Result<Vec<Path>, PlanError> {
    if k == 0 {
        return Err(PlanError::InvalidConfig("k must be at least 1".into()));
    }
    let first = dijkstra_idx(net, src, dst, cost)?;
    let mut accepted = vec![first];
    let mut candidates: Vec<Path> = Vec::new();

    while accepted.len() < k {
        let prev = accepted.last().expect("non-empty").clone();
        let mut root_cost = 0.0;
        for i in 0..prev.edges.len() {
            let spur = prev.nodes[i];
            let root = &prev.nodes[..=i];
            let blocked_edges: HashSet<usize> = accepted
                .iter()
                .filter(|p| p.nodes.len() > i + 1 && p.nodes[..=i] == *root)
                .map(|p| p.edges[i])
                .collect();
            let blocked_nodes: HashSet<usize> = root[..i].iter().copied().collect();
            let removed = Restrictions {
                nodes: &blocked_nodes,
                edges: &blocked_edges,
            };
            let start = Label {
                cost: root_cost,
                hops: i,
            };
            if let Some(spur_path) = search(net, cost, spur, dst, start, &removed) {
                let mut nodes = root[..i].to_vec();
                nodes.extend_from_slice(&spur_path.nodes);
                let mut edges = prev.edges[..i].to_vec();
                edges.extend_from_slice(&spur_path.edges);
                let mut edge_costs = prev.edge_costs[..i].to_vec();
                edge_costs.extend_from_slice(&spur_path.edge_costs);
                let total = Path {
                    nodes,
                    edges,
                    edge_costs,
                    cost: spur_path.cost,
                };
                let known = candidates.iter().chain(accepted.iter()).any(|p| p.nodes == total.nodes);
                if !known {
                    candidates.push(total);
                }
            }
            root_cost += prev.edge_costs[i];
        }
        if candidates.is_empty() {
            break;
        }
        let best = (0..candidates.len())
            .min_by(|&a, &b| cmp_paths(net, &candidates[a], &candidates[b]))
            .expect("non-empty");
        accepted.push(candidates.swap_remove(best));
    }
    Ok(accepted)
}

fn heading_change(b_in: f64, b_out: f64) -> f64 {
    // normalized to (−180, 180]
    let mut d = (b_out - b_in).rem_euclid(360.0);
    if d > 180.0 {
        d -= 360.0;
    }
    d
}

/// Interior nodes where the heading changes by more than `threshold_deg`.
/// Segments between coincident coordinates carry no heading and are skipped.
pub fn turn_count_idx(net: &RoadNetwork, nodes: &[usize], threshold_deg: f64) -> usize {
    let b = |a: usize, c: usize| {
        let (p, q) = (net.node(a), net.node(c));
        bearing_deg(p.lat, p.lon, q.lat, q.lon)
    };
    nodes
        .windows(3)
        .filter(|w| match (b(w[0], w[1]), b(w[1], w[2])) {
            (Some(h1), Some(h2)) => heading_change(h1, h2).abs() > threshold_deg,
            _ => false,
        })
        .count()
}

pub fn turn_count(route: &Route, net: &RoadNetwork, threshold_deg: f64) -> Result<usize, PlanError> {
    let idx = net.resolve_path(&route.nodes)?;
    Ok(turn_count_idx(net, &idx, threshold_deg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteEdge {
    /// Undirected edge key `a~b`.
    pub key: String,
    pub length_m: f64,
    pub comfort: f64,
    pub cost: f64,
}

impl RouteEdge {
    /// Cost above plain length: the discomfort penalty (plus any replanning
    /// penalty).
    pub fn discomfort_cost(&self) -> f64 {
        (self.cost - self.length_m).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub nodes: Vec<String>,
    pub edges: Vec<RouteEdge>,
    pub length_m: f64,
    /// Length-weighted mean comfort; 1 for a zero-length route.
    pub mean_comfort: f64,
    pub combined_cost: f64,
    pub turn_count: usize,
}

impl Route {
    pub fn from_path(net: &RoadNetwork, path: &Path, comfort: &[f64], turn_threshold_deg: f64) -> Route {
        let mut length = 0.0;
        let mut weighted = 0.0;
        let edges: Vec<RouteEdge> = path
            .edges
            .iter()
            .zip(&path.edge_costs)
            .map(|(&e, &c)| {
                let len = net.edge(e).length_m;
                length += len;
                weighted += len * comfort[e];
                RouteEdge {
                    key: net.edge_key_of(e),
                    length_m: len,
                    comfort: comfort[e],
                    cost: c,
                }
            })
            .collect();
        Route {
            nodes: path.nodes.iter().map(|&i| net.node(i).id.clone()).collect(),
            edges,
            length_m: length,
            mean_comfort: if length > 0.0 { weighted / length } else { 1.0 },
            combined_cost: path.cost,
            turn_count: turn_count_idx(net, &path.nodes, turn_threshold_deg),
        }
    }

    pub fn is_simple(&self) -> bool {
        let mut seen = HashSet::new();
        self.nodes.iter().all(|n| seen.insert(n))
    }

    pub fn origin(&self) -> &str {
        &self.nodes[0]
    }

    pub fn destination(&self) -> &str {
        self.nodes.last().expect("route has a node")
    }
}

/// Candidate choice: the chosen index, the effective costs used, and the
/// selection probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub chosen: usize,
    pub effective_costs: Vec<f64>,
    pub probabilities: Vec<f64>,
}

/// Softmax temperature over cost z-scores for a given exploration level.
pub fn choice_temperature(exploration: f64) -> f64 {
    0.2 * exploration + 1e-6
}

/// Picks one route. With zero exploration the cheapest effective cost wins
/// (first on ties); otherwise one draw from a softmax over negative cost
/// z-scores, seeded by `seed`.
pub fn rank_candidates(
    routes: &[Route],
    persona: &Persona,
    bias: Option<&BehaviorSummary>,
    seed: u64,
) -> Result<Ranking, PlanError> {
    if routes.is_empty() {
        return Err(PlanError::EmptyCandidateList);
    }
    let costs: Vec<f64> = match bias {
        Some(summary) => apply_bias(summary, routes),
        None => routes.iter().map(|r| r.combined_cost).collect(),
    };
    let n = costs.len();

    if persona.exploration <= 0.0 || n == 1 {
        let chosen = (0..n)
            .min_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)))
            .expect("non-empty");
        let mut probabilities = vec![0.0; n];
        probabilities[chosen] = 1.0;
        return Ok(Ranking {
            chosen,
            effective_costs: costs,
            probabilities,
        });
    }

    let mean = costs.iter().sum::<f64>() / n as f64;
    let std = (costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let t = choice_temperature(persona.exploration);
    let logits: Vec<f64> = costs
        .iter()
        .map(|c| if std > 0.0 { -(c - mean) / std / t } else { 0.0 })
        .collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    let probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = n - 1;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if draw < acc {
            chosen = i;
            break;
        }
    }
    Ok(Ranking {
        chosen,
        effective_costs: costs,
        probabilities,
    })
}
