//! Undirected pedestrian graph: nodes carry coordinates, scene references
//! and thermal metadata; edges carry metric length.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius used for all great-circle computations.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("malformed graph document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid network: {0}")]
    Validation(String),
    #[error("network has no nodes")]
    EmptyNetwork,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    #[serde(default)]
    pub svi_refs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal_meta: Option<BTreeMap<String, f64>>,
}

impl Node {
    pub fn new(id: impl Into<String>, lat: f64, lon: f64) -> Self {
        Node {
            id: id.into(),
            lat,
            lon,
            svi_refs: Vec::new(),
            thermal_meta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub length_m: f64,
    #[serde(default)]
    pub svi_refs: Vec<String>,
}

impl Edge {
    pub fn new(a: impl Into<String>, b: impl Into<String>, length_m: f64) -> Self {
        Edge {
            a: a.into(),
            b: b.into(),
            length_m,
            svi_refs: Vec::new(),
        }
    }
}

/// Order-independent key for an undirected edge, `"a~b"` with `a <= b`.
pub fn edge_key(a: &str, b: &str) -> String {
    if a <= b {
        format!("{a}~{b}")
    } else {
        format!("{b}~{a}")
    }
}

/// The on-disk graph document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GraphDocument {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

/// Neighbor entry in the derived adjacency: `(neighbor index, edge index)`.
pub type Adjacent = (usize, usize);

/// Validated, immutable road network. Nodes and edges are addressed by
/// their position in the source document; ids resolve through `index_of`.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    endpoints: Vec<(usize, usize)>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<Adjacent>>,
    pair_index: HashMap<(usize, usize), usize>,
}

impl RoadNetwork {
    /// Validates nodes and edges and derives the adjacency.
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self, NetworkError> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if !(-90.0..=90.0).contains(&n.lat) {
                return Err(NetworkError::Validation(format!(
                    "node `{}` latitude {} outside [-90, 90]",
                    n.id, n.lat
                )));
            }
            if !(-180.0..=180.0).contains(&n.lon) {
                return Err(NetworkError::Validation(format!(
                    "node `{}` longitude {} outside [-180, 180]",
                    n.id, n.lon
                )));
            }
            if let Some(meta) = &n.thermal_meta {
                if let Some((k, _)) = meta.iter().find(|(_, v)| !v.is_finite()) {
                    return Err(NetworkError::Validation(format!(
                        "node `{}` thermal_meta `{k}` is not finite",
                        n.id
                    )));
                }
            }
            if index.insert(n.id.clone(), i).is_some() {
                return Err(NetworkError::Validation(format!("duplicate node id `{}`", n.id)));
            }
        }

        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut endpoints = Vec::with_capacity(edges.len());
        let mut pair_index = HashMap::with_capacity(edges.len());
        for (ei, e) in edges.iter().enumerate() {
            let a = *index
                .get(&e.a)
                .ok_or_else(|| NetworkError::Validation(format!("edge references missing node `{}`", e.a)))?;
            let b = *index
                .get(&e.b)
                .ok_or_else(|| NetworkError::Validation(format!("edge references missing node `{}`", e.b)))?;
            if a == b {
                return Err(NetworkError::Validation(format!("self-loop edge at `{}`", e.a)));
            }
            if !(e.length_m.is_finite() && e.length_m > 0.0) {
                return Err(NetworkError::Validation(format!(
                    "edge `{}` has non-positive length {}",
                    edge_key(&e.a, &e.b),
                    e.length_m
                )));
            }
            let pair = (a.min(b), a.max(b));
            if pair_index.insert(pair, ei).is_some() {
                return Err(NetworkError::Validation(format!(
                    "duplicate edge `{}`",
                    edge_key(&e.a, &e.b)
                )));
            }
            adjacency[a].push((b, ei));
            adjacency[b].push((a, ei));
            endpoints.push((a, b));
        }

        Ok(RoadNetwork {
            nodes,
            edges,
            endpoints,
            index,
            adjacency,
            pair_index,
        })
    }

    pub fn from_document(doc: GraphDocument) -> Result<Self, NetworkError> {
        Self::new(doc.nodes, doc.edges)
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, idx: usize) -> &Node {
        &self.nodes[idx]
    }

    pub fn edge(&self, idx: usize) -> &Edge {
        &self.edges[idx]
    }

    /// Node indices of an edge, in document order.
    pub fn endpoints(&self, edge: usize) -> (usize, usize) {
        self.endpoints[edge]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<usize, NetworkError> {
        self.index_of(id)
            .ok_or_else(|| NetworkError::UnknownNode(id.to_string()))
    }

    pub fn neighbors(&self, idx: usize) -> &[Adjacent] {
        &self.adjacency[idx]
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.adjacency[idx].len()
    }

    /// Edge joining two node indices, if any.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.pair_index.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn edge_key_of(&self, edge: usize) -> String {
        let e = &self.edges[edge];
        edge_key(&e.a, &e.b)
    }

    /// Number of nodes per degree.
    pub fn degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for adj in &self.adjacency {
            *hist.entry(adj.len()).or_insert(0) += 1;
        }
        hist
    }

    /// Node id closest to the query point by great-circle distance. Exact
    /// ties go to the lexicographically smallest id.
    pub fn nearest_node(&self, lat: f64, lon: f64) -> Result<&str, NetworkError> {
        let mut best: Option<(f64, &str)> = None;
        for n in &self.nodes {
            let d = haversine_m(lat, lon, n.lat, n.lon);
            best = match best {
                None => Some((d, &n.id)),
                Some((bd, bid)) if d < bd || (d == bd && n.id.as_str() < bid) => Some((d, &n.id)),
                keep => keep,
            };
        }
        best.map(|(_, id)| id).ok_or(NetworkError::EmptyNetwork)
    }

    /// Node indices for a path given as node ids; every consecutive pair
    /// must be joined by an edge.
    pub fn resolve_path(&self, ids: &[String]) -> Result<Vec<usize>, NetworkError> {
        let idx: Vec<usize> = ids.iter().map(|id| self.require(id)).collect::<Result<_, _>>()?;
        for w in idx.windows(2) {
            if self.edge_between(w[0], w[1]).is_none() {
                return Err(NetworkError::Validation(format!(
                    "no edge between `{}` and `{}`",
                    self.nodes[w[0]].id, self.nodes[w[1]].id
                )));
            }
        }
        Ok(idx)
    }
}

/// Parses and validates a graph document.
pub fn load_network(source: &str) -> Result<RoadNetwork, NetworkError> {
    let doc: GraphDocument = serde_json::from_str(source)?;
    RoadNetwork::from_document(doc)
}

/// Serializes a network back into the graph document format.
pub fn serialize_network(net: &RoadNetwork) -> String {
    let mut s = serde_json::to_string(&net.to_document()).expect("graph document serializes");
    s.push('\n');
    s
}

pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = (lat2 - lat1).to_radians();
    let dl = (lon2 - lon1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Initial great-circle bearing from `from` to `to`, degrees clockwise from
/// north in `[0, 360)`.
pub fn bearing(from: &Node, to: &Node) -> Result<f64, NetworkError> {
    bearing_deg(from.lat, from.lon, to.lat, to.lon)
        .ok_or_else(|| NetworkError::DegenerateInput(format!("`{}` and `{}` share coordinates", from.id, to.id)))
}

pub fn bearing_deg(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> Option<f64> {
    if lat1 == lat2 && lon1 == lon2 {
        return None;
    }
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dl = (lon2 - lon1).to_radians();
    let y = dl.sin() * p2.cos();
    let x = p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos();
    let deg = y.atan2(x).to_degrees();
    let norm = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    Some(if norm >= 360.0 { 0.0 } else { norm })
}

/// `true` when `B ∈ adj(A) ⟺ A ∈ adj(B)` over the same edge for every entry.
pub fn is_symmetric(net: &RoadNetwork) -> bool {
    let mut seen = HashSet::new();
    for (u, adj) in net.adjacency.iter().enumerate() {
        for &(v, e) in adj {
            seen.insert((u, v, e));
        }
    }
    seen.iter().all(|&(u, v, e)| seen.contains(&(v, u, e)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_doc() -> &'static str {
        r#"{"nodes":[
            {"id":"A","lat":22.30,"lon":114.17,"svi_refs":[]},
            {"id":"B","lat":22.301,"lon":114.17,"svi_refs":[]},
            {"id":"C","lat":22.3005,"lon":114.171,"svi_refs":[]}],
           "edges":[{"a":"A","b":"B","length_m":100},
                    {"a":"B","b":"C","length_m":100},
                    {"a":"C","b":"A","length_m":100}]}"#
    }

    #[test]
    fn loads_triangle() {
        let net = load_network(triangle_doc()).unwrap();
        assert_eq!(net.node_count(), 3);
        assert_eq!(net.edge_count(), 3);
        for i in 0..3 {
            assert_eq!(net.degree(i), 2);
        }
        assert!(is_symmetric(&net));
    }

    #[test]
    fn dangling_edge_names_missing_node() {
        let doc = r#"{"nodes":[{"id":"A","lat":0,"lon":0}],
                      "edges":[{"a":"A","b":"Z","length_m":5}]}"#;
        match load_network(doc) {
            Err(NetworkError::Validation(msg)) => assert!(msg.contains("Z"), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(load_network("{nodes"), Err(NetworkError::Parse(_))));
        let dup = r#"{"nodes":[{"id":"A","lat":0,"lon":0},{"id":"A","lat":1,"lon":0}],"edges":[]}"#;
        assert!(matches!(load_network(dup), Err(NetworkError::Validation(m)) if m.contains("A")));
        let multi = r#"{"nodes":[{"id":"A","lat":0,"lon":0},{"id":"B","lat":1,"lon":0}],
            "edges":[{"a":"A","b":"B","length_m":1},{"a":"B","b":"A","length_m":2}]}"#;
        assert!(matches!(load_network(multi), Err(NetworkError::Validation(_))));
        let zero = r#"{"nodes":[{"id":"A","lat":0,"lon":0},{"id":"B","lat":1,"lon":0}],
            "edges":[{"a":"A","b":"B","length_m":0}]}"#;
        assert!(matches!(load_network(zero), Err(NetworkError::Validation(_))));
        let lat = r#"{"nodes":[{"id":"A","lat":91,"lon":0}],"edges":[]}"#;
        assert!(matches!(load_network(lat), Err(NetworkError::Validation(m)) if m.contains("A")));
        let selfloop = r#"{"nodes":[{"id":"A","lat":0,"lon":0}],
            "edges":[{"a":"A","b":"A","length_m":1}]}"#;
        assert!(matches!(load_network(selfloop), Err(NetworkError::Validation(_))));
    }

    #[test]
    fn nearest_node_exact_and_tie() {
        let net = RoadNetwork::new(vec![Node::new("B", 0.0, 0.002), Node::new("A", 0.0, 0.0)], vec![]).unwrap();
        assert_eq!(net.nearest_node(0.0, 0.0).unwrap(), "A");
        assert_eq!(net.nearest_node(0.0, 0.002).unwrap(), "B");
        assert_eq!(net.nearest_node(0.0, 0.001).unwrap(), "A");
        let empty = RoadNetwork::new(vec![], vec![]).unwrap();
        assert!(matches!(empty.nearest_node(0.0, 0.0), Err(NetworkError::EmptyNetwork)));
    }

    #[test]
    fn bearing_cardinal_directions() {
        let o = Node::new("o", 22.3, 114.17);
        let n = Node::new("n", 22.31, 114.17);
        assert_eq!(bearing(&o, &n).unwrap(), 0.0);
        let eq = Node::new("eq", 0.0, 10.0);
        let east = Node::new("east", 0.0, 10.01);
        assert_eq!(bearing(&eq, &east).unwrap(), 90.0);
        assert!((bearing(&n, &o).unwrap() - 180.0).abs() < 1e-9);
        assert!(matches!(bearing(&o, &o.clone()), Err(NetworkError::DegenerateInput(_))));
    }

    #[test]
    fn haversine_one_degree_of_latitude() {
        let d = haversine_m(0.0, 0.0, 1.0, 0.0);
        assert!((d - EARTH_RADIUS_M * std::f64::consts::PI / 180.0).abs() < 1e-6);
    }
}
