//! Validation metrics against reference data: the Path Overlap Index
//! (POI), the Perception Consistent Index (PCI), demographic group
//! statistics, and rationale topic classification.

pub mod topics;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::personas::{AgeBand, Gender, IncomeLevel, Persona};
use crate::planning::turn_count_idx;
use crate::road_network::RoadNetwork;
use crate::simulation::EpisodeResult;

pub use topics::{
    aggregate_topics, classify_rationale, mean_distribution, Lexicon, Topic, TopicDistribution, TOPIC_COUNT,
};

/// Identifies the POI formula below in every report.
pub const POI_VERSION: &str = "poi-dice-exp-1";

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("{source_name} row {row}: {message}")]
    Row {
        source_name: String,
        row: usize,
        message: String,
    },
    #[error("persona `{0}` has no classifiable rationale")]
    NoClassifiedRationales(String),
    #[error("route is not a path in the network: {0}")]
    RouteNotInNetwork(String),
    #[error("need at least 3 paired scenarios, got {0}")]
    InsufficientPairs(usize),
    #[error("a series has zero variance")]
    ZeroVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoiConfig {
    pub alpha: f64,
    pub turn_threshold_deg: f64,
}

impl Default for PoiConfig {
    fn default() -> Self {
        PoiConfig {
            alpha: 0.5,
            turn_threshold_deg: 30.0,
        }
    }
}

/// Length-weighted Dice overlap of the undirected edge sets of two routes.
/// Lengths count each distinct edge once.
pub fn overlap(net: &RoadNetwork, sim: &[String], reference: &[String]) -> Result<f64, EvalError> {
    let (s, r) = (resolve_route(net, sim)?, resolve_route(net, reference)?);
    let (es, er) = (edge_set(net, &s), edge_set(net, &r));
    if es.is_empty() && er.is_empty() {
        return Ok(if sim == reference { 1.0 } else { 0.0 });
    }
    let len = |set: &BTreeSet<usize>| set.iter().map(|&e| net.edge(e).length_m).sum::<f64>();
    let shared = len(&es.intersection(&er).copied().collect());
    Ok(2.0 * shared / (len(&es) + len(&er)))
}

/// `exp(−α·|Ts − Tr| / max(1, max(Ts, Tr)))`.
pub fn turn_factor(t_sim: usize, t_ref: usize, alpha: f64) -> f64 {
    let diff = t_sim.abs_diff(t_ref) as f64;
    let scale = t_sim.max(t_ref).max(1) as f64;
    (-alpha * diff / scale).exp()
}

/// Path Overlap Index: `overlap · turn_factor`, in `[0, 1]`.
pub fn poi(net: &RoadNetwork, sim: &[String], reference: &[String], cfg: &PoiConfig) -> Result<f64, EvalError> {
    let o = overlap(net, sim, reference)?;
    let ts = turn_count_idx(net, &resolve_route(net, sim)?, cfg.turn_threshold_deg);
    let tr = turn_count_idx(net, &resolve_route(net, reference)?, cfg.turn_threshold_deg);
    Ok(o * turn_factor(ts, tr, cfg.alpha))
}

fn resolve_route(net: &RoadNetwork, ids: &[String]) -> Result<Vec<usize>, EvalError> {
    if ids.is_empty() {
        return Err(EvalError::RouteNotInNetwork("empty route".into()));
    }
    net.resolve_path(ids)
        .map_err(|e| EvalError::RouteNotInNetwork(e.to_string()))
}

fn edge_set(net: &RoadNetwork, nodes: &[usize]) -> BTreeSet<usize> {
    nodes
        .windows(2)
        .map(|w| net.edge_between(w[0], w[1]).expect("resolved path"))
        .collect()
}

/// Pearson product-moment correlation of paired samples (two-pass).
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    assert_eq!(x.len(), y.len(), "paired samples");
    let n = x.len();
    if n < 3 {
        return Err(EvalError::InsufficientPairs(n));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Maps a mean rating on the 1–5 scale onto `[0, 1]`.
pub fn rating_to_unit(mean_rating: f64) -> f64 {
    (mean_rating - 1.0) / 4.0
}

/// Perception Consistent Index: Pearson r between agent scores and mean
/// human ratings (1–5), over scenarios present in both maps.
pub fn pci(agent_scores: &BTreeMap<String, f64>, human_means: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (scenario, a) in agent_scores {
        if let Some(h) = human_means.get(scenario) {
            x.push(*a);
            y.push(rating_to_unit(*h));
        }
    }
    pearson(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanRating {
    pub scenario_id: String,
    pub gender: Gender,
    pub age: u32,
    pub income: IncomeLevel,
    pub rating: u8,
}

impl HumanRating {
    pub fn age_band(&self) -> AgeBand {
        AgeBand::of(self.age)
    }
}

/// Reads a ratings CSV with header `scenario_id,gender,age,income,rating`.
/// Errors name the 1-based data row.
pub fn load_ratings(source: &str) -> Result<Vec<HumanRating>, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| EvalError::Schema(format!("ratings header: {e}")))?
        .clone();
    for col in ["scenario_id", "gender", "age", "income", "rating"] {
        if !headers.iter().any(|h| h == col) {
            return Err(EvalError::Schema(format!("ratings: missing column `{col}`")));
        }
    }
    let mut out = Vec::new();
    for (i, rec) in reader.deserialize::<HumanRating>().enumerate() {
        let row_err = |message: String| EvalError::Row {
            source_name: "ratings".into(),
            row: i + 1,
            message,
        };
        let r = rec.map_err(|e| row_err(e.to_string()))?;
        if !(1..=5).contains(&r.rating) {
            return Err(row_err(format!("rating {} outside 1..=5", r.rating)));
        }
        out.push(r);
    }
    Ok(out)
}

/// Mean rating per scenario over the ratings accepted by `keep`.
pub fn human_means(ratings: &[HumanRating], keep: impl Fn(&HumanRating) -> bool) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in ratings.iter().filter(|r| keep(r)) {
        let e = acc.entry(r.scenario_id.clone()).or_insert((0.0, 0));
        e.0 += r.rating as f64;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Respondent {
    pub gender: Gender,
    pub age: u32,
    pub income: IncomeLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRoute {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub respondent: Respondent,
    pub origin: String,
    pub destination: String,
    pub nodes: Vec<String>,
}

/// Reads a JSON list of reference routes and checks each against `net`.
pub fn load_reference_routes(source: &str, net: &RoadNetwork) -> Result<Vec<ReferenceRoute>, EvalError> {
    let routes: Vec<ReferenceRoute> =
        serde_json::from_str(source).map_err(|e| EvalError::Schema(format!("reference routes: {e}")))?;
    for (i, r) in routes.iter().enumerate() {
        let row_err = |message: String| EvalError::Row {
            source_name: "reference routes".into(),
            row: i + 1,
            message,
        };
        if r.nodes.first() != Some(&r.origin) || r.nodes.last() != Some(&r.destination) {
            return Err(row_err("node sequence does not run from origin to destination".into()));
        }
        net.resolve_path(&r.nodes).map_err(|e| row_err(e.to_string()))?;
    }
    Ok(routes)
}

/// Demographic grouping axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    All,
    Gender,
    AgeBand,
    Income,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [Dimension::All, Dimension::Gender, Dimension::AgeBand, Dimension::Income];

    pub fn key(self) -> &'static str {
        match self {
            Dimension::All => "all",
            Dimension::Gender => "gender",
            Dimension::AgeBand => "age_band",
            Dimension::Income => "income",
        }
    }

    /// Group label of a demographic profile along this axis.
    pub fn group_of(self, gender: Gender, age: u32, income: IncomeLevel) -> String {
        match self {
            Dimension::All => "all".into(),
            Dimension::Gender => gender.to_string(),
            Dimension::AgeBand => AgeBand::of(age).label().into(),
            Dimension::Income => income.label().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub dimension: Dimension,
    pub group: String,
    pub episodes: usize,
    pub mean_length_m: f64,
    pub median_length_m: f64,
    pub mean_comfort: f64,
    /// Mean of chosen length ÷ pure-distance shortest length.
    pub mean_detour_ratio: f64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Route statistics per demographic group. Only episodes that produced a
/// route and whose persona is known are counted; each such episode falls
/// in exactly one group per dimension.
pub fn group_stats(episodes: &[EpisodeResult], personas: &[Persona]) -> Vec<GroupStats> {
    let by_name: HashMap<&str, &Persona> = personas.iter().map(|p| (p.name.as_str(), p)).collect();
    let mut out = Vec::new();
    for dim in Dimension::ALL {
        let mut groups: BTreeMap<String, Vec<&EpisodeResult>> = BTreeMap::new();
        for ep in episodes {
            if let Some(p) = by_name.get(ep.persona_name.as_str()) {
                groups
                    .entry(dim.group_of(p.gender, p.age, p.income))
                    .or_default()
                    .push(ep);
            }
        }
        for (group, eps) in groups {
            let n = eps.len() as f64;
            let mut lengths: Vec<f64> = eps.iter().map(|e| e.route.length_m).collect();
            let mean_length_m = lengths.iter().sum::<f64>() / n;
            let mean_comfort = eps.iter().map(|e| e.route.mean_comfort).sum::<f64>() / n;
            let mean_detour_ratio = eps.iter().map(|e| e.detour_ratio()).sum::<f64>() / n;
            out.push(GroupStats {
                dimension: dim,
                group,
                episodes: eps.len(),
                mean_length_m,
                median_length_m: median(&mut lengths),
                mean_comfort,
                mean_detour_ratio,
            });
        }
    }
    out
}
