//! Trajectory memory: an append-only record of episodes per persona, folded
//! into behavioral biases that feed back into candidate ranking.
//!
//! The summary rule is an interpretation: topic weights follow an
//! exponential moving average of each episode's rationale classification
//! (β = 0.3, starting uniform), detour tolerance is the running mean of
//! chosen-over-shortest length, and familiarity counts edge traversals.
//! Memory only biases future choices; past routes are never re-scored.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::topics::{Lexicon, Topic, TOPIC_COUNT};
use crate::perception::ComfortScore;
use crate::planning::Route;

/// EMA step for topic weights.
pub const EMA_BETA: f64 = 0.3;
/// Cost discount per prior traversal of an edge.
pub const FAMILIARITY_STEP: f64 = 0.02;
pub const FAMILIARITY_CAP: f64 = 0.10;

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("memory store I/O: {0}")]
    Persistence(#[from] io::Error),
    #[error("memory store line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("invalid trajectory record: {0}")]
    InvalidRecord(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub persona_name: String,
    pub origin: String,
    pub destination: String,
    pub route: Route,
    pub per_edge_scores: Vec<ComfortScore>,
    /// Pure-distance shortest length between origin and destination.
    pub shortest_length_m: f64,
    pub reached: bool,
    pub rationale: String,
    pub episode_seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl TrajectoryRecord {
    pub fn validate(&self) -> Result<(), MemoryError> {
        if self.per_edge_scores.len() != self.route.edges.len() {
            return Err(MemoryError::InvalidRecord(format!(
                "{} scores for {} edges",
                self.per_edge_scores.len(),
                self.route.edges.len()
            )));
        }
        if self.route.nodes.is_empty() {
            return Err(MemoryError::InvalidRecord("empty route".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorSummary {
    pub factor_weights: BTreeMap<Topic, f64>,
    /// Running mean of chosen length ÷ shortest length, at least 1.
    pub detour_tolerance: f64,
    /// Traversals per undirected edge key.
    pub familiarity: BTreeMap<String, u64>,
    pub episodes: usize,
}

impl Default for BehaviorSummary {
    fn default() -> Self {
        BehaviorSummary::uniform()
    }
}

impl BehaviorSummary {
    pub fn uniform() -> Self {
        BehaviorSummary {
            factor_weights: Topic::ALL.iter().map(|&t| (t, 1.0 / TOPIC_COUNT as f64)).collect(),
            detour_tolerance: 1.0,
            familiarity: BTreeMap::new(),
            episodes: 0,
        }
    }

    pub fn weight(&self, t: Topic) -> f64 {
        self.factor_weights.get(&t).copied().unwrap_or(0.0)
    }
}

/// Folds records (chronological) of one persona into a summary.
pub fn summarize<'a>(
    records: impl IntoIterator<Item = &'a TrajectoryRecord>,
    persona_name: &str,
    lexicon: &Lexicon,
) -> BehaviorSummary {
    let mut w = [1.0 / TOPIC_COUNT as f64; TOPIC_COUNT];
    let mut ratio_sum = 0.0;
    let mut ratio_n = 0usize;
    let mut familiarity = BTreeMap::new();
    let mut episodes = 0;
    for rec in records.into_iter().filter(|r| r.persona_name == persona_name) {
        episodes += 1;
        let d = lexicon.classify(&rec.rationale);
        if !d.unclassified {
            for (wi, fi) in w.iter_mut().zip(d.weights) {
                *wi = (1.0 - EMA_BETA) * *wi + EMA_BETA * fi;
            }
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|wi| *wi /= total);
        }
        if rec.reached && rec.shortest_length_m > 0.0 {
            ratio_sum += (rec.route.length_m / rec.shortest_length_m).max(1.0);
            ratio_n += 1;
        }
        for e in &rec.route.edges {
            *familiarity.entry(e.key.clone()).or_insert(0) += 1;
        }
    }
    BehaviorSummary {
        factor_weights: Topic::ALL.iter().map(|&t| (t, w[t.index()])).collect(),
        detour_tolerance: if ratio_n > 0 {
            (ratio_sum / ratio_n as f64).max(1.0)
        } else {
            1.0
        },
        familiarity,
        episodes,
    }
}

/// Effective ranking cost per route. Each edge's discomfort cost is scaled
/// by `1 + 0.5·(w_sun − 1/7)`, and edges traversed before are discounted
/// 2% per visit, capped at 10%. A uniform summary with no familiarity
/// returns the routes' combined costs unchanged.
pub fn apply_bias(summary: &BehaviorSummary, routes: &[Route]) -> Vec<f64> {
    let factor = 1.0 + 0.5 * (summary.weight(Topic::SunExposureShading) - 1.0 / TOPIC_COUNT as f64);
    routes
        .iter()
        .map(|r| {
            r.edges
                .iter()
                .map(|e| {
                    let base = if factor == 1.0 {
                        e.cost
                    } else {
                        e.length_m + factor * e.discomfort_cost()
                    };
                    let visits = summary.familiarity.get(&e.key).copied().unwrap_or(0);
                    if visits > 0 {
                        base * (1.0 - (FAMILIARITY_STEP * visits as f64).min(FAMILIARITY_CAP))
                    } else {
                        base
                    }
                })
                .fold(0.0, |acc, c| acc + c)
        })
        .collect()
}

/// Append-only trajectory store, optionally mirrored to an NDJSON log.
/// Writes are serialized; reads take snapshots.
#[derive(Debug, Default)]
pub struct MemoryStore {
    records: RwLock<Vec<TrajectoryRecord>>,
    log: Mutex<Option<File>>,
}

impl MemoryStore {
    pub fn in_memory() -> Self {
        MemoryStore::default()
    }

    /// Replays an existing log (if any) and appends to it from then on.
    pub fn open(path: &Path) -> Result<Self, MemoryError> {
        let records = if path.exists() {
            read_log(BufReader::new(File::open(path)?))?
        } else {
            Vec::new()
        };
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(MemoryStore {
            records: RwLock::new(records),
            log: Mutex::new(Some(file)),
        })
    }

    pub fn len(&self) -> usize {
        self.records.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn record(&self, tr: TrajectoryRecord) -> Result<usize, MemoryError> {
        tr.validate()?;
        let mut log = self.log.lock().expect("store log lock");
        if let Some(file) = log.as_mut() {
            let mut line = serde_json::to_string(&tr).map_err(io::Error::other)?;
            line.push('\n');
            file.write_all(line.as_bytes())?;
        }
        let mut records = self.records.write().expect("store lock");
        records.push(tr);
        Ok(records.len())
    }

    pub fn snapshot(&self) -> Vec<TrajectoryRecord> {
        self.records.read().expect("store lock").clone()
    }

    pub fn persona_names(&self) -> Vec<String> {
        let records = self.records.read().expect("store lock");
        let mut names: Vec<String> = records.iter().map(|r| r.persona_name.clone()).collect();
        names.sort();
        names.dedup();
        names
    }

    pub fn summarize(&self, persona_name: &str) -> BehaviorSummary {
        let records = self.records.read().expect("store lock");
        summarize(records.iter(), persona_name, Lexicon::builtin())
    }
}

pub fn read_log(reader: impl BufRead) -> Result<Vec<TrajectoryRecord>, MemoryError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrajectoryRecord = serde_json::from_str(&line).map_err(|e| MemoryError::Corrupt {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}
