//! Episode orchestration: perceive → plan → choose → remember.
//!
//! `whole_route` commits one Top-K candidate per episode. `stepwise`
//! replans at every node and commits only the first edge of the chosen
//! candidate, so the walk may stray from any single planned route.
//! Traversed directed edges cost ten times more for the rest of a stepwise
//! episode, and at each node the walker first tries to avoid re-using its
//! own traversed out-edges and the edge it just arrived on.

use std::collections::HashSet;
use std::fmt;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::{BehaviorSummary, MemoryError, MemoryStore, TrajectoryRecord};
use crate::perception::{
    truncate_words, CallLedger, ChoiceRequest, ComfortScore, GenerationParams, NetworkComfort, Perceiver,
    PerceptionError, PerceptionResult, PriceTable, MAX_RATIONALE_WORDS,
};
use crate::personas::{render_prompt_with_task, Persona};
use crate::planning::{
    dijkstra_idx, k_shortest_idx, rank_candidates, ComfortCost, LengthCost, Path, PlanConfig, PlanError, Route,
};
use crate::road_network::RoadNetwork;

pub const REVISIT_PENALTY: f64 = 10.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

impl SimError {
    /// Coarse class used in batch logs and exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            SimError::Perception(
                PerceptionError::BackendTimeout { .. }
                | PerceptionError::Backend(_)
                | PerceptionError::MalformedResponse(_)
                | PerceptionError::MissingApiKey(_),
            ) => ErrorKind::Backend,
            SimError::InvalidConfig(_) => ErrorKind::Config,
            _ => ErrorKind::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Config,
    Data,
    Backend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    WholeRoute,
    Stepwise,
}

/// Which mechanism picked among the candidates of an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiceSource {
    /// Numeric softmax ranking.
    #[default]
    Ranked,
    /// The backend picked the option.
    Backend,
    /// Some decisions were made by each.
    Mixed,
}

impl ChoiceSource {
    fn merge(self, other: ChoiceSource) -> ChoiceSource {
        if self == other {
            self
        } else {
            ChoiceSource::Mixed
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::WholeRoute => "whole_route",
            Mode::Stepwise => "stepwise",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub mode: Mode,
    pub plan: PlanConfig,
    /// Stepwise budget; defaults to 4× the edge count of the pure-distance
    /// shortest path.
    pub max_steps: Option<usize>,
    pub seed: u64,
    pub price: PriceTable,
    pub params: GenerationParams,
    /// Bias ranking with the persona's trajectory memory.
    pub use_memory: bool,
    /// Let the backend pick among candidates when it supports it; numeric
    /// ranking is the fallback.
    pub backend_choice: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            mode: Mode::WholeRoute,
            plan: PlanConfig::default(),
            max_steps: None,
            seed: 0,
            price: PriceTable::default(),
            params: GenerationParams::default(),
            use_memory: true,
            backend_choice: false,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.plan.validate()?;
        if self.max_steps == Some(0) {
            return Err(SimError::InvalidConfig("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub persona_name: String,
    pub mode: Mode,
    pub origin: String,
    pub destination: String,
    /// The walked route; partial when a stepwise episode runs out of steps.
    pub route: Route,
    pub reached: bool,
    pub steps_used: usize,
    pub max_steps: usize,
    pub shortest_length_m: f64,
    /// Backend-reported latency of the episode's uncached calls.
    pub wall_time_s: f64,
    pub cost_estimate: f64,
    pub calls: CallLedger,
    pub rationales: Vec<String>,
    #[serde(default)]
    pub choice_source: ChoiceSource,
    pub seed: u64,
}

impl EpisodeResult {
    /// Chosen length ÷ shortest length; 1 when the shortest is 0.
    pub fn detour_ratio(&self) -> f64 {
        if self.shortest_length_m > 0.0 {
            self.route.length_m / self.shortest_length_m
        } else {
            1.0
        }
    }
}

/// SplitMix64 finalizer, used to derive independent seeds from counters.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn episode_seed(base: u64, index: usize) -> u64 {
    splitmix64(base.wrapping_add(index as u64))
}

fn step_seed(episode: u64, step: usize) -> u64 {
    splitmix64(episode ^ splitmix64(step as u64 + 1))
}

fn now_s() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Scenes visible along a route: every node's and edge's references.
fn route_scenes<'a>(net: &'a RoadNetwork, path: &Path) -> impl Iterator<Item = &'a String> + 'a {
    let nodes: Vec<usize> = path.nodes.clone();
    let edges: Vec<usize> = path.edges.clone();
    nodes
        .into_iter()
        .flat_map(move |n| net.node(n).svi_refs.iter())
        .chain(edges.into_iter().flat_map(move |e| net.edge(e).svi_refs.iter()))
}

/// Short account of a choice: which option was taken and what the least
/// and most comfortable scenes on it looked like.
fn decision_rationale(
    net: &RoadNetwork,
    comfort: &NetworkComfort,
    chosen: &Path,
    index: usize,
    total: usize,
    length_m: f64,
) -> String {
    let mut worst: Option<&PerceptionResult> = None;
    let mut best: Option<&PerceptionResult> = None;
    for r in route_scenes(net, chosen) {
        let Some(res) = comfort.scenes.get(r) else { continue };
        if worst.is_none_or(|w| res.score < w.score) {
            worst = Some(res);
        }
        if best.is_none_or(|b| res.score > b.score) {
            best = Some(res);
        }
    }
    let mut text = format!("Took option {} of {} ({:.0} m):", index + 1, total, length_m);
    for res in [worst, best].into_iter().flatten() {
        if !text.contains(&res.rationale) {
            text.push(' ');
            text.push_str(&res.rationale);
        }
    }
    truncate_words(&text, MAX_RATIONALE_WORDS)
}

fn choice_prompt_task(routes: &[Route]) -> String {
    let mut task = String::from(
        "You are walking home in hot weather. Pick one of these routes and reply with \
         only a JSON object {\"choice\": <option number>, \"rationale\": \"<fewer than 50 words>\"}.",
    );
    for (i, r) in routes.iter().enumerate() {
        task.push_str(&format!(
            "\nOption {}: {:.0} m, mean comfort {:.2}, {} turns.",
            i + 1,
            r.length_m,
            r.mean_comfort,
            r.turn_count
        ));
    }
    task
}

/// One decision among candidates. Returns the chosen index and the
/// rationale; backend choice calls are added to `ledger`.
#[allow(clippy::too_many_arguments)]
fn decide(
    net: &RoadNetwork,
    persona: &Persona,
    perceiver: &Perceiver,
    cfg: &EpisodeConfig,
    comfort: &NetworkComfort,
    paths: &[Path],
    routes: &[Route],
    summary: Option<&BehaviorSummary>,
    seed: u64,
    ledger: &mut CallLedger,
) -> Result<(usize, String, ChoiceSource), SimError> {
    if cfg.backend_choice {
        let mut prompt = render_prompt_with_task(perceiver.template(), persona, "route choice", "")
            .map_err(PerceptionError::from)?;
        prompt.user = choice_prompt_task(routes);
        let req = ChoiceRequest {
            persona,
            prompt: &prompt,
            candidates: routes.len(),
            params: cfg.params,
        };
        if let Some(Ok(reply)) = perceiver.backend().choose(&req) {
            ledger.add(&PerceptionResult {
                scene_ref: "route-choice".into(),
                score: ComfortScore::new(0.0)?,
                rationale: String::new(),
                backend_id: perceiver.backend_id().to_string(),
                prompt_tokens: reply.prompt_tokens,
                completion_tokens: reply.completion_tokens,
                latency_ms: reply.latency_ms,
                cached: false,
            });
            let text = truncate_words(&reply.rationale, MAX_RATIONALE_WORDS);
            return Ok((reply.index, text, ChoiceSource::Backend));
        }
    }
    let ranking = rank_candidates(routes, persona, summary, seed)?;
    let i = ranking.chosen;
    let text = decision_rationale(net, comfort, &paths[i], i, routes.len(), routes[i].length_m);
    Ok((i, text, ChoiceSource::Ranked))
}

/// Runs one episode from `src` to `dst` and appends its trajectory to
/// `store`.
pub fn run_episode(
    net: &RoadNetwork,
    persona: &Persona,
    src: &str,
    dst: &str,
    cfg: &EpisodeConfig,
    perceiver: &Perceiver,
    store: &MemoryStore,
) -> Result<EpisodeResult, SimError> {
    cfg.validate()?;
    let s = net
        .index_of(src)
        .ok_or_else(|| PlanError::UnknownNode(src.to_string()))?;
    let d = net
        .index_of(dst)
        .ok_or_else(|| PlanError::UnknownNode(dst.to_string()))?;
    if s == d {
        return Err(SimError::InvalidConfig(format!(
            "origin and destination are both `{src}`"
        )));
    }
    let shortest = dijkstra_idx(net, s, d, &LengthCost(net))?;
    let shortest_length_m: f64 = shortest.edges.iter().map(|&e| net.edge(e).length_m).sum();

    let comfort = perceiver.score_network(persona, net, cfg.params)?;
    let mut ledger = comfort.ledger;
    let lambda = cfg.plan.lambda_for(persona);
    let summary = cfg.use_memory.then(|| store.summarize(&persona.name));
    let thr = cfg.plan.turn_threshold_deg;
    let base_cost = ComfortCost::new(net, &comfort.comfort, lambda);

    let mut rationales = Vec::new();
    let mut source: Option<ChoiceSource> = None;
    let (walk, steps_used, max_steps) = match cfg.mode {
        Mode::WholeRoute => {
            let paths = k_shortest_idx(net, s, d, cfg.plan.k, &base_cost)?;
            let routes: Vec<Route> = paths
                .iter()
                .map(|p| Route::from_path(net, p, &comfort.comfort, thr))
                .collect();
            let (i, text, by) = decide(
                net,
                persona,
                perceiver,
                cfg,
                &comfort,
                &paths,
                &routes,
                summary.as_ref(),
                cfg.seed,
                &mut ledger,
            )?;
            rationales.push(text);
            source = Some(by);
            let hops = paths[i].hops();
            (paths[i].nodes.clone(), hops, hops)
        }
        Mode::Stepwise => {
            let max_steps = cfg.max_steps.unwrap_or(4 * shortest.hops()).max(1);
            let mut traversed: HashSet<(usize, usize)> = HashSet::new();
            let mut walk = vec![s];
            let mut last_edge: Option<usize> = None;
            let mut cur = s;
            let mut steps = 0;
            while cur != d && steps < max_steps {
                let own_outs: HashSet<(usize, usize)> = net
                    .neighbors(cur)
                    .iter()
                    .map(|&(_, e)| (e, cur))
                    .filter(|t| traversed.contains(t))
                    .collect();
                let mut strict = own_outs.clone();
                if let Some(e) = last_edge {
                    strict.insert((e, cur));
                }
                let mut paths = None;
                for banned in [strict, own_outs, HashSet::new()] {
                    let cost = ComfortCost {
                        penalized: Some(&traversed),
                        penalty_factor: REVISIT_PENALTY,
                        banned: Some(&banned),
                        ..ComfortCost::new(net, &comfort.comfort, lambda)
                    };
                    match k_shortest_idx(net, cur, d, cfg.plan.k, &cost) {
                        Ok(p) => {
                            paths = Some(p);
                            break;
                        }
                        Err(PlanError::Unreachable { .. }) => continue,
                        Err(e) => return Err(e.into()),
                    }
                }
                let paths = paths.ok_or_else(|| PlanError::Unreachable {
                    src: net.node(cur).id.clone(),
                    dst: dst.to_string(),
                })?;
                let routes: Vec<Route> = paths
                    .iter()
                    .map(|p| Route::from_path(net, p, &comfort.comfort, thr))
                    .collect();
                let (i, text, by) = decide(
                    net,
                    persona,
                    perceiver,
                    cfg,
                    &comfort,
                    &paths,
                    &routes,
                    summary.as_ref(),
                    step_seed(cfg.seed, steps),
                    &mut ledger,
                )?;
                rationales.push(text);
                source = Some(source.map_or(by, |s| s.merge(by)));
                let e = paths[i].edges[0];
                traversed.insert((e, cur));
                last_edge = Some(e);
                cur = paths[i].nodes[1];
                walk.push(cur);
                steps += 1;
            }
            (walk, steps, max_steps)
        }
    };

    let path = Path::from_nodes(net, walk, &base_cost).expect("walk follows edges");
    let route = Route::from_path(net, &path, &comfort.comfort, thr);
    let reached = path.nodes.last() == Some(&d);
    let per_edge_scores = path
        .edges
        .iter()
        .map(|&e| ComfortScore::new(comfort.comfort[e]))
        .collect::<Result<Vec<_>, _>>()?;

    store.record(TrajectoryRecord {
        persona_name: persona.name.clone(),
        origin: src.to_string(),
        destination: dst.to_string(),
        route: route.clone(),
        per_edge_scores,
        shortest_length_m,
        reached,
        rationale: rationales.join(" "),
        episode_seed: cfg.seed,
        timestamp: now_s(),
    })?;

    Ok(EpisodeResult {
        persona_name: persona.name.clone(),
        mode: cfg.mode,
        origin: src.to_string(),
        destination: dst.to_string(),
        route,
        reached,
        steps_used,
        max_steps,
        shortest_length_m,
        wall_time_s: ledger.latency_ms as f64 / 1000.0,
        cost_estimate: ledger.cost(&cfg.price),
        calls: ledger,
        rationales,
        choice_source: source.unwrap_or_default(),
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OdPair {
    pub src: String,
    pub dst: String,
}

impl OdPair {
    pub fn new(src: impl Into<String>, dst: impl Into<String>) -> Self {
        OdPair {
            src: src.into(),
            dst: dst.into(),
        }
    }
}

/// One slot of a batch: either a result or the error that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchEpisode {
    pub index: usize,
    pub persona_name: String,
    pub origin: String,
    pub destination: String,
    pub repetition: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<EpisodeResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<ErrorKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchLedger {
    pub episodes: usize,
    pub completed: usize,
    pub errors: usize,
    pub reached: usize,
    /// `reached / episodes`.
    pub accuracy: f64,
    pub mean_wall_time_s: f64,
    pub mean_cost: f64,
    pub total_cost: f64,
    pub calls: CallLedger,
    pub price: PriceTable,
    /// Real elapsed time of the whole batch.
    pub elapsed_s: f64,
}

impl BatchLedger {
    pub fn from_episodes(episodes: &[BatchEpisode], price: PriceTable, elapsed_s: f64) -> Self {
        let mut calls = CallLedger::default();
        let mut completed = 0;
        let mut reached = 0;
        let mut wall = 0.0;
        for ep in episodes {
            if let Some(r) = &ep.result {
                completed += 1;
                reached += usize::from(r.reached);
                wall += r.wall_time_s;
                calls.merge(&r.calls);
            }
        }
        let n = episodes.len();
        let total_cost = calls.cost(&price);
        let per = |x: f64| if n > 0 { x / n as f64 } else { 0.0 };
        BatchLedger {
            episodes: n,
            completed,
            errors: n - completed,
            reached,
            accuracy: per(reached as f64),
            mean_wall_time_s: per(wall),
            mean_cost: per(total_cost),
            total_cost,
            calls,
            price,
            elapsed_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchOutput {
    pub episodes: Vec<BatchEpisode>,
    pub ledger: BatchLedger,
}

impl BatchOutput {
    pub fn results(&self) -> impl Iterator<Item = &EpisodeResult> {
        self.episodes.iter().filter_map(|e| e.result.as_ref())
    }
}

/// Runs every persona × OD pair × repetition. Personas run in parallel
/// (at most `jobs` at a time, 0 = all cores); each persona's episodes run
/// in order so its memory evolves the same way on every run. Episode `i`
/// gets seed `episode_seed(cfg.seed, i)`.
#[allow(clippy::too_many_arguments)]
pub fn run_batch(
    net: &RoadNetwork,
    personas: &[Persona],
    ods: &[OdPair],
    cfg: &EpisodeConfig,
    repetitions: usize,
    jobs: usize,
    perceiver: &Perceiver,
    store: &MemoryStore,
) -> Result<BatchOutput, SimError> {
    if repetitions == 0 {
        return Err(SimError::InvalidConfig("repetitions must be at least 1".into()));
    }
    cfg.validate()?;
    let started = Instant::now();
    let per_persona = ods.len() * repetitions;
    let run_persona = |(pi, persona): (usize, &Persona)| -> Vec<BatchEpisode> {
        let mut out = Vec::with_capacity(per_persona);
        for (oi, od) in ods.iter().enumerate() {
            for rep in 0..repetitions {
                let index = pi * per_persona + oi * repetitions + rep;
                let seed = episode_seed(cfg.seed, index);
                let ep_cfg = EpisodeConfig { seed, ..cfg.clone() };
                let outcome = run_episode(net, persona, &od.src, &od.dst, &ep_cfg, perceiver, store);
                let (result, error, error_kind) = match outcome {
                    Ok(r) => (Some(r), None, None),
                    Err(e) => (None, Some(e.to_string()), Some(e.kind())),
                };
                out.push(BatchEpisode {
                    index,
                    persona_name: persona.name.clone(),
                    origin: od.src.clone(),
                    destination: od.dst.clone(),
                    repetition: rep,
                    seed,
                    result,
                    error,
                    error_kind,
                });
            }
        }
        out
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SimError::InvalidConfig(format!("thread pool: {e}")))?;
    let nested: Vec<Vec<BatchEpisode>> = pool.install(|| personas.par_iter().enumerate().map(run_persona).collect());
    let episodes: Vec<BatchEpisode> = nested.into_iter().flatten().collect();
    let ledger = BatchLedger::from_episodes(&episodes, cfg.price, started.elapsed().as_secs_f64());
    Ok(BatchOutput { episodes, ledger })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::{
        BackendReply, ChoiceReply, MockBackend, PerceptionBackend, SceneFeatures, SceneRequest, SceneTable,
    };
    use crate::personas::builtin_personas;
    use crate::road_network::{Edge, Node};
    use std::sync::Arc;

    fn persona(name: &str) -> Persona {
        builtin_personas().into_iter().find(|p| p.name == name).unwrap()
    }

    /// A–B–C with AB = BC = 100, CA = 250; every node sees the same scene.
    fn triangle() -> (RoadNetwork, Perceiver) {
        let mut nodes = vec![
            Node::new("A", 0.0, 0.0),
            Node::new("B", 0.001, 0.001),
            Node::new("C", 0.0, 0.002),
        ];
        for n in &mut nodes {
            n.svi_refs.push("s".into());
        }
        let net = RoadNetwork::new(
            nodes,
            vec![
                Edge::new("A", "B", 100.0),
                Edge::new("B", "C", 100.0),
                Edge::new("C", "A", 250.0),
            ],
        )
        .unwrap();
        let scenes = SceneTable::from([("s".to_string(), SceneFeatures::new(0.2, 0.2, 0.8, 0.8))]);
        (net, Perceiver::new(Arc::new(MockBackend::new(scenes))))
    }

    #[test]
    fn triangle_lambda_zero_takes_shortest() {
        let (net, perceiver) = triangle();
        let cfg = EpisodeConfig {
            plan: PlanConfig {
                lambda_override: Some(0.0),
                ..PlanConfig::default()
            },
            ..EpisodeConfig::default()
        };
        let store = MemoryStore::in_memory();
        let r = run_episode(&net, &persona("Ryan"), "A", "C", &cfg, &perceiver, &store).unwrap();
        assert_eq!(r.route.nodes, ["A", "B", "C"]);
        assert!(r.reached);
        assert_eq!(r.shortest_length_m, 200.0);
        assert_eq!(store.len(), 1);
        assert_eq!(r.rationales.len(), 1);
        assert!(r.rationales[0].starts_with("Took option 1 of 2 (200 m):"));
    }

    /// Mock scoring plus a chooser that always takes the last option.
    struct LastPick(MockBackend);

    impl PerceptionBackend for LastPick {
        fn id(&self) -> &str {
            "last-pick"
        }

        fn assess(&self, req: &SceneRequest<'_>) -> Result<BackendReply, PerceptionError> {
            self.0.assess(req)
        }

        fn choose(&self, req: &ChoiceRequest<'_>) -> Option<Result<ChoiceReply, PerceptionError>> {
            Some(Ok(ChoiceReply {
                index: req.candidates - 1,
                rationale: "The longer way has more trees.".into(),
                prompt_tokens: 10,
                completion_tokens: 6,
                latency_ms: 0,
            }))
        }
    }

    #[test]
    fn backend_choice_is_used_and_labelled() {
        let (net, _) = triangle();
        let scenes = SceneTable::from([("s".to_string(), SceneFeatures::new(0.2, 0.2, 0.8, 0.8))]);
        let perceiver = Perceiver::new(Arc::new(LastPick(MockBackend::new(scenes))));
        let store = MemoryStore::in_memory();
        let cfg = EpisodeConfig {
            backend_choice: true,
            ..EpisodeConfig::default()
        };
        let r = run_episode(&net, &persona("Ryan"), "A", "C", &cfg, &perceiver, &store).unwrap();
        assert_eq!(r.route.nodes, ["A", "C"]);
        assert_eq!(r.choice_source, ChoiceSource::Backend);
        assert_eq!(r.rationales, ["The longer way has more trees."]);
        assert!(r.calls.prompt_tokens >= 10);

        let plain = EpisodeConfig::default();
        let r = run_episode(&net, &persona("Ryan"), "A", "C", &plain, &perceiver, &store).unwrap();
        assert_eq!(r.choice_source, ChoiceSource::Ranked);
    }

    #[test]
    fn stepwise_triangle_reaches() {
        let (net, perceiver) = triangle();
        let cfg = EpisodeConfig {
            mode: Mode::Stepwise,
            ..EpisodeConfig::default()
        };
        let store = MemoryStore::in_memory();
        let r = run_episode(&net, &persona("Bob"), "A", "C", &cfg, &perceiver, &store).unwrap();
        assert!(r.reached);
        assert_eq!(r.max_steps, 8);
        assert_eq!(r.steps_used, r.route.edges.len());
        assert_eq!(r.rationales.len(), r.steps_used);
    }

    #[test]
    fn rejects_degenerate_requests() {
        let (net, perceiver) = triangle();
        let store = MemoryStore::in_memory();
        let cfg = EpisodeConfig::default();
        assert!(matches!(
            run_episode(&net, &persona("Bob"), "A", "A", &cfg, &perceiver, &store),
            Err(SimError::InvalidConfig(_))
        ));
        assert!(matches!(
            run_episode(&net, &persona("Bob"), "A", "Q", &cfg, &perceiver, &store),
            Err(SimError::Plan(PlanError::UnknownNode(_)))
        ));
        let bad = EpisodeConfig {
            max_steps: Some(0),
            ..EpisodeConfig::default()
        };
        assert!(run_episode(&net, &persona("Bob"), "A", "C", &bad, &perceiver, &store).is_err());
        assert!(store.is_empty());
    }

    #[test]
    fn budget_exhaustion_is_not_an_error() {
        let (net, perceiver) = triangle();
        let cfg = EpisodeConfig {
            mode: Mode::Stepwise,
            max_steps: Some(1),
            plan: PlanConfig {
                lambda_override: Some(0.0),
                ..PlanConfig::default()
            },
            ..EpisodeConfig::default()
        };
        let store = MemoryStore::in_memory();
        let r = run_episode(&net, &persona("Ryan"), "A", "C", &cfg, &perceiver, &store).unwrap();
        assert!(!r.reached);
        assert_eq!(r.route.nodes, ["A", "B"]);
        assert!(!store.snapshot()[0].reached);
    }

    #[test]
    fn batch_errors_stay_in_their_slot() {
        let (net, perceiver) = triangle();
        let store = MemoryStore::in_memory();
        let ods = [OdPair::new("A", "C"), OdPair::new("A", "nowhere")];
        let out = run_batch(
            &net,
            &[persona("Tom")],
            &ods,
            &EpisodeConfig::default(),
            2,
            1,
            &perceiver,
            &store,
        )
        .unwrap();
        assert_eq!(out.episodes.len(), 4);
        assert!(out.episodes[..2].iter().all(|e| e.result.is_some()));
        assert!(out.episodes[2..].iter().all(|e| e.error_kind == Some(ErrorKind::Data)));
        assert_eq!(out.ledger.errors, 2);
        assert_eq!(out.ledger.accuracy, 0.5);
        assert_eq!(out.ledger.total_cost, 0.0);
    }

    #[test]
    fn zero_repetitions_rejected() {
        let (net, perceiver) = triangle();
        let store = MemoryStore::in_memory();
        let r = run_batch(&net, &[], &[], &EpisodeConfig::default(), 0, 1, &perceiver, &store);
        assert!(matches!(r, Err(SimError::InvalidConfig(_))));
    }

    #[test]
    fn seeds_are_distinct() {
        let seeds: HashSet<u64> = (0..1000).map(|i| episode_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(step_seed(1, 0), step_seed(1, 1));
    }
}
