//! Thermal comfort perception: (persona, scene) → score in `[0, 1]` with a
//! short rationale, through a pluggable backend with caching and token
//! accounting.

mod cache;
mod mock;
mod remote;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::personas::{render_prompt, Persona, PersonaError, PromptTemplate, RenderedPrompt};
use crate::road_network::RoadNetwork;

pub use cache::{CacheKey, CacheRecord, ScoreCache};
pub use mock::{mock_rationale, mock_score, MockBackend, MockWeights};
pub use remote::{RemoteBackend, RemoteConfig, API_KEY_ENV};

/// Rationales are cut to this many words.
pub const MAX_RATIONALE_WORDS: usize = 50;

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("unknown scene `{0}`")]
    UnknownScene(String),
    #[error("no scene data for edge `{0}`")]
    NoSceneData(String),
    #[error("backend timed out after {attempts} attempt(s): {detail}")]
    BackendTimeout { attempts: u32, detail: String },
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("environment variable {0} is not set")]
    MissingApiKey(String),
    #[error(transparent)]
    Prompt(#[from] PersonaError),
    #[error("score cache: {0}")]
    Cache(#[from] std::io::Error),
    #[error("invalid comfort score {0}")]
    OutOfRange(f64),
}

impl PerceptionError {
    fn is_transient(&self) -> bool {
        matches!(self, PerceptionError::BackendTimeout { .. })
    }
}

/// Thermal comfort in `[0, 1]`; higher is more comfortable.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ComfortScore(f64);

impl ComfortScore {
    pub fn new(value: f64) -> Result<Self, PerceptionError> {
        if (0.0..=1.0).contains(&value) {
            Ok(ComfortScore(value))
        } else {
            Err(PerceptionError::OutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ComfortScore {
    type Error = PerceptionError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        ComfortScore::new(v)
    }
}

impl From<ComfortScore> for f64 {
    fn from(s: ComfortScore) -> f64 {
        s.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            temperature: 0.8,
            max_tokens: 300,
        }
    }
}

/// Deterministic stand-in for street-view content, each feature in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneFeatures {
    pub shade: f64,
    pub greenery: f64,
    pub sky_exposure: f64,
    pub surface_heat: f64,
}

impl SceneFeatures {
    pub fn new(shade: f64, greenery: f64, sky_exposure: f64, surface_heat: f64) -> Self {
        SceneFeatures {
            shade,
            greenery,
            sky_exposure,
            surface_heat,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.shade, self.greenery, self.sky_exposure, self.surface_heat]
            .iter()
            .all(|v| (0.0..=1.0).contains(v))
    }
}

/// Scene feature file: `scene_ref → SceneFeatures`.
pub type SceneTable = BTreeMap<String, SceneFeatures>;

pub fn load_scene_table(source: &str) -> Result<SceneTable, PerceptionError> {
    let table: SceneTable = serde_json::from_str(source)
        .map_err(|e| PerceptionError::MalformedResponse(format!("scene feature file: {e}")))?;
    if let Some((k, _)) = table.iter().find(|(_, f)| !f.is_valid()) {
        return Err(PerceptionError::MalformedResponse(format!(
            "scene `{k}` has a feature outside [0, 1]"
        )));
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionResult {
    pub scene_ref: String,
    pub score: ComfortScore,
    pub rationale: String,
    pub backend_id: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_ms: u64,
    pub cached: bool,
}

/// Per-1k-token prices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    pub prompt_per_1k: f64,
    pub completion_per_1k: f64,
}

impl PriceTable {
    pub fn cost(&self, prompt_tokens: u64, completion_tokens: u64) -> f64 {
        prompt_tokens as f64 * self.prompt_per_1k / 1000.0 + completion_tokens as f64 * self.completion_per_1k / 1000.0
    }
}

/// Token and call totals over a set of perception calls. Cost is always
/// derived from the integer totals, so it does not depend on grouping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallLedger {
    pub calls: u64,
    pub uncached_calls: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_ms: u64,
}

impl CallLedger {
    pub fn add(&mut self, r: &PerceptionResult) {
        self.calls += 1;
        if !r.cached {
            self.uncached_calls += 1;
            self.prompt_tokens += r.prompt_tokens;
            self.completion_tokens += r.completion_tokens;
            self.latency_ms += r.latency_ms;
        }
    }

    pub fn merge(&mut self, other: &CallLedger) {
        self.calls += other.calls;
        self.uncached_calls += other.uncached_calls;
        self.prompt_tokens += other.prompt_tokens;
        self.completion_tokens += other.completion_tokens;
        self.latency_ms += other.latency_ms;
    }

    pub fn cost(&self, price: &PriceTable) -> f64 {
        price.cost(self.prompt_tokens, self.completion_tokens)
    }
}

/// Cost of a set of calls; cached calls are free.
pub fn estimate_cost(results: &[PerceptionResult], price: &PriceTable) -> f64 {
    let mut ledger = CallLedger::default();
    results.iter().for_each(|r| ledger.add(r));
    ledger.cost(price)
}

pub struct SceneRequest<'a> {
    pub persona: &'a Persona,
    pub scene_ref: &'a str,
    pub prompt: &'a RenderedPrompt,
    pub params: GenerationParams,
}

/// Raw backend answer; the score is validated by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendReply {
    pub score: f64,
    pub rationale: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_ms: u64,
}

pub struct ChoiceRequest<'a> {
    pub persona: &'a Persona,
    pub prompt: &'a RenderedPrompt,
    pub candidates: usize,
    pub params: GenerationParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceReply {
    pub index: usize,
    pub rationale: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_ms: u64,
}

pub trait PerceptionBackend: Send + Sync {
    fn id(&self) -> &str;

    fn assess(&self, req: &SceneRequest<'_>) -> Result<BackendReply, PerceptionError>;

    /// Asks the model to pick among route candidates. `None` when the
    /// backend has no such capability.
    fn choose(&self, _req: &ChoiceRequest<'_>) -> Option<Result<ChoiceReply, PerceptionError>> {
        None
    }
}

/// Appended to the user prompt on the single re-prompt after a malformed reply.
pub const FORMAT_REMINDER: &str = "Your previous reply could not be parsed. Reply with only a JSON object {\"score\": <number between 0 and 1>, \"rationale\": \"<fewer than 50 words>\"}.";

pub fn truncate_words(text: &str, max_words: usize) -> String {
    text.split_whitespace().take(max_words).collect::<Vec<_>>().join(" ")
}

/// Extracts `{"score", "rationale"}` from a model reply: either the object
/// itself, or the first `{...}` span inside free text.
pub fn parse_score_reply(text: &str) -> Result<(f64, String), PerceptionError> {
    let start = text.find('{');
    let end = text.rfind('}');
    let span = match (start, end) {
        (Some(s), Some(e)) if s < e => &text[s..=e],
        _ => return Err(PerceptionError::MalformedResponse("no JSON object in reply".into())),
    };
    let v: serde_json::Value =
        serde_json::from_str(span).map_err(|e| PerceptionError::MalformedResponse(e.to_string()))?;
    let score = v
        .get("score")
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| PerceptionError::MalformedResponse("missing numeric `score`".into()))?;
    let rationale = v
        .get("rationale")
        .and_then(serde_json::Value::as_str)
        .unwrap_or_default()
        .to_string();
    Ok((score, rationale))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Attempts per request on timeouts, including the first.
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3 }
    }
}

/// Scores scenes through a backend, with the prompt template, the score
/// cache, the retry policy and the missing-scene fallback.
pub struct Perceiver {
    backend: Arc<dyn PerceptionBackend>,
    template: PromptTemplate,
    cache: Arc<ScoreCache>,
    default_score: Option<ComfortScore>,
    retry: RetryPolicy,
}

impl Perceiver {
    pub fn new(backend: Arc<dyn PerceptionBackend>) -> Self {
        Perceiver {
            backend,
            template: PromptTemplate::default(),
            cache: Arc::new(ScoreCache::in_memory()),
            default_score: None,
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_template(mut self, template: PromptTemplate) -> Self {
        self.template = template;
        self
    }

    pub fn with_cache(mut self, cache: Arc<ScoreCache>) -> Self {
        self.cache = cache;
        self
    }

    /// Score used for scenes the backend cannot resolve and for edges with
    /// no scene data. Without it those cases are errors.
    pub fn with_default_score(mut self, score: Option<ComfortScore>) -> Self {
        self.default_score = score;
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn backend(&self) -> &dyn PerceptionBackend {
        self.backend.as_ref()
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    pub fn template(&self) -> &PromptTemplate {
        &self.template
    }

    pub fn cache(&self) -> &ScoreCache {
        &self.cache
    }

    pub fn score_scene(
        &self,
        persona: &Persona,
        scene_ref: &str,
        params: GenerationParams,
    ) -> Result<PerceptionResult, PerceptionError> {
        let prompt = render_prompt(&self.template, persona, scene_ref)?;
        let key = CacheKey::new(self.backend.id(), &persona.name, scene_ref, &prompt, params);
        if let Some(mut hit) = self.cache.get(&key) {
            hit.cached = true;
            return Ok(hit);
        }

        let reply = match self.assess_with_retries(persona, scene_ref, &prompt, params) {
            Ok(r) => r,
            Err(PerceptionError::UnknownScene(s)) => {
                return match self.default_score {
                    Some(score) => Ok(PerceptionResult {
                        scene_ref: scene_ref.to_string(),
                        score,
                        rationale: String::new(),
                        backend_id: "default".into(),
                        prompt_tokens: 0,
                        completion_tokens: 0,
                        latency_ms: 0,
                        cached: false,
                    }),
                    None => Err(PerceptionError::UnknownScene(s)),
                }
            }
            Err(e) => return Err(e),
        };
        let result = PerceptionResult {
            scene_ref: scene_ref.to_string(),
            score: ComfortScore::new(reply.score).expect("validated by assess_with_retries"),
            rationale: truncate_words(&reply.rationale, MAX_RATIONALE_WORDS),
            backend_id: self.backend.id().to_string(),
            prompt_tokens: reply.prompt_tokens,
            completion_tokens: reply.completion_tokens,
            latency_ms: reply.latency_ms,
            cached: false,
        };
        self.cache.insert(key, &result)?;
        Ok(result)
    }

    /// Timeouts are retried up to the policy's attempt budget; a malformed
    /// or out-of-range reply gets exactly one re-prompt. Tokens and latency
    /// of every attempt that produced a reply are accumulated.
    fn assess_with_retries(
        &self,
        persona: &Persona,
        scene_ref: &str,
        prompt: &RenderedPrompt,
        params: GenerationParams,
    ) -> Result<BackendReply, PerceptionError> {
        let mut spent = (0u64, 0u64, 0u64);
        let mut current = prompt.clone();
        let mut reprompted = false;
        loop {
            let req = SceneRequest {
                persona,
                scene_ref,
                prompt: &current,
                params,
            };
            let outcome = self.call_with_timeout_retries(&req).and_then(|reply| {
                spent.0 += reply.prompt_tokens;
                spent.1 += reply.completion_tokens;
                spent.2 += reply.latency_ms;
                if reply.score.is_finite() && (0.0..=1.0).contains(&reply.score) {
                    Ok(reply)
                } else {
                    Err(PerceptionError::MalformedResponse(format!(
                        "score {} outside [0, 1]",
                        reply.score
                    )))
                }
            });
            match outcome {
                Ok(reply) => {
                    return Ok(BackendReply {
                        prompt_tokens: spent.0,
                        completion_tokens: spent.1,
                        latency_ms: spent.2,
                        ..reply
                    })
                }
                Err(PerceptionError::MalformedResponse(_)) if !reprompted => {
                    reprompted = true;
                    current = RenderedPrompt {
                        system: prompt.system.clone(),
                        user: format!("{}\n{}", prompt.user, FORMAT_REMINDER),
                    };
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn call_with_timeout_retries(&self, req: &SceneRequest<'_>) -> Result<BackendReply, PerceptionError> {
        let attempts = self.retry.max_attempts.max(1);
        let mut last = None;
        for _ in 0..attempts {
            match self.backend.assess(req) {
                Err(e) if e.is_transient() => last = Some(e),
                other => return other,
            }
        }
        Err(match last {
            Some(PerceptionError::BackendTimeout { detail, .. }) => {
                PerceptionError::BackendTimeout { attempts, detail }
            }
            Some(e) => e,
            None => unreachable!("at least one attempt"),
        })
    }

    /// Mean comfort of one edge: its own scenes, else the mean of the
    /// endpoint nodes' scene means, else the configured default.
    pub fn score_edge(
        &self,
        persona: &Persona,
        net: &RoadNetwork,
        edge: usize,
        params: GenerationParams,
    ) -> Result<EdgeComfort, PerceptionError> {
        let mut calls = Vec::new();
        let mut score_refs = |refs: &[String]| -> Result<Option<f64>, PerceptionError> {
            if refs.is_empty() {
                return Ok(None);
            }
            let mut sum = 0.0;
            for r in refs {
                let res = self.score_scene(persona, r, params)?;
                sum += res.score.value();
                calls.push(res);
            }
            Ok(Some(sum / refs.len() as f64))
        };
        let e = net.edge(edge);
        let value = match score_refs(&e.svi_refs)? {
            Some(v) => Some(v),
            None => {
                let (a, b) = net.endpoints(edge);
                let ma = score_refs(&net.node(a).svi_refs)?;
                let mb = score_refs(&net.node(b).svi_refs)?;
                match (ma, mb) {
                    (Some(x), Some(y)) => Some((x + y) / 2.0),
                    (Some(x), None) | (None, Some(x)) => Some(x),
                    (None, None) => None,
                }
            }
        };
        let (score, fallback) = match value {
            Some(v) => (ComfortScore::new(v.clamp(0.0, 1.0))?, false),
            None => match self.default_score {
                Some(d) => (d, true),
                None => return Err(PerceptionError::NoSceneData(net.edge_key_of(edge))),
            },
        };
        Ok(EdgeComfort { score, calls, fallback })
    }

    /// Comfort of every edge for one persona. Each distinct scene is scored
    /// once; its result lands in `scenes`.
    pub fn score_network(
        &self,
        persona: &Persona,
        net: &RoadNetwork,
        params: GenerationParams,
    ) -> Result<NetworkComfort, PerceptionError> {
        let mut scenes: HashMap<String, PerceptionResult> = HashMap::new();
        let mut ledger = CallLedger::default();
        let mut mean_of = |refs: &[String]| -> Result<Option<f64>, PerceptionError> {
            if refs.is_empty() {
                return Ok(None);
            }
            let mut sum = 0.0;
            for r in refs {
                let score = match scenes.get(r) {
                    Some(res) => res.score.value(),
                    None => {
                        let res = self.score_scene(persona, r, params)?;
                        ledger.add(&res);
                        let s = res.score.value();
                        scenes.insert(r.clone(), res);
                        s
                    }
                };
                sum += score;
            }
            Ok(Some(sum / refs.len() as f64))
        };

        let mut node_mean: Vec<Option<Option<f64>>> = vec![None; net.node_count()];
        let mut comfort = Vec::with_capacity(net.edge_count());
        for (ei, e) in net.edges().iter().enumerate() {
            let value = match mean_of(&e.svi_refs)? {
                Some(v) => Some(v),
                None => {
                    let (a, b) = net.endpoints(ei);
                    let mut means = [None, None];
                    for (slot, n) in means.iter_mut().zip([a, b]) {
                        if node_mean[n].is_none() {
                            node_mean[n] = Some(mean_of(&net.node(n).svi_refs)?);
                        }
                        *slot = node_mean[n].flatten();
                    }
                    match means {
                        [Some(x), Some(y)] => Some((x + y) / 2.0),
                        [Some(x), None] | [None, Some(x)] => Some(x),
                        [None, None] => None,
                    }
                }
            };
            let v = match value {
                Some(v) => v.clamp(0.0, 1.0),
                None => match self.default_score {
                    Some(d) => d.value(),
                    None => return Err(PerceptionError::NoSceneData(net.edge_key_of(ei))),
                },
            };
            comfort.push(v);
        }
        Ok(NetworkComfort {
            comfort,
            scenes,
            ledger,
        })
    }
}

#[derive(Debug, Clone)]
pub struct EdgeComfort {
    pub score: ComfortScore,
    pub calls: Vec<PerceptionResult>,
    /// `true` when the configured default was used.
    pub fallback: bool,
}

/// Per-edge comfort for a persona plus the scene results behind it.
#[derive(Debug, Clone, Default)]
pub struct NetworkComfort {
    pub comfort: Vec<f64>,
    pub scenes: HashMap<String, PerceptionResult>,
    pub ledger: CallLedger,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::personas::builtin_personas;
    use std::sync::atomic::{AtomicU32, Ordering};
    use std::sync::Mutex;

    fn persona(name: &str) -> Persona {
        builtin_personas().into_iter().find(|p| p.name == name).unwrap()
    }

    /// Replays a fixed script of replies and counts calls.
    struct Scripted {
        replies: Mutex<Vec<Result<BackendReply, PerceptionError>>>,
        calls: AtomicU32,
        last_user: Mutex<String>,
    }

    impl Scripted {
        fn new(mut replies: Vec<Result<BackendReply, PerceptionError>>) -> Self {
            replies.reverse();
            Scripted {
                replies: Mutex::new(replies),
                calls: AtomicU32::new(0),
                last_user: Mutex::new(String::new()),
            }
        }
    }

    impl PerceptionBackend for Scripted {
        fn id(&self) -> &str {
            "scripted"
        }
        fn assess(&self, req: &SceneRequest<'_>) -> Result<BackendReply, PerceptionError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            *self.last_user.lock().unwrap() = req.prompt.user.clone();
            self.replies.lock().unwrap().pop().expect("script exhausted")
        }
    }

    fn reply(score: f64) -> Result<BackendReply, PerceptionError> {
        Ok(BackendReply {
            score,
            rationale: "fine".into(),
            prompt_tokens: 10,
            completion_tokens: 5,
            latency_ms: 7,
        })
    }

    fn timeout() -> Result<BackendReply, PerceptionError> {
        Err(PerceptionError::BackendTimeout {
            attempts: 1,
            detail: "slow".into(),
        })
    }

    #[test]
    fn out_of_range_reply_reprompts_once_then_fails() {
        let backend = Arc::new(Scripted::new(vec![reply(1.7), reply(-0.1)]));
        let p = Perceiver::new(backend.clone());
        let err = p.score_scene(&persona("Tom"), "s1", GenerationParams::default());
        assert!(matches!(err, Err(PerceptionError::MalformedResponse(_))));
        assert_eq!(backend.calls.load(Ordering::SeqCst), 2);
        assert!(backend.last_user.lock().unwrap().ends_with(FORMAT_REMINDER));
    }

    #[test]
    fn reprompt_recovers_and_sums_tokens() {
        let backend = Arc::new(Scripted::new(vec![
            Err(PerceptionError::MalformedResponse("junk".into())),
            reply(0.4),
        ]));
        let p = Perceiver::new(backend.clone());
        let r = p
            .score_scene(&persona("Tom"), "s1", GenerationParams::default())
            .unwrap();
        assert_eq!(r.score.value(), 0.4);
        assert_eq!(r.prompt_tokens, 10);
        assert_eq!(backend.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn timeouts_retry_up_to_budget() {
        let backend = Arc::new(Scripted::new(vec![timeout(), timeout(), reply(0.5)]));
        let p = Perceiver::new(backend.clone()).with_retry(RetryPolicy { max_attempts: 3 });
        assert!(p
            .score_scene(&persona("Tom"), "s1", GenerationParams::default())
            .is_ok());

        let backend = Arc::new(Scripted::new(vec![timeout(), timeout()]));
        let p = Perceiver::new(backend.clone()).with_retry(RetryPolicy { max_attempts: 2 });
        match p.score_scene(&persona("Tom"), "s1", GenerationParams::default()) {
            Err(PerceptionError::BackendTimeout { attempts, .. }) => assert_eq!(attempts, 2),
            other => panic!("{other:?}"),
        }
        assert_eq!(backend.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn cache_hit_is_identical_and_free() {
        let backend = Arc::new(Scripted::new(vec![reply(0.3)]));
        let p = Perceiver::new(backend.clone());
        let a = p
            .score_scene(&persona("Tom"), "s1", GenerationParams::default())
            .unwrap();
        let b = p
            .score_scene(&persona("Tom"), "s1", GenerationParams::default())
            .unwrap();
        assert!(!a.cached && b.cached);
        assert_eq!(a.score, b.score);
        assert_eq!(a.rationale, b.rationale);
        assert_eq!(backend.calls.load(Ordering::SeqCst), 1);
        let price = PriceTable {
            prompt_per_1k: 1.0,
            completion_per_1k: 1.0,
        };
        assert_eq!(estimate_cost(&[a.clone(), b], &price), estimate_cost(&[a], &price));
    }

    #[test]
    fn cost_examples() {
        let price = PriceTable {
            prompt_per_1k: 0.001,
            completion_per_1k: 0.002,
        };
        assert_eq!(estimate_cost(&[], &price), 0.0);
        let r = PerceptionResult {
            scene_ref: "s".into(),
            score: ComfortScore::new(0.5).unwrap(),
            rationale: String::new(),
            backend_id: "x".into(),
            prompt_tokens: 1000,
            completion_tokens: 1000,
            latency_ms: 0,
            cached: false,
        };
        approx::assert_abs_diff_eq!(estimate_cost(&[r], &price), 0.003, epsilon = 1e-15);
    }

    #[test]
    fn parse_reply_variants() {
        assert_eq!(
            parse_score_reply(r#"{"score": 0.25, "rationale": "shade"}"#).unwrap(),
            (0.25, "shade".to_string())
        );
        assert_eq!(
            parse_score_reply("Sure! ```json\n{\"score\":1,\"rationale\":\"x\"}\n```")
                .unwrap()
                .0,
            1.0
        );
        assert!(parse_score_reply("no json").is_err());
        assert!(parse_score_reply(r#"{"rationale":"x"}"#).is_err());
        assert!(parse_score_reply(r#"{"score":"high"}"#).is_err());
    }

    #[test]
    fn truncation_caps_words() {
        let long = (0..80).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        assert_eq!(truncate_words(&long, MAX_RATIONALE_WORDS).split(' ').count(), 50);
    }

    #[test]
    fn comfort_score_bounds() {
        assert!(ComfortScore::new(0.0).is_ok());
        assert!(ComfortScore::new(1.0).is_ok());
        assert!(ComfortScore::new(1.0001).is_err());
        assert!(ComfortScore::new(f64::NAN).is_err());
        assert!(serde_json::from_str::<ComfortScore>("1.5").is_err());
    }
}
