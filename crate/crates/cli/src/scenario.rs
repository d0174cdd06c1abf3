//! Scenario files: what to simulate, resolved against CLI flags and
//! defaults into one config snapshot.

use std::path::{Path, PathBuf};

use heatroute_core::perception::{GenerationParams, MockWeights, PriceTable, RemoteConfig};
use heatroute_core::planning::PlanConfig;
use heatroute_core::road_network::RoadNetwork;
use heatroute_core::simulation::{EpisodeConfig, Mode, OdPair};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Where an OD endpoint is: a node id or a coordinate snapped to the
/// nearest node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Endpoint {
    Node(String),
    Coord { lat: f64, lon: f64 },
}

impl Endpoint {
    pub fn resolve(&self, net: &RoadNetwork) -> Result<String, CliError> {
        match self {
            Endpoint::Node(id) => {
                net.require(id)?;
                Ok(id.clone())
            }
            Endpoint::Coord { lat, lon } => Ok(net.nearest_node(*lat, *lon)?.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdSpec {
    pub src: Endpoint,
    pub dst: Endpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    Mock {
        #[serde(default)]
        weights: Option<MockWeights>,
    },
    Remote(RemoteConfig),
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Mock { weights: None }
    }
}

fn builtin() -> String {
    "builtin".into()
}

/// Scenario file as written by the user. Paths are relative to the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub network: String,
    /// Scene feature table for the mock backend.
    #[serde(default)]
    pub scenes: Option<String>,
    #[serde(default = "builtin")]
    pub personas: String,
    /// Restrict the run to these persona names.
    #[serde(default)]
    pub persona_filter: Option<Vec<String>>,
    pub od_pairs: Vec<OdSpec>,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub lambda_override: Option<f64>,
    #[serde(default)]
    pub turn_threshold_deg: Option<f64>,
    #[serde(default)]
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub repetitions: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub backend: Option<BackendSpec>,
    #[serde(default)]
    pub price: Option<PriceTable>,
    #[serde(default)]
    pub generation: Option<GenerationParams>,
    #[serde(default)]
    pub default_score: Option<f64>,
    #[serde(default)]
    pub prompt_template: Option<String>,
    #[serde(default)]
    pub use_memory: Option<bool>,
    #[serde(default)]
    pub backend_choice: Option<bool>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<(Scenario, PathBuf), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let scenario: Scenario =
            serde_json::from_str(&text).map_err(|e| CliError::data(format!("scenario {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((scenario, base))
    }
}

/// Values that override the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub k: Option<usize>,
    pub repetitions: Option<usize>,
    pub max_steps: Option<usize>,
    pub lambda_override: Option<f64>,
    pub backend_kind: Option<String>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_REPETITIONS: usize = 10;

/// The fully resolved run configuration; lands verbatim in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub network: String,
    pub network_sha256: String,
    pub scenes: Option<String>,
    pub personas: String,
    pub persona_filter: Option<Vec<String>>,
    pub od_pairs: Vec<OdPair>,
    pub repetitions: usize,
    pub episode: EpisodeConfig,
    pub backend: BackendSpec,
    pub default_score: Option<f64>,
    pub prompt_template: Option<String>,
}

pub fn resolve_path(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

impl ResolvedConfig {
    /// Precedence: flags, then scenario, then defaults.
    pub fn resolve(
        scenario: &Scenario,
        flags: &Overrides,
        net: &RoadNetwork,
        network_sha256: String,
    ) -> Result<ResolvedConfig, CliError> {
        let od_pairs = scenario
            .od_pairs
            .iter()
            .map(|od| Ok(OdPair::new(od.src.resolve(net)?, od.dst.resolve(net)?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        if od_pairs.is_empty() {
            return Err(CliError::data("scenario lists no od_pairs"));
        }
        let plan = PlanConfig {
            k: flags.k.or(scenario.k).unwrap_or(PlanConfig::default().k),
            lambda_override: flags.lambda_override.or(scenario.lambda_override),
            turn_threshold_deg: scenario
                .turn_threshold_deg
                .unwrap_or(PlanConfig::default().turn_threshold_deg),
        };
        let defaults = EpisodeConfig::default();
        let episode = EpisodeConfig {
            mode: flags.mode.or(scenario.mode).unwrap_or_default(),
            plan,
            max_steps: flags.max_steps.or(scenario.max_steps),
            seed: flags.seed.or(scenario.seed).unwrap_or(DEFAULT_SEED),
            price: scenario.price.unwrap_or_default(),
            params: scenario.generation.unwrap_or_default(),
            use_memory: scenario.use_memory.unwrap_or(defaults.use_memory),
            backend_choice: scenario.backend_choice.unwrap_or(defaults.backend_choice),
        };
        episode.validate().map_err(|e| CliError::usage(e.to_string()))?;

        let mut backend = scenario.backend.clone().unwrap_or_default();
        match flags.backend_kind.as_deref() {
            None => {}
            Some("mock") => {
                if !matches!(backend, BackendSpec::Mock { .. }) {
                    backend = BackendSpec::default();
                }
            }
            Some("remote") => {
                if !matches!(backend, BackendSpec::Remote(_)) {
                    backend = BackendSpec::Remote(RemoteConfig::default());
                }
            }
            Some(other) => return Err(CliError::usage(format!("unknown backend `{other}` (mock or remote)"))),
        }
        if let BackendSpec::Remote(cfg) = &mut backend {
            if let Some(e) = &flags.endpoint {
                cfg.endpoint = e.clone();
            }
            if let Some(m) = &flags.model {
                cfg.model = m.clone();
            }
        }
        let repetitions = flags
            .repetitions
            .or(scenario.repetitions)
            .unwrap_or(DEFAULT_REPETITIONS);
        if repetitions == 0 {
            return Err(CliError::usage("repetitions must be at least 1"));
        }
        if let Some(d) = scenario.default_score {
            if !(0.0..=1.0).contains(&d) {
                return Err(CliError::data(format!("default_score {d} outside [0, 1]")));
            }
        }
        Ok(ResolvedConfig {
            network: scenario.network.clone(),
            network_sha256,
            scenes: scenario.scenes.clone(),
            personas: scenario.personas.clone(),
            persona_filter: scenario.persona_filter.clone(),
            od_pairs,
            repetitions,
            episode,
            backend,
            default_score: scenario.default_score,
            prompt_template: scenario.prompt_template.clone(),
        })
    }
}
