use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use heatroute_core::evaluation::{
    aggregate_topics, group_stats, human_means, load_ratings, load_reference_routes, overlap, pci, poi, Dimension,
    Lexicon, PoiConfig, POI_VERSION,
};
use heatroute_core::memory::{read_log, MemoryStore};
use heatroute_core::perception::{
    load_scene_table, CallLedger, ComfortScore, MockBackend, Perceiver, PerceptionBackend, PerceptionResult,
    RemoteBackend, SceneTable, ScoreCache,
};
use heatroute_core::personas::{builtin_personas, load_personas, Persona, PromptTemplate};
use heatroute_core::planning::turn_count;
use heatroute_core::road_network::{load_network, serialize_network, RoadNetwork};
use heatroute_core::simulation::{run_batch, BatchEpisode, BatchLedger, EpisodeResult};
use heatroute_core::synth::{generate_grid, GridSpec, ShadePattern};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::*;
use crate::error::{CliError, Failure};
use crate::export::routes_geojson;
use crate::manifest::{sha256_hex, unix_now, RunManifest};
use crate::scenario::{resolve_path, BackendSpec, Overrides, ResolvedConfig, Scenario};

pub const EPISODES_FILE: &str = "episodes.ndjson";
pub const ROUTES_FILE: &str = "routes.geojson";
pub const LEDGER_FILE: &str = "ledger.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MEMORY_FILE: &str = "memory.ndjson";

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Pretty JSON with a trailing newline.
fn to_json_file<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn emit(out: &mut dyn Write, value: serde_json::Value) -> Result<(), CliError> {
    writeln!(out, "{value}").map_err(|e| CliError::data(format!("stdout: {e}")))
}

pub fn load_persona_set(spec: &str, base: &Path) -> Result<Vec<Persona>, CliError> {
    if spec == "builtin" {
        Ok(builtin_personas())
    } else {
        let path = resolve_path(base, spec);
        Ok(load_personas(&read(&path)?)?)
    }
}

fn load_scenes(path: &Path) -> Result<SceneTable, CliError> {
    load_scene_table(&read(path)?).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// Builds the backend. Returns it with its in-flight limit, if any.
pub fn build_backend(
    spec: &BackendSpec,
    scenes: Option<SceneTable>,
) -> Result<(Arc<dyn PerceptionBackend>, Option<usize>), CliError> {
    match spec {
        BackendSpec::Mock { weights } => {
            let scenes =
                scenes.ok_or_else(|| CliError::usage("the mock backend needs a scene feature table (`scenes`)"))?;
            let mut backend = MockBackend::new(scenes);
            if let Some(w) = weights {
                backend = backend.with_weights(*w);
            }
            Ok((Arc::new(backend), None))
        }
        BackendSpec::Remote(cfg) => {
            let limit = cfg.max_in_flight;
            Ok((Arc::new(RemoteBackend::from_env(cfg.clone())?), Some(limit)))
        }
    }
}

fn open_cache(path: Option<&PathBuf>) -> Result<Arc<ScoreCache>, CliError> {
    Ok(Arc::new(match path {
        Some(p) => ScoreCache::open(p).map_err(|e| CliError::io(p, e))?,
        None => ScoreCache::in_memory(),
    }))
}

pub fn generate_grid_cmd(args: &GridArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let pattern = match args.pattern {
        PatternArg::Uniform => ShadePattern::Uniform,
        PatternArg::ShadedPerimeter => ShadePattern::ShadedPerimeter,
        PatternArg::Random => ShadePattern::Random,
    };
    let spec = GridSpec::new(args.rows, args.cols, args.spacing, pattern).with_seed(args.seed);
    let (net, scenes) = generate_grid(&spec)?;
    create_dir(&args.out_dir)?;
    let network_path = args.out_dir.join("network.json");
    let scenes_path = args.out_dir.join("scenes.json");
    write(&network_path, &serialize_network(&net))?;
    write(&scenes_path, &to_json_file(&scenes))?;
    emit(
        out,
        json!({
            "network": network_path,
            "scenes": scenes_path,
            "nodes": net.node_count(),
            "edges": net.edge_count(),
            "pattern": pattern.to_string(),
        }),
    )
}

pub fn validate_cmd(args: &ValidateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(scenario_path) = &args.scenario {
        let (scenario, base) = Scenario::load(scenario_path)?;
        let net_path = resolve_path(&base, &scenario.network);
        let net_text = read(&net_path)?;
        let net = load_network(&net_text)?;
        let personas = load_persona_set(&scenario.personas, &base)?;
        let scenes = scenario
            .scenes
            .as_ref()
            .map(|s| load_scenes(&resolve_path(&base, s)))
            .transpose()?;
        let resolved =
            ResolvedConfig::resolve(&scenario, &Overrides::default(), &net, sha256_hex(net_text.as_bytes()))?;
        if let Some(scenes) = &scenes {
            check_scene_coverage(&net, scenes)?;
        }
        return emit(
            out,
            json!({
                "valid": true,
                "nodes": net.node_count(),
                "edges": net.edge_count(),
                "personas": personas.len(),
                "od_pairs": resolved.od_pairs.len(),
                "scenes": scenes.map(|s| s.len()),
            }),
        );
    }
    let net_path = args
        .network
        .as_ref()
        .ok_or_else(|| CliError::usage("--network is required"))?;
    let net = load_network(&read(net_path)?)?;
    let mut report = json!({
        "valid": true,
        "nodes": net.node_count(),
        "edges": net.edge_count(),
        "degree_histogram": net.degree_histogram(),
    });
    if let Some(p) = &args.scenes {
        let scenes = load_scenes(p)?;
        check_scene_coverage(&net, &scenes)?;
        report["scenes"] = json!(scenes.len());
    }
    if let Some(p) = &args.personas {
        report["personas"] = json!(load_personas(&read(p)?)?.len());
    }
    emit(out, report)
}

/// Every scene reference in the network must have features.
fn check_scene_coverage(net: &RoadNetwork, scenes: &SceneTable) -> Result<(), CliError> {
    let refs = net
        .nodes()
        .iter()
        .flat_map(|n| n.svi_refs.iter())
        .chain(net.edges().iter().flat_map(|e| e.svi_refs.iter()));
    for r in refs {
        if !scenes.contains_key(r) {
            return Err(CliError::data(format!(
                "scene `{r}` referenced by the network has no features"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreLine {
    pub persona: String,
    #[serde(flatten)]
    pub result: PerceptionResult,
}

pub fn score_cmd(args: &ScoreArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let scenes = load_scenes(&args.scenes)?;
    let mut personas = load_persona_set(&args.personas, Path::new("."))?;
    if !args.persona.is_empty() {
        for name in &args.persona {
            if !personas.iter().any(|p| &p.name == name) {
                return Err(CliError::usage(format!("unknown persona `{name}`")));
            }
        }
        personas.retain(|p| args.persona.contains(&p.name));
    }
    let scene_refs: Vec<String> = if args.scene.is_empty() {
        scenes.keys().cloned().collect()
    } else {
        args.scene.clone()
    };
    let spec = backend_from_flags(&args.backend)?;
    let (backend, _) = build_backend(&spec, Some(scenes))?;
    let perceiver = Perceiver::new(backend).with_cache(open_cache(args.backend.cache.as_ref())?);

    let mut text = String::new();
    let mut ledger = CallLedger::default();
    for p in &personas {
        for s in &scene_refs {
            let result = perceiver.score_scene(p, s, Default::default())?;
            ledger.add(&result);
            let line = ScoreLine {
                persona: p.name.clone(),
                result,
            };
            text.push_str(&serde_json::to_string(&line).expect("serializable"));
            text.push('\n');
        }
    }
    match &args.out {
        Some(path) => {
            write(path, &text)?;
            emit(
                out,
                json!({"scores": path, "lines": personas.len() * scene_refs.len(), "calls": ledger}),
            )
        }
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::data(format!("stdout: {e}"))),
    }
}

fn backend_from_flags(args: &BackendArgs) -> Result<BackendSpec, CliError> {
    match args.backend.as_deref() {
        None | Some("mock") => Ok(BackendSpec::default()),
        Some("remote") => Ok(BackendSpec::Remote(heatroute_core::perception::RemoteConfig {
            endpoint: args.endpoint.clone().unwrap_or_default(),
            model: args.model.clone().unwrap_or_default(),
            ..Default::default()
        })),
        Some(other) => Err(CliError::usage(format!("unknown backend `{other}` (mock or remote)"))),
    }
}

/// One line of the episode log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeLine {
    pub manifest_id: String,
    #[serde(flatten)]
    pub episode: BatchEpisode,
}

/// What `simulate` produced.
#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub manifest: RunManifest,
    pub ledger: BatchLedger,
    pub out_dir: PathBuf,
}

pub fn simulate_cmd(args: &SimulateArgs, out: &mut dyn Write) -> Result<SimulateSummary, CliError> {
    let (scenario, base) = Scenario::load(&args.scenario)?;
    let net_path = resolve_path(&base, &scenario.network);
    let net_text = read(&net_path)?;
    let net = load_network(&net_text)?;
    let flags = Overrides {
        seed: args.seed,
        mode: args.mode.map(Into::into),
        k: args.k,
        repetitions: args.repetitions,
        max_steps: args.max_steps,
        lambda_override: args.lambda,
        backend_kind: args.backend.backend.clone(),
        endpoint: args.backend.endpoint.clone(),
        model: args.backend.model.clone(),
    };
    let config = ResolvedConfig::resolve(&scenario, &flags, &net, sha256_hex(net_text.as_bytes()))?;

    let mut personas = load_persona_set(&config.personas, &base)?;
    if let Some(filter) = &config.persona_filter {
        for name in filter {
            if !personas.iter().any(|p| &p.name == name) {
                return Err(CliError::data(format!("persona_filter names unknown persona `{name}`")));
            }
        }
        personas.retain(|p| filter.contains(&p.name));
    }
    let scenes = config
        .scenes
        .as_ref()
        .map(|s| load_scenes(&resolve_path(&base, s)))
        .transpose()?;
    let (backend, in_flight) = build_backend(&config.backend, scenes)?;
    let template = match &config.prompt_template {
        Some(p) => PromptTemplate::parse(&read(&resolve_path(&base, p))?)?,
        None => PromptTemplate::default(),
    };
    let default_score = config
        .default_score
        .map(ComfortScore::new)
        .transpose()
        .map_err(|e| CliError::data(e.to_string()))?;
    let perceiver = Perceiver::new(backend)
        .with_template(template)
        .with_default_score(default_score)
        .with_cache(open_cache(args.backend.cache.as_ref())?);

    let store = MemoryStore::in_memory();
    if let Some(p) = &args.memory {
        let file = fs::File::open(p).map_err(|e| CliError::io(p, e))?;
        for rec in read_log(std::io::BufReader::new(file))? {
            store.record(rec)?;
        }
    }

    let available = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut jobs = args.jobs.unwrap_or(available).max(1);
    if let Some(limit) = in_flight {
        jobs = jobs.min(limit.max(1));
    }

    let mut manifest = RunManifest::new(config.clone(), perceiver.backend_id().to_string());
    let started = Instant::now();
    let batch = run_batch(
        &net,
        &personas,
        &config.od_pairs,
        &config.episode,
        config.repetitions,
        jobs,
        &perceiver,
        &store,
    )?;
    manifest.finished_at_unix = Some(unix_now());

    create_dir(&args.out)?;
    let mut log = String::new();
    for ep in &batch.episodes {
        let line = EpisodeLine {
            manifest_id: manifest.manifest_id.clone(),
            episode: ep.clone(),
        };
        log.push_str(&serde_json::to_string(&line).expect("serializable"));
        log.push('\n');
    }
    write(&args.out.join(EPISODES_FILE), &log)?;
    write(
        &args.out.join(ROUTES_FILE),
        &to_json_file(&routes_geojson(&net, &batch.episodes, &manifest.manifest_id)),
    )?;
    let mut ledger_json = serde_json::to_value(&batch.ledger).expect("serializable");
    ledger_json["manifest_id"] = json!(manifest.manifest_id);
    write(&args.out.join(LEDGER_FILE), &to_json_file(&ledger_json))?;
    write(&args.out.join(MANIFEST_FILE), &to_json_file(&manifest))?;

    let order: HashMap<&str, usize> = personas.iter().enumerate().map(|(i, p)| (p.name.as_str(), i)).collect();
    let mut records = store.snapshot();
    records.sort_by_key(|r| order.get(r.persona_name.as_str()).copied().unwrap_or(usize::MAX));
    let mut memory = String::new();
    for r in &records {
        memory.push_str(&serde_json::to_string(r).expect("serializable"));
        memory.push('\n');
    }
    write(&args.out.join(MEMORY_FILE), &memory)?;

    emit(
        out,
        json!({
            "manifest_id": manifest.manifest_id,
            "out": args.out,
            "episodes": batch.ledger.episodes,
            "errors": batch.ledger.errors,
            "accuracy": batch.ledger.accuracy,
            "total_cost": batch.ledger.total_cost,
            "elapsed_s": started.elapsed().as_secs_f64(),
        }),
    )?;

    if let Some(failed) = batch.episodes.iter().find(|e| e.error.is_some()) {
        let kind = match failed.error_kind {
            Some(heatroute_core::simulation::ErrorKind::Backend) => Failure::Backend,
            Some(heatroute_core::simulation::ErrorKind::Config) => Failure::Usage,
            _ => Failure::Data,
        };
        return Err(CliError {
            kind,
            message: format!(
                "{} of {} episodes failed; first: episode {}: {}",
                batch.ledger.errors,
                batch.ledger.episodes,
                failed.index,
                failed.error.as_deref().unwrap_or_default()
            ),
        });
    }
    Ok(SimulateSummary {
        manifest,
        ledger: batch.ledger,
        out_dir: args.out.clone(),
    })
}

pub fn read_episode_log(path: &Path) -> Result<Vec<EpisodeLine>, CliError> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CliError::data(format!("{} row {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn read_score_lines(path: &Path) -> Result<Vec<ScoreLine>, CliError> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CliError::data(format!("{} row {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiRow {
    pub persona: String,
    pub episode: usize,
    pub reference: String,
    pub overlap: f64,
    pub turns_sim: usize,
    pub turns_ref: usize,
    pub poi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PciRow {
    pub dimension: String,
    pub group: String,
    pub pairs: usize,
    pub pci: Option<f64>,
    pub note: String,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn evaluate_cmd(args: &EvaluateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let net = load_network(&read(&args.network)?)?;
    let lines = read_episode_log(&args.episodes)?;
    let personas = load_persona_set(&args.personas, Path::new("."))?;
    let manifest_ids: Vec<&str> = {
        let mut ids: Vec<&str> = lines.iter().map(|l| l.manifest_id.as_str()).collect();
        ids.sort();
        ids.dedup();
        ids
    };
    let results: Vec<EpisodeResult> = lines.iter().filter_map(|l| l.episode.result.clone()).collect();
    let poi_cfg = PoiConfig {
        alpha: args.alpha,
        turn_threshold_deg: args.turn_threshold,
    };
    create_dir(&args.out)?;

    let mut poi_rows = Vec::new();
    if let Some(path) = &args.references {
        let refs = load_reference_routes(&read(path)?, &net)?;
        for (i, r) in refs.iter().enumerate() {
            let ref_id = r.id.clone().unwrap_or_else(|| format!("ref{}", i + 1));
            let ref_turns = turn_count_of(&net, &r.nodes, poi_cfg.turn_threshold_deg)?;
            for line in &lines {
                let Some(res) = &line.episode.result else { continue };
                if res.origin != r.origin || res.destination != r.destination {
                    continue;
                }
                poi_rows.push(PoiRow {
                    persona: res.persona_name.clone(),
                    episode: line.episode.index,
                    reference: ref_id.clone(),
                    overlap: overlap(&net, &res.route.nodes, &r.nodes)?,
                    turns_sim: turn_count_of(&net, &res.route.nodes, poi_cfg.turn_threshold_deg)?,
                    turns_ref: ref_turns,
                    poi: poi(&net, &res.route.nodes, &r.nodes, &poi_cfg)?,
                });
            }
        }
        write_csv(&args.out.join("poi.csv"), &poi_rows)?;
    }

    let mut pci_rows = Vec::new();
    match (&args.ratings, &args.scores) {
        (Some(ratings_path), Some(scores_path)) => {
            let ratings = load_ratings(&read(ratings_path)?)?;
            let scores = read_score_lines(scores_path)?;
            pci_rows = pci_by_group(&ratings, &scores, &personas);
            write_csv(&args.out.join("pci.csv"), &pci_rows)?;
        }
        (Some(_), None) | (None, Some(_)) => {
            return Err(CliError::usage("PCI needs both --ratings and --scores"));
        }
        (None, None) => {}
    }

    let groups = group_stats(&results, &personas);
    write_csv(&args.out.join("groups.csv"), &groups)?;

    let mut by_persona: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for r in &results {
        by_persona
            .entry(r.persona_name.clone())
            .or_default()
            .extend(r.rationales.iter().map(String::as_str));
    }
    let topics: BTreeMap<String, serde_json::Value> = aggregate_topics(by_persona)
        .into_iter()
        .map(|(name, d)| {
            let v = match d {
                Ok(d) => serde_json::to_value(d).expect("serializable"),
                Err(e) => json!({"error": e.to_string()}),
            };
            (name, v)
        })
        .collect();
    let lexicon_version = Lexicon::builtin().version();
    write(
        &args.out.join("topics.json"),
        &to_json_file(&json!({"lexicon_version": lexicon_version, "personas": topics})),
    )?;

    let report = json!({
        "manifest_ids": manifest_ids,
        "poi_version": POI_VERSION,
        "poi_alpha": args.alpha,
        "lexicon_version": lexicon_version,
        "poi": poi_rows,
        "pci": pci_rows,
        "groups": groups,
        "topics": topics,
    });
    write(&args.out.join("report.json"), &to_json_file(&report))?;
    emit(
        out,
        json!({
            "out": args.out,
            "poi_rows": poi_rows.len(),
            "pci_rows": pci_rows.len(),
            "groups": groups.len(),
            "personas_with_topics": topics.len(),
        }),
    )
}

fn turn_count_of(net: &RoadNetwork, nodes: &[String], thr: f64) -> Result<usize, CliError> {
    let route = heatroute_core::planning::Route {
        nodes: nodes.to_vec(),
        edges: Vec::new(),
        length_m: 0.0,
        mean_comfort: 1.0,
        combined_cost: 0.0,
        turn_count: 0,
    };
    turn_count(&route, net, thr).map_err(|e| CliError::data(e.to_string()))
}

/// PCI per demographic group: human ratings of respondents in the group
/// against the mean agent score of personas in the same group.
pub fn pci_by_group(
    ratings: &[heatroute_core::evaluation::HumanRating],
    scores: &[ScoreLine],
    personas: &[Persona],
) -> Vec<PciRow> {
    let mut rows = Vec::new();
    for dim in Dimension::ALL {
        let mut groups: Vec<String> = ratings
            .iter()
            .map(|r| dim.group_of(r.gender, r.age, r.income))
            .collect();
        groups.sort();
        groups.dedup();
        for group in groups {
            let human = human_means(ratings, |r| dim.group_of(r.gender, r.age, r.income) == group);
            let members: Vec<&str> = personas
                .iter()
                .filter(|p| dim.group_of(p.gender, p.age, p.income) == group)
                .map(|p| p.name.as_str())
                .collect();
            let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
            for s in scores.iter().filter(|s| members.contains(&s.persona.as_str())) {
                let e = acc.entry(s.result.scene_ref.clone()).or_insert((0.0, 0));
                e.0 += s.result.score.value();
                e.1 += 1;
            }
            let agent: BTreeMap<String, f64> = acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
            let pairs = agent.keys().filter(|k| human.contains_key(*k)).count();
            let (value, note) = match pci(&agent, &human) {
                Ok(r) => (Some(r), String::new()),
                Err(e) => (None, e.to_string()),
            };
            rows.push(PciRow {
                dimension: dim.key().to_string(),
                group,
                pairs,
                pci: value,
                note,
            });
        }
    }
    rows
}

pub fn report_cmd(args: &ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let lines = read_episode_log(&args.run.join(EPISODES_FILE))?;
    let ledger: serde_json::Value = serde_json::from_str(&read(&args.run.join(LEDGER_FILE))?)
        .map_err(|e| CliError::data(format!("{LEDGER_FILE}: {e}")))?;
    let mut per: BTreeMap<String, Vec<&EpisodeResult>> = BTreeMap::new();
    let mut errors = 0;
    for l in &lines {
        match &l.episode.result {
            Some(r) => per.entry(r.persona_name.clone()).or_default().push(r),
            None => errors += 1,
        }
    }
    let mut text = String::new();
    text.push_str(&format!(
        "{:<10} {:>8} {:>8} {:>12} {:>12} {:>8}\n",
        "persona", "episodes", "reached", "mean len m", "mean comfort", "detour"
    ));
    for (name, rs) in &per {
        let n = rs.len() as f64;
        text.push_str(&format!(
            "{:<10} {:>8} {:>8} {:>12.1} {:>12.3} {:>8.3}\n",
            name,
            rs.len(),
            rs.iter().filter(|r| r.reached).count(),
            rs.iter().map(|r| r.route.length_m).sum::<f64>() / n,
            rs.iter().map(|r| r.route.mean_comfort).sum::<f64>() / n,
            rs.iter().map(|r| r.detour_ratio()).sum::<f64>() / n,
        ));
    }
    text.push_str(&format!(
        "accuracy {}  mean cost {}  mean wall time {} s  errors {}\n",
        ledger["accuracy"], ledger["mean_cost"], ledger["mean_wall_time_s"], errors
    ));
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::data(format!("stdout: {e}")))
}

pub fn personas_list_cmd(spec: &str, as_json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let personas = load_persona_set(spec, Path::new("."))?;
    let mut text = String::new();
    if as_json {
        for p in &personas {
            text.push_str(&serde_json::to_string(p).expect("serializable"));
            text.push('\n');
        }
    } else {
        text.push_str(&format!(
            "{:<8} {:<7} {:>4} {:<11} {:<20} {:>6} {:>6}\n",
            "name", "gender", "age", "income", "occupation", "lambda", "explore"
        ));
        for p in &personas {
            text.push_str(&format!(
                "{:<8} {:<7} {:>4} {:<11} {:<20} {:>6.2} {:>6.2}\n",
                p.name,
                p.gender.to_string(),
                p.age,
                p.income.to_string(),
                p.occupation,
                p.heat_sensitivity_lambda,
                p.exploration
            ));
        }
    }
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::data(format!("stdout: {e}")))
}
