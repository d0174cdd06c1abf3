//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{all_simple_paths, random_graph};
use heatroute_cli::args::{BackendArgs, SimulateArgs};
use heatroute_cli::commands::{simulate_cmd, EPISODES_FILE};
use heatroute_core::evaluation::{aggregate_topics, pci, poi, PoiConfig, Topic};
use heatroute_core::memory::{MemoryStore, TrajectoryRecord};
use heatroute_core::perception::{MockBackend, Perceiver, PriceTable, SceneTable};
use heatroute_core::personas::{builtin_personas, Persona};
use heatroute_core::planning::{dijkstra_idx, edge_cost, k_shortest_idx, ComfortCost, LengthCost, PlanConfig};
use heatroute_core::road_network::{serialize_network, RoadNetwork};
use heatroute_core::simulation::{run_batch, run_episode, EpisodeConfig, Mode, OdPair};
use heatroute_core::synth::{generate_grid, grid_node_id, GridSpec, ShadePattern};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn mock(scenes: &SceneTable) -> Perceiver {
    Perceiver::new(Arc::new(MockBackend::new(scenes.clone())))
}

fn grid(pattern: ShadePattern, seed: u64) -> (GridSpec, RoadNetwork, SceneTable) {
    let spec = GridSpec::new(6, 6, 100.0, pattern).with_seed(seed);
    let (net, scenes) = generate_grid(&spec).unwrap();
    (spec, net, scenes)
}

fn shade_fixture() -> (RoadNetwork, SceneTable, OdPair) {
    let (spec, net, scenes) = grid(ShadePattern::ShadedPerimeter, 0);
    let od = OdPair::new(grid_node_id(&spec, 0, 1), grid_node_id(&spec, 5, 1));
    (net, scenes, od)
}

/// Every fixture with the OD pairs exercised on it.
fn fixtures() -> Vec<(String, RoadNetwork, SceneTable, Vec<OdPair>)> {
    let mut out = Vec::new();
    for (name, pattern, seed) in [
        ("shaded-perimeter", ShadePattern::ShadedPerimeter, 0),
        ("uniform", ShadePattern::Uniform, 0),
        ("random", ShadePattern::Random, 7),
    ] {
        let (spec, net, scenes) = grid(pattern, seed);
        let id = |r, c| grid_node_id(&spec, r, c);
        let ods = vec![
            OdPair::new(id(0, 1), id(5, 1)),
            OdPair::new(id(0, 0), id(5, 5)),
            OdPair::new(id(2, 3), id(4, 0)),
        ];
        out.push((name.to_string(), net, scenes, ods));
    }
    out
}

fn c1_shortest_path_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut queries = 0;
    for g in 0..50u64 {
        let n = rng.gen_range(3..=12);
        let (net, comfort) = random_graph(1000 + g, n, rng.gen_range(0.1..0.4));
        let lambda = rng.gen_range(0.0..2.0);
        let cost = ComfortCost::new(&net, &comfort, lambda);
        let oracle_cost = |e: usize, _from: usize| edge_cost(net.edge(e).length_m, comfort[e], lambda);
        let ods: Vec<(usize, usize)> = (0..4).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
        for (s, d) in ods {
            if s == d {
                continue;
            }
            let all = all_simple_paths(&net, s, d, &oracle_cost);
            let best = dijkstra_idx(&net, s, d, &cost).map_err(|e| e.to_string())?;
            ensure(best.nodes == all[0].0 && best.cost == all[0].1, || {
                format!("graph {g} {s}->{d}: dijkstra {:?} vs {:?}", best.nodes, all[0].0)
            })?;
            let ks = k_shortest_idx(&net, s, d, 5, &cost).map_err(|e| e.to_string())?;
            ensure(ks.len() == all.len().min(5), || {
                format!("graph {g} {s}->{d}: {} paths", ks.len())
            })?;
            for (i, (p, (nodes, c))) in ks.iter().zip(&all).enumerate() {
                ensure(&p.nodes == nodes && p.cost == *c, || {
                    format!("graph {g} {s}->{d} rank {i}: {:?} vs {:?}", p.nodes, nodes)
                })?;
            }
            queries += 1;
        }
    }
    let elapsed = t0.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("50 graphs, {queries} OD pairs, exact match in {elapsed:.2?}"))
}

fn c2_lambda_degeneration() -> Outcome {
    let mut nets: Vec<(RoadNetwork, Vec<f64>)> = (0..50).map(|g| random_graph(1000 + g, 12, 0.3)).collect();
    for (_, net, _, _) in fixtures() {
        let comfort = (0..net.edge_count()).map(|e| (e as f64 * 0.61).fract()).collect();
        nets.push((net, comfort));
    }
    let mut pairs = 0;
    for (gi, (net, comfort)) in nets.iter().enumerate() {
        let zero = ComfortCost::new(net, comfort, 0.0);
        let plain = LengthCost(net);
        for s in 0..net.node_count() {
            for d in 0..net.node_count() {
                if s == d {
                    continue;
                }
                let a = dijkstra_idx(net, s, d, &zero).map_err(|e| e.to_string())?;
                let b = dijkstra_idx(net, s, d, &plain).map_err(|e| e.to_string())?;
                let top = &k_shortest_idx(net, s, d, 3, &zero).map_err(|e| e.to_string())?[0];
                ensure(a.nodes == b.nodes && top.nodes == b.nodes, || {
                    format!("network {gi} {s}->{d}")
                })?;
                pairs += 1;
            }
        }
    }
    Ok(format!("{} networks, {pairs} OD pairs identical", nets.len()))
}

fn by_lambda() -> Vec<Persona> {
    let mut ps = builtin_personas();
    ps.sort_by(|a, b| a.heat_sensitivity_lambda.total_cmp(&b.heat_sensitivity_lambda));
    ps
}

fn c3_shade_seeking() -> Outcome {
    let (net, scenes, od) = shade_fixture();
    let cfg = EpisodeConfig {
        seed: 42,
        ..EpisodeConfig::default()
    };
    let run = || -> Result<Vec<(Persona, f64, f64)>, String> {
        by_lambda()
            .into_iter()
            .map(|p| {
                let r = run_episode(
                    &net,
                    &p,
                    &od.src,
                    &od.dst,
                    &cfg,
                    &mock(&scenes),
                    &MemoryStore::in_memory(),
                )
                .map_err(|e| e.to_string())?;
                Ok((p, r.route.length_m, r.route.mean_comfort))
            })
            .collect()
    };
    let a = run()?;
    let b = run()?;
    ensure(a.iter().zip(&b).all(|(x, y)| x.1 == y.1 && x.2 == y.2), || {
        "not deterministic".into()
    })?;
    let get = |name: &str| a.iter().find(|x| x.0.name == name).unwrap();
    let (emma, ryan) = (get("Emma"), get("Ryan"));
    ensure(emma.2 > ryan.2, || {
        format!("Emma comfort {} vs Ryan {}", emma.2, ryan.2)
    })?;
    // personas sharing a λ form one group; lengths may not drop between groups
    let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
    for (p, len, _) in &a {
        match groups.last_mut() {
            Some((l, v)) if *l == p.heat_sensitivity_lambda => v.push(*len),
            _ => groups.push((p.heat_sensitivity_lambda, vec![*len])),
        }
    }
    for w in groups.windows(2) {
        let hi = w[0].1.iter().cloned().fold(f64::MIN, f64::max);
        let lo = w[1].1.iter().cloned().fold(f64::MAX, f64::min);
        ensure(hi <= lo, || format!("length drops from λ={} to λ={}", w[0].0, w[1].0))?;
    }
    let lens: Vec<String> = a.iter().map(|x| format!("{}={:.0}", x.0.name, x.1)).collect();
    Ok(format!("Emma {:.3} > Ryan {:.3}; {}", emma.2, ryan.2, lens.join(" ")))
}

fn c4_sun_dominance() -> Outcome {
    let (net, scenes, od) = shade_fixture();
    let cfg = EpisodeConfig {
        seed: 42,
        ..EpisodeConfig::default()
    };
    let out = run_batch(
        &net,
        &builtin_personas(),
        &[od],
        &cfg,
        10,
        0,
        &mock(&scenes),
        &MemoryStore::in_memory(),
    )
    .map_err(|e| e.to_string())?;
    let mut by: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for r in out.results() {
        by.entry(r.persona_name.clone())
            .or_default()
            .extend(r.rationales.iter().map(String::as_str));
    }
    let topics = aggregate_topics(by);
    ensure(topics.len() == 8, || format!("{} personas", topics.len()))?;
    for (name, d) in &topics {
        let d = d.as_ref().map_err(|e| e.to_string())?;
        ensure(d.argmax() == Some(Topic::SunExposureShading), || {
            format!("{name}: {:?}", d.argmax())
        })?;
    }
    Ok("sun exposure & shading is the argmax for all 8 personas".into())
}

fn ids(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn c5_metrics() -> Outcome {
    let (_, net, _) = grid(ShadePattern::Uniform, 0);
    let cfg = PoiConfig::default();
    let reference = ids(&["r0c0", "r0c1", "r0c2", "r1c2", "r1c3", "r2c3"]);
    let partial = ids(&["r0c0", "r0c1", "r0c2", "r1c2", "r2c2", "r2c3"]);
    let disjoint = ids(&["r0c0", "r1c0", "r2c0", "r2c1", "r2c2", "r2c3"]);
    let p = |a: &[String], b: &[String]| poi(&net, a, b, &cfg).map_err(|e| e.to_string());
    let same = p(&reference, &reference)?;
    let none = p(&disjoint, &reference)?;
    let worked = p(&partial, &reference)?;
    ensure(same == 1.0, || format!("identical {same}"))?;
    ensure(none == 0.0, || format!("disjoint {none}"))?;
    ensure((worked - 0.5079).abs() <= 1e-4, || format!("partial {worked}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let human: BTreeMap<String, f64> = (0..42)
        .map(|i| (format!("sc{i:02}"), rng.gen_range(1.0..=5.0)))
        .collect();
    let agent: BTreeMap<String, f64> = human
        .iter()
        .map(|(k, v)| {
            (
                k.clone(),
                ((v - 1.0) / 4.0 * 0.6 + rng.gen_range(0.0..0.4)).clamp(0.0, 1.0),
            )
        })
        .collect();
    let r = pci(&agent, &human).map_err(|e| e.to_string())?;
    let n = 42.0;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, x) in &agent {
        let y = (human[k] - 1.0) / 4.0;
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let oracle = (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
    ensure((r - oracle).abs() <= 1e-12, || format!("PCI {r} vs {oracle}"))?;
    Ok(format!(
        "POI 1 / 0 / {worked:.4}; PCI {r:.6} |Δ| = {:.1e}",
        (r - oracle).abs()
    ))
}

/// Reachable from `start` without entering `avoid`.
fn reaches(net: &RoadNetwork, start: usize, target: usize, avoid: usize) -> bool {
    let mut seen = HashSet::from([start, avoid]);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        if u == target {
            return true;
        }
        for &(v, _) in net.neighbors(u) {
            if seen.insert(v) {
                queue.push_back(v);
            }
        }
    }
    false
}

/// A directed edge is repeated only when no untraversed way out of the
/// current node still leads to the destination.
fn anti_livelock(net: &RoadNetwork, nodes: &[String], dst: usize) -> Result<(), String> {
    let idx = net.resolve_path(nodes).map_err(|e| e.to_string())?;
    let mut traversed = HashSet::new();
    for w in idx.windows(2) {
        let (u, v) = (w[0], w[1]);
        let e = net.edge_between(u, v).ok_or("route leaves the network")?;
        if traversed.contains(&(e, u)) {
            for &(x, e2) in net.neighbors(u) {
                if !traversed.contains(&(e2, u)) && reaches(net, x, dst, u) {
                    return Err(format!("repeated {u} -> {v} while an alternative existed"));
                }
            }
        }
        traversed.insert((e, u));
    }
    Ok(())
}

fn c6_reach_accuracy() -> Outcome {
    let mut episodes = 0;
    for (name, net, scenes, ods) in fixtures() {
        let cfg = EpisodeConfig {
            mode: Mode::Stepwise,
            seed: 99,
            ..EpisodeConfig::default()
        };
        let out = run_batch(
            &net,
            &builtin_personas(),
            &ods,
            &cfg,
            10,
            0,
            &mock(&scenes),
            &MemoryStore::in_memory(),
        )
        .map_err(|e| e.to_string())?;
        ensure(out.ledger.errors == 0, || {
            format!("{name}: {} errors", out.ledger.errors)
        })?;
        ensure(out.ledger.accuracy == 1.0, || {
            format!("{name}: accuracy {}", out.ledger.accuracy)
        })?;
        for r in out.results() {
            ensure(r.steps_used <= r.max_steps, || format!("{name}: step budget exceeded"))?;
            let dst = net.index_of(&r.destination).unwrap();
            anti_livelock(&net, &r.route.nodes, dst).map_err(|e| format!("{name}: {e}"))?;
            episodes += 1;
        }
    }
    Ok(format!(
        "{episodes} stepwise episodes on 3 fixtures, accuracy 1.0, no livelock"
    ))
}

fn write_fixture(dir: &Path) {
    let (net, scenes, od) = shade_fixture();
    std::fs::write(dir.join("network.json"), serialize_network(&net)).unwrap();
    std::fs::write(dir.join("scenes.json"), serde_json::to_string(&scenes).unwrap()).unwrap();
    let scenario = serde_json::json!({
        "network": "network.json",
        "scenes": "scenes.json",
        "od_pairs": [{"src": od.src, "dst": od.dst}],
        "mode": "stepwise",
        "repetitions": 10,
        "seed": 7,
    });
    std::fs::write(dir.join("scenario.json"), scenario.to_string()).unwrap();
}

fn simulate_args(dir: &Path, out: &str, jobs: usize) -> SimulateArgs {
    SimulateArgs {
        scenario: dir.join("scenario.json"),
        out: dir.join(out),
        seed: None,
        mode: None,
        k: None,
        repetitions: None,
        max_steps: None,
        lambda: None,
        jobs: Some(jobs),
        memory: None,
        backend: BackendArgs::default(),
    }
}

fn c7_reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_fixture(dir.path());
    let mut sink = Vec::new();
    simulate_cmd(&simulate_args(dir.path(), "a", 4), &mut sink).map_err(|e| e.to_string())?;
    simulate_cmd(&simulate_args(dir.path(), "b", 1), &mut sink).map_err(|e| e.to_string())?;
    let a = std::fs::read(dir.path().join("a").join(EPISODES_FILE)).unwrap();
    let b = std::fs::read(dir.path().join("b").join(EPISODES_FILE)).unwrap();
    ensure(!a.is_empty() && a == b, || "episode logs differ".into())?;
    Ok(format!("two runs, {} identical bytes", a.len()))
}

fn c8_memory_convergence() -> Outcome {
    let (net, scenes, od) = shade_fixture();
    let seed_store = MemoryStore::in_memory();
    let bob = builtin_personas().into_iter().find(|p| p.name == "Bob").unwrap();
    run_episode(
        &net,
        &bob,
        &od.src,
        &od.dst,
        &EpisodeConfig::default(),
        &mock(&scenes),
        &seed_store,
    )
    .map_err(|e| e.to_string())?;
    let template: TrajectoryRecord = seed_store.snapshot().remove(0);
    let words = [
        (Topic::UrbanStructure, "buildings"),
        (Topic::MicroclimateConditions, "humid"),
        (Topic::SunExposureShading, "shade"),
        (Topic::SurfaceMaterials, "asphalt"),
        (Topic::TrafficVehicles, "traffic"),
        (Topic::GreenInfrastructure, "trees"),
        (Topic::ComfortPerception, "tiring"),
    ];
    let mut lowest = f64::MAX;
    for (topic, word) in words {
        let store = MemoryStore::in_memory();
        for _ in 0..50 {
            let rec = TrajectoryRecord {
                rationale: format!("So much {word} here."),
                ..template.clone()
            };
            store.record(rec).map_err(|e| e.to_string())?;
        }
        let s = store.summarize("Bob");
        let w = s.weight(topic);
        let total: f64 = s.factor_weights.values().sum();
        ensure(w > 0.95, || format!("{topic:?} weight {w}"))?;
        ensure((total - 1.0).abs() <= 1e-9, || {
            format!("{topic:?} weights sum to {total}")
        })?;
        lowest = lowest.min(w);
    }
    Ok(format!("all 7 topics converge, lowest weight {lowest:.6}"))
}

fn c9_ledger_exactness() -> Outcome {
    let (net, scenes, od) = shade_fixture();
    let price = PriceTable {
        prompt_per_1k: 0.15,
        completion_per_1k: 0.6,
    };
    let cfg = EpisodeConfig {
        price,
        ..EpisodeConfig::default()
    };
    let perceiver = mock(&scenes);
    let first = run_batch(
        &net,
        &builtin_personas(),
        std::slice::from_ref(&od),
        &cfg,
        3,
        0,
        &perceiver,
        &MemoryStore::in_memory(),
    )
    .map_err(|e| e.to_string())?;
    let (p, c) = first.results().fold((0u64, 0u64), |acc, r| {
        (acc.0 + r.calls.prompt_tokens, acc.1 + r.calls.completion_tokens)
    });
    let expected = p as f64 * 0.15 / 1000.0 + c as f64 * 0.6 / 1000.0;
    ensure(p > 0 && first.ledger.total_cost == expected, || {
        format!("reported {} vs {expected}", first.ledger.total_cost)
    })?;
    let again = run_batch(
        &net,
        &builtin_personas(),
        &[od],
        &cfg,
        3,
        0,
        &perceiver,
        &MemoryStore::in_memory(),
    )
    .map_err(|e| e.to_string())?;
    ensure(again.ledger.total_cost == 0.0 && again.ledger.calls.calls > 0, || {
        format!("cached rerun cost {}", again.ledger.total_cost)
    })?;
    Ok(format!(
        "{p} prompt + {c} completion tokens = {expected}; cached rerun 0"
    ))
}

fn c10_performance() -> Outcome {
    let spec = GridSpec::new(317, 317, 50.0, ShadePattern::Uniform);
    let (net, _) = generate_grid(&spec).map_err(|e| e.to_string())?;
    let (s, d) = (
        net.index_of(&grid_node_id(&spec, 0, 0)).unwrap(),
        net.index_of(&grid_node_id(&spec, 316, 316)).unwrap(),
    );
    let t0 = Instant::now();
    let path = dijkstra_idx(&net, s, d, &LengthCost(&net)).map_err(|e| e.to_string())?;
    let dij = t0.elapsed();
    ensure(path.hops() == 632, || format!("{} hops", path.hops()))?;
    let big = net.node_count();
    ensure(big >= 100_000, || format!("{big} nodes"))?;
    ensure(dij < Duration::from_secs(1), || {
        format!("dijkstra on {big} nodes took {dij:?}")
    })?;

    let (net, scenes, od) = shade_fixture();
    let mut worst = Duration::ZERO;
    for mode in [Mode::WholeRoute, Mode::Stepwise] {
        let cfg = EpisodeConfig {
            mode,
            plan: PlanConfig::default(),
            ..EpisodeConfig::default()
        };
        let t0 = Instant::now();
        let out = run_batch(
            &net,
            &builtin_personas(),
            std::slice::from_ref(&od),
            &cfg,
            10,
            0,
            &mock(&scenes),
            &MemoryStore::in_memory(),
        )
        .map_err(|e| e.to_string())?;
        let took = t0.elapsed();
        ensure(out.ledger.episodes == 80, || {
            format!("{} episodes", out.ledger.episodes)
        })?;
        ensure(took < Duration::from_secs(5), || format!("{mode} batch took {took:?}"))?;
        worst = worst.max(took);
    }
    Ok(format!("{big}-node Dijkstra {dij:.2?}; 80-episode batch {worst:.2?}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("shortest-path oracle", c1_shortest_path_oracle),
        ("lambda degeneration", c2_lambda_degeneration),
        ("shade seeking", c3_shade_seeking),
        ("sun exposure dominance", c4_sun_dominance),
        ("metric correctness", c5_metrics),
        ("reach accuracy", c6_reach_accuracy),
        ("reproducibility", c7_reproducibility),
        ("memory convergence", c8_memory_convergence),
        ("cost ledger exactness", c9_ledger_exactness),
        ("desk-scale performance", c10_performance),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
