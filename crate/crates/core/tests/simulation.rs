//! In-process runs on the small heuristic configuration.

use std::path::Path;

use tootsim::agent::ShortTermMemory;
use tootsim::config::{load_config, SimConfig};
use tootsim::events::EventKind;
use tootsim::exec::Execution;
use tootsim::llm::{BackendKind, ScriptedBackend};
use tootsim::retrieval::{ingest_knowledge, TfIdfRetriever};
use tootsim::sim::{build_backend, load_personas, run_experiment, SimError, Simulation};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");

fn config(overrides: &[(&str, serde_json::Value)]) -> SimConfig {
    let overrides: Vec<(String, serde_json::Value)> =
        overrides.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    load_config(Path::new(FIXTURES).join("desk_heuristic.json"), &overrides).unwrap()
}

fn run(config: &SimConfig, exec: Execution, check: impl FnOnce(&Simulation<'_>)) {
    let llm = build_backend(config).unwrap();
    let retriever = TfIdfRetriever::with_execution(ingest_knowledge(config.knowledge.as_ref().unwrap()).unwrap(), exec);
    let personas = load_personas(config, llm.as_ref(), exec).unwrap();
    let mut sim = Simulation::new(config.clone(), personas, llm.as_ref(), &retriever)
        .unwrap()
        .with_execution(exec);
    sim.run().unwrap();
    check(&sim);
}

#[test]
fn memory_replays_from_the_trace() {
    run(&config(&[]), Execution::default(), |sim| {
        let mut browsed = 0;
        for agent in &sim.agents {
            let replayed = ShortTermMemory::replay(&sim.log, &agent.handle);
            assert_eq!(replayed, agent.memory, "{}", agent.handle);
            browsed += agent.memory.records.len();
        }
        assert!(browsed > 0);
    });
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let cfg = config(&[("stage_hours", 24.into())]);
    let mut logs = Vec::new();
    for exec in [Execution::Sequential, Execution::Parallel] {
        run(&cfg, exec, |sim| logs.push((sim.log.clone(), sim.platform.snapshot())));
    }
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn shuffled_order_is_seeded() {
    let cfg = config(&[("shuffle_agents", true.into()), ("stage_hours", 24.into())]);
    let mut logs = Vec::new();
    for _ in 0..2 {
        run(&cfg, Execution::default(), |sim| logs.push(sim.log.clone()));
    }
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn seed_changes_the_trajectory() {
    let mut logs = Vec::new();
    for seed in [1u64, 2] {
        run(
            &config(&[("seed", seed.into()), ("stage_hours", 24.into())]),
            Execution::default(),
            |sim| logs.push(sim.plans.iter().map(|p| p.activity).collect::<Vec<_>>()),
        );
    }
    assert_ne!(logs[0], logs[1]);
}

#[test]
fn initial_agents_only_seed() {
    run(&config(&[]), Execution::default(), |sim| {
        let cfg = sim.config();
        for e in sim.log.iter().filter(|e| e.agent.starts_with("init_")) {
            assert_eq!((e.turn, e.kind), (0, EventKind::Post), "{e:?}");
        }
        let seeds = sim
            .log
            .iter()
            .filter(|e| e.turn == 0 && e.kind == EventKind::Post)
            .count();
        assert_eq!(seeds, cfg.n_initial * cfg.posts_per_initial);
        assert_eq!(sim.plans.len(), cfg.n_regular);
    });
}

#[test]
fn missing_fixture_aborts_seeding_with_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("empty.jsonl");
    std::fs::write(&table, "").unwrap();
    let mut cfg = config(&[]);
    cfg.backend = BackendKind::Scripted;
    cfg.fixtures = Some(table);
    let out = dir.path().join("run");
    let err = run_experiment(&cfg, &out, Execution::default()).unwrap_err();
    // enrichment is the first completion a run asks for
    assert!(matches!(err, SimError::Persona(_)), "{err}");
    assert!(ScriptedBackend::load(dir.path().join("empty.jsonl"))
        .unwrap()
        .is_empty());
}

#[test]
fn aborted_run_still_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    // Personas come from the real table, seeding posts do not.
    let full = std::fs::read_to_string(Path::new(FIXTURES).join("desk_completions.jsonl")).unwrap();
    let table = dir.path().join("no_posts.jsonl");
    let kept: String = full
        .lines()
        .filter(|l| !l.contains(r#""tag":"post""#))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&table, kept).unwrap();
    let mut cfg = config(&[]);
    cfg.backend = BackendKind::Scripted;
    cfg.fixtures = Some(table);
    let out = dir.path().join("run");
    let err = run_experiment(&cfg, &out, Execution::default()).unwrap_err();
    assert!(
        matches!(err, SimError::Seeding { ref handle, .. } if handle == "init_000"),
        "{err}"
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["error"].as_str().unwrap().contains("init_000"));
    assert!(manifest["files"]["events.jsonl"].is_string());
}
