use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{initial_handle, regular_handle, RunSummary, SimError, Simulation};
use crate::config::{ConfigError, SimConfig};
use crate::exec::Execution;
use crate::llm::{
    with_budget, BackendKind, ChatBackend, HeuristicBackend, RecordingBackend, RemoteBackend, RemoteConfig,
    RetryPolicy, ScriptedBackend,
};
use crate::persona::{enrich_persona, parse_seeds, PersonaProfile, PersonaSeed};
use crate::retrieval::{ingest_knowledge, TfIdfRetriever};

/// Top-level files every run directory contains.
pub const MANIFEST_FILES: &[&str] = &["config.json", "events.jsonl", "snapshot.json"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub backend: BackendKind,
    pub config: SimConfig,
    pub summary: Option<RunSummary>,
    /// Set when the run aborted; outputs up to that point are kept.
    pub error: Option<String>,
    /// SHA-256 of every output file, keyed by path relative to the run root.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub summary: RunSummary,
    pub manifest: Manifest,
}

/// Backend selected by the config, wrapped in the request budget.
pub fn build_backend(config: &SimConfig) -> Result<Box<dyn ChatBackend>, SimError> {
    let base: Box<dyn ChatBackend> = match config.backend {
        BackendKind::Heuristic => Box::new(HeuristicBackend::new(config.heuristic)),
        BackendKind::Scripted => {
            let path = config
                .fixtures
                .as_ref()
                .ok_or_else(|| ConfigError::Invalid("the scripted backend needs a fixtures path".into()))?;
            Box::new(ScriptedBackend::load(path)?)
        }
        BackendKind::Remote => Box::new(RemoteBackend::new(RemoteConfig::from_env()?)?),
    };
    let policy = RetryPolicy {
        max_attempts: config.max_attempts,
        ..RetryPolicy::default()
    };
    Ok(Box::new(with_budget(base, config.max_inflight, policy)?))
}

fn enrich_all(
    seeds: &[PersonaSeed],
    names: &[String],
    llm: &dyn ChatBackend,
    exec: Execution,
) -> Result<Vec<PersonaProfile>, SimError> {
    if seeds.is_empty() {
        return Err(ConfigError::Invalid("persona seed file has no seeds".into()).into());
    }
    if seeds.len() < names.len() {
        tracing::warn!(
            seeds = seeds.len(),
            agents = names.len(),
            "fewer seeds than agents, reusing seeds"
        );
    }
    exec.map_range(names.len(), |i| enrich_persona(&seeds[i % seeds.len()], &names[i], llm))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(SimError::from)
}

/// Enrich every seed in `path` into `out/<prefix>_NNNN.json`.
pub fn enrich_seed_file(
    path: &Path,
    out: &Path,
    llm: &dyn ChatBackend,
    exec: Execution,
) -> Result<Vec<PathBuf>, SimError> {
    let content = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    let seeds = parse_seeds(&content);
    let names: Vec<String> = (0..seeds.len()).map(|i| format!("persona_{i:04}")).collect();
    let profiles = enrich_all(&seeds, &names, llm, exec)?;
    fs::create_dir_all(out).map_err(|e| SimError::io(out, e))?;
    let mut written = Vec::with_capacity(profiles.len());
    for (name, profile) in names.iter().zip(&profiles) {
        let file = out.join(format!("{name}.json"));
        profile.save(&file)?;
        written.push(file);
    }
    Ok(written)
}

/// Profiles for every agent, initial agents first. A persona store takes
/// precedence over a seed file. Either source is reused cyclically when it
/// holds fewer personas than agents.
pub fn load_personas(
    config: &SimConfig,
    llm: &dyn ChatBackend,
    exec: Execution,
) -> Result<Vec<PersonaProfile>, SimError> {
    let names: Vec<String> = (0..config.n_initial)
        .map(initial_handle)
        .chain((0..config.n_regular).map(regular_handle))
        .collect();
    if let Some(dir) = &config.persona_store {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| SimError::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(ConfigError::Invalid(format!("persona store {} has no .json files", dir.display())).into());
        }
        let store = files.iter().map(PersonaProfile::load).collect::<Result<Vec<_>, _>>()?;
        if store.len() < names.len() {
            tracing::warn!(
                store = store.len(),
                agents = names.len(),
                "fewer stored personas than agents, reusing"
            );
        }
        return Ok((0..names.len()).map(|i| store[i % store.len()].clone()).collect());
    }
    if let Some(path) = &config.persona_seeds {
        let content = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        return enrich_all(&parse_seeds(&content), &names, llm, exec);
    }
    Err(ConfigError::Invalid("either persona_store or persona_seeds must be set".into()).into())
}

fn write_file(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<(), SimError> {
    let file = fs::File::create(path).map_err(|e| SimError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| SimError::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), SimError> {
    write_file(path, |out| {
        serde_json::to_writer_pretty(&mut *out, value)?;
        out.write_all(b"\n")
    })
}

fn sha256_file(path: &Path) -> Result<String, SimError> {
    let bytes = fs::read(path).map_err(|e| SimError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Hash every regular file below `root`, keyed by `/`-separated relative
/// path. The manifest itself is skipped.
fn hash_tree(root: &Path) -> Result<BTreeMap<String, String>, SimError> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(|e| SimError::io(&dir, e))? {
            let path = entry.map_err(|e| SimError::io(&dir, e))?.path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let rel = path.strip_prefix(root).expect("below root");
            let key = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            if key != "manifest.json" {
                out.insert(key, sha256_file(&path)?);
            }
        }
    }
    Ok(out)
}

/// Run the whole experiment and write the run directory under `out`:
/// `config.json`, `personas/`, `plans/`, `events.jsonl`, `snapshot.json`,
/// optionally `completions.jsonl`, and `manifest.json` with content hashes.
/// On failure everything produced so far is still written.
pub fn run_experiment(config: &SimConfig, out: &Path, exec: Execution) -> Result<RunArtifacts, SimError> {
    config.validate()?;
    config.check_paths()?;
    for dir in [out.to_path_buf(), out.join("personas"), out.join("plans")] {
        fs::create_dir_all(&dir).map_err(|e| SimError::io(&dir, e))?;
    }
    write_json(&out.join("config.json"), config)?;

    let base = build_backend(config)?;
    let (plain, recorder) = if config.record_completions {
        (None, Some(RecordingBackend::new(base)))
    } else {
        (Some(base), None)
    };
    let llm: &dyn ChatBackend = match (&plain, &recorder) {
        (Some(b), _) => b.as_ref(),
        (None, Some(r)) => r,
        (None, None) => unreachable!("one backend is always set"),
    };

    let knowledge = match &config.knowledge {
        Some(path) => ingest_knowledge(path)?,
        None => {
            tracing::warn!("no knowledge corpus configured, posts will carry no external knowledge");
            Vec::new()
        }
    };
    let retriever = TfIdfRetriever::with_execution(knowledge, exec);

    let personas = load_personas(config, llm, exec)?;
    let mut sim = Simulation::new(config.clone(), personas, llm, &retriever)?.with_execution(exec);
    for agent in &sim.agents {
        agent
            .profile
            .save(out.join("personas").join(format!("{}.json", agent.handle)))?;
    }

    let result = sim.run();
    tracing::info!(
        events = sim.log.len(),
        posts = sim.platform.posts().len(),
        "run finished"
    );

    write_file(&out.join("events.jsonl"), |w| sim.log.write_jsonl(w))?;
    write_json(&out.join("snapshot.json"), &sim.platform.snapshot())?;
    for plan in &sim.plans {
        write_json(&out.join("plans").join(format!("{}.json", plan.handle)), plan)?;
    }
    if let Some(r) = &recorder {
        write_file(&out.join("completions.jsonl"), |w| r.write_jsonl(w))?;
    }

    let manifest = Manifest {
        seed: config.seed,
        backend: config.backend,
        config: config.clone(),
        summary: result.as_ref().ok().copied(),
        error: result.as_ref().err().map(ToString::to_string),
        files: hash_tree(out)?,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    let summary = result?;
    Ok(RunArtifacts {
        dir: out.to_path_buf(),
        summary,
        manifest,
    })
}
