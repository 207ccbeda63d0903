//! Run configuration file and output manifests.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use kgc_core::adapter::FusionTrainConfig;
use kgc_core::gateway::EndpointConfig;
use kgc_core::kg::{CorruptionStrategy, KnowledgeGraph, Split};
use kgc_core::kge::TrainConfig;
use kgc_core::ontology::{parse_ontology, Ontology};
use kgc_core::util::hash::{sha256, sha256_file, to_hex};

/// One JSON file per run: dataset paths plus optional stage configurations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub train: PathBuf,
    #[serde(default)]
    pub valid: Option<PathBuf>,
    #[serde(default)]
    pub test: Option<PathBuf>,
    #[serde(default)]
    pub descriptions: Option<PathBuf>,
    #[serde(default)]
    pub ontology: Option<PathBuf>,
    #[serde(default)]
    pub templates: Option<PathBuf>,
    #[serde(default)]
    pub kge: Option<TrainConfig>,
    #[serde(default)]
    pub fusion: Option<FusionTrainConfig>,
    #[serde(default)]
    pub endpoint: Option<EndpointConfig>,
    #[serde(default = "default_ratio")]
    pub negative_ratio: f64,
    #[serde(default = "default_strategy")]
    pub negative_strategy: CorruptionStrategy,
    #[serde(default = "default_seed")]
    pub negative_seed: u64,
    #[serde(default = "default_round_limit")]
    pub round_limit: usize,
    #[serde(default)]
    pub instruction: Option<String>,
    #[serde(default)]
    pub max_axioms: Option<usize>,
}

fn default_ratio() -> f64 {
    1.0
}
fn default_strategy() -> CorruptionStrategy {
    CorruptionStrategy::Both
}
fn default_seed() -> u64 {
    7
}
fn default_round_limit() -> usize {
    10
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Loads the graph (and descriptions) named by this config.
    pub fn load_graph(&self) -> Result<KnowledgeGraph> {
        let mut graph = KnowledgeGraph::new();
        let report = graph.load_triples(&self.train, Split::Train)?;
        if report.deduplicated > 0 {
            eprintln!(
                "note: {} duplicate train lines collapsed",
                report.deduplicated
            );
        }
        if let Some(valid) = &self.valid {
            graph.load_triples(valid, Split::Valid)?;
        }
        if let Some(test) = &self.test {
            graph.load_triples(test, Split::Test)?;
        }
        if let Some(desc) = &self.descriptions {
            let report = graph.load_descriptions(desc)?;
            if !report.orphans.is_empty() {
                eprintln!(
                    "note: {} description id(s) not present in the graph",
                    report.orphans.len()
                );
            }
        }
        Ok(graph)
    }

    /// Loads the ontology named by this config, or an empty one.
    pub fn load_ontology(&self, graph: &KnowledgeGraph) -> Result<Ontology> {
        match &self.ontology {
            Some(path) => {
                let (ontology, report) = parse_ontology(path, graph)?;
                if !report.skipped.is_empty() {
                    eprintln!(
                        "note: {} ontology line(s) skipped (first: line {}: {})",
                        report.skipped.len(),
                        report.skipped[0].line,
                        report.skipped[0].reason
                    );
                }
                Ok(ontology)
            }
            None => Ok(Ontology::new()),
        }
    }

    pub fn input_paths(&self) -> Vec<PathBuf> {
        let mut paths = vec![self.train.clone()];
        for p in [&self.valid, &self.test, &self.descriptions, &self.ontology, &self.templates]
            .into_iter()
            .flatten()
        {
            paths.push(p.clone());
        }
        paths
    }
}

/// Reproducibility record written next to every output file.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config_sha256: Option<String>,
    pub inputs: Vec<ManifestInput>,
    pub outputs: Vec<PathBuf>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Serialize)]
pub struct ManifestInput {
    pub path: PathBuf,
    pub sha256: String,
}

/// Writes `<primary output>.manifest.json`.
pub fn write_manifest(
    command: &str,
    config_path: Option<&Path>,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
    seeds: &[u64],
) -> Result<()> {
    let Some(primary) = outputs.first() else {
        return Ok(());
    };
    let config_sha256 = match config_path {
        Some(p) => Some(to_hex(&sha256_file(p)?)),
        None => None,
    };
    let mut manifest_inputs = Vec::new();
    for path in inputs {
        let digest = sha256_file(path).unwrap_or_else(|_| sha256(b"missing"));
        manifest_inputs.push(ManifestInput {
            path: path.clone(),
            sha256: to_hex(&digest),
        });
    }
    let manifest = Manifest {
        command: command.to_owned(),
        argv: std::env::args().collect(),
        config_sha256,
        inputs: manifest_inputs,
        outputs: outputs.to_vec(),
        seeds: seeds.to_vec(),
    };
    let path = PathBuf::from(format!("{}.manifest.json", primary.display()));
    std::fs::write(&path, serde_json::to_vec_pretty(&manifest)?)?;
    Ok(())
}
