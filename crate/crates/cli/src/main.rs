//! Command-line pipelines for the knowledge-graph completion toolkit.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or validation
//! errors. Every command that writes an output file also writes a
//! `<output>.manifest.json` recording the config hash, seeds, and input
//! fingerprints.

mod commands;
mod config;
mod records;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kgc_core::eval::Backend;
use kgc_core::extractor::ReviewDefault;
use kgc_core::kg::Split;

#[derive(Parser)]
#[command(
    name = "kgc",
    about = "Knowledge-graph completion pipelines: embeddings, ontology reasoning, prompt verbalization, fused classification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the datasets named in a config file.
    Ingest {
        #[arg(long)]
        config: PathBuf,
    },
    /// Mine candidate axioms from the train split.
    MineOntology {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Coverage threshold for domain/range mining, in (0, 1].
        #[arg(long, default_value_t = 0.8)]
        coverage: f64,
        /// Minimum path-pair support for composition mining.
        #[arg(long, default_value_t = 3)]
        min_support: u64,
        /// Minimum confidence for composition mining.
        #[arg(long, default_value_t = 0.8)]
        min_confidence: f64,
        /// Jaccard overlap declaring two relations equivalent.
        #[arg(long, default_value_t = 0.9)]
        equivalence_overlap: f64,
        /// Jaccard overlap at or below which disjointness is considered.
        #[arg(long, default_value_t = 0.0)]
        disjoint_overlap: f64,
        /// Minimum pair count per relation for overlap mining.
        #[arg(long, default_value_t = 5)]
        overlap_min_support: u64,
    },
    /// Merge reviewed candidates into a validated ontology file.
    ReviewMerge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
        /// Review decisions file (`accept|reject<TAB>axiom<TAB>note`).
        #[arg(long)]
        decisions: Option<PathBuf>,
        /// Verdict for candidates without an explicit decision.
        #[arg(long, default_value = "accept")]
        default: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Materialize composition-derived triples with provenance.
    Materialize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pretrain structural embeddings on the train split.
    TrainKge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tune per-relation decision thresholds on the valid split.
    TuneThresholds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        emb: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the prefix adapter and fusion decoder.
    TrainFusion {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        emb: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Zero the symbolic-verdict features (ablation).
        #[arg(long)]
        no_ontology: bool,
        /// Replace adapter prefixes with seeded random vectors (ablation).
        #[arg(long)]
        no_structure: bool,
    },
    /// Dump prompt bundles for a split as JSON lines.
    Verbalize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Also include generated negatives.
        #[arg(long)]
        with_negatives: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify the test split with a chosen backend.
    Classify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_backend)]
        backend: Backend,
        #[arg(long)]
        emb: Option<PathBuf>,
        #[arg(long)]
        thresholds: Option<PathBuf>,
        #[arg(long)]
        adapter: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the gold labels next to the predictions.
        #[arg(long)]
        gold_out: Option<PathBuf>,
        /// Fused backend: also write explanation records as JSON lines.
        #[arg(long)]
        explanations: Option<PathBuf>,
        #[arg(long)]
        no_ontology: bool,
        #[arg(long)]
        no_structure: bool,
    },
    /// Score predictions against gold labels.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Also write the metrics as JSON.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run an ablation spec over seeds; one report row per fraction.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        /// Comma-separated seed list.
        #[arg(long, default_value = "1,2,3,4,5", value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    match s {
        "kge" => Ok(Backend::Kge),
        "fused" => Ok(Backend::Fused),
        "llm" => Ok(Backend::Llm),
        other => Err(format!("unknown backend `{other}` (expected kge|fused|llm)")),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest { config } => commands::ingest(&config),
        Command::MineOntology {
            config,
            out,
            coverage,
            min_support,
            min_confidence,
            equivalence_overlap,
            disjoint_overlap,
            overlap_min_support,
        } => commands::mine_ontology(
            &config,
            &out,
            coverage,
            min_support,
            min_confidence,
            equivalence_overlap,
            disjoint_overlap,
            overlap_min_support,
        ),
        Command::ReviewMerge {
            config,
            candidates,
            decisions,
            default,
            out,
        } => {
            let default: ReviewDefault = default.parse()?;
            commands::review_merge_cmd(&config, &candidates, decisions.as_deref(), default, &out)
        }
        Command::Materialize { config, out } => commands::materialize(&config, &out),
        Command::TrainKge { config, out } => commands::train_kge(&config, &out),
        Command::TuneThresholds { config, emb, out } => {
            commands::tune_thresholds_cmd(&config, &emb, &out)
        }
        Command::TrainFusion {
            config,
            emb,
            out,
            no_ontology,
            no_structure,
        } => commands::train_fusion_cmd(&config, &emb, &out, no_ontology, no_structure),
        Command::Verbalize {
            config,
            split,
            with_negatives,
            out,
        } => {
            let split: Split = split.parse()?;
            commands::verbalize(&config, split, with_negatives, &out)
        }
        Command::Classify {
            config,
            backend,
            emb,
            thresholds,
            adapter,
            out,
            gold_out,
            explanations,
            no_ontology,
            no_structure,
        } => commands::classify(commands::ClassifyArgs {
            config_path: &config,
            backend,
            emb: emb.as_deref(),
            thresholds: thresholds.as_deref(),
            adapter: adapter.as_deref(),
            out: &out,
            gold_out: gold_out.as_deref(),
            explanations: explanations.as_deref(),
            no_ontology,
            no_structure,
        }),
        Command::Eval { pred, gold, csv } => commands::eval_cmd(&pred, &gold, csv.as_deref()),
        Command::Ablate {
            config,
            spec,
            seeds,
            out,
        } => commands::ablate(&config, &spec, &seeds, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes, not usage errors.
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
