//! Implementations of the pipeline subcommands.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use kgc_core::adapter::{
    classify_fused, read_adapter, train_fusion, write_adapter, FeaturePolicy,
};
use kgc_core::eval::{
    evaluate, run_ablation, AblationSpec, Backend, LlmResources,
};
use kgc_core::extractor::{
    mine_compositions, mine_domain_range, mine_equivalence_disjointness, read_candidates,
    read_review_decisions, review_merge, write_candidates, CompositionMiningConfig,
    OverlapMiningConfig, ReviewDefault,
};
use kgc_core::gateway::{LlmClient, LlmLabel};
use kgc_core::kg::{labeled_split, KnowledgeGraph, LabeledTriple, Split};
use kgc_core::kge::{
    classify_kge, read_checkpoint, train, tune_thresholds, write_checkpoint, ThresholdTable,
};
use kgc_core::ontology::{serialize_ontology, subclass_closure, axiom_line};
use kgc_core::reasoner::{materialize_compositions, Reasoner, ReasonerConfig};
use kgc_core::verbalizer::{
    prompt_for_triple, PromptOptions, TemplateDictionary, DEFAULT_INSTRUCTION,
};

use crate::config::{write_manifest, RunConfig};
use crate::records::{aligned_labels, read_records, write_records, TripleRecord};

fn load_templates(config: &RunConfig) -> Result<TemplateDictionary> {
    match &config.templates {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading templates {}", path.display()))?;
            Ok(TemplateDictionary::parse(&text, &path.display().to_string())?)
        }
        None => Ok(TemplateDictionary::default()),
    }
}

fn instruction(config: &RunConfig) -> String {
    config
        .instruction
        .clone()
        .unwrap_or_else(|| DEFAULT_INSTRUCTION.to_owned())
}

pub fn ingest(config_path: &Path) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let graph = config.load_graph()?;
    let ontology = config.load_ontology(&graph)?;
    println!(
        "entities: {}\nrelations: {}",
        graph.entity_count(),
        graph.relation_count()
    );
    for split in Split::ALL {
        println!("{} triples: {}", split, graph.triple_count(split));
    }
    println!("descriptions: {}", graph.descriptions().len());
    if !ontology.is_empty() {
        println!("ontology axioms: {}", ontology.len());
        for tag in kgc_core::AxiomTag::ALL {
            println!("  {}: {}", tag, ontology.tag_count(tag));
        }
        subclass_closure(&ontology)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn mine_ontology(
    config_path: &Path,
    out: &Path,
    coverage: f64,
    min_support: u64,
    min_confidence: f64,
    equivalence_overlap: f64,
    disjoint_overlap: f64,
    overlap_min_support: u64,
) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let graph = config.load_graph()?;
    let base = config.load_ontology(&graph)?;
    let mut candidates = mine_domain_range(&graph, &base, coverage)?;
    candidates.extend(mine_compositions(
        &graph,
        CompositionMiningConfig {
            min_support,
            min_confidence,
        },
    ));
    candidates.extend(mine_equivalence_disjointness(
        &graph,
        &base,
        OverlapMiningConfig {
            equivalence_overlap,
            disjoint_overlap,
            min_support: overlap_min_support,
        },
    ));
    std::fs::write(out, write_candidates(&candidates, &graph, base.classes()))?;
    println!("wrote {} candidate axiom(s) to {}", candidates.len(), out.display());
    write_manifest(
        "mine-ontology",
        Some(config_path),
        &config.input_paths(),
        &[out.to_path_buf()],
        &[],
    )?;
    Ok(())
}

pub fn review_merge_cmd(
    config_path: &Path,
    candidates_path: &Path,
    decisions_path: Option<&Path>,
    default: ReviewDefault,
    out: &Path,
) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let graph = config.load_graph()?;
    let mut classes = kgc_core::ClassTable::new();
    let candidate_text = std::fs::read_to_string(candidates_path)
        .with_context(|| format!("reading {}", candidates_path.display()))?;
    let candidates = read_candidates(
        &candidate_text,
        &graph,
        &mut classes,
        &candidates_path.display().to_string(),
    )?;
    let decisions = match decisions_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            read_review_decisions(&text, &graph, &mut classes, &path.display().to_string())?
        }
        None => Vec::new(),
    };
    let ontology = review_merge(&graph, &classes, &candidates, &decisions, default)?;
    std::fs::write(out, serialize_ontology(&ontology, &graph))?;
    println!(
        "merged {} candidate(s) with {} decision(s) into {} axiom(s) at {}",
        candidates.len(),
        decisions.len(),
        ontology.len(),
        out.display()
    );
    let mut inputs = config.input_paths();
    inputs.push(candidates_path.to_path_buf());
    if let Some(d) = decisions_path {
        inputs.push(d.to_path_buf());
    }
    write_manifest("review-merge", Some(config_path), &inputs, &[out.to_path_buf()], &[])?;
    Ok(())
}

pub fn materialize(config_path: &Path, out: &Path) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let graph = config.load_graph()?;
    let ontology = config.load_ontology(&graph)?;
    if ontology.is_empty() {
        bail!("materialize needs an ontology; set `ontology` in the config");
    }
    let records = materialize_compositions(
        &graph,
        &ontology,
        ReasonerConfig {
            round_limit: config.round_limit,
        },
    )?;
    let mut tsv = String::new();
    let mut provenance = String::new();
    for record in &records {
        tsv.push_str(&format!(
            "{}\t{}\t{}\n",
            graph.entity_symbol(record.inferred.head),
            graph.relation_symbol(record.inferred.relation),
            graph.entity_symbol(record.inferred.tail)
        ));
        let premises: Vec<String> = record
            .premises
            .iter()
            .map(|p| graph.display_triple(*p))
            .collect();
        provenance.push_str(&serde_json::to_string(&serde_json::json!({
            "triple": graph.display_triple(record.inferred),
            "axiom": axiom_line(&record.axiom, &graph, ontology.classes()),
            "premises": premises,
        }))?);
        provenance.push('\n');
    }
    std::fs::write(out, tsv)?;
    let sidecar = PathBuf::from(format!("{}.provenance.jsonl", out.display()));
    std::fs::write(&sidecar, provenance)?;
    println!("materialized {} triple(s) to {}", records.len(), out.display());
    write_manifest(
        "materialize",
        Some(config_path),
        &config.input_paths(),
        &[out.to_path_buf(), sidecar],
        &[],
    )?;
    Ok(())
}

pub fn train_kge(config_path: &Path, out: &Path) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let graph = config.load_graph()?;
    let kge_config = config.kge.clone().unwrap_or_default();
    let trained = train(&graph, &kge_config)?;
    write_checkpoint(&trained.table, out)?;
    let sidecar = PathBuf::from(format!("{}.metrics.json", out.display()));
    std::fs::write(
        &sidecar,
        serde_json::to_vec_pretty(&serde_json::json!({
            "config": kge_config,
            "loss_trace": trained.loss_trace,
        }))?,
    )?;
    println!(
        "trained {} embeddings (d_e = {}) for {} epoch(s); final mean loss {:.6}",
        kge_config.scorer.name(),
        kge_config.d_e,
        kge_config.epochs,
        trained.loss_trace.last().copied().unwrap_or(f64::NAN)
    );
    write_manifest(
        "train-kge",
        Some(config_path),
        &config.input_paths(),
        &[out.to_path_buf(), sidecar],
        &[kge_config.seed],
    )?;
    Ok(())
}

fn labeled_or_bail(config: &RunConfig, graph: &KnowledgeGraph, split: Split) -> Result<Vec<LabeledTriple>> {
    if graph.triple_count(split) == 0 {
        bail!("the {split} split is empty; set `{split}` in the config");
    }
    Ok(labeled_split(
        graph,
        split,
        config.negative_ratio,
        config.negative_strategy,
        config.negative_seed.wrapping_add(split as u64 + 1),
    )?)
}

pub fn tune_thresholds_cmd(config_path: &Path, emb: &Path, out: &Path) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let graph = config.load_graph()?;
    let table = read_checkpoint(emb)?;
    let validation = labeled_or_bail(&config, &graph, Split::Valid)?;
    let thresholds = tune_thresholds(&table, &validation)?;
    std::fs::write(out, serde_json::to_vec_pretty(&thresholds.to_json(&graph))?)?;
    println!(
        "tuned {} per-relation threshold(s); global fallback {:.6}",
        thresholds.relation_thresholds().len(),
        thresholds.global()
    );
    let mut inputs = config.input_paths();
    inputs.push(emb.to_path_buf());
    write_manifest(
        "tune-thresholds",
        Some(config_path),
        &inputs,
        &[out.to_path_buf()],
        &[config.negative_seed],
    )?;
    Ok(())
}

pub fn train_fusion_cmd(
    config_path: &Path,
    emb: &Path,
    out: &Path,
    no_ontology: bool,
    no_structure: bool,
) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let graph = config.load_graph()?;
    let ontology = config.load_ontology(&graph)?;
    let table = read_checkpoint(emb)?;
    let reasoner = Reasoner::new(
        &graph,
        &ontology,
        ReasonerConfig {
            round_limit: config.round_limit,
        },
    )?;
    let train_set = labeled_or_bail(&config, &graph, Split::Train)?;
    let valid_set = labeled_or_bail(&config, &graph, Split::Valid)?;
    let fusion_config = config.fusion.clone().unwrap_or_default();
    let policy = FeaturePolicy {
        use_structure: !no_structure,
        use_ontology: !no_ontology,
        seed: fusion_config.seed,
    };
    let outcome = train_fusion(&table, &reasoner, &train_set, &valid_set, &fusion_config, policy)?;
    write_adapter(&outcome.adapter, &outcome.decoder, out)?;
    let sidecar = PathBuf::from(format!("{}.trace.json", out.display()));
    std::fs::write(&sidecar, serde_json::to_vec_pretty(&outcome.trace)?)?;
    let last = outcome.trace.last().expect("at least one epoch");
    println!(
        "fusion training finished: loss {:.6}, validation accuracy {:.4}",
        last.train_loss, last.valid_accuracy
    );
    let mut inputs = config.input_paths();
    inputs.push(emb.to_path_buf());
    write_manifest(
        "train-fusion",
        Some(config_path),
        &inputs,
        &[out.to_path_buf(), sidecar],
        &[fusion_config.seed],
    )?;
    Ok(())
}

pub fn verbalize(
    config_path: &Path,
    split: Split,
    with_negatives: bool,
    out: &Path,
) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let graph = config.load_graph()?;
    let ontology = config.load_ontology(&graph)?;
    let closure = subclass_closure(&ontology)?;
    let templates = load_templates(&config)?;
    let instruction = instruction(&config);
    let triples: Vec<kgc_core::Triple> = if with_negatives {
        labeled_or_bail(&config, &graph, split)?
            .into_iter()
            .map(|lt| lt.triple)
            .collect()
    } else {
        graph.triples(split).collect()
    };
    let mut text = String::new();
    for triple in triples {
        let bundle = prompt_for_triple(
            &instruction,
            triple,
            &graph,
            &ontology,
            &closure,
            &templates,
            PromptOptions {
                max_axioms: config.max_axioms,
            },
        );
        text.push_str(&serde_json::to_string(&bundle)?);
        text.push('\n');
    }
    std::fs::write(out, text)?;
    println!("wrote prompt bundles to {}", out.display());
    write_manifest(
        "verbalize",
        Some(config_path),
        &config.input_paths(),
        &[out.to_path_buf()],
        &[config.negative_seed],
    )?;
    Ok(())
}

pub struct ClassifyArgs<'a> {
    pub config_path: &'a Path,
    pub backend: Backend,
    pub emb: Option<&'a Path>,
    pub thresholds: Option<&'a Path>,
    pub adapter: Option<&'a Path>,
    pub out: &'a Path,
    pub gold_out: Option<&'a Path>,
    /// Fused backend only: write one explanation record per triple.
    pub explanations: Option<&'a Path>,
    pub no_ontology: bool,
    pub no_structure: bool,
}

pub fn classify(args: ClassifyArgs<'_>) -> Result<()> {
    let config = RunConfig::load(args.config_path)?;
    let graph = config.load_graph()?;
    let test_set = labeled_or_bail(&config, &graph, Split::Test)?;

    let need = |path: Option<&Path>, step: &str, hint: &str| -> Result<PathBuf> {
        path.map(Path::to_path_buf).ok_or_else(|| {
            anyhow!(kgc_core::Error::MissingArtifact {
                step: step.to_owned(),
                hint: hint.to_owned(),
            })
        })
    };

    let predictions: Vec<TripleRecord> = match args.backend {
        Backend::Kge => {
            let table = read_checkpoint(&need(args.emb, "classify --backend kge", "run train-kge and pass --emb")?)?;
            let thresholds = load_thresholds(
                &need(
                    args.thresholds,
                    "classify --backend kge",
                    "run tune-thresholds and pass --thresholds",
                )?,
                &graph,
            )?;
            test_set
                .iter()
                .map(|lt| {
                    let label = classify_kge(&table, &thresholds, lt.triple)?;
                    Ok(TripleRecord {
                        label,
                        ..TripleRecord::from_labeled(&graph, *lt)
                    })
                })
                .collect::<Result<_>>()?
        }
        Backend::Fused => {
            let table = read_checkpoint(&need(args.emb, "classify --backend fused", "run train-kge and pass --emb")?)?;
            let thresholds = load_thresholds(
                &need(
                    args.thresholds,
                    "classify --backend fused",
                    "run tune-thresholds and pass --thresholds",
                )?,
                &graph,
            )?;
            let (adapter, decoder) = read_adapter(&need(
                args.adapter,
                "classify --backend fused",
                "run train-fusion and pass --adapter",
            )?)?;
            let ontology = config.load_ontology(&graph)?;
            let reasoner = Reasoner::new(
                &graph,
                &ontology,
                ReasonerConfig {
                    round_limit: config.round_limit,
                },
            )?;
            let policy = FeaturePolicy {
                use_structure: !args.no_structure,
                use_ontology: !args.no_ontology,
                seed: adapter.seed(),
            };
            let mut explanations = String::new();
            let records = test_set
                .iter()
                .map(|lt| {
                    let decision = classify_fused(
                        &adapter, &decoder, &table, &reasoner, &thresholds, lt.triple, policy,
                    )?;
                    if args.explanations.is_some() {
                        explanations.push_str(&serde_json::to_string(&decision.explanation)?);
                        explanations.push('\n');
                    }
                    Ok(TripleRecord {
                        label: decision.label,
                        ..TripleRecord::from_labeled(&graph, *lt)
                    })
                })
                .collect::<Result<_>>()?;
            if let Some(path) = args.explanations {
                std::fs::write(path, explanations)?;
            }
            records
        }
        Backend::Llm => {
            let endpoint = config.endpoint.clone().ok_or_else(|| {
                anyhow!(kgc_core::Error::MissingArtifact {
                    step: "classify --backend llm".to_owned(),
                    hint: "set `endpoint` in the config".to_owned(),
                })
            })?;
            let client = LlmClient::new(endpoint)?;
            let ontology = if args.no_ontology {
                kgc_core::Ontology::new()
            } else {
                config.load_ontology(&graph)?
            };
            let closure = subclass_closure(&ontology)?;
            let templates = load_templates(&config)?;
            let instruction = instruction(&config);
            test_set
                .iter()
                .map(|lt| {
                    let bundle = prompt_for_triple(
                        &instruction,
                        lt.triple,
                        &graph,
                        &ontology,
                        &closure,
                        &templates,
                        PromptOptions {
                            max_axioms: config.max_axioms,
                        },
                    );
                    let answer = client.classify_with_llm(&bundle)?;
                    // Abstentions are scored incorrect and flagged.
                    let (label, abstained) = match answer.label {
                        LlmLabel::True => (true, false),
                        LlmLabel::False => (false, false),
                        LlmLabel::Unparseable => (!lt.label, true),
                    };
                    Ok(TripleRecord {
                        label,
                        abstained,
                        ..TripleRecord::from_labeled(&graph, *lt)
                    })
                })
                .collect::<Result<_>>()?
        }
    };

    write_records(args.out, &predictions)?;
    let mut outputs = vec![args.out.to_path_buf()];
    if let Some(gold_out) = args.gold_out {
        let gold: Vec<TripleRecord> = test_set
            .iter()
            .map(|lt| TripleRecord::from_labeled(&graph, *lt))
            .collect();
        write_records(gold_out, &gold)?;
        outputs.push(gold_out.to_path_buf());
    }
    println!("wrote {} prediction(s) to {}", predictions.len(), args.out.display());
    let mut inputs = config.input_paths();
    for p in [args.emb, args.thresholds, args.adapter].into_iter().flatten() {
        inputs.push(p.to_path_buf());
    }
    write_manifest(
        "classify",
        Some(args.config_path),
        &inputs,
        &outputs,
        &[config.negative_seed],
    )?;
    Ok(())
}

fn load_thresholds(path: &Path, graph: &KnowledgeGraph) -> Result<ThresholdTable> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    Ok(ThresholdTable::from_json(&value, graph)?)
}

pub fn eval_cmd(pred: &Path, gold: &Path, csv: Option<&Path>) -> Result<()> {
    let predictions = read_records(pred)?;
    let gold_records = read_records(gold)?;
    let (pred_labels, gold_labels) = aligned_labels(&predictions, &gold_records)?;
    let metrics = evaluate(&pred_labels, &gold_labels)?;
    println!("   Acc      P      R     F1");
    println!("{}", metrics.table_row());
    println!(
        "confusion: TP={} FP={} FN={} TN={}  (n={})",
        metrics.tp,
        metrics.fp,
        metrics.fn_,
        metrics.tn,
        metrics.total()
    );
    let abstained = predictions.iter().filter(|p| p.abstained).count();
    if abstained > 0 {
        println!("abstentions scored incorrect: {abstained}");
    }
    if let Some(csv_path) = csv {
        std::fs::write(csv_path, format!("{}\n", serde_json::to_string(&metrics)?))?;
        write_manifest(
            "eval",
            None,
            &[pred.to_path_buf(), gold.to_path_buf()],
            &[csv_path.to_path_buf()],
            &[],
        )?;
    }
    Ok(())
}

pub fn ablate(config_path: &Path, spec_path: &Path, seeds: &[u64], out: &Path) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let graph = config.load_graph()?;
    let ontology = config.load_ontology(&graph)?;
    let spec_text = std::fs::read_to_string(spec_path)
        .with_context(|| format!("reading {}", spec_path.display()))?;
    let spec: AblationSpec = serde_json::from_str(&spec_text)
        .with_context(|| format!("parsing {}", spec_path.display()))?;

    let endpoint = config.endpoint.clone();
    let client = match (&spec.backend, endpoint) {
        (Backend::Llm, Some(endpoint)) => Some(LlmClient::new(endpoint)?),
        _ => None,
    };
    let resources = client.as_ref().map(|client| LlmResources {
        client,
        templates: TemplateDictionary::default(),
        instruction: instruction(&config),
        max_axioms: config.max_axioms,
    });
    let report = run_ablation(&graph, &ontology, &spec, seeds, resources.as_ref())?;
    std::fs::write(out, report.to_csv())?;
    println!(
        "ablation backend={:?} use_ontology={} use_structure={}",
        report.backend, report.use_ontology, report.use_structure
    );
    println!("fraction   Acc      P      R     F1");
    for row in &report.rows {
        let cell = |m: &kgc_core::eval::MeanMetric| {
            m.mean
                .map(|v| format!("{:6.2}", 100.0 * v))
                .unwrap_or_else(|| "   n/a".to_owned())
        };
        println!(
            "{:8.3} {} {} {} {}",
            row.fraction,
            cell(&row.accuracy),
            cell(&row.precision),
            cell(&row.recall),
            cell(&row.f1)
        );
    }
    let mut inputs = config.input_paths();
    inputs.push(spec_path.to_path_buf());
    write_manifest("ablate", Some(config_path), &inputs, &[out.to_path_buf()], seeds)?;
    Ok(())
}
