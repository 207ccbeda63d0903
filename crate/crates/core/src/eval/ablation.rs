//! Ablation orchestration: which signals a classifier may use, ontology
//! fraction sweeps, and seed-averaged reporting.

use serde::{Deserialize, Serialize};

use crate::adapter::{classify_fused, train_fusion, FeaturePolicy, FusionTrainConfig};
use crate::error::{Error, Result};
use crate::eval::metrics::{evaluate, Metrics};
use crate::gateway::{LlmClient, LlmLabel};
use crate::kg::{labeled_split, CorruptionStrategy, KnowledgeGraph, LabeledTriple, Split};
use crate::kge::{classify_kge, train, tune_thresholds, TrainConfig};
use crate::ontology::{subclass_closure, Ontology};
use crate::reasoner::{Reasoner, ReasonerConfig};
use crate::util::rng::Rng;
use crate::verbalizer::{
    prompt_for_triple, PromptOptions, TemplateDictionary, DEFAULT_INSTRUCTION,
};

/// Classifier under ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Kge,
    Fused,
    Llm,
}

/// One ablation configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationSpec {
    pub backend: Backend,
    pub use_ontology: bool,
    pub use_structure: bool,
    /// Ontology fractions to sweep; one report row each.
    #[serde(default = "full_fraction")]
    pub ontology_fractions: Vec<f64>,
    #[serde(default)]
    pub kge: TrainConfig,
    #[serde(default)]
    pub fusion: FusionTrainConfig,
    #[serde(default = "one")]
    pub negative_ratio: f64,
    #[serde(default = "both")]
    pub negative_strategy: CorruptionStrategy,
    #[serde(default = "default_round_limit")]
    pub round_limit: usize,
}

fn full_fraction() -> Vec<f64> {
    vec![1.0]
}
fn one() -> f64 {
    1.0
}
fn both() -> CorruptionStrategy {
    CorruptionStrategy::Both
}
fn default_round_limit() -> usize {
    10
}

/// Mean of a metric over seeds, excluding undefined values with a count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanMetric {
    pub mean: Option<f64>,
    pub defined: usize,
    pub total: usize,
}

fn mean_of(values: &[Option<f64>]) -> MeanMetric {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    MeanMetric {
        mean: if defined.is_empty() {
            None
        } else {
            Some(defined.iter().sum::<f64>() / defined.len() as f64)
        },
        defined: defined.len(),
        total: values.len(),
    }
}

/// Seed-averaged metrics for one ontology fraction.
#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub fraction: f64,
    pub seeds: Vec<u64>,
    pub accuracy: MeanMetric,
    pub precision: MeanMetric,
    pub recall: MeanMetric,
    pub f1: MeanMetric,
    pub per_seed: Vec<Metrics>,
}

/// Full ablation output, one row per fraction.
#[derive(Debug, Clone, Serialize)]
pub struct AblationReport {
    pub backend: Backend,
    pub use_ontology: bool,
    pub use_structure: bool,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    /// CSV with paired columns per metric (mean + defined count).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "fraction,accuracy,precision,precision_defined,recall,recall_defined,f1,f1_defined\n",
        );
        for row in &self.rows {
            let cell = |m: &MeanMetric| {
                m.mean
                    .map(|v| format!("{v:.6}"))
                    .unwrap_or_else(|| "n/a".to_owned())
            };
            out.push_str(&format!(
                "{:.3},{},{},{},{},{},{},{}\n",
                row.fraction,
                cell(&row.accuracy),
                cell(&row.precision),
                row.precision.defined,
                cell(&row.recall),
                row.recall.defined,
                cell(&row.f1),
                row.f1.defined,
            ));
        }
        out
    }
}

/// Deterministically samples a fraction of an ontology's axioms.
pub fn sample_ontology_fraction(
    ontology: &Ontology,
    graph: &KnowledgeGraph,
    fraction: f64,
    seed: u64,
) -> Result<Ontology> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!(
            "ontology fraction must be in [0, 1], got {fraction}"
        )));
    }
    let axioms = ontology.axioms();
    let keep = ((fraction * axioms.len() as f64) + 1e-9).floor() as usize;
    let mut order: Vec<usize> = (0..axioms.len()).collect();
    let mut rng = Rng::seed_from(seed ^ 0xA81047_u64);
    rng.shuffle(&mut order);
    let mut sampled = Ontology::with_classes(ontology.classes().clone());
    for &i in order.iter().take(keep) {
        sampled.add_axiom(axioms[i], graph)?;
    }
    Ok(sampled)
}

/// External resources needed by the prompt-path backend.
pub struct LlmResources<'a> {
    pub client: &'a LlmClient,
    pub templates: TemplateDictionary,
    pub instruction: String,
    pub max_axioms: Option<usize>,
}

/// Labeled train/valid/test sets with seed-fixed filtered negatives.
pub fn labeled_sets(
    graph: &KnowledgeGraph,
    ratio: f64,
    strategy: CorruptionStrategy,
    seed: u64,
) -> Result<(Vec<LabeledTriple>, Vec<LabeledTriple>, Vec<LabeledTriple>)> {
    Ok((
        labeled_split(graph, Split::Train, ratio, strategy, seed.wrapping_add(1))?,
        labeled_split(graph, Split::Valid, ratio, strategy, seed.wrapping_add(2))?,
        labeled_split(graph, Split::Test, ratio, strategy, seed.wrapping_add(3))?,
    ))
}

/// Runs one ablation spec over the given seeds.
///
/// Every pipeline stage is retrained per seed; a fraction sweep emits one
/// row per fraction. The prompt-path backend needs [`LlmResources`] and
/// fails with a step-naming error without them.
pub fn run_ablation(
    graph: &KnowledgeGraph,
    ontology: &Ontology,
    spec: &AblationSpec,
    seeds: &[u64],
    llm: Option<&LlmResources<'_>>,
) -> Result<AblationReport> {
    if seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one seed".into()));
    }
    let fractions = if spec.ontology_fractions.is_empty() {
        vec![1.0]
    } else {
        spec.ontology_fractions.clone()
    };
    let mut rows = Vec::with_capacity(fractions.len());
    for &fraction in &fractions {
        let mut per_seed = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let sub_ontology = sample_ontology_fraction(ontology, graph, fraction, seed)?;
            per_seed.push(run_once(graph, &sub_ontology, spec, seed, llm)?);
        }
        rows.push(AblationRow {
            fraction,
            seeds: seeds.to_vec(),
            accuracy: mean_of(&per_seed.iter().map(|m| Some(m.accuracy)).collect::<Vec<_>>()),
            precision: mean_of(&per_seed.iter().map(|m| m.precision).collect::<Vec<_>>()),
            recall: mean_of(&per_seed.iter().map(|m| m.recall).collect::<Vec<_>>()),
            f1: mean_of(&per_seed.iter().map(|m| m.f1).collect::<Vec<_>>()),
            per_seed,
        });
    }
    Ok(AblationReport {
        backend: spec.backend,
        use_ontology: spec.use_ontology,
        use_structure: spec.use_structure,
        rows,
    })
}

fn run_once(
    graph: &KnowledgeGraph,
    ontology: &Ontology,
    spec: &AblationSpec,
    seed: u64,
    llm: Option<&LlmResources<'_>>,
) -> Result<Metrics> {
    let (train_set, valid_set, test_set) =
        labeled_sets(graph, spec.negative_ratio, spec.negative_strategy, seed)?;
    let gold: Vec<bool> = test_set.iter().map(|lt| lt.label).collect();

    let predictions: Vec<bool> = match spec.backend {
        Backend::Kge => {
            let mut kge_cfg = spec.kge.clone();
            kge_cfg.seed = seed;
            let trained = train(graph, &kge_cfg)?;
            let thresholds = tune_thresholds(&trained.table, &valid_set)?;
            test_set
                .iter()
                .map(|lt| classify_kge(&trained.table, &thresholds, lt.triple))
                .collect::<Result<_>>()?
        }
        Backend::Fused => {
            let mut kge_cfg = spec.kge.clone();
            kge_cfg.seed = seed;
            let trained = train(graph, &kge_cfg)?;
            let thresholds = tune_thresholds(&trained.table, &valid_set)?;
            let reasoner = Reasoner::new(
                graph,
                ontology,
                ReasonerConfig {
                    round_limit: spec.round_limit,
                },
            )?;
            let policy = FeaturePolicy {
                use_structure: spec.use_structure,
                use_ontology: spec.use_ontology,
                seed,
            };
            let mut fusion_cfg = spec.fusion.clone();
            fusion_cfg.seed = seed;
            let fused = train_fusion(
                &trained.table,
                &reasoner,
                &train_set,
                &valid_set,
                &fusion_cfg,
                policy,
            )?;
            test_set
                .iter()
                .map(|lt| {
                    classify_fused(
                        &fused.adapter,
                        &fused.decoder,
                        &trained.table,
                        &reasoner,
                        &thresholds,
                        lt.triple,
                        policy,
                    )
                    .map(|d| d.label)
                })
                .collect::<Result<_>>()?
        }
        Backend::Llm => {
            let resources = llm.ok_or_else(|| Error::MissingArtifact {
                step: "llm-endpoint".into(),
                hint: "configure an endpoint (and warm cache) before the llm backend".into(),
            })?;
            let closure = subclass_closure(ontology)?;
            let empty = Ontology::new();
            let empty_closure = subclass_closure(&empty)?;
            test_set
                .iter()
                .map(|lt| {
                    // Without ontology the prompt carries an empty O section.
                    let bundle = if spec.use_ontology {
                        prompt_for_triple(
                            &resources.instruction,
                            lt.triple,
                            graph,
                            ontology,
                            &closure,
                            &resources.templates,
                            PromptOptions {
                                max_axioms: resources.max_axioms,
                            },
                        )
                    } else {
                        prompt_for_triple(
                            &resources.instruction,
                            lt.triple,
                            graph,
                            &empty,
                            &empty_closure,
                            &resources.templates,
                            PromptOptions {
                                max_axioms: resources.max_axioms,
                            },
                        )
                    };
                    // Abstentions score as incorrect: map them to the wrong
                    // label explicitly.
                    resources.client.classify_with_llm(&bundle).map(|a| match a.label {
                        LlmLabel::True => true,
                        LlmLabel::False => false,
                        LlmLabel::Unparseable => !lt.label,
                    })
                })
                .collect::<Result<_>>()?
        }
    };
    evaluate(&predictions, &gold)
}

/// Default instruction text for prompt-path classification.
pub fn default_instruction() -> String {
    DEFAULT_INSTRUCTION.to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::parse_ontology_str;

    fn small_graph() -> (KnowledgeGraph, Ontology) {
        let mut g = KnowledgeGraph::new();
        let mut lines = String::new();
        for i in 0..12 {
            lines.push_str(&format!("a{i}\tr0\tb{i}\n"));
            lines.push_str(&format!("b{i}\tr1\tc{i}\n"));
        }
        g.load_triples_str(&lines, Split::Train, "t").unwrap();
        g.load_triples_str("a0\tr1\tb1\nb0\tr0\tc1\n", Split::Valid, "t").unwrap();
        g.load_triples_str("a1\tr1\tb2\nb1\tr0\tc2\n", Split::Test, "t").unwrap();
        let mut onto_text = String::new();
        for i in 0..12 {
            onto_text.push_str(&format!("a{i} rdf:type :A .\n"));
            onto_text.push_str(&format!("b{i} rdf:type :B .\n"));
            onto_text.push_str(&format!("c{i} rdf:type :C .\n"));
        }
        onto_text.push_str("r0 rdfs:domain :A .\nr0 rdfs:range :B .\n");
        let (onto, _) = parse_ontology_str(&onto_text, &g, "o").unwrap();
        (g, onto)
    }

    #[test]
    fn fraction_sampling_is_deterministic_and_sized() {
        let (g, onto) = small_graph();
        let half = sample_ontology_fraction(&onto, &g, 0.5, 3).unwrap();
        let again = sample_ontology_fraction(&onto, &g, 0.5, 3).unwrap();
        assert_eq!(half.axioms(), again.axioms());
        assert_eq!(half.len(), onto.len() / 2);
        assert_eq!(
            sample_ontology_fraction(&onto, &g, 1.0, 3).unwrap().len(),
            onto.len()
        );
        assert_eq!(sample_ontology_fraction(&onto, &g, 0.0, 3).unwrap().len(), 0);
    }

    #[test]
    fn sweep_emits_one_row_per_fraction() {
        let (g, onto) = small_graph();
        let spec = AblationSpec {
            backend: Backend::Kge,
            use_ontology: true,
            use_structure: true,
            ontology_fractions: vec![0.0, 0.5, 1.0],
            kge: TrainConfig {
                d_e: 8,
                epochs: 20,
                batch_size: 8,
                negatives_per_positive: 2,
                ..TrainConfig::default()
            },
            fusion: FusionTrainConfig::default(),
            negative_ratio: 1.0,
            negative_strategy: CorruptionStrategy::Both,
            round_limit: 10,
        };
        let report = run_ablation(&g, &onto, &spec, &[1, 2], None).unwrap();
        assert_eq!(report.rows.len(), 3);
        for row in &report.rows {
            assert_eq!(row.per_seed.len(), 2);
        }
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn plain_backend_runs_with_both_signals_off() {
        // use_structure = false and use_ontology = false: randomized
        // prefixes, zeroed verdicts, zeroed score; the pipeline still
        // trains and evaluates.
        let (g, onto) = small_graph();
        let spec = AblationSpec {
            backend: Backend::Fused,
            use_ontology: false,
            use_structure: false,
            ontology_fractions: vec![1.0],
            kge: TrainConfig {
                d_e: 6,
                epochs: 10,
                batch_size: 8,
                negatives_per_positive: 2,
                ..TrainConfig::default()
            },
            fusion: FusionTrainConfig {
                d_token: 8,
                epochs: 20,
                ..FusionTrainConfig::default()
            },
            negative_ratio: 1.0,
            negative_strategy: CorruptionStrategy::Both,
            round_limit: 10,
        };
        let report = run_ablation(&g, &onto, &spec, &[3], None).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(!report.use_ontology);
        assert!(!report.use_structure);
        let acc = report.rows[0].accuracy.mean.unwrap();
        assert!((0.0..=1.0).contains(&acc));
    }

    #[test]
    fn llm_backend_without_endpoint_names_the_step() {
        let (g, onto) = small_graph();
        let spec = AblationSpec {
            backend: Backend::Llm,
            use_ontology: true,
            use_structure: false,
            ontology_fractions: vec![1.0],
            kge: TrainConfig::default(),
            fusion: FusionTrainConfig::default(),
            negative_ratio: 1.0,
            negative_strategy: CorruptionStrategy::Both,
            round_limit: 10,
        };
        let err = run_ablation(&g, &onto, &spec, &[1], None).unwrap_err();
        match err {
            Error::MissingArtifact { step, .. } => assert_eq!(step, "llm-endpoint"),
            other => panic!("expected missing artifact, got {other}"),
        }
    }

    #[test]
    fn undefined_metrics_are_excluded_from_means_with_count() {
        let m = mean_of(&[Some(0.5), None, Some(1.0)]);
        assert_eq!(m.defined, 2);
        assert_eq!(m.total, 3);
        assert!((m.mean.unwrap() - 0.75).abs() < 1e-12);
        let empty = mean_of(&[None, None]);
        assert_eq!(empty.mean, None);
        assert_eq!(empty.defined, 0);
    }
}
