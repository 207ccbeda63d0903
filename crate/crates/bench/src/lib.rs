//! Benchmark fixtures shared by the criterion targets in `benches/`.

use kgc_core::kg::{KnowledgeGraph, Split};
use kgc_core::kge::{train, EmbeddingTable, ScorerKind, TrainConfig};
use kgc_core::ontology::{parse_ontology_str, Ontology};
use kgc_core::synth::{violation_benchmark, ViolationBenchmarkConfig};

/// A mid-sized typed graph with an ontology, for reasoning and selection
/// benchmarks.
pub fn benchmark_graph() -> (KnowledgeGraph, Ontology) {
    let bench = violation_benchmark(
        ViolationBenchmarkConfig {
            entities_per_class: 25,
            triples_per_relation: 80,
            violation_rate: 0.5,
        },
        99,
    )
    .unwrap();
    (bench.graph, bench.ontology)
}

/// A chain-structured graph with one composition rule, sized for fixpoint
/// benchmarks.
pub fn composition_chain(links: usize) -> (KnowledgeGraph, Ontology) {
    let mut lines = String::new();
    for i in 0..links {
        lines.push_str(&format!("n{i}\tstep\tn{}\n", i + 1));
    }
    let mut graph = KnowledgeGraph::new();
    graph.load_triples_str(&lines, Split::Train, "bench").unwrap();
    graph.intern_relation("reach");
    let (ontology, _) = parse_ontology_str("reach composedOf step o step .\n", &graph, "bench")
        .unwrap();
    (graph, ontology)
}

/// A small trained rotational table over the benchmark graph.
pub fn trained_table(graph: &KnowledgeGraph) -> EmbeddingTable {
    train(
        graph,
        &TrainConfig {
            scorer: ScorerKind::Rotational,
            d_e: 32,
            epochs: 5,
            batch_size: 128,
            negatives_per_positive: 2,
            margin: 5.0,
            adversarial_temperature: 1.0,
            seed: 3,
            ..TrainConfig::default()
        },
    )
    .unwrap()
    .table
}
