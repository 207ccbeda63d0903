use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use kgc_bench::{benchmark_graph, composition_chain, trained_table};
use kgc_core::kg::Split;
use kgc_core::ontology::subclass_closure;
use kgc_core::reasoner::{materialize_compositions, Reasoner, ReasonerConfig};
use kgc_core::verbalizer::select_relevant;

fn bench_scoring(c: &mut Criterion) {
    let (graph, _) = benchmark_graph();
    let table = trained_table(&graph);
    let triples: Vec<_> = graph.triples(Split::Train).collect();
    c.bench_function("score_triple_rotational_d32", |b| {
        let mut i = 0;
        b.iter(|| {
            let t = triples[i % triples.len()];
            i += 1;
            black_box(table.score(black_box(t)).unwrap())
        })
    });
}

fn bench_materialization(c: &mut Criterion) {
    let (graph, ontology) = composition_chain(256);
    c.bench_function("materialize_chain_256", |b| {
        b.iter(|| {
            black_box(
                materialize_compositions(
                    black_box(&graph),
                    black_box(&ontology),
                    ReasonerConfig { round_limit: 64 },
                )
                .unwrap()
                .len(),
            )
        })
    });
}

fn bench_verdicts(c: &mut Criterion) {
    let (graph, ontology) = benchmark_graph();
    let reasoner = Reasoner::new(&graph, &ontology, ReasonerConfig::default()).unwrap();
    let triples: Vec<_> = graph.triples(Split::Test).collect();
    c.bench_function("symbolic_verdict", |b| {
        let mut i = 0;
        b.iter(|| {
            let t = triples[i % triples.len()];
            i += 1;
            black_box(reasoner.symbolic_verdict(black_box(t)))
        })
    });
}

fn bench_selection(c: &mut Criterion) {
    let (graph, ontology) = benchmark_graph();
    let closure = subclass_closure(&ontology).unwrap();
    let triples: Vec<_> = graph.triples(Split::Test).collect();
    c.bench_function("select_relevant", |b| {
        let mut i = 0;
        b.iter(|| {
            let t = triples[i % triples.len()];
            i += 1;
            black_box(select_relevant(&ontology, &closure, black_box(t), &graph).len())
        })
    });
}

criterion_group!(
    benches,
    bench_scoring,
    bench_materialization,
    bench_verdicts,
    bench_selection
);
criterion_main!(benches);
