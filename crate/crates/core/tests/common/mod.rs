//! Shared helpers for the integration suites: a brute-force reasoning
//! oracle that deliberately avoids every optimization of the library path
//! (no deltas, no indexes, no closures), and numeric comparison utilities.

#![allow(dead_code)]

use std::collections::BTreeSet;

use kgc_core::kg::{KnowledgeGraph, Triple};
use kgc_core::ontology::{Ontology, OntologyAxiom};

/// Relative error with an absolute floor for near-zero pairs.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let denom = a.abs().max(b.abs());
    if denom < 1e-10 {
        (a - b).abs()
    } else {
        (a - b).abs() / denom
    }
}

/// Naive fixpoint over composition axioms only: repeatedly scan every triple
/// pair against every rule until nothing changes.
pub fn naive_compositions(base: &BTreeSet<Triple>, ontology: &Ontology) -> BTreeSet<Triple> {
    let rules: Vec<_> = ontology.compositions().collect();
    let mut all = base.clone();
    loop {
        let mut fresh = Vec::new();
        for &(result, first, second) in &rules {
            for t1 in all.iter().filter(|t| t.relation == first) {
                for t2 in all.iter().filter(|t| t.relation == second) {
                    if t1.tail == t2.head {
                        let inferred = Triple::new(t1.head, result, t2.tail);
                        if !all.contains(&inferred) {
                            fresh.push(inferred);
                        }
                    }
                }
            }
        }
        if fresh.is_empty() {
            return all;
        }
        all.extend(fresh);
    }
}

/// Naive fixpoint over equivalence axioms only.
pub fn naive_equivalences(base: &BTreeSet<Triple>, ontology: &Ontology) -> BTreeSet<Triple> {
    let pairs: Vec<_> = ontology.equivalent_pairs().collect();
    let mut all = base.clone();
    loop {
        let mut fresh = Vec::new();
        for &(a, b) in &pairs {
            for t in all.iter() {
                if t.relation == a {
                    let mirrored = Triple::new(t.head, b, t.tail);
                    if !all.contains(&mirrored) {
                        fresh.push(mirrored);
                    }
                } else if t.relation == b {
                    let mirrored = Triple::new(t.head, a, t.tail);
                    if !all.contains(&mirrored) {
                        fresh.push(mirrored);
                    }
                }
            }
        }
        if fresh.is_empty() {
            return all;
        }
        all.extend(fresh);
    }
}

/// Joint naive fixpoint: alternate both rule families until stable.
pub fn naive_joint(base: &BTreeSet<Triple>, ontology: &Ontology) -> BTreeSet<Triple> {
    let mut all = base.clone();
    loop {
        let expanded = naive_equivalences(&all, ontology);
        let composed = naive_compositions(&expanded, ontology);
        if composed.len() == all.len() {
            return composed;
        }
        all = composed;
    }
}

/// Verdict by exhaustive axiom scanning, mirroring the contract but not the
/// code of the library reasoner.
#[derive(Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    Satisfied,
    Violated(BTreeSet<OntologyAxiom>),
    Unknown,
}

pub fn naive_verdict(
    graph: &KnowledgeGraph,
    ontology: &Ontology,
    triple: Triple,
) -> OracleVerdict {
    let base: BTreeSet<Triple> = graph.all_triples().collect();
    let expanded = naive_joint(&base, ontology);
    naive_verdict_with(ontology, triple, &expanded)
}

/// Like [`naive_verdict`] but against a caller-precomputed expanded set, so
/// many queries per instance stay affordable.
pub fn naive_verdict_with(
    ontology: &Ontology,
    triple: Triple,
    expanded: &BTreeSet<Triple>,
) -> OracleVerdict {
    let mut violated: BTreeSet<OntologyAxiom> = BTreeSet::new();
    let mut unknown = false;

    // Reachability among classes by plain loop-until-stable scanning.
    let reaches = |from: kgc_core::ClassId, to: kgc_core::ClassId| -> bool {
        let mut reach = BTreeSet::from([from]);
        loop {
            let before = reach.len();
            for (sub, sup) in ontology.subclass_edges() {
                if reach.contains(&sub) {
                    reach.insert(sup);
                }
            }
            if reach.len() == before {
                break;
            }
        }
        reach.contains(&to)
    };

    for axiom in ontology.axioms() {
        match axiom {
            OntologyAxiom::Domain { relation, class } if relation == triple.relation => {
                let asserted: Vec<_> = ontology.classes_of(triple.head).collect();
                if asserted.is_empty() {
                    unknown = true;
                } else if !asserted.iter().any(|&a| reaches(a, class)) {
                    violated.insert(axiom);
                }
            }
            OntologyAxiom::Range { relation, class } if relation == triple.relation => {
                let asserted: Vec<_> = ontology.classes_of(triple.tail).collect();
                if asserted.is_empty() {
                    unknown = true;
                } else if !asserted.iter().any(|&a| reaches(a, class)) {
                    violated.insert(axiom);
                }
            }
            _ => {}
        }
    }

    // Disjointness against the fully expanded triple set, with the query
    // relation widened through its (naively computed) equivalence class.
    let mut variants = BTreeSet::from([triple.relation]);
    loop {
        let before = variants.len();
        for (a, b) in ontology.equivalent_pairs() {
            if variants.contains(&a) {
                variants.insert(b);
            }
            if variants.contains(&b) {
                variants.insert(a);
            }
        }
        if variants.len() == before {
            break;
        }
    }
    for (a, b) in ontology.disjoint_pairs() {
        for &v in &variants {
            let partner = if a == v {
                b
            } else if b == v {
                a
            } else {
                continue;
            };
            if expanded.contains(&Triple::new(triple.head, partner, triple.tail)) {
                violated.insert(OntologyAxiom::DisjointProperty { a, b });
            }
        }
    }

    if !violated.is_empty() {
        OracleVerdict::Violated(violated)
    } else if unknown {
        OracleVerdict::Unknown
    } else {
        OracleVerdict::Satisfied
    }
}

/// The fixed toy graph/ontology used by the prompt golden test, rendered as
/// one JSON line per bundle.
pub fn render_prompt_fixture() -> String {
    use kgc_core::ontology::{parse_ontology_str, subclass_closure};
    use kgc_core::verbalizer::{
        prompt_for_triple, PromptOptions, TemplateDictionary, DEFAULT_INSTRUCTION,
    };

    let mut g = KnowledgeGraph::new();
    g.load_triples_str(
        ":IronMan\t:hasWife\t:PepperPotts\n:MongenStark\t:hasFather\t:IronMan\n:IronMan\t:isEnemy\t:Thanos\n",
        kgc_core::Split::Train,
        "fixture",
    )
    .unwrap();
    g.intern_relation(":hasMother");
    g.intern_relation(":isFriend");
    g.load_descriptions_str(
        ":IronMan\tIron Man\n:PepperPotts\tPepper Potts\n:MongenStark\tMorgan Stark\n:hasWife\thas wife\n:hasFather\thas father\n:hasMother\thas mother\n:isEnemy\tis enemy of\n:isFriend\tis friend of\n",
        "fixture",
    )
    .unwrap();
    let (onto, report) = parse_ontology_str(
        concat!(
            ":IronMan rdf:type :Person .\n",
            ":PepperPotts rdf:type :Women .\n",
            ":Women rdfs:subClassOf :Person .\n",
            ":hasWife rdfs:domain :Person .\n",
            ":hasWife rdfs:range :Person .\n",
            ":hasMother composedOf :hasFather o :hasWife .\n",
            ":isEnemy owl:propertyDisjointWith :isFriend .\n",
        ),
        &g,
        "fixture",
    )
    .unwrap();
    assert!(report.skipped.is_empty());

    let closure = subclass_closure(&onto).unwrap();
    let templates = TemplateDictionary::default();
    let triples = [
        (":IronMan", ":hasWife", ":PepperPotts"),
        (":MongenStark", ":hasMother", ":PepperPotts"),
        (":IronMan", ":isFriend", ":Thanos"),
    ];
    let mut out = String::new();
    for (h, r, t) in triples {
        let triple = Triple::new(
            g.resolve_entity(h).unwrap(),
            g.resolve_relation(r).unwrap(),
            g.resolve_entity(t).unwrap(),
        );
        let bundle = prompt_for_triple(
            DEFAULT_INSTRUCTION,
            triple,
            &g,
            &onto,
            &closure,
            &templates,
            PromptOptions::default(),
        );
        out.push_str(&serde_json::to_string(&bundle).unwrap());
        out.push('\n');
    }
    out
}

/// Runs `cases` random relevance-selection comparisons against a direct scan
/// of the relevance predicate. Returns the number of mismatches.
pub fn selector_brute_force_mismatches(cases: usize) -> usize {
    use kgc_core::ontology::subclass_closure;
    use kgc_core::synth::random_reasoner_instance;
    use kgc_core::util::rng::Rng;
    use kgc_core::verbalizer::select_relevant;

    let mut mismatches = 0;
    let mut done = 0;
    let mut seed = 0u64;
    while done < cases {
        let (graph, ontology) = random_reasoner_instance(seed).unwrap();
        let closure = subclass_closure(&ontology).unwrap();
        let mut rng = Rng::seed_from(seed ^ 0x5E1EC7);
        for _ in 0..10 {
            if done >= cases {
                break;
            }
            let triple = Triple::new(
                kgc_core::EntityId::from_index(rng.below(graph.entity_count())),
                kgc_core::RelationId::from_index(rng.below(graph.relation_count())),
                kgc_core::EntityId::from_index(rng.below(graph.entity_count())),
            );
            let fast: BTreeSet<OntologyAxiom> =
                select_relevant(&ontology, &closure, triple, &graph)
                    .into_iter()
                    .collect();
            let relations = ontology.equivalence_closure(triple.relation);
            let mut classes = BTreeSet::new();
            for e in [triple.head, triple.tail] {
                for asserted in ontology.classes_of(e) {
                    let mut reach = BTreeSet::from([asserted]);
                    loop {
                        let before = reach.len();
                        for (sub, sup) in ontology.subclass_edges() {
                            if reach.contains(&sub) {
                                reach.insert(sup);
                            }
                        }
                        if reach.len() == before {
                            break;
                        }
                    }
                    classes.extend(reach);
                }
            }
            let slow: BTreeSet<OntologyAxiom> = ontology
                .axioms()
                .into_iter()
                .filter(|a| match *a {
                    OntologyAxiom::ClassAssertion { entity, class } => {
                        entity == triple.head
                            || entity == triple.tail
                            || classes.contains(&class)
                    }
                    OntologyAxiom::SubClassOf { sub, sup } => {
                        classes.contains(&sub) || classes.contains(&sup)
                    }
                    OntologyAxiom::Domain { relation, class }
                    | OntologyAxiom::Range { relation, class } => {
                        relations.contains(&relation) || classes.contains(&class)
                    }
                    OntologyAxiom::Composition {
                        result,
                        first,
                        second,
                    } => {
                        relations.contains(&result)
                            || relations.contains(&first)
                            || relations.contains(&second)
                    }
                    OntologyAxiom::EquivalentProperty { a, b }
                    | OntologyAxiom::DisjointProperty { a, b } => {
                        relations.contains(&a) || relations.contains(&b)
                    }
                })
                .collect();
            if fast != slow {
                mismatches += 1;
            }
            done += 1;
        }
        seed += 1;
    }
    mismatches
}
