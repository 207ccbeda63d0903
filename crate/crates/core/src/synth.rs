//! Seed-deterministic synthetic benchmarks.
//!
//! Three generators back the test suites: a typed graph whose negatives
//! contain planted domain/range and disjointness violations (detectable only
//! through the ontology), random graph/ontology instances for oracle
//! equivalence checks, and a composition-rule graph whose planted rule is
//! the only one a miner can find.

use crate::error::Result;
use crate::kg::{EntityId, KnowledgeGraph, LabeledTriple, RelationId, Split, Triple};
use crate::ontology::{Ontology, OntologyAxiom};
use crate::util::rng::Rng;

/// Sizing for [`violation_benchmark`].
#[derive(Debug, Clone, Copy)]
pub struct ViolationBenchmarkConfig {
    pub entities_per_class: usize,
    pub triples_per_relation: usize,
    /// Fraction of negatives that violate an axiom (the rest are benign
    /// same-class corruptions).
    pub violation_rate: f64,
}

impl Default for ViolationBenchmarkConfig {
    fn default() -> Self {
        ViolationBenchmarkConfig {
            entities_per_class: 15,
            triples_per_relation: 40,
            violation_rate: 0.5,
        }
    }
}

/// A generated benchmark with labeled splits.
pub struct ViolationBenchmark {
    pub graph: KnowledgeGraph,
    pub ontology: Ontology,
    pub train: Vec<LabeledTriple>,
    pub valid: Vec<LabeledTriple>,
    pub test: Vec<LabeledTriple>,
}

const CLASS_COUNT: usize = 4;
// Relation signatures: (domain class, range class). The last two mirror the
// first two so disjoint swaps stay type-consistent.
const REL_SIGNATURES: [(usize, usize); 6] = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 1), (1, 2)];
// Disjoint pairs: relation index -> partner.
const DISJOINT: [(usize, usize); 2] = [(0, 4), (1, 5)];

/// Builds a typed graph with positives obeying every axiom and negatives
/// split between axiom-violating and benign corruptions.
///
/// Violating negatives are either a wrong-class tail (range violation) or a
/// relation swap onto a disjoint partner of an existing triple; benign
/// negatives corrupt the tail within the correct class. Only the ontology
/// separates the violating kind from test positives.
pub fn violation_benchmark(config: ViolationBenchmarkConfig, seed: u64) -> Result<ViolationBenchmark> {
    let mut rng = Rng::seed_from(seed);
    let mut graph = KnowledgeGraph::new();

    let mut class_members: Vec<Vec<EntityId>> = vec![Vec::new(); CLASS_COUNT];
    for (c, members) in class_members.iter_mut().enumerate() {
        for i in 0..config.entities_per_class {
            members.push(graph.intern_entity(&format!("e_{c}_{i}")));
        }
    }
    let relations: Vec<RelationId> = (0..REL_SIGNATURES.len())
        .map(|i| graph.intern_relation(&format!("rel{i}")))
        .collect();

    let mut ontology = Ontology::new();
    let classes: Vec<_> = (0..CLASS_COUNT)
        .map(|c| ontology.intern_class(&format!(":C{c}")))
        .collect();
    for (c, members) in class_members.iter().enumerate() {
        for &e in members {
            ontology.add_axiom(
                OntologyAxiom::ClassAssertion {
                    entity: e,
                    class: classes[c],
                },
                &graph,
            )?;
        }
    }
    for (r, &(dom, rng_class)) in REL_SIGNATURES.iter().enumerate() {
        ontology.add_axiom(
            OntologyAxiom::Domain {
                relation: relations[r],
                class: classes[dom],
            },
            &graph,
        )?;
        ontology.add_axiom(
            OntologyAxiom::Range {
                relation: relations[r],
                class: classes[rng_class],
            },
            &graph,
        )?;
    }
    for &(a, b) in &DISJOINT {
        ontology.add_axiom(
            OntologyAxiom::DisjointProperty {
                a: relations[a],
                b: relations[b],
            },
            &graph,
        )?;
    }

    let disjoint_partner = |r: usize| -> Option<usize> {
        DISJOINT
            .iter()
            .find_map(|&(a, b)| match r {
                _ if r == a => Some(b),
                _ if r == b => Some(a),
                _ => None,
            })
    };

    // Positives respecting domain/range, consistent with disjointness, split
    // 70/15/15 per relation.
    let mut positives_per_relation: Vec<Vec<Triple>> = Vec::new();
    for (r, &(dom, rng_class)) in REL_SIGNATURES.iter().enumerate() {
        let mut chosen = Vec::new();
        let mut attempts = 0;
        while chosen.len() < config.triples_per_relation && attempts < 10_000 {
            attempts += 1;
            let h = class_members[dom][rng.below(config.entities_per_class)];
            let t = class_members[rng_class][rng.below(config.entities_per_class)];
            let triple = Triple::new(h, relations[r], t);
            if h == t || graph.contains_anywhere(triple) {
                continue;
            }
            // A positive whose disjoint partner also holds would make the
            // gold label contradict the ontology.
            if let Some(p) = disjoint_partner(r) {
                if graph.contains_anywhere(Triple::new(h, relations[p], t)) {
                    continue;
                }
            }
            let split = match chosen.len() % 20 {
                0..=13 => Split::Train,
                14..=16 => Split::Valid,
                _ => Split::Test,
            };
            graph.add_triple(split, triple)?;
            chosen.push(triple);
        }
        positives_per_relation.push(chosen);
    }

    // One negative per positive.
    let make_negatives = |split: Split, rng: &mut Rng| -> Result<Vec<LabeledTriple>> {
        let mut out = Vec::new();
        let positives: Vec<Triple> = graph.triples(split).collect();
        for &pos in &positives {
            out.push(LabeledTriple {
                triple: pos,
                label: true,
            });
            let r = pos.relation.index();
            let (_, rng_class) = REL_SIGNATURES[r];
            let mut negative = None;
            for _ in 0..200 {
                let violating = rng.chance(config.violation_rate);
                let candidate = if violating {
                    let partner = disjoint_partner(r);
                    if let (Some(p), true) = (partner, rng.bool()) {
                        // Disjoint swap: same pair under the disjoint
                        // partner relation.
                        Triple::new(pos.head, relations[p], pos.tail)
                    } else {
                        // Range violation: a tail of the wrong class.
                        let wrong_class = (rng_class + 1 + rng.below(CLASS_COUNT - 1)) % CLASS_COUNT;
                        let t = class_members[wrong_class][rng.below(config.entities_per_class)];
                        Triple::new(pos.head, pos.relation, t)
                    }
                } else {
                    // Benign: a different tail of the correct class.
                    let t = class_members[rng_class][rng.below(config.entities_per_class)];
                    let candidate = Triple::new(pos.head, pos.relation, t);
                    if let Some(p) = disjoint_partner(r) {
                        // Keep benign negatives clean of disjointness too.
                        if graph.contains_anywhere(Triple::new(
                            candidate.head,
                            relations[p],
                            candidate.tail,
                        )) {
                            continue;
                        }
                    }
                    candidate
                };
                if candidate.head != candidate.tail && !graph.contains_anywhere(candidate) {
                    negative = Some(candidate);
                    break;
                }
            }
            if let Some(n) = negative {
                out.push(LabeledTriple {
                    triple: n,
                    label: false,
                });
            }
        }
        Ok(out)
    };

    let train = make_negatives(Split::Train, &mut rng)?;
    let valid = make_negatives(Split::Valid, &mut rng)?;
    let test = make_negatives(Split::Test, &mut rng)?;

    Ok(ViolationBenchmark {
        graph,
        ontology,
        train,
        valid,
        test,
    })
}

/// A random graph/ontology pair within the oracle-equivalence envelope
/// (at most 50 entities, 8 relations, 30 axioms).
pub fn random_reasoner_instance(seed: u64) -> Result<(KnowledgeGraph, Ontology)> {
    let mut rng = Rng::seed_from(seed);
    let n_entities = 10 + rng.below(41);
    let n_relations = 2 + rng.below(7);
    let n_triples = 20 + rng.below(101);

    let mut graph = KnowledgeGraph::new();
    let entities: Vec<EntityId> = (0..n_entities)
        .map(|i| graph.intern_entity(&format!("e{i}")))
        .collect();
    let relations: Vec<RelationId> = (0..n_relations)
        .map(|i| graph.intern_relation(&format!("r{i}")))
        .collect();
    for _ in 0..n_triples {
        let t = Triple::new(
            entities[rng.below(n_entities)],
            relations[rng.below(n_relations)],
            entities[rng.below(n_entities)],
        );
        if !graph.contains_anywhere(t) {
            graph.add_triple(Split::Train, t)?;
        }
    }

    let mut ontology = Ontology::new();
    let n_classes = 3 + rng.below(4);
    let classes: Vec<_> = (0..n_classes)
        .map(|i| ontology.intern_class(&format!(":K{i}")))
        .collect();
    let budget = 8 + rng.below(23);
    // Equivalences live on the front half of the relation list and
    // disjointness on pairs straddling the halves, so the two never
    // contradict even through chains.
    let half = n_relations / 2;
    for _ in 0..budget {
        let axiom = match rng.below(10) {
            0..=3 => OntologyAxiom::ClassAssertion {
                entity: entities[rng.below(n_entities)],
                class: classes[rng.below(n_classes)],
            },
            4 => {
                if n_classes < 2 {
                    continue;
                }
                let sub = rng.below(n_classes - 1);
                let sup = sub + 1 + rng.below(n_classes - sub - 1);
                OntologyAxiom::SubClassOf {
                    sub: classes[sub],
                    sup: classes[sup],
                }
            }
            5 => OntologyAxiom::Domain {
                relation: relations[rng.below(n_relations)],
                class: classes[rng.below(n_classes)],
            },
            6 => OntologyAxiom::Range {
                relation: relations[rng.below(n_relations)],
                class: classes[rng.below(n_classes)],
            },
            7..=8 => OntologyAxiom::Composition {
                result: relations[rng.below(n_relations)],
                first: relations[rng.below(n_relations)],
                second: relations[rng.below(n_relations)],
            },
            _ => {
                if half >= 2 && rng.bool() {
                    OntologyAxiom::EquivalentProperty {
                        a: relations[rng.below(half)],
                        b: relations[rng.below(half)],
                    }
                } else if half >= 1 && n_relations > half {
                    OntologyAxiom::DisjointProperty {
                        a: relations[rng.below(half)],
                        b: relations[half + rng.below(n_relations - half)],
                    }
                } else {
                    continue;
                }
            }
        };
        // Disjointness on the same pair as an equivalence is rejected by the
        // store; the partition above prevents it, but skip defensively for
        // degenerate relation counts.
        if ontology.add_axiom(axiom, &graph).is_err() {
            continue;
        }
    }
    Ok((graph, ontology))
}

/// A graph carrying exactly one discoverable composition rule.
pub struct PlantedComposition {
    pub graph: KnowledgeGraph,
    pub result: RelationId,
    pub first: RelationId,
    pub second: RelationId,
    /// Number of (x, z) pairs witnessing the rule.
    pub path_pairs: usize,
}

/// Three disjoint entity layers A, B, C with `first ⊆ A×B`, `second ⊆ B×C`,
/// and `result` holding exactly the composed pairs. Because no other
/// relation pair composes (the layers are disjoint), the planted rule is the
/// only one with any path support.
pub fn planted_composition_graph(seed: u64) -> Result<PlantedComposition> {
    let mut rng = Rng::seed_from(seed);
    let layer = 6 + rng.below(3);
    let mut graph = KnowledgeGraph::new();
    let a: Vec<EntityId> = (0..layer).map(|i| graph.intern_entity(&format!("a{i}"))).collect();
    let b: Vec<EntityId> = (0..layer).map(|i| graph.intern_entity(&format!("b{i}"))).collect();
    let c: Vec<EntityId> = (0..layer).map(|i| graph.intern_entity(&format!("c{i}"))).collect();
    let first = graph.intern_relation("first");
    let second = graph.intern_relation("second");
    let result = graph.intern_relation("result");

    // A spine guarantees enough path pairs; extra random edges add variety.
    for i in 0..layer {
        graph.add_triple(Split::Train, Triple::new(a[i], first, b[i]))?;
        graph.add_triple(Split::Train, Triple::new(b[i], second, c[i]))?;
    }
    for _ in 0..layer {
        let t = Triple::new(a[rng.below(layer)], first, b[rng.below(layer)]);
        if !graph.contains_anywhere(t) {
            graph.add_triple(Split::Train, t)?;
        }
        let t = Triple::new(b[rng.below(layer)], second, c[rng.below(layer)]);
        if !graph.contains_anywhere(t) {
            graph.add_triple(Split::Train, t)?;
        }
    }
    // Close the rule: result holds for every composed pair.
    let first_pairs: Vec<(EntityId, EntityId)> = graph
        .triples(Split::Train)
        .filter(|t| t.relation == first)
        .map(|t| (t.head, t.tail))
        .collect();
    let second_pairs: Vec<(EntityId, EntityId)> = graph
        .triples(Split::Train)
        .filter(|t| t.relation == second)
        .map(|t| (t.head, t.tail))
        .collect();
    let mut path_pairs = std::collections::BTreeSet::new();
    for &(x, y) in &first_pairs {
        for &(y2, z) in &second_pairs {
            if y == y2 {
                path_pairs.insert((x, z));
            }
        }
    }
    for &(x, z) in &path_pairs {
        let t = Triple::new(x, result, z);
        if !graph.contains_anywhere(t) {
            graph.add_triple(Split::Train, t)?;
        }
    }
    Ok(PlantedComposition {
        graph,
        result,
        first,
        second,
        path_pairs: path_pairs.len(),
    })
}
