//! Symbolic verdicts and inference over a graph plus ontology.
//!
//! Three mechanisms: domain/range checking against asserted classes and the
//! subclass closure, composition materialization to a fixpoint, and
//! equivalence expansion; disjointness is consulted at query time against the
//! expanded triple set rather than used to delete anything.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId, Triple};
use crate::ontology::{subclass_closure, ClassId, ClosureMap, Ontology, OntologyAxiom};

/// Outcome of a symbolic check.
///
/// `Unknown` is reserved for the case where applicable axioms exist but the
/// entity carries no class information; open-world semantics forbid treating
/// a missing class assertion as a violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Violated(Vec<OntologyAxiom>),
    Unknown,
}

impl Verdict {
    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated(_))
    }

    pub fn is_satisfied(&self) -> bool {
        matches!(self, Verdict::Satisfied)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated(_) => "violated",
            Verdict::Unknown => "unknown",
        }
    }

    /// Violated dominates (violated axioms are unioned), then Unknown,
    /// then Satisfied.
    pub fn combine(parts: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut violated: BTreeSet<OntologyAxiom> = BTreeSet::new();
        let mut any_violated = false;
        let mut any_unknown = false;
        for part in parts {
            match part {
                Verdict::Violated(axioms) => {
                    any_violated = true;
                    violated.extend(axioms);
                }
                Verdict::Unknown => any_unknown = true,
                Verdict::Satisfied => {}
            }
        }
        if any_violated {
            Verdict::Violated(violated.into_iter().collect())
        } else if any_unknown {
            Verdict::Unknown
        } else {
            Verdict::Satisfied
        }
    }
}

/// One inferred triple with its producing axiom and premise triples.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct InferenceRecord {
    pub inferred: Triple,
    pub axiom: OntologyAxiom,
    pub premises: Vec<Triple>,
}

/// Limits for the materialization fixpoint.
#[derive(Debug, Clone, Copy)]
pub struct ReasonerConfig {
    /// Maximum fixpoint rounds before reporting failure to converge.
    pub round_limit: usize,
}

impl Default for ReasonerConfig {
    fn default() -> Self {
        ReasonerConfig { round_limit: 10 }
    }
}

/// Checks the domain and range axioms of a triple's relation.
///
/// For every `Domain(r, c)` the head must have some asserted class whose
/// closure contains `c` (and symmetrically for `Range`). An entity with
/// class assertions that never reach `c` violates the axiom; an entity with
/// no class assertions at all leaves it unknown.
pub fn check_domain_range(ontology: &Ontology, closure: &ClosureMap, triple: Triple) -> Verdict {
    let mut parts = Vec::new();
    for class in ontology.domains_of(triple.relation) {
        parts.push(check_entity_against(
            ontology,
            closure,
            triple.head,
            class,
            OntologyAxiom::Domain {
                relation: triple.relation,
                class,
            },
        ));
    }
    for class in ontology.ranges_of(triple.relation) {
        parts.push(check_entity_against(
            ontology,
            closure,
            triple.tail,
            class,
            OntologyAxiom::Range {
                relation: triple.relation,
                class,
            },
        ));
    }
    Verdict::combine(parts)
}

fn check_entity_against(
    ontology: &Ontology,
    closure: &ClosureMap,
    entity: EntityId,
    required: ClassId,
    axiom: OntologyAxiom,
) -> Verdict {
    let mut any_class = false;
    for asserted in ontology.classes_of(entity) {
        any_class = true;
        if closure.contains(asserted, required) {
            return Verdict::Satisfied;
        }
    }
    if any_class {
        Verdict::Violated(vec![axiom])
    } else {
        Verdict::Unknown
    }
}

/// Which rule families an inference run applies.
#[derive(Debug, Clone, Copy)]
struct RuleSet {
    compositions: bool,
    equivalences: bool,
}

/// Semi-naive fixpoint over the selected rule families.
///
/// Each round joins only against the previous round's delta; candidate
/// derivations are collected per round and the lexicographically smallest
/// derivation of each new triple is recorded, which makes the output
/// independent of index iteration order.
fn run_inference(
    base: impl Iterator<Item = Triple>,
    ontology: &Ontology,
    rules: RuleSet,
    round_limit: usize,
) -> Result<Vec<InferenceRecord>> {
    // (relation, head) -> tails and (relation, tail) -> heads over everything
    // known so far.
    let mut by_head: HashMap<(RelationId, EntityId), BTreeSet<EntityId>> = HashMap::new();
    let mut by_tail: HashMap<(RelationId, EntityId), BTreeSet<EntityId>> = HashMap::new();
    let mut known: HashSet<Triple> = HashSet::new();
    let mut delta: Vec<Triple> = Vec::new();

    let index = |t: Triple,
                 by_head: &mut HashMap<(RelationId, EntityId), BTreeSet<EntityId>>,
                 by_tail: &mut HashMap<(RelationId, EntityId), BTreeSet<EntityId>>| {
        by_head.entry((t.relation, t.head)).or_default().insert(t.tail);
        by_tail.entry((t.relation, t.tail)).or_default().insert(t.head);
    };

    for t in base {
        if known.insert(t) {
            index(t, &mut by_head, &mut by_tail);
            delta.push(t);
        }
    }
    delta.sort();

    let comp_by_first: BTreeMap<RelationId, Vec<(RelationId, RelationId)>> = {
        let mut m: BTreeMap<RelationId, Vec<(RelationId, RelationId)>> = BTreeMap::new();
        if rules.compositions {
            for (result, first, second) in ontology.compositions() {
                m.entry(first).or_default().push((result, second));
            }
        }
        m
    };
    let comp_by_second: BTreeMap<RelationId, Vec<(RelationId, RelationId)>> = {
        let mut m: BTreeMap<RelationId, Vec<(RelationId, RelationId)>> = BTreeMap::new();
        if rules.compositions {
            for (result, first, second) in ontology.compositions() {
                m.entry(second).or_default().push((result, first));
            }
        }
        m
    };

    let mut records: Vec<InferenceRecord> = Vec::new();
    let mut rounds = 0usize;
    while !delta.is_empty() {
        if rounds >= round_limit {
            return Err(Error::RoundLimit { limit: round_limit });
        }
        rounds += 1;
        // Smallest derivation per candidate triple this round.
        let mut candidates: BTreeMap<Triple, (OntologyAxiom, Vec<Triple>)> = BTreeMap::new();
        let propose = |triple: Triple,
                           axiom: OntologyAxiom,
                           premises: Vec<Triple>,
                           known: &HashSet<Triple>,
                           candidates: &mut BTreeMap<Triple, (OntologyAxiom, Vec<Triple>)>| {
            if known.contains(&triple) {
                return;
            }
            let derivation = (axiom, premises);
            match candidates.get_mut(&triple) {
                Some(existing) => {
                    if derivation < *existing {
                        *existing = derivation;
                    }
                }
                None => {
                    candidates.insert(triple, derivation);
                }
            }
        };

        for &t in &delta {
            if rules.equivalences {
                for partner in ontology.equivalence_closure(t.relation) {
                    if partner == t.relation {
                        continue;
                    }
                    // Record the direct axiom when one exists; chains are
                    // reached step by step through the fixpoint as well, but
                    // closing over the full equivalence class here keeps the
                    // round count independent of chain length.
                    if ontology.are_equivalent(t.relation, partner) {
                        propose(
                            Triple::new(t.head, partner, t.tail),
                            OntologyAxiom::EquivalentProperty {
                                a: t.relation.min(partner),
                                b: t.relation.max(partner),
                            },
                            vec![t],
                            &known,
                            &mut candidates,
                        );
                    }
                }
            }
            if rules.compositions {
                // t as the first premise: (x, r1, y) joined with (y, r2, z).
                if let Some(rules_here) = comp_by_first.get(&t.relation) {
                    for &(result, second) in rules_here {
                        if let Some(tails) = by_head.get(&(second, t.tail)) {
                            for &z in tails {
                                propose(
                                    Triple::new(t.head, result, z),
                                    OntologyAxiom::Composition {
                                        result,
                                        first: t.relation,
                                        second,
                                    },
                                    vec![t, Triple::new(t.tail, second, z)],
                                    &known,
                                    &mut candidates,
                                );
                            }
                        }
                    }
                }
                // t as the second premise.
                if let Some(rules_here) = comp_by_second.get(&t.relation) {
                    for &(result, first) in rules_here {
                        if let Some(heads) = by_tail.get(&(first, t.head)) {
                            for &x in heads {
                                propose(
                                    Triple::new(x, result, t.tail),
                                    OntologyAxiom::Composition {
                                        result,
                                        first,
                                        second: t.relation,
                                    },
                                    vec![Triple::new(x, first, t.head), t],
                                    &known,
                                    &mut candidates,
                                );
                            }
                        }
                    }
                }
            }
        }

        delta = Vec::with_capacity(candidates.len());
        for (triple, (axiom, premises)) in candidates {
            known.insert(triple);
            index(triple, &mut by_head, &mut by_tail);
            delta.push(triple);
            records.push(InferenceRecord {
                inferred: triple,
                axiom,
                premises,
            });
        }
    }
    records.sort();
    Ok(records)
}

/// Materializes all triples derivable through composition axioms.
///
/// Runs a semi-naive fixpoint over base and previously inferred triples and
/// errors if the fixpoint is not reached within the configured round limit.
pub fn materialize_compositions(
    graph: &KnowledgeGraph,
    ontology: &Ontology,
    config: ReasonerConfig,
) -> Result<Vec<InferenceRecord>> {
    run_inference(
        graph.all_triples(),
        ontology,
        RuleSet {
            compositions: true,
            equivalences: false,
        },
        config.round_limit,
    )
}

/// Expands every triple along equivalence axioms, closed under chains.
pub fn expand_equivalences(graph: &KnowledgeGraph, ontology: &Ontology) -> Vec<InferenceRecord> {
    run_inference(
        graph.all_triples(),
        ontology,
        RuleSet {
            compositions: false,
            equivalences: true,
        },
        usize::MAX,
    )
    .expect("equivalence expansion always reaches a fixpoint")
}

/// Precomputed reasoning state: subclass closure plus the triple set closed
/// under equivalence expansion and composition materialization.
///
/// All checks are read-only; a `Reasoner` can be shared across threads.
pub struct Reasoner<'g> {
    graph: &'g KnowledgeGraph,
    ontology: &'g Ontology,
    closure: ClosureMap,
    extended: HashSet<Triple>,
    inferences: Vec<InferenceRecord>,
}

impl<'g> Reasoner<'g> {
    /// Computes the subclass closure and the joint inference fixpoint.
    pub fn new(
        graph: &'g KnowledgeGraph,
        ontology: &'g Ontology,
        config: ReasonerConfig,
    ) -> Result<Self> {
        let closure = subclass_closure(ontology)?;
        let inferences = run_inference(
            graph.all_triples(),
            ontology,
            RuleSet {
                compositions: true,
                equivalences: true,
            },
            config.round_limit,
        )?;
        let mut extended: HashSet<Triple> = graph.all_triples().collect();
        extended.extend(inferences.iter().map(|r| r.inferred));
        Ok(Reasoner {
            graph,
            ontology,
            closure,
            extended,
            inferences,
        })
    }

    pub fn graph(&self) -> &KnowledgeGraph {
        self.graph
    }

    pub fn ontology(&self) -> &Ontology {
        self.ontology
    }

    pub fn closure(&self) -> &ClosureMap {
        &self.closure
    }

    /// Triples inferred by the joint equivalence/composition fixpoint.
    pub fn inferences(&self) -> &[InferenceRecord] {
        &self.inferences
    }

    /// Whether a triple holds in the base or inferred triple set.
    pub fn holds(&self, triple: Triple) -> bool {
        self.extended.contains(&triple)
    }

    pub fn check_domain_range(&self, triple: Triple) -> Verdict {
        check_domain_range(self.ontology, &self.closure, triple)
    }

    /// Violated iff some relation disjoint with the triple's relation (or
    /// with an equivalent of it) links the same pair in the expanded graph.
    pub fn check_disjointness(&self, triple: Triple) -> Verdict {
        let mut violated: BTreeSet<OntologyAxiom> = BTreeSet::new();
        for variant in self.ontology.equivalence_closure(triple.relation) {
            for (a, b) in self.ontology.disjoint_pairs() {
                let partner = if a == variant {
                    b
                } else if b == variant {
                    a
                } else {
                    continue;
                };
                if self
                    .extended
                    .contains(&Triple::new(triple.head, partner, triple.tail))
                {
                    violated.insert(OntologyAxiom::DisjointProperty { a, b });
                }
            }
        }
        if violated.is_empty() {
            Verdict::Satisfied
        } else {
            Verdict::Violated(violated.into_iter().collect())
        }
    }

    /// Conjunction of all symbolic checks.
    pub fn symbolic_verdict(&self, triple: Triple) -> Verdict {
        Verdict::combine([self.check_domain_range(triple), self.check_disjointness(triple)])
    }
}

/// One-shot disjointness check; builds the expanded triple set internally.
/// Construct a [`Reasoner`] once instead when checking many triples.
pub fn check_disjointness(
    graph: &KnowledgeGraph,
    ontology: &Ontology,
    triple: Triple,
    config: ReasonerConfig,
) -> Result<Verdict> {
    Ok(Reasoner::new(graph, ontology, config)?.check_disjointness(triple))
}

/// One-shot symbolic verdict; see [`Reasoner::symbolic_verdict`].
pub fn symbolic_verdict(
    graph: &KnowledgeGraph,
    ontology: &Ontology,
    triple: Triple,
    config: ReasonerConfig,
) -> Result<Verdict> {
    Ok(Reasoner::new(graph, ontology, config)?.symbolic_verdict(triple))
}
