//! Typed ontology axioms, their on-disk line format, and class-hierarchy
//! closure.
//!
//! The on-disk format is a line-oriented N-Triples-like subset:
//!
//! ```text
//! :IronMan rdf:type :Person .
//! :Women rdfs:subClassOf :Person .
//! :hasWife rdfs:domain :Person .
//! :hasWife rdfs:range :Person .
//! :hasMother composedOf :hasFather o :hasWife .
//! :allyOf owl:equivalentProperty :isFriend .
//! :isEnemy owl:propertyDisjointWith :isFriend .
//! ```
//!
//! `rdfs:subPropertyOf` with an `r1 o r2` object is accepted as an alternate
//! spelling of `composedOf`. Serialization is byte-deterministic: axioms are
//! emitted grouped by kind and sorted by symbol, so equal axiom sets produce
//! identical files.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId};
use crate::util::Interner;

/// Dense index of a class within one class table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(u32);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Interned class symbols, shared between an [`Ontology`] and the candidate
/// pool feeding it.
#[derive(Debug, Clone, Default)]
pub struct ClassTable {
    inner: Interner,
}

impl ClassTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, symbol: &str) -> ClassId {
        ClassId(self.inner.intern(symbol))
    }

    pub fn resolve(&self, symbol: &str) -> Option<ClassId> {
        self.inner.resolve(symbol).map(ClassId)
    }

    pub fn symbol(&self, id: ClassId) -> &str {
        self.inner.symbol(id.0)
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }
}

/// One ontological statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OntologyAxiom {
    /// `entity rdf:type class`
    ClassAssertion { entity: EntityId, class: ClassId },
    /// `sub rdfs:subClassOf sup`
    SubClassOf { sub: ClassId, sup: ClassId },
    /// The head of `relation` must belong to `class`.
    Domain { relation: RelationId, class: ClassId },
    /// The tail of `relation` must belong to `class`.
    Range { relation: RelationId, class: ClassId },
    /// `result(x,z)` holds whenever `first(x,y)` and `second(y,z)` hold.
    Composition {
        result: RelationId,
        first: RelationId,
        second: RelationId,
    },
    /// The two relations hold for exactly the same pairs.
    EquivalentProperty { a: RelationId, b: RelationId },
    /// The two relations can never hold for the same pair.
    DisjointProperty { a: RelationId, b: RelationId },
}

/// Discriminant of [`OntologyAxiom`], also used as the template key in the
/// verbalizer and the grouping key in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AxiomTag {
    ClassAssertion,
    SubClassOf,
    Domain,
    Range,
    Composition,
    EquivalentProperty,
    DisjointProperty,
}

impl AxiomTag {
    pub const ALL: [AxiomTag; 7] = [
        AxiomTag::ClassAssertion,
        AxiomTag::SubClassOf,
        AxiomTag::Domain,
        AxiomTag::Range,
        AxiomTag::Composition,
        AxiomTag::EquivalentProperty,
        AxiomTag::DisjointProperty,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AxiomTag::ClassAssertion => "class-assertion",
            AxiomTag::SubClassOf => "subclass",
            AxiomTag::Domain => "domain",
            AxiomTag::Range => "range",
            AxiomTag::Composition => "composition",
            AxiomTag::EquivalentProperty => "equivalent",
            AxiomTag::DisjointProperty => "disjoint",
        }
    }
}

impl std::str::FromStr for AxiomTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        AxiomTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown axiom tag `{s}`")))
    }
}

impl fmt::Display for AxiomTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl OntologyAxiom {
    pub fn tag(&self) -> AxiomTag {
        match self {
            OntologyAxiom::ClassAssertion { .. } => AxiomTag::ClassAssertion,
            OntologyAxiom::SubClassOf { .. } => AxiomTag::SubClassOf,
            OntologyAxiom::Domain { .. } => AxiomTag::Domain,
            OntologyAxiom::Range { .. } => AxiomTag::Range,
            OntologyAxiom::Composition { .. } => AxiomTag::Composition,
            OntologyAxiom::EquivalentProperty { .. } => AxiomTag::EquivalentProperty,
            OntologyAxiom::DisjointProperty { .. } => AxiomTag::DisjointProperty,
        }
    }
}

/// Axiom set with per-kind storage, symmetric storage for equivalence and
/// disjointness, and an interned class table.
#[derive(Debug, Clone, Default)]
pub struct Ontology {
    classes: ClassTable,
    class_assertions: BTreeSet<(EntityId, ClassId)>,
    subclass: BTreeSet<(ClassId, ClassId)>,
    domain: BTreeSet<(RelationId, ClassId)>,
    range: BTreeSet<(RelationId, ClassId)>,
    compositions: BTreeSet<(RelationId, RelationId, RelationId)>,
    // Unordered pairs stored canonically (min, max).
    equivalent: BTreeSet<(RelationId, RelationId)>,
    disjoint: BTreeSet<(RelationId, RelationId)>,
}

fn canonical_pair(a: RelationId, b: RelationId) -> (RelationId, RelationId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Ontology {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an empty ontology that shares an existing class table.
    pub fn with_classes(classes: ClassTable) -> Self {
        Ontology {
            classes,
            ..Ontology::default()
        }
    }

    pub fn classes(&self) -> &ClassTable {
        &self.classes
    }

    pub fn classes_mut(&mut self) -> &mut ClassTable {
        &mut self.classes
    }

    pub fn intern_class(&mut self, symbol: &str) -> ClassId {
        self.classes.intern(symbol)
    }

    pub fn resolve_class(&self, symbol: &str) -> Option<ClassId> {
        self.classes.resolve(symbol)
    }

    pub fn class_symbol(&self, id: ClassId) -> &str {
        self.classes.symbol(id)
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Inserts an axiom. Returns `false` if it was already present.
    ///
    /// Declaring the same relation pair both equivalent and disjoint is a
    /// load-time error so that downstream verdicts stay two-valued.
    pub fn add_axiom(&mut self, axiom: OntologyAxiom, graph: &KnowledgeGraph) -> Result<bool> {
        Ok(match axiom {
            OntologyAxiom::ClassAssertion { entity, class } => {
                self.class_assertions.insert((entity, class))
            }
            OntologyAxiom::SubClassOf { sub, sup } => self.subclass.insert((sub, sup)),
            OntologyAxiom::Domain { relation, class } => self.domain.insert((relation, class)),
            OntologyAxiom::Range { relation, class } => self.range.insert((relation, class)),
            OntologyAxiom::Composition {
                result,
                first,
                second,
            } => self.compositions.insert((result, first, second)),
            OntologyAxiom::EquivalentProperty { a, b } => {
                let pair = canonical_pair(a, b);
                if self.disjoint.contains(&pair) {
                    return Err(Error::Validation(format!(
                        "relations {} and {} declared both equivalent and disjoint",
                        graph.relation_symbol(pair.0),
                        graph.relation_symbol(pair.1)
                    )));
                }
                self.equivalent.insert(pair)
            }
            OntologyAxiom::DisjointProperty { a, b } => {
                let pair = canonical_pair(a, b);
                if self.equivalent.contains(&pair) {
                    return Err(Error::Validation(format!(
                        "relations {} and {} declared both equivalent and disjoint",
                        graph.relation_symbol(pair.0),
                        graph.relation_symbol(pair.1)
                    )));
                }
                self.disjoint.insert(pair)
            }
        })
    }

    pub fn len(&self) -> usize {
        self.class_assertions.len()
            + self.subclass.len()
            + self.domain.len()
            + self.range.len()
            + self.compositions.len()
            + self.equivalent.len()
            + self.disjoint.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tag_count(&self, tag: AxiomTag) -> usize {
        match tag {
            AxiomTag::ClassAssertion => self.class_assertions.len(),
            AxiomTag::SubClassOf => self.subclass.len(),
            AxiomTag::Domain => self.domain.len(),
            AxiomTag::Range => self.range.len(),
            AxiomTag::Composition => self.compositions.len(),
            AxiomTag::EquivalentProperty => self.equivalent.len(),
            AxiomTag::DisjointProperty => self.disjoint.len(),
        }
    }

    /// All axioms grouped by kind, id-sorted within each kind.
    pub fn axioms(&self) -> Vec<OntologyAxiom> {
        let mut out = Vec::with_capacity(self.len());
        out.extend(
            self.class_assertions
                .iter()
                .map(|&(entity, class)| OntologyAxiom::ClassAssertion { entity, class }),
        );
        out.extend(
            self.subclass
                .iter()
                .map(|&(sub, sup)| OntologyAxiom::SubClassOf { sub, sup }),
        );
        out.extend(
            self.domain
                .iter()
                .map(|&(relation, class)| OntologyAxiom::Domain { relation, class }),
        );
        out.extend(
            self.range
                .iter()
                .map(|&(relation, class)| OntologyAxiom::Range { relation, class }),
        );
        out.extend(
            self.compositions
                .iter()
                .map(|&(result, first, second)| OntologyAxiom::Composition {
                    result,
                    first,
                    second,
                }),
        );
        out.extend(
            self.equivalent
                .iter()
                .map(|&(a, b)| OntologyAxiom::EquivalentProperty { a, b }),
        );
        out.extend(
            self.disjoint
                .iter()
                .map(|&(a, b)| OntologyAxiom::DisjointProperty { a, b }),
        );
        out
    }

    /// Directly asserted classes of an entity.
    pub fn classes_of(&self, entity: EntityId) -> impl Iterator<Item = ClassId> + '_ {
        self.class_assertions
            .range((entity, ClassId(0))..=(entity, ClassId(u32::MAX)))
            .map(|&(_, c)| c)
    }

    pub fn domains_of(&self, relation: RelationId) -> impl Iterator<Item = ClassId> + '_ {
        self.domain
            .range((relation, ClassId(0))..=(relation, ClassId(u32::MAX)))
            .map(|&(_, c)| c)
    }

    pub fn ranges_of(&self, relation: RelationId) -> impl Iterator<Item = ClassId> + '_ {
        self.range
            .range((relation, ClassId(0))..=(relation, ClassId(u32::MAX)))
            .map(|&(_, c)| c)
    }

    pub fn compositions(&self) -> impl Iterator<Item = (RelationId, RelationId, RelationId)> + '_ {
        self.compositions.iter().copied()
    }

    pub fn subclass_edges(&self) -> impl Iterator<Item = (ClassId, ClassId)> + '_ {
        self.subclass.iter().copied()
    }

    pub fn equivalent_pairs(&self) -> impl Iterator<Item = (RelationId, RelationId)> + '_ {
        self.equivalent.iter().copied()
    }

    pub fn disjoint_pairs(&self) -> impl Iterator<Item = (RelationId, RelationId)> + '_ {
        self.disjoint.iter().copied()
    }

    /// Whether the pair is stored as equivalent, in either argument order.
    pub fn are_equivalent(&self, a: RelationId, b: RelationId) -> bool {
        self.equivalent.contains(&canonical_pair(a, b))
    }

    pub fn are_disjoint(&self, a: RelationId, b: RelationId) -> bool {
        self.disjoint.contains(&canonical_pair(a, b))
    }

    /// Relations reachable from `relation` through equivalence axioms,
    /// including itself.
    pub fn equivalence_closure(&self, relation: RelationId) -> BTreeSet<RelationId> {
        let mut closure = BTreeSet::from([relation]);
        let mut frontier = vec![relation];
        while let Some(r) = frontier.pop() {
            for &(a, b) in &self.equivalent {
                let partner = if a == r {
                    b
                } else if b == r {
                    a
                } else {
                    continue;
                };
                if closure.insert(partner) {
                    frontier.push(partner);
                }
            }
        }
        closure
    }

    /// Checks global invariants: the subclass graph must be acyclic.
    /// Pairwise equivalence/disjointness contradictions are already rejected
    /// by [`Ontology::add_axiom`].
    pub fn validate(&self) -> Result<()> {
        subclass_closure(self).map(|_| ())
    }
}

/// Reflexive-transitive superclass sets, one per class.
#[derive(Debug, Clone)]
pub struct ClosureMap {
    sets: Vec<BTreeSet<ClassId>>,
}

impl ClosureMap {
    /// All superclasses of `class`, including itself.
    pub fn superclasses(&self, class: ClassId) -> &BTreeSet<ClassId> {
        &self.sets[class.index()]
    }

    pub fn contains(&self, class: ClassId, ancestor: ClassId) -> bool {
        self.sets[class.index()].contains(&ancestor)
    }

    pub fn class_count(&self) -> usize {
        self.sets.len()
    }
}

/// Computes the reflexive-transitive closure of the subclass hierarchy.
///
/// A cycle is a hard error naming one offending path: the extraction
/// pipeline never emits cycles, so one indicates corrupt input.
pub fn subclass_closure(ontology: &Ontology) -> Result<ClosureMap> {
    let n = ontology.class_count();
    let mut sets: Vec<Option<BTreeSet<ClassId>>> = vec![None; n];
    let mut on_stack = vec![false; n];

    fn visit(
        c: usize,
        ontology: &Ontology,
        sets: &mut Vec<Option<BTreeSet<ClassId>>>,
        on_stack: &mut Vec<bool>,
        path: &mut Vec<usize>,
    ) -> Result<()> {
        if sets[c].is_some() {
            return Ok(());
        }
        if on_stack[c] {
            let start = path.iter().position(|&p| p == c).unwrap_or(0);
            let cycle: Vec<&str> = path[start..]
                .iter()
                .chain(std::iter::once(&c))
                .map(|&i| ontology.class_symbol(ClassId(i as u32)))
                .collect();
            return Err(Error::SubclassCycle(cycle.join(" -> ")));
        }
        on_stack[c] = true;
        path.push(c);
        let mut closure = BTreeSet::from([ClassId(c as u32)]);
        let supers: Vec<ClassId> = ontology
            .subclass_edges()
            .filter(|&(sub, _)| sub.index() == c)
            .map(|(_, sup)| sup)
            .collect();
        for sup in supers {
            visit(sup.index(), ontology, sets, on_stack, path)?;
            closure.extend(sets[sup.index()].as_ref().unwrap().iter().copied());
        }
        path.pop();
        on_stack[c] = false;
        sets[c] = Some(closure);
        Ok(())
    }

    let mut path = Vec::new();
    for c in 0..n {
        visit(c, ontology, &mut sets, &mut on_stack, &mut path)?;
    }
    Ok(ClosureMap {
        sets: sets.into_iter().map(Option::unwrap).collect(),
    })
}

/// Per-line diagnostic from a lenient parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineDiagnostic {
    pub line: usize,
    pub reason: String,
}

/// Summary of an ontology parse.
#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    /// Axioms accepted (including duplicates collapsed by set semantics).
    pub accepted: usize,
    /// Lines skipped with the reason (unknown predicate, unknown symbol, ...).
    pub skipped: Vec<LineDiagnostic>,
    /// Axiom count per kind, in [`AxiomTag::ALL`] order.
    pub tag_counts: [usize; 7],
}

pub(crate) enum LineOutcome {
    Axiom(OntologyAxiom),
    Skip(String),
    Malformed(String),
    Blank,
}

/// Parses one `subject predicate object [object2 object3] .` line.
///
/// Unknown predicates and unresolvable entity/relation symbols are soft
/// skips; a structurally broken line (fewer than three tokens) is malformed.
pub(crate) fn parse_axiom_line(
    line: &str,
    graph: &KnowledgeGraph,
    classes: &mut ClassTable,
) -> LineOutcome {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return LineOutcome::Blank;
    }
    let mut tokens: Vec<&str> = trimmed.split_whitespace().collect();
    if tokens.last() == Some(&".") {
        tokens.pop();
    }
    if tokens.len() < 3 {
        return LineOutcome::Malformed(format!(
            "expected `subject predicate object .`, got {} token(s)",
            tokens.len()
        ));
    }
    let subject = tokens[0];
    let predicate = tokens[1];
    let objects = &tokens[2..];

    let require_single = |objects: &[&str]| -> std::result::Result<(), String> {
        if objects.len() == 1 {
            Ok(())
        } else {
            Err(format!(
                "predicate {predicate} takes exactly one object, got {}",
                objects.len()
            ))
        }
    };
    let entity = |sym: &str| -> std::result::Result<EntityId, String> {
        graph
            .resolve_entity(sym)
            .ok_or_else(|| format!("unknown entity symbol {sym}"))
    };
    let relation = |sym: &str| -> std::result::Result<RelationId, String> {
        graph
            .resolve_relation(sym)
            .ok_or_else(|| format!("unknown relation symbol {sym}"))
    };

    let parsed: std::result::Result<OntologyAxiom, String> = match predicate {
        "rdf:type" => require_single(objects).and_then(|()| {
            Ok(OntologyAxiom::ClassAssertion {
                entity: entity(subject)?,
                class: classes.intern(objects[0]),
            })
        }),
        "rdfs:subClassOf" => require_single(objects).map(|()| OntologyAxiom::SubClassOf {
            sub: classes.intern(subject),
            sup: classes.intern(objects[0]),
        }),
        "rdfs:domain" => require_single(objects).and_then(|()| {
            Ok(OntologyAxiom::Domain {
                relation: relation(subject)?,
                class: classes.intern(objects[0]),
            })
        }),
        "rdfs:range" => require_single(objects).and_then(|()| {
            Ok(OntologyAxiom::Range {
                relation: relation(subject)?,
                class: classes.intern(objects[0]),
            })
        }),
        "composedOf" | "rdfs:subPropertyOf" => {
            if objects.len() == 3 && objects[1] == "o" {
                (|| {
                    Ok(OntologyAxiom::Composition {
                        result: relation(subject)?,
                        first: relation(objects[0])?,
                        second: relation(objects[2])?,
                    })
                })()
            } else {
                Err(format!(
                    "predicate {predicate} expects an `r1 o r2` object, got `{}`",
                    objects.join(" ")
                ))
            }
        }
        "owl:equivalentProperty" => require_single(objects).and_then(|()| {
            Ok(OntologyAxiom::EquivalentProperty {
                a: relation(subject)?,
                b: relation(objects[0])?,
            })
        }),
        "owl:propertyDisjointWith" => require_single(objects).and_then(|()| {
            Ok(OntologyAxiom::DisjointProperty {
                a: relation(subject)?,
                b: relation(objects[0])?,
            })
        }),
        other => Err(format!("unknown predicate {other}")),
    };

    match parsed {
        Ok(axiom) => LineOutcome::Axiom(axiom),
        Err(reason) => LineOutcome::Skip(reason),
    }
}

/// Parses an ontology file against a graph.
///
/// Every well-formed line becomes exactly one axiom. Unknown predicates and
/// unresolvable symbols are collected in the report, not fatal; a line with
/// fewer than three tokens is a parse error with its line number.
pub fn parse_ontology(path: &Path, graph: &KnowledgeGraph) -> Result<(Ontology, ParseReport)> {
    let text = std::fs::read_to_string(path)?;
    parse_ontology_str(&text, graph, &path.display().to_string())
}

pub fn parse_ontology_str(
    text: &str,
    graph: &KnowledgeGraph,
    source: &str,
) -> Result<(Ontology, ParseReport)> {
    let mut ontology = Ontology::new();
    let mut report = ParseReport::default();
    for (lineno, line) in text.lines().enumerate() {
        match parse_axiom_line(line, graph, ontology.classes_mut()) {
            LineOutcome::Axiom(axiom) => {
                ontology.add_axiom(axiom, graph)?;
                report.accepted += 1;
            }
            LineOutcome::Skip(reason) => report.skipped.push(LineDiagnostic {
                line: lineno + 1,
                reason,
            }),
            LineOutcome::Malformed(msg) => {
                return Err(Error::Parse {
                    path: source.to_owned(),
                    line: lineno + 1,
                    msg,
                })
            }
            LineOutcome::Blank => {}
        }
    }
    ontology.validate()?;
    for (i, tag) in AxiomTag::ALL.into_iter().enumerate() {
        report.tag_counts[i] = ontology.tag_count(tag);
    }
    Ok((ontology, report))
}

/// Renders one axiom in the on-disk line format (with trailing ` .`).
pub fn axiom_line(axiom: &OntologyAxiom, graph: &KnowledgeGraph, classes: &ClassTable) -> String {
    match *axiom {
        OntologyAxiom::ClassAssertion { entity, class } => format!(
            "{} rdf:type {} .",
            graph.entity_symbol(entity),
            classes.symbol(class)
        ),
        OntologyAxiom::SubClassOf { sub, sup } => format!(
            "{} rdfs:subClassOf {} .",
            classes.symbol(sub),
            classes.symbol(sup)
        ),
        OntologyAxiom::Domain { relation, class } => format!(
            "{} rdfs:domain {} .",
            graph.relation_symbol(relation),
            classes.symbol(class)
        ),
        OntologyAxiom::Range { relation, class } => format!(
            "{} rdfs:range {} .",
            graph.relation_symbol(relation),
            classes.symbol(class)
        ),
        OntologyAxiom::Composition {
            result,
            first,
            second,
        } => format!(
            "{} composedOf {} o {} .",
            graph.relation_symbol(result),
            graph.relation_symbol(first),
            graph.relation_symbol(second)
        ),
        OntologyAxiom::EquivalentProperty { a, b } => {
            let (x, y) = symbol_ordered(graph.relation_symbol(a), graph.relation_symbol(b));
            format!("{x} owl:equivalentProperty {y} .")
        }
        OntologyAxiom::DisjointProperty { a, b } => {
            let (x, y) = symbol_ordered(graph.relation_symbol(a), graph.relation_symbol(b));
            format!("{x} owl:propertyDisjointWith {y} .")
        }
    }
}

fn symbol_ordered<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Serializes an ontology to the line format, sorted by kind then by symbol.
///
/// Parsing the output against the same graph reproduces an equal axiom set,
/// and equal axiom sets serialize to identical bytes.
pub fn serialize_ontology(ontology: &Ontology, graph: &KnowledgeGraph) -> String {
    let mut lines: Vec<(AxiomTag, String)> = ontology
        .axioms()
        .iter()
        .map(|a| (a.tag(), axiom_line(a, graph, ontology.classes())))
        .collect();
    lines.sort();
    let mut out = String::new();
    for (_, line) in lines {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Split;
    use crate::util::rng::Rng;

    fn marvel_graph() -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new();
        g.load_triples_str(
            ":IronMan\t:hasWife\t:PepperPotts\n:MongenStark\t:hasFather\t:IronMan\n",
            Split::Train,
            "t",
        )
        .unwrap();
        g.intern_relation(":hasMother");
        g
    }

    #[test]
    fn parses_class_assertion() {
        let g = marvel_graph();
        let (onto, report) =
            parse_ontology_str(":IronMan rdf:type :Person .\n", &g, "o").unwrap();
        assert_eq!(report.accepted, 1);
        let e = g.resolve_entity(":IronMan").unwrap();
        let c = onto.resolve_class(":Person").unwrap();
        assert_eq!(onto.classes_of(e).collect::<Vec<_>>(), vec![c]);
    }

    #[test]
    fn parses_composition_in_both_spellings() {
        let g = marvel_graph();
        for line in [
            ":hasMother rdfs:subPropertyOf :hasFather o :hasWife .\n",
            ":hasMother composedOf :hasFather o :hasWife .\n",
        ] {
            let (onto, _) = parse_ontology_str(line, &g, "o").unwrap();
            let comps: Vec<_> = onto.compositions().collect();
            assert_eq!(comps.len(), 1);
            let (result, first, second) = comps[0];
            assert_eq!(g.relation_symbol(result), ":hasMother");
            assert_eq!(g.relation_symbol(first), ":hasFather");
            assert_eq!(g.relation_symbol(second), ":hasWife");
        }
    }

    #[test]
    fn empty_file_empty_ontology() {
        let g = marvel_graph();
        let (onto, report) = parse_ontology_str("", &g, "o").unwrap();
        assert!(onto.is_empty());
        assert_eq!(report.accepted, 0);
    }

    #[test]
    fn unknown_predicate_is_reported_not_fatal() {
        let g = marvel_graph();
        let (onto, report) =
            parse_ontology_str(":IronMan owl:sameAs :TonyStark .\n", &g, "o").unwrap();
        assert!(onto.is_empty());
        assert_eq!(report.skipped.len(), 1);
        assert!(report.skipped[0].reason.contains("unknown predicate"));
    }

    #[test]
    fn short_line_is_a_parse_error_with_line_number() {
        let g = marvel_graph();
        let err = parse_ontology_str("noise\n", &g, "onto.nt").unwrap_err();
        match err {
            Error::Parse { path, line, .. } => {
                assert_eq!(path, "onto.nt");
                assert_eq!(line, 1);
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn equivalence_is_symmetric() {
        let g = marvel_graph();
        let mut g = g;
        g.intern_relation(":allyOf");
        g.intern_relation(":isFriend");
        let (onto, _) =
            parse_ontology_str(":allyOf owl:equivalentProperty :isFriend .\n", &g, "o").unwrap();
        let ally = g.resolve_relation(":allyOf").unwrap();
        let friend = g.resolve_relation(":isFriend").unwrap();
        assert!(onto.are_equivalent(ally, friend));
        assert!(onto.are_equivalent(friend, ally));
    }

    #[test]
    fn equivalent_and_disjoint_contradiction_rejected() {
        let mut g = marvel_graph();
        g.intern_relation(":a");
        g.intern_relation(":b");
        let text = ":a owl:equivalentProperty :b .\n:b owl:propertyDisjointWith :a .\n";
        let err = parse_ontology_str(text, &g, "o").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn single_assertion_serializes_to_one_dotted_line() {
        let g = marvel_graph();
        let (onto, _) = parse_ontology_str(":IronMan rdf:type :Person .\n", &g, "o").unwrap();
        let text = serialize_ontology(&onto, &g);
        assert_eq!(text, ":IronMan rdf:type :Person .\n");
    }

    #[test]
    fn empty_ontology_serializes_to_empty_text() {
        let g = marvel_graph();
        assert_eq!(serialize_ontology(&Ontology::new(), &g), "");
    }

    #[test]
    fn closure_includes_self_and_ancestors() {
        let g = marvel_graph();
        let (onto, _) = parse_ontology_str(":Women rdfs:subClassOf :Person .\n", &g, "o").unwrap();
        let closure = subclass_closure(&onto).unwrap();
        let women = onto.resolve_class(":Women").unwrap();
        let person = onto.resolve_class(":Person").unwrap();
        assert!(closure.contains(women, women));
        assert!(closure.contains(women, person));
        assert!(!closure.contains(person, women));
    }

    #[test]
    fn closure_without_subclass_axioms_is_reflexive_only() {
        let g = marvel_graph();
        let (onto, _) = parse_ontology_str(":IronMan rdf:type :Person .\n", &g, "o").unwrap();
        let closure = subclass_closure(&onto).unwrap();
        let person = onto.resolve_class(":Person").unwrap();
        assert_eq!(closure.superclasses(person).len(), 1);
    }

    #[test]
    fn cycle_is_detected_and_named() {
        let g = marvel_graph();
        let text = ":A rdfs:subClassOf :B .\n:B rdfs:subClassOf :C .\n:C rdfs:subClassOf :A .\n";
        let err = parse_ontology_str(text, &g, "o").unwrap_err();
        match err {
            Error::SubclassCycle(path) => assert!(path.contains(":A")),
            other => panic!("expected cycle error, got {other}"),
        }
    }

    #[test]
    fn closure_matches_dfs_oracle_on_random_dags() {
        // Random DAGs over 30 classes; edges only from lower to higher index
        // keep them acyclic by construction.
        let mut g = KnowledgeGraph::new();
        g.intern_entity("e");
        for seed in 0..10u64 {
            let mut rng = Rng::seed_from(seed);
            let mut onto = Ontology::new();
            let classes: Vec<ClassId> =
                (0..30).map(|i| onto.intern_class(&format!(":C{i:02}"))).collect();
            let mut edges = Vec::new();
            for i in 0..30 {
                for j in (i + 1)..30 {
                    if rng.chance(0.08) {
                        onto.add_axiom(
                            OntologyAxiom::SubClassOf {
                                sub: classes[i],
                                sup: classes[j],
                            },
                            &g,
                        )
                        .unwrap();
                        edges.push((i, j));
                    }
                }
            }
            let closure = subclass_closure(&onto).unwrap();
            // Oracle: plain reachability by repeated scan.
            for start in 0..30 {
                let mut reach = BTreeSet::from([start]);
                loop {
                    let before = reach.len();
                    for &(a, b) in &edges {
                        if reach.contains(&a) {
                            reach.insert(b);
                        }
                    }
                    if reach.len() == before {
                        break;
                    }
                }
                let expect: BTreeSet<ClassId> = reach.into_iter().map(|i| classes[i]).collect();
                assert_eq!(closure.superclasses(classes[start]), &expect, "seed {seed}");
            }
        }
    }

    #[test]
    fn closure_monotone_under_added_edges() {
        let g = marvel_graph();
        let (onto, _) = parse_ontology_str(":A rdfs:subClassOf :B .\n", &g, "o").unwrap();
        let before = subclass_closure(&onto).unwrap();
        let (onto2, _) = parse_ontology_str(
            ":A rdfs:subClassOf :B .\n:B rdfs:subClassOf :C .\n",
            &g,
            "o",
        )
        .unwrap();
        let after = subclass_closure(&onto2).unwrap();
        for c in 0..before.class_count() {
            let id = ClassId(c as u32);
            assert!(before.superclasses(id).is_subset(after.superclasses(id)));
        }
    }

    #[test]
    fn random_ontologies_round_trip() {
        // Generated axiom sets of up to 100 axioms: parse(serialize(x)) must
        // serialize back to the identical bytes.
        let mut g = KnowledgeGraph::new();
        for i in 0..12 {
            g.intern_entity(&format!(":e{i}"));
        }
        for i in 0..6 {
            g.intern_relation(&format!(":r{i}"));
        }
        for seed in 0..25u64 {
            let mut rng = Rng::seed_from(seed);
            let mut onto = Ontology::new();
            let classes: Vec<ClassId> =
                (0..8).map(|i| onto.intern_class(&format!(":K{i}"))).collect();
            let n_axioms = rng.below(101);
            for _ in 0..n_axioms {
                let axiom = match rng.below(7) {
                    0 => OntologyAxiom::ClassAssertion {
                        entity: g.resolve_entity(&format!(":e{}", rng.below(12))).unwrap(),
                        class: classes[rng.below(8)],
                    },
                    // Subclass edges go from lower to higher index: acyclic.
                    1 => {
                        let i = rng.below(7);
                        let j = i + 1 + rng.below(7 - i);
                        OntologyAxiom::SubClassOf {
                            sub: classes[i],
                            sup: classes[j],
                        }
                    }
                    2 => OntologyAxiom::Domain {
                        relation: g.resolve_relation(&format!(":r{}", rng.below(6))).unwrap(),
                        class: classes[rng.below(8)],
                    },
                    3 => OntologyAxiom::Range {
                        relation: g.resolve_relation(&format!(":r{}", rng.below(6))).unwrap(),
                        class: classes[rng.below(8)],
                    },
                    4 => OntologyAxiom::Composition {
                        result: g.resolve_relation(&format!(":r{}", rng.below(6))).unwrap(),
                        first: g.resolve_relation(&format!(":r{}", rng.below(6))).unwrap(),
                        second: g.resolve_relation(&format!(":r{}", rng.below(6))).unwrap(),
                    },
                    // Equivalences among r0..r2, disjointness among r3..r5:
                    // never contradictory.
                    5 => OntologyAxiom::EquivalentProperty {
                        a: g.resolve_relation(&format!(":r{}", rng.below(3))).unwrap(),
                        b: g.resolve_relation(&format!(":r{}", rng.below(3))).unwrap(),
                    },
                    _ => OntologyAxiom::DisjointProperty {
                        a: g.resolve_relation(&format!(":r{}", 3 + rng.below(3))).unwrap(),
                        b: g.resolve_relation(&format!(":r{}", 3 + rng.below(3))).unwrap(),
                    },
                };
                onto.add_axiom(axiom, &g).unwrap();
            }
            let text = serialize_ontology(&onto, &g);
            let (reparsed, report) = parse_ontology_str(&text, &g, "roundtrip").unwrap();
            assert!(report.skipped.is_empty(), "seed {seed}");
            assert_eq!(serialize_ontology(&reparsed, &g), text, "seed {seed}");
            assert_eq!(reparsed.len(), onto.len(), "seed {seed}");
        }
    }
}
