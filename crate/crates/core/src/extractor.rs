//! Candidate-axiom production for a bare graph.
//!
//! Three sources feed one funnel: a deterministic statistical miner (so the
//! pipeline runs fully offline), parsing of raw model output, and a manual
//! review step that merges accept/reject decisions into a validated
//! [`Ontology`]. Candidates from all sources share one [`ClassTable`].
//!
//! Mining reads the train split only; consulting held-out splits here would
//! leak evaluation data into the ontology.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId, Split};
use crate::ontology::{
    axiom_line, parse_axiom_line, subclass_closure, ClassId, ClassTable, LineDiagnostic,
    LineOutcome, Ontology, OntologyAxiom,
};

/// Where a candidate axiom came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CandidateSource {
    Mined,
    Llm,
    Manual,
}

impl CandidateSource {
    pub fn name(self) -> &'static str {
        match self {
            CandidateSource::Mined => "mined",
            CandidateSource::Llm => "llm",
            CandidateSource::Manual => "manual",
        }
    }
}

impl std::str::FromStr for CandidateSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mined" => Ok(CandidateSource::Mined),
            "llm" => Ok(CandidateSource::Llm),
            "manual" => Ok(CandidateSource::Manual),
            other => Err(Error::Config(format!("unknown candidate source `{other}`"))),
        }
    }
}

/// A proposed axiom with mining statistics.
///
/// Model-sourced candidates carry no support or confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateAxiom {
    pub axiom: OntologyAxiom,
    pub support: Option<u64>,
    pub confidence: Option<f64>,
    pub source: CandidateSource,
}

impl CandidateAxiom {
    fn mined(axiom: OntologyAxiom, support: u64, confidence: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&confidence));
        CandidateAxiom {
            axiom,
            support: Some(support),
            confidence: Some(confidence),
            source: CandidateSource::Mined,
        }
    }
}

/// Verdict of one review decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReviewVerdict {
    Accept,
    Reject,
}

impl std::str::FromStr for ReviewVerdict {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accept" => Ok(ReviewVerdict::Accept),
            "reject" => Ok(ReviewVerdict::Reject),
            other => Err(Error::Config(format!(
                "unknown review verdict `{other}` (expected accept|reject)"
            ))),
        }
    }
}

/// One manual decision about a candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReviewDecision {
    pub axiom: OntologyAxiom,
    pub verdict: ReviewVerdict,
    pub note: String,
}

/// Longest upward chain per class; used to pick the most specific class.
fn class_depths(ontology: &Ontology) -> Vec<usize> {
    let n = ontology.class_count();
    let mut supers: Vec<Vec<ClassId>> = vec![Vec::new(); n];
    for (sub, sup) in ontology.subclass_edges() {
        supers[sub.index()].push(sup);
    }
    let mut depth = vec![usize::MAX; n];
    fn visit(c: usize, supers: &[Vec<ClassId>], depth: &mut [usize]) -> usize {
        if depth[c] != usize::MAX {
            return depth[c];
        }
        let d = supers[c]
            .iter()
            .map(|s| visit(s.index(), supers, depth) + 1)
            .max()
            .unwrap_or(0);
        depth[c] = d;
        d
    }
    for c in 0..n {
        visit(c, &supers, &mut depth);
    }
    depth
}

/// Entities appearing as head (or tail) of each relation in the train split.
fn relation_arguments(
    graph: &KnowledgeGraph,
    heads: bool,
) -> BTreeMap<RelationId, BTreeSet<EntityId>> {
    let mut args: BTreeMap<RelationId, BTreeSet<EntityId>> = BTreeMap::new();
    for t in graph.triples(Split::Train) {
        args.entry(t.relation)
            .or_default()
            .insert(if heads { t.head } else { t.tail });
    }
    args
}

/// Mines `Domain` and `Range` candidates from class assertions.
///
/// For each relation, a class qualifies when at least a `coverage` fraction
/// of the relation's typed heads (tails) carry it in their subclass closure;
/// the deepest qualifying class wins, ties broken by symbol. Confidence is
/// that fraction, support the typed-argument count.
pub fn mine_domain_range(
    graph: &KnowledgeGraph,
    assertions: &Ontology,
    coverage: f64,
) -> Result<Vec<CandidateAxiom>> {
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(Error::Config(format!(
            "coverage threshold must be in (0, 1], got {coverage}"
        )));
    }
    let closure = subclass_closure(assertions)?;
    let depths = class_depths(assertions);
    let mut out = Vec::new();

    for side_is_head in [true, false] {
        for (relation, entities) in relation_arguments(graph, side_is_head) {
            // Count, per class, how many typed arguments reach it.
            let mut reach: HashMap<ClassId, u64> = HashMap::new();
            let mut typed = 0u64;
            for &e in &entities {
                let mut reached: BTreeSet<ClassId> = BTreeSet::new();
                for asserted in assertions.classes_of(e) {
                    reached.extend(closure.superclasses(asserted).iter().copied());
                }
                if reached.is_empty() {
                    continue;
                }
                typed += 1;
                for c in reached {
                    *reach.entry(c).or_insert(0) += 1;
                }
            }
            if typed == 0 {
                continue;
            }
            // Most specific class meeting the coverage threshold: deepest
            // first, then lexicographically smallest symbol.
            let best = reach
                .iter()
                .filter(|(_, &count)| count as f64 / typed as f64 >= coverage)
                .map(|(&c, &count)| (c, count))
                .max_by(|(a, _), (b, _)| {
                    depths[a.index()].cmp(&depths[b.index()]).then_with(|| {
                        assertions
                            .class_symbol(*b)
                            .cmp(assertions.class_symbol(*a))
                    })
                });
            if let Some((class, count)) = best {
                let axiom = if side_is_head {
                    OntologyAxiom::Domain { relation, class }
                } else {
                    OntologyAxiom::Range { relation, class }
                };
                out.push(CandidateAxiom::mined(
                    axiom,
                    typed,
                    count as f64 / typed as f64,
                ));
            }
        }
    }
    out.sort_by_key(|c| c.axiom);
    Ok(out)
}

/// Thresholds for composition mining.
#[derive(Debug, Clone, Copy)]
pub struct CompositionMiningConfig {
    pub min_support: u64,
    pub min_confidence: f64,
}

/// Mines `Composition` candidates: `result ⊑ first ∘ second`.
///
/// Support counts (x, z) pairs connected by both the two-step path and the
/// result relation; confidence divides by the number of path pairs.
pub fn mine_compositions(
    graph: &KnowledgeGraph,
    config: CompositionMiningConfig,
) -> Vec<CandidateAxiom> {
    let mut pairs: BTreeMap<RelationId, BTreeSet<(EntityId, EntityId)>> = BTreeMap::new();
    let mut by_head: BTreeMap<RelationId, BTreeMap<EntityId, Vec<EntityId>>> = BTreeMap::new();
    for t in graph.triples(Split::Train) {
        pairs.entry(t.relation).or_default().insert((t.head, t.tail));
        by_head
            .entry(t.relation)
            .or_default()
            .entry(t.head)
            .or_default()
            .push(t.tail);
    }

    let relations: Vec<RelationId> = pairs.keys().copied().collect();
    let mut out = Vec::new();
    for &first in &relations {
        for &second in &relations {
            // (x, z) pairs with some y such that first(x,y) and second(y,z).
            let mut path_pairs: BTreeSet<(EntityId, EntityId)> = BTreeSet::new();
            for &(x, y) in &pairs[&first] {
                if let Some(zs) = by_head[&second].get(&y) {
                    for &z in zs {
                        path_pairs.insert((x, z));
                    }
                }
            }
            if path_pairs.is_empty() {
                continue;
            }
            for &result in &relations {
                let support = path_pairs.intersection(&pairs[&result]).count() as u64;
                if support < config.min_support {
                    continue;
                }
                let confidence = support as f64 / path_pairs.len() as f64;
                if confidence < config.min_confidence {
                    continue;
                }
                out.push(CandidateAxiom::mined(
                    OntologyAxiom::Composition {
                        result,
                        first,
                        second,
                    },
                    support,
                    confidence,
                ));
            }
        }
    }
    out.sort_by_key(|c| c.axiom);
    out
}

/// Thresholds for equivalence/disjointness mining.
#[derive(Debug, Clone, Copy)]
pub struct OverlapMiningConfig {
    /// Jaccard overlap at or above which two relations are equivalent.
    pub equivalence_overlap: f64,
    /// Jaccard overlap at or below which disjointness is considered.
    pub disjoint_overlap: f64,
    /// Minimum pair count per relation before either rule fires.
    pub min_support: u64,
}

/// Mines `EquivalentProperty` and `DisjointProperty` candidates from
/// pair-set overlap.
///
/// Disjointness additionally requires overlapping argument signatures (some
/// shared head class and some shared tail class, over direct assertions), so
/// relations between unrelated entity kinds are not declared disjoint merely
/// for never co-occurring.
pub fn mine_equivalence_disjointness(
    graph: &KnowledgeGraph,
    assertions: &Ontology,
    config: OverlapMiningConfig,
) -> Vec<CandidateAxiom> {
    let mut pairs: BTreeMap<RelationId, BTreeSet<(EntityId, EntityId)>> = BTreeMap::new();
    for t in graph.triples(Split::Train) {
        pairs.entry(t.relation).or_default().insert((t.head, t.tail));
    }
    let signature = |relation: RelationId, heads: bool| -> BTreeSet<ClassId> {
        pairs[&relation]
            .iter()
            .flat_map(|&(h, t)| assertions.classes_of(if heads { h } else { t }))
            .collect()
    };

    let relations: Vec<RelationId> = pairs.keys().copied().collect();
    let mut out = Vec::new();
    for (i, &a) in relations.iter().enumerate() {
        if (pairs[&a].len() as u64) < config.min_support {
            continue;
        }
        for &b in &relations[i + 1..] {
            if (pairs[&b].len() as u64) < config.min_support {
                continue;
            }
            let intersection = pairs[&a].intersection(&pairs[&b]).count() as u64;
            let union = (pairs[&a].len() + pairs[&b].len()) as u64 - intersection;
            let jaccard = intersection as f64 / union as f64;
            if jaccard >= config.equivalence_overlap {
                out.push(CandidateAxiom::mined(
                    OntologyAxiom::EquivalentProperty { a, b },
                    intersection,
                    jaccard,
                ));
            } else if jaccard <= config.disjoint_overlap {
                let heads_overlap = !signature(a, true).is_disjoint(&signature(b, true));
                let tails_overlap = !signature(a, false).is_disjoint(&signature(b, false));
                if heads_overlap && tails_overlap {
                    out.push(CandidateAxiom::mined(
                        OntologyAxiom::DisjointProperty { a, b },
                        union,
                        1.0 - jaccard,
                    ));
                }
            }
        }
    }
    out.sort_by_key(|c| c.axiom);
    out
}

/// Summary of scanning raw model output for axiom lines.
#[derive(Debug, Clone, Default)]
pub struct LlmParseReport {
    /// Non-blank lines scanned.
    pub scanned: usize,
    /// Lines that did not yield an axiom, with the reason.
    pub skipped: Vec<LineDiagnostic>,
}

/// Scans raw model output for lines in the ontology line grammar.
///
/// Total function: every non-matching line becomes a diagnostic, never an
/// error. New class symbols are interned into `classes`.
pub fn parse_llm_axioms(
    text: &str,
    graph: &KnowledgeGraph,
    classes: &mut ClassTable,
) -> (Vec<CandidateAxiom>, LlmParseReport) {
    let mut candidates = Vec::new();
    let mut report = LlmParseReport::default();
    for (lineno, line) in text.lines().enumerate() {
        match parse_axiom_line(line, graph, classes) {
            LineOutcome::Axiom(axiom) => {
                report.scanned += 1;
                candidates.push(CandidateAxiom {
                    axiom,
                    support: None,
                    confidence: None,
                    source: CandidateSource::Llm,
                });
            }
            LineOutcome::Skip(reason) | LineOutcome::Malformed(reason) => {
                report.scanned += 1;
                report.skipped.push(LineDiagnostic {
                    line: lineno + 1,
                    reason,
                });
            }
            LineOutcome::Blank => {}
        }
    }
    (candidates, report)
}

/// Default verdict for candidates without an explicit decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReviewDefault {
    Accept,
    Reject,
}

impl std::str::FromStr for ReviewDefault {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accept" => Ok(ReviewDefault::Accept),
            "reject" => Ok(ReviewDefault::Reject),
            other => Err(Error::Config(format!(
                "unknown review default `{other}` (expected accept|reject)"
            ))),
        }
    }
}

/// Applies review decisions to a candidate pool and builds the ontology.
///
/// Every decision must reference a candidate; the accepted set must satisfy
/// the store invariants (acyclic subclass graph, no equivalence/disjointness
/// contradiction), otherwise the offending axioms are named in the error.
pub fn review_merge(
    graph: &KnowledgeGraph,
    classes: &ClassTable,
    candidates: &[CandidateAxiom],
    decisions: &[ReviewDecision],
    default: ReviewDefault,
) -> Result<Ontology> {
    let pool: BTreeSet<OntologyAxiom> = candidates.iter().map(|c| c.axiom).collect();
    let mut verdicts: BTreeMap<OntologyAxiom, ReviewVerdict> = BTreeMap::new();
    for decision in decisions {
        if !pool.contains(&decision.axiom) {
            return Err(Error::Validation(format!(
                "review decision references unknown candidate: {}",
                axiom_line(&decision.axiom, graph, classes)
            )));
        }
        verdicts.insert(decision.axiom, decision.verdict);
    }

    let mut ontology = Ontology::with_classes(classes.clone());
    for axiom in pool {
        let accepted = match verdicts.get(&axiom) {
            Some(ReviewVerdict::Accept) => true,
            Some(ReviewVerdict::Reject) => false,
            None => default == ReviewDefault::Accept,
        };
        if accepted {
            ontology.add_axiom(axiom, graph)?;
        }
    }
    ontology.validate()?;
    Ok(ontology)
}

/// Renders candidates in the candidate-file format:
/// `axiom-line # support=.. confidence=.. source=..`.
pub fn write_candidates(
    candidates: &[CandidateAxiom],
    graph: &KnowledgeGraph,
    classes: &ClassTable,
) -> String {
    let mut out = String::new();
    for c in candidates {
        out.push_str(&axiom_line(&c.axiom, graph, classes));
        out.push_str(" #");
        if let Some(s) = c.support {
            out.push_str(&format!(" support={s}"));
        }
        if let Some(conf) = c.confidence {
            out.push_str(&format!(" confidence={conf:.6}"));
        }
        out.push_str(&format!(" source={}", c.source.name()));
        out.push('\n');
    }
    out
}

/// Parses a candidate file produced by [`write_candidates`].
pub fn read_candidates(
    text: &str,
    graph: &KnowledgeGraph,
    classes: &mut ClassTable,
    source_name: &str,
) -> Result<Vec<CandidateAxiom>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let (axiom_part, meta) = match raw.split_once(" #") {
            Some((a, m)) => (a, m),
            None => (raw, ""),
        };
        let axiom = match parse_axiom_line(axiom_part, graph, classes) {
            LineOutcome::Axiom(a) => a,
            LineOutcome::Blank => continue,
            LineOutcome::Skip(reason) | LineOutcome::Malformed(reason) => {
                return Err(Error::Parse {
                    path: source_name.to_owned(),
                    line: lineno + 1,
                    msg: reason,
                })
            }
        };
        let mut candidate = CandidateAxiom {
            axiom,
            support: None,
            confidence: None,
            source: CandidateSource::Manual,
        };
        for field in meta.split_whitespace() {
            if let Some(v) = field.strip_prefix("support=") {
                candidate.support = v.parse().ok();
            } else if let Some(v) = field.strip_prefix("confidence=") {
                candidate.confidence = v.parse().ok();
            } else if let Some(v) = field.strip_prefix("source=") {
                candidate.source = v.parse()?;
            }
        }
        out.push(candidate);
    }
    Ok(out)
}

/// Parses a review file: `accept|reject<TAB>axiom-line<TAB>note`.
pub fn read_review_decisions(
    text: &str,
    graph: &KnowledgeGraph,
    classes: &mut ClassTable,
    source_name: &str,
) -> Result<Vec<ReviewDecision>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: source_name.to_owned(),
            line: lineno + 1,
            msg,
        };
        let mut fields = raw.splitn(3, '\t');
        let verdict = fields
            .next()
            .ok_or_else(|| parse_err("empty review line".to_owned()))?
            .parse::<ReviewVerdict>()
            .map_err(|e| parse_err(e.to_string()))?;
        let axiom_text = fields
            .next()
            .ok_or_else(|| parse_err("missing axiom field".to_owned()))?;
        let note = fields.next().unwrap_or("").to_owned();
        let axiom = match parse_axiom_line(axiom_text, graph, classes) {
            LineOutcome::Axiom(a) => a,
            _ => return Err(parse_err(format!("unparseable axiom `{axiom_text}`"))),
        };
        out.push(ReviewDecision {
            axiom,
            verdict,
            note,
        });
    }
    Ok(out)
}
