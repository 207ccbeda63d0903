//! Knowledge-graph data model and ingestion.
//!
//! A graph is a set of interned entities and relations, triple sets per
//! train/valid/test split, and a description map attaching text to symbols.
//! Construction is single-writer; once loaded the graph is immutable and can
//! be shared freely across threads.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::util::rng::Rng;
use crate::util::Interner;

/// Dense index of an entity within one graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(u32);

/// Dense index of a relation within one graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelationId(u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
    /// Constructs an id from a raw dense index. Ids made this way are only
    /// meaningful against the graph or table they index into.
    pub fn from_index(i: usize) -> Self {
        EntityId(i as u32)
    }
}

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
    /// See [`EntityId::from_index`].
    pub fn from_index(i: usize) -> Self {
        RelationId(i as u32)
    }
}

/// A single (head, relation, tail) fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Triple {
            head,
            relation,
            tail,
        }
    }
}

/// Dataset split a triple belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }

    fn idx(self) -> usize {
        match self {
            Split::Train => 0,
            Split::Valid => 1,
            Split::Test => 2,
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!(
                "unknown split `{other}` (expected train|valid|test)"
            ))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A triple paired with a gold boolean label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledTriple {
    pub triple: Triple,
    pub label: bool,
}

/// Textual descriptions for entities and relations.
///
/// A lookup miss is an explicit `None`, never an empty string; callers fall
/// back to the raw symbol. Descriptions whose id is not in the graph are kept
/// in a side table keyed by raw symbol so the load report can flag them.
#[derive(Debug, Clone, Default)]
pub struct DescriptionMap {
    entity: HashMap<EntityId, String>,
    relation: HashMap<RelationId, String>,
    orphan: HashMap<String, String>,
}

impl DescriptionMap {
    pub fn entity(&self, id: EntityId) -> Option<&str> {
        self.entity.get(&id).map(String::as_str)
    }

    pub fn relation(&self, id: RelationId) -> Option<&str> {
        self.relation.get(&id).map(String::as_str)
    }

    pub fn orphan(&self, symbol: &str) -> Option<&str> {
        self.orphan.get(symbol).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entity.len() + self.relation.len() + self.orphan.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Outcome of a triple-file load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadReport {
    /// Distinct triples added to the split.
    pub loaded: usize,
    /// Duplicate lines within the file/split that were collapsed.
    pub deduplicated: usize,
}

/// Outcome of a description-file load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescriptionReport {
    pub loaded: usize,
    /// Ids not present in the graph; loaded into the orphan table.
    pub orphans: Vec<String>,
}

/// How negative triples are produced from positives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorruptionStrategy {
    CorruptHead,
    CorruptTail,
    Both,
}

impl std::str::FromStr for CorruptionStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corrupt-head" => Ok(CorruptionStrategy::CorruptHead),
            "corrupt-tail" => Ok(CorruptionStrategy::CorruptTail),
            "both" => Ok(CorruptionStrategy::Both),
            other => Err(Error::Config(format!(
                "unknown corruption strategy `{other}`"
            ))),
        }
    }
}

/// Entities, relations, triples per split, and descriptions.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    entities: Interner,
    relations: Interner,
    splits: [BTreeSet<Triple>; 3],
    descriptions: DescriptionMap,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern_entity(&mut self, symbol: &str) -> EntityId {
        EntityId(self.entities.intern(symbol))
    }

    pub fn intern_relation(&mut self, symbol: &str) -> RelationId {
        RelationId(self.relations.intern(symbol))
    }

    pub fn resolve_entity(&self, symbol: &str) -> Option<EntityId> {
        self.entities.resolve(symbol).map(EntityId)
    }

    pub fn resolve_relation(&self, symbol: &str) -> Option<RelationId> {
        self.relations.resolve(symbol).map(RelationId)
    }

    pub fn entity_symbol(&self, id: EntityId) -> &str {
        self.entities.symbol(id.0)
    }

    pub fn relation_symbol(&self, id: RelationId) -> &str {
        self.relations.symbol(id.0)
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn descriptions(&self) -> &DescriptionMap {
        &self.descriptions
    }

    /// Description of an entity, falling back to its raw symbol.
    pub fn describe_entity(&self, id: EntityId) -> &str {
        self.descriptions
            .entity(id)
            .unwrap_or_else(|| self.entity_symbol(id))
    }

    /// Description of a relation, falling back to its raw symbol.
    pub fn describe_relation(&self, id: RelationId) -> &str {
        self.descriptions
            .relation(id)
            .unwrap_or_else(|| self.relation_symbol(id))
    }

    /// Adds a triple to a split. Returns `false` when the triple was already
    /// in that split; errors when it exists in a different split.
    pub fn add_triple(&mut self, split: Split, triple: Triple) -> Result<bool> {
        for other in Split::ALL {
            if other != split && self.splits[other.idx()].contains(&triple) {
                return Err(Error::Validation(format!(
                    "triple {} is already in the {} split",
                    self.display_triple(triple),
                    other
                )));
            }
        }
        Ok(self.splits[split.idx()].insert(triple))
    }

    pub fn triples(&self, split: Split) -> impl Iterator<Item = Triple> + '_ {
        self.splits[split.idx()].iter().copied()
    }

    pub fn triple_count(&self, split: Split) -> usize {
        self.splits[split.idx()].len()
    }

    /// All triples across splits, train then valid then test.
    pub fn all_triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.splits.iter().flat_map(|s| s.iter().copied())
    }

    pub fn contains(&self, split: Split, triple: Triple) -> bool {
        self.splits[split.idx()].contains(&triple)
    }

    /// Whether the triple exists in any split.
    pub fn contains_anywhere(&self, triple: Triple) -> bool {
        self.splits.iter().any(|s| s.contains(&triple))
    }

    pub fn display_triple(&self, t: Triple) -> String {
        format!(
            "({}, {}, {})",
            self.entity_symbol(t.head),
            self.relation_symbol(t.relation),
            self.entity_symbol(t.tail)
        )
    }

    /// Loads tab-separated `head<TAB>relation<TAB>tail` lines into a split.
    ///
    /// Duplicate lines within the split are collapsed and counted. A triple
    /// already present in a *different* split is a validation error.
    pub fn load_triples(&mut self, path: &Path, split: Split) -> Result<LoadReport> {
        let text = std::fs::read_to_string(path)?;
        self.load_triples_str(&text, split, &path.display().to_string())
    }

    pub fn load_triples_str(
        &mut self,
        text: &str,
        split: Split,
        source: &str,
    ) -> Result<LoadReport> {
        let mut loaded = 0;
        let mut deduplicated = 0;
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let (h, r, t) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
                (Some(h), Some(r), Some(t), None) => (h, r, t),
                _ => {
                    return Err(Error::Parse {
                        path: source.to_owned(),
                        line: lineno + 1,
                        msg: format!(
                            "expected 3 tab-separated fields, got {}",
                            line.split('\t').count()
                        ),
                    })
                }
            };
            let triple = Triple {
                head: self.intern_entity(h),
                relation: self.intern_relation(r),
                tail: self.intern_entity(t),
            };
            if self.add_triple(split, triple)? {
                loaded += 1;
            } else {
                deduplicated += 1;
            }
        }
        Ok(LoadReport {
            loaded,
            deduplicated,
        })
    }

    /// Loads `id<TAB>description` lines. The id may name an entity or a
    /// relation (or both); ids unknown to the graph are kept and flagged.
    pub fn load_descriptions(&mut self, path: &Path) -> Result<DescriptionReport> {
        let text = std::fs::read_to_string(path)?;
        self.load_descriptions_str(&text, &path.display().to_string())
    }

    pub fn load_descriptions_str(&mut self, text: &str, source: &str) -> Result<DescriptionReport> {
        let mut loaded = 0;
        let mut orphans = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (id, desc) = line.split_once('\t').ok_or_else(|| Error::Parse {
                path: source.to_owned(),
                line: lineno + 1,
                msg: "expected `id<TAB>description`".to_owned(),
            })?;
            let mut resolved = false;
            if let Some(e) = self.resolve_entity(id) {
                self.descriptions.entity.insert(e, desc.to_owned());
                resolved = true;
            }
            if let Some(r) = self.resolve_relation(id) {
                self.descriptions.relation.insert(r, desc.to_owned());
                resolved = true;
            }
            if !resolved {
                self.descriptions
                    .orphan
                    .insert(id.to_owned(), desc.to_owned());
                orphans.push(id.to_owned());
            }
            loaded += 1;
        }
        Ok(DescriptionReport { loaded, orphans })
    }
}

/// Attempts per negative slot before giving up.
const RESAMPLE_BUDGET: usize = 100;

/// Produces `ratio` filtered negatives per positive of a split.
///
/// Corrupted candidates that collide with any known triple in any split are
/// rejected and resampled. Output is deterministic for a fixed seed.
pub fn generate_negatives(
    graph: &KnowledgeGraph,
    split: Split,
    ratio: f64,
    strategy: CorruptionStrategy,
    seed: u64,
) -> Result<Vec<LabeledTriple>> {
    if ratio < 0.0 || !ratio.is_finite() {
        return Err(Error::Config(format!(
            "negative ratio must be a non-negative finite number, got {ratio}"
        )));
    }
    if graph.triple_count(split) == 0 {
        return Err(Error::Validation(format!("split {split} is empty")));
    }
    let n_entities = graph.entity_count();
    let mut rng = Rng::seed_from(seed);
    let mut negatives = Vec::new();
    // floor((i+1)*ratio) - floor(i*ratio) slots per positive spreads a
    // fractional ratio evenly across the split.
    for (i, positive) in graph.triples(split).enumerate() {
        let slots = ((i + 1) as f64 * ratio).floor() as usize - (i as f64 * ratio).floor() as usize;
        for _ in 0..slots {
            let mut accepted = None;
            for _ in 0..RESAMPLE_BUDGET {
                let corrupt_head = match strategy {
                    CorruptionStrategy::CorruptHead => true,
                    CorruptionStrategy::CorruptTail => false,
                    CorruptionStrategy::Both => rng.bool(),
                };
                let replacement = EntityId(rng.below(n_entities) as u32);
                let candidate = if corrupt_head {
                    Triple::new(replacement, positive.relation, positive.tail)
                } else {
                    Triple::new(positive.head, positive.relation, replacement)
                };
                if !graph.contains_anywhere(candidate) {
                    accepted = Some(candidate);
                    break;
                }
            }
            match accepted {
                Some(t) => negatives.push(LabeledTriple {
                    triple: t,
                    label: false,
                }),
                None => {
                    return Err(Error::NegativeSampling {
                        triple: graph.display_triple(positive),
                        attempts: RESAMPLE_BUDGET,
                    })
                }
            }
        }
    }
    Ok(negatives)
}

/// Positives of a split labeled true, plus `ratio` filtered negatives each.
pub fn labeled_split(
    graph: &KnowledgeGraph,
    split: Split,
    ratio: f64,
    strategy: CorruptionStrategy,
    seed: u64,
) -> Result<Vec<LabeledTriple>> {
    let mut labeled: Vec<LabeledTriple> = graph
        .triples(split)
        .map(|triple| LabeledTriple {
            triple,
            label: true,
        })
        .collect();
    labeled.extend(generate_negatives(graph, split, ratio, strategy, seed)?);
    Ok(labeled)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_graph() -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new();
        g.load_triples_str("a\tr\tb\n", Split::Train, "toy").unwrap();
        g.intern_entity("c");
        g
    }

    #[test]
    fn load_triples_interns_fields() {
        let mut g = KnowledgeGraph::new();
        let report = g
            .load_triples_str("/m/0dzlbx\t/film/genre\t/m/02l7c8\n", Split::Train, "t")
            .unwrap();
        assert_eq!(report.loaded, 1);
        assert_eq!(g.entity_count(), 2);
        assert_eq!(g.relation_count(), 1);
        let t = g.triples(Split::Train).next().unwrap();
        assert_eq!(g.entity_symbol(t.head), "/m/0dzlbx");
        assert_eq!(g.relation_symbol(t.relation), "/film/genre");
        assert_eq!(g.entity_symbol(t.tail), "/m/02l7c8");
    }

    #[test]
    fn empty_file_loads_nothing() {
        let mut g = KnowledgeGraph::new();
        let report = g.load_triples_str("", Split::Train, "t").unwrap();
        assert_eq!(report, LoadReport { loaded: 0, deduplicated: 0 });
        assert_eq!(g.triple_count(Split::Train), 0);
    }

    #[test]
    fn duplicate_lines_are_deduplicated() {
        let mut g = KnowledgeGraph::new();
        let report = g
            .load_triples_str("a\tr\tb\na\tr\tb\n", Split::Train, "t")
            .unwrap();
        assert_eq!(report, LoadReport { loaded: 1, deduplicated: 1 });
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let mut g = KnowledgeGraph::new();
        let err = g
            .load_triples_str("a\tr\tb\nbroken line\n", Split::Train, "file.txt")
            .unwrap_err();
        match err {
            Error::Parse { path, line, .. } => {
                assert_eq!(path, "file.txt");
                assert_eq!(line, 2);
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn cross_split_duplicate_is_rejected() {
        let mut g = KnowledgeGraph::new();
        g.load_triples_str("a\tr\tb\n", Split::Train, "t").unwrap();
        let err = g.load_triples_str("a\tr\tb\n", Split::Test, "t").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn descriptions_hit_and_miss() {
        let mut g = KnowledgeGraph::new();
        g.load_triples_str("/m/0dzlbx\tr\tb\n", Split::Train, "t").unwrap();
        let report = g
            .load_descriptions_str("/m/0dzlbx\tIron Man\n/m/unknown\tGhost\n", "d")
            .unwrap();
        assert_eq!(report.loaded, 2);
        assert_eq!(report.orphans, vec!["/m/unknown".to_owned()]);
        let id = g.resolve_entity("/m/0dzlbx").unwrap();
        assert_eq!(g.descriptions().entity(id), Some("Iron Man"));
        let b = g.resolve_entity("b").unwrap();
        assert_eq!(g.descriptions().entity(b), None);
        assert_eq!(g.describe_entity(b), "b");
        assert_eq!(g.descriptions().orphan("/m/unknown"), Some("Ghost"));
    }

    #[test]
    fn empty_description_file() {
        let mut g = toy_graph();
        let report = g.load_descriptions_str("", "d").unwrap();
        assert_eq!(report.loaded, 0);
        assert!(g.descriptions().is_empty());
    }

    #[test]
    fn corrupt_tail_candidates_stay_in_enumerated_set() {
        // 3 entities {a, b, c}, positives {(a,r,b)}: corrupting the tail can
        // only legally yield (a,r,a) or (a,r,c).
        let g = toy_graph();
        let a = g.resolve_entity("a").unwrap();
        let c = g.resolve_entity("c").unwrap();
        let r = g.resolve_relation("r").unwrap();
        let allowed = [Triple::new(a, r, a), Triple::new(a, r, c)];
        for seed in 0..20 {
            let negs =
                generate_negatives(&g, Split::Train, 1.0, CorruptionStrategy::CorruptTail, seed)
                    .unwrap();
            assert_eq!(negs.len(), 1);
            assert!(allowed.contains(&negs[0].triple), "got {:?}", negs[0].triple);
            assert!(!negs[0].label);
        }
    }

    #[test]
    fn ratio_zero_yields_no_negatives() {
        let g = toy_graph();
        let negs =
            generate_negatives(&g, Split::Train, 0.0, CorruptionStrategy::Both, 1).unwrap();
        assert!(negs.is_empty());
    }

    #[test]
    fn same_seed_same_negatives() {
        let g = toy_graph();
        let a = generate_negatives(&g, Split::Train, 2.0, CorruptionStrategy::Both, 7).unwrap();
        let b = generate_negatives(&g, Split::Train, 2.0, CorruptionStrategy::Both, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negatives_never_collide_with_known_triples() {
        // Random small graphs; exhaustive filtered-negative check.
        let mut rng = Rng::seed_from(99);
        for trial in 0..20 {
            let mut g = KnowledgeGraph::new();
            for i in 0..8 {
                g.intern_entity(&format!("e{i}"));
            }
            for i in 0..3 {
                g.intern_relation(&format!("r{i}"));
            }
            for (i, split) in [Split::Train, Split::Valid, Split::Test].into_iter().enumerate() {
                for _ in 0..(4 + i) {
                    let t = Triple::new(
                        EntityId(rng.below(8) as u32),
                        RelationId(rng.below(3) as u32),
                        EntityId(rng.below(8) as u32),
                    );
                    if !g.contains_anywhere(t) {
                        g.add_triple(split, t).unwrap();
                    }
                }
            }
            let negs =
                generate_negatives(&g, Split::Train, 2.0, CorruptionStrategy::Both, trial).unwrap();
            for n in &negs {
                assert!(!g.contains_anywhere(n.triple));
            }
        }
    }

    #[test]
    fn fractional_ratio_spreads_slots() {
        let mut g = KnowledgeGraph::new();
        for i in 0..10 {
            g.load_triples_str(&format!("h{i}\tr\tt{i}\n"), Split::Train, "t")
                .unwrap();
        }
        for i in 0..40 {
            g.intern_entity(&format!("spare{i}"));
        }
        let negs = generate_negatives(&g, Split::Train, 0.5, CorruptionStrategy::Both, 3).unwrap();
        assert_eq!(negs.len(), 5);
    }

    #[test]
    fn resample_budget_exhaustion_names_the_triple() {
        // Single entity: every corruption of (a,r,a) collides with itself.
        let mut g = KnowledgeGraph::new();
        g.load_triples_str("a\tr\ta\n", Split::Train, "t").unwrap();
        let err =
            generate_negatives(&g, Split::Train, 1.0, CorruptionStrategy::Both, 1).unwrap_err();
        match err {
            Error::NegativeSampling { triple, .. } => assert!(triple.contains("a, r, a")),
            other => panic!("expected sampling error, got {other}"),
        }
    }
}
