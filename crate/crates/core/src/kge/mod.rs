//! Structural embeddings: scoring, threshold tuning, and classification.
//!
//! The primary scorer treats each relation as an element-wise rotation in
//! complex space: `f(h, r, t) = -‖h ∘ r - t‖₂`, with relation coordinates
//! parameterized by phase angles so their modulus is 1 by construction. A
//! translational scorer (`f = -‖h + r - t‖₂` over real vectors) sits behind
//! the same interface. Scores are never positive; higher means more
//! plausible.

mod checkpoint;
mod train;

pub use checkpoint::{from_bytes, read_checkpoint, to_bytes, write_checkpoint};
pub use train::{
    adversarial_weights, batch_gradient, batch_loss, train, GradientMap, LossGroup, TrainConfig,
    TrainedEmbeddings,
};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, LabeledTriple, RelationId, Triple};

/// Scoring operator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    /// Complex rotation: entities in ℂ^d, relations as phase vectors.
    Rotational,
    /// Real translation: entities and relations in ℝ^d.
    Translational,
}

impl ScorerKind {
    pub fn name(self) -> &'static str {
        match self {
            ScorerKind::Rotational => "rotational",
            ScorerKind::Translational => "translational",
        }
    }
}

impl std::str::FromStr for ScorerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rotational" => Ok(ScorerKind::Rotational),
            "translational" => Ok(ScorerKind::Translational),
            other => Err(Error::Config(format!("unknown scorer `{other}`"))),
        }
    }
}

/// Entity and relation parameters for one trained model.
///
/// Rotational layout: each entity is `d_e` real parts followed by `d_e`
/// imaginary parts; each relation is `d_e` phases in radians. Translational
/// layout: `d_e` reals for both.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    scorer: ScorerKind,
    d_e: usize,
    n_entities: usize,
    n_relations: usize,
    seed: u64,
    fingerprint: [u8; 32],
    ent: Vec<f64>,
    rel: Vec<f64>,
}

impl EmbeddingTable {
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        scorer: ScorerKind,
        d_e: usize,
        n_entities: usize,
        n_relations: usize,
        seed: u64,
        fingerprint: [u8; 32],
        ent: Vec<f64>,
        rel: Vec<f64>,
    ) -> Result<Self> {
        let table = EmbeddingTable {
            scorer,
            d_e,
            n_entities,
            n_relations,
            seed,
            fingerprint,
            ent,
            rel,
        };
        if table.ent.len() != n_entities * table.entity_stride() {
            return Err(Error::Validation(format!(
                "entity array length {} does not match {} entities of stride {}",
                table.ent.len(),
                n_entities,
                table.entity_stride()
            )));
        }
        if table.rel.len() != n_relations * table.relation_stride() {
            return Err(Error::Validation(format!(
                "relation array length {} does not match {} relations of stride {}",
                table.rel.len(),
                n_relations,
                table.relation_stride()
            )));
        }
        Ok(table)
    }

    pub fn scorer(&self) -> ScorerKind {
        self.scorer
    }

    pub fn dim(&self) -> usize {
        self.d_e
    }

    pub fn entity_count(&self) -> usize {
        self.n_entities
    }

    pub fn relation_count(&self) -> usize {
        self.n_relations
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Digest of the training configuration; adapters bound to this table
    /// refuse to run against any other.
    pub fn fingerprint(&self) -> &[u8; 32] {
        &self.fingerprint
    }

    pub fn entity_stride(&self) -> usize {
        match self.scorer {
            ScorerKind::Rotational => 2 * self.d_e,
            ScorerKind::Translational => self.d_e,
        }
    }

    pub fn relation_stride(&self) -> usize {
        self.d_e
    }

    /// Length of one flattened real block as seen by the prefix adapter.
    /// Identical for entities and relations under both scorers.
    pub fn flat_dim(&self) -> usize {
        match self.scorer {
            ScorerKind::Rotational => 2 * self.d_e,
            ScorerKind::Translational => self.d_e,
        }
    }

    pub fn entity_params(&self) -> &[f64] {
        &self.ent
    }

    pub fn relation_params(&self) -> &[f64] {
        &self.rel
    }

    pub(crate) fn entity_params_mut(&mut self) -> &mut [f64] {
        &mut self.ent
    }

    pub(crate) fn relation_params_mut(&mut self) -> &mut [f64] {
        &mut self.rel
    }

    /// Overwrites one entity coordinate; used by finite-difference oracles.
    pub fn set_entity_param(&mut self, index: usize, value: f64) {
        self.ent[index] = value;
    }

    pub fn set_relation_param(&mut self, index: usize, value: f64) {
        self.rel[index] = value;
    }

    fn entity_slice(&self, index: usize) -> &[f64] {
        let s = self.entity_stride();
        &self.ent[index * s..(index + 1) * s]
    }

    fn relation_slice(&self, index: usize) -> &[f64] {
        let s = self.relation_stride();
        &self.rel[index * s..(index + 1) * s]
    }

    /// Flattened real representation of an entity, as fed to the adapter.
    pub fn entity_flat(&self, id: crate::kg::EntityId) -> Result<&[f64]> {
        self.check_entity(id)?;
        Ok(self.entity_slice(id.index()))
    }

    /// Flattened real representation of a relation. Rotational relations are
    /// expanded to `(cos θ, sin θ)` pairs so the block length matches
    /// [`EmbeddingTable::flat_dim`].
    pub fn relation_flat(&self, id: RelationId) -> Result<Vec<f64>> {
        self.check_relation(id)?;
        let params = self.relation_slice(id.index());
        Ok(match self.scorer {
            ScorerKind::Rotational => {
                let mut out = Vec::with_capacity(2 * self.d_e);
                out.extend(params.iter().map(|p| p.cos()));
                out.extend(params.iter().map(|p| p.sin()));
                out
            }
            ScorerKind::Translational => params.to_vec(),
        })
    }

    fn check_entity(&self, id: crate::kg::EntityId) -> Result<()> {
        if id.index() >= self.n_entities {
            return Err(Error::UnknownId {
                kind: "entity index",
                symbol: id.index().to_string(),
            });
        }
        Ok(())
    }

    fn check_relation(&self, id: RelationId) -> Result<()> {
        if id.index() >= self.n_relations {
            return Err(Error::UnknownId {
                kind: "relation index",
                symbol: id.index().to_string(),
            });
        }
        Ok(())
    }

    /// Plausibility score of a triple; always ≤ 0, higher is more plausible.
    pub fn score(&self, triple: Triple) -> Result<f64> {
        self.check_entity(triple.head)?;
        self.check_entity(triple.tail)?;
        self.check_relation(triple.relation)?;
        Ok(self.score_unchecked(triple))
    }

    pub(crate) fn score_unchecked(&self, triple: Triple) -> f64 {
        let d = self.d_e;
        let h = self.entity_slice(triple.head.index());
        let t = self.entity_slice(triple.tail.index());
        let r = self.relation_slice(triple.relation.index());
        let mut sq = 0.0;
        match self.scorer {
            ScorerKind::Rotational => {
                for k in 0..d {
                    let (sin, cos) = r[k].sin_cos();
                    let re = h[k] * cos - h[d + k] * sin - t[k];
                    let im = h[k] * sin + h[d + k] * cos - t[d + k];
                    sq += re * re + im * im;
                }
            }
            ScorerKind::Translational => {
                for k in 0..d {
                    let u = h[k] + r[k] - t[k];
                    sq += u * u;
                }
            }
        }
        -sq.sqrt()
    }
}

/// Convenience wrapper matching the operation name used elsewhere.
pub fn score_triple(table: &EmbeddingTable, triple: Triple) -> Result<f64> {
    table.score(triple)
}

/// Per-relation decision thresholds with a global fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    per_relation: BTreeMap<RelationId, f64>,
    global: f64,
}

impl ThresholdTable {
    pub fn resolve(&self, relation: RelationId) -> f64 {
        self.per_relation
            .get(&relation)
            .copied()
            .unwrap_or(self.global)
    }

    pub fn global(&self) -> f64 {
        self.global
    }

    pub fn relation_thresholds(&self) -> &BTreeMap<RelationId, f64> {
        &self.per_relation
    }

    /// Serializes as JSON keyed by relation symbol.
    pub fn to_json(&self, graph: &KnowledgeGraph) -> serde_json::Value {
        let per: BTreeMap<String, f64> = self
            .per_relation
            .iter()
            .map(|(&r, &v)| (graph.relation_symbol(r).to_owned(), v))
            .collect();
        serde_json::json!({ "global": self.global, "per_relation": per })
    }

    pub fn from_json(value: &serde_json::Value, graph: &KnowledgeGraph) -> Result<Self> {
        let global = value
            .get("global")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| Error::Config("threshold file missing `global`".into()))?;
        let mut per_relation = BTreeMap::new();
        if let Some(map) = value.get("per_relation").and_then(|v| v.as_object()) {
            for (symbol, v) in map {
                let relation =
                    graph
                        .resolve_relation(symbol)
                        .ok_or_else(|| Error::UnknownId {
                            kind: "relation",
                            symbol: symbol.clone(),
                        })?;
                let threshold = v.as_f64().ok_or_else(|| {
                    Error::Config(format!("non-numeric threshold for {symbol}"))
                })?;
                per_relation.insert(relation, threshold);
            }
        }
        Ok(ThresholdTable {
            per_relation,
            global,
        })
    }
}

/// Best accuracy threshold over the midpoints of adjacent sorted scores.
///
/// Classification is `score >= threshold`; ties between equally accurate
/// candidates resolve toward the larger threshold. With a single score the
/// candidate set degenerates to that score itself.
fn best_threshold(scored: &[(f64, bool)]) -> Option<f64> {
    if scored.is_empty() {
        return None;
    }
    let mut scores: Vec<f64> = scored.iter().map(|&(s, _)| s).collect();
    scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut candidates: Vec<f64> = scores
        .windows(2)
        .map(|w| w[0] + (w[1] - w[0]) / 2.0)
        .collect();
    if candidates.is_empty() {
        candidates.push(scores[0]);
    }
    candidates.dedup();

    let mut best = (f64::NEG_INFINITY, usize::MIN);
    for &candidate in &candidates {
        let correct = scored
            .iter()
            .filter(|&&(score, label)| (score >= candidate) == label)
            .count();
        // `>=` keeps the largest threshold among ties as we ascend.
        if correct >= best.1 {
            best = (candidate, correct);
        }
    }
    Some(best.0)
}

/// Tunes per-relation thresholds on a labeled validation set.
///
/// Relations absent from the validation set inherit the global threshold,
/// which is tuned on the pooled set.
pub fn tune_thresholds(
    table: &EmbeddingTable,
    validation: &[LabeledTriple],
) -> Result<ThresholdTable> {
    if validation.is_empty() {
        return Err(Error::Validation(
            "cannot tune thresholds on an empty validation set".into(),
        ));
    }
    let mut pooled = Vec::with_capacity(validation.len());
    let mut by_relation: BTreeMap<RelationId, Vec<(f64, bool)>> = BTreeMap::new();
    for lt in validation {
        let score = table.score(lt.triple)?;
        pooled.push((score, lt.label));
        by_relation
            .entry(lt.triple.relation)
            .or_default()
            .push((score, lt.label));
    }
    let global = best_threshold(&pooled).expect("validation set is non-empty");
    let per_relation = by_relation
        .into_iter()
        .map(|(r, scored)| (r, best_threshold(&scored).unwrap()))
        .collect();
    Ok(ThresholdTable {
        per_relation,
        global,
    })
}

/// Structural classification: plausible iff the score clears the relation's
/// threshold.
pub fn classify_kge(
    table: &EmbeddingTable,
    thresholds: &ThresholdTable,
    triple: Triple,
) -> Result<bool> {
    Ok(table.score(triple)? >= thresholds.resolve(triple.relation))
}
