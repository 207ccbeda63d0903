//! Self-supervised embedding pretraining.
//!
//! Minimizes the self-adversarial margin loss
//!
//! ```text
//! L = -log σ(γ + f(pos)) - Σ_j w_j · log σ(-f(neg_j) - γ)
//! w_j = softmax_j(α · f(neg_j))     (held constant under the gradient)
//! ```
//!
//! Gradients are hand-derived; there is no autodiff anywhere. Training is
//! bit-reproducible for a fixed seed when run single-threaded, which is the
//! only mode implemented here.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Split, Triple};
use crate::util::hash::sha256;
use crate::util::rng::Rng;

use super::{EmbeddingTable, ScorerKind};

/// Hyperparameters for embedding pretraining.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub scorer: ScorerKind,
    pub d_e: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub negatives_per_positive: usize,
    /// Margin γ of the loss.
    pub margin: f64,
    /// Self-adversarial temperature α.
    pub adversarial_temperature: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            scorer: ScorerKind::Rotational,
            d_e: 200,
            learning_rate: 5e-2,
            epochs: 1000,
            batch_size: 512,
            negatives_per_positive: 8,
            margin: 6.0,
            adversarial_temperature: 1.0,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("d_e", self.d_e as f64),
            ("learning_rate", self.learning_rate),
            ("epochs", self.epochs as f64),
            ("batch_size", self.batch_size as f64),
            ("negatives_per_positive", self.negatives_per_positive as f64),
            ("margin", self.margin),
            ("adversarial_temperature", self.adversarial_temperature),
        ];
        for (name, value) in positives {
            if value <= 0.0 || !value.is_finite() {
                return Err(Error::Config(format!(
                    "train config field `{name}` must be positive, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Digest stored in checkpoints; adapters use it to refuse tables they
    /// were not trained against.
    pub fn fingerprint(&self) -> [u8; 32] {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        sha256(&canonical)
    }
}

/// A trained table plus its per-epoch mean loss trace.
#[derive(Debug, Clone)]
pub struct TrainedEmbeddings {
    pub table: EmbeddingTable,
    pub loss_trace: Vec<f64>,
}

/// One positive with its sampled negatives and (frozen) adversarial weights.
#[derive(Debug, Clone)]
pub struct LossGroup {
    pub positive: Triple,
    pub negatives: Vec<Triple>,
    /// Softmax weights over the negatives, treated as constants by the
    /// gradient. Must sum to 1 unless `negatives` is empty.
    pub weights: Vec<f64>,
}

/// Sparse gradients keyed by entity/relation index, exposed for the
/// finite-difference oracle.
#[derive(Debug, Clone, Default)]
pub struct GradientMap {
    pub entity: BTreeMap<usize, Vec<f64>>,
    pub relation: BTreeMap<usize, Vec<f64>>,
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Softmax of `α * score_j` over a group's negatives.
pub fn adversarial_weights(scores: &[f64], temperature: f64) -> Vec<f64> {
    if scores.is_empty() {
        return Vec::new();
    }
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (temperature * (s - m)).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Loss of a batch of groups with the weights held fixed.
pub fn batch_loss(table: &EmbeddingTable, groups: &[LossGroup], margin: f64) -> f64 {
    let mut total = 0.0;
    for group in groups {
        total += group_loss(table, group, margin);
    }
    total / groups.len().max(1) as f64
}

fn group_loss(table: &EmbeddingTable, group: &LossGroup, margin: f64) -> f64 {
    let pos = table.score_unchecked(group.positive);
    let mut loss = -log_sigmoid(margin + pos);
    for (neg, w) in group.negatives.iter().zip(&group.weights) {
        let s = table.score_unchecked(*neg);
        loss -= w * log_sigmoid(-s - margin);
    }
    loss
}

/// Analytic gradient of [`batch_loss`], averaged over the batch.
pub fn batch_gradient(table: &EmbeddingTable, groups: &[LossGroup], margin: f64) -> GradientMap {
    let mut sink = GradSink::new(table);
    accumulate_batch(table, groups, margin, &mut sink);
    sink.into_map(table)
}

fn accumulate_batch(table: &EmbeddingTable, groups: &[LossGroup], margin: f64, sink: &mut GradSink) {
    let scale = 1.0 / groups.len().max(1) as f64;
    for group in groups {
        let pos_score = table.score_unchecked(group.positive);
        // d/ds [-log σ(γ + s)] = σ(γ + s) − 1
        let pos_coeff = scale * (sigmoid(margin + pos_score) - 1.0);
        accumulate_score_grad(table, group.positive, pos_coeff, sink);
        for (neg, w) in group.negatives.iter().zip(&group.weights) {
            let s = table.score_unchecked(*neg);
            // d/ds [-w log σ(-s - γ)] = w σ(s + γ)
            let coeff = scale * w * sigmoid(s + margin);
            accumulate_score_grad(table, *neg, coeff, sink);
        }
    }
}

/// Adds `coeff * ∂f/∂θ` for every parameter the triple touches.
fn accumulate_score_grad(table: &EmbeddingTable, triple: Triple, coeff: f64, sink: &mut GradSink) {
    let d = table.dim();
    let norm = -table.score_unchecked(triple);
    if norm < 1e-12 {
        // f is non-differentiable at the optimum; the subgradient is 0.
        return;
    }
    let inv = coeff / norm;
    let h_idx = triple.head.index();
    let t_idx = triple.tail.index();
    let r_idx = triple.relation.index();
    let es = table.entity_stride();
    let rs = table.relation_stride();
    let h = &table.entity_params()[h_idx * es..(h_idx + 1) * es];
    let t = &table.entity_params()[t_idx * es..(t_idx + 1) * es];
    let r = &table.relation_params()[r_idx * rs..(r_idx + 1) * rs];

    sink.touch_entity(h_idx);
    sink.touch_entity(t_idx);
    sink.touch_relation(r_idx);

    match table.scorer() {
        ScorerKind::Rotational => {
            for k in 0..d {
                let (sin, cos) = r[k].sin_cos();
                let a = h[k] * cos - h[d + k] * sin - t[k];
                let b = h[k] * sin + h[d + k] * cos - t[d + k];
                // f = -‖u‖: ∂f/∂x = -(a ∂a/∂x + b ∂b/∂x)/‖u‖.
                sink.ent[h_idx * es + k] += -(a * cos + b * sin) * inv;
                sink.ent[h_idx * es + d + k] += (a * sin - b * cos) * inv;
                sink.ent[t_idx * es + k] += a * inv;
                sink.ent[t_idx * es + d + k] += b * inv;
                sink.rel[r_idx * rs + k] += (a * t[d + k] - b * t[k]) * inv;
            }
        }
        ScorerKind::Translational => {
            for k in 0..d {
                let u = h[k] + r[k] - t[k];
                sink.ent[h_idx * es + k] += -u * inv;
                sink.rel[r_idx * rs + k] += -u * inv;
                sink.ent[t_idx * es + k] += u * inv;
            }
        }
    }
}

/// Dense gradient buffers with a touched-index list so only written slices
/// are consumed and zeroed.
struct GradSink {
    ent: Vec<f64>,
    rel: Vec<f64>,
    touched_ent: Vec<usize>,
    ent_seen: Vec<bool>,
    touched_rel: Vec<usize>,
    rel_seen: Vec<bool>,
}

impl GradSink {
    fn new(table: &EmbeddingTable) -> Self {
        GradSink {
            ent: vec![0.0; table.entity_params().len()],
            rel: vec![0.0; table.relation_params().len()],
            touched_ent: Vec::new(),
            ent_seen: vec![false; table.entity_count()],
            touched_rel: Vec::new(),
            rel_seen: vec![false; table.relation_count()],
        }
    }

    fn touch_entity(&mut self, index: usize) {
        if !self.ent_seen[index] {
            self.ent_seen[index] = true;
            self.touched_ent.push(index);
        }
    }

    fn touch_relation(&mut self, index: usize) {
        if !self.rel_seen[index] {
            self.rel_seen[index] = true;
            self.touched_rel.push(index);
        }
    }

    fn clear(&mut self, ent_stride: usize, rel_stride: usize) {
        for &e in &self.touched_ent {
            self.ent[e * ent_stride..(e + 1) * ent_stride].fill(0.0);
            self.ent_seen[e] = false;
        }
        for &r in &self.touched_rel {
            self.rel[r * rel_stride..(r + 1) * rel_stride].fill(0.0);
            self.rel_seen[r] = false;
        }
        self.touched_ent.clear();
        self.touched_rel.clear();
    }

    fn into_map(self, table: &EmbeddingTable) -> GradientMap {
        let es = table.entity_stride();
        let rs = table.relation_stride();
        let mut map = GradientMap::default();
        for &e in &self.touched_ent {
            map.entity.insert(e, self.ent[e * es..(e + 1) * es].to_vec());
        }
        for &r in &self.touched_rel {
            map.relation.insert(r, self.rel[r * rs..(r + 1) * rs].to_vec());
        }
        map
    }
}

/// Trains embeddings on the train split.
///
/// Per-coordinate Adagrad scaling; one synchronized parameter update per
/// batch; the loss trace records the mean per-positive loss of each epoch.
pub fn train(graph: &KnowledgeGraph, config: &TrainConfig) -> Result<TrainedEmbeddings> {
    config.validate()?;
    let positives: Vec<Triple> = graph.triples(Split::Train).collect();
    if positives.is_empty() {
        return Err(Error::Validation("train split is empty".into()));
    }
    let n_entities = graph.entity_count();
    let n_relations = graph.relation_count();
    let d = config.d_e;
    let mut rng = Rng::seed_from(config.seed);

    let mut table = {
        let (ent, rel) = match config.scorer {
            ScorerKind::Rotational => {
                let bound = (config.margin + 2.0) / d as f64;
                let ent: Vec<f64> = (0..n_entities * 2 * d)
                    .map(|_| rng.uniform(-bound, bound))
                    .collect();
                let rel: Vec<f64> = (0..n_relations * d)
                    .map(|_| rng.uniform(0.0, 2.0 * std::f64::consts::PI))
                    .collect();
                (ent, rel)
            }
            ScorerKind::Translational => {
                let bound = 6.0 / (d as f64).sqrt();
                let ent: Vec<f64> = (0..n_entities * d)
                    .map(|_| rng.uniform(-bound, bound))
                    .collect();
                let rel: Vec<f64> = (0..n_relations * d)
                    .map(|_| rng.uniform(-bound, bound))
                    .collect();
                (ent, rel)
            }
        };
        EmbeddingTable::from_parts(
            config.scorer,
            d,
            n_entities,
            n_relations,
            config.seed,
            config.fingerprint(),
            ent,
            rel,
        )?
    };

    let mut ent_accum = vec![0.0f64; table.entity_params().len()];
    let mut rel_accum = vec![0.0f64; table.relation_params().len()];
    let mut sink = GradSink::new(&table);
    let mut order: Vec<usize> = (0..positives.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    let es = table.entity_stride();
    let rs = table.relation_stride();

    for epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            let groups: Vec<LossGroup> = batch
                .iter()
                .map(|&i| {
                    let positive = positives[i];
                    let negatives: Vec<Triple> = (0..config.negatives_per_positive)
                        .map(|_| {
                            let replacement = EntityId::from_index(rng.below(n_entities));
                            if rng.bool() {
                                Triple::new(replacement, positive.relation, positive.tail)
                            } else {
                                Triple::new(positive.head, positive.relation, replacement)
                            }
                        })
                        .collect();
                    let scores: Vec<f64> = negatives
                        .iter()
                        .map(|&n| table.score_unchecked(n))
                        .collect();
                    let weights = adversarial_weights(&scores, config.adversarial_temperature);
                    LossGroup {
                        positive,
                        negatives,
                        weights,
                    }
                })
                .collect();

            let loss = batch_loss(&table, &groups, config.margin);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_no,
                    detail: format!("batch loss = {loss}"),
                });
            }
            epoch_loss += loss * groups.len() as f64;

            accumulate_batch(&table, &groups, config.margin, &mut sink);
            // Adagrad: per-coordinate step; updates are independent across
            // coordinates, so application order does not affect the result.
            for &e in &sink.touched_ent {
                let span = e * es..(e + 1) * es;
                let params = &mut table.entity_params_mut()[span.clone()];
                for ((g, acc), p) in sink.ent[span.clone()]
                    .iter()
                    .zip(&mut ent_accum[span])
                    .zip(params)
                {
                    *acc += g * g;
                    *p -= config.learning_rate * g / (acc.sqrt() + 1e-10);
                }
            }
            for &r in &sink.touched_rel {
                let span = r * rs..(r + 1) * rs;
                let params = &mut table.relation_params_mut()[span.clone()];
                for ((g, acc), p) in sink.rel[span.clone()]
                    .iter()
                    .zip(&mut rel_accum[span])
                    .zip(params)
                {
                    *acc += g * g;
                    *p -= config.learning_rate * g / (acc.sqrt() + 1e-10);
                }
            }
            sink.clear(es, rs);
        }
        loss_trace.push(epoch_loss / positives.len() as f64);
    }

    Ok(TrainedEmbeddings { table, loss_trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{generate_negatives, CorruptionStrategy};

    fn toy_graph() -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new();
        g.load_triples_str(
            "a\tr0\tb\nb\tr0\tc\nc\tr1\td\nd\tr1\te\na\tr1\tc\nb\tr1\td\ne\tr0\ta\n",
            Split::Train,
            "t",
        )
        .unwrap();
        g
    }

    fn small_config(scorer: ScorerKind) -> TrainConfig {
        TrainConfig {
            scorer,
            d_e: 16,
            learning_rate: 5e-2,
            epochs: 200,
            batch_size: 8,
            negatives_per_positive: 4,
            margin: 4.0,
            adversarial_temperature: 1.0,
            seed: 7,
        }
    }

    #[test]
    fn loss_trends_downward_on_toy_graph() {
        let g = toy_graph();
        let out = train(&g, &small_config(ScorerKind::Rotational)).unwrap();
        let first = out.loss_trace.first().unwrap();
        let last = out.loss_trace.last().unwrap();
        assert!(
            last < first,
            "final mean loss {last} not below initial {first}"
        );
    }

    #[test]
    fn positives_outscore_corrupted_negatives_after_training() {
        let g = toy_graph();
        let out = train(&g, &small_config(ScorerKind::Rotational)).unwrap();
        let pos_mean: f64 = g
            .triples(Split::Train)
            .map(|t| out.table.score(t).unwrap())
            .sum::<f64>()
            / g.triple_count(Split::Train) as f64;
        let negatives =
            generate_negatives(&g, Split::Train, 2.0, CorruptionStrategy::Both, 99).unwrap();
        let neg_mean: f64 = negatives
            .iter()
            .map(|lt| out.table.score(lt.triple).unwrap())
            .sum::<f64>()
            / negatives.len() as f64;
        assert!(
            pos_mean > neg_mean,
            "positives {pos_mean} should outscore negatives {neg_mean}"
        );
    }

    #[test]
    fn training_is_bit_reproducible() {
        let g = toy_graph();
        let cfg = small_config(ScorerKind::Rotational);
        let a = train(&g, &cfg).unwrap();
        let b = train(&g, &cfg).unwrap();
        assert_eq!(a.table.entity_params(), b.table.entity_params());
        assert_eq!(a.table.relation_params(), b.table.relation_params());
        assert_eq!(a.loss_trace, b.loss_trace);
    }

    #[test]
    fn unit_modulus_holds_after_training() {
        let g = toy_graph();
        let out = train(&g, &small_config(ScorerKind::Rotational)).unwrap();
        for r in 0..out.table.relation_count() {
            let flat = out
                .table
                .relation_flat(crate::kg::RelationId::from_index(r))
                .unwrap();
            let d = out.table.dim();
            for k in 0..d {
                let modulus = flat[k] * flat[k] + flat[d + k] * flat[d + k];
                assert!((modulus - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn translational_scorer_also_trains() {
        let g = toy_graph();
        let out = train(&g, &small_config(ScorerKind::Translational)).unwrap();
        assert!(out.loss_trace.last().unwrap() < out.loss_trace.first().unwrap());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let g = toy_graph();
        let mut cfg = small_config(ScorerKind::Rotational);
        cfg.margin = 0.0;
        assert!(train(&g, &cfg).is_err());
        let mut cfg = small_config(ScorerKind::Rotational);
        cfg.epochs = 0;
        assert!(train(&g, &cfg).is_err());
    }

    #[test]
    fn empty_train_split_is_rejected() {
        let g = KnowledgeGraph::new();
        assert!(train(&g, &TrainConfig::default()).is_err());
    }

    #[test]
    fn adversarial_weights_sum_to_one() {
        let w = adversarial_weights(&[-1.0, -5.0, -0.5], 1.0);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Higher-scoring negatives get more weight.
        assert!(w[2] > w[0] && w[0] > w[1]);
    }

    #[test]
    fn fingerprint_distinguishes_configs() {
        let a = small_config(ScorerKind::Rotational).fingerprint();
        let mut cfg = small_config(ScorerKind::Rotational);
        cfg.seed = 8;
        assert_ne!(a, cfg.fingerprint());
    }
}
