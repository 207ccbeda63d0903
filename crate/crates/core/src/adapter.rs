//! Linear prefix projection and the toy fusion decoder.
//!
//! The adapter maps the concatenated flattened embeddings of a triple into a
//! `d_token`-dimensional prefix: `v = W (v_h ⊕ v_r ⊕ v_t) + b`. A logistic
//! decoder over `[prefix ⊕ verdict one-hot ⊕ squashed score]` stands in for
//! a full language model: it is small enough to gradient-check by finite
//! differences while exercising the same fusion mechanism end to end. The
//! embedding table stays frozen throughout; only adapter and decoder
//! parameters move.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{LabeledTriple, Triple};
use crate::kge::{EmbeddingTable, ThresholdTable};
use crate::reasoner::{Reasoner, Verdict};
use crate::util::hash::to_hex;
use crate::util::rng::Rng;
use crate::verbalizer::TripleSymbols;

/// Number of fusion features appended after the prefix: the three-way
/// verdict one-hot plus the squashed score.
const EXTRA_FEATURES: usize = 4;

/// Linear projection weights bound to one embedding table.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterWeights {
    d_token: usize,
    in_dim: usize,
    seed: u64,
    table_fingerprint: [u8; 32],
    /// Row-major `d_token × in_dim`.
    w: Vec<f64>,
    b: Vec<f64>,
}

impl AdapterWeights {
    pub fn new(d_token: usize, in_dim: usize, seed: u64, table_fingerprint: [u8; 32]) -> Self {
        let mut rng = Rng::seed_from(seed);
        let bound = 1.0 / (in_dim as f64).sqrt();
        let w = (0..d_token * in_dim)
            .map(|_| rng.uniform(-bound, bound))
            .collect();
        let b = vec![0.0; d_token];
        AdapterWeights {
            d_token,
            in_dim,
            seed,
            table_fingerprint,
            w,
            b,
        }
    }

    pub fn from_parts(
        d_token: usize,
        in_dim: usize,
        seed: u64,
        table_fingerprint: [u8; 32],
        w: Vec<f64>,
        b: Vec<f64>,
    ) -> Result<Self> {
        if w.len() != d_token * in_dim || b.len() != d_token {
            return Err(Error::Validation(format!(
                "adapter shape mismatch: |W| = {}, |b| = {}, expected {}x{}",
                w.len(),
                b.len(),
                d_token,
                in_dim
            )));
        }
        Ok(AdapterWeights {
            d_token,
            in_dim,
            seed,
            table_fingerprint,
            w,
            b,
        })
    }

    pub fn d_token(&self) -> usize {
        self.d_token
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn table_fingerprint(&self) -> &[u8; 32] {
        &self.table_fingerprint
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn bias(&self) -> &[f64] {
        &self.b
    }

    pub fn set_weight(&mut self, index: usize, value: f64) {
        self.w[index] = value;
    }

    /// `W x + b` over an already-assembled feature vector.
    pub fn project_features(&self, features: &[f64]) -> Vec<f64> {
        debug_assert_eq!(features.len(), self.in_dim);
        let mut out = self.b.clone();
        for (row, slot) in out.iter_mut().enumerate() {
            let w_row = &self.w[row * self.in_dim..(row + 1) * self.in_dim];
            let mut acc = 0.0;
            for (w, x) in w_row.iter().zip(features) {
                acc += w * x;
            }
            *slot += acc;
        }
        out
    }
}

/// Concatenated flattened embeddings of a triple, the projection input.
pub fn triple_features(table: &EmbeddingTable, triple: Triple) -> Result<Vec<f64>> {
    let mut features = Vec::with_capacity(3 * table.flat_dim());
    features.extend_from_slice(table.entity_flat(triple.head)?);
    features.extend(table.relation_flat(triple.relation)?);
    features.extend_from_slice(table.entity_flat(triple.tail)?);
    Ok(features)
}

/// Projects a triple into the token space.
///
/// The adapter refuses tables whose fingerprint differs from the one it was
/// trained against.
pub fn project_prefix(
    weights: &AdapterWeights,
    table: &EmbeddingTable,
    triple: Triple,
) -> Result<Vec<f64>> {
    if weights.table_fingerprint != *table.fingerprint() {
        return Err(Error::FingerprintMismatch {
            expected: to_hex(&weights.table_fingerprint),
            actual: to_hex(table.fingerprint()),
        });
    }
    if weights.in_dim != 3 * table.flat_dim() {
        return Err(Error::Validation(format!(
            "adapter input width {} does not match 3 x flat dim {}",
            weights.in_dim,
            3 * table.flat_dim()
        )));
    }
    Ok(weights.project_features(&triple_features(table, triple)?))
}

/// Logistic classification head over the fused feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyDecoder {
    /// Length `d_token + 4`.
    w: Vec<f64>,
    b: f64,
}

impl ToyDecoder {
    pub fn new(d_token: usize, seed: u64) -> Self {
        let mut rng = Rng::seed_from(seed ^ 0xD1CE_D0DE);
        let w = (0..d_token + EXTRA_FEATURES)
            .map(|_| rng.uniform(-0.1, 0.1))
            .collect();
        ToyDecoder { w, b: 0.0 }
    }

    pub fn zeroed(d_token: usize) -> Self {
        ToyDecoder {
            w: vec![0.0; d_token + EXTRA_FEATURES],
            b: 0.0,
        }
    }

    pub fn from_parts(w: Vec<f64>, b: f64) -> Self {
        ToyDecoder { w, b }
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn bias(&self) -> f64 {
        self.b
    }

    fn logit(&self, features: &[f64]) -> f64 {
        debug_assert_eq!(features.len(), self.w.len());
        let mut z = self.b;
        for (w, x) in self.w.iter().zip(features) {
            z += w * x;
        }
        z
    }

    /// Probability that the triple is true, in (0, 1).
    pub fn probability(&self, features: &[f64]) -> f64 {
        sigmoid(self.logit(features))
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

/// One-hot encoding of a verdict in [Satisfied, Violated, Unknown] order.
pub fn verdict_one_hot(verdict: &Verdict) -> [f64; 3] {
    match verdict {
        Verdict::Satisfied => [1.0, 0.0, 0.0],
        Verdict::Violated(_) => [0.0, 1.0, 0.0],
        Verdict::Unknown => [0.0, 0.0, 1.0],
    }
}

/// Squashes an unbounded score into (−1, 0].
pub fn squash_score(score: f64) -> f64 {
    score / (1.0 + score.abs())
}

/// Where an example's prefix comes from during fusion training.
#[derive(Debug, Clone)]
pub enum PrefixSource {
    /// Raw projection input; the prefix is `W x + b` and gradients flow
    /// into the adapter.
    Projected(Vec<f64>),
    /// A fixed vector (the randomized-prefix ablation); the adapter
    /// receives no gradient.
    Fixed(Vec<f64>),
}

/// One training example with everything but the trainable parameters baked.
#[derive(Debug, Clone)]
pub struct FusionExample {
    pub prefix: PrefixSource,
    pub verdict: [f64; 3],
    pub score: f64,
    pub label: bool,
}

impl FusionExample {
    fn assemble(&self, adapter: &AdapterWeights) -> Vec<f64> {
        let prefix = match &self.prefix {
            PrefixSource::Projected(x) => adapter.project_features(x),
            PrefixSource::Fixed(v) => v.clone(),
        };
        let mut features = prefix;
        features.extend_from_slice(&self.verdict);
        features.push(self.score);
        features
    }
}

/// Which signals the fusion classifier may use; the ablation axes.
#[derive(Debug, Clone, Copy)]
pub struct FeaturePolicy {
    pub use_structure: bool,
    pub use_ontology: bool,
    /// Seeds the random prefixes drawn when structure is disabled.
    pub seed: u64,
}

impl Default for FeaturePolicy {
    fn default() -> Self {
        FeaturePolicy {
            use_structure: true,
            use_ontology: true,
            seed: 0,
        }
    }
}

/// Builds one example under a policy.
///
/// Without structure, the prefix is drawn from a stream seeded by the policy
/// seed and the triple ids (never from the adapter), and the score feature
/// is zeroed; without ontology, the verdict one-hot is zeroed.
pub fn build_example(
    policy: FeaturePolicy,
    table: &EmbeddingTable,
    reasoner: &Reasoner<'_>,
    d_token: usize,
    labeled: LabeledTriple,
) -> Result<FusionExample> {
    let triple = labeled.triple;
    let prefix = if policy.use_structure {
        PrefixSource::Projected(triple_features(table, triple)?)
    } else {
        let mut rng = Rng::seed_from(
            policy
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(
                    (triple.head.index() as u64) << 40
                        | (triple.relation.index() as u64) << 20
                        | triple.tail.index() as u64,
                ),
        );
        PrefixSource::Fixed((0..d_token).map(|_| rng.uniform(-1.0, 1.0)).collect())
    };
    let verdict = if policy.use_ontology {
        verdict_one_hot(&reasoner.symbolic_verdict(triple))
    } else {
        [0.0; 3]
    };
    let score = if policy.use_structure {
        squash_score(table.score(triple)?)
    } else {
        0.0
    };
    Ok(FusionExample {
        prefix,
        verdict,
        score,
        label: labeled.label,
    })
}

/// Hyperparameters for fusion training.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusionTrainConfig {
    pub d_token: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Loss weight γ; scales every gradient linearly.
    pub gamma: f64,
    pub seed: u64,
}

impl Default for FusionTrainConfig {
    fn default() -> Self {
        FusionTrainConfig {
            d_token: 64,
            learning_rate: 0.5,
            epochs: 200,
            batch_size: 64,
            seed: 17,
            gamma: 1.0,
        }
    }
}

impl FusionTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gamma <= 0.0 || self.gamma.is_nan() {
            return Err(Error::Config(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        for (name, v) in [
            ("d_token", self.d_token as f64),
            ("learning_rate", self.learning_rate),
            ("epochs", self.epochs as f64),
            ("batch_size", self.batch_size as f64),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::Config(format!(
                    "fusion config field `{name}` must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Gradients of the fusion loss, in parameter layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionGradients {
    pub adapter_w: Vec<f64>,
    pub adapter_b: Vec<f64>,
    pub decoder_w: Vec<f64>,
    pub decoder_b: f64,
}

/// `γ · mean BCE(decoder(features), label)` over a batch.
pub fn fusion_loss(
    adapter: &AdapterWeights,
    decoder: &ToyDecoder,
    examples: &[FusionExample],
    gamma: f64,
) -> f64 {
    let mut total = 0.0;
    for ex in examples {
        let p = decoder.probability(&ex.assemble(adapter));
        let y = if ex.label { 1.0 } else { 0.0 };
        let eps = 1e-12;
        total -= y * (p + eps).ln() + (1.0 - y) * (1.0 - p + eps).ln();
    }
    gamma * total / examples.len().max(1) as f64
}

/// Analytic gradient of [`fusion_loss`].
///
/// γ multiplies the per-example logit gradient once, so doubling γ doubles
/// every gradient entry exactly.
pub fn fusion_gradient(
    adapter: &AdapterWeights,
    decoder: &ToyDecoder,
    examples: &[FusionExample],
    gamma: f64,
) -> FusionGradients {
    let d_token = adapter.d_token;
    let mut grads = FusionGradients {
        adapter_w: vec![0.0; adapter.w.len()],
        adapter_b: vec![0.0; adapter.b.len()],
        decoder_w: vec![0.0; decoder.w.len()],
        decoder_b: 0.0,
    };
    let scale = 1.0 / examples.len().max(1) as f64;
    for ex in examples {
        let features = ex.assemble(adapter);
        let p = decoder.probability(&features);
        let y = if ex.label { 1.0 } else { 0.0 };
        // d(γ·BCE)/dz = γ (p − y)
        let dz = gamma * (p - y) * scale;
        for (g, x) in grads.decoder_w.iter_mut().zip(&features) {
            *g += dz * x;
        }
        grads.decoder_b += dz;
        if let PrefixSource::Projected(x_in) = &ex.prefix {
            for row in 0..d_token {
                let dprefix = dz * decoder.w[row];
                grads.adapter_b[row] += dprefix;
                let w_row = &mut grads.adapter_w[row * adapter.in_dim..(row + 1) * adapter.in_dim];
                for (g, x) in w_row.iter_mut().zip(x_in) {
                    *g += dprefix * x;
                }
            }
        }
    }
    grads
}

/// Per-epoch training record.
#[derive(Debug, Clone, Serialize)]
pub struct FusionEpoch {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_accuracy: f64,
}

/// A trained adapter/decoder pair with its trace.
#[derive(Debug, Clone)]
pub struct FusionOutcome {
    pub adapter: AdapterWeights,
    pub decoder: ToyDecoder,
    pub trace: Vec<FusionEpoch>,
}

/// Trains the adapter and decoder by SGD on the γ-weighted cross-entropy.
///
/// The embedding table is read-only here; its checkpoint bytes are identical
/// before and after by construction, which the test suite asserts.
pub fn train_fusion(
    table: &EmbeddingTable,
    reasoner: &Reasoner<'_>,
    train_set: &[LabeledTriple],
    valid_set: &[LabeledTriple],
    config: &FusionTrainConfig,
    policy: FeaturePolicy,
) -> Result<FusionOutcome> {
    config.validate()?;
    let has_both = |set: &[LabeledTriple]| {
        set.iter().any(|t| t.label) && set.iter().any(|t| !t.label)
    };
    if !has_both(train_set) || !has_both(valid_set) {
        return Err(Error::Validation(
            "fusion training needs both labels in train and valid sets".into(),
        ));
    }

    let mut adapter = AdapterWeights::new(
        config.d_token,
        3 * table.flat_dim(),
        config.seed,
        *table.fingerprint(),
    );
    let mut decoder = ToyDecoder::new(config.d_token, config.seed);

    let train_examples: Vec<FusionExample> = train_set
        .iter()
        .map(|&lt| build_example(policy, table, reasoner, config.d_token, lt))
        .collect::<Result<_>>()?;
    let valid_examples: Vec<FusionExample> = valid_set
        .iter()
        .map(|&lt| build_example(policy, table, reasoner, config.d_token, lt))
        .collect::<Result<_>>()?;

    let mut rng = Rng::seed_from(config.seed ^ 0xF0F0_F0F0);
    let mut order: Vec<usize> = (0..train_examples.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            let examples: Vec<FusionExample> =
                batch.iter().map(|&i| train_examples[i].clone()).collect();
            let loss = fusion_loss(&adapter, &decoder, &examples, config.gamma);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_no,
                    detail: format!("fusion loss = {loss}"),
                });
            }
            epoch_loss += loss * examples.len() as f64;
            let grads = fusion_gradient(&adapter, &decoder, &examples, config.gamma);
            for (w, g) in adapter.w.iter_mut().zip(&grads.adapter_w) {
                *w -= config.learning_rate * g;
            }
            for (b, g) in adapter.b.iter_mut().zip(&grads.adapter_b) {
                *b -= config.learning_rate * g;
            }
            for (w, g) in decoder.w.iter_mut().zip(&grads.decoder_w) {
                *w -= config.learning_rate * g;
            }
            decoder.b -= config.learning_rate * grads.decoder_b;
        }
        let valid_accuracy = valid_examples
            .iter()
            .filter(|ex| (decoder.probability(&ex.assemble(&adapter)) >= 0.5) == ex.label)
            .count() as f64
            / valid_examples.len() as f64;
        trace.push(FusionEpoch {
            epoch,
            train_loss: epoch_loss / train_examples.len() as f64,
            valid_accuracy,
        });
    }

    Ok(FusionOutcome {
        adapter,
        decoder,
        trace,
    })
}

/// Everything behind one fused decision, for audit output.
#[derive(Debug, Clone, Serialize)]
pub struct ExplanationRecord {
    pub triple: TripleSymbols,
    pub verdict: String,
    pub violated_axioms: Vec<String>,
    pub selected_axioms: Vec<String>,
    pub kge_score: f64,
    pub kge_vote: bool,
    pub probability: f64,
    pub label: bool,
}

/// A fused classification with its explanation.
#[derive(Debug, Clone)]
pub struct FusedDecision {
    pub label: bool,
    pub probability: f64,
    pub explanation: ExplanationRecord,
}

/// Classifies one triple with the fused head.
///
/// Probability at least 0.5 classifies true. The explanation carries the
/// symbolic verdict, the axioms selected for the triple, and the structural
/// score and vote.
pub fn classify_fused(
    adapter: &AdapterWeights,
    decoder: &ToyDecoder,
    table: &EmbeddingTable,
    reasoner: &Reasoner<'_>,
    thresholds: &ThresholdTable,
    triple: Triple,
    policy: FeaturePolicy,
) -> Result<FusedDecision> {
    let graph = reasoner.graph();
    let example = build_example(
        policy,
        table,
        reasoner,
        adapter.d_token,
        LabeledTriple {
            triple,
            label: false,
        },
    )?;
    let probability = decoder.probability(&example.assemble(adapter));
    let label = probability >= 0.5;

    let verdict = reasoner.symbolic_verdict(triple);
    let violated_axioms = match &verdict {
        Verdict::Violated(axioms) => axioms
            .iter()
            .map(|a| {
                crate::ontology::axiom_line(a, graph, reasoner.ontology().classes())
            })
            .collect(),
        _ => Vec::new(),
    };
    let selected_axioms = crate::verbalizer::select_relevant(
        reasoner.ontology(),
        reasoner.closure(),
        triple,
        graph,
    )
    .iter()
    .map(|a| crate::ontology::axiom_line(a, graph, reasoner.ontology().classes()))
    .collect();
    let kge_score = table.score(triple)?;
    Ok(FusedDecision {
        label,
        probability,
        explanation: ExplanationRecord {
            triple: TripleSymbols::of(graph, triple),
            verdict: verdict.name().to_owned(),
            violated_axioms,
            selected_axioms,
            kge_score,
            kge_vote: kge_score >= thresholds.resolve(triple.relation),
            probability,
            label,
        },
    })
}

const ADAPTER_MAGIC: &[u8; 8] = b"KGCADP1\n";
const ADAPTER_VERSION: u32 = 1;

/// Serializes an adapter/decoder pair.
pub fn adapter_to_bytes(adapter: &AdapterWeights, decoder: &ToyDecoder) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(ADAPTER_MAGIC);
    out.extend_from_slice(&ADAPTER_VERSION.to_le_bytes());
    out.extend_from_slice(&(adapter.d_token as u32).to_le_bytes());
    out.extend_from_slice(&(adapter.in_dim as u32).to_le_bytes());
    out.extend_from_slice(&adapter.seed.to_le_bytes());
    out.extend_from_slice(&adapter.table_fingerprint);
    for v in adapter.w.iter().chain(&adapter.b).chain(&decoder.w) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&decoder.b.to_le_bytes());
    out
}

/// Parses an adapter/decoder checkpoint.
pub fn adapter_from_bytes(bytes: &[u8]) -> Result<(AdapterWeights, ToyDecoder)> {
    let corrupt = |msg: &str| Error::Validation(format!("corrupt adapter checkpoint: {msg}"));
    let mut cursor = std::io::Cursor::new(bytes);
    let mut magic = [0u8; 8];
    cursor.read_exact(&mut magic).map_err(|_| corrupt("truncated"))?;
    if &magic != ADAPTER_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut u32buf = [0u8; 4];
    cursor.read_exact(&mut u32buf).map_err(|_| corrupt("truncated"))?;
    if u32::from_le_bytes(u32buf) != ADAPTER_VERSION {
        return Err(corrupt("unsupported version"));
    }
    cursor.read_exact(&mut u32buf).map_err(|_| corrupt("truncated"))?;
    let d_token = u32::from_le_bytes(u32buf) as usize;
    cursor.read_exact(&mut u32buf).map_err(|_| corrupt("truncated"))?;
    let in_dim = u32::from_le_bytes(u32buf) as usize;
    let mut u64buf = [0u8; 8];
    cursor.read_exact(&mut u64buf).map_err(|_| corrupt("truncated"))?;
    let seed = u64::from_le_bytes(u64buf);
    let mut fingerprint = [0u8; 32];
    cursor.read_exact(&mut fingerprint).map_err(|_| corrupt("truncated"))?;
    let mut read_f64s = |n: usize| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        let mut buf = [0u8; 8];
        for _ in 0..n {
            cursor.read_exact(&mut buf).map_err(|_| corrupt("truncated array"))?;
            out.push(f64::from_le_bytes(buf));
        }
        Ok(out)
    };
    let w = read_f64s(d_token * in_dim)?;
    let b = read_f64s(d_token)?;
    let dec_w = read_f64s(d_token + EXTRA_FEATURES)?;
    let dec_b = read_f64s(1)?[0];
    Ok((
        AdapterWeights::from_parts(d_token, in_dim, seed, fingerprint, w, b)?,
        ToyDecoder::from_parts(dec_w, dec_b),
    ))
}

pub fn write_adapter(adapter: &AdapterWeights, decoder: &ToyDecoder, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&adapter_to_bytes(adapter, decoder))?;
    Ok(())
}

pub fn read_adapter(path: &Path) -> Result<(AdapterWeights, ToyDecoder)> {
    let bytes = std::fs::read(path)?;
    adapter_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kge::ScorerKind;

    fn identity_adapter(n: usize) -> AdapterWeights {
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            w[i * n + i] = 1.0;
        }
        AdapterWeights::from_parts(n, n, 0, [0; 32], w, vec![0.0; n]).unwrap()
    }

    fn tiny_table() -> EmbeddingTable {
        // 2 entities, 1 relation, d_e = 2, rotational: flat dim 4.
        EmbeddingTable::from_parts(
            ScorerKind::Rotational,
            2,
            2,
            1,
            0,
            [0; 32],
            vec![0.1, 0.2, 0.3, 0.4, -0.5, -0.6, -0.7, -0.8],
            vec![0.0, std::f64::consts::FRAC_PI_2],
        )
        .unwrap()
    }

    fn tiny_triple() -> Triple {
        Triple::new(
            crate::kg::EntityId::from_index(0),
            crate::kg::RelationId::from_index(0),
            crate::kg::EntityId::from_index(1),
        )
    }

    #[test]
    fn identity_projection_returns_concatenation() {
        let table = tiny_table();
        let adapter = identity_adapter(3 * table.flat_dim());
        let prefix = project_prefix(&adapter, &table, tiny_triple()).unwrap();
        let expect = triple_features(&table, tiny_triple()).unwrap();
        assert_eq!(prefix, expect);
    }

    #[test]
    fn zero_weights_return_bias_for_every_triple() {
        let table = tiny_table();
        let n = 3 * table.flat_dim();
        let bias: Vec<f64> = (0..5).map(|i| i as f64 / 2.0).collect();
        let adapter =
            AdapterWeights::from_parts(5, n, 0, [0; 32], vec![0.0; 5 * n], bias.clone()).unwrap();
        let t = tiny_triple();
        assert_eq!(project_prefix(&adapter, &table, t).unwrap(), bias);
        let t2 = Triple::new(
            crate::kg::EntityId::from_index(1),
            crate::kg::RelationId::from_index(0),
            crate::kg::EntityId::from_index(0),
        );
        assert_eq!(project_prefix(&adapter, &table, t2).unwrap(), bias);
    }

    #[test]
    fn projection_matches_hand_multiply() {
        let mut rng = Rng::seed_from(21);
        let in_dim = 6;
        let d_token = 3;
        let w: Vec<f64> = (0..d_token * in_dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let b: Vec<f64> = (0..d_token).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let x: Vec<f64> = (0..in_dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let adapter =
            AdapterWeights::from_parts(d_token, in_dim, 0, [0; 32], w.clone(), b.clone()).unwrap();
        let got = adapter.project_features(&x);
        for row in 0..d_token {
            let mut expect = b[row];
            for col in 0..in_dim {
                expect += w[row * in_dim + col] * x[col];
            }
            assert!((got[row] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn fingerprint_mismatch_is_refused_naming_both() {
        let table = tiny_table();
        let adapter = AdapterWeights::new(4, 3 * table.flat_dim(), 0, [9; 32]);
        let err = project_prefix(&adapter, &table, tiny_triple()).unwrap_err();
        match err {
            Error::FingerprintMismatch { expected, actual } => {
                assert!(expected.starts_with("09"));
                assert!(actual.starts_with("00"));
            }
            other => panic!("expected fingerprint mismatch, got {other}"),
        }
    }

    #[test]
    fn projection_is_affine_in_the_features() {
        // project(αx + βy) = α project(x) + β project(y) − (α+β−1) b.
        let mut rng = Rng::seed_from(33);
        let in_dim = 8;
        let adapter = AdapterWeights::from_parts(
            4,
            in_dim,
            0,
            [0; 32],
            (0..4 * in_dim).map(|_| rng.uniform(-1.0, 1.0)).collect(),
            (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect(),
        )
        .unwrap();
        let x: Vec<f64> = (0..in_dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let y: Vec<f64> = (0..in_dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let (alpha, beta) = (0.7, -1.3);
        let mix: Vec<f64> = x
            .iter()
            .zip(&y)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        let lhs = adapter.project_features(&mix);
        let px = adapter.project_features(&x);
        let py = adapter.project_features(&y);
        for i in 0..4 {
            let rhs = alpha * px[i] + beta * py[i] - (alpha + beta - 1.0) * adapter.bias()[i];
            assert!((lhs[i] - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_decoder_gives_exactly_half_and_classifies_true() {
        let decoder = ToyDecoder::zeroed(4);
        let features = vec![0.25; 4 + EXTRA_FEATURES];
        let p = decoder.probability(&features);
        assert_eq!(p, 0.5);
        assert!(p >= 0.5, "0.5 classifies true under the >= rule");
    }

    #[test]
    fn gamma_scales_gradients_exactly() {
        let mut rng = Rng::seed_from(4);
        let in_dim = 6;
        let adapter = AdapterWeights::new(3, in_dim, 1, [0; 32]);
        let decoder = ToyDecoder::new(3, 1);
        let examples: Vec<FusionExample> = (0..8)
            .map(|i| FusionExample {
                prefix: PrefixSource::Projected(
                    (0..in_dim).map(|_| rng.uniform(-1.0, 1.0)).collect(),
                ),
                verdict: [1.0, 0.0, 0.0],
                score: rng.uniform(-1.0, 0.0),
                label: i % 2 == 0,
            })
            .collect();
        let g1 = fusion_gradient(&adapter, &decoder, &examples, 1.0);
        let g2 = fusion_gradient(&adapter, &decoder, &examples, 2.0);
        for (a, b) in g1.adapter_w.iter().zip(&g2.adapter_w) {
            assert_eq!(*b, 2.0 * *a);
        }
        for (a, b) in g1.decoder_w.iter().zip(&g2.decoder_w) {
            assert_eq!(*b, 2.0 * *a);
        }
        assert_eq!(g2.decoder_b, 2.0 * g1.decoder_b);
    }

    #[test]
    fn adapter_checkpoint_round_trips() {
        let adapter = AdapterWeights::new(4, 6, 9, [3; 32]);
        let decoder = ToyDecoder::new(4, 9);
        let bytes = adapter_to_bytes(&adapter, &decoder);
        let (a2, d2) = adapter_from_bytes(&bytes).unwrap();
        assert_eq!(a2, adapter);
        assert_eq!(d2, decoder);
    }
}
