//! Neuro-symbolic knowledge-graph-completion toolkit.
//!
//! The crate combines three signals to decide whether a candidate triple
//! (head, relation, tail) is true:
//!
//! - **Structure**: self-supervised embeddings scored with a rotational (or
//!   translational) operator, thresholded per relation ([`kge`]).
//! - **Symbols**: ontology axioms (classes, subclass hierarchy, domain/range,
//!   compositions, equivalence, disjointness) checked and materialized by the
//!   [`reasoner`]; axioms are mined from the graph or parsed from model
//!   output by the [`extractor`].
//! - **Text**: axioms and triples verbalized into prompts ([`verbalizer`])
//!   for an external chat model ([`gateway`]), or fused with a frozen
//!   embedding prefix in a small trainable classifier ([`adapter`]).
//!
//! [`eval`] holds the triple-classification metrics and ablation drivers;
//! [`synth`] generates the synthetic benchmarks used by the test suites.

pub mod adapter;
pub mod error;
pub mod eval;
pub mod extractor;
pub mod gateway;
pub mod kg;
pub mod kge;
pub mod ontology;
pub mod reasoner;
pub mod synth;
pub mod util;
pub mod verbalizer;

pub use error::{Error, Result};
pub use kg::{
    CorruptionStrategy, DescriptionMap, EntityId, KnowledgeGraph, LabeledTriple, RelationId,
    Split, Triple,
};
pub use ontology::{AxiomTag, ClassId, ClassTable, ClosureMap, Ontology, OntologyAxiom};
pub use reasoner::{InferenceRecord, Reasoner, ReasonerConfig, Verdict};
