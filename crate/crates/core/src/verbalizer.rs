//! Axiom selection and rendering into prompt text.
//!
//! A prompt is assembled as `S = I ⊕ X ⊕ O` with newline separators:
//! instruction, triple text `X = D(h) ⊕ D(r) ⊕ D(t)` (single spaces, raw
//! symbols when a description is missing), and one rendered line per
//! selected axiom. Output is byte-deterministic so prompts can be cached and
//! golden-tested.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, Triple};
use crate::ontology::{AxiomTag, ClassId, ClosureMap, Ontology, OntologyAxiom};

/// Instruction used when none is configured, after the task's standard
/// phrasing.
pub const DEFAULT_INSTRUCTION: &str =
    "Please help determine whether the triple (h,r,t) is a valid triple. Answer True or False.";

/// One text template per axiom kind, with `{slot}` placeholders.
///
/// Slots by kind: class-assertion `{entity} {class}`; subclass
/// `{sub} {super}`; domain/range `{relation} {class}`; composition
/// `{result} {first} {second}`; equivalent/disjoint `{a} {b}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateDictionary {
    templates: [String; 7],
}

impl Default for TemplateDictionary {
    fn default() -> Self {
        TemplateDictionary {
            templates: [
                "The class of entity {entity} is {class}.".to_owned(),
                "Class {sub} is a subclass of {super}.".to_owned(),
                "The head entity of relation {relation} must belong to class {class}.".to_owned(),
                "The tail entity of relation {relation} must belong to class {class}.".to_owned(),
                "Relation {result} holds whenever {first} then {second} holds.".to_owned(),
                "Relations {a} and {b} are equivalent.".to_owned(),
                "Relations {a} and {b} cannot both hold between the same entities.".to_owned(),
            ],
        }
    }
}

impl TemplateDictionary {
    pub fn template(&self, tag: AxiomTag) -> &str {
        let idx = AxiomTag::ALL.iter().position(|t| *t == tag).unwrap();
        &self.templates[idx]
    }

    pub fn set_template(&mut self, tag: AxiomTag, template: &str) {
        let idx = AxiomTag::ALL.iter().position(|t| *t == tag).unwrap();
        self.templates[idx] = template.to_owned();
    }

    /// Parses a `tag<TAB>template` file. Every one of the seven tags must
    /// appear exactly once.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut seen = [false; 7];
        let mut dict = TemplateDictionary::default();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (tag_name, template) = line.split_once('\t').ok_or_else(|| Error::Parse {
                path: source.to_owned(),
                line: lineno + 1,
                msg: "expected `tag<TAB>template`".to_owned(),
            })?;
            let tag: AxiomTag = tag_name.parse().map_err(|e: Error| Error::Parse {
                path: source.to_owned(),
                line: lineno + 1,
                msg: e.to_string(),
            })?;
            let idx = AxiomTag::ALL.iter().position(|t| *t == tag).unwrap();
            if seen[idx] {
                return Err(Error::Parse {
                    path: source.to_owned(),
                    line: lineno + 1,
                    msg: format!("duplicate template for tag `{tag}`"),
                });
            }
            seen[idx] = true;
            dict.templates[idx] = template.to_owned();
        }
        for (idx, tag) in AxiomTag::ALL.iter().enumerate() {
            if !seen[idx] {
                return Err(Error::Config(format!(
                    "template file {source} is missing a template for tag `{tag}`"
                )));
            }
        }
        Ok(dict)
    }

    /// Renders the dictionary in its file format.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (idx, tag) in AxiomTag::ALL.iter().enumerate() {
            out.push_str(tag.name());
            out.push('\t');
            out.push_str(&self.templates[idx]);
            out.push('\n');
        }
        out
    }
}

/// Instruction, triple text, ontology text, and the assembled sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub triple: TripleSymbols,
    #[serde(rename = "I")]
    pub instruction: String,
    #[serde(rename = "X")]
    pub triple_text: String,
    #[serde(rename = "O")]
    pub ontology_text: String,
    #[serde(rename = "S")]
    pub sequence: String,
}

/// Raw symbols of a triple, for prompt dumps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleSymbols {
    pub h: String,
    pub r: String,
    pub t: String,
}

impl TripleSymbols {
    pub fn of(graph: &KnowledgeGraph, triple: Triple) -> Self {
        TripleSymbols {
            h: graph.entity_symbol(triple.head).to_owned(),
            r: graph.relation_symbol(triple.relation).to_owned(),
            t: graph.entity_symbol(triple.tail).to_owned(),
        }
    }
}

/// Relevance selection: every axiom mentioning the triple's head, tail,
/// relation, any relation equivalent to it, or any class in the subclass
/// closure of the head's or tail's asserted classes.
///
/// Order is fixed: axiom kind first, then the rendered line lexicographically.
pub fn select_relevant(
    ontology: &Ontology,
    closure: &ClosureMap,
    triple: Triple,
    graph: &KnowledgeGraph,
) -> Vec<OntologyAxiom> {
    let relations = ontology.equivalence_closure(triple.relation);
    let mut classes: BTreeSet<ClassId> = BTreeSet::new();
    for entity in [triple.head, triple.tail] {
        for asserted in ontology.classes_of(entity) {
            classes.extend(closure.superclasses(asserted).iter().copied());
        }
    }

    let relevant = |axiom: &OntologyAxiom| -> bool {
        match *axiom {
            OntologyAxiom::ClassAssertion { entity, class } => {
                entity == triple.head || entity == triple.tail || classes.contains(&class)
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
        }
    };

    let mut selected: Vec<(AxiomTag, String, OntologyAxiom)> = ontology
        .axioms()
        .into_iter()
        .filter(relevant)
        .map(|a| {
            (
                a.tag(),
                crate::ontology::axiom_line(&a, graph, ontology.classes()),
                a,
            )
        })
        .collect();
    selected.sort_by(|x, y| (x.0, &x.1).cmp(&(y.0, &y.1)));
    selected.into_iter().map(|(_, _, a)| a).collect()
}

/// Renders one axiom as a natural-language line.
///
/// Entity and relation slots use descriptions, falling back to the raw
/// symbol; class slots use the class symbol.
pub fn verbalize_axiom(
    axiom: &OntologyAxiom,
    graph: &KnowledgeGraph,
    ontology: &Ontology,
    templates: &TemplateDictionary,
) -> String {
    let template = templates.template(axiom.tag());
    let fill = |template: &str, slots: &[(&str, &str)]| -> String {
        let mut out = template.to_owned();
        for (slot, value) in slots {
            out = out.replace(&format!("{{{slot}}}"), value);
        }
        out
    };
    match *axiom {
        OntologyAxiom::ClassAssertion { entity, class } => fill(
            template,
            &[
                ("entity", graph.describe_entity(entity)),
                ("class", ontology.class_symbol(class)),
            ],
        ),
        OntologyAxiom::SubClassOf { sub, sup } => fill(
            template,
            &[
                ("sub", ontology.class_symbol(sub)),
                ("super", ontology.class_symbol(sup)),
            ],
        ),
        OntologyAxiom::Domain { relation, class } | OntologyAxiom::Range { relation, class } => {
            fill(
                template,
                &[
                    ("relation", graph.describe_relation(relation)),
                    ("class", ontology.class_symbol(class)),
                ],
            )
        }
        OntologyAxiom::Composition {
            result,
            first,
            second,
        } => fill(
            template,
            &[
                ("result", graph.describe_relation(result)),
                ("first", graph.describe_relation(first)),
                ("second", graph.describe_relation(second)),
            ],
        ),
        OntologyAxiom::EquivalentProperty { a, b } | OntologyAxiom::DisjointProperty { a, b } => {
            fill(
                template,
                &[
                    ("a", graph.describe_relation(a)),
                    ("b", graph.describe_relation(b)),
                ],
            )
        }
    }
}

/// Optional caps applied during prompt assembly.
#[derive(Debug, Clone, Copy, Default)]
pub struct PromptOptions {
    /// Keep at most this many selected axioms (in selection order).
    pub max_axioms: Option<usize>,
}

/// Assembles `S = I ⊕ X ⊕ O` for one triple.
pub fn build_prompt(
    instruction: &str,
    triple: Triple,
    graph: &KnowledgeGraph,
    selected: &[OntologyAxiom],
    ontology: &Ontology,
    templates: &TemplateDictionary,
    options: PromptOptions,
) -> PromptBundle {
    let triple_text = format!(
        "{} {} {}",
        graph.describe_entity(triple.head),
        graph.describe_relation(triple.relation),
        graph.describe_entity(triple.tail)
    );
    let capped = match options.max_axioms {
        Some(cap) => &selected[..selected.len().min(cap)],
        None => selected,
    };
    let ontology_text = capped
        .iter()
        .map(|a| verbalize_axiom(a, graph, ontology, templates))
        .collect::<Vec<_>>()
        .join("\n");
    let sequence = format!("{instruction}\n{triple_text}\n{ontology_text}");
    PromptBundle {
        triple: TripleSymbols::of(graph, triple),
        instruction: instruction.to_owned(),
        triple_text,
        ontology_text,
        sequence,
    }
}

/// Selection plus assembly in one call.
#[allow(clippy::too_many_arguments)]
pub fn prompt_for_triple(
    instruction: &str,
    triple: Triple,
    graph: &KnowledgeGraph,
    ontology: &Ontology,
    closure: &ClosureMap,
    templates: &TemplateDictionary,
    options: PromptOptions,
) -> PromptBundle {
    let selected = select_relevant(ontology, closure, triple, graph);
    build_prompt(
        instruction,
        triple,
        graph,
        &selected,
        ontology,
        templates,
        options,
    )
}
