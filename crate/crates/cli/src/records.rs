//! JSON-lines prediction/gold records.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use kgc_core::kg::{KnowledgeGraph, LabeledTriple};

/// One labeled triple as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TripleRecord {
    pub h: String,
    pub r: String,
    pub t: String,
    pub label: bool,
    /// Set when a prompt-path classifier returned neither True nor False.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub abstained: bool,
}

impl TripleRecord {
    pub fn from_labeled(graph: &KnowledgeGraph, lt: LabeledTriple) -> TripleRecord {
        TripleRecord {
            h: graph.entity_symbol(lt.triple.head).to_owned(),
            r: graph.relation_symbol(lt.triple.relation).to_owned(),
            t: graph.entity_symbol(lt.triple.tail).to_owned(),
            label: lt.label,
            abstained: false,
        }
    }

}

pub fn write_records(path: &Path, records: &[TripleRecord]) -> Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_records(path: &Path) -> Result<Vec<TripleRecord>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: TripleRecord = serde_json::from_str(line)
            .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        records.push(record);
    }
    if records.is_empty() {
        bail!("{} holds no records", path.display());
    }
    Ok(records)
}

/// Aligns two record files by triple, erroring on any mismatch.
pub fn aligned_labels(
    predictions: &[TripleRecord],
    gold: &[TripleRecord],
) -> Result<(Vec<bool>, Vec<bool>)> {
    if predictions.len() != gold.len() {
        bail!(
            "prediction/gold length mismatch: {} vs {}",
            predictions.len(),
            gold.len()
        );
    }
    for (p, g) in predictions.iter().zip(gold) {
        if (&p.h, &p.r, &p.t) != (&g.h, &g.r, &g.t) {
            bail!(
                "prediction/gold triples diverge: ({}, {}, {}) vs ({}, {}, {})",
                p.h,
                p.r,
                p.t,
                g.h,
                g.r,
                g.t
            );
        }
    }
    Ok((
        predictions.iter().map(|p| p.label).collect(),
        gold.iter().map(|g| g.label).collect(),
    ))
}
