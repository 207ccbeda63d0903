//! Little-endian binary embedding checkpoints.
//!
//! Layout: magic, version, scorer tag, dimensions, counts, seed, config
//! fingerprint, then the dense entity and relation arrays. Identical tables
//! serialize to identical bytes, which the frozen-embedding guarantee of
//! fusion training relies on.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{EmbeddingTable, ScorerKind};

const MAGIC: &[u8; 8] = b"KGCEMB1\n";
const VERSION: u32 = 1;

/// Serializes a table to its checkpoint byte layout.
pub fn to_bytes(table: &EmbeddingTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(
        64 + 8 * (table.entity_params().len() + table.relation_params().len()),
    );
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(match table.scorer() {
        ScorerKind::Rotational => 0,
        ScorerKind::Translational => 1,
    });
    out.extend_from_slice(&(table.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(table.entity_count() as u32).to_le_bytes());
    out.extend_from_slice(&(table.relation_count() as u32).to_le_bytes());
    out.extend_from_slice(&table.seed().to_le_bytes());
    out.extend_from_slice(table.fingerprint());
    for v in table.entity_params() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in table.relation_params() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses a checkpoint produced by [`to_bytes`].
pub fn from_bytes(bytes: &[u8]) -> Result<EmbeddingTable> {
    let mut cursor = std::io::Cursor::new(bytes);
    let mut magic = [0u8; 8];
    cursor
        .read_exact(&mut magic)
        .map_err(|_| corrupt("truncated header"))?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = read_u32(&mut cursor)?;
    if version != VERSION {
        return Err(Error::Validation(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let mut tag = [0u8; 1];
    cursor.read_exact(&mut tag).map_err(|_| corrupt("truncated header"))?;
    let scorer = match tag[0] {
        0 => ScorerKind::Rotational,
        1 => ScorerKind::Translational,
        other => return Err(corrupt(&format!("unknown scorer tag {other}"))),
    };
    let d_e = read_u32(&mut cursor)? as usize;
    let n_entities = read_u32(&mut cursor)? as usize;
    let n_relations = read_u32(&mut cursor)? as usize;
    let seed = read_u64(&mut cursor)?;
    let mut fingerprint = [0u8; 32];
    cursor
        .read_exact(&mut fingerprint)
        .map_err(|_| corrupt("truncated fingerprint"))?;

    let ent_len = n_entities
        * match scorer {
            ScorerKind::Rotational => 2 * d_e,
            ScorerKind::Translational => d_e,
        };
    let rel_len = n_relations * d_e;
    let ent = read_f64s(&mut cursor, ent_len)?;
    let rel = read_f64s(&mut cursor, rel_len)?;
    EmbeddingTable::from_parts(scorer, d_e, n_entities, n_relations, seed, fingerprint, ent, rel)
}

fn corrupt(msg: &str) -> Error {
    Error::Validation(format!("corrupt embedding checkpoint: {msg}"))
}

fn read_u32(cursor: &mut std::io::Cursor<&[u8]>) -> Result<u32> {
    let mut buf = [0u8; 4];
    cursor.read_exact(&mut buf).map_err(|_| corrupt("truncated field"))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(cursor: &mut std::io::Cursor<&[u8]>) -> Result<u64> {
    let mut buf = [0u8; 8];
    cursor.read_exact(&mut buf).map_err(|_| corrupt("truncated field"))?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64s(cursor: &mut std::io::Cursor<&[u8]>, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        cursor.read_exact(&mut buf).map_err(|_| corrupt("truncated array"))?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}

pub fn write_checkpoint(table: &EmbeddingTable, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&to_bytes(table))?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<EmbeddingTable> {
    let bytes = std::fs::read(path)?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_table() -> EmbeddingTable {
        EmbeddingTable::from_parts(
            ScorerKind::Rotational,
            2,
            2,
            1,
            99,
            [7; 32],
            vec![0.25, -1.5, 3.0, 0.0, 1.0, 2.0, -0.5, 0.125],
            vec![0.5, 1.5],
        )
        .unwrap()
    }

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let table = sample_table();
        let bytes = to_bytes(&table);
        let back = from_bytes(&bytes).unwrap();
        assert_eq!(back, table);
        assert_eq!(to_bytes(&back), bytes);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = to_bytes(&sample_table());
        bytes[0] = b'X';
        assert!(from_bytes(&bytes).is_err());
    }

    #[test]
    fn truncated_checkpoint_is_rejected() {
        let bytes = to_bytes(&sample_table());
        assert!(from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let table = sample_table();
        let dir = std::env::temp_dir().join(format!("kgc-ckpt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("emb.bin");
        write_checkpoint(&table, &path).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back, table);
        std::fs::remove_dir_all(&dir).ok();
    }
}
