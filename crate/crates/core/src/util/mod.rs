//! Shared utilities: deterministic RNG, hashing, symbol interning.

pub mod hash;
pub mod rng;

use std::collections::HashMap;

/// Bijective symbol table mapping strings to dense `u32` indices.
///
/// Indices are contiguous from 0 in insertion order; interning the same
/// symbol twice returns the same index.
#[derive(Debug, Clone, Default)]
pub struct Interner {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the index for `symbol`, inserting it if unseen.
    pub fn intern(&mut self, symbol: &str) -> u32 {
        if let Some(&id) = self.index.get(symbol) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(symbol.to_owned());
        self.index.insert(symbol.to_owned(), id);
        id
    }

    pub fn resolve(&self, symbol: &str) -> Option<u32> {
        self.index.get(symbol).copied()
    }

    pub fn symbol(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(|s| s.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_bijective() {
        let mut t = Interner::new();
        let a = t.intern("/m/0dzlbx");
        let b = t.intern("/m/02l7c8");
        let a2 = t.intern("/m/0dzlbx");
        assert_eq!(a, a2);
        assert_ne!(a, b);
        assert_eq!(t.symbol(a), "/m/0dzlbx");
        assert_eq!(t.resolve("/m/02l7c8"), Some(b));
        assert_eq!(t.resolve("missing"), None);
    }

    #[test]
    fn indices_are_contiguous() {
        let mut t = Interner::new();
        for (i, s) in ["a", "b", "c"].iter().enumerate() {
            assert_eq!(t.intern(s), i as u32);
        }
    }
}
