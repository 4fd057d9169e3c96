use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Sparse real-valued vector keyed by an ordered feature key.
///
/// Zero entries are never stored, so two vectors compare equal exactly when
/// they agree on every nonzero coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "K: Ord + Serialize",
    deserialize = "K: Ord + Deserialize<'de>"
))]
pub struct SparseVector<K: Ord> {
    entries: BTreeMap<K, f64>,
}

impl<K: Ord> Default for SparseVector<K> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }
}

impl<K: Ord + Clone> SparseVector<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &K) -> f64 {
        self.entries.get(key).copied().unwrap_or(0.0)
    }

    /// Overwrites the value at `key`; a zero value removes the entry.
    pub fn set(&mut self, key: K, value: f64) {
        if value == 0.0 {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, value);
        }
    }

    pub fn add(&mut self, key: K, value: f64) {
        if value == 0.0 {
            return;
        }
        let updated = self.get(&key) + value;
        self.set(key, updated);
    }

    pub fn add_scaled(&mut self, other: &SparseVector<K>, scale: f64) {
        for (key, value) in &other.entries {
            self.add(key.clone(), value * scale);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, f64)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.entries.keys()
    }

    /// Dot product against a weight lookup, accumulated in key order.
    pub fn dot_with<F: Fn(&K) -> f64>(&self, weight: F) -> f64 {
        self.entries
            .iter()
            .fold(0.0, |acc, (key, value)| acc + weight(key) * value)
    }
}

impl<K: Ord + Clone> FromIterator<(K, f64)> for SparseVector<K> {
    fn from_iter<I: IntoIterator<Item = (K, f64)>>(iter: I) -> Self {
        let mut out = Self::new();
        for (key, value) in iter {
            out.add(key, value);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_are_not_stored() {
        let mut v: SparseVector<u32> = SparseVector::new();
        v.add(1, 2.0);
        v.add(1, -2.0);
        v.set(2, 0.0);
        assert!(v.is_empty());
    }

    #[test]
    fn collect_sums_duplicates() {
        let v: SparseVector<&str> = vec![("a", 1.0), ("b", 2.0), ("a", 3.0)]
            .into_iter()
            .collect();
        assert_eq!(v.get(&"a"), 4.0);
        assert_eq!(v.len(), 2);
        assert_eq!(v.dot_with(|k| if *k == "b" { 0.5 } else { 1.0 }), 5.0);
    }
}
