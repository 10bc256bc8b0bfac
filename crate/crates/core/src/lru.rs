//! A small fixed-capacity associative table with LRU replacement.
//!
//! Entries are kept most-recently-used first in a flat vector; lookups and
//! inserts are linear scans, which is the right trade for the capacities
//! this simulator uses (tens of entries).

/// Bounded key/value store, most-recently-used first.
#[derive(Debug, Clone, PartialEq)]
pub struct LruTable<K, V> {
    capacity: usize,
    entries: Vec<(K, V)>,
}

impl<K: Eq + Clone, V> LruTable<K, V> {
    /// A table with capacity 0 stores nothing and every insert is a no-op.
    pub fn new(capacity: usize) -> Self {
        LruTable {
            capacity,
            entries: Vec::with_capacity(capacity.min(1024)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn position(&self, key: &K) -> Option<usize> {
        self.entries.iter().position(|(k, _)| k == key)
    }

    /// Look up a key without changing recency.
    pub fn peek(&self, key: &K) -> Option<&V> {
        self.position(key).map(|i| &self.entries[i].1)
    }

    /// Look up a key and mark it most recently used.
    pub fn get_refresh(&mut self, key: &K) -> Option<&mut V> {
        let pos = self.position(key)?;
        self.entries[..=pos].rotate_right(1);
        Some(&mut self.entries[0].1)
    }

    /// Insert or replace. A touched or replaced key becomes most recently
    /// used. Returns the evicted LRU victim when the insert of a new key
    /// overflows the capacity.
    pub fn insert(&mut self, key: K, value: V) -> Option<(K, V)> {
        if self.capacity == 0 {
            return None;
        }
        if let Some(pos) = self.position(&key) {
            self.entries[pos].1 = value;
            self.entries[..=pos].rotate_right(1);
            return None;
        }
        self.entries.insert(0, (key, value));
        if self.entries.len() > self.capacity {
            self.entries.pop()
        } else {
            None
        }
    }

    /// Keys in recency order, most recently used first.
    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.entries.iter().map(|(k, _)| k)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &V)> {
        self.entries.iter().map(|(k, v)| (k, v))
    }
}
