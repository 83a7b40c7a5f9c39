//! Fixed-capacity LRU map used by the proxy response cache and the NDN
//! content store. Lookups refresh recency; inserting over capacity evicts
//! the least recently used entry. Capacities here are tens of entries, so
//! the linear eviction scan is fine.

use std::collections::HashMap;
use std::hash::Hash;

#[derive(Debug, Clone)]
struct Slot<V> {
    value: V,
    last_used: u64,
}

#[derive(Debug, Clone)]
pub struct LruCache<K, V> {
    capacity: usize,
    clock: u64,
    map: HashMap<K, Slot<V>>,
}

impl<K: Eq + Hash + Clone, V> LruCache<K, V> {
    pub fn new(capacity: usize) -> LruCache<K, V> {
        assert!(capacity > 0, "cache capacity must be positive");
        LruCache {
            capacity,
            clock: 0,
            map: HashMap::with_capacity(capacity),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn contains(&self, key: &K) -> bool {
        self.map.contains_key(key)
    }

    /// Returns the cached value and marks it most recently used.
    pub fn get(&mut self, key: &K) -> Option<&V> {
        self.clock += 1;
        let clock = self.clock;
        self.map.get_mut(key).map(|slot| {
            slot.last_used = clock;
            &slot.value
        })
    }

    /// Inserts or overwrites; returns the number of evicted entries (0 or 1).
    pub fn insert(&mut self, key: K, value: V) -> usize {
        self.clock += 1;
        let clock = self.clock;
        if let Some(slot) = self.map.get_mut(&key) {
            slot.value = value;
            slot.last_used = clock;
            return 0;
        }
        let mut evicted = 0;
        if self.map.len() == self.capacity {
            if let Some(oldest) = self
                .map
                .iter()
                .min_by_key(|(_, slot)| slot.last_used)
                .map(|(k, _)| k.clone())
            {
                self.map.remove(&oldest);
                evicted = 1;
            }
        }
        self.map.insert(key, Slot { value, last_used: clock });
        evicted
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Naive reference model: a vector ordered from least to most recently
    /// used. Used to cross-check the map-based implementation on random
    /// operation traces.
    struct OracleLru {
        capacity: usize,
        entries: Vec<(u32, u32)>,
    }

    impl OracleLru {
        fn get(&mut self, key: u32) -> Option<u32> {
            if let Some(pos) = self.entries.iter().position(|(k, _)| *k == key) {
                let e = self.entries.remove(pos);
                self.entries.push(e);
                Some(self.entries.last().unwrap().1)
            } else {
                None
            }
        }

        fn insert(&mut self, key: u32, value: u32) -> usize {
            if let Some(pos) = self.entries.iter().position(|(k, _)| *k == key) {
                self.entries.remove(pos);
                self.entries.push((key, value));
                return 0;
            }
            let mut evicted = 0;
            if self.entries.len() == self.capacity {
                self.entries.remove(0);
                evicted = 1;
            }
            self.entries.push((key, value));
            evicted
        }
    }

    #[test]
    fn insert_into_empty_evicts_nothing() {
        let mut cache = LruCache::new(40);
        assert_eq!(cache.insert(1u32, "a"), 0);
        assert_eq!(cache.get(&1), Some(&"a"));
    }

    #[test]
    fn overwrite_does_not_evict() {
        let mut cache = LruCache::new(2);
        cache.insert(1u32, "a");
        assert_eq!(cache.insert(1, "b"), 0);
        assert_eq!(cache.len(), 1);
        assert_eq!(cache.get(&1), Some(&"b"));
    }

    #[test]
    fn forty_first_distinct_insert_evicts_lru() {
        let mut cache = LruCache::new(40);
        for k in 0u32..40 {
            assert_eq!(cache.insert(k, k), 0);
        }
        // touch key 0 so key 1 becomes least recently used
        cache.get(&0);
        assert_eq!(cache.insert(40, 40), 1);
        assert!(cache.contains(&0));
        assert!(!cache.contains(&1));
        assert_eq!(cache.len(), 40);
    }

    #[test]
    fn random_trace_matches_reference_model() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut cache = LruCache::new(8);
        let mut oracle = OracleLru { capacity: 8, entries: Vec::new() };
        for step in 0..4000u32 {
            let key = rng.gen_range(0..24);
            if rng.gen_bool(0.5) {
                assert_eq!(cache.insert(key, step), oracle.insert(key, step), "insert {key}");
            } else {
                assert_eq!(cache.get(&key).copied(), oracle.get(key), "get {key}");
            }
            assert!(cache.len() <= 8);
            assert_eq!(cache.len(), oracle.entries.len());
        }
    }
}
