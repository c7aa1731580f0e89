//! Page-level response cache: LRU-bounded, entries expire after a TTL.

use std::num::NonZeroUsize;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use lru::LruCache;
use synergy_core::{MoleculeId, RankMethod};

/// Everything that determines a page body. `generation` changes whenever a
/// snapshot is installed, so two snapshots that happen to share a revision
/// number never share entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub generation: u64,
    pub revision: u64,
    pub molecule: MoleculeId,
    pub method: RankMethod,
    pub page: usize,
    pub page_size: usize,
}

struct CacheEntry {
    body: Bytes,
    expires_at: Instant,
}

pub struct PageCache {
    ttl: Duration,
    inner: Mutex<LruCache<CacheKey, CacheEntry>>,
}

impl PageCache {
    pub fn new(capacity: usize, ttl: Duration) -> Self {
        let cap = NonZeroUsize::new(capacity.max(1)).expect("non-zero");
        Self {
            ttl,
            inner: Mutex::new(LruCache::new(cap)),
        }
    }

    pub fn get(&self, key: &CacheKey) -> Option<Bytes> {
        let mut inner = self.inner.lock().unwrap();
        match inner.get(key) {
            Some(e) if e.expires_at > Instant::now() => Some(e.body.clone()),
            Some(_) => {
                inner.pop(key);
                None
            }
            None => None,
        }
    }

    pub fn insert(&self, key: CacheKey, body: Bytes) {
        let entry = CacheEntry {
            body,
            expires_at: Instant::now() + self.ttl,
        };
        self.inner.lock().unwrap().put(key, entry);
    }

    pub fn clear(&self) {
        self.inner.lock().unwrap().clear();
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(page: usize) -> CacheKey {
        CacheKey {
            generation: 1,
            revision: 7,
            molecule: MoleculeId(0),
            method: RankMethod::CountNorm,
            page,
            page_size: 20,
        }
    }

    #[test]
    fn lru_bound_and_revision_in_key() {
        let c = PageCache::new(2, Duration::from_secs(60));
        c.insert(key(1), Bytes::from_static(b"a"));
        c.insert(key(2), Bytes::from_static(b"b"));
        c.get(&key(1));
        c.insert(key(3), Bytes::from_static(b"c"));
        assert_eq!(c.len(), 2);
        assert!(c.get(&key(2)).is_none());
        assert_eq!(c.get(&key(1)).unwrap(), "a");
        let stale = CacheKey { revision: 8, ..key(1) };
        assert!(c.get(&stale).is_none());
    }

    #[test]
    fn expired_entries_are_dropped() {
        let c = PageCache::new(4, Duration::ZERO);
        c.insert(key(1), Bytes::from_static(b"a"));
        assert!(c.get(&key(1)).is_none());
        assert!(c.is_empty());
    }
}
