use std::collections::HashMap;

use parking_lot::RwLock;

use super::TokenId;

/// Memo of full probability vectors keyed by the exact token-id sequence.
///
/// Safe for concurrent use. Writers for the same key always carry the same
/// value, so last-write-wins is harmless.
#[derive(Debug, Default)]
pub struct PredictionCache<T> {
    entries: RwLock<HashMap<Vec<TokenId>, Vec<T>>>,
}

impl<T: Clone> PredictionCache<T> {
    pub fn new() -> Self {
        PredictionCache {
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn get(&self, key: &[TokenId]) -> Option<Vec<T>> {
        self.entries.read().get(key).cloned()
    }

    pub fn contains(&self, key: &[TokenId]) -> bool {
        self.entries.read().contains_key(key)
    }

    pub fn insert(&self, key: Vec<TokenId>, probabilities: Vec<T>) {
        self.entries.write().insert(key, probabilities);
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.entries.write().clear();
    }
}
