//! Token sequences produced by backend tokenizers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered list of vocabulary indices for one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    ids: Vec<u32>,
}

impl TokenSequence {
    /// Builds a sequence from raw ids. Sequences are never empty.
    pub fn new(ids: Vec<u32>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::EmptyText);
        }
        Ok(Self { ids })
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    /// Number of tokens (the L of the scoring formulas).
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Errors if any id is out of range for a vocabulary of size `vocab_size`.
    pub fn check_vocab(&self, vocab_size: usize) -> Result<()> {
        match self.ids.iter().find(|&&id| id as usize >= vocab_size) {
            Some(&id) => Err(Error::VocabMismatch(format!(
                "token id {id} is out of range for vocabulary size {vocab_size}"
            ))),
            None => Ok(()),
        }
    }
}
