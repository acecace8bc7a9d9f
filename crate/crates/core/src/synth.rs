//! Deterministic synthetic word corpora.
//!
//! Noisy affine Markov chains over a small word inventory. Two chains
//! with different transition maps over the same inventory give a
//! desk-scale observer-training corpus and a disjoint "held-out" corpus
//! whose continuations the observer finds surprising; the demo and the
//! verification suite both build their corpora here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A noisy affine chain: with probability `1 - noise` the next word index
/// is `(mult * cur + add) % vocab_size`, otherwise uniform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    pub vocab_size: usize,
    pub mult: usize,
    pub add: usize,
    pub noise: f64,
}

impl ChainSpec {
    /// The chain used to train demo observer/performer pairs.
    pub fn corpus_a() -> Self {
        Self {
            vocab_size: 29,
            mult: 2,
            add: 1,
            noise: 0.3,
        }
    }

    /// A chain over the same inventory with different transitions; its
    /// output stands in for human-written text.
    pub fn corpus_b() -> Self {
        Self {
            vocab_size: 29,
            mult: 3,
            add: 7,
            noise: 0.3,
        }
    }

    fn step(&self, cur: usize, rng: &mut ChaCha8Rng) -> usize {
        if rng.gen::<f64>() < self.noise {
            rng.gen_range(0..self.vocab_size)
        } else {
            (self.mult * cur + self.add) % self.vocab_size
        }
    }
}

/// Surface form of word index `i`.
pub fn word(i: usize) -> String {
    format!("w{i:02}")
}

/// Generates `len` words from the chain, deterministic per seed.
pub fn generate_corpus(spec: &ChainSpec, len: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = rng.gen_range(0..spec.vocab_size);
    let mut words = Vec::with_capacity(len);
    for _ in 0..len {
        words.push(word(cur));
        cur = spec.step(cur, &mut rng);
    }
    words.join(" ")
}

/// Splits a corpus into consecutive documents of `doc_words` words each.
pub fn split_documents(corpus: &str, doc_words: usize) -> Vec<String> {
    let words: Vec<&str> = corpus.split_whitespace().collect();
    words
        .chunks(doc_words)
        .filter(|chunk| chunk.len() == doc_words)
        .map(|chunk| chunk.join(" "))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let spec = ChainSpec::corpus_a();
        assert_eq!(generate_corpus(&spec, 500, 7), generate_corpus(&spec, 500, 7));
        assert_ne!(generate_corpus(&spec, 500, 7), generate_corpus(&spec, 500, 8));
    }

    #[test]
    fn corpus_covers_the_inventory() {
        let spec = ChainSpec::corpus_a();
        let corpus = generate_corpus(&spec, 5_000, 1);
        for i in 0..spec.vocab_size {
            assert!(corpus.contains(&word(i)), "missing {}", word(i));
        }
    }

    #[test]
    fn split_documents_drops_the_ragged_tail() {
        let corpus = generate_corpus(&ChainSpec::corpus_b(), 1_050, 3);
        let docs = split_documents(&corpus, 100);
        assert_eq!(docs.len(), 10);
        for doc in &docs {
            assert_eq!(doc.split_whitespace().count(), 100);
        }
    }
}
