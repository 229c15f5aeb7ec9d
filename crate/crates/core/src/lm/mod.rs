//! Word-level backoff n-gram language models.
//!
//! Models are trained with interpolated Kneser-Ney smoothing using a single
//! discount at every order, and are stored in backoff form: every stored
//! n-gram carries its fully interpolated conditional probability, and every
//! n-gram that serves as the context of a longer stored n-gram carries the
//! interpolation weight for that context as its backoff. All values are kept
//! as natural logarithms; base-10 only appears in ARPA files.

mod arpa;
mod train;
mod vocab;

pub use arpa::{read_arpa, read_arpa_file, write_arpa, write_arpa_file};
pub use train::{train_lm, TrainConfig};
pub use vocab::{Vocabulary, BOS, EOS, UNK};

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

/// An n-gram as a sequence of vocabulary ids, oldest word first.
pub type Gram = SmallVec<[u32; 4]>;

/// Natural-log probability stored for n-grams that are never predicted
/// (runs of sentence-begin markers). Matches the ARPA convention of -99.
pub const SENTINEL_LOG_PROB: f64 = -99.0 * std::f64::consts::LN_10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub log_prob: f64,
    pub backoff: Option<f64>,
}

pub(crate) type GramTable = FxHashMap<Gram, Entry>;

#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    vocab: Vocabulary,
    /// `grams[k]` holds the n-grams of length `k + 1`.
    grams: Vec<GramTable>,
    token_count: Option<u64>,
    discount: Option<f64>,
}

impl NGramModel {
    pub(crate) fn from_parts(
        vocab: Vocabulary,
        grams: Vec<GramTable>,
        token_count: Option<u64>,
        discount: Option<f64>,
    ) -> Self {
        debug_assert!(!grams.is_empty());
        NGramModel {
            order: grams.len(),
            vocab,
            grams,
            token_count,
            discount,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Number of training tokens (words plus sentence ends). Unknown for
    /// models read from ARPA files.
    pub fn token_count(&self) -> Option<u64> {
        self.token_count
    }

    pub fn discount(&self) -> Option<f64> {
        self.discount
    }

    pub fn entry(&self, gram: &[u32]) -> Option<&Entry> {
        if gram.is_empty() || gram.len() > self.order {
            return None;
        }
        self.grams[gram.len() - 1].get(gram)
    }

    /// Number of stored n-grams of length `n`.
    pub fn count(&self, n: usize) -> usize {
        self.grams.get(n.wrapping_sub(1)).map_or(0, |t| t.len())
    }

    /// All stored n-grams of length `n`, in unspecified order.
    pub fn grams(&self, n: usize) -> impl Iterator<Item = (&Gram, &Entry)> {
        self.grams
            .get(n.wrapping_sub(1))
            .into_iter()
            .flat_map(|t| t.iter())
    }

    /// Ids that may appear on the prediction side: everything except the
    /// sentence-begin marker.
    pub fn predictable_ids(&self) -> impl Iterator<Item = u32> {
        (0..self.vocab.len() as u32).filter(|&id| id != BOS)
    }

    /// Natural-log conditional probability of `word` given `history`.
    /// Only the last `order - 1` ids of the history are used.
    pub fn log_prob(&self, history: &[u32], word: u32) -> f64 {
        query(&self.grams, history, word)
    }

    /// Per-word natural-log conditional probabilities of a word-level
    /// sentence. The sentence-end event is not included.
    pub fn score_ids(&self, words: &[u32]) -> Vec<f64> {
        let pad = self.order - 1;
        let mut history = Vec::with_capacity(pad + words.len());
        history.resize(pad, BOS);
        let mut out = Vec::with_capacity(words.len());
        for &w in words {
            out.push(self.log_prob(&history, w));
            history.push(w);
        }
        out
    }

    /// Scores a word-level sentence. Words outside the vocabulary are scored
    /// as the unknown marker.
    pub fn score_words<S: AsRef<str>>(&self, words: &[S]) -> Vec<f64> {
        let ids: Vec<u32> = words.iter().map(|w| self.vocab.lookup(w.as_ref())).collect();
        self.score_ids(&ids)
    }

    /// Log-probability of the full sentence, including the sentence-end event.
    pub fn sentence_log_prob<S: AsRef<str>>(&self, words: &[S]) -> f64 {
        let pad = self.order - 1;
        let mut history: Vec<u32> = vec![BOS; pad];
        let mut total = 0.0;
        for w in words {
            let id = self.vocab.lookup(w.as_ref());
            total += self.log_prob(&history, id);
            history.push(id);
        }
        total + self.log_prob(&history, EOS)
    }

    /// Perplexity over a set of sentences, counting sentence-end events.
    pub fn perplexity<S: AsRef<str>>(&self, sentences: &[Vec<S>]) -> f64 {
        let mut log_sum = 0.0;
        let mut events = 0usize;
        for s in sentences {
            log_sum += self.sentence_log_prob(s);
            events += s.len() + 1;
        }
        (-log_sum / events.max(1) as f64).exp()
    }
}

/// Backoff query over a (possibly partially built) stack of tables.
pub(crate) fn query(grams: &[GramTable], history: &[u32], word: u32) -> f64 {
    let max_ctx = history.len().min(grams.len() - 1);
    let mut acc = 0.0;
    let mut key: Gram = SmallVec::with_capacity(max_ctx + 1);
    for ctx_len in (0..=max_ctx).rev() {
        let ctx = &history[history.len() - ctx_len..];
        key.clear();
        key.extend_from_slice(ctx);
        key.push(word);
        if let Some(e) = grams[ctx_len].get(key.as_slice()) {
            return acc + e.log_prob;
        }
        if ctx_len > 0 {
            if let Some(b) = grams[ctx_len - 1].get(ctx).and_then(|e| e.backoff) {
                acc += b;
            }
        }
    }
    // Only reachable for ids without a unigram; fall back to <unk>.
    acc + grams[0]
        .get([UNK].as_slice())
        .map_or(f64::NEG_INFINITY, |e| e.log_prob)
}
