//! Binary word weights from smoothed scores, plus chunk (LCW), sentence and
//! random-mask variants and the selection statistics over a corpus.

use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    Word,
    Chunk,
    Sentence,
    Random,
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightMode::Word => "word",
            WeightMode::Chunk => "chunk",
            WeightMode::Sentence => "sentence",
            WeightMode::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightingConfig {
    pub threshold: f64,
    pub mode: WeightMode,
    pub drop_all_zero_sentences: bool,
    pub random_keep_fraction: f64,
    pub seed: u64,
}

impl Default for WeightingConfig {
    fn default() -> Self {
        WeightingConfig {
            threshold: 0.5,
            mode: WeightMode::Word,
            drop_all_zero_sentences: true,
            random_keep_fraction: 0.5,
            seed: 0,
        }
    }
}

impl WeightingConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.threshold.is_finite() {
            return Err(Error::Config(format!("threshold must be finite, got {}", self.threshold)));
        }
        if !(0.0..=1.0).contains(&self.random_keep_fraction) {
            return Err(Error::Config(format!(
                "random_keep_fraction must lie in [0, 1], got {}",
                self.random_keep_fraction
            )));
        }
        Ok(())
    }

    /// Weights for sentence `index` of the corpus. Empty input gives empty
    /// output in every mode.
    pub fn apply(&self, smoothed: &[f64], index: u64) -> Vec<u8> {
        if smoothed.is_empty() {
            return Vec::new();
        }
        match self.mode {
            WeightMode::Word => binarize(smoothed, self.threshold),
            WeightMode::Chunk => {
                let w = binarize(smoothed, self.threshold);
                lcw(&w, &mut sentence_rng(self.seed, index))
            }
            WeightMode::Sentence => {
                sentence_weight(smoothed, self.threshold).expect("non-empty")
            }
            WeightMode::Random => random_mask(
                smoothed.len(),
                self.random_keep_fraction,
                &mut sentence_rng(self.seed, index),
            ),
        }
    }
}

/// Generator for sentence `index`: one ChaCha stream per sentence, so
/// results do not depend on how sentences are spread over workers.
pub fn sentence_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `w_t = 1` iff `smoothed[t] >= threshold`.
pub fn binarize(smoothed: &[f64], threshold: f64) -> Vec<u8> {
    smoothed.iter().map(|&s| u8::from(s >= threshold)).collect()
}

/// Keeps only the longest run of ones. Among equally long runs one is
/// picked uniformly with `rng`.
pub fn lcw<R: Rng + ?Sized>(weights: &[u8], rng: &mut R) -> Vec<u8> {
    let mut best_len = 0;
    let mut starts: Vec<usize> = Vec::new();
    let mut t = 0;
    while t < weights.len() {
        if weights[t] == 0 {
            t += 1;
            continue;
        }
        let start = t;
        while t < weights.len() && weights[t] != 0 {
            t += 1;
        }
        let len = t - start;
        if len > best_len {
            best_len = len;
            starts.clear();
        }
        if len == best_len {
            starts.push(start);
        }
    }

    let mut out = vec![0; weights.len()];
    if best_len == 0 {
        return out;
    }
    let start = if starts.len() == 1 {
        starts[0]
    } else {
        starts[rng.random_range(0..starts.len())]
    };
    out[start..start + best_len].fill(1);
    out
}

/// Sentence-level weight: every position gets 1 iff the mean smoothed
/// score reaches the threshold.
pub fn sentence_weight(smoothed: &[f64], threshold: f64) -> Result<Vec<u8>> {
    if smoothed.is_empty() {
        return Err(Error::EmptyScores);
    }
    let mean = smoothed.iter().sum::<f64>() / smoothed.len() as f64;
    Ok(vec![u8::from(mean >= threshold); smoothed.len()])
}

/// Each position independently selected with probability `keep_fraction`.
pub fn random_mask<R: Rng + ?Sized>(len: usize, keep_fraction: f64, rng: &mut R) -> Vec<u8> {
    let p = keep_fraction.clamp(0.0, 1.0);
    (0..len).map(|_| u8::from(rng.random_bool(p))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub mode: WeightMode,
    pub total_sentences: u64,
    pub total_tokens: u64,
    pub kept_sentences: u64,
    pub selected_tokens: u64,
}

impl CorpusStats {
    pub fn new(mode: WeightMode) -> Self {
        CorpusStats {
            mode,
            total_sentences: 0,
            total_tokens: 0,
            kept_sentences: 0,
            selected_tokens: 0,
        }
    }

    pub fn add(&mut self, weights: &[u8], drop_all_zero_sentences: bool) {
        let selected = weights.iter().filter(|&&w| w != 0).count() as u64;
        self.total_sentences += 1;
        self.total_tokens += weights.len() as u64;
        self.selected_tokens += selected;
        if selected > 0 || !drop_all_zero_sentences {
            self.kept_sentences += 1;
        }
    }

    pub fn merge(&mut self, other: &CorpusStats) {
        self.total_sentences += other.total_sentences;
        self.total_tokens += other.total_tokens;
        self.kept_sentences += other.kept_sentences;
        self.selected_tokens += other.selected_tokens;
    }
}

/// Counts sentences and tokens, kept and selected, for one weighting mode.
pub fn collect_stats<I, W>(weights: I, mode: WeightMode, drop_all_zero_sentences: bool) -> CorpusStats
where
    I: IntoIterator<Item = W>,
    W: AsRef<[u8]>,
{
    let mut stats = CorpusStats::new(mode);
    for w in weights {
        stats.add(w.as_ref(), drop_all_zero_sentences);
    }
    stats
}

/// Selection statistics for several modes over the same corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub total_sentences: u64,
    pub total_tokens: u64,
    pub modes: Vec<CorpusStats>,
}

impl StatsReport {
    pub fn new(modes: Vec<CorpusStats>) -> Self {
        let (total_sentences, total_tokens) = modes
            .first()
            .map_or((0, 0), |s| (s.total_sentences, s.total_tokens));
        StatsReport {
            total_sentences,
            total_tokens,
            modes,
        }
    }

    pub fn get(&self, mode: WeightMode) -> Option<&CorpusStats> {
        self.modes.iter().find(|s| s.mode == mode)
    }

    pub fn to_table(&self) -> String {
        let mut rows = vec![(
            "ood. sentences".to_owned(),
            self.total_sentences,
            self.total_tokens,
        )];
        for s in &self.modes {
            rows.push((format!("+{} weights", s.mode), s.kept_sentences, s.selected_tokens));
        }
        let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max("Corpus".len());
        let w1 = rows.iter().map(|r| r.1.to_string().len()).max().unwrap_or(0).max("Sent. count".len());
        let w2 = rows.iter().map(|r| r.2.to_string().len()).max().unwrap_or(0).max("Token count".len());
        let mut out = String::new();
        let _ = writeln!(out, "{:<w0$}  {:>w1$}  {:>w2$}", "Corpus", "Sent. count", "Token count");
        for (name, sents, toks) in rows {
            let _ = writeln!(out, "{name:<w0$}  {sents:>w1$}  {toks:>w2$}");
        }
        out
    }
}
