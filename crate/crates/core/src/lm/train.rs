use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use super::vocab::{BOS_WORD, EOS_WORD, UNK_WORD};
use super::{query, Entry, Gram, GramTable, NGramModel, Vocabulary, BOS, EOS, SENTINEL_LOG_PROB, UNK};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub order: usize,
    /// Words seen fewer times than this are mapped to `<unk>` before counting.
    pub min_count: u64,
    pub discount: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            order: 4,
            min_count: 1,
            discount: 0.75,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::Config(format!("order must be >= 1, got {}", self.order)));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(Error::Config(format!(
                "discount must lie in (0, 1), got {}",
                self.discount
            )));
        }
        Ok(())
    }
}

const RAW_UNK: u32 = u32::MAX;

/// Trains an interpolated Kneser-Ney model on word-level sentences.
///
/// Each sentence is padded with `order - 1` sentence-begin markers and one
/// sentence-end marker. Highest-order n-grams, and lower-order n-grams that
/// start with `<s>`, use raw counts; all other lower-order n-grams use
/// continuation counts (number of distinct left extensions). The unigram
/// level is itself discounted and interpolated with a uniform distribution
/// over every predictable word, which is where `<unk>` gets its mass.
pub fn train_lm<I, S, W>(corpus: I, config: &TrainConfig) -> Result<NGramModel>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[W]>,
    W: AsRef<str>,
{
    config.validate()?;
    let order = config.order;
    let discount = config.discount;

    // Intern once so the corpus is only iterated a single time.
    let mut raw_ids: FxHashMap<String, u32> = FxHashMap::default();
    let mut raw_words: Vec<String> = Vec::new();
    let mut freq: Vec<u64> = Vec::new();
    let mut flat: Vec<u32> = Vec::new();
    let mut bounds: Vec<usize> = vec![0];
    for sentence in corpus {
        for w in sentence.as_ref() {
            let w = w.as_ref();
            let id = match w {
                UNK_WORD | BOS_WORD | EOS_WORD => RAW_UNK,
                _ => match raw_ids.get(w) {
                    Some(&id) => id,
                    None => {
                        let id = raw_words.len() as u32;
                        raw_ids.insert(w.to_owned(), id);
                        raw_words.push(w.to_owned());
                        freq.push(0);
                        id
                    }
                },
            };
            if id != RAW_UNK {
                freq[id as usize] += 1;
            }
            flat.push(id);
        }
        bounds.push(flat.len());
    }
    let sentences = bounds.len() - 1;
    if sentences == 0 {
        return Err(Error::EmptyCorpus);
    }
    drop(raw_ids);

    let mut vocab = Vocabulary::new();
    let remap: Vec<u32> = raw_words
        .iter()
        .zip(&freq)
        .map(|(w, &f)| if f >= config.min_count { vocab.insert(w) } else { UNK })
        .collect();
    for id in flat.iter_mut() {
        *id = if *id == RAW_UNK { UNK } else { remap[*id as usize] };
    }

    let top = count_top_order(&flat, &bounds, order);
    let adjusted = adjust_counts(top, order);

    let predictable = vocab.len() - 1;
    let mut grams: Vec<GramTable> = Vec::with_capacity(order);
    grams.push(unigrams(&adjusted[0], vocab.len(), predictable, discount));
    for k in 2..=order {
        let (table, context_weights) = higher_order(&adjusted[k - 1], &grams, discount);
        // Runs of <s> are contexts but never predicted; give them sentinel
        // entries so their backoffs have a home.
        let lower = &mut grams[k - 2];
        let bos_run: Gram = SmallVec::from_elem(BOS, k - 1);
        lower.entry(bos_run).or_insert(Entry {
            log_prob: SENTINEL_LOG_PROB,
            backoff: None,
        });
        for (ctx, weight) in context_weights {
            let e = lower
                .get_mut(ctx.as_slice())
                .expect("every context is stored at the next lower order");
            e.backoff = Some(weight.ln());
        }
        grams.push(table);
    }

    let token_count = flat.len() as u64 + sentences as u64;
    Ok(NGramModel::from_parts(
        vocab,
        grams,
        Some(token_count),
        Some(discount),
    ))
}

fn count_top_order(flat: &[u32], bounds: &[usize], order: usize) -> FxHashMap<Gram, u64> {
    let pad = order - 1;
    let mut counts: FxHashMap<Gram, u64> = FxHashMap::default();
    let mut padded: Vec<u32> = Vec::new();
    for w in bounds.windows(2) {
        padded.clear();
        padded.resize(pad, BOS);
        padded.extend_from_slice(&flat[w[0]..w[1]]);
        padded.push(EOS);
        for window in padded.windows(order) {
            *counts.entry(Gram::from_slice(window)).or_insert(0) += 1;
        }
    }
    counts
}

/// Returns adjusted counts per order; `result[k]` holds n-grams of length
/// `k + 1`.
fn adjust_counts(top: FxHashMap<Gram, u64>, order: usize) -> Vec<FxHashMap<Gram, u64>> {
    let mut levels: Vec<FxHashMap<Gram, u64>> = vec![FxHashMap::default(); order];
    levels[order - 1] = top;
    for k in (1..order).rev() {
        let (lower, upper) = levels.split_at_mut(k);
        let target = &mut lower[k - 1];
        for (gram, &count) in upper[0].iter() {
            let suffix = &gram[1..];
            // A suffix starting with <s> is only ever preceded by <s>, so its
            // raw count is the count of the single longer n-gram.
            let add = if suffix[0] == BOS { count } else { 1 };
            *target.entry(Gram::from_slice(suffix)).or_insert(0) += add;
        }
    }
    levels
}

fn unigrams(
    counts: &FxHashMap<Gram, u64>,
    vocab_len: usize,
    predictable: usize,
    discount: f64,
) -> GramTable {
    let total: u64 = counts.values().sum();
    let types = counts.len() as f64;
    let total = total as f64;
    let leftover = discount * types / total;
    let uniform = leftover / predictable as f64;
    let mut table = GramTable::default();
    for id in 0..vocab_len as u32 {
        if id == BOS {
            table.insert(
                SmallVec::from_elem(BOS, 1),
                Entry {
                    log_prob: SENTINEL_LOG_PROB,
                    backoff: None,
                },
            );
            continue;
        }
        let key: Gram = SmallVec::from_elem(id, 1);
        let count = counts.get(key.as_slice()).copied().unwrap_or(0) as f64;
        let p = (count - discount).max(0.0) / total + uniform;
        table.insert(
            key,
            Entry {
                log_prob: p.ln(),
                backoff: None,
            },
        );
    }
    table
}

/// Builds one order above the tables already in `lower`. Returns the new
/// table and the interpolation weight of every context.
fn higher_order(
    counts: &FxHashMap<Gram, u64>,
    lower: &[GramTable],
    discount: f64,
) -> (GramTable, Vec<(Gram, f64)>) {
    let mut contexts: FxHashMap<&[u32], (u64, u64)> = FxHashMap::default();
    for (gram, &c) in counts {
        let slot = contexts.entry(&gram[..gram.len() - 1]).or_insert((0, 0));
        slot.0 += c;
        slot.1 += 1;
    }

    let mut table = GramTable::default();
    table.reserve(counts.len());
    for (gram, &c) in counts {
        let (ctx, word) = gram.split_at(gram.len() - 1);
        let (total, types) = contexts[ctx];
        let total = total as f64;
        let gamma = discount * types as f64 / total;
        let lower_p = query(lower, &ctx[1..], word[0]).exp();
        let p = (c as f64 - discount) / total + gamma * lower_p;
        table.insert(
            gram.clone(),
            Entry {
                log_prob: p.ln(),
                backoff: None,
            },
        );
    }

    let weights = contexts
        .into_iter()
        .map(|(ctx, (total, types))| {
            (
                Gram::from_slice(ctx),
                discount * types as f64 / total as f64,
            )
        })
        .collect();
    (table, weights)
}
