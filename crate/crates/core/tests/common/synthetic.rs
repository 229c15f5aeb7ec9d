//! Synthetic two-domain corpora with planted in-domain spans.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A first-order Markov source over its own vocabulary, interleaved with
/// shared function tokens drawn from a domain-specific preference.
pub struct Domain {
    words: Vec<String>,
    successors: Vec<Vec<usize>>,
    shared: Vec<String>,
    shared_weights: Vec<f64>,
    shared_rate: f64,
}

pub fn shared_tokens(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i}")).collect()
}

impl Domain {
    pub fn new(
        prefix: &str,
        size: usize,
        branching: usize,
        shared: &[String],
        favoured: std::ops::Range<usize>,
        shared_rate: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let words: Vec<String> = (0..size).map(|i| format!("{prefix}{i}")).collect();
        let successors = (0..size)
            .map(|_| (0..branching).map(|_| rng.random_range(0..size)).collect())
            .collect();
        let shared_weights = (0..shared.len())
            .map(|i| if favoured.contains(&i) { 9.0 } else { 1.0 })
            .collect();
        Domain {
            words,
            successors,
            shared: shared.to_vec(),
            shared_weights,
            shared_rate,
        }
    }

    fn shared_token(&self, rng: &mut ChaCha8Rng) -> &str {
        let total: f64 = self.shared_weights.iter().sum();
        let mut x = rng.random::<f64>() * total;
        for (w, tok) in self.shared_weights.iter().zip(&self.shared) {
            if x < *w {
                return tok;
            }
            x -= w;
        }
        self.shared.last().unwrap()
    }

    pub fn sentence(&self, len: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
        let mut state = rng.random_range(0..self.words.len());
        let mut out = Vec::with_capacity(len);
        while out.len() < len {
            if rng.random_bool(self.shared_rate) {
                out.push(self.shared_token(rng).to_owned());
            } else {
                out.push(self.words[state].clone());
                state = *self.successors[state].choose(rng).unwrap();
            }
        }
        out
    }
}

pub struct PlantedCorpus {
    pub in_domain: Vec<Vec<String>>,
    pub out_domain: Vec<Vec<String>>,
    /// Out-of-domain target sentences, possibly split into subword units.
    pub target: Vec<Vec<String>>,
    /// One label per target token: 1 inside a planted in-domain span.
    pub labels: Vec<Vec<u8>>,
}

pub struct PlantedSpec {
    pub in_sentences: usize,
    pub out_sentences: usize,
    pub target_sentences: usize,
    pub planted_fraction: f64,
    pub subword_fraction: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            in_sentences: 50_000,
            out_sentences: 200_000,
            target_sentences: 20_000,
            planted_fraction: 0.3,
            subword_fraction: 0.15,
            seed: 2018,
        }
    }
}

fn split_subwords(words: &[String], labels: &[u8], fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<String>, Vec<u8>) {
    let mut toks = Vec::new();
    let mut labs = Vec::new();
    for (w, &l) in words.iter().zip(labels) {
        if w.len() >= 3 && rng.random_bool(fraction) {
            let cut = rng.random_range(1..w.len());
            toks.push(format!("{}@@", &w[..cut]));
            toks.push(w[cut..].to_owned());
            labs.extend([l, l]);
        } else {
            toks.push(w.clone());
            labs.push(l);
        }
    }
    (toks, labs)
}

pub fn planted(spec: &PlantedSpec) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let shared = shared_tokens(20);
    let a = Domain::new("a", 400, 4, &shared, 0..10, 0.15, &mut rng);
    let b = Domain::new("b", 1500, 4, &shared, 10..20, 0.15, &mut rng);

    let in_domain = (0..spec.in_sentences)
        .map(|_| {
            let n = rng.random_range(6..=20);
            a.sentence(n, &mut rng)
        })
        .collect();
    let out_domain = (0..spec.out_sentences)
        .map(|_| {
            let n = rng.random_range(6..=25);
            b.sentence(n, &mut rng)
        })
        .collect();

    let mut target = Vec::with_capacity(spec.target_sentences);
    let mut labels = Vec::with_capacity(spec.target_sentences);
    for _ in 0..spec.target_sentences {
        let n = rng.random_range(10..=30);
        let mut words = b.sentence(n, &mut rng);
        let mut lab = vec![0u8; words.len()];
        if rng.random_bool(spec.planted_fraction) {
            let span_len = rng.random_range(8..=16);
            let span = a.sentence(span_len, &mut rng);
            let at = rng.random_range(0..=words.len());
            words.splice(at..at, span);
            lab.splice(at..at, std::iter::repeat_n(1, span_len));
        }
        let (toks, labs) = split_subwords(&words, &lab, spec.subword_fraction, &mut rng);
        target.push(toks);
        labels.push(labs);
    }
    PlantedCorpus {
        in_domain,
        out_domain,
        target,
        labels,
    }
}

pub fn write_corpus(path: &std::path::Path, sentences: &[Vec<String>]) {
    let mut text = String::new();
    for s in sentences {
        text.push_str(&s.join(" "));
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn precision_recall(pred: &[Vec<u8>], gold: &[Vec<u8>]) -> Prf {
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (p, g) in pred.iter().zip(gold) {
        assert_eq!(p.len(), g.len());
        for (&x, &y) in p.iter().zip(g) {
            match (x, y) {
                (1, 1) => tp += 1,
                (1, 0) => fp += 1,
                (0, 1) => fn_ += 1,
                _ => {}
            }
        }
    }
    let precision = tp as f64 / (tp + fp).max(1) as f64;
    let recall = tp as f64 / (tp + fn_).max(1) as f64;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Prf { precision, recall, f1 }
}
