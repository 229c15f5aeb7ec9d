//! Interpolated Kneser-Ney evaluated straight from the padded corpus by
//! scanning, with no tables and no backoff representation.

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

pub struct KnOracle {
    order: usize,
    discount: f64,
    padded: Vec<Vec<String>>,
    predictable: Vec<String>,
}

impl KnOracle {
    pub fn new(corpus: &[Vec<&str>], order: usize, discount: f64) -> Self {
        let mut predictable: Vec<String> = vec![UNK.into(), EOS.into()];
        let mut padded = Vec::new();
        for s in corpus {
            let mut p: Vec<String> = vec![BOS.to_owned(); order - 1];
            for w in s {
                if !predictable.iter().any(|x| x == w) {
                    predictable.push((*w).to_owned());
                }
                p.push((*w).to_owned());
            }
            p.push(EOS.to_owned());
            padded.push(p);
        }
        KnOracle {
            order,
            discount,
            padded,
            predictable,
        }
    }

    pub fn predictable(&self) -> &[String] {
        &self.predictable
    }

    /// Occurrences of `gram` ending at a predicted position.
    fn occurrences(&self, gram: &[&str]) -> Vec<(usize, usize)> {
        let k = gram.len();
        let mut out = Vec::new();
        for (si, p) in self.padded.iter().enumerate() {
            for t in (self.order - 1)..p.len() {
                if t + 1 < k {
                    continue;
                }
                let start = t + 1 - k;
                if (0..k).all(|j| p[start + j] == gram[j]) {
                    out.push((si, start));
                }
            }
        }
        out
    }

    fn adjusted(&self, gram: &[&str]) -> f64 {
        let occ = self.occurrences(gram);
        if gram.len() == self.order || gram[0] == BOS {
            return occ.len() as f64;
        }
        let mut left: Vec<&str> = Vec::new();
        for (si, start) in occ {
            if start == 0 {
                continue;
            }
            let v = self.padded[si][start - 1].as_str();
            if !left.contains(&v) {
                left.push(v);
            }
        }
        left.len() as f64
    }

    /// Conditional probability using the last `order - 1` history words.
    pub fn prob(&self, history: &[&str], word: &str) -> f64 {
        let keep = history.len().min(self.order - 1);
        self.level(&history[history.len() - keep..], word)
    }

    fn level(&self, ctx: &[&str], word: &str) -> f64 {
        let d = self.discount;
        let counts: Vec<f64> = self
            .predictable
            .iter()
            .map(|x| {
                let mut g: Vec<&str> = ctx.to_vec();
                g.push(x);
                self.adjusted(&g)
            })
            .collect();
        let total: f64 = counts.iter().sum();
        let types = counts.iter().filter(|&&c| c > 0.0).count() as f64;
        let idx = self.predictable.iter().position(|x| x == word);
        let own = idx.map_or(0.0, |i| counts[i]);
        if ctx.is_empty() {
            return (own - d).max(0.0) / total + d * types / total / self.predictable.len() as f64;
        }
        let lower = self.level(&ctx[1..], word);
        if total == 0.0 {
            return lower;
        }
        (own - d).max(0.0) / total + d * types / total * lower
    }

    /// Natural-log per-word scores for a sentence, words outside the
    /// training vocabulary treated as `<unk>`.
    pub fn score(&self, sentence: &[&str]) -> Vec<f64> {
        let mut history: Vec<&str> = vec![BOS; self.order - 1];
        let mut out = Vec::new();
        for &w in sentence {
            let w = if self.predictable.iter().any(|x| x == w) && w != EOS { w } else { UNK };
            out.push(self.prob(&history, w).ln());
            history.push(w);
        }
        out
    }
}
