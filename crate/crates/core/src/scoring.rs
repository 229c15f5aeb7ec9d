//! Per-token domain scores: log P_in(word) − log P_out(word), computed on
//! whole words and copied onto each of the word's subword units.

use crate::error::{Error, Result};
use crate::lm::NGramModel;

pub const DEFAULT_SUBWORD_MARKER: &str = "@@";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedSentence {
    pub tokens: Vec<String>,
    /// Suffix marking a token that continues into the next one (BPE `@@`).
    pub subword_marker: Option<String>,
}

impl TokenizedSentence {
    pub fn new<I, S>(tokens: I, subword_marker: Option<&str>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenizedSentence {
            tokens: tokens.into_iter().map(Into::into).collect(),
            subword_marker: subword_marker.map(str::to_owned),
        }
    }

    /// Splits a corpus line on whitespace.
    pub fn from_line(line: &str, subword_marker: Option<&str>) -> Self {
        Self::new(line.split_whitespace(), subword_marker)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Scores for one sentence, aligned to its tokens.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTrack {
    pub raw: Vec<f64>,
    pub smoothed: Option<Vec<f64>>,
    pub weights: Option<Vec<u8>>,
}

impl ScoreTrack {
    pub fn from_raw(raw: Vec<f64>) -> Self {
        ScoreTrack {
            raw,
            smoothed: None,
            weights: None,
        }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }
}

/// Joins continuation-marked tokens with the token that follows them.
/// Returns the word-level sentence and the number of subword units each
/// word came from.
pub fn merge_subwords(sentence: &TokenizedSentence) -> Result<(TokenizedSentence, Vec<usize>)> {
    let Some(marker) = sentence.subword_marker.as_deref().filter(|m| !m.is_empty()) else {
        let fanout = vec![1; sentence.len()];
        return Ok((TokenizedSentence::new(sentence.tokens.iter().cloned(), None), fanout));
    };

    let mut words = Vec::with_capacity(sentence.len());
    let mut fanout = Vec::with_capacity(sentence.len());
    let mut current = String::new();
    let mut pieces = 0;
    for tok in &sentence.tokens {
        pieces += 1;
        match tok.strip_suffix(marker) {
            Some(stem) => current.push_str(stem),
            None => {
                current.push_str(tok);
                words.push(std::mem::take(&mut current));
                fanout.push(pieces);
                pieces = 0;
            }
        }
    }
    if pieces > 0 {
        let last = sentence.tokens.last().cloned().unwrap_or_default();
        return Err(Error::MalformedSubword(last));
    }
    Ok((TokenizedSentence::new(words, None), fanout))
}

/// Raw score track for a (possibly subword-level) sentence.
pub fn score_sentence(
    lm_in: &NGramModel,
    lm_out: &NGramModel,
    sentence: &TokenizedSentence,
) -> Result<ScoreTrack> {
    let (words, fanout) = merge_subwords(sentence)?;
    let p_in = lm_in.score_words(&words.tokens);
    let p_out = lm_out.score_words(&words.tokens);
    let mut raw = Vec::with_capacity(sentence.len());
    for ((a, b), &n) in p_in.iter().zip(&p_out).zip(&fanout) {
        let s = a - b;
        raw.extend(std::iter::repeat_n(s, n));
    }
    Ok(ScoreTrack::from_raw(raw))
}

/// Scores every token with a single model, copying word scores onto
/// subword units the same way `score_sentence` does.
pub fn lm_score_sentence(lm: &NGramModel, sentence: &TokenizedSentence) -> Result<Vec<f64>> {
    let (words, fanout) = merge_subwords(sentence)?;
    let scores = lm.score_words(&words.tokens);
    let mut out = Vec::with_capacity(sentence.len());
    for (s, &n) in scores.iter().zip(&fanout) {
        out.extend(std::iter::repeat_n(*s, n));
    }
    Ok(out)
}
