//! Word-level domain relevance weights for out-of-domain parallel corpora.
//!
//! Each target token of an out-of-domain sentence is scored with the
//! difference between its log-probability under an in-domain and an
//! out-of-domain n-gram language model. The scores are smoothed with a
//! moving-average kernel, thresholded into binary word weights, and
//! optionally reduced to a single longest chunk per sentence. The resulting
//! line-aligned weight files plug into any trainer with a per-token
//! weighted loss.

pub mod error;
pub mod format;
pub mod lm;
pub mod pipeline;
pub mod scoring;
pub mod smoothing;
pub mod weights;

pub use error::{Error, Result};
pub use lm::{NGramModel, TrainConfig, Vocabulary};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutput};
pub use scoring::{merge_subwords, score_sentence, ScoreTrack, TokenizedSentence};
pub use smoothing::{global_sigma, smooth, Kernel, KernelShape, ScoreMoments, SigmaPolicy};
pub use weights::{
    binarize, collect_stats, lcw, random_mask, sentence_rng, sentence_weight, CorpusStats,
    StatsReport, WeightMode, WeightingConfig,
};
