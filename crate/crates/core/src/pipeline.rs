//! File-level stages and the end-to-end weighting pipeline.
//!
//! Every stage streams its input in batches, maps sentences in parallel and
//! writes results in input order. Stage boundaries go through the six-decimal
//! score format, and the fused pipeline quantizes at the same boundaries, so
//! chaining the individual stages reproduces the fused output byte for byte.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{
    self, format_scores, format_weights, parse_scores, parse_weights, quantize,
};
use crate::lm::{self, train_lm, NGramModel, TrainConfig};
use crate::scoring::{lm_score_sentence, merge_subwords, score_sentence, TokenizedSentence};
use crate::smoothing::{corpus_kernel, smooth, Kernel, KernelShape, ScoreMoments, SigmaPolicy};
use crate::weights::{
    binarize, lcw, sentence_rng, sentence_weight, CorpusStats, StatsReport, WeightMode,
    WeightingConfig,
};

const BATCH: usize = 8192;

pub const RAW_SCORES_FILE: &str = "raw_scores.txt";
pub const SCORES_FILE: &str = "scores.txt";
pub const WEIGHTS_FILE: &str = "weights.txt";
pub const IN_DOMAIN_WEIGHTS_FILE: &str = "in_domain_weights.txt";
pub const STATS_JSON_FILE: &str = "stats.json";
pub const STATS_TABLE_FILE: &str = "stats.txt";
pub const LM_IN_FILE: &str = "lm_in.arpa";
pub const LM_OUT_FILE: &str = "lm_out.arpa";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SigmaKind {
    Variance,
    Stddev,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// In-domain monolingual corpus for training the in-domain model.
    pub in_domain: Option<PathBuf>,
    /// Out-of-domain monolingual corpus for training the out-of-domain model.
    pub out_domain: Option<PathBuf>,
    /// Target side of the out-of-domain parallel corpus; this is what gets weighted.
    pub target: Option<PathBuf>,
    /// Target side of the in-domain parallel corpus; receives all-ones weights.
    pub in_domain_target: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Pre-trained models; when set, the matching corpus is not needed.
    pub lm_in: Option<PathBuf>,
    pub lm_out: Option<PathBuf>,
    /// Write trained models to the output directory as ARPA.
    pub save_lms: bool,
    pub order: usize,
    pub min_count: u64,
    pub discount: f64,
    pub kernel: KernelShape,
    pub kernel_size: usize,
    pub sigma_policy: SigmaKind,
    pub sigma: Option<f64>,
    pub threshold: f64,
    pub mode: WeightMode,
    pub drop_all_zero_sentences: bool,
    pub random_keep_fraction: f64,
    pub subword_marker: Option<String>,
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            in_domain: None,
            out_domain: None,
            target: None,
            in_domain_target: None,
            output_dir: None,
            lm_in: None,
            lm_out: None,
            save_lms: false,
            order: 4,
            min_count: 1,
            discount: 0.75,
            kernel: KernelShape::Gaussian,
            kernel_size: 5,
            sigma_policy: SigmaKind::Variance,
            sigma: None,
            threshold: 0.5,
            mode: WeightMode::Word,
            drop_all_zero_sentences: true,
            random_keep_fraction: 0.5,
            subword_marker: Some(crate::scoring::DEFAULT_SUBWORD_MARKER.to_owned()),
            seed: 0,
            threads: 0,
        }
    }
}

impl PipelineConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            order: self.order,
            min_count: self.min_count,
            discount: self.discount,
        }
    }

    pub fn weighting(&self) -> WeightingConfig {
        WeightingConfig {
            threshold: self.threshold,
            mode: self.mode,
            drop_all_zero_sentences: self.drop_all_zero_sentences,
            random_keep_fraction: self.random_keep_fraction,
            seed: self.seed,
        }
    }

    pub fn sigma_policy(&self) -> Result<SigmaPolicy> {
        Ok(match self.sigma_policy {
            SigmaKind::Variance => SigmaPolicy::Variance,
            SigmaKind::Stddev => SigmaPolicy::StdDev,
            SigmaKind::Fixed => SigmaPolicy::Fixed(
                self.sigma.ok_or(Error::MissingKey("sigma"))?,
            ),
        })
    }

    pub fn marker(&self) -> Option<&str> {
        self.subword_marker.as_deref().filter(|m| !m.is_empty())
    }

    /// Checks required keys and that every referenced input exists.
    pub fn validate(&self) -> Result<()> {
        let target = self.target.as_ref().ok_or(Error::MissingKey("target"))?;
        self.output_dir.as_ref().ok_or(Error::MissingKey("output_dir"))?;
        if self.lm_in.is_none() && self.in_domain.is_none() {
            return Err(Error::MissingKey("in_domain"));
        }
        if self.lm_out.is_none() && self.out_domain.is_none() {
            return Err(Error::MissingKey("out_domain"));
        }
        let inputs = [
            ("target", Some(target)),
            ("in_domain_target", self.in_domain_target.as_ref()),
            ("lm_in", self.lm_in.as_ref()),
            ("lm_out", self.lm_out.as_ref()),
            ("in_domain", self.lm_in.is_none().then_some(()).and(self.in_domain.as_ref())),
            ("out_domain", self.lm_out.is_none().then_some(()).and(self.out_domain.as_ref())),
        ];
        for (key, path) in inputs {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(Error::Config(format!(
                        "`{key}` path does not exist: {}",
                        p.display()
                    )));
                }
            }
        }
        if self.kernel_size < 1 {
            return Err(Error::Config("kernel_size must be >= 1".into()));
        }
        self.train_config().validate()?;
        self.weighting().validate()?;
        self.sigma_policy()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub raw_scores: PathBuf,
    pub scores: PathBuf,
    pub weights: PathBuf,
    pub in_domain_weights: Option<PathBuf>,
    pub stats: StatsReport,
    /// Kernel used for smoothing; `None` for an empty corpus.
    pub kernel: Option<Kernel>,
}

pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Reads `input` in batches, maps each line (with its 0-based index) in
/// parallel, and feeds the results to `sink` in input order.
pub fn process_lines<T, M, S>(input: &Path, map: M, mut sink: S) -> Result<()>
where
    T: Send,
    M: Fn(u64, &str) -> Result<T> + Sync,
    S: FnMut(T) -> Result<()>,
{
    format::for_each_batch(input, BATCH, |start, lines| {
        let mapped: Vec<Result<T>> = lines
            .par_iter()
            .enumerate()
            .map(|(i, l)| {
                map((start + i) as u64, l).map_err(|e| match e {
                    Error::Format { path, msg, .. } => Error::Format {
                        path,
                        line: start + i + 1,
                        msg,
                    },
                    e => e,
                })
            })
            .collect();
        for r in mapped {
            sink(r?)?;
        }
        Ok(())
    })
}

fn format_error(path: &Path) -> impl Fn(String) -> Error + '_ {
    move |msg| Error::Format {
        path: path.to_owned(),
        line: 0,
        msg,
    }
}

fn subword_error(path: &Path) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Format {
        path: path.to_owned(),
        line: 0,
        msg: e.to_string(),
    }
}

/// Trains a model from a corpus file, merging subword units first.
pub fn train_from_file(path: &Path, config: &TrainConfig, marker: Option<&str>) -> Result<NGramModel> {
    let reader = format::open(path)?;
    let mut failure: Option<Error> = None;
    let sentences = reader.lines().enumerate().map_while(|(i, line)| {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                failure = Some(Error::file(path, e));
                return None;
            }
        };
        match merge_subwords(&TokenizedSentence::from_line(&line, marker)) {
            Ok((words, _)) => Some(words.tokens),
            Err(e) => {
                failure = Some(Error::Format {
                    path: path.to_owned(),
                    line: i + 1,
                    msg: e.to_string(),
                });
                None
            }
        }
    });
    let model = train_lm(sentences, config);
    match failure {
        Some(e) => Err(e),
        None => model,
    }
}

/// Writes the raw domain score of every token of `input`. Returns the
/// moments of the written (six-decimal) values.
pub fn score_file(
    lm_in: &NGramModel,
    lm_out: &NGramModel,
    input: &Path,
    output: &Path,
    marker: Option<&str>,
) -> Result<ScoreMoments> {
    let mut out = format::create(output)?;
    let mut moments = ScoreMoments::default();
    process_lines(
        input,
        |_, line| {
            let track = score_sentence(lm_in, lm_out, &TokenizedSentence::from_line(line, marker))
                .map_err(subword_error(input))?;
            let q: Vec<f64> = track.raw.iter().map(|&v| quantize(v)).collect();
            Ok((format_scores(&q), q))
        },
        |(line, q)| {
            moments.extend(q);
            format::write_lines(&mut out, [line])
        },
    )?;
    out.flush()?;
    Ok(moments)
}

/// Per-token natural-log probabilities under a single model.
pub fn lm_score_file(lm: &NGramModel, input: &Path, output: &Path, marker: Option<&str>) -> Result<()> {
    let mut out = format::create(output)?;
    process_lines(
        input,
        |_, line| {
            lm_score_sentence(lm, &TokenizedSentence::from_line(line, marker))
                .map(|s| format_scores(&s))
                .map_err(subword_error(input))
        },
        |line| format::write_lines(&mut out, [line]),
    )?;
    out.flush()?;
    Ok(())
}

pub fn file_moments(path: &Path) -> Result<ScoreMoments> {
    let mut moments = ScoreMoments::default();
    process_lines(
        path,
        |_, line| parse_scores(line).map_err(format_error(path)),
        |v| {
            moments.extend(v);
            Ok(())
        },
    )?;
    Ok(moments)
}

/// Smooths a score file. A corpus-level sigma is estimated in a first pass
/// over the file when the policy needs one.
pub fn smooth_file(
    input: &Path,
    output: &Path,
    shape: KernelShape,
    size: usize,
    policy: SigmaPolicy,
) -> Result<Option<Kernel>> {
    let moments = if shape == KernelShape::Gaussian && policy.needs_corpus_pass() {
        file_moments(input)?
    } else {
        ScoreMoments::default()
    };
    let kernel = if shape == KernelShape::Gaussian && policy.needs_corpus_pass() && moments.count() == 0 {
        None
    } else {
        Some(corpus_kernel(shape, size, policy, &moments)?)
    };
    let identity = Kernel::identity();
    let k = kernel.as_ref().unwrap_or(&identity);
    let mut out = format::create(output)?;
    process_lines(
        input,
        |_, line| {
            let raw = parse_scores(line).map_err(format_error(input))?;
            Ok(format_scores(&smooth(&raw, k)))
        },
        |line| format::write_lines(&mut out, [line]),
    )?;
    out.flush()?;
    Ok(kernel)
}

/// Turns a smoothed score file into a weight file using `config.mode`.
pub fn binarize_file(input: &Path, output: &Path, config: &WeightingConfig) -> Result<CorpusStats> {
    config.validate()?;
    let mut out = format::create(output)?;
    let mut stats = CorpusStats::new(config.mode);
    process_lines(
        input,
        |i, line| {
            let smoothed = parse_scores(line).map_err(format_error(input))?;
            Ok(config.apply(&smoothed, i))
        },
        |w| {
            stats.add(&w, config.drop_all_zero_sentences);
            format::write_lines(&mut out, [format_weights(&w)])
        },
    )?;
    out.flush()?;
    Ok(stats)
}

/// Reduces every line of a weight file to its longest run of ones.
pub fn lcw_file(input: &Path, output: &Path, seed: u64) -> Result<()> {
    let mut out = format::create(output)?;
    process_lines(
        input,
        |i, line| {
            let w = parse_weights(line).map_err(format_error(input))?;
            Ok(format_weights(&lcw(&w, &mut sentence_rng(seed, i))))
        },
        |line| format::write_lines(&mut out, [line]),
    )?;
    out.flush()?;
    Ok(())
}

pub fn stats_file(weights: &Path, mode: WeightMode, drop_all_zero_sentences: bool) -> Result<CorpusStats> {
    let mut stats = CorpusStats::new(mode);
    process_lines(
        weights,
        |_, line| parse_weights(line).map_err(format_error(weights)),
        |w| {
            stats.add(&w, drop_all_zero_sentences);
            Ok(())
        },
    )?;
    Ok(stats)
}

/// Checks that `emitted` has one line per line of `corpus` and one value per
/// token on each line.
pub fn verify_alignment(corpus: &Path, emitted: &Path) -> Result<()> {
    let mismatch = |msg: String| Error::Alignment {
        path: emitted.to_owned(),
        msg,
    };
    let mut a = format::open(corpus)?;
    let mut b = format::open(emitted)?;
    let (mut la, mut lb) = (String::new(), String::new());
    let mut line = 0usize;
    loop {
        la.clear();
        lb.clear();
        let na = a.read_line(&mut la).map_err(|e| Error::file(corpus, e))?;
        let nb = b.read_line(&mut lb).map_err(|e| Error::file(emitted, e))?;
        line += 1;
        match (na, nb) {
            (0, 0) => return Ok(()),
            (0, _) => return Err(mismatch(format!("more lines than the corpus ({} lines)", line - 1))),
            (_, 0) => return Err(mismatch(format!("{} lines, corpus has more", line - 1))),
            _ => {}
        }
        let (ta, tb) = (la.split_whitespace().count(), lb.split_whitespace().count());
        if ta != tb {
            return Err(mismatch(format!("line {line}: {tb} values for {ta} tokens")));
        }
    }
}

fn load_model(
    arpa: Option<&Path>,
    corpus: Option<&Path>,
    config: &TrainConfig,
    marker: Option<&str>,
) -> Result<NGramModel> {
    match (arpa, corpus) {
        (Some(p), _) => lm::read_arpa_file(p),
        (None, Some(c)) => train_from_file(c, config, marker),
        (None, None) => unreachable!("validated"),
    }
}

struct LineResult {
    smoothed: String,
    weights: String,
    per_mode: Vec<Vec<u8>>,
}

/// Runs score → smooth → weight end to end and writes every output file.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let pool = thread_pool(config.threads)?;
    pool.install(|| run_in_pool(config))
}

fn run_in_pool(config: &PipelineConfig) -> Result<PipelineOutput> {
    let target = config.target.as_deref().expect("validated");
    let out_dir = config.output_dir.as_deref().expect("validated");
    fs::create_dir_all(out_dir).map_err(|e| Error::file(out_dir, e))?;
    let marker = config.marker();
    let train_cfg = config.train_config();
    let weighting = config.weighting();

    let (lm_in, lm_out) = rayon::join(
        || load_model(config.lm_in.as_deref(), config.in_domain.as_deref(), &train_cfg, marker),
        || load_model(config.lm_out.as_deref(), config.out_domain.as_deref(), &train_cfg, marker),
    );
    let (lm_in, lm_out) = (lm_in?, lm_out?);
    if config.save_lms {
        if config.lm_in.is_none() {
            lm::write_arpa_file(&lm_in, &out_dir.join(LM_IN_FILE))?;
        }
        if config.lm_out.is_none() {
            lm::write_arpa_file(&lm_out, &out_dir.join(LM_OUT_FILE))?;
        }
    }

    let raw_path = out_dir.join(RAW_SCORES_FILE);
    let moments = score_file(&lm_in, &lm_out, target, &raw_path, marker)?;
    drop((lm_in, lm_out));

    let kernel = if moments.count() == 0 {
        None
    } else {
        Some(corpus_kernel(
            config.kernel,
            config.kernel_size,
            config.sigma_policy()?,
            &moments,
        )?)
    };
    let identity = Kernel::identity();
    let k = kernel.as_ref().unwrap_or(&identity);

    let mut modes = vec![WeightMode::Sentence, WeightMode::Word, WeightMode::Chunk];
    if config.mode == WeightMode::Random {
        modes.push(WeightMode::Random);
    }
    let mut stats: Vec<CorpusStats> = modes.iter().map(|&m| CorpusStats::new(m)).collect();

    let scores_path = out_dir.join(SCORES_FILE);
    let weights_path = out_dir.join(WEIGHTS_FILE);
    let mut scores_out = format::create(&scores_path)?;
    let mut weights_out = format::create(&weights_path)?;
    process_lines(
        &raw_path,
        |i, line| {
            let raw = parse_scores(line).map_err(format_error(&raw_path))?;
            let smoothed: Vec<f64> = smooth(&raw, k).into_iter().map(quantize).collect();
            let per_mode: Vec<Vec<u8>> = modes
                .iter()
                .map(|&mode| {
                    if smoothed.is_empty() {
                        return Vec::new();
                    }
                    match mode {
                        WeightMode::Word => binarize(&smoothed, weighting.threshold),
                        WeightMode::Sentence => {
                            sentence_weight(&smoothed, weighting.threshold).expect("non-empty")
                        }
                        mode => WeightingConfig { mode, ..weighting.clone() }.apply(&smoothed, i),
                    }
                })
                .collect();
            let chosen = modes.iter().position(|&m| m == weighting.mode).expect("listed");
            Ok(LineResult {
                smoothed: format_scores(&smoothed),
                weights: format_weights(&per_mode[chosen]),
                per_mode,
            })
        },
        |r| {
            for (s, w) in stats.iter_mut().zip(&r.per_mode) {
                s.add(w, weighting.drop_all_zero_sentences);
            }
            format::write_lines(&mut scores_out, [r.smoothed])?;
            format::write_lines(&mut weights_out, [r.weights])
        },
    )?;
    scores_out.flush()?;
    weights_out.flush()?;
    drop((scores_out, weights_out));

    let in_domain_weights = match &config.in_domain_target {
        Some(p) => {
            let path = out_dir.join(IN_DOMAIN_WEIGHTS_FILE);
            write_in_domain_weights(p, &path)?;
            Some(path)
        }
        None => None,
    };

    for emitted in [&raw_path, &scores_path, &weights_path] {
        verify_alignment(target, emitted)?;
    }
    if let (Some(src), Some(dst)) = (&config.in_domain_target, &in_domain_weights) {
        verify_alignment(src, dst)?;
    }

    let report = StatsReport::new(stats);
    fs::write(
        out_dir.join(STATS_JSON_FILE),
        serde_json::to_string_pretty(&report)? + "\n",
    )
    .map_err(|e| Error::file(out_dir.join(STATS_JSON_FILE), e))?;
    fs::write(out_dir.join(STATS_TABLE_FILE), report.to_table())
        .map_err(|e| Error::file(out_dir.join(STATS_TABLE_FILE), e))?;

    Ok(PipelineOutput {
        raw_scores: raw_path,
        scores: scores_path,
        weights: weights_path,
        in_domain_weights,
        stats: report,
        kernel,
    })
}

/// In-domain sentences are not scored: every token gets weight 1.
pub fn write_in_domain_weights(corpus: &Path, output: &Path) -> Result<()> {
    let mut out = format::create(output)?;
    process_lines(
        corpus,
        |_, line| Ok(format_weights(&vec![1; line.split_whitespace().count()])),
        |line| format::write_lines(&mut out, [line]),
    )?;
    out.flush()?;
    Ok(())
}
