use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wordweights::lm::{read_arpa_file, write_arpa_file};
use wordweights::pipeline::{self, PipelineConfig, SigmaKind};
use wordweights::smoothing::KernelShape;
use wordweights::weights::{StatsReport, WeightMode};
use wordweights::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "wordweights", version, about = "Domain relevance word weights for parallel corpora")]
struct Cli {
    /// Seed for chunk tie-breaking and random masks
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// JSON config providing defaults for every flag
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct MarkerArgs {
    /// Subword continuation marker
    #[arg(long)]
    marker: Option<String>,

    /// Treat every token as a whole word
    #[arg(long, conflicts_with = "marker")]
    no_marker: bool,
}

#[derive(Args, Debug, Default)]
struct LmArgs {
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    min_count: Option<u64>,
    #[arg(long)]
    discount: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct KernelArgs {
    /// Smoothing kernel shape
    #[arg(long, value_enum)]
    kernel: Option<KernelShape>,
    /// Kernel size
    #[arg(long = "L")]
    size: Option<usize>,
    /// How the gaussian sigma is chosen
    #[arg(long, value_enum)]
    sigma_policy: Option<SigmaKind>,
    /// Fixed sigma (implies --sigma-policy fixed)
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct WeightArgs {
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<WeightMode>,
    /// Selection probability per token in random mode
    #[arg(long)]
    keep_fraction: Option<f64>,
    /// Count all-zero sentences as kept in the statistics
    #[arg(long)]
    keep_all_zero: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train an interpolated Kneser-Ney model and write it as ARPA
    LmTrain {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        lm: LmArgs,
        #[command(flatten)]
        marker: MarkerArgs,
    },
    /// Per-token natural-log probabilities under one model
    LmScore {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        marker: MarkerArgs,
    },
    /// Raw domain scores: log P_in - log P_out per token
    Score {
        #[arg(long)]
        lm_in: PathBuf,
        #[arg(long)]
        lm_out: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        marker: MarkerArgs,
    },
    /// Smooth a score file with a moving-average kernel
    Smooth {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        kernel: KernelArgs,
    },
    /// Threshold smoothed scores into 0/1 weights
    Binarize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        weights: WeightArgs,
    },
    /// Keep only the longest run of selected tokens per sentence
    Lcw {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Selection statistics of a weight file
    Stats {
        #[arg(long)]
        weights: PathBuf,
        /// Mode label for the report
        #[arg(long, value_enum, default_value = "word")]
        mode: WeightMode,
        #[arg(long)]
        keep_all_zero: bool,
        /// Also write the report as JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Full pipeline: train or load models, score, smooth, weight
    Pipeline {
        #[arg(long)]
        in_domain: Option<PathBuf>,
        #[arg(long)]
        out_domain: Option<PathBuf>,
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        in_domain_target: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        lm_in: Option<PathBuf>,
        #[arg(long)]
        lm_out: Option<PathBuf>,
        #[arg(long)]
        save_lms: bool,
        #[command(flatten)]
        lm: LmArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        weights: WeightArgs,
        #[command(flatten)]
        marker: MarkerArgs,
    },
}

fn apply_marker(cfg: &mut PipelineConfig, m: &MarkerArgs) {
    if m.no_marker {
        cfg.subword_marker = None;
    } else if let Some(s) = &m.marker {
        cfg.subword_marker = Some(s.clone());
    }
}

fn apply_lm(cfg: &mut PipelineConfig, a: &LmArgs) {
    cfg.order = a.order.unwrap_or(cfg.order);
    cfg.min_count = a.min_count.unwrap_or(cfg.min_count);
    cfg.discount = a.discount.unwrap_or(cfg.discount);
}

fn apply_kernel(cfg: &mut PipelineConfig, a: &KernelArgs) {
    cfg.kernel = a.kernel.unwrap_or(cfg.kernel);
    cfg.kernel_size = a.size.unwrap_or(cfg.kernel_size);
    if let Some(s) = a.sigma {
        cfg.sigma = Some(s);
        cfg.sigma_policy = SigmaKind::Fixed;
    }
    cfg.sigma_policy = a.sigma_policy.unwrap_or(cfg.sigma_policy);
}

fn apply_weights(cfg: &mut PipelineConfig, a: &WeightArgs) {
    cfg.threshold = a.threshold.unwrap_or(cfg.threshold);
    cfg.mode = a.mode.unwrap_or(cfg.mode);
    cfg.random_keep_fraction = a.keep_fraction.unwrap_or(cfg.random_keep_fraction);
    if a.keep_all_zero {
        cfg.drop_all_zero_sentences = false;
    }
}

fn write_report(report: &StatsReport, json: Option<&Path>) -> Result<()> {
    print!("{}", report.to_table());
    if let Some(p) = json {
        fs::write(p, serde_json::to_string_pretty(report)? + "\n").map_err(|e| Error::File {
            path: p.to_owned(),
            source: e,
        })?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::from_json_file(p)?,
        None => PipelineConfig::default(),
    };
    cfg.seed = cli.seed.unwrap_or(cfg.seed);
    cfg.threads = cli.threads.unwrap_or(cfg.threads);
    let pool = pipeline::thread_pool(cfg.threads)?;

    match cli.command {
        Command::LmTrain { corpus, output, lm, marker } => {
            apply_lm(&mut cfg, &lm);
            apply_marker(&mut cfg, &marker);
            let model = pipeline::train_from_file(&corpus, &cfg.train_config(), cfg.marker())?;
            write_arpa_file(&model, &output)?;
        }
        Command::LmScore { model, input, output, marker } => {
            apply_marker(&mut cfg, &marker);
            let lm = read_arpa_file(&model)?;
            pool.install(|| pipeline::lm_score_file(&lm, &input, &output, cfg.marker()))?;
        }
        Command::Score { lm_in, lm_out, input, output, marker } => {
            apply_marker(&mut cfg, &marker);
            let (a, b) = rayon::join(|| read_arpa_file(&lm_in), || read_arpa_file(&lm_out));
            let (a, b) = (a?, b?);
            pool.install(|| pipeline::score_file(&a, &b, &input, &output, cfg.marker()))?;
        }
        Command::Smooth { input, output, kernel } => {
            apply_kernel(&mut cfg, &kernel);
            let policy = cfg.sigma_policy()?;
            pool.install(|| pipeline::smooth_file(&input, &output, cfg.kernel, cfg.kernel_size, policy))?;
        }
        Command::Binarize { input, output, weights } => {
            apply_weights(&mut cfg, &weights);
            pool.install(|| pipeline::binarize_file(&input, &output, &cfg.weighting()))?;
        }
        Command::Lcw { input, output } => {
            pool.install(|| pipeline::lcw_file(&input, &output, cfg.seed))?;
        }
        Command::Stats { weights, mode, keep_all_zero, json } => {
            let drop = cfg.drop_all_zero_sentences && !keep_all_zero;
            let stats = pool.install(|| pipeline::stats_file(&weights, mode, drop))?;
            write_report(&StatsReport::new(vec![stats]), json.as_deref())?;
        }
        Command::Pipeline {
            in_domain,
            out_domain,
            target,
            in_domain_target,
            output_dir,
            lm_in,
            lm_out,
            save_lms,
            lm,
            kernel,
            weights,
            marker,
        } => {
            macro_rules! set {
                ($($field:ident),*) => { $( if $field.is_some() { cfg.$field = $field; } )* };
            }
            set!(in_domain, out_domain, target, in_domain_target, output_dir, lm_in, lm_out);
            cfg.save_lms |= save_lms;
            apply_lm(&mut cfg, &lm);
            apply_kernel(&mut cfg, &kernel);
            apply_weights(&mut cfg, &weights);
            apply_marker(&mut cfg, &marker);
            let out = pipeline::run_pipeline(&cfg)?;
            print!("{}", out.stats.to_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
