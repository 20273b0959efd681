use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use lipread::classify::FrameClassifier;
use lipread::hmm::{train_bank, WordModelBank};
use lipread::pipeline::{
    align_videos, bin_sort, classify_videos, evaluate, extract_features, io, report_render, synth_generate,
    train_frame_classifier, DatasetManifest, Mode, ReportFormat, RunConfig,
};

#[derive(Parser)]
#[command(name = "lipread", version, about = "Lip reading pipeline: features, frame classes, word HMMs")]
struct Cli {
    /// Seed for every random choice; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Symbol track: phoneme or viseme.
    #[arg(long, global = true)]
    mode: Option<Mode>,
    /// Transcript units per video frame; overrides the manifest.
    #[arg(long, global = true)]
    units_per_frame: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract one feature vector per frame of every manifest video.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write per-frame phoneme and viseme labels from the transcripts.
    Align {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the SVD projection and frame classifier.
    TrainClassifier {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn every video's frames into a symbol sequence.
    Classify {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Frames per video; taken from the manifest when given.
        #[arg(long, default_value_t = 74)]
        frames_per_video: usize,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Cut per-word subsequences out of video sequences.
    Binsort {
        #[arg(long)]
        sequences: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one HMM per word on all of its sequences.
    TrainHmm {
        #[arg(long)]
        words: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split, train and decode per configured word subset.
    Evaluate {
        #[arg(long)]
        words: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus directory.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Render an evaluation report.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "text")]
        format: ReportFormat,
        /// Standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = cli.mode {
        cfg.mode = mode;
    }
    if let Some(u) = cli.units_per_frame {
        if !(u > 0.0) {
            bail!("--units-per-frame must be positive");
        }
    }
    Ok(cfg)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Returns whether the run was free of non-fatal failures.
fn run(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Extract { manifest, out } => {
            let manifest = DatasetManifest::load(manifest)?;
            let outcome = extract_features(&manifest, &cfg.extractor, cfg.seed);
            io::write_features(out, &outcome.rows)?;
            log::info!("{} frames extracted, {} failed", outcome.rows.len(), outcome.failures.len());
            Ok(outcome.failures.is_empty())
        }
        Command::Align { manifest, out } => {
            let manifest = DatasetManifest::load(manifest)?;
            let map = cfg.viseme_map();
            let dict = cfg.dictionary(&map)?;
            let transcripts = manifest.transcripts(cli.units_per_frame)?;
            io::write_labels(out, &align_videos(&transcripts, &dict, &map)?)?;
            Ok(true)
        }
        Command::TrainClassifier { features, labels, out } => {
            let features = io::read_features(features)?;
            let labels = io::read_labels(labels)?;
            let trained = train_frame_classifier(&features, &labels, &cfg)?;
            io::write_json(out, &trained.model)?;
            println!(
                "train {} test {} rank {} accuracy {:.4}",
                trained.n_train, trained.n_test, trained.model.projection.rank, trained.test_accuracy
            );
            Ok(true)
        }
        Command::Classify { features, model, out, frames_per_video, manifest } => {
            let model: FrameClassifier = io::read_json(model)?;
            let expected = cfg.mode.alphabet_size(&cfg.viseme_map());
            if model.alphabet_size != expected {
                bail!(
                    "model has {} symbols but mode {:?} uses {expected}",
                    model.alphabet_size,
                    cfg.mode
                );
            }
            let frames = match manifest {
                Some(path) => DatasetManifest::load(path)?.frames_per_video,
                None => *frames_per_video,
            };
            let rows = io::read_features(features)?;
            io::write_sequences(out, &classify_videos(&rows, &model, frames)?)?;
            Ok(true)
        }
        Command::Binsort { sequences, manifest, out } => {
            let manifest = DatasetManifest::load(manifest)?;
            let transcripts = manifest.transcripts(cli.units_per_frame)?;
            let seqs = io::read_sequences(sequences)?;
            io::write_word_sequences(out, &bin_sort(&seqs, &transcripts)?)?;
            Ok(true)
        }
        Command::TrainHmm { words, out } => {
            let data = io::read_word_sequences(words)?;
            let plan = cfg.state_plan(data.keys().map(String::as_str))?;
            let bank: WordModelBank = train_bank(&data, cfg.hmm_alphabet(), &plan, &cfg.train_config())?;
            for (word, m) in &bank.models {
                log::info!("{word}: {} states, log-likelihood {:.4}", m.hmm.n_states(), m.log_likelihood);
            }
            io::write_json(out, &bank)?;
            Ok(true)
        }
        Command::Evaluate { words, out } => {
            let data = io::read_word_sequences(words)?;
            let report = evaluate(&data, &cfg.subsets, &cfg)?;
            io::write_report(out, &report)?;
            Ok(true)
        }
        Command::Synth { out } => {
            let corpus = synth_generate(&cfg.synth, cfg.seed)?;
            corpus.write(out)?;
            Ok(true)
        }
        Command::Report { input, format, out } => {
            let text = report_render(&io::read_report(input)?, *format);
            match out {
                Some(path) => write_text(path, &text)?,
                None => print!("{text}"),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
