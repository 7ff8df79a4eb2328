use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use gaiscn::experiment::{
    emit_report, load_corpus, report_from_log, run_experiment, save_corpus, ExperimentConfig,
    EVENT_LOG_FILE, TABLE_FILE,
};
use gaiscn::phy::Scheme;
use gaiscn::scene::parse_corpus;
use gaiscn::Result;

#[derive(Parser)]
#[command(name = "gaiscn", version, about = "Semantic communication network simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML). Defaults apply when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated subset of schemes, e.g. `A,C`.
    #[arg(long, global = true, value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment and write the event log and report.
    Run {
        /// Output directory (overrides the config).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Generate or inspect a scene corpus.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Re-aggregate a report from a saved event log.
    Report {
        /// Event log written by `run`.
        log: PathBuf,
        /// Directory for the rebuilt report (defaults to the log's directory).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Write the configured corpus in scene text format.
    Generate {
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Print summary statistics of a corpus file.
    Inspect { path: PathBuf },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(schemes) = &common.schemes {
        cfg.schemes = schemes.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Run { out } => {
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            let exp = run_experiment(&cfg)?;
            print_summary(&exp.report);
            println!(
                "wrote {} and {}",
                cfg.output_dir.join(EVENT_LOG_FILE).display(),
                cfg.output_dir.join(TABLE_FILE).display()
            );
        }
        Command::Corpus(CorpusCommand::Generate { out }) => {
            let cfg = ExperimentConfig {
                corpus_file: None,
                ..cfg
            };
            let scenes = load_corpus(&cfg)?;
            save_corpus(&scenes, &cfg.vocabulary, &out)?;
            println!("wrote {} scenes to {}", scenes.len(), out.display());
        }
        Command::Corpus(CorpusCommand::Inspect { path }) => inspect(&path, &cfg)?,
        Command::Report { log, out } => {
            let report = report_from_log(&log, &cfg.bins)?;
            let dir = out.unwrap_or_else(|| {
                log.parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            emit_report(&report, &dir)?;
            print_summary(&report);
        }
    }
    Ok(())
}

fn inspect(path: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| gaiscn::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let scenes = parse_corpus(&text, &cfg.vocabulary)?;
    let mut by_count: BTreeMap<usize, usize> = BTreeMap::new();
    let mut by_class: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &scenes {
        *by_count.entry(s.len()).or_default() += 1;
        for o in &s.objects {
            *by_class
                .entry(cfg.vocabulary.class_labels[o.class_id as usize].as_str())
                .or_default() += 1;
        }
    }
    println!("{} scenes", scenes.len());
    for (n, count) in by_count {
        println!("  {n} objects: {count}");
    }
    for (label, count) in by_class {
        println!("  {label}: {count}");
    }
    Ok(())
}

fn print_summary(report: &gaiscn::metrics::MetricsReport) {
    println!(
        "{:<6} {:>7} {:>14} {:>12} {:>9} {:>10} {:>10}",
        "scheme", "snr_db", "downlink_bits", "uplink_bits", "psnr_db", "recovery", "similarity"
    );
    let opt = |v: Option<f64>| v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
    for s in &report.summaries {
        println!(
            "{:<6} {:>7.1} {:>14.1} {:>12.1} {:>9.2} {:>10} {:>10}",
            s.scheme.label(),
            s.snr_db,
            s.downlink_bits.mean,
            s.uplink_bits.mean,
            s.psnr_db.mean,
            opt(s.recovery_ratio.map(|r| r.mean)),
            opt(s.similarity.map(|r| r.mean)),
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(level)))
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
