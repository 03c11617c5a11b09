use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use absa_difficulty::pipeline::{self, Overrides, PipelineConfig, RepresentationChoice, Run};

#[derive(Parser)]
#[command(
    name = "absa-difficulty",
    version,
    about = "Sentence difficulty for aspect-based sentiment corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output root; runs go to <out>/<run-id>/.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Comma-separated classifier names.
    #[arg(long, global = true, value_delimiter = ',')]
    roster: Option<Vec<String>>,

    #[arg(long, global = true, value_enum)]
    representation: Option<Repr>,

    /// Also run the oversampled difficulty tables.
    #[arg(long, global = true)]
    smote: bool,

    /// Number of cross-validation folds.
    #[arg(long, global = true)]
    k: Option<usize>,

    /// Use this run directory instead of the one derived from the config.
    #[arg(long, global = true)]
    run_id: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Repr {
    Tfidf,
    Dense,
    Both,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Corpus statistics tables.
    Stats,
    /// Train and score the roster on both representations.
    Benchmark,
    /// Derive difficulty labels from the benchmark predictions.
    Difficulty,
    /// Cross-validate difficulty prediction from linguistic features.
    PredictDifficulty,
    /// Re-render every table from the stored run bundle.
    Report,
}

fn run(cli: &Cli) -> absa_difficulty::Result<()> {
    let config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        roster: cli.roster.clone(),
        representation: cli.representation.map(|r| match r {
            Repr::Tfidf => RepresentationChoice::Tfidf,
            Repr::Dense => RepresentationChoice::Dense,
            Repr::Both => RepresentationChoice::Both,
        }),
        smote: cli.smote,
        k: cli.k,
        run_id: cli.run_id.clone(),
    };
    let run = Run::new(config, &overrides)?;
    log::info!("run {} in {}", run.run_id, run.dir.display());
    match cli.command {
        Command::Stats => pipeline::cmd_stats(&run),
        Command::Benchmark => pipeline::cmd_benchmark(&run),
        Command::Difficulty => pipeline::cmd_difficulty(&run),
        Command::PredictDifficulty => pipeline::cmd_predict_difficulty(&run),
        Command::Report => pipeline::cmd_report(&run),
    }?;
    println!("{}", run.dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(pipeline::exit_code(&e) as u8)
        }
    }
}
