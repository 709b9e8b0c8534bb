//! Command-line front end and HTTP service for the detox engine.

pub mod commands;
pub mod config;
pub mod engine;
pub mod error;
pub mod service;
pub mod wire;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use detox_core::evaluation::VariantRule;
use detox_core::Language;

use commands::ReportFormat;
use config::{process_env, EngineConfig, EnvLookup};
use error::{exit, CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "detox", version, about = "Hate speech detection with grounded explanations")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    pub print_config: bool,
    /// Override the configured language.
    #[arg(long, global = true)]
    pub lang: Option<Language>,
    /// Override the configured vocabulary file.
    #[arg(long, global = true)]
    pub vocabulary: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Table,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify texts and explain the hateful ones.
    Detect {
        #[arg(long, conflicts_with = "input")]
        text: Option<String>,
        /// Id for --text; defaults to a digest of the text.
        #[arg(long, requires = "text")]
        id: Option<String>,
        /// JSON-lines file of {id?, text, language?}; "-" reads stdin.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Omit the explanation field when it is empty.
        #[arg(long)]
        explain_only_positive: bool,
    },
    /// List vocabulary matches without calling a model.
    Match {
        #[arg(long, conflicts_with = "input")]
        text: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Score predictions against an annotated dataset.
    Evaluate {
        #[arg(long)]
        annotations: PathBuf,
        /// JSON-lines {id, label}; without it the detector runs live.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        variant_rule: Option<VariantRule>,
        #[arg(long, value_enum, default_value = "table")]
        format: FormatArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Collect candidates from Wiktionary, assess them and write a vocabulary.
    BuildVocab {
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Recorded API exchanges to replay instead of the live API.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Turn a reviewed CSV into a vocabulary file.
    ImportReview {
        #[arg(long)]
        review: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        bind: Option<String>,
    },
}

pub fn resolve_config(cli: &Cli, env: EnvLookup<'_>) -> CliResult<EngineConfig> {
    let mut config = EngineConfig::load(cli.config.as_deref(), env)?;
    if let Some(l) = cli.lang {
        config.language = l;
    }
    if let Some(v) = &cli.vocabulary {
        config.vocabulary = Some(v.clone());
    }
    config.validate()?;
    Ok(config)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli, env: EnvLookup<'_>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cli, env, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, env: EnvLookup<'_>, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let config = resolve_config(&cli, env)?;
    if cli.print_config {
        write!(out, "{}", config.to_toml()).map_err(anyhow::Error::from)?;
        return Ok(exit::OK);
    }
    let Some(command) = cli.command else {
        return Err(CliError::usage("no command given (see --help)"));
    };
    match command {
        Command::Detect { text, id, input, output, explain_only_positive } => commands::detect(
            &config,
            &commands::DetectArgs { text, id, input, output, explain_only_positive },
            out,
            err,
        ),
        Command::Match { text, input } => commands::match_terms(&config, &commands::MatchArgs { text, input }, out),
        Command::Evaluate { annotations, predictions, variant_rule, format, output } => commands::evaluate_cmd(
            &config,
            &commands::EvaluateArgs {
                annotations,
                predictions,
                variant_rule,
                format: match format {
                    FormatArg::Table => ReportFormat::Table,
                    FormatArg::Json => ReportFormat::Json,
                },
                output,
            },
            out,
        ),
        Command::BuildVocab { limit, out_dir, fixtures } => commands::build_vocab(
            &config,
            &commands::BuildVocabArgs { language: cli.lang, limit, out_dir, fixtures },
            out,
        )
        .map(|(code, _)| code),
        Command::ImportReview { review, output } => commands::import_review_cmd(
            &config,
            &commands::ImportReviewArgs { review, language: cli.lang, output },
            out,
        ),
        Command::Serve { bind } => {
            let rt = tokio::runtime::Runtime::new().map_err(anyhow::Error::from)?;
            rt.block_on(service::serve(config, bind))
        }
    }
}

/// Entry point used by the binary.
pub fn main_with_process_env() -> i32 {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(cli, &process_env, &mut stdout.lock(), &mut stderr.lock())
}
