//! `depcompat`: license incompatibility audits over registry dependency
//! networks.
//!
//! Exit codes: 0 success, 2 usage error, 3 input error, 4 rules-file error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use depcompat::{Ecosystem, OutputFormat};
use serde::Serialize;

/// Worker threads for per-ecosystem jobs. Defaults to the available
/// parallelism.
pub const WORKERS_ENV: &str = "DEPCOMPAT_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "depcompat",
    version,
    about = "Audit package-registry dependency networks for license incompatibilities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Filter registry dumps into per-ecosystem package and dependency CSVs.
    Filter(FilterArgs),
    /// License usage per ecosystem.
    Licenses(LicensesArgs),
    /// Direct license incompatibilities on dependency links.
    Direct(ViolationArgs),
    /// Direct incompatibilities caused by AGPL-licensed dependencies.
    Agpl(ViolationArgs),
    /// Packages transitively affected by AGPL-caused incompatibilities.
    Impact(ImpactArgs),
}

fn parse_ecosystem(s: &str) -> Result<Ecosystem, String> {
    s.parse::<Ecosystem>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Text,
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => OutputFormat::Text,
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct FilterArgs {
    /// Projects dump (CSV with Platform, ID, Name, Licenses columns).
    #[arg(long)]
    projects: PathBuf,
    /// Dependencies dump (CSV with Platform, Project ID, Dependency Project ID, Dependency Kind).
    #[arg(long)]
    deps: PathBuf,
    /// Output directory for the intermediate files.
    #[arg(long)]
    out: PathBuf,
    /// Ecosystems to keep [default: all seven].
    #[arg(long, value_delimiter = ',', value_parser = parse_ecosystem)]
    ecosystems: Vec<Ecosystem>,
    /// Dependency kinds to keep.
    #[arg(long, value_delimiter = ',', default_values_t = ["runtime".to_string(), "compile".to_string()])]
    kinds: Vec<String>,
    /// Where to write the run manifest [default: <out>/manifest-filter.json].
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct DataArgs {
    /// Directory holding packages-<eco>.csv and dependencies-<eco>.csv.
    #[arg(long)]
    data: PathBuf,
    /// Ecosystems to analyze [default: every ecosystem with intermediates in --data].
    #[arg(long, value_delimiter = ',', value_parser = parse_ecosystem)]
    ecosystems: Vec<Ecosystem>,
    /// Dependency kinds to keep when loading.
    #[arg(long, value_delimiter = ',', default_values_t = ["runtime".to_string(), "compile".to_string()])]
    kinds: Vec<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Where to write the run manifest [default: <data>/manifest-<command>.json].
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct LicensesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    data: DataArgs,
    /// Number of buckets before the aggregated "other" bucket.
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u64).range(1..))]
    top: u64,
}

#[derive(Debug, Args, Serialize)]
struct ViolationArgs {
    #[command(flatten)]
    #[serde(flatten)]
    data: DataArgs,
    /// Rules file [default: the bundled rules].
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Maximum violations to list [default: 20 in text output, all otherwise].
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct ImpactArgs {
    #[command(flatten)]
    #[serde(flatten)]
    violations: ViolationArgs,
    /// Report violators affecting more than this many packages.
    #[arg(long, default_value_t = 1000)]
    threshold: usize,
    /// Write a DOT graph of the reported violators and their AGPL dependencies.
    #[arg(long)]
    dot: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Filter(args) => commands::filter(args),
        Command::Licenses(args) => commands::licenses(args),
        Command::Direct(args) => commands::violations(args, commands::Mode::Direct),
        Command::Agpl(args) => commands::violations(args, commands::Mode::Agpl),
        Command::Impact(args) => commands::impact(args),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
