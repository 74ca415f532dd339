//! `fhp`: fit, simulate and diagnose fractional Hawkes and ETAS models on
//! earthquake catalogs.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fhp_core::catalog::Region;
use fhp_core::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "fhp", version, about = "Fractional Hawkes and ETAS models for earthquake catalogs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a CSV export and write it as a canonical catalog with a summary.
    Ingest(IngestArgs),
    /// Maximum likelihood fit of one model to a catalog.
    Fit(FitArgs),
    /// Simulate an FHP catalog.
    Simulate(SimulateArgs),
    /// Residual tables and KS summary for a fit record and its catalog.
    Diagnose(DiagnoseArgs),
    /// Simulate-then-fit parameter recovery study; resumes from `--out`.
    Consistency(ConsistencyArgs),
    /// AIC differences between fit records of one catalog.
    Compare(CompareArgs),
}

/// Where the catalog comes from. Canonical catalog files are recognised by
/// their header; anything else is read as CSV and needs `--m0`.
#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Inclusive magnitude cutoff for CSV input.
    #[arg(long)]
    pub m0: Option<f64>,
    /// `lat_min,lat_max,lon_min,lon_max`, inclusive.
    #[arg(long, allow_hyphen_values = true)]
    pub region: Option<Region>,
    /// Keep events at or after this UTC time.
    #[arg(long)]
    pub start: Option<String>,
    /// Keep events at or before this UTC time.
    #[arg(long)]
    pub end: Option<String>,
    #[arg(long, default_value = "time")]
    pub time_column: String,
    #[arg(long, default_value = "mag")]
    pub mag_column: String,
    #[arg(long, default_value = "latitude")]
    pub lat_column: String,
    #[arg(long, default_value = "longitude")]
    pub lon_column: String,
    /// Catalog label; defaults to the file stem.
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "fhp")]
    pub model: ModelKind,
    /// Fit the FHP with λ₀ = 0 on `[t₁, t_N]`.
    #[arg(long)]
    pub restricted: bool,
    #[arg(long, default_value_t = 30)]
    pub n_starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `λ₀,α,γ,β,c`.
    #[arg(long, default_value = "1,0.36787944117144233,1.5,0.7,1")]
    pub params: String,
    /// Stop after this many events.
    #[arg(long, conflicts_with = "t_max")]
    pub n_events: Option<usize>,
    /// Simulate on `[0, t_max]` days.
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 2.5)]
    pub m0: f64,
    /// Exponential parameter η of the tapered-Pareto magnitude law.
    #[arg(long, default_value_t = 2.0)]
    pub eta: f64,
    /// Shape ξ of the generalized-Pareto part.
    #[arg(long, default_value_t = 3.0)]
    pub xi: f64,
    /// Read η as the exponential rate (default) or its mean.
    #[arg(long, default_value = "rate")]
    pub eta_as: EtaReading,
    /// Abort once this many events are generated.
    #[arg(long, default_value_t = 2_000_000)]
    pub event_cap: usize,
    /// Use Ogata thinning instead of the branching construction.
    #[arg(long)]
    pub thinning: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EtaReading {
    Rate,
    Mean,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Fit record written by `fhp fit`.
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConsistencyArgs {
    /// True `λ₀,α,γ,β,c`.
    #[arg(long, default_value = "1,0.36787944117144233,1.5,0.7,1")]
    pub params: String,
    #[arg(long, value_delimiter = ',', default_value = "750,1500")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,
    #[arg(long, default_value_t = 30)]
    pub n_starts: usize,
    #[arg(long, default_value_t = 2.5)]
    pub m0: f64,
    #[arg(long, default_value_t = 2.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 3.0)]
    pub xi: f64,
    #[arg(long, default_value = "rate")]
    pub eta_as: EtaReading,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Fit records (at least two).
    #[arg(long = "input", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let line = std::env::args().collect::<Vec<_>>().join(" ");
    match commands::run(cli.command, &line) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
