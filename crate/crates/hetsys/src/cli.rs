use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::grid::Grid;

#[derive(Debug, Parser)]
#[command(name = "hetsys", version, about = "Invariant-form checks for heterotic Hermitian systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Residuals of an equation system at the model data.
    Check(CheckArgs),
    /// Dilaton functional along the `t` family.
    Functional(RunArgs),
    /// Analytic against finite-difference variations in random directions.
    Variation(TrialArgs),
    /// Concave path generated from the model data.
    Path(RunArgs),
    /// Linearized operator: Jacobian, kernel, duality, index and rescaling.
    Linearize(RunArgs),
    /// Invariant cohomology dimensions.
    Cohomology(RunArgs),
    /// Principal-symbol ellipticity scan.
    Symbol(TrialArgs),
    /// List the built-in models.
    Catalog(OutputArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum System {
    TwistedHs,
    Hs,
    Calabi,
    Appendix,
}

#[derive(Clone, Debug, Args)]
pub struct ModelArgs {
    /// Catalog name or path to a model file.
    #[arg(long, default_value = "hopf")]
    pub model: String,
    /// Complex parameter `w` of the Hopf family, e.g. `1.3+0.2i`.
    #[arg(long)]
    pub w: Option<String>,
    /// Real part of `w`; overrides the real part given by `--w`.
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    /// Scalar or `min:max:count`; defaults to the solution value `a/x`.
    #[arg(long)]
    pub t: Option<Grid>,
    #[arg(long, default_value_t = 1.0)]
    pub volume: f64,
    /// Bundle file replacing the model's default bundle.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Overrides the default tolerance of the checks.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 64)]
    pub quad_order: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value_t = System::TwistedHs)]
    pub system: System,
}

#[derive(Clone, Debug, Args)]
pub struct TrialArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of random trials; 200 for `symbol`, 25 for `variation`.
    #[arg(long)]
    pub trials: Option<usize>,
}
