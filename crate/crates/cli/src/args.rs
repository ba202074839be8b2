use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use xorgap::families::{Family, FamilySpec};
use xorgap::gadget::{ComposeMode, ComposeParams};
use xorgap::oracle;
use xorgap::pipeline::PipelineConfig;
use xorgap::sdp::SdpConfig;

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "xorgap", version, about = "Max-3-XOR gap instances and two-round SDP rounding")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate instance files from a family.
    Gen(GenArgs),
    /// Compose the dictatorship test with a Label-Cover instance.
    Compose(ComposeArgs),
    /// Check a distribution for balanced or biased pairwise independence.
    VerifyDist(VerifyDistArgs),
    /// Print the Fourier expansion of an instance's objective.
    Fourier(FourierArgs),
    /// Run the two-round pipeline on an instance.
    Solve(SolveArgs),
    /// Exact optimum by exhaustive enumeration.
    Brute(BruteArgs),
    /// Run the pipeline over a generated family.
    Experiment(ExperimentArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Planted,
    RandomUniform,
    ComposedGadget,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Enumerate,
    Sample,
}

impl From<ModeArg> for ComposeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Enumerate => ComposeMode::Enumerate,
            ModeArg::Sample => ComposeMode::Sample,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GadgetArgs {
    #[arg(long = "r", default_value_t = 1)]
    pub r: usize,
    #[arg(long = "d", default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Enumerate)]
    pub mode: ModeArg,
    /// Per-edge support cap in enumerate mode, samples per edge in sample mode.
    #[arg(long, default_value_t = 4096)]
    pub budget: usize,
}

impl GadgetArgs {
    pub fn params(&self, seed: u64) -> ComposeParams {
        ComposeParams {
            eta: self.eta,
            per_edge_budget: self.budget,
            mode: self.mode.into(),
            seed,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: FamilyKind,
    /// Corrupted fraction for the planted family.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Block sizes M,N,N.
    #[arg(long, value_delimiter = ',', default_values_t = [6, 6, 6])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 40)]
    pub constraints: usize,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 2)]
    pub n_u: usize,
    #[arg(long, default_value_t = 2)]
    pub n_v: usize,
    /// Label-Cover left degree.
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub gadget: GadgetArgs,
}

impl FamilyArgs {
    pub fn spec(&self) -> Result<FamilySpec, CliError> {
        let [m1, m2, m3] = self.sizes[..] else {
            return Err(CliError::Usage(format!(
                "--sizes needs three comma-separated values, got {}",
                self.sizes.len()
            )));
        };
        let family = match self.family {
            FamilyKind::Planted => Family::Planted { eps: self.eps },
            FamilyKind::RandomUniform => Family::RandomUniform,
            FamilyKind::ComposedGadget => Family::ComposedGadget {
                r: self.gadget.r,
                d: self.gadget.d,
                n_u: self.n_u,
                n_v: self.n_v,
                degree: self.degree,
                eta: self.gadget.eta,
                enumerate: self.gadget.mode == ModeArg::Enumerate,
                budget: self.gadget.budget,
            },
        };
        Ok(FamilySpec {
            family,
            sizes: [m1, m2, m3],
            constraints: self.constraints,
            count: self.count,
        })
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SdpArgs {
    /// Factor rank (default: max(2, min(n, ceil(sqrt(2n)) + 1))).
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, default_value_t = 2000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Truncation thresholds for rounding.
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 64)]
    pub trials: usize,
    /// SDP seeds per instance; the best final value is kept.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    #[arg(long, default_value_t = 10_000)]
    pub baseline_trials: usize,
    #[arg(long)]
    pub no_oracle: bool,
    #[arg(long, default_value_t = oracle::MAX_VARS)]
    pub oracle_max_vars: usize,
}

impl SdpArgs {
    pub fn pipeline(&self, seed: u64) -> PipelineConfig {
        let defaults = SdpConfig::default();
        PipelineConfig {
            sdp: SdpConfig {
                rank: self.rank,
                max_sweeps: self.sweeps,
                tol: self.tol,
                t_grid: self.t_grid.clone().unwrap_or(defaults.t_grid),
                trials: self.trials,
                seed,
            },
            seeds: self.seeds,
            baseline_trials: self.baseline_trials,
            oracle_max_vars: if self.no_oracle { 0 } else { self.oracle_max_vars },
        }
    }
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ComposeArgs {
    /// Label-Cover instance file.
    pub lc: PathBuf,
    /// Base distribution file (default: uniform over C).
    #[arg(long)]
    pub phi: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub gadget: GadgetArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyDistArgs {
    /// Distribution file; omit when using --disguise.
    pub file: Option<PathBuf>,
    /// Mixture component `weight:set`, set one of G0..G3, C, G.
    #[arg(long)]
    pub disguise: Vec<String>,
    #[arg(long, default_value = "1/2")]
    pub gamma: String,
    #[arg(long, default_value_t = 0.0)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct FourierArgs {
    pub instance: PathBuf,
    /// Keep only this degree.
    #[arg(long)]
    pub degree: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub sdp: SdpArgs,
    /// Write the returned assignment here.
    #[arg(long)]
    pub assignment_out: Option<PathBuf>,
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args, Debug)]
pub struct BruteArgs {
    pub instance: PathBuf,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub sdp: SdpArgs,
    #[arg(long)]
    pub csv: bool,
}
