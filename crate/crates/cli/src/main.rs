mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{CoinChoice, RunPaths, Status, SweepArgs, VerifyArgs};
use config::RunConfig;
use qwalk_core::{PlanSpec, VerifyConfig};

#[derive(Parser, Debug)]
#[command(
    name = "qwalk",
    version,
    about = "Coined quantum walks on Z^d with on-demand full-state revivals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one walk and write distribution and fidelity tables
    Run(RunCmd),
    /// Decide whether a coin admits an intervention operator G
    CheckCoin(CheckCoinCmd),
    /// Check the quasi-momentum operator identities for a coin and its G
    Verify(VerifyCmd),
    /// Partial Polya numbers for several intervention periods, in parallel
    SweepPolya(SweepCmd),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PlanKind {
    W,
    Z,
    None,
}

#[derive(Args, Debug)]
struct PlanFlags {
    /// Intervention schedule; missing numbers come from the config
    #[arg(long, value_enum)]
    plan: Option<PlanKind>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    /// Plain walk of this many steps (same as --plan none)
    #[arg(long)]
    steps: Option<usize>,
}

impl PlanFlags {
    fn apply(&self, base: PlanSpec) -> anyhow::Result<PlanSpec> {
        let (bl, bm, br, bs) = match base {
            PlanSpec::W { l, r } => (l, 0, r, r * (l + 1)),
            PlanSpec::Z { l, m, r } => (l, m, r, r * (l + 1)),
            PlanSpec::Free { steps } => (3, 0, 2, steps),
        };
        let kind = match (self.plan, self.steps, base) {
            (Some(k), _, _) => k,
            (None, Some(_), _) => PlanKind::None,
            (None, None, PlanSpec::W { .. }) => PlanKind::W,
            (None, None, PlanSpec::Z { .. }) => PlanKind::Z,
            (None, None, PlanSpec::Free { .. }) => PlanKind::None,
        };
        if self.steps.is_some() && kind != PlanKind::None {
            anyhow::bail!("--steps only applies to plans without interventions");
        }
        let l = self.l.unwrap_or(bl);
        let r = self.r.unwrap_or(br);
        Ok(match kind {
            PlanKind::W => PlanSpec::W { l, r },
            PlanKind::Z => PlanSpec::Z {
                l,
                m: self.m.unwrap_or(bm),
                r,
            },
            PlanKind::None => PlanSpec::Free {
                steps: self.steps.unwrap_or(bs),
            },
        })
    }
}

#[derive(Args, Debug)]
struct RunCmd {
    /// JSON run configuration; built-in defaults when omitted
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    plan: PlanFlags,
    #[arg(long)]
    seed: Option<u64>,
    /// Run interventions even if (C, G) fails the admissibility check
    #[arg(long)]
    override_admissibility: bool,
    /// Directory for relative output paths
    #[arg(long, env = "QWALK_OUTPUT_DIR", default_value = ".")]
    output_dir: PathBuf,
    #[arg(long)]
    distribution: Option<PathBuf>,
    #[arg(long)]
    fidelity: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CoinFlags {
    /// su2, hadamard, grover, fourier or random
    family: Option<String>,
    /// Coin dimension c (ignored for su2)
    dim: Option<usize>,
    /// JSON matrix file instead of a family
    #[arg(long, conflicts_with = "family")]
    matrix: Option<PathBuf>,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    theta: f64,
    #[arg(long, default_value_t = 0.0)]
    phi1: f64,
    #[arg(long, default_value_t = 0.0)]
    phi2: f64,
    /// Seed for the random family
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl CoinFlags {
    fn choice(&self) -> CoinChoice {
        CoinChoice {
            family: self.family.clone(),
            dim: self.dim,
            matrix: self.matrix.clone(),
            theta: self.theta,
            phi1: self.phi1,
            phi2: self.phi2,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug)]
struct CheckCoinCmd {
    #[command(flatten)]
    coin: CoinFlags,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = qwalk_core::linalg::UNITARY_TOL)]
    unitary_tol: f64,
}

#[derive(Args, Debug)]
struct VerifyCmd {
    #[command(flatten)]
    coin: CoinFlags,
    /// Take coin and geometry from a run configuration instead
    #[arg(short, long, conflicts_with_all = ["family", "matrix"])]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    l_max: usize,
    /// Random k points on top of the fixed corner set
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long = "k-seed", default_value_t = 0)]
    k_seed: u64,
    /// Also write the reports as JSON
    #[arg(long)]
    json: Option<PathBuf>,
    /// Negative control: flip the sign of one entry of G
    #[arg(long)]
    corrupt_g: bool,
}

#[derive(Args, Debug)]
struct SweepCmd {
    /// Base run configuration (coin, geometry, initial state)
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Intervention periods l to sweep
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3, 4, 5, 6, 7])]
    l: Vec<usize>,
    /// Horizon of every partial product
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Leave out the walk without interventions
    #[arg(long)]
    no_free: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "QWALK_OUTPUT_DIR", default_value = ".")]
    output_dir: PathBuf,
    #[arg(long, default_value = "polya_sweep.csv")]
    output: PathBuf,
    /// Long-format table of every partial value
    #[arg(long)]
    series: Option<PathBuf>,
}

fn load(path: &Option<PathBuf>) -> anyhow::Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn dispatch(command: Command) -> anyhow::Result<Status> {
    match command {
        Command::Run(cmd) => {
            let mut config = load(&cmd.config)?;
            config.plan = cmd.plan.apply(config.plan)?;
            if let Some(seed) = cmd.seed {
                config.seed = seed;
            }
            config.override_admissibility |= cmd.override_admissibility;
            let paths = RunPaths {
                output_dir: cmd.output_dir,
                distribution: cmd.distribution,
                fidelity: cmd.fidelity,
            };
            commands::run(&config, &paths)
        }
        Command::CheckCoin(cmd) => {
            commands::check_coin(&cmd.coin.choice(), cmd.tol, cmd.unitary_tol)
        }
        Command::Verify(cmd) => {
            let config = cmd.config.as_deref().map(RunConfig::load).transpose()?;
            let args = VerifyArgs {
                config: VerifyConfig {
                    l_max: cmd.l_max,
                    samples: cmd.samples,
                    tol: cmd.tol,
                    seed: cmd.k_seed,
                },
                json: cmd.json,
                corrupt_g: cmd.corrupt_g,
            };
            commands::verify(config.as_ref(), &cmd.coin.choice(), &args)
        }
        Command::SweepPolya(cmd) => {
            let mut config = load(&cmd.config)?;
            if let Some(seed) = cmd.seed {
                config.seed = seed;
            }
            let args = SweepArgs {
                ls: cmd.l,
                steps: cmd.steps,
                include_free: !cmd.no_free,
                summary: cmd.output,
                series: cmd.series,
            };
            commands::sweep_polya(&config, &args, &cmd.output_dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
