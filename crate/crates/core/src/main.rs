use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use shapelab::cli::{self, *};
use shapelab::shapeopt::{Functional, VolumeMode};
use shapelab::surgery::Direction;
use shapelab::ShapeError;

#[derive(Parser)]
#[command(name = "shapelab", version, about = "Shape functionals on voxel domains")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Cells per axis (each command has its own default).
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Linear solver tolerance.
    #[arg(long, global = true, default_value_t = 1e-8, allow_negative_numbers = true)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Descent iteration cap.
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum FunctionalArg {
    F,
    FTilde,
    G,
}

#[derive(Clone, Copy, ValueEnum)]
enum VolumeArg {
    Projection,
    Penalty,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every functional on a domain or star document.
    Eval {
        file: PathBuf,
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        eps: f64,
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        /// Container radius; unbounded when omitted.
        #[arg(long)]
        radius: Option<f64>,
        /// Skip the eigenvalue solve.
        #[arg(long)]
        no_eigen: bool,
    },
    /// Check the inequalities on a corpus directory.
    Verify {
        dir: PathBuf,
        /// Comma-separated subset of sv, fk, riesz, kj.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<Check>,
    },
    /// Shape descent over star-shaped boundaries.
    Optimize {
        /// Start from one Fourier mode, e.g. a2=0.15.
        #[arg(long, conflicts_with_all = ["start", "amplitude"])]
        mode: Option<String>,
        /// Start from a star document.
        #[arg(long, conflicts_with = "amplitude")]
        start: Option<PathBuf>,
        /// Start from a seeded perturbation of this mode-2 amplitude.
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long, value_enum, default_value_t = FunctionalArg::F)]
        functional: FunctionalArg,
        #[arg(long, value_enum, default_value_t = VolumeArg::Projection)]
        volume: VolumeArg,
        #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
        eps: f64,
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        /// Penalty slope for `--functional g`; defaults to -E(B)/4.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 6)]
        max_mode: usize,
    },
    /// Descend from perturbed starts over a grid of ε and locate the regime change.
    Sweep {
        #[arg(long, value_delimiter = ',', num_args = 0.., allow_negative_numbers = true,
              default_values_t = [1e-3, 1e-2, 0.05, 0.2, 1.0])]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0.15)]
        amplitude: f64,
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.4)]
        delta: f64,
        #[arg(long, default_value_t = 6)]
        max_mode: usize,
    },
    /// Ball versus necklace bounds, or the ε where the necklace starts to win.
    Necklace {
        #[arg(long, default_value_t = 0.4)]
        delta: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        eps: f64,
        #[arg(long)]
        eps_scan: bool,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
    },
    /// Cut long tails off a domain, one direction at a time.
    Surgery {
        file: PathBuf,
        #[arg(long, default_value_t = shapelab::surgery::DEFAULT_C4)]
        c4: f64,
        /// Comma-separated, e.g. -e1,+e2.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        directions: Vec<Direction>,
        #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
        eps: f64,
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        /// Skip the C4 sensitivity sweep.
        #[arg(long)]
        no_sensitivity: bool,
    },
    /// Write the seeded star corpus and its manifest into --out.
    GenCorpus {
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        #[arg(long, default_value_t = 2.6)]
        side: f64,
    },
}

fn run(cli: Cli) -> Result<Outcome, ShapeError> {
    let g = cli.global;
    let cfg = RunConfig {
        grid: g.grid,
        tol: g.tol,
        seed: g.seed,
        out: g.out,
        threads: g.threads,
        max_iter: g.max_iter,
        format: match g.format {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        },
    };
    cfg.validate()?;
    cli::init_threads(cfg.threads);
    Ok(match cli.command {
        Command::Eval { file, alpha, eps, eta, radius, no_eigen } => {
            let args = EvalArgs {
                alpha,
                epsilon: eps,
                eta,
                container_radius: radius.unwrap_or(f64::INFINITY),
                eigen: !no_eigen,
            };
            cmd_eval(&file, &args, &cfg)?.1
        }
        Command::Verify { dir, checks } => cmd_verify(&dir, &checks, &cfg)?.1,
        Command::Optimize { mode, start, amplitude, functional, volume, eps, alpha, eta, max_mode } => {
            let start = match (mode, start, amplitude) {
                (Some(m), _, _) => parse_mode_spec(&m)?,
                (_, Some(p), _) => StartShape::File(p),
                (_, _, Some(a)) => StartShape::Seeded { amplitude: a },
                _ => OptimizeArgs::default().start,
            };
            let args = OptimizeArgs {
                start,
                functional: match functional {
                    FunctionalArg::F => Functional::F,
                    FunctionalArg::FTilde => Functional::FTilde,
                    FunctionalArg::G => Functional::G,
                },
                volume: match volume {
                    VolumeArg::Projection => VolumeMode::Projection,
                    VolumeArg::Penalty => VolumeMode::Penalty,
                },
                epsilon: eps,
                alpha,
                eta: eta.unwrap_or(OptimizeArgs::default().eta),
                max_mode,
            };
            cmd_optimize(&args, &cfg)?.1
        }
        Command::Sweep { eps, runs, amplitude, alpha, delta, max_mode } => {
            let args = SweepArgs {
                epsilons: eps,
                runs,
                amplitude,
                alpha,
                delta,
                max_mode,
                ..SweepArgs::default()
            };
            cmd_sweep(&args, &cfg)?.1
        }
        Command::Necklace { delta, eps, eps_scan, dim, alpha } => {
            let args = NecklaceArgs {
                delta,
                epsilon: eps,
                scan: eps_scan,
                dim,
                alpha,
            };
            cmd_necklace(&args, &cfg)?.1
        }
        Command::Surgery { file, c4, directions, eps, alpha, no_sensitivity } => {
            let args = SurgeryArgs {
                c4,
                directions: (!directions.is_empty()).then_some(directions),
                epsilon: eps,
                alpha,
                sensitivity: !no_sensitivity,
            };
            cmd_surgery(&file, &args, &cfg)?.1
        }
        Command::GenCorpus { count, alpha, side } => cmd_gen_corpus(&CorpusArgs { count, alpha, side }, &cfg)?.1,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if !outcome.checks_ok {
                eprintln!("error: one or more checks failed");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
