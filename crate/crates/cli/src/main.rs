use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use billiard_cli::{
    cmd_diagnose, cmd_experiment, cmd_rate, cmd_simulate, cmd_validate_table, exit_code, Diagnostic, StartState,
};
use billiard_core::flow::ParticleState;
use billiard_core::horizon::DEFAULT_CUTOFF;
use clap::{Args, Parser, Subcommand};

/// Two-particle Sinai billiard simulator and first-encounter statistics.
///
/// Exit codes: 0 ok, 1 run failure, 2 infinite horizon, 3 invalid scene,
/// 4 I/O or schema error. Set BILLIARD_LOG (e.g. `info`) for logging.
#[derive(Debug, Parser)]
#[command(name = "billiard", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Debug, Args)]
struct Global {
    /// Master seed; overrides the seed in an experiment config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Largest lattice direction component scanned for corridors.
    #[arg(long, global = true, default_value_t = DEFAULT_CUTOFF)]
    cutoff: u32,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a scene and certify its finite horizon.
    ValidateTable {
        scene: PathBuf,
    },
    /// Evaluate the encounter rate ρ(λ) by quadrature and closed form.
    Rate {
        #[arg(long)]
        lambda: f64,
        /// Scene supplying |D|; |D| = 1 when omitted.
        #[arg(long)]
        scene: Option<PathBuf>,
    },
    /// Dump the flight segments of one orbit as CSV.
    Simulate {
        /// Scene file; the built-in FH-1 table when omitted.
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Flow time.
        #[arg(long, default_value_t = 10.0)]
        time: f64,
        /// Start position and direction; sampled from --seed when omitted.
        #[arg(long, num_args = 3, value_names = ["X", "Y", "ANGLE"], allow_negative_numbers = true)]
        start: Option<Vec<f64>>,
    },
    /// Run an ensemble and write results.json, times.csv, cdf.csv, hazard.csv.
    Experiment {
        config: PathBuf,
    },
    /// Hyperbolicity and mixing diagnostics as JSON reports.
    Diagnose {
        /// Scene file; the built-in FH-1 table when omitted.
        #[arg(long, global = true)]
        scene: Option<PathBuf>,
        #[command(subcommand)]
        kind: DiagnoseKind,
    },
}

#[derive(Debug, Subcommand)]
enum DiagnoseKind {
    /// Unstable-cone invariance along random orbits.
    Cones {
        /// Collisions per sample.
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Cone opening bound on |dη/dξ|.
        #[arg(long, default_value_t = 10.0)]
        c_f: f64,
    },
    /// Transverse expansion over n steps of the time-𝔰 map.
    Expansion {
        #[arg(long, default_value_t = 40)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Itinerary counts on short unstable curves.
    Complexity {
        #[arg(long, default_value_t = 4)]
        n_min: usize,
        #[arg(long, default_value_t = 16)]
        n_max: usize,
        #[arg(long, default_value_t = 20)]
        centers: usize,
        #[arg(long, default_value_t = 1e-6)]
        halfwidth: f64,
        /// Points per curve.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Distortion log-ratios on homogeneous unstable curves.
    Distortion {
        #[arg(long, default_value_t = 100)]
        curves: usize,
        #[arg(long, default_value_t = 1e-4)]
        halfwidth: f64,
        #[arg(long, default_value_t = 4)]
        n_min: usize,
        #[arg(long, default_value_t = 12)]
        n_max: usize,
    },
    /// Velocity autocorrelation against lag.
    MixingCurve {
        #[arg(long, default_value_t = 5.0)]
        max_lag: f64,
        #[arg(long, default_value_t = 51)]
        points: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

const DEFAULT_SEED: u64 = 1;

fn run(cli: Cli) -> Result<u8> {
    let g = cli.global;
    let out = g.out.as_deref();
    let seed = g.seed.unwrap_or(DEFAULT_SEED);
    match cli.command {
        Command::ValidateTable { scene } => cmd_validate_table(&scene, g.cutoff, out),
        Command::Rate { lambda, scene } => cmd_rate(lambda, scene.as_deref(), out),
        Command::Simulate { scene, time, start } => {
            let start = match start.as_deref() {
                Some(&[x, y, angle]) => StartState::Given(ParticleState::new(x, y, angle)),
                _ => StartState::Sampled { seed },
            };
            cmd_simulate(scene.as_deref(), start, time, g.cutoff, out)
        }
        Command::Experiment { config } => {
            let out = g.out.unwrap_or_else(|| PathBuf::from("billiard-out"));
            cmd_experiment(&config, &out, g.workers, g.seed, g.cutoff)
        }
        Command::Diagnose { scene, kind } => {
            let kind = match kind {
                DiagnoseKind::Cones { n, samples, c_f } => Diagnostic::Cones { samples, n, c_f },
                DiagnoseKind::Expansion { n, samples } => Diagnostic::Expansion { samples, n },
                DiagnoseKind::Complexity { n_min, n_max, centers, halfwidth, samples } => {
                    Diagnostic::Complexity { centers, n_min, n_max, halfwidth, samples }
                }
                DiagnoseKind::Distortion { curves, halfwidth, n_min, n_max } => {
                    Diagnostic::Distortion { curves, halfwidth, n_min, n_max }
                }
                DiagnoseKind::MixingCurve { max_lag, points, samples } => {
                    Diagnostic::MixingCurve { max_lag, points, samples }
                }
            };
            cmd_diagnose(&kind, scene.as_deref(), seed, g.workers, g.cutoff, out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("BILLIARD_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are schema errors; 2 is reserved for the horizon verdict
            return ExitCode::from(if e.use_stderr() { billiard_cli::exit::IO_SCHEMA } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
