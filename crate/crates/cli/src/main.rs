use clap::{Args, Parser, Subcommand};
use oscillate_cli::{run_file, Command, RunOptions, EXIT_CONFIG, EXIT_OK};
use std::path::PathBuf;
use std::process::ExitCode;

/// Zero, oscillation and compactness criteria for radial Sturm-Liouville problems.
#[derive(Parser)]
#[command(name = "oscillate", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the Jacobi or radial equation and write the trajectory.
    Solve(Common),
    /// Run the configured criterion checks.
    Check(Common),
    /// Tabulate criterion verdicts over a parameter family.
    Sweep(Common),
    /// Rayleigh quotients, index evidence and spectral verdicts.
    Spectral(Common),
    /// Derived profiles and conjugate radii of model manifolds.
    Geometry(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Numerical tolerance.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    /// Default integration horizon.
    #[arg(long, value_name = "X")]
    horizon: Option<f64>,
    /// Worker threads.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { EXIT_OK as u8 });
        }
    };
    let (command, args) = match cli.command {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Check(a) => (Command::Check, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Spectral(a) => (Command::Spectral, a),
        Cmd::Geometry(a) => (Command::Geometry, a),
    };
    let opts = RunOptions { command: Some(command), out_dir: args.out, tol: args.tol, horizon: args.horizon, jobs: args.jobs };
    match run_file(&args.config, &opts) {
        Ok(summary) => {
            for path in &summary.artifacts {
                println!("wrote {}", path.display());
            }
            for f in &summary.failures {
                eprintln!("{} ({}): {}", f.section, f.criterion, f.error);
            }
            let code = summary.exit_code();
            if code != EXIT_OK {
                eprintln!("finished with {} checker failure(s)", summary.failures.len());
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
