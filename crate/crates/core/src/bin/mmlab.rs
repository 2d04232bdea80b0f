use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mmlab::harness::{self, ExperimentConfig, FieldSpec, SpaceSpec, OUT_DIR_ENV};
use mmlab::mmspace::SpaceFile;
use mmlab::{par, Error, GalleryKind};

#[derive(Parser)]
#[command(
    name = "mmlab",
    version,
    about = "Pairwise functionals on discretized metric measure spaces"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a space file.
    Space {
        #[command(subcommand)]
        action: SpaceAction,
    },
    /// Generate a field file on a space file.
    Field {
        #[command(subcommand)]
        action: FieldAction,
    },
    /// Run one experiment and write `<stem>.json` plus its CSV table.
    Run {
        config: PathBuf,
        /// Cross-check against the brute-force oracle (N ≤ 1024).
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        out: OutDir,
    },
    /// Rerun an experiment over increasing sizes and test the last change.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value = "ratio")]
        scalar: String,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Print engine and oracle values side by side without writing files.
    OracleDiff { config: PathBuf },
}

#[derive(Args)]
struct OutDir {
    #[arg(long, env = OUT_DIR_ENV, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SpaceAction {
    /// SPEC is a space object as in experiment configs, e.g.
    /// '{"kind": "grid", "dim": 2, "n": 32}'.
    Gen {
        spec: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum FieldAction {
    Gen {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        shape: GalleryKind,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, short)]
        out: PathBuf,
    },
}

enum Failure {
    Error(Error),
    Sweep,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::UnknownKind { .. } | Error::UnsupportedMetric { .. } => {
            2
        }
        Error::OracleMismatch { .. } => 3,
        _ => 1,
    }
}

fn print_scalars(report: &harness::Report) {
    for (name, value) in &report.scalars {
        match value {
            Some(v) => println!("{name} = {v}"),
            None => println!("{name} = undefined"),
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Space {
            action: SpaceAction::Gen { spec, seed, out },
        } => {
            let spec: SpaceSpec = serde_json::from_str(&spec).map_err(|e| Error::Config(format!("space spec: {e}")))?;
            let space = harness::build_space(&spec, seed)?;
            SpaceFile::from_space(&space).write(&out)?;
            println!("{} points -> {}", space.len(), out.display());
        }
        Command::Field {
            action:
                FieldAction::Gen {
                    space,
                    shape,
                    center,
                    scale,
                    amplitude,
                    out,
                },
        } => {
            let space = SpaceFile::read(&space)?.into_space()?;
            let spec = FieldSpec::Gallery {
                shape,
                center,
                scale,
                amplitude,
            };
            let field = harness::build_field(&space, &spec)?;
            field.write(&out)?;
            println!("{} values -> {}", field.len(), out.display());
        }
        Command::Run { config, oracle, out } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            cfg.oracle |= oracle;
            let output = harness::run_experiment(&cfg, out.out_dir.as_deref())?;
            print_scalars(&output.report);
            println!("report: {}", output.report_path.display());
            if let Some(t) = &output.table_path {
                println!("table: {}", t.display());
            }
        }
        Command::Sweep {
            config,
            sizes,
            scalar,
            tol,
            out,
        } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let result = harness::convergence_sweep(&cfg, &sizes, &scalar, tol)?;
            for (k, row) in result.rows.iter().enumerate() {
                let value = row.value.map_or_else(|| "undefined".to_string(), |v| v.to_string());
                match k.checked_sub(1).and_then(|d| result.deltas[d]) {
                    Some(d) => println!("n = {:>8}  {scalar} = {value}  delta = {d:.3e}", row.n),
                    None => println!("n = {:>8}  {scalar} = {value}", row.n),
                }
            }
            let path = harness::write_sweep(&cfg, &result, out.out_dir.as_deref())?;
            println!("sweep: {}", path.display());
            if !result.passed {
                return Err(Failure::Sweep);
            }
        }
        Command::OracleDiff { config } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            cfg.oracle = true;
            let (report, _) = harness::execute(&cfg)?;
            let oracle = report
                .oracle
                .filter(|o| !o.checks.is_empty())
                .ok_or_else(|| Error::Config(format!("no oracle exists for `{}`", cfg.functional.name())))?;
            println!(
                "{:<16} {:>24} {:>24} {:>10}",
                "quantity", "engine", "oracle", "relative"
            );
            for c in &oracle.checks {
                println!(
                    "{:<16} {:>24e} {:>24e} {:>10.2e}",
                    c.quantity, c.engine, c.oracle, c.relative
                );
            }
            oracle.verdict()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match par::with_threads(cli.threads, || run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Sweep) => {
            eprintln!("error: sweep did not converge within tolerance");
            ExitCode::from(4)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
