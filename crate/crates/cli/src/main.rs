mod analyze;
mod fieldlab;
mod input;
mod linearize;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use bvb_core::operator::{catalog, catalog_names};
use clap::{ArgGroup, Parser, Subcommand};

use crate::analyze::AnalyzeParams;
use crate::fieldlab::{FieldlabArgs, Scenario};
use crate::input::load_operator;
use crate::report::{emit, render, CliError};

#[derive(Parser)]
#[command(name = "bvb", version, about = "Symbol analysis and grid experiments for linear differential operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ellipticity, C-ellipticity, null-space degree bound and mixing evidence.
    Analyze {
        /// `catalog:<name>` or a path to a JSON spec.
        spec: String,
        /// Space dimension for catalog operators.
        #[arg(long)]
        n: Option<usize>,
        /// Sphere grid resolution for the ellipticity constant.
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        /// Polynomial degree cap for null-space computations.
        #[arg(long, default_value_t = 5)]
        dmax: usize,
        /// Random restarts for the complex witness search.
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lift to an equivalent first-order operator and verify the identity.
    Linearize {
        spec: String,
        #[arg(long)]
        n: Option<usize>,
        /// Where to write the lifted operator spec.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Synthesize a field on [-0.5, 0.5]^n and run the grid diagnostics.
    #[command(group(ArgGroup::new("scenario").required(true).args(["jump", "smooth"])))]
    Fieldlab {
        spec: String,
        #[arg(long)]
        n: Option<usize>,
        /// Planted jump `a:b:nu`, each a comma-separated vector.
        #[arg(long, allow_hyphen_values = true)]
        jump: Option<String>,
        /// Smooth field id (`sine` or `quadratic`).
        #[arg(long)]
        smooth: Option<String>,
        /// Grid spacing; 1/h must be an integer.
        #[arg(long)]
        h: f64,
        /// Strictly decreasing radii, comma-separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        radii: Vec<f64>,
        /// Lateral window radius for the interface density.
        #[arg(long, default_value_t = 0.3)]
        window: f64,
        #[arg(long, default_value_t = 5)]
        dmax: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for CSV profiles and the report.
        #[arg(long)]
        out: PathBuf,
    },
    /// List the built-in operators.
    Catalog,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("BVB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Input(format!("BVB_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Input(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Analyze {
            spec,
            n,
            resolution,
            dmax,
            restarts,
            seed,
            out,
        } => {
            let loaded = load_operator(&spec, n)?;
            let params = AnalyzeParams {
                resolution,
                refine_steps: 200,
                dmax,
                restarts,
                mixing_trials: 100,
                seed,
            };
            let report = analyze::analyze(&loaded.op, loaded.record, params)?;
            emit(&report, out.as_deref())?;
            report.verification_error().map_or(Ok(()), Err)
        }
        Command::Linearize { spec, n, out, seed } => {
            let loaded = load_operator(&spec, n)?;
            let (report, doc) = linearize::run(&loaded.op, loaded.record, out.display().to_string(), seed)?;
            std::fs::write(&out, render(&doc))?;
            emit(&report, None)?;
            report.verification_error().map_or(Ok(()), Err)
        }
        Command::Fieldlab {
            spec,
            n,
            jump,
            smooth,
            h,
            radii,
            window,
            dmax,
            seed,
            out,
        } => {
            let loaded = load_operator(&spec, n)?;
            let scenario = match (jump, smooth) {
                (Some(j), _) => fieldlab::parse_jump(&j)?,
                (None, Some(id)) => Scenario::Smooth { id },
                (None, None) => unreachable!("clap enforces the scenario group"),
            };
            let args = FieldlabArgs {
                scenario,
                h,
                radii,
                window_radius: window,
                dmax,
                seed,
            };
            let report = fieldlab::run(&loaded.op, loaded.record, args, &out)?;
            emit(&report, Some(&out.join("report.json")))?;
            report.verification_error().map_or(Ok(()), Err)
        }
        Command::Catalog => {
            for name in catalog_names() {
                let dims: Vec<String> = (1..=4)
                    .filter_map(|n| catalog(name, n).ok())
                    .map(|op| format!("n={}: k={} dimV={} dimW={}", op.n(), op.order(), op.dim_v(), op.dim_w()))
                    .collect();
                println!("{name:<20} {}", dims.join("; "));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bvb: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
