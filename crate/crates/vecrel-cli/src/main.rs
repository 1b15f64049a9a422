//! Command-line interface: graph inspection, configurations, boundary maps,
//! dynamics and the invariant suite. Every command prints deterministic
//! JSON to standard output or to `--out`; failures print a JSON error
//! `{code, message, context}` to standard error and exit with 2
//! (validation), 3 (degenerate input) or 4 (internal check).

mod commands;
mod error;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::{Method, System};
use error::CliError;

#[derive(Parser)]
#[command(name = "vecrel", version, about = "Exact vector-relation configurations on planar bipartite graphs")]
struct Cli {
    /// Seed for every random choice; falls back to VECREL_SEED.
    #[arg(long, global = true, env = "VECREL_SEED", default_value_t = 1)]
    seed: u64,
    /// Write the JSON result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a graph file and summarize it.
    Validate { graph: PathBuf },
    /// List faces with their clockwise walks.
    Faces { graph: PathBuf },
    /// List zigzag paths and the trip permutation.
    Zigzags { graph: PathBuf },
    /// The positroid of a plabic graph.
    Positroid { graph: PathBuf },
    /// The Grassmann necklace and reverse necklace of a plabic graph.
    Necklace { graph: PathBuf },
    /// Kasteleyn signs of a plabic graph.
    Signs { graph: PathBuf },
    /// Graphviz rendering of a graph.
    Dot { graph: PathBuf },
    /// Print a built-in example graph (gr36, gr24 or schubert24).
    Fixture { name: String },
    /// Local moves.
    Moves {
        #[command(subcommand)]
        action: MovesAction,
    },
    /// Weights of the internal faces of a configuration.
    Faceweights { config: PathBuf },
    /// Boundary point of a configuration.
    Restrict { config: PathBuf },
    /// Boundary measurement of an edge-weighted plabic graph.
    Measure {
        weights: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Matchings)]
        method: Method,
    },
    /// Configuration determined by a boundary point.
    Reconstruct {
        point: PathBuf,
        #[arg(long)]
        graph: PathBuf,
    },
    /// Positive edge weights realising a boundary point.
    RecoverWeights {
        point: PathBuf,
        #[arg(long)]
        graph: PathBuf,
    },
    /// Run a dynamical system through its move sequence. For the pentagram
    /// map, STEPS is the number of generations; for the lattice systems it
    /// is the number of seeded random instances.
    Dynamics {
        #[arg(value_enum)]
        system: System,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        /// Pentagram only: polygon file with `points` as affine or
        /// homogeneous rational coordinates (default: a rational pentagon).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Pentagram only: SVG output path (default: `--out` with extension
        /// `.svg`, if given).
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run the invariant suite.
    Check {
        #[command(subcommand)]
        action: CheckAction,
    },
}

#[derive(Subcommand)]
enum MovesAction {
    /// Apply a move script to a configuration.
    Apply {
        script: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum CheckAction {
    /// Every check; exits 4 if any fails.
    All {
        /// One tenth of the full sample counts.
        #[arg(long)]
        quick: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Faces { .. } => "faces",
            Command::Zigzags { .. } => "zigzags",
            Command::Positroid { .. } => "positroid",
            Command::Necklace { .. } => "necklace",
            Command::Signs { .. } => "signs",
            Command::Dot { .. } => "dot",
            Command::Fixture { .. } => "fixture",
            Command::Moves { .. } => "moves apply",
            Command::Faceweights { .. } => "faceweights",
            Command::Restrict { .. } => "restrict",
            Command::Measure { .. } => "measure",
            Command::Reconstruct { .. } => "reconstruct",
            Command::RecoverWeights { .. } => "recover-weights",
            Command::Dynamics { .. } => "dynamics",
            Command::Check { .. } => "check all",
        }
    }
}

fn write_output(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::from(e).in_file(&p.display().to_string())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let out = cli.out.as_deref();
    let text = match &cli.command {
        Command::Validate { graph } => json(&commands::validate(graph)?)?,
        Command::Faces { graph } => json(&commands::faces(graph)?)?,
        Command::Zigzags { graph } => json(&commands::zigzags(graph)?)?,
        Command::Positroid { graph } => json(&commands::positroid_cmd(graph)?)?,
        Command::Necklace { graph } => json(&commands::necklace(graph)?)?,
        Command::Signs { graph } => json(&commands::signs(graph)?)?,
        Command::Dot { graph } => commands::load_graph(graph)?.to_dot(),
        Command::Fixture { name } => json(&commands::fixture(name)?)?,
        Command::Moves { action: MovesAction::Apply { script, config } } => json(&commands::moves_apply(script, config)?)?,
        Command::Faceweights { config } => json(&commands::faceweights(config)?)?,
        Command::Restrict { config } => json(&commands::restrict(config)?)?,
        Command::Measure { weights, method } => json(&commands::measure(weights, *method)?)?,
        Command::Reconstruct { point, graph } => json(&commands::reconstruct(point, graph)?)?,
        Command::RecoverWeights { point, graph } => json(&commands::recover_weights(point, graph)?)?,
        Command::Dynamics { system: System::Pentagram, steps, input, svg } => {
            let polygon = match input {
                Some(p) => commands::load_polygon(p)?,
                None => commands::default_pentagon(),
            };
            let (report, generations) = commands::pentagram(&polygon, *steps)?;
            let svg_path = svg.clone().or_else(|| out.map(|p| p.with_extension("svg")));
            if let Some(p) = svg_path {
                write_output(&svg::trajectory_svg(&generations), Some(&p))?;
            }
            json(&report)?
        }
        Command::Dynamics { system, steps, .. } => {
            eprintln!("seed: {}", cli.seed);
            json(&commands::lattice_instances(*system, *steps, cli.seed)?)?
        }
        Command::Check { action: CheckAction::All { quick } } => {
            eprintln!("seed: {}", cli.seed);
            let report = commands::check_all(cli.seed, *quick);
            write_output(&json(&report)?, out)?;
            if !report.passed() {
                return Err(CliError::internal(format!("failed checks: {}", report.failures().join("; "))));
            }
            return Ok(());
        }
    };
    write_output(&text, out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::to_string(&e.report(cli.command.name())).unwrap_or_else(|_| e.message.clone());
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
