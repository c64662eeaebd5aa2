//! Command-line front end. Exit status: 0 when every check passes, 1 when a
//! check fails, 2 on input or evaluation errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use conformal_index::report::{run, Command, Flags};
use conformal_index::scenario::ScenarioSpec;

#[derive(Debug, Parser)]
#[command(name = "conformal-index", version, about = "Fixed-point traces, Todd cocycles and index pairings for conformal crossed products")]
struct Cli {
    /// automorphisms | trace | todd | pair-even | pair-odd | anomaly | dist-check | verify
    command: Command,
    /// Scenario file; `.json` is read as JSON, anything else as TOML.
    scenario: PathBuf,
    /// Quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Maximum adaptive subdivision depth.
    #[arg(long)]
    depth: Option<u32>,
    /// Tensor word-length truncation.
    #[arg(long)]
    trunc: Option<usize>,
    /// Jet order used for fixed-point classification.
    #[arg(long)]
    jet_order: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Include wall-clock timings (makes the report nondeterministic).
    #[arg(long)]
    timings: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> Result<bool, Box<dyn std::error::Error>> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let (spec, raw) = ScenarioSpec::load(&cli.scenario)?;
    let flags = Flags {
        tol: cli.tol,
        depth: cli.depth,
        trunc: cli.trunc,
        jet_order: cli.jet_order,
        seed: cli.seed,
        timings: cli.timings,
    };
    let report = run(cli.command, spec, &raw, &flags)?;
    let text = report.to_json();
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("writing {}: {e}", path.display()))?,
        None => print!("{text}"),
    }
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {}: {:.3e} (bound {:.1e})", c.name, c.max_defect, c.bound);
    }
    Ok(report.pass)
}
