use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use stlopt::app::{self, InitKind, Method, RunConfig};
use stlopt::checks::{self, CheckConfig};
use stlopt::nlp::{Encoding, SolverOptions};
use stlopt::reform::reformulate;
use stlopt::scenario::{builtin_names, builtin_scenarios};
use stlopt::tree::TreeOptions;

#[derive(Parser)]
#[command(name = "stlopt", version, about = "Trajectory optimization under STL specifications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario with the exact encoding, the smooth baseline, or both.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Initial trajectory: reference, random or zero.
        #[arg(long, default_value = "reference")]
        init: InitKind,
        /// Print the JSON report to stdout.
        #[arg(long)]
        json: bool,
    },
    /// Solve from several random initial guesses and summarize per method.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Number of seeds, starting at --seed.
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long, default_value = "random")]
        init: InitKind,
    },
    /// Run the randomized property suites.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the formula, its robustness tree and the reformulated constraints.
    DumpTree {
        #[arg(long, default_value = "two-target")]
        scenario: String,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Print the variables and constraints of the assembled program.
    DumpNlp {
        #[arg(long, default_value = "two-target")]
        scenario: String,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value = "exact")]
        method: Method,
        #[arg(long, default_value_t = app::DEFAULT_K)]
        k: f64,
    },
}

#[derive(Args)]
struct Common {
    /// Built-in scenario name or scenario JSON file.
    #[arg(long, default_value = "two-target")]
    scenario: String,
    #[arg(long, default_value = "both")]
    method: Method,
    /// Smooth-baseline sharpness; searched over a grid when omitted.
    #[arg(long)]
    k: Option<f64>,
    /// Override the scenario horizon.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for CSV and JSON results.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    kkt_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    feas_tol: f64,
    #[arg(long, default_value_t = 50)]
    max_outer: usize,
    /// Wall-clock limit per solve, in seconds.
    #[arg(long, default_value_t = 600.0)]
    timeout: f64,
    /// Standard deviation of random initial guesses.
    #[arg(long, default_value_t = 1.0)]
    init_scale: f64,
    /// Log every outer iteration to stderr.
    #[arg(long)]
    verbose: bool,
}

impl Common {
    fn config(&self, init: InitKind) -> RunConfig {
        RunConfig {
            scenario: self.scenario.clone(),
            method: self.method,
            k: self.k,
            horizon: self.horizon,
            seed: self.seed,
            init,
            init_scale: self.init_scale,
            solver: SolverOptions {
                kkt_tol: self.kkt_tol,
                feas_tol: self.feas_tol,
                max_outer: self.max_outer,
                time_limit: self.timeout,
                verbose: self.verbose,
                ..SolverOptions::default()
            },
            out: self.out.clone(),
        }
    }
}

/// Exit code 2 for a scenario that is neither built in nor an existing file.
fn scenario_exists(source: &str) -> bool {
    builtin_names().contains(&source) || Path::new(source).is_file()
}

fn scenario_of(cmd: &Command) -> Option<&str> {
    match cmd {
        Command::Solve { common, .. } | Command::Compare { common, .. } => Some(&common.scenario),
        Command::DumpTree { scenario, .. } | Command::DumpNlp { scenario, .. } => Some(scenario),
        Command::Check { .. } => None,
    }
}

/// Writes long listings to stdout; a closed pipe (e.g. `| head`) is not an
/// error.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn run(cmd: Command) -> anyhow::Result<ExitCode> {
    match cmd {
        Command::Solve { common, init, json } => {
            let report = app::cmd_solve(&common.config(init))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("{} (T = {})", report.scenario, report.horizon);
                for r in &report.results {
                    let k = r.k.map_or(String::new(), |k| format!(" k={k}"));
                    println!(
                        "{}{k}: {} objective {:.6} robustness {:.6} violation {:.1e} time {:.2}s",
                        r.method,
                        r.status.as_str(),
                        r.objective,
                        r.robustness,
                        r.max_violation,
                        r.solve_time
                    );
                }
            }
        }
        Command::Compare { common, seeds, init } => {
            let summary = app::cmd_compare(&common.config(init), seeds)?;
            for r in &summary.rows {
                println!(
                    "seed {:>4} {:<14} {:<10} objective {:>10.4} robustness {:>8.4} time {:.2}s",
                    r.seed,
                    r.method.as_str(),
                    r.status.as_str(),
                    r.objective,
                    r.robustness,
                    r.solve_time
                );
            }
            print!("{}", summary.table());
        }
        Command::Check { seed } => {
            let cfg = CheckConfig {
                seed,
                ..CheckConfig::default()
            };
            let results = checks::run_all(&cfg, &builtin_scenarios());
            for r in &results {
                println!("{r}");
            }
            if results.iter().any(|r| !r.passed) {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::DumpTree { scenario, horizon } => {
            let s = app::load_scenario(&scenario, horizon)?;
            let tree = s.tree(TreeOptions::default())?;
            emit(&format!(
                "formula: {}\nnodes {} leaves {} depth {}\n{}constraints:\n{}",
                s.formula,
                tree.node_count(),
                tree.leaf_count(),
                tree.depth(),
                tree.dump(),
                reformulate(&tree).dump()
            ));
        }
        Command::DumpNlp {
            scenario,
            horizon,
            method,
            k,
        } => {
            let s = app::load_scenario(&scenario, horizon)?;
            let tree = s.tree(TreeOptions::default())?;
            let p = match method {
                Method::Exact => {
                    let r = reformulate(&tree);
                    s.assemble(Encoding::Exact(&r))?
                }
                Method::SmoothApprox => s.assemble(Encoding::Smooth { tree: &tree, k })?,
                Method::Both => anyhow::bail!("dump-nlp needs --method exact or smooth-approx"),
            };
            emit(&p.dump());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(source) = scenario_of(&cli.command) {
        if !scenario_exists(source) {
            eprintln!("error: scenario `{source}` is not a built-in name or an existing file");
            return ExitCode::from(2);
        }
    }
    match run(cli.command).context("stlopt failed") {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
