//! Command-line front end: benchmark sweeps over QPS files and a quick
//! problem inspector.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mniqp::harness::{default_methods, render_table, run_suite, write_traces, MethodSpec};
use mniqp::heuristics::{HeuristicMode, RefactorParam};
use mniqp::ipm::Method;
use mniqp::kkt::KktFormulation;
use mniqp::qps::parse_qps_file;
use mniqp::{preprocess, BenchConfig};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "mniqp", version, about = "Convex QP benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve QPS files with one or more methods and print a results table
    Run(RunArgs),
    /// Parse QPS files and report their shape after preprocessing
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodKind {
    Newton,
    Mn,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeuristicArg {
    None,
    H1,
    H2,
}

impl From<HeuristicArg> for HeuristicMode {
    fn from(h: HeuristicArg) -> Self {
        match h {
            HeuristicArg::None => HeuristicMode::None,
            HeuristicArg::H1 => HeuristicMode::H1,
            HeuristicArg::H2 => HeuristicMode::H2,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulationArg {
    Unreduced,
    Reduced,
    Condensed,
}

impl From<FormulationArg> for KktFormulation {
    fn from(f: FormulationArg) -> Self {
        match f {
            FormulationArg::Unreduced => KktFormulation::Unreduced,
            FormulationArg::Reduced => KktFormulation::Reduced,
            FormulationArg::Condensed => KktFormulation::Condensed,
        }
    }
}

fn parse_refactor(s: &str) -> Result<RefactorParam, String> {
    match s {
        "auto" => Ok(RefactorParam::Auto),
        "never" => Ok(RefactorParam::Never),
        other => other
            .parse::<usize>()
            .map(RefactorParam::Fixed)
            .map_err(|_| format!("expected auto, never, or a positive integer, got `{other}`")),
    }
}

#[derive(Args)]
struct RunArgs {
    /// QPS problem files
    #[arg(required = true)]
    files: Vec<PathBuf>,

    /// Initial barrier parameter
    #[arg(long, default_value_t = 1.0)]
    mu0: f64,

    /// Barrier reduction factor per level
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,

    /// Convergence tolerance on the unperturbed residual
    /// (default depends on problem class)
    #[arg(long)]
    tol: Option<f64>,

    /// Run a single method instead of the --methods list
    #[arg(long, value_enum)]
    method: Option<MethodKind>,

    /// Refresh rank for --method mn
    #[arg(long, default_value_t = 2)]
    rank: usize,

    /// Refresh-set substitution heuristic for --method mn
    #[arg(long, value_enum, default_value = "none")]
    heuristic: HeuristicArg,

    /// Newton system formulation
    #[arg(long, value_enum, default_value = "unreduced")]
    formulation: FormulationArg,

    /// Refactorization interval: auto, never, or a positive integer
    #[arg(long, value_parser = parse_refactor, default_value = "auto")]
    l: RefactorParam,

    /// Comma-separated method labels for the benchmark table
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "newton,mn-r2,mn-r2-h1,mn-r2-h2"
    )]
    methods: Vec<String>,

    /// Also write the table to this file
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write one per-iteration CSV per (problem, method) into this directory
    #[arg(long)]
    trace_dir: Option<PathBuf>,

    /// Worker threads for the problem sweep
    #[arg(long)]
    jobs: Option<usize>,

    /// Skip problems whose full system dimension exceeds this
    #[arg(long)]
    dim_cap: Option<usize>,
}

#[derive(Args)]
struct InspectArgs {
    /// QPS problem files
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

fn run(args: RunArgs) -> Result<()> {
    let methods = match args.method {
        Some(MethodKind::Newton) => vec![MethodSpec {
            method: Method::Newton,
        }],
        Some(MethodKind::Mn) => {
            if args.rank == 0 {
                bail!("--rank must be at least 1 for --method mn");
            }
            vec![MethodSpec {
                method: Method::ModifiedNewton {
                    rank: args.rank,
                    heuristic: args.heuristic.into(),
                },
            }]
        }
        None => {
            if args.methods.is_empty() {
                default_methods()
            } else {
                args.methods
                    .iter()
                    .map(|s| MethodSpec::parse(s).map_err(anyhow::Error::msg))
                    .collect::<Result<Vec<_>>>()?
            }
        }
    };

    let config = BenchConfig {
        mu0: args.mu0,
        sigma: args.sigma,
        tol: args.tol,
        formulation: args.formulation.into(),
        refactor: args.l,
        methods,
        jobs: args.jobs,
        dim_cap: args.dim_cap,
    };
    let outcome = run_suite(&args.files, &config);
    let table = render_table(&outcome, &config.methods);
    print!("{table}");
    if let Some(path) = &args.out {
        std::fs::write(path, &table)
            .with_context(|| format!("writing table to {}", path.display()))?;
    }
    if let Some(dir) = &args.trace_dir {
        let written = write_traces(&outcome, dir)
            .with_context(|| format!("writing traces to {}", dir.display()))?;
        eprintln!("wrote {} trace files to {}", written.len(), dir.display());
    }
    Ok(())
}

fn inspect(args: InspectArgs) -> Result<()> {
    for path in &args.files {
        let raw = match parse_qps_file(path) {
            Ok(raw) => raw,
            Err(e) => {
                println!("{}: parse failed: {e}", path.display());
                continue;
            }
        };
        let (n_eq, n_le, n_ge) = raw
            .rows
            .iter()
            .fold((0, 0, 0), |(e, l, g), r| match r.kind {
                mniqp::qps::RowKind::Eq => (e + 1, l, g),
                mniqp::qps::RowKind::Le => (e, l + 1, g),
                mniqp::qps::RowKind::Ge => (e, l, g + 1),
            });
        print!(
            "{}: {} | rows {} (E {n_eq}, L {n_le}, G {n_ge}), vars {}, quad nnz {}",
            path.display(),
            raw.name,
            raw.rows.len(),
            raw.vars.len(),
            raw.quad.len(),
        );
        match preprocess(&raw) {
            Ok(p) => {
                println!(
                    " | standard form n {} m_eq {} m_in {} dim {} class {} tol {:e}",
                    p.n(),
                    p.m_eq(),
                    p.m_in(),
                    p.kkt_dim(),
                    p.classify().label(),
                    p.classify().default_tolerance(),
                );
            }
            Err(e) => println!(" | preprocessing failed: {e}"),
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Inspect(args) => inspect(args),
    }
}
