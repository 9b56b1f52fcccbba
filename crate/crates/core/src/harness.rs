//! Batch benchmark runner: many problems, several methods, one table.
//!
//! Problems run in parallel (input order is preserved in the output);
//! the methods for one problem run sequentially. Per-iteration traces
//! are rendered to CSV with a fixed 9-column schema, formatted so that
//! repeated runs of the same build produce byte-identical files.

use crate::heuristics::{HeuristicMode, RefactorParam};
use crate::ipm::{solve, Method, RunReport, SolveStatus, SolverConfig, TraceRecord};
use crate::kkt::KktFormulation;
use crate::problem::ProblemClass;
use crate::qps::load_problem;
use rayon::prelude::*;
use std::io;
use std::path::{Path, PathBuf};

/// A method selected by its command-line label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MethodSpec {
    pub method: Method,
}

impl MethodSpec {
    /// Accepts "newton", "mn-r<rank>", "mn-r<rank>-h1", "mn-r<rank>-h2".
    pub fn parse(s: &str) -> Result<MethodSpec, String> {
        if s == "newton" {
            return Ok(MethodSpec {
                method: Method::Newton,
            });
        }
        let body = s.strip_prefix("mn-r").ok_or_else(|| {
            format!("unknown method `{s}` (expected newton or mn-r<rank>[-h1|-h2])")
        })?;
        let (rank_str, heuristic) = if let Some(r) = body.strip_suffix("-h1") {
            (r, HeuristicMode::H1)
        } else if let Some(r) = body.strip_suffix("-h2") {
            (r, HeuristicMode::H2)
        } else {
            (body, HeuristicMode::None)
        };
        let rank: usize = rank_str
            .parse()
            .map_err(|_| format!("bad rank in method `{s}`"))?;
        Ok(MethodSpec {
            method: Method::ModifiedNewton { rank, heuristic },
        })
    }

    pub fn label(&self) -> String {
        self.method.label()
    }
}

/// newton, mn-r2, mn-r2-h1, mn-r2-h2.
pub fn default_methods() -> Vec<MethodSpec> {
    ["newton", "mn-r2", "mn-r2-h1", "mn-r2-h2"]
        .iter()
        .map(|s| MethodSpec::parse(s).expect("builtin labels parse"))
        .collect()
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub mu0: f64,
    pub sigma: f64,
    pub tol: Option<f64>,
    pub formulation: KktFormulation,
    pub refactor: RefactorParam,
    pub methods: Vec<MethodSpec>,
    /// Worker threads for the problem sweep; None uses the rayon default.
    pub jobs: Option<usize>,
    /// Skip problems whose full system dimension exceeds this.
    pub dim_cap: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            mu0: 1.0,
            sigma: 0.1,
            tol: None,
            formulation: KktFormulation::Unreduced,
            refactor: RefactorParam::Auto,
            methods: default_methods(),
            jobs: None,
            dim_cap: None,
        }
    }
}

#[derive(Debug)]
pub struct MethodOutcome {
    pub label: String,
    /// None when the run could not start (for example the condensed
    /// formulation refusing the problem size).
    pub report: Option<RunReport>,
}

#[derive(Debug)]
pub struct ProblemOutcome {
    /// File stem; used in the table and trace file names.
    pub name: String,
    pub n: usize,
    pub m_eq: usize,
    pub m_in: usize,
    pub class: Option<ProblemClass>,
    /// Reason the problem was not run at all.
    pub skipped: Option<String>,
    pub methods: Vec<MethodOutcome>,
}

#[derive(Debug)]
pub struct SuiteOutcome {
    pub problems: Vec<ProblemOutcome>,
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

fn run_problem(path: &Path, config: &BenchConfig) -> ProblemOutcome {
    let name = stem_of(path);
    let p = match load_problem(path) {
        Ok(p) => p,
        Err(e) => {
            return ProblemOutcome {
                name,
                n: 0,
                m_eq: 0,
                m_in: 0,
                class: None,
                skipped: Some(format!("load failed: {e}")),
                methods: Vec::new(),
            };
        }
    };
    if let Some(cap) = config.dim_cap {
        if p.kkt_dim() > cap {
            return ProblemOutcome {
                name,
                n: p.n(),
                m_eq: p.m_eq(),
                m_in: p.m_in(),
                class: Some(p.classify()),
                skipped: Some(format!("dimension {} above cap {cap}", p.kkt_dim())),
                methods: Vec::new(),
            };
        }
    }
    let methods = config
        .methods
        .iter()
        .map(|spec| {
            let solver_config = SolverConfig {
                mu0: config.mu0,
                sigma: config.sigma,
                tol: config.tol,
                method: spec.method,
                formulation: config.formulation,
                refactor: config.refactor,
                ..SolverConfig::default()
            };
            MethodOutcome {
                label: spec.label(),
                report: solve(&p, &solver_config).ok(),
            }
        })
        .collect();
    ProblemOutcome {
        name,
        n: p.n(),
        m_eq: p.m_eq(),
        m_in: p.m_in(),
        class: Some(p.classify()),
        skipped: None,
        methods,
    }
}

pub fn run_suite(paths: &[PathBuf], config: &BenchConfig) -> SuiteOutcome {
    let sweep = || SuiteOutcome {
        problems: paths.par_iter().map(|p| run_problem(p, config)).collect(),
    };
    match config.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .expect("worker pool")
            .install(sweep),
        None => sweep(),
    }
}

/// Results table. Newton methods contribute one cell (iterations); the
/// others two (counted factorizations, then iterations). Runs that did
/// not converge show "-"; skipped problems carry their reason.
pub fn render_table(outcome: &SuiteOutcome, methods: &[MethodSpec]) -> String {
    let mut header: Vec<String> = vec!["problem".into(), "size".into(), "class".into()];
    for m in methods {
        match m.method {
            Method::Newton => header.push(format!("{}-it", m.label())),
            Method::ModifiedNewton { .. } => {
                header.push(format!("{}-f", m.label()));
                header.push(format!("{}-it", m.label()));
            }
        }
    }

    let mut rows: Vec<Vec<String>> = vec![header];
    for p in &outcome.problems {
        let mut row = vec![
            p.name.clone(),
            if p.skipped.is_some() && p.class.is_none() {
                "-".into()
            } else {
                format!("{}/{}/{}", p.n, p.m_eq, p.m_in)
            },
            p.class.map_or("-".into(), |c| c.label().to_string()),
        ];
        if let Some(reason) = &p.skipped {
            row.push(format!("skipped: {reason}"));
            rows.push(row);
            continue;
        }
        for m in &p.methods {
            let converged = m
                .report
                .as_ref()
                .filter(|r| r.status == SolveStatus::Converged);
            let is_newton = matches!(
                methods.iter().find(|s| s.label() == m.label),
                Some(MethodSpec {
                    method: Method::Newton
                })
            );
            match converged {
                Some(r) => {
                    if is_newton {
                        row.push(r.iterations.to_string());
                    } else {
                        row.push(r.factorizations.to_string());
                        row.push(r.iterations.to_string());
                    }
                }
                None => {
                    if is_newton {
                        row.push("-".into());
                    } else {
                        row.push("-".into());
                        row.push("-".into());
                    }
                }
            }
        }
        rows.push(row);
    }

    let cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut widths = vec![0usize; cols];
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for row in &rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            if i + 1 < row.len() {
                for _ in cell.len()..widths[i] {
                    line.push(' ');
                }
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Fixed 9-column per-iteration trace. Floats use exponent notation with
/// the shortest round-trip mantissa, so equal runs give equal bytes.
pub fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut out =
        String::from("k,mu,merit_mu,merit_zero,alpha_p,alpha_d,error_norm,eta,refactorized\n");
    for t in trace {
        out.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
            t.k,
            t.mu,
            t.merit_mu,
            t.merit_zero,
            t.alpha_p,
            t.alpha_d,
            t.error_norm,
            t.eta,
            u8::from(t.refactorized),
        ));
    }
    out
}

/// Write one trace file per finished (problem, method) pair into `dir`,
/// named `<problem>-<method>.csv`. Returns the paths written.
pub fn write_traces(outcome: &SuiteOutcome, dir: &Path) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for p in &outcome.problems {
        for m in &p.methods {
            if let Some(report) = &m.report {
                let path = dir.join(format!("{}-{}.csv", p.name, m.label));
                std::fs::write(&path, trace_csv(&report.trace))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
