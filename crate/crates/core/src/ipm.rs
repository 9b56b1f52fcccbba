//! The primal-dual interior-point loop.
//!
//! One global iteration counter k runs across all barrier levels. The
//! barrier parameter mu starts at mu0 and shrinks by sigma whenever
//! ||F_mu(z)|| <= mu; the run converges when ||F_0(z)|| meets the
//! tolerance. Plain Newton rebuilds and factorizes the Jacobian every
//! iteration. The modified method factorizes on a schedule and in between
//! refreshes only `rank` complementarity pairs per iteration, keeping the
//! factorization cost metric (counted factorizations) far below the
//! iteration count.

use crate::heuristics::{
    h1_substitute, h2_substitute, HeuristicMode, RefactorParam, RefactorSchedule,
};
use crate::kkt::{assemble, merit, solve_direction, Direction, Iterate, KktError, KktFormulation};
use crate::linsolve::{factorize, factorize_unlogged, FactorizationCounter};
use crate::problem::QpProblem;
use crate::update::{inexact_residual, plan_update, ShadowPoint};
use nalgebra::{DMatrix, DVector};

/// Fraction-to-boundary rule: steps stop this close to the positivity
/// boundary of (lambda_in, s).
pub const STEP_FRACTION: f64 = 0.98;

/// Above this stacked dimension the initial point comes from a fixed
/// interior guess instead of a dense least-squares solve.
pub const BOOTSTRAP_LSQ_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Newton,
    ModifiedNewton {
        rank: usize,
        heuristic: HeuristicMode,
    },
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Newton => "newton".to_string(),
            Method::ModifiedNewton { rank, heuristic } => {
                let suffix = match heuristic {
                    HeuristicMode::None => "",
                    HeuristicMode::H1 => "-h1",
                    HeuristicMode::H2 => "-h2",
                };
                format!("mn-r{rank}{suffix}")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub mu0: f64,
    pub sigma: f64,
    /// None picks the problem-class default.
    pub tol: Option<f64>,
    pub method: Method,
    pub formulation: KktFormulation,
    pub refactor: RefactorParam,
    pub max_iterations: usize,
    pub bootstrap_budget: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mu0: 1.0,
            sigma: 0.1,
            tol: None,
            method: Method::Newton,
            formulation: KktFormulation::Unreduced,
            refactor: RefactorParam::Auto,
            max_iterations: 5000,
            bootstrap_budget: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Singular,
}

impl SolveStatus {
    pub fn label(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::Singular => "singular",
        }
    }
}

/// One row of the per-iteration trace. Values describe the iterate at the
/// start of iteration k and the step taken from it.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub k: usize,
    pub mu: f64,
    pub merit_mu: f64,
    pub merit_zero: f64,
    pub alpha_p: f64,
    pub alpha_d: f64,
    /// ||F'(z) - B||_F for the system B this iteration solved with.
    pub error_norm: f64,
    /// Relative linear-model residual of the accepted direction.
    pub eta: f64,
    pub refactorized: bool,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub status: SolveStatus,
    pub iterations: usize,
    /// Factorizations charged to the run: scheduled rebuilds plus any
    /// forced by a singular patched system. Patch-only rebuilds are free.
    pub factorizations: usize,
    pub bootstrap_factorizations: usize,
    pub forced_refactorizations: usize,
    pub failed_in_bootstrap: bool,
    pub iterate: Iterate,
    pub objective: f64,
    pub merit_zero: f64,
    pub trace: Vec<TraceRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Kkt(#[from] KktError),
}

/// Largest primal and dual steps keeping s and lambda_in strictly
/// positive under the fraction-to-boundary rule, both capped at 1.
pub fn max_feasible_steps(z: &Iterate, d: &Direction) -> (f64, f64) {
    fn cap(vals: &[f64], dirs: &[f64]) -> f64 {
        let mut a = 1.0_f64;
        for (v, q) in vals.iter().zip(dirs) {
            if *q < 0.0 {
                a = a.min(STEP_FRACTION * (v / -q));
            }
        }
        a
    }
    (cap(&z.s, &d.ds), cap(&z.lambda_in, &d.dlambda_in))
}

fn apply_step(z: &mut Iterate, d: &Direction, alpha_p: f64, alpha_d: f64) {
    for (v, q) in z.x.iter_mut().zip(&d.dx) {
        *v += alpha_p * q;
    }
    for (v, q) in z.s.iter_mut().zip(&d.ds) {
        *v += alpha_p * q;
    }
    for (v, q) in z.lambda_eq.iter_mut().zip(&d.dlambda_eq) {
        *v += alpha_d * q;
    }
    for (v, q) in z.lambda_in.iter_mut().zip(&d.dlambda_in) {
        *v += alpha_d * q;
    }
}

/// Joint least-squares guess for (x, lambda_eq, lambda_in) from the
/// stationarity and feasibility blocks with slacks dropped, then clamped
/// into the strict interior.
fn initial_point(p: &QpProblem) -> Iterate {
    let (n, m_eq, m_in) = (p.n(), p.m_eq(), p.m_in());
    let dim = n + m_eq + m_in;
    let (x, lambda_eq, lambda_in) = if dim <= BOOTSTRAP_LSQ_LIMIT {
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for (i, j, v) in p.h.iter() {
            m[(i, j)] += v;
        }
        for (r, j, v) in p.a_eq.iter() {
            m[(j, n + r)] -= v;
            m[(n + r, j)] += v;
        }
        for (r, j, v) in p.a_in.iter() {
            m[(j, n + m_eq + r)] -= v;
            m[(n + m_eq + r, j)] += v;
        }
        let mut rhs = DVector::<f64>::zeros(dim);
        for j in 0..n {
            rhs[j] = -p.c[j];
        }
        for i in 0..m_eq {
            rhs[n + i] = p.b_eq[i];
        }
        for i in 0..m_in {
            rhs[n + m_eq + i] = p.b_in[i];
        }
        let svd = m.svd(true, true);
        let smax = svd.singular_values.iter().fold(0.0_f64, |a, &v| a.max(v));
        let u = svd
            .solve(&rhs, 1e-12 * smax.max(1.0))
            .expect("svd computed with u and v");
        (
            u.as_slice()[..n].to_vec(),
            u.as_slice()[n..n + m_eq].to_vec(),
            u.as_slice()[n + m_eq..].to_vec(),
        )
    } else {
        (vec![0.0; n], vec![0.0; m_eq], vec![1.0; m_in])
    };

    let mut s = vec![0.0; m_in];
    p.a_in.matvec(&x, &mut s);
    for i in 0..m_in {
        s[i] = (s[i] - p.b_in[i]).max(1.0);
    }
    let lambda_in = lambda_in.into_iter().map(|v| v.max(1.0)).collect();
    Iterate {
        x,
        lambda_eq,
        lambda_in,
        s,
    }
}

struct PrevStep {
    lambda: Vec<f64>,
    s: Vec<f64>,
    dlambda: Vec<f64>,
    ds: Vec<f64>,
}

pub fn solve(p: &QpProblem, config: &SolverConfig) -> Result<RunReport, SolveError> {
    let tol = config.tol.unwrap_or(p.classify().default_tolerance());
    let mut counter = FactorizationCounter::new();
    let mut boot_counter = FactorizationCounter::new();
    let mut forced = 0usize;
    let mut trace: Vec<TraceRecord> = Vec::new();

    let report = |status: SolveStatus,
                  failed_in_bootstrap: bool,
                  iterations: usize,
                  z: Iterate,
                  counter: &FactorizationCounter,
                  boot: &FactorizationCounter,
                  forced: usize,
                  trace: Vec<TraceRecord>,
                  p: &QpProblem| RunReport {
        status,
        iterations,
        factorizations: counter.count(),
        bootstrap_factorizations: boot.count(),
        forced_refactorizations: forced,
        failed_in_bootstrap,
        objective: p.objective(&z.x),
        merit_zero: merit(p, &z, 0.0),
        iterate: z,
        trace,
    };

    // bootstrap: damp Newton on the residual at the pre-initial barrier
    // level until the iterate would have finished that level's phase
    let mut z = initial_point(p);
    let mu_boot = config.mu0 / config.sigma;
    let mut boots = 0usize;
    while merit(p, &z, mu_boot) > mu_boot {
        if boots >= config.bootstrap_budget {
            return Ok(report(
                SolveStatus::MaxIterations,
                true,
                0,
                z,
                &counter,
                &boot_counter,
                forced,
                trace,
                p,
            ));
        }
        let kkt = assemble(p, config.formulation, &z.lambda_in, &z.s)?;
        let fact = match factorize(&kkt.system, &mut boot_counter) {
            Ok(f) => f,
            Err(_) => {
                return Ok(report(
                    SolveStatus::Singular,
                    true,
                    0,
                    z,
                    &counter,
                    &boot_counter,
                    forced,
                    trace,
                    p,
                ));
            }
        };
        let d = match solve_direction(&kkt, &fact, p, &z, mu_boot) {
            Ok(d) => d,
            Err(_) => {
                return Ok(report(
                    SolveStatus::Singular,
                    true,
                    0,
                    z,
                    &counter,
                    &boot_counter,
                    forced,
                    trace,
                    p,
                ));
            }
        };
        let (ap, ad) = max_feasible_steps(&z, &d);
        let a = ap.min(ad);
        apply_step(&mut z, &d, a, a);
        boots += 1;
    }

    // main loop
    let rank = match config.method {
        Method::Newton => p.m_in(),
        Method::ModifiedNewton { rank, .. } => rank,
    };
    let schedule = RefactorSchedule::new(config.refactor, rank, p.m_in(), p.classify());
    let mut mu = config.mu0;
    let mut k = 0usize;
    let mut shadow = ShadowPoint::at(&z);
    let mut prev: Option<PrevStep> = None;
    let status;

    loop {
        let merit_zero = merit(p, &z, 0.0);
        if merit_zero <= tol {
            status = SolveStatus::Converged;
            break;
        }
        let merit_mu = merit(p, &z, mu);
        if merit_mu <= mu {
            mu *= config.sigma;
            continue;
        }
        if k >= config.max_iterations {
            status = SolveStatus::MaxIterations;
            break;
        }

        let refactor_now = match config.method {
            Method::Newton => true,
            Method::ModifiedNewton { .. } => schedule.refactor_due(k),
        };

        // A direction is accepted only when the factorization admits the
        // system and the solve meets the quality contract. A patched system
        // failing either check falls back to a fresh factorization, charged
        // to the run; a fresh system failing either check ends the run.
        let mut refactorized = true;
        let mut dir = None;
        if !refactor_now {
            let delta = shadow.delta_from(&z);
            let mags = delta.pair_magnitudes();
            let mut indices = plan_update(&delta, rank).indices;
            if let Method::ModifiedNewton { heuristic, .. } = config.method {
                if let Some(ref pv) = prev {
                    match heuristic {
                        HeuristicMode::None => {}
                        HeuristicMode::H1 => h1_substitute(
                            &mut indices,
                            &mags,
                            &pv.lambda,
                            &pv.dlambda,
                            &pv.s,
                            &pv.ds,
                        ),
                        HeuristicMode::H2 => h2_substitute(
                            &mut indices,
                            &mags,
                            &z.lambda_in,
                            &z.s,
                            &shadow.lambda,
                            &shadow.s,
                            &pv.lambda,
                            &pv.dlambda,
                            &pv.s,
                            &pv.ds,
                            rank,
                        ),
                    }
                }
            }
            shadow.patch(&z, &indices);
            let patched = assemble(p, config.formulation, &shadow.lambda, &shadow.s)?;
            if let Ok(f) = factorize_unlogged(&patched.system) {
                if let Ok(d) = solve_direction(&patched, &f, p, &z, mu) {
                    refactorized = false;
                    dir = Some(d);
                }
            }
        }
        let d = match dir {
            Some(d) => d,
            None => {
                shadow = ShadowPoint::at(&z);
                let fresh = assemble(p, config.formulation, &shadow.lambda, &shadow.s)?;
                let fact = match factorize(&fresh.system, &mut counter) {
                    Ok(f) => f,
                    Err(_) => {
                        status = SolveStatus::Singular;
                        break;
                    }
                };
                if !refactor_now {
                    forced += 1;
                }
                match solve_direction(&fresh, &fact, p, &z, mu) {
                    Ok(d) => d,
                    Err(_) => {
                        status = SolveStatus::Singular;
                        break;
                    }
                }
            }
        };
        let (alpha_p, alpha_d) = max_feasible_steps(&z, &d);

        trace.push(TraceRecord {
            k,
            mu,
            merit_mu,
            merit_zero,
            alpha_p,
            alpha_d,
            error_norm: shadow.error_norm(&z),
            eta: inexact_residual(p, &z, mu, &d),
            refactorized,
        });

        prev = Some(PrevStep {
            lambda: z.lambda_in.clone(),
            s: z.s.clone(),
            dlambda: d.dlambda_in.clone(),
            ds: d.ds.clone(),
        });
        apply_step(&mut z, &d, alpha_p, alpha_d);
        k += 1;
    }

    Ok(report(
        status,
        false,
        k,
        z,
        &counter,
        &boot_counter,
        forced,
        trace,
        p,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMat;

    /// min x'x - sum(x) subject to x >= 0; optimum x = (1/2, ..., 1/2).
    fn box_qp(n: usize) -> QpProblem {
        QpProblem {
            name: "box".into(),
            h: SparseMat::from_triplets(n, n, &(0..n).map(|i| (i, i, 2.0)).collect::<Vec<_>>()),
            c: vec![-1.0; n],
            a_eq: SparseMat::zeros(0, n),
            b_eq: vec![],
            a_in: SparseMat::identity(n),
            b_in: vec![0.0; n],
            obj_offset: 0.0,
        }
    }

    /// min sum((x_i - t_i)^2) subject to sum(x) = 1, x >= 0.
    fn simplex_qp() -> QpProblem {
        let n = 4;
        let targets = [0.9, -0.3, 0.4, 0.2];
        QpProblem {
            name: "simplex".into(),
            h: SparseMat::from_triplets(n, n, &(0..n).map(|i| (i, i, 2.0)).collect::<Vec<_>>()),
            c: targets.iter().map(|t| -2.0 * t).collect(),
            a_eq: SparseMat::from_triplets(1, n, &(0..n).map(|j| (0, j, 1.0)).collect::<Vec<_>>()),
            b_eq: vec![1.0],
            a_in: SparseMat::identity(n),
            b_in: vec![0.0; n],
            obj_offset: targets.iter().map(|t| t * t).sum(),
        }
    }

    #[test]
    fn newton_solves_box_qp() {
        let p = box_qp(3);
        let r = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!(!r.failed_in_bootstrap);
        for v in &r.iterate.x {
            assert!((v - 0.5).abs() < 1e-5, "{v}");
        }
        assert!((r.objective - -0.75).abs() < 1e-5);
        assert!(r.merit_zero <= 1e-6);
        // Newton refactorizes every iteration
        assert_eq!(r.factorizations, r.iterations);
        assert!(r.trace.iter().all(|t| t.refactorized));
        assert!(r.trace.iter().all(|t| t.error_norm == 0.0));
        assert!(r.trace.iter().all(|t| t.eta < 1e-10));
    }

    #[test]
    fn newton_solves_simplex_projection() {
        let p = simplex_qp();
        let r = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        // KKT conditions at the reported solution
        let z = &r.iterate;
        let sum: f64 = z.x.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
        for i in 0..p.n() {
            assert!(z.x[i] >= -1e-9);
            assert!(z.lambda_in[i] >= -1e-9);
            assert!(z.x[i] * z.lambda_in[i] < 1e-5);
        }
    }

    #[test]
    fn trace_columns_are_consistent() {
        let p = simplex_qp();
        let r = solve(&p, &SolverConfig::default()).unwrap();
        for (i, t) in r.trace.iter().enumerate() {
            assert_eq!(t.k, i);
            assert!(t.alpha_p > 0.0 && t.alpha_p <= 1.0);
            assert!(t.alpha_d > 0.0 && t.alpha_d <= 1.0);
            assert!(t.merit_mu > t.mu, "iteration only runs above the mu gate");
        }
        // barrier level never increases along the trace
        for w in r.trace.windows(2) {
            assert!(w[1].mu <= w[0].mu);
        }
    }

    #[test]
    fn full_rank_update_walks_the_newton_path() {
        let p = simplex_qp();
        let newton = solve(&p, &SolverConfig::default()).unwrap();
        let mn = solve(
            &p,
            &SolverConfig {
                method: Method::ModifiedNewton {
                    rank: p.m_in(),
                    heuristic: HeuristicMode::None,
                },
                refactor: RefactorParam::Never,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        assert_eq!(mn.status, SolveStatus::Converged);
        assert_eq!(mn.iterations, newton.iterations);
        // identical iterate sequences, seen through the trace merits
        for (a, b) in newton.trace.iter().zip(mn.trace.iter()) {
            assert!((a.merit_mu - b.merit_mu).abs() <= 1e-12 * a.merit_mu.max(1.0));
            assert_eq!(a.mu, b.mu);
        }
        // but only the initial factorization is charged
        assert_eq!(mn.factorizations, 1);
        assert!(newton.factorizations > 1);
    }

    #[test]
    fn low_rank_update_converges_with_few_factorizations() {
        let p = simplex_qp();
        for heuristic in [HeuristicMode::None, HeuristicMode::H1, HeuristicMode::H2] {
            let r = solve(
                &p,
                &SolverConfig {
                    method: Method::ModifiedNewton { rank: 1, heuristic },
                    ..SolverConfig::default()
                },
            )
            .unwrap();
            assert_eq!(r.status, SolveStatus::Converged, "{heuristic:?}");
            assert!(
                r.factorizations < r.iterations,
                "{heuristic:?}: {} vs {}",
                r.factorizations,
                r.iterations
            );
        }
    }

    #[test]
    fn refactor_schedule_is_visible_in_trace() {
        let p = simplex_qp();
        let r = solve(
            &p,
            &SolverConfig {
                method: Method::ModifiedNewton {
                    rank: 1,
                    heuristic: HeuristicMode::None,
                },
                refactor: RefactorParam::Fixed(2),
                ..SolverConfig::default()
            },
        )
        .unwrap();
        for t in &r.trace {
            assert_eq!(t.refactorized, t.k % 3 == 0, "k = {}", t.k);
        }
        let charged = r.trace.iter().filter(|t| t.refactorized).count();
        assert_eq!(r.factorizations, charged);
    }

    #[test]
    fn warm_start_at_tiny_mu_takes_few_main_iterations() {
        let p = simplex_qp();
        let r = solve(
            &p,
            &SolverConfig {
                mu0: 1e-6,
                method: Method::ModifiedNewton {
                    rank: 2,
                    heuristic: HeuristicMode::None,
                },
                ..SolverConfig::default()
            },
        )
        .unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!(r.iterations <= 6, "iterations {}", r.iterations);
        assert!(r.factorizations <= 2, "factorizations {}", r.factorizations);
        assert!(r.bootstrap_factorizations > 0);
    }

    #[test]
    fn dependent_equalities_fail_as_singular_in_bootstrap() {
        let n = 4;
        let p = QpProblem {
            name: "degenerate".into(),
            h: SparseMat::from_triplets(n, n, &(0..n).map(|i| (i, i, 2.0)).collect::<Vec<_>>()),
            c: vec![0.0; n],
            a_eq: SparseMat::from_triplets(
                2,
                n,
                &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)],
            ),
            b_eq: vec![1.0, 1.0],
            a_in: SparseMat::identity(n),
            b_in: vec![0.0; n],
            obj_offset: 0.0,
        };
        let r = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Singular);
        assert!(r.failed_in_bootstrap);
    }

    #[test]
    fn bootstrap_budget_exhaustion_is_reported() {
        let p = simplex_qp();
        let r = solve(
            &p,
            &SolverConfig {
                mu0: 1e-9,
                bootstrap_budget: 0,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        assert_eq!(r.status, SolveStatus::MaxIterations);
        assert!(r.failed_in_bootstrap);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn method_labels() {
        assert_eq!(Method::Newton.label(), "newton");
        assert_eq!(
            Method::ModifiedNewton {
                rank: 2,
                heuristic: HeuristicMode::None
            }
            .label(),
            "mn-r2"
        );
        assert_eq!(
            Method::ModifiedNewton {
                rank: 4,
                heuristic: HeuristicMode::H2
            }
            .label(),
            "mn-r4-h2"
        );
    }
}
