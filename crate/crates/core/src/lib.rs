//! Primal-dual interior-point solver for convex quadratic programs, built
//! around a modified-Newton treatment of the KKT system: the Jacobian used
//! for the Newton solves is held fixed for stretches of iterations and
//! corrected by structured low-rank updates instead of being refactorized
//! every step.
//!
//! For the problem
//! ```text
//! minimize    0.5 x' H x + c' x
//! subject to  A_eq x  = b_eq,     A_in x >= b_in
//! ```
//! the solver tracks the perturbed KKT residual of the iterate
//! z = (x, lambda_eq, lambda_in, s), s = A_in x - b_in:
//! ```text
//!          [ H x + c - A_eq' lambda_eq - A_in' lambda_in ]
//! F_mu(z) = [ A_eq x - b_eq                               ]
//!          [ A_in x - s - b_in                            ]
//!          [ diag(lambda_in) s - mu e                     ]
//! ```
//! and drives ||F_mu|| -> 0 along a decreasing barrier sequence mu -> 0.
//! The Jacobian of F_mu depends on the iterate only through (lambda_in, s),
//! which is what makes cheap low-rank corrections possible: replacing a few
//! (lambda_i, s_i) pairs in an old Jacobian by their current values is a
//! rank-r change with known singular values.

// index loops over parallel arrays are the dominant idiom in the numeric
// kernels here; zipped iterators obscure the math
#![allow(clippy::needless_range_loop)]

pub mod harness;
pub mod heuristics;
pub mod ipm;
pub mod kkt;
pub mod linsolve;
pub mod problem;
pub mod qps;
pub mod sparse;
pub mod update;

pub use harness::{run_suite, BenchConfig, MethodSpec, SuiteOutcome};
pub use heuristics::{HeuristicMode, RefactorParam, RefactorSchedule};
pub use ipm::{solve, Method, RunReport, SolveStatus, SolverConfig, TraceRecord};
pub use kkt::{Iterate, KktFormulation};
pub use linsolve::{Factorization, FactorizationCounter, LinsolveError, SquareSystem};
pub use problem::{classify, preprocess, ProblemClass, QpProblem};
pub use qps::{load_problem, parse_qps, parse_qps_file, serialize_qps, RawQp};
pub use update::{ShadowPoint, UpdatePlan};
