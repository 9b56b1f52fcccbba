//! Convex quadratic programs in the solver's standard form, and the
//! reduction from general MPS-style input to that form.
//!
//! ```text
//! minimize    0.5 x' H x + c' x              H symmetric psd
//! subject to  A_eq x  = b_eq                 (m_eq rows)
//!             A_in x >= b_in                 (m_in rows)
//! ```
//!
//! Preprocessing turns raw parsed input into this shape:
//! - L rows are negated into >= rows, G rows kept, E rows go to `a_eq`;
//! - RANGES split a row into two opposing inequalities;
//! - finite variable bounds become inequality rows (lower, then upper,
//!   in variable order, after all general rows);
//! - fixed variables (FX, or lo == up) and singleton equality rows are
//!   eliminated recursively, folding constants into `c` and `obj_offset`.

use crate::qps::{BoundKind, RawQp, RowKind};
use crate::sparse::SparseMat;

const INF: f64 = f64::INFINITY;

/// A convex QP in standard form. Inequalities are all `A_in x >= b_in`;
/// the solver attaches slacks s = A_in x - b_in internally.
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub name: String,
    pub h: SparseMat,
    pub c: Vec<f64>,
    pub a_eq: SparseMat,
    pub b_eq: Vec<f64>,
    pub a_in: SparseMat,
    pub b_in: Vec<f64>,
    /// Constant folded out of the objective by eliminations and the RHS
    /// entry of the objective row.
    pub obj_offset: f64,
}

impl QpProblem {
    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m_eq(&self) -> usize {
        self.b_eq.len()
    }

    pub fn m_in(&self) -> usize {
        self.b_in.len()
    }

    /// Dimension of the full KKT system: n + m_eq + 2 m_in.
    pub fn kkt_dim(&self) -> usize {
        self.n() + self.m_eq() + 2 * self.m_in()
    }

    pub fn classify(&self) -> ProblemClass {
        classify(self.n(), self.m_eq(), self.m_in())
    }

    /// 0.5 x'Hx + c'x + offset
    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut hx = vec![0.0; self.n()];
        self.h.matvec(x, &mut hx);
        let mut v = self.obj_offset;
        for j in 0..self.n() {
            v += (0.5 * hx[j] + self.c[j]) * x[j];
        }
        v
    }
}

/// Size class by KKT dimension N = n + m_eq + 2 m_in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemClass {
    Small,
    Medium,
    Large,
}

pub fn classify(n: usize, m_eq: usize, m_in: usize) -> ProblemClass {
    let total = n + m_eq + 2 * m_in;
    if total < 500 {
        ProblemClass::Small
    } else if total < 10_000 {
        ProblemClass::Medium
    } else {
        ProblemClass::Large
    }
}

impl ProblemClass {
    /// Default convergence tolerance on the mu = 0 residual norm.
    pub fn default_tolerance(self) -> f64 {
        match self {
            ProblemClass::Small | ProblemClass::Medium => 1e-6,
            ProblemClass::Large => 1e-5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ProblemClass::Small => "S",
            ProblemClass::Medium => "M",
            ProblemClass::Large => "L",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("variable {0}: lower bound {1} exceeds upper bound {2}")]
    InconsistentBounds(String, f64, f64),
    #[error("row {0}: constraint infeasible after eliminations (residual {1:.3e})")]
    InfeasibleRow(String, f64),
    #[error("variable {0}: value {1} forced by row {2} violates bounds [{3}, {4}]")]
    FixedOutOfBounds(String, f64, String, f64, f64),
    #[error("{0} inequality rows after reduction; at least 4 are required")]
    TooFewInequalities(usize),
}

/// Reduce raw parsed input to standard form.
pub fn preprocess(raw: &RawQp) -> Result<QpProblem, PreprocessError> {
    let nv = raw.vars.len();
    let nr = raw.rows.len();

    // Resolve per-variable bounds. Defaults: [0, +inf).
    let mut lo = vec![0.0; nv];
    let mut up = vec![INF; nv];
    for b in &raw.bounds {
        match b.kind {
            BoundKind::Lo => lo[b.var] = b.value,
            BoundKind::Up => up[b.var] = b.value,
            BoundKind::Fx => {
                lo[b.var] = b.value;
                up[b.var] = b.value;
            }
            BoundKind::Fr => {
                lo[b.var] = -INF;
                up[b.var] = INF;
            }
            BoundKind::Mi => lo[b.var] = -INF,
            BoundKind::Pl => up[b.var] = INF,
        }
    }
    for j in 0..nv {
        if lo[j] > up[j] {
            return Err(PreprocessError::InconsistentBounds(
                raw.vars[j].clone(),
                lo[j],
                up[j],
            ));
        }
    }

    // Row-major constraint entries.
    let mut row_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nr];
    for &(r, v, coeff) in &raw.entries {
        row_entries[r].push((v, coeff));
    }
    let mut rhs = vec![0.0; nr];
    for &(r, v) in &raw.rhs {
        rhs[r] = v;
    }
    let mut range: Vec<Option<f64>> = vec![None; nr];
    for &(r, v) in &raw.ranges {
        range[r] = Some(v);
    }

    // Recursive elimination of fixed variables and singleton equality rows.
    // An E row carrying a nonzero range is an interval, not an equality.
    let mut fixed: Vec<Option<f64>> = (0..nv)
        .map(|j| if lo[j] == up[j] { Some(lo[j]) } else { None })
        .collect();
    let mut row_alive = vec![true; nr];
    let is_equality = |r: usize, range: &[Option<f64>]| {
        raw.rows[r].kind == RowKind::Eq && range[r].unwrap_or(0.0) == 0.0
    };
    loop {
        let mut changed = false;
        for r in 0..nr {
            if !row_alive[r] || !is_equality(r, &range) {
                continue;
            }
            let mut unfixed: Option<(usize, f64)> = None;
            let mut count = 0;
            let mut b_eff = rhs[r];
            for &(v, coeff) in &row_entries[r] {
                match fixed[v] {
                    Some(val) => b_eff -= coeff * val,
                    None => {
                        count += 1;
                        unfixed = Some((v, coeff));
                    }
                }
            }
            match count {
                0 => {
                    let tol = 1e-8 * (1.0 + rhs[r].abs());
                    if b_eff.abs() > tol {
                        return Err(PreprocessError::InfeasibleRow(
                            raw.rows[r].name.clone(),
                            b_eff,
                        ));
                    }
                    row_alive[r] = false;
                    changed = true;
                }
                1 => {
                    let (v, coeff) = unfixed.unwrap();
                    let val = b_eff / coeff;
                    let tol = 1e-8 * (1.0 + val.abs());
                    if val < lo[v] - tol || val > up[v] + tol {
                        return Err(PreprocessError::FixedOutOfBounds(
                            raw.vars[v].clone(),
                            val,
                            raw.rows[r].name.clone(),
                            lo[v],
                            up[v],
                        ));
                    }
                    fixed[v] = Some(val);
                    row_alive[r] = false;
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }

    // Index map for surviving variables.
    let keep: Vec<usize> = (0..nv).filter(|&j| fixed[j].is_none()).collect();
    let new_idx: Vec<Option<usize>> = {
        let mut m = vec![None; nv];
        for (k, &j) in keep.iter().enumerate() {
            m[j] = Some(k);
        }
        m
    };
    let n = keep.len();

    // Objective: linear part, quadratic part, folded constants.
    let mut obj_offset = -raw.obj_rhs;
    let mut c = vec![0.0; n];
    for &(v, coeff) in &raw.obj_linear {
        match fixed[v] {
            Some(val) => obj_offset += coeff * val,
            None => c[new_idx[v].unwrap()] += coeff,
        }
    }
    let mut h_triplets = Vec::new();
    for &(i, j, v) in &raw.quad {
        match (fixed[i], fixed[j]) {
            (Some(a), Some(b)) => obj_offset += 0.5 * v * a * b,
            (Some(a), None) => c[new_idx[j].unwrap()] += 0.5 * v * a,
            (None, Some(b)) => c[new_idx[i].unwrap()] += 0.5 * v * b,
            (None, None) => h_triplets.push((new_idx[i].unwrap(), new_idx[j].unwrap(), v)),
        }
    }

    // Constraint rows. Equalities first (declaration order), then general
    // inequalities (declaration order, range partner directly after its
    // primary row), then bound rows (variable order, lower before upper).
    let mut eq_triplets = Vec::new();
    let mut b_eq = Vec::new();
    let mut in_triplets = Vec::new();
    let mut b_in = Vec::new();

    let reduced_row = |r: usize| -> (Vec<(usize, f64)>, f64) {
        let mut b_eff = rhs[r];
        let mut entries = Vec::new();
        for &(v, coeff) in &row_entries[r] {
            match fixed[v] {
                Some(val) => b_eff -= coeff * val,
                None => entries.push((new_idx[v].unwrap(), coeff)),
            }
        }
        (entries, b_eff)
    };

    // An inequality a'x >= b whose variables were all eliminated must hold
    // as a constant; otherwise it is dropped.
    let push_ineq = |entries: &[(usize, f64)],
                     b: f64,
                     negate: bool,
                     name: &str,
                     b_in: &mut Vec<f64>,
                     in_triplets: &mut Vec<(usize, usize, f64)>|
     -> Result<(), PreprocessError> {
        let sign = if negate { -1.0 } else { 1.0 };
        let b = sign * b;
        if entries.is_empty() {
            if b > 1e-8 * (1.0 + b.abs()) {
                return Err(PreprocessError::InfeasibleRow(name.to_string(), b));
            }
            return Ok(());
        }
        let row = b_in.len();
        for &(j, coeff) in entries {
            in_triplets.push((row, j, sign * coeff));
        }
        b_in.push(b);
        Ok(())
    };

    for r in 0..nr {
        if !row_alive[r] {
            continue;
        }
        let (entries, b_eff) = reduced_row(r);
        let rng = range[r].unwrap_or(0.0);
        let name = &raw.rows[r].name;
        match raw.rows[r].kind {
            RowKind::Eq if rng == 0.0 => {
                debug_assert!(!entries.is_empty(), "surviving equality must have entries");
                let row = b_eq.len();
                for &(j, coeff) in &entries {
                    eq_triplets.push((row, j, coeff));
                }
                b_eq.push(b_eff);
            }
            RowKind::Eq => {
                // Interval [b, b+r] for r > 0, [b+r, b] for r < 0.
                let (l, u) = if rng > 0.0 {
                    (b_eff, b_eff + rng)
                } else {
                    (b_eff + rng, b_eff)
                };
                push_ineq(&entries, l, false, name, &mut b_in, &mut in_triplets)?;
                push_ineq(&entries, u, true, name, &mut b_in, &mut in_triplets)?;
            }
            RowKind::Le => {
                push_ineq(&entries, b_eff, true, name, &mut b_in, &mut in_triplets)?;
                if rng != 0.0 {
                    let l = b_eff - rng.abs();
                    push_ineq(&entries, l, false, name, &mut b_in, &mut in_triplets)?;
                }
            }
            RowKind::Ge => {
                push_ineq(&entries, b_eff, false, name, &mut b_in, &mut in_triplets)?;
                if rng != 0.0 {
                    let u = b_eff + rng.abs();
                    push_ineq(&entries, u, true, name, &mut b_in, &mut in_triplets)?;
                }
            }
        }
    }

    for (k, &j) in keep.iter().enumerate() {
        if lo[j].is_finite() {
            let row = b_in.len();
            in_triplets.push((row, k, 1.0));
            b_in.push(lo[j]);
        }
        if up[j].is_finite() {
            let row = b_in.len();
            in_triplets.push((row, k, -1.0));
            b_in.push(-up[j]);
        }
    }

    let m_in = b_in.len();
    if m_in < 4 {
        return Err(PreprocessError::TooFewInequalities(m_in));
    }
    let m_eq = b_eq.len();

    Ok(QpProblem {
        name: raw.name.clone(),
        h: SparseMat::from_triplets(n, n, &h_triplets),
        c,
        a_eq: SparseMat::from_triplets(m_eq, n, &eq_triplets),
        b_eq,
        a_in: SparseMat::from_triplets(m_in, n, &in_triplets),
        b_in,
        obj_offset,
    })
}
