//! KKT residual, Jacobian-system assembly, and search directions.
//!
//! For z = (x, lambda_eq, lambda_in, s) the perturbed residual is
//! ```text
//! F_mu(z) = [ H x + c - A_eq' lambda_eq - A_in' lambda_in ]   (n)
//!           [ A_eq x - b_eq                               ]   (m_eq)
//!           [ A_in x - s - b_in                           ]   (m_in)
//!           [ lambda_in .* s - mu e                       ]   (m_in)
//! ```
//! Its Jacobian depends on z only through (lambda_in, s):
//! ```text
//! F'(z) = [ H     -A_eq'  -A_in'  0         ]
//!         [ A_eq   0       0      0         ]
//!         [ A_in   0       0      -I        ]
//!         [ 0      0       diag(s) diag(l)  ]
//! ```
//! The assembly routines take explicit "shadow" values (lambda_bar, s_bar)
//! for the last block row, so a system can be built at values other than
//! the current iterate's. All three formulations below solve the same
//! Newton equations; they differ in what is eliminated:
//! - unreduced: the full system above, dimension n + m_eq + 2 m_in;
//! - reduced: slacks eliminated through the complementarity row,
//!   dimension n + m_eq + m_in, symmetric indefinite shape;
//! - condensed: inequality multipliers eliminated as well,
//!   dimension n + m_eq.

use crate::linsolve::{
    ensure_solve_quality, Factorization, LinsolveError, SquareSystem, DENSE_LIMIT,
};
use crate::problem::QpProblem;

/// The condensed formulation is refused above this many primal variables
/// (the H + A_in' D A_in block is too dense to be worth forming).
pub const CONDENSED_MAX_N: usize = 2000;

/// Interior iterate. `lambda_in` and `s` stay strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub x: Vec<f64>,
    pub lambda_eq: Vec<f64>,
    pub lambda_in: Vec<f64>,
    pub s: Vec<f64>,
}

impl Iterate {
    pub fn dim(&self) -> usize {
        self.x.len() + self.lambda_eq.len() + 2 * self.s.len()
    }

    /// Flat layout [x; lambda_eq; lambda_in; s].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.x);
        v.extend_from_slice(&self.lambda_eq);
        v.extend_from_slice(&self.lambda_in);
        v.extend_from_slice(&self.s);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KktFormulation {
    Unreduced,
    Reduced,
    Condensed,
}

impl KktFormulation {
    pub fn label(self) -> &'static str {
        match self {
            KktFormulation::Unreduced => "unreduced",
            KktFormulation::Reduced => "reduced",
            KktFormulation::Condensed => "condensed",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum KktError {
    #[error("condensed formulation refused: n = {n} exceeds {max}")]
    CondensedTooLarge { n: usize, max: usize },
}

/// F_mu(z), laid out [stationarity; equality; inequality; complementarity].
pub fn residual(p: &QpProblem, z: &Iterate, mu: f64) -> Vec<f64> {
    let (n, m_eq, m_in) = (p.n(), p.m_eq(), p.m_in());
    let mut r = vec![0.0; n + m_eq + 2 * m_in];
    let (r1, rest) = r.split_at_mut(n);
    let (r2, rest) = rest.split_at_mut(m_eq);
    let (r3, r4) = rest.split_at_mut(m_in);

    p.h.matvec(&z.x, r1);
    for j in 0..n {
        r1[j] += p.c[j];
    }
    let mut t = vec![0.0; n];
    p.a_eq.tr_matvec_add(&z.lambda_eq, &mut t);
    p.a_in.tr_matvec_add(&z.lambda_in, &mut t);
    for j in 0..n {
        r1[j] -= t[j];
    }

    p.a_eq.matvec(&z.x, r2);
    for i in 0..m_eq {
        r2[i] -= p.b_eq[i];
    }

    p.a_in.matvec(&z.x, r3);
    for i in 0..m_in {
        r3[i] -= z.s[i] + p.b_in[i];
        r4[i] = z.lambda_in[i] * z.s[i] - mu;
    }
    r
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|&x| x * x).sum::<f64>().sqrt()
}

/// ||F_mu(z)||, the merit tracked by the solver.
pub fn merit(p: &QpProblem, z: &Iterate, mu: f64) -> f64 {
    norm2(&residual(p, z, mu))
}

/// y = F'(z) v without assembling the Jacobian; `lambda_in`/`s` supply the
/// complementarity row. v and y use the flat iterate layout.
pub fn jacobian_matvec(p: &QpProblem, lambda_in: &[f64], s: &[f64], v: &[f64]) -> Vec<f64> {
    let (n, m_eq, m_in) = (p.n(), p.m_eq(), p.m_in());
    debug_assert_eq!(v.len(), n + m_eq + 2 * m_in);
    let (vx, rest) = v.split_at(n);
    let (vy, rest) = rest.split_at(m_eq);
    let (vw, vs) = rest.split_at(m_in);

    let mut out = vec![0.0; n + m_eq + 2 * m_in];
    let (o1, orest) = out.split_at_mut(n);
    let (o2, orest) = orest.split_at_mut(m_eq);
    let (o3, o4) = orest.split_at_mut(m_in);

    p.h.matvec(vx, o1);
    let mut t = vec![0.0; n];
    p.a_eq.tr_matvec_add(vy, &mut t);
    p.a_in.tr_matvec_add(vw, &mut t);
    for j in 0..n {
        o1[j] -= t[j];
    }
    p.a_eq.matvec(vx, o2);
    p.a_in.matvec(vx, o3);
    for i in 0..m_in {
        o3[i] -= vs[i];
        o4[i] = s[i] * vw[i] + lambda_in[i] * vs[i];
    }
    out
}

/// Search direction in iterate blocks.
#[derive(Debug, Clone)]
pub struct Direction {
    pub dx: Vec<f64>,
    pub dlambda_eq: Vec<f64>,
    pub dlambda_in: Vec<f64>,
    pub ds: Vec<f64>,
}

impl Direction {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dx.len() + self.dlambda_eq.len() + 2 * self.ds.len());
        v.extend_from_slice(&self.dx);
        v.extend_from_slice(&self.dlambda_eq);
        v.extend_from_slice(&self.dlambda_in);
        v.extend_from_slice(&self.ds);
        v
    }
}

/// An assembled Newton system. Holds the shadow (lambda_bar, s_bar) the
/// complementarity row was built from; direction recovery needs them.
pub struct KktMatrix {
    pub formulation: KktFormulation,
    pub system: SquareSystem,
    lambda_bar: Vec<f64>,
    s_bar: Vec<f64>,
}

impl KktMatrix {
    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn shadow(&self) -> (&[f64], &[f64]) {
        (&self.lambda_bar, &self.s_bar)
    }
}

/// Assemble the Newton system for the chosen formulation with the
/// complementarity row taken at (lambda_bar, s_bar).
pub fn assemble(
    p: &QpProblem,
    formulation: KktFormulation,
    lambda_bar: &[f64],
    s_bar: &[f64],
) -> Result<KktMatrix, KktError> {
    let (n, m_eq, m_in) = (p.n(), p.m_eq(), p.m_in());
    debug_assert_eq!(lambda_bar.len(), m_in);
    debug_assert_eq!(s_bar.len(), m_in);
    let dense = n + m_eq + m_in <= DENSE_LIMIT;
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();

    let system = match formulation {
        KktFormulation::Unreduced => {
            let (oy, ow, os) = (n, n + m_eq, n + m_eq + m_in);
            let dim = n + m_eq + 2 * m_in;
            for (i, j, v) in p.h.iter() {
                trips.push((i, j, v));
            }
            for (r, j, v) in p.a_eq.iter() {
                trips.push((j, oy + r, -v));
                trips.push((oy + r, j, v));
            }
            for (r, j, v) in p.a_in.iter() {
                trips.push((j, ow + r, -v));
                trips.push((ow + r, j, v));
            }
            for i in 0..m_in {
                trips.push((ow + i, os + i, -1.0));
                trips.push((os + i, ow + i, s_bar[i]));
                trips.push((os + i, os + i, lambda_bar[i]));
            }
            SquareSystem::from_triplets(dim, &trips, dense)
        }
        KktFormulation::Reduced => {
            let (oy, ow) = (n, n + m_eq);
            let dim = n + m_eq + m_in;
            for (i, j, v) in p.h.iter() {
                trips.push((i, j, v));
            }
            for (r, j, v) in p.a_eq.iter() {
                trips.push((j, oy + r, v));
                trips.push((oy + r, j, v));
            }
            for (r, j, v) in p.a_in.iter() {
                trips.push((j, ow + r, v));
                trips.push((ow + r, j, v));
            }
            for i in 0..m_in {
                trips.push((ow + i, ow + i, -s_bar[i] / lambda_bar[i]));
            }
            SquareSystem::from_triplets(dim, &trips, dense)
        }
        KktFormulation::Condensed => {
            if n > CONDENSED_MAX_N {
                return Err(KktError::CondensedTooLarge {
                    n,
                    max: CONDENSED_MAX_N,
                });
            }
            let oy = n;
            let dim = n + m_eq;
            for (i, j, v) in p.h.iter() {
                trips.push((i, j, v));
            }
            // H + A_in' diag(lambda_bar / s_bar) A_in, built row by row
            for r in 0..m_in {
                let d = lambda_bar[r] / s_bar[r];
                let row: Vec<(usize, f64)> = p.a_in.row(r).collect();
                for &(jp, vp) in &row {
                    for &(jq, vq) in &row {
                        trips.push((jp, jq, d * vp * vq));
                    }
                }
            }
            for (r, j, v) in p.a_eq.iter() {
                trips.push((j, oy + r, v));
                trips.push((oy + r, j, v));
            }
            SquareSystem::from_triplets(dim, &trips, dense)
        }
    };

    Ok(KktMatrix {
        formulation,
        system,
        lambda_bar: lambda_bar.to_vec(),
        s_bar: s_bar.to_vec(),
    })
}

/// Solve for the search direction at iterate z, barrier mu, using the
/// factorized system `fact` of `kkt`. The right-hand sides always use the
/// residual at the current iterate; only the matrix is at shadow values.
///
/// Every solve is checked against the solve-quality contract of
/// [`crate::linsolve::ensure_solve_quality`]; an inaccurate solve is
/// reported as an error so the caller can fall back to a fresh
/// factorization or declare the system singular.
pub fn solve_direction(
    kkt: &KktMatrix,
    fact: &Factorization,
    p: &QpProblem,
    z: &Iterate,
    mu: f64,
) -> Result<Direction, LinsolveError> {
    let (n, m_eq, m_in) = (p.n(), p.m_eq(), p.m_in());
    let r = residual(p, z, mu);
    let (r1, rest) = r.split_at(n);
    let (r2, rest) = rest.split_at(m_eq);
    let (r3, r4) = rest.split_at(m_in);
    let lam = &kkt.lambda_bar;
    let sb = &kkt.s_bar;

    match kkt.formulation {
        KktFormulation::Unreduced => {
            let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            let dz = fact.solve(&rhs);
            ensure_solve_quality(&kkt.system, &dz, &rhs)?;
            Ok(Direction {
                dx: dz[..n].to_vec(),
                dlambda_eq: dz[n..n + m_eq].to_vec(),
                dlambda_in: dz[n + m_eq..n + m_eq + m_in].to_vec(),
                ds: dz[n + m_eq + m_in..].to_vec(),
            })
        }
        KktFormulation::Reduced => {
            // unknown ordering [dx; -dlambda_eq; -dlambda_in]
            let mut rhs = Vec::with_capacity(n + m_eq + m_in);
            rhs.extend(r1.iter().map(|v| -v));
            rhs.extend(r2.iter().map(|v| -v));
            for i in 0..m_in {
                rhs.push(-(r3[i] + r4[i] / lam[i]));
            }
            let u = fact.solve(&rhs);
            ensure_solve_quality(&kkt.system, &u, &rhs)?;
            let dx = u[..n].to_vec();
            let dlambda_eq: Vec<f64> = u[n..n + m_eq].iter().map(|v| -v).collect();
            let dlambda_in: Vec<f64> = u[n + m_eq..].iter().map(|v| -v).collect();
            let ds: Vec<f64> = (0..m_in)
                .map(|i| -(r4[i] + sb[i] * dlambda_in[i]) / lam[i])
                .collect();
            Ok(Direction {
                dx,
                dlambda_eq,
                dlambda_in,
                ds,
            })
        }
        KktFormulation::Condensed => {
            // unknown ordering [dx; -dlambda_eq]
            let mut rhs: Vec<f64> = r1.iter().map(|v| -v).collect();
            {
                // rhs1 -= A_in' s_bar^{-1} (lambda_bar r3 + r4)
                let t: Vec<f64> = (0..m_in)
                    .map(|i| (lam[i] * r3[i] + r4[i]) / sb[i])
                    .collect();
                let mut at = vec![0.0; n];
                p.a_in.tr_matvec_add(&t, &mut at);
                for j in 0..n {
                    rhs[j] -= at[j];
                }
            }
            rhs.extend(r2.iter().map(|v| -v));
            let u = fact.solve(&rhs);
            ensure_solve_quality(&kkt.system, &u, &rhs)?;
            let dx = u[..n].to_vec();
            let dlambda_eq: Vec<f64> = u[n..].iter().map(|v| -v).collect();
            let mut aindx = vec![0.0; m_in];
            p.a_in.matvec(&dx, &mut aindx);
            let dlambda_in: Vec<f64> = (0..m_in)
                .map(|i| -(lam[i] * (aindx[i] + r3[i]) + r4[i]) / sb[i])
                .collect();
            let ds: Vec<f64> = (0..m_in)
                .map(|i| -(r4[i] + sb[i] * dlambda_in[i]) / lam[i])
                .collect();
            Ok(Direction {
                dx,
                dlambda_eq,
                dlambda_in,
                ds,
            })
        }
    }
}

/// Difference F'(z) - F'(z_bar) between two Jacobians sharing everything but
/// the complementarity row. Nonzeros live in the last m_in rows only:
/// row i holds ds_i in the lambda_in column and dlambda_i in the s column,
/// so the nonzero singular values are sqrt(dlambda_i^2 + ds_i^2).
#[derive(Debug, Clone)]
pub struct DeltaJacobian {
    pub dlambda: Vec<f64>,
    pub ds: Vec<f64>,
}

impl DeltaJacobian {
    pub fn between(lambda: &[f64], s: &[f64], lambda_bar: &[f64], s_bar: &[f64]) -> Self {
        let dlambda = lambda
            .iter()
            .zip(lambda_bar.iter())
            .map(|(a, b)| a - b)
            .collect();
        let ds = s.iter().zip(s_bar.iter()).map(|(a, b)| a - b).collect();
        DeltaJacobian { dlambda, ds }
    }

    /// Per-pair magnitudes sqrt(dlambda_i^2 + ds_i^2), unsorted.
    pub fn pair_magnitudes(&self) -> Vec<f64> {
        self.dlambda
            .iter()
            .zip(self.ds.iter())
            .map(|(dl, ds)| dl.hypot(*ds))
            .collect()
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut v = self.pair_magnitudes();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v
    }

    pub fn frobenius(&self) -> f64 {
        self.pair_magnitudes()
            .iter()
            .map(|m| m * m)
            .sum::<f64>()
            .sqrt()
    }
}
