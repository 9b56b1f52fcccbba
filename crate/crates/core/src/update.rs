//! Shadow iterates, rank-limited refresh selection, and direction quality.
//!
//! The solver keeps a factorized system B = F'(z_bar) built at shadow
//! values (lambda_bar, s_bar) while the iterate moves on. Because the
//! Jacobian depends on the iterate only through the complementarity row,
//! the approximation error E = F'(z) - B has one nonzero pair per
//! inequality: (lambda_i - lambda_bar_i) and (s_i - s_bar_i) in row
//! n + m_eq + m_in + i. Its nonzero singular values are exactly the pair
//! magnitudes sqrt(dlambda_i^2 + ds_i^2), so the best rank-r correction to
//! B is found by refreshing the r pairs of largest magnitude, and the
//! remaining error is known in closed form.

use crate::kkt::{jacobian_matvec, norm2, residual, DeltaJacobian, Direction, Iterate};
use crate::problem::QpProblem;

/// The (lambda_in, s) values a factorized system was assembled at.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowPoint {
    pub lambda: Vec<f64>,
    pub s: Vec<f64>,
}

impl ShadowPoint {
    /// Shadow equal to the current iterate (exact Jacobian).
    pub fn at(z: &Iterate) -> Self {
        ShadowPoint {
            lambda: z.lambda_in.clone(),
            s: z.s.clone(),
        }
    }

    /// F'(z) - B as a structured difference.
    pub fn delta_from(&self, z: &Iterate) -> DeltaJacobian {
        DeltaJacobian::between(&z.lambda_in, &z.s, &self.lambda, &self.s)
    }

    /// Refresh the selected pairs to the current iterate's values.
    pub fn patch(&mut self, z: &Iterate, indices: &[usize]) {
        for &i in indices {
            self.lambda[i] = z.lambda_in[i];
            self.s[i] = z.s[i];
        }
    }

    /// ||F'(z) - B||_F. Equals the euclidean distance between z and the
    /// shadow point, since they share x and lambda_eq.
    pub fn error_norm(&self, z: &Iterate) -> f64 {
        self.delta_from(z).frobenius()
    }
}

/// Indices picked for a refresh, ascending, with their pair magnitudes.
#[derive(Debug, Clone)]
pub struct UpdatePlan {
    pub indices: Vec<usize>,
    pub magnitudes: Vec<f64>,
}

/// The r pairs of largest magnitude; ties broken toward the lower index.
/// Returned ascending. r >= m_in selects everything.
pub fn select_indices(delta: &DeltaJacobian, r: usize) -> Vec<usize> {
    let mags = delta.pair_magnitudes();
    let mut order: Vec<usize> = (0..mags.len()).collect();
    order.sort_by(|&a, &b| mags[b].partial_cmp(&mags[a]).unwrap().then(a.cmp(&b)));
    let mut chosen: Vec<usize> = order.into_iter().take(r).collect();
    chosen.sort_unstable();
    chosen
}

pub fn plan_update(delta: &DeltaJacobian, r: usize) -> UpdatePlan {
    let mags = delta.pair_magnitudes();
    let indices = select_indices(delta, r);
    let magnitudes = indices.iter().map(|&i| mags[i]).collect();
    UpdatePlan {
        indices,
        magnitudes,
    }
}

/// Frobenius norm of the error left by the best rank-r correction:
/// sqrt of the sum of squared magnitudes below the r largest.
pub fn optimal_rank_error(delta: &DeltaJacobian, r: usize) -> f64 {
    let mut mags = delta.pair_magnitudes();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    mags.iter().skip(r).map(|m| m * m).sum::<f64>().sqrt()
}

/// Spectral norm of that error: the (r+1)-th largest magnitude, or zero
/// when r covers every pair.
pub fn spectral_error(delta: &DeltaJacobian, r: usize) -> f64 {
    let mut mags = delta.pair_magnitudes();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    mags.get(r).copied().unwrap_or(0.0)
}

/// Directional derivative of the merit ||F_mu|| at z along d:
/// F_mu' F'(z) d / ||F_mu||. For an exact Newton direction this is
/// -||F_mu|| exactly.
pub fn directional_derivative(p: &QpProblem, z: &Iterate, mu: f64, d: &Direction) -> f64 {
    let r = residual(p, z, mu);
    let jv = jacobian_matvec(p, &z.lambda_in, &z.s, &d.to_flat());
    let dot: f64 = r.iter().zip(jv.iter()).map(|(a, b)| a * b).sum();
    dot / norm2(&r)
}

#[derive(Debug, Clone, Copy)]
pub struct DescentReport {
    pub derivative: f64,
    pub is_descent: bool,
}

pub fn descent_check(p: &QpProblem, z: &Iterate, mu: f64, d: &Direction) -> DescentReport {
    let derivative = directional_derivative(p, z, mu, d);
    DescentReport {
        derivative,
        is_descent: derivative < 0.0,
    }
}

/// Both sides of the descent test for a direction d = -B^{-1} F_mu(z)
/// computed from a shadow system B: d is a descent direction for the merit
/// exactly when lhs > rhs, where lhs = ||F_mu||^2 and
/// rhs = F_mu' (B - F'(z)) B^{-1} F_mu. The difference rhs - lhs equals
/// ||F_mu|| times the directional derivative.
pub fn descent_criterion_terms(
    p: &QpProblem,
    z: &Iterate,
    mu: f64,
    shadow: &ShadowPoint,
    d: &Direction,
) -> (f64, f64) {
    let r = residual(p, z, mu);
    let lhs: f64 = r.iter().map(|v| v * v).sum();
    // B^{-1} F_mu = -d; (B - F'(z)) is zero outside the complementarity
    // rows, where row i holds (s_bar - s)_i and (lambda_bar - lambda)_i.
    let (n, m_eq, m_in) = (p.n(), p.m_eq(), p.m_in());
    let r4 = &r[n + m_eq + m_in..];
    let mut rhs = 0.0;
    for i in 0..m_in {
        let tw = -d.dlambda_in[i];
        let ts = -d.ds[i];
        rhs += r4[i] * ((shadow.s[i] - z.s[i]) * tw + (shadow.lambda[i] - z.lambda_in[i]) * ts);
    }
    (lhs, rhs)
}

/// Relative linear-model residual ||F'(z) d + F_mu|| / ||F_mu||. Zero for
/// an exact Newton direction; measures how inexact a shadow direction is.
pub fn inexact_residual(p: &QpProblem, z: &Iterate, mu: f64, d: &Direction) -> f64 {
    let r = residual(p, z, mu);
    let jv = jacobian_matvec(p, &z.lambda_in, &z.s, &d.to_flat());
    let num: f64 = r
        .iter()
        .zip(jv.iter())
        .map(|(a, b)| (a + b) * (a + b))
        .sum::<f64>()
        .sqrt();
    num / norm2(&r)
}
