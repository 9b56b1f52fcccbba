//! Helpers shared by the integration tests: a deterministic random
//! instance generator, dense oracles built straight from the KKT
//! definitions, and tolerance helpers. The oracles deliberately avoid the
//! library's assembly and solve paths so they can vouch for them.
#![allow(dead_code)]

use mniqp::kkt::Iterate;
use mniqp::sparse::SparseMat;
use mniqp::update::ShadowPoint;
use mniqp::QpProblem;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../problems")
        .join(format!("{name}.qps"))
}

/// Random convex instance with positive definite H, generic full-rank
/// constraint rows, and a strictly positive (lambda_in, s) iterate.
pub fn random_instance(
    n: usize,
    m_eq: usize,
    m_in: usize,
    rng: &mut ChaCha8Rng,
) -> (QpProblem, Iterate) {
    let g: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut h_trips = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let mut v = 0.0;
            for row in &g {
                v += row[i] * row[j];
            }
            v /= n as f64;
            if i == j {
                v += 0.5;
            }
            h_trips.push((i, j, v));
        }
    }
    let dense_rect = |rows: usize, cols: usize, rng: &mut ChaCha8Rng| {
        let trips: Vec<(usize, usize, f64)> = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .map(|(r, c)| (r, c, rng.random_range(-1.0..1.0)))
            .collect();
        SparseMat::from_triplets(rows, cols, &trips)
    };
    let p = QpProblem {
        name: format!("random-{n}x{m_eq}x{m_in}"),
        h: SparseMat::from_triplets(n, n, &h_trips),
        c: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        a_eq: dense_rect(m_eq, n, rng),
        b_eq: (0..m_eq).map(|_| rng.random_range(-1.0..1.0)).collect(),
        a_in: dense_rect(m_in, n, rng),
        b_in: (0..m_in).map(|_| rng.random_range(-1.0..1.0)).collect(),
        obj_offset: 0.0,
    };
    let z = Iterate {
        x: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        lambda_eq: (0..m_eq).map(|_| rng.random_range(-1.0..1.0)).collect(),
        lambda_in: (0..m_in).map(|_| rng.random_range(0.1..2.0)).collect(),
        s: (0..m_in).map(|_| rng.random_range(0.1..2.0)).collect(),
    };
    (p, z)
}

/// Shadow point near z: each pair nudged by up to `scale`, kept positive.
pub fn perturbed_shadow(z: &Iterate, scale: f64, rng: &mut ChaCha8Rng) -> ShadowPoint {
    let nudge = |v: f64, rng: &mut ChaCha8Rng| (v + rng.random_range(-scale..scale)).max(0.05);
    ShadowPoint {
        lambda: z.lambda_in.iter().map(|&v| nudge(v, rng)).collect(),
        s: z.s.iter().map(|&v| nudge(v, rng)).collect(),
    }
}

fn scatter(
    m: &mut DMatrix<f64>,
    mat: &SparseMat,
    r0: usize,
    c0: usize,
    sign: f64,
    transpose: bool,
) {
    for (i, j, v) in mat.iter() {
        if transpose {
            m[(r0 + j, c0 + i)] += sign * v;
        } else {
            m[(r0 + i, c0 + j)] += sign * v;
        }
    }
}

/// Jacobian of the perturbed KKT residual written out as a dense matrix,
/// block by block from the definition. Variable order (x, lambda_eq,
/// lambda_in, s); row order (stationarity, equality, inequality,
/// complementarity).
pub fn dense_jacobian(p: &QpProblem, lambda_in: &[f64], s: &[f64]) -> DMatrix<f64> {
    let (n, m_eq, m_in) = (p.n(), p.m_eq(), p.m_in());
    let dim = n + m_eq + 2 * m_in;
    let (oy, ow, os) = (n, n + m_eq, n + m_eq + m_in);
    let mut m = DMatrix::zeros(dim, dim);
    scatter(&mut m, &p.h, 0, 0, 1.0, false);
    scatter(&mut m, &p.a_eq, 0, oy, -1.0, true);
    scatter(&mut m, &p.a_in, 0, ow, -1.0, true);
    scatter(&mut m, &p.a_eq, oy, 0, 1.0, false);
    scatter(&mut m, &p.a_in, ow, 0, 1.0, false);
    for i in 0..m_in {
        m[(ow + i, os + i)] = -1.0;
        m[(os + i, ow + i)] = s[i];
        m[(os + i, os + i)] = lambda_in[i];
    }
    m
}

/// The perturbed KKT residual from its definition, dense arithmetic only.
pub fn dense_residual(p: &QpProblem, z: &Iterate, mu: f64) -> DVector<f64> {
    let (n, m_eq, m_in) = (p.n(), p.m_eq(), p.m_in());
    let dim = n + m_eq + 2 * m_in;
    let mut r = DVector::zeros(dim);
    let mut hx = vec![0.0; n];
    p.h.matvec(&z.x, &mut hx);
    let mut aty = vec![0.0; n];
    for (i, j, v) in p.a_eq.iter() {
        aty[j] += v * z.lambda_eq[i];
    }
    let mut atw = vec![0.0; n];
    for (i, j, v) in p.a_in.iter() {
        atw[j] += v * z.lambda_in[i];
    }
    for j in 0..n {
        r[j] = hx[j] + p.c[j] - aty[j] - atw[j];
    }
    let mut ax = vec![0.0; m_eq];
    p.a_eq.matvec(&z.x, &mut ax);
    for i in 0..m_eq {
        r[n + i] = ax[i] - p.b_eq[i];
    }
    let mut axi = vec![0.0; m_in];
    p.a_in.matvec(&z.x, &mut axi);
    for i in 0..m_in {
        r[n + m_eq + i] = axi[i] - z.s[i] - p.b_in[i];
        r[n + m_eq + m_in + i] = z.lambda_in[i] * z.s[i] - mu;
    }
    r
}

/// Largest componentwise error of b against a, relative to max(1, |a|).
pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / x.abs().max(1.0))
        .fold(0.0, f64::max)
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    let err = (a - b).abs() / a.abs().max(1.0);
    assert!(err <= tol, "{what}: {a} vs {b} (err {err:.3e} > {tol:.0e})");
}
