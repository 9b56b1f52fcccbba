//! Shared fixtures for the criterion benches: a deterministic synthetic
//! problem generator and paths into the bundled QPS corpus.

use mniqp::kkt::Iterate;
use mniqp::sparse::SparseMat;
use mniqp::QpProblem;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

/// Path of a bundled QPS file, resolved relative to the workspace root.
pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../problems")
        .join(format!("{name}.qps"))
}

/// Random sparse convex QP that is strictly feasible at x = 1.
///
/// H is a jittered second-difference matrix, so positive definite; every
/// constraint row carries a few random entries plus a structural diagonal
/// entry that keeps A_eq full row rank. b_in is chosen so each inequality
/// holds with slack exactly one at x = 1.
pub fn synthetic_qp(n: usize, m_eq: usize, m_in: usize, seed: u64) -> QpProblem {
    assert!(m_eq < n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = vec![1.0; n];

    let mut h_trips = Vec::new();
    for i in 0..n {
        h_trips.push((i, i, 2.0 + rng.random::<f64>()));
        if i + 1 < n {
            h_trips.push((i, i + 1, -1.0));
            h_trips.push((i + 1, i, -1.0));
        }
    }
    let h = SparseMat::from_triplets(n, n, &h_trips);
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

    let row_trips = |r: usize, nnz: usize, rng: &mut ChaCha8Rng| {
        let mut trips = vec![(r, r % n, 1.0 + rng.random::<f64>())];
        for _ in 0..nnz {
            trips.push((r, rng.random_range(0..n), rng.random_range(-1.0..1.0)));
        }
        trips
    };

    let mut eq_trips = Vec::new();
    for r in 0..m_eq {
        eq_trips.extend(row_trips(r, 2, &mut rng));
    }
    let a_eq = SparseMat::from_triplets(m_eq, n, &eq_trips);
    let mut b_eq = vec![0.0; m_eq];
    a_eq.matvec(&x0, &mut b_eq);

    let mut in_trips = Vec::new();
    for r in 0..m_in {
        in_trips.extend(row_trips(r, 2, &mut rng));
    }
    let a_in = SparseMat::from_triplets(m_in, n, &in_trips);
    let mut ax = vec![0.0; m_in];
    a_in.matvec(&x0, &mut ax);
    let b_in: Vec<f64> = ax.iter().map(|v| v - 1.0).collect();

    QpProblem {
        name: format!("synthetic-{n}x{m_eq}x{m_in}"),
        h,
        c,
        a_eq,
        b_eq,
        a_in,
        b_in,
        obj_offset: 0.0,
    }
}

/// Strictly interior iterate for a problem from `synthetic_qp`.
pub fn interior_iterate(p: &QpProblem) -> Iterate {
    Iterate {
        x: vec![1.0; p.n()],
        lambda_eq: vec![0.0; p.m_eq()],
        lambda_in: vec![1.0; p.m_in()],
        s: vec![1.0; p.m_in()],
    }
}
