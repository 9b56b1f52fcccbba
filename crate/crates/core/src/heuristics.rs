//! Refresh-set substitution heuristics and the refactorization schedule.
//!
//! Between full refactorizations the solver refreshes only r pairs of the
//! complementarity row per iteration, normally the r with the largest
//! pair magnitudes. The heuristics below override that choice with
//! indices whose multipliers or slacks blocked the previous step: those
//! are the constraints going active, and their Jacobian pairs go stale
//! fastest relative to their size.

use crate::problem::ProblemClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicMode {
    None,
    H1,
    H2,
}

impl HeuristicMode {
    pub fn label(self) -> &'static str {
        match self {
            HeuristicMode::None => "none",
            HeuristicMode::H1 => "h1",
            HeuristicMode::H2 => "h2",
        }
    }
}

/// How often to rebuild the factorization from the current iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefactorParam {
    /// Interval from the problem class: l = rank * m_in / d with d = 2
    /// (small), 10 (medium), 100 (large), rounded half away from zero,
    /// never below 1.
    Auto,
    Fixed(usize),
    /// Factorize once at the start and only patch afterwards.
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefactorSchedule {
    interval: Option<usize>,
}

/// The automatic interval for a problem of the given rank, inequality
/// count and size class.
pub fn auto_interval(rank: usize, m_in: usize, class: ProblemClass) -> usize {
    let divisor = match class {
        ProblemClass::Small => 2.0,
        ProblemClass::Medium => 10.0,
        ProblemClass::Large => 100.0,
    };
    let l = (rank as f64 * m_in as f64 / divisor).round();
    (l as usize).max(1)
}

impl RefactorSchedule {
    pub fn new(param: RefactorParam, rank: usize, m_in: usize, class: ProblemClass) -> Self {
        let interval = match param {
            RefactorParam::Auto => Some(auto_interval(rank, m_in, class)),
            RefactorParam::Fixed(l) => Some(l.max(1)),
            RefactorParam::Never => None,
        };
        RefactorSchedule { interval }
    }

    pub fn interval(&self) -> Option<usize> {
        self.interval
    }

    /// True when iteration k must rebuild from the current iterate.
    /// Iteration 0 always does; afterwards every interval + 1 iterations.
    pub fn refactor_due(&self, k: usize) -> bool {
        if k == 0 {
            return true;
        }
        match self.interval {
            Some(l) => k % (l + 1) == 0,
            None => false,
        }
    }
}

/// Smallest ratio vals[i] / -dirs[i] over the components moving toward
/// zero (dirs[i] < 0), with ties toward the lower index. This is the
/// index that limited, or came closest to limiting, the previous step.
fn blocking_index(vals: &[f64], dirs: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..vals.len() {
        if dirs[i] < 0.0 {
            let ratio = vals[i] / -dirs[i];
            if best.map_or(true, |(_, b)| ratio < b) {
                best = Some((i, ratio));
            }
        }
    }
    best
}

fn insert_sorted(indices: &mut Vec<usize>, idx: usize) {
    let pos = indices.partition_point(|&j| j < idx);
    indices.insert(pos, idx);
}

/// Position in `indices` of the member with the smallest magnitude,
/// ties toward the lower index.
fn weakest_member(indices: &[usize], mags: &[f64]) -> Option<usize> {
    indices
        .iter()
        .enumerate()
        .min_by(|(_, &a), (_, &b)| mags[a].partial_cmp(&mags[b]).unwrap().then(a.cmp(&b)))
        .map(|(pos, _)| pos)
}

/// First substitution heuristic. Finds the multiplier index that most
/// limited the previous step and, if its ratio was below one and it is
/// not already selected, swaps it in for the weakest selected member;
/// then the same for the slacks against the modified set. Fresh inserts
/// are not protected from the second swap.
pub fn h1_substitute(
    indices: &mut Vec<usize>,
    mags: &[f64],
    lambda_prev: &[f64],
    dlambda_prev: &[f64],
    s_prev: &[f64],
    ds_prev: &[f64],
) {
    for (vals, dirs) in [(lambda_prev, dlambda_prev), (s_prev, ds_prev)] {
        if let Some((idx, ratio)) = blocking_index(vals, dirs) {
            if ratio < 1.0 && !indices.contains(&idx) {
                if let Some(pos) = weakest_member(indices, mags) {
                    indices.remove(pos);
                    insert_sorted(indices, idx);
                }
            }
        }
    }
}

/// Second substitution heuristic. Collects every index whose multiplier
/// or slack would have hit zero within the previous full step, scores
/// each by the relative change of lambda_i / s_i against the pre-update
/// shadow, and swaps in the top min(r, |candidates|) of them. Candidates
/// already selected are kept without consuming a swap; evictions take the
/// original members in ascending magnitude order and never touch the
/// candidates inserted here.
#[allow(clippy::too_many_arguments)]
pub fn h2_substitute(
    indices: &mut Vec<usize>,
    mags: &[f64],
    lambda: &[f64],
    s: &[f64],
    shadow_lambda: &[f64],
    shadow_s: &[f64],
    lambda_prev: &[f64],
    dlambda_prev: &[f64],
    s_prev: &[f64],
    ds_prev: &[f64],
    r: usize,
) {
    let m = lambda.len();
    let mut in_h = vec![false; m];
    for (vals, dirs) in [(lambda_prev, dlambda_prev), (s_prev, ds_prev)] {
        for i in 0..m {
            if dirs[i] < 0.0 && vals[i] / -dirs[i] < 1.0 {
                in_h[i] = true;
            }
        }
    }
    let mut candidates: Vec<(usize, f64)> = (0..m)
        .filter(|&i| in_h[i])
        .map(|i| {
            let cur = lambda[i] / s[i];
            let old = shadow_lambda[i] / shadow_s[i];
            (i, (cur - old).abs() / cur)
        })
        .collect();
    candidates.sort_by(|(ia, sa), (ib, sb)| sb.partial_cmp(sa).unwrap().then(ia.cmp(ib)));
    candidates.truncate(r.min(candidates.len()));

    // original members in eviction order: ascending magnitude, then index
    let mut pool: Vec<usize> = indices.clone();
    pool.sort_by(|&a, &b| mags[a].partial_cmp(&mags[b]).unwrap().then(a.cmp(&b)));
    let mut next_evict = 0;

    for (c, _) in candidates {
        if indices.contains(&c) {
            continue;
        }
        // next original member still present
        let victim = loop {
            if next_evict >= pool.len() {
                return;
            }
            let v = pool[next_evict];
            next_evict += 1;
            if let Ok(pos) = indices.binary_search(&v) {
                break pos;
            }
        };
        indices.remove(victim);
        insert_sorted(indices, c);
    }
}
