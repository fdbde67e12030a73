//! Brute-force references: loop-free path enumeration and a dense matrix
//! exponential. Slow on purpose; only for small instances.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::crn::{Crn, State, Target};
use crate::transient::FiniteCtmc;

/// Largest `reactions^k` the path enumeration accepts.
pub const PATH_GUARD: f64 = 1e7;
/// Largest chain the dense exponential accepts.
pub const EXPM_MAX_STATES: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("search space too large: {reactions}^{bound} exceeds {guard:e}")]
    TooManyPaths {
        reactions: usize,
        bound: usize,
        guard: f64,
    },
    #[error("dense exponential limited to {limit} states, got {states}")]
    TooManyStates { states: usize, limit: usize },
    #[error("invalid time bound {0}")]
    TimeBound(f64),
}

/// Loop-free witnesses as state sequences, in canonical (lexicographic) order.
pub type PathSet = BTreeSet<Vec<State>>;

/// Every loop-free path with exactly `k` transitions from the initial state
/// to a state satisfying `target`. Intermediate states may satisfy the target.
pub fn enumerate_witnesses(crn: &Crn, target: Target, k: usize) -> Result<PathSet, OracleError> {
    let m = crn.reactions().len();
    if (m as f64).powi(k as i32) > PATH_GUARD {
        return Err(OracleError::TooManyPaths {
            reactions: m,
            bound: k,
            guard: PATH_GUARD,
        });
    }
    let mut out = PathSet::new();
    let mut path = vec![crn.initial().clone()];
    dfs(crn, target, k, &mut path, &mut out);
    Ok(out)
}

fn dfs(crn: &Crn, target: Target, k: usize, path: &mut Vec<State>, out: &mut PathSet) {
    let last = path.last().expect("non-empty path");
    if path.len() == k + 1 {
        if target.holds(last) {
            out.insert(path.clone());
        }
        return;
    }
    // Populations of the target species move by at most one per step.
    let remaining = (k + 1 - path.len()) as u64;
    if last.get(target.species).abs_diff(target.value) > remaining {
        return;
    }
    for succ in crn.successors(last) {
        if path.contains(&succ.state) {
            continue;
        }
        path.push(succ.state);
        dfs(crn, target, k, path, out);
        path.pop();
    }
}

type Dense = Vec<Vec<f64>>;

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for (l, &x) in a[i].iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += x * b[l][j];
            }
        }
    }
    c
}

fn norm_inf(a: &Dense) -> f64 {
    a.iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(a)` by scaling and squaring around a Taylor series.
pub fn expm(a: &Dense) -> Dense {
    let n = a.len();
    let norm = norm_inf(a);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale /= 2.0;
        squarings += 1;
    }
    let scaled: Dense = a
        .iter()
        .map(|row| row.iter().map(|x| x * scale).collect())
        .collect();
    let mut result: Dense = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut term = result.clone();
    for k in 1..60 {
        term = matmul(&term, &scaled);
        let f = 1.0 / k as f64;
        term.iter_mut().flatten().for_each(|x| *x *= f);
        for (r, t) in result.iter_mut().flatten().zip(term.iter().flatten()) {
            *r += t;
        }
        if norm_inf(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// Time-bounded reachability via `exp(Q T)` of the target-absorbed generator.
pub fn expm_reach_probability(ctmc: &FiniteCtmc, time_bound: f64) -> Result<f64, OracleError> {
    let n = ctmc.len();
    if n > EXPM_MAX_STATES {
        return Err(OracleError::TooManyStates {
            states: n,
            limit: EXPM_MAX_STATES,
        });
    }
    if !(time_bound >= 0.0 && time_bound.is_finite()) {
        return Err(OracleError::TimeBound(time_bound));
    }
    let targets = ctmc.targets();
    if targets[ctmc.initial()] {
        return Ok(1.0);
    }
    let mut q = vec![vec![0.0; n]; n];
    for (i, j, r) in ctmc.transitions() {
        if targets[i] {
            continue;
        }
        q[i][j] += r * time_bound;
        q[i][i] -= r * time_bound;
    }
    let e = expm(&q);
    let p: f64 = (0..n).filter(|&j| targets[j]).map(|j| e[ctmc.initial()][j]).sum();
    Ok(p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn single(theta: u64, k: usize) -> PathSet {
        enumerate_witnesses(&models::single_species(), Target { species: 1, value: theta }, k).unwrap()
    }

    #[test]
    fn single_species_counts() {
        let two = single(42, 2);
        assert_eq!(two.len(), 1);
        assert_eq!(
            two.iter().next().unwrap(),
            &vec![State::from([1, 40]), State::from([1, 41]), State::from([1, 42])]
        );
        assert!(single(42, 4).is_empty());
        assert!(single(41, 2).is_empty());
        assert_eq!(single(40, 0).len(), 1);
        // 40 -> 39 -> 40 repeats a state; 40 -> 41 -> 42 -> 43 -> 42 too.
        assert_eq!(single(41, 3).len(), 0);
        assert_eq!(single(41, 1).len(), 1);
    }

    #[test]
    fn guard() {
        let crn = models::yeast();
        assert!(matches!(
            enumerate_witnesses(&crn, Target { species: 5, value: 50 }, 40),
            Err(OracleError::TooManyPaths { .. })
        ));
    }

    #[test]
    fn two_state() {
        let c = FiniteCtmc::new(2, &[(0, 1, 1.0)], 0, vec![false, true]).unwrap();
        let p = expm_reach_probability(&c, 1.0).unwrap();
        assert!((p - (1.0 - (-1.0f64).exp())).abs() < 1e-10);
        assert_eq!(expm_reach_probability(&c, 0.0).unwrap(), 0.0);
        let c = c.with_initial(1).unwrap();
        assert_eq!(expm_reach_probability(&c, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn expm_of_diagonal() {
        let e = expm(&vec![vec![-2.0, 0.0], vec![0.0, 3.0]]);
        assert!((e[0][0] - (-2.0f64).exp()).abs() < 1e-12);
        assert!((e[1][1] / 3.0f64.exp() - 1.0).abs() < 1e-12);
        assert!(e[0][1].abs() < 1e-15);
    }
}
