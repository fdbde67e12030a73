//! Time-bounded reachability on finite CTMCs by uniformization.

pub mod explore;
pub mod poisson;

use std::collections::VecDeque;

use thiserror::Error;

pub use explore::{explore_bounded, BoundedSpace};
pub use poisson::{fox_glynn, PoissonWindow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransientError {
    #[error("transition {src} -> {dst} has invalid rate {rate}")]
    InvalidRate { src: usize, dst: usize, rate: f64 },
    #[error("self-loop on state {0}")]
    SelfLoop(usize),
    #[error("state index {index} out of range for {len} states")]
    OutOfRange { index: usize, len: usize },
    #[error("target vector has {got} entries for {len} states")]
    TargetLength { len: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("needs more than {cap} uniformization steps")]
    IterationCap { cap: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{states} states exceed the limit of {limit}")]
    TooLarge { states: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientOptions {
    /// Truncation error of the Poisson window; also the relative accuracy
    /// target when the probability is far below `epsilon`.
    pub epsilon: f64,
    /// Uniformization rate as a multiple of the largest exit rate.
    pub uniformization_factor: f64,
    pub max_iterations: usize,
}

impl Default for TransientOptions {
    fn default() -> Self {
        TransientOptions {
            epsilon: 1e-10,
            uniformization_factor: 1.02,
            max_iterations: 10_000_000,
        }
    }
}

/// A finite CTMC in compressed-row form with a point-mass initial
/// distribution and a target set.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteCtmc {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    rates: Vec<f64>,
    initial: usize,
    targets: Vec<bool>,
}

impl FiniteCtmc {
    /// Builds the chain from `(src, dst, rate)` triples; parallel entries are summed.
    pub fn new(
        len: usize,
        transitions: &[(usize, usize, f64)],
        initial: usize,
        targets: Vec<bool>,
    ) -> Result<Self, TransientError> {
        if initial >= len {
            return Err(TransientError::OutOfRange { index: initial, len });
        }
        if targets.len() != len {
            return Err(TransientError::TargetLength {
                len,
                got: targets.len(),
            });
        }
        let mut sorted = transitions.to_vec();
        for &(src, dst, rate) in &sorted {
            if src >= len || dst >= len {
                return Err(TransientError::OutOfRange {
                    index: src.max(dst),
                    len,
                });
            }
            if src == dst {
                return Err(TransientError::SelfLoop(src));
            }
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(TransientError::InvalidRate { src, dst, rate });
            }
        }
        sorted.sort_by_key(|&(s, d, _)| (s, d));
        let mut row_start = vec![0; len + 1];
        let mut cols = Vec::with_capacity(sorted.len());
        let mut rates: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(src, dst, rate) in &sorted {
            if last == Some((src, dst)) {
                *rates.last_mut().unwrap() += rate;
                continue;
            }
            last = Some((src, dst));
            cols.push(dst);
            rates.push(rate);
            row_start[src + 1] += 1;
        }
        for i in 0..len {
            row_start[i + 1] += row_start[i];
        }
        Ok(FiniteCtmc {
            row_start,
            cols,
            rates,
            initial,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn targets(&self) -> &[bool] {
        &self.targets
    }

    pub fn row(&self, state: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_start[state]..self.row_start[state + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.rates[range].iter().copied())
    }

    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.len()).flat_map(move |s| self.row(s).map(move |(d, r)| (s, d, r)))
    }

    pub fn transition_count(&self) -> usize {
        self.cols.len()
    }

    pub fn exit_rate(&self, state: usize) -> f64 {
        self.row(state).map(|(_, r)| r).sum()
    }

    pub fn max_exit_rate(&self) -> f64 {
        (0..self.len()).map(|s| self.exit_rate(s)).fold(0.0, f64::max)
    }

    /// Same chain with another initial state.
    pub fn with_initial(&self, initial: usize) -> Result<Self, TransientError> {
        if initial >= self.len() {
            return Err(TransientError::OutOfRange {
                index: initial,
                len: self.len(),
            });
        }
        Ok(FiniteCtmc {
            initial,
            ..self.clone()
        })
    }

    /// Removes every transition leaving a target state.
    pub fn make_absorbing(&self) -> FiniteCtmc {
        let kept: Vec<(usize, usize, f64)> = self
            .transitions()
            .filter(|&(s, _, _)| !self.targets[s])
            .collect();
        FiniteCtmc::new(self.len(), &kept, self.initial, self.targets.clone())
            .expect("subset of a valid chain")
    }

    /// States from which some target is reachable.
    fn can_reach_target(&self) -> Vec<bool> {
        let mut incoming = vec![Vec::new(); self.len()];
        for (s, d, _) in self.transitions() {
            incoming[d].push(s);
        }
        let mut seen = self.targets.clone();
        let mut queue: VecDeque<usize> = (0..self.len()).filter(|&i| seen[i]).collect();
        while let Some(n) = queue.pop_front() {
            for &p in &incoming[n] {
                if !seen[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        seen
    }

    /// Probability of reaching a target state within `time_bound`, with default options.
    pub fn reach_probability(&self, time_bound: f64) -> Result<f64, TransientError> {
        self.reach_probability_with(time_bound, &TransientOptions::default())
    }

    /// Probability of reaching a target state within `time_bound`.
    ///
    /// The target-absorbed chain is uniformized at `Λ = factor * max exit rate`
    /// and the Poisson-weighted target masses `Σ w_k · (π0 P^k)(targets)` are
    /// accumulated with compensated summation. Every truncation drops
    /// non-negative terms, so the result never exceeds the exact value.
    pub fn reach_probability_with(
        &self,
        time_bound: f64,
        opts: &TransientOptions,
    ) -> Result<f64, TransientError> {
        if !(time_bound >= 0.0 && time_bound.is_finite()) {
            return Err(TransientError::InvalidParameter(format!(
                "time bound {time_bound}"
            )));
        }
        if !(opts.epsilon > 0.0 && opts.epsilon < 1.0) || opts.uniformization_factor < 1.0 {
            return Err(TransientError::InvalidParameter(format!("{opts:?}")));
        }
        if self.targets[self.initial] {
            return Ok(1.0);
        }
        let chain = self.make_absorbing();
        let relevant = chain.can_reach_target();
        if time_bound == 0.0 || !relevant[self.initial] {
            return Ok(0.0);
        }
        // States that cannot reach a target behave like one absorbing failure state.
        let live: Vec<bool> = (0..chain.len())
            .map(|i| relevant[i] && !chain.targets[i])
            .collect();
        let max_exit = (0..chain.len())
            .filter(|&i| live[i])
            .map(|i| chain.exit_rate(i))
            .fold(0.0, f64::max);
        if max_exit == 0.0 {
            return Ok(0.0);
        }
        let lambda = opts.uniformization_factor * max_exit;
        let qt = lambda * time_bound;
        let window = fox_glynn(qt, opts.epsilon, opts.max_iterations)?;

        // Uniformized transition probabilities of the live states.
        let n = chain.len();
        let stay: Vec<f64> = (0..n)
            .map(|i| if live[i] { 1.0 - chain.exit_rate(i) / lambda } else { 1.0 })
            .collect();

        let mut pi = vec![0.0; n];
        let mut next = vec![0.0; n];
        pi[self.initial] = 1.0;
        let mut target_mass = 0.0f64;
        let mut acc = Kahan::default();
        // Poisson mass still to come after step k, restricted to the window.
        let mut window_rest = window.mass();
        let mut weight = 0.0;
        let mut k = 0usize;
        loop {
            let w = if k < window.left {
                0.0
            } else if k <= window.right {
                window.weight(k)
            } else {
                weight * qt / k as f64
            };
            weight = w;
            if k >= window.left && k <= window.right {
                window_rest -= w;
            }
            acc.add(w * target_mass);

            let transient: f64 = (0..n).filter(|&i| live[i]).map(|i| pi[i]).sum();
            let current = acc.value();
            // Upper bound on the Poisson mass beyond k.
            let rest = if k < window.right {
                window_rest.max(0.0) + window.right_tail_bound()
            } else {
                poisson::right_tail_from(qt, k, w)
            };
            if k >= window.left {
                // Every later term lies in [target_mass, target_mass + transient] * weight.
                if (target_mass + transient) * rest <= opts.epsilon * current
                    || (transient == 0.0 && target_mass == 0.0)
                    || rest == 0.0
                {
                    break;
                }
                if transient * rest <= opts.epsilon * current {
                    let lower_rest = if k < window.right { window_rest.max(0.0) } else { 0.0 };
                    acc.add(target_mass * lower_rest);
                    break;
                }
            }
            if k >= opts.max_iterations {
                return Err(TransientError::IterationCap {
                    cap: opts.max_iterations,
                });
            }

            next.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..n {
                let p = pi[i];
                if p == 0.0 {
                    continue;
                }
                if !live[i] {
                    next[i] += p;
                    continue;
                }
                next[i] += p * stay[i];
                for (j, r) in chain.row(i) {
                    next[j] += p * r / lambda;
                }
            }
            std::mem::swap(&mut pi, &mut next);
            target_mass = (0..n).filter(|&i| chain.targets[i]).map(|i| pi[i]).sum();
            k += 1;
        }
        let p = acc.value();
        if !p.is_finite() {
            return Err(TransientError::Numerical(format!("probability evaluated to {p}")));
        }
        Ok(p.clamp(0.0, 1.0))
    }
}

/// Kahan-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_state(rate: f64) -> FiniteCtmc {
        FiniteCtmc::new(2, &[(0, 1, rate)], 0, vec![false, true]).unwrap()
    }

    #[test]
    fn construction_checks() {
        assert!(FiniteCtmc::new(2, &[(0, 0, 1.0)], 0, vec![false; 2]).is_err());
        assert!(FiniteCtmc::new(2, &[(0, 1, 0.0)], 0, vec![false; 2]).is_err());
        assert!(FiniteCtmc::new(2, &[(0, 2, 1.0)], 0, vec![false; 2]).is_err());
        assert!(FiniteCtmc::new(2, &[], 2, vec![false; 2]).is_err());
        assert!(FiniteCtmc::new(2, &[], 0, vec![false; 3]).is_err());
        let c = FiniteCtmc::new(3, &[(0, 1, 1.0), (0, 1, 2.0), (1, 2, 0.5)], 0, vec![false; 3]).unwrap();
        assert_eq!(c.transition_count(), 2);
        assert_eq!(c.exit_rate(0), 3.0);
    }

    #[test]
    fn initial_in_target() {
        let c = FiniteCtmc::new(2, &[(0, 1, 1.0)], 0, vec![true, false]).unwrap();
        assert_eq!(c.reach_probability(0.0).unwrap(), 1.0);
        assert_eq!(c.reach_probability(5.0).unwrap(), 1.0);
    }

    #[test]
    fn two_state_closed_form() {
        let p = two_state(1.0).reach_probability(1.0).unwrap();
        assert!((p - (1.0 - (-1.0f64).exp())).abs() < 1e-9, "{p}");
        assert!((p - 0.632_120_558_83).abs() < 1e-9);
        assert_eq!(two_state(1.0).reach_probability(0.0).unwrap(), 0.0);
    }

    #[test]
    fn absorbing_removes_target_rows() {
        let c = FiniteCtmc::new(3, &[(0, 1, 1.0), (1, 2, 1.0), (1, 0, 2.0)], 0, vec![false, true, false]).unwrap();
        let a = c.make_absorbing();
        assert_eq!(a.exit_rate(1), 0.0);
        assert_eq!(a.exit_rate(0), 1.0);
        // Already absorbing target: unchanged.
        let b = two_state(1.0);
        assert_eq!(b.make_absorbing(), b);
    }

    #[test]
    fn unreachable_target() {
        let c = FiniteCtmc::new(3, &[(0, 1, 1.0), (1, 0, 1.0)], 0, vec![false, false, true]).unwrap();
        assert_eq!(c.reach_probability(10.0).unwrap(), 0.0);
    }

    #[test]
    fn deep_chain_tiny_probability() {
        // 120 unit-rate hops in time 1: P = P(Poisson(1) >= 120), about 1/120!.
        let n = 121;
        let tr: Vec<_> = (0..120).map(|i| (i, i + 1, 1.0)).collect();
        let mut targets = vec![false; n];
        targets[120] = true;
        let c = FiniteCtmc::new(n, &tr, 0, targets).unwrap();
        let p = c.reach_probability(1.0).unwrap();
        let ln_expected = -1.0 - statrs::function::gamma::ln_gamma(121.0)
            + (1.0f64 + 1.0 / 121.0 + 1.0 / (121.0 * 122.0)).ln();
        assert!(p > 0.0);
        assert!(((p.ln() - ln_expected) / ln_expected).abs() < 1e-6, "{p:e}");
    }

    #[test]
    fn stiff_chain_finishes() {
        // A fast loop next to a slow exit: stops once the transient mass is drained.
        let c = FiniteCtmc::new(
            4,
            &[(0, 1, 1e5), (1, 0, 1e5), (0, 2, 1.0), (1, 3, 1.0)],
            0,
            vec![false, false, true, false],
        )
        .unwrap();
        let p = c.reach_probability(10.0).unwrap();
        let expected = 0.5 * (1.0 - (-10.0f64).exp());
        assert!((p - expected).abs() < 1e-4, "{p}");
    }

    proptest! {
        #[test]
        fn monotone_in_time(rates in proptest::collection::vec(0.1f64..10.0, 6), t in 0.01f64..5.0) {
            let tr = vec![(0, 1, rates[0]), (1, 0, rates[1]), (1, 2, rates[2]), (0, 3, rates[3]), (2, 1, rates[4]), (2, 3, rates[5])];
            let c = FiniteCtmc::new(4, &tr, 0, vec![false, false, false, true]).unwrap();
            let p1 = c.reach_probability(t).unwrap();
            let p2 = c.reach_probability(t * 1.5).unwrap();
            prop_assert!((0.0..=1.0).contains(&p1));
            // Each value carries up to epsilon relative truncation error.
            prop_assert!(p2 >= p1 - 2.0 * TransientOptions::default().epsilon * p1, "{p1} -> {p2}");
        }
    }
}
