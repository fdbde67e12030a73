//! Truncated Poisson weights for uniformization.

use statrs::function::gamma::ln_gamma;

use super::TransientError;

/// Poisson(`rate`) probabilities on `left..=right`, together holding at least
/// `1 - epsilon` of the mass.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonWindow {
    pub rate: f64,
    pub left: usize,
    pub right: usize,
    pub weights: Vec<f64>,
    right_tail: f64,
}

impl PoissonWindow {
    /// Probability of exactly `k` jumps; zero outside the window.
    pub fn weight(&self, k: usize) -> f64 {
        if k < self.left || k > self.right {
            0.0
        } else {
            self.weights[k - self.left]
        }
    }

    /// Total probability inside the window.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Upper bound on the mass beyond `right`.
    pub fn right_tail_bound(&self) -> f64 {
        self.right_tail
    }
}

/// Bound on `Σ_{i>k} w_i` given `w_k`, valid once `k + 1 > rate`
/// (successive ratios `rate / (i + 1)` then shrink geometrically).
pub(crate) fn right_tail_from(rate: f64, k: usize, w_k: f64) -> f64 {
    let next = w_k * rate / (k + 1) as f64;
    let ratio = rate / (k + 2) as f64;
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    next / (1.0 - ratio)
}

/// Computes the Poisson window for `lambda_t` (the uniformization rate times
/// the time bound) with total truncation error at most `epsilon`.
///
/// Weights are evaluated from the mode outwards: the modal term in log space,
/// the rest by the ratio recurrences. Each side stops once a geometric bound
/// on its remaining tail drops below `epsilon / 2`.
pub fn fox_glynn(
    lambda_t: f64,
    epsilon: f64,
    max_right: usize,
) -> Result<PoissonWindow, TransientError> {
    if !(lambda_t >= 0.0 && lambda_t.is_finite()) {
        return Err(TransientError::InvalidParameter(format!("lambda_t = {lambda_t}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(TransientError::InvalidParameter(format!("epsilon = {epsilon}")));
    }
    if lambda_t == 0.0 {
        return Ok(PoissonWindow {
            rate: 0.0,
            left: 0,
            right: 0,
            weights: vec![1.0],
            right_tail: 0.0,
        });
    }
    if lambda_t > max_right as f64 {
        return Err(TransientError::IterationCap { cap: max_right });
    }
    let half = epsilon / 2.0;
    let mode = lambda_t.floor() as usize;
    let w_mode = (mode as f64 * lambda_t.ln() - lambda_t - ln_gamma(mode as f64 + 1.0)).exp();

    let mut right_side = Vec::new();
    let mut k = mode;
    let mut w = w_mode;
    let right_tail;
    loop {
        let tail = right_tail_from(lambda_t, k, w);
        if tail <= half {
            right_tail = tail;
            break;
        }
        if k + 1 > max_right {
            return Err(TransientError::IterationCap { cap: max_right });
        }
        w *= lambda_t / (k + 1) as f64;
        k += 1;
        right_side.push(w);
    }
    let right = k;

    let mut left_side = Vec::new();
    let mut k = mode;
    let mut w = w_mode;
    while k > 0 {
        let prev = w * k as f64 / lambda_t;
        let ratio = (k - 1) as f64 / lambda_t;
        if ratio < 1.0 && prev / (1.0 - ratio) <= half {
            break;
        }
        w = prev;
        k -= 1;
        left_side.push(w);
    }
    let left = k;

    left_side.reverse();
    let mut weights = left_side;
    weights.push(w_mode);
    weights.extend(right_side);
    // Rounding in the modal term can push the sum slightly out of range.
    let total: f64 = weights.iter().sum();
    // Margins keep the re-summed mass inside [1 - epsilon, 1].
    let floor = 1.0 - 0.99 * epsilon;
    let ceiling = (1.0f64 - 1e-14).max(floor);
    if total > ceiling || total < floor {
        let goal = total.clamp(floor, ceiling);
        weights.iter_mut().for_each(|x| *x *= goal / total);
    }
    Ok(PoissonWindow {
        rate: lambda_t,
        left,
        right,
        weights,
        right_tail,
    })
}
