//! Sequential minimal optimization with maximal-violating-pair selection.
//!
//! Solves
//!
//! ```text
//! min  f(a) = 1/2 a'Qa + p'a
//! s.t. y'a = 0,  0 <= a_t <= C
//! ```
//!
//! where `Q_st = y_s y_t K(x_[s], x_[t])` and `[t]` maps a variable to its
//! training row. Classification uses one variable per row; regression uses
//! two (the `alpha` and `alpha*` halves).

use super::kernel::Gram;

/// Curvature substituted for non-positive second derivatives. The step then
/// runs to the box boundary, which is the best feasible point along a
/// concave direction.
const TAU: f64 = 1e-12;

pub(crate) struct Problem<'g> {
    pub gram: &'g Gram<'g>,
    /// Training row of each variable.
    pub row: Vec<usize>,
    /// +1 / -1 per variable.
    pub sign: Vec<f64>,
    pub linear: Vec<f64>,
    pub c: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    /// `f(a)` at the returned point (minimization form).
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Default iteration budget: `10 n^2` clamped to `[1e5, 1e7]`.
pub fn default_budget(n: usize) -> usize {
    n.saturating_mul(n)
        .saturating_mul(10)
        .clamp(100_000, 10_000_000)
}

impl Problem<'_> {
    fn q(&self, k_row: &[f64], s: usize, t: usize) -> f64 {
        self.sign[s] * self.sign[t] * k_row[self.row[t]]
    }

    fn in_up(&self, a: f64, s: f64) -> bool {
        if s > 0.0 {
            a < self.c
        } else {
            a > 0.0
        }
    }

    fn in_low(&self, a: f64, s: f64) -> bool {
        if s > 0.0 {
            a > 0.0
        } else {
            a < self.c
        }
    }

    /// Returns the maximal violating pair, or `None` once the KKT gap is
    /// below tolerance.
    fn select(&self, alpha: &[f64], grad: &[f64]) -> Option<(usize, usize)> {
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..alpha.len() {
            let v = -self.sign[t] * grad[t];
            if self.in_up(alpha[t], self.sign[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if self.in_low(alpha[t], self.sign[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < self.tolerance {
            None
        } else {
            Some((i, j))
        }
    }

    pub(crate) fn solve(&self) -> Solution {
        let l = self.sign.len();
        let c = self.c;
        let mut alpha = vec![0.0; l];
        let mut grad = self.linear.clone();
        let mut buf_i = Vec::new();
        let mut buf_j = Vec::new();
        let mut iterations = 0;
        let mut converged = false;
        #[cfg(debug_assertions)]
        let mut objective = 0.0;

        while iterations < self.max_iter {
            let Some((i, j)) = self.select(&alpha, &grad) else {
                converged = true;
                break;
            };
            iterations += 1;
            let k_i = self.gram.row(self.row[i], &mut buf_i);
            let k_j = self.gram.row(self.row[j], &mut buf_j);
            let q_ii = self.gram.diag(self.row[i]);
            let q_jj = self.gram.diag(self.row[j]);
            let q_ij = self.q(k_i, i, j);
            let (old_i, old_j) = (alpha[i], alpha[j]);
            let (mut a_i, mut a_j) = (old_i, old_j);

            if self.sign[i] != self.sign[j] {
                let quad = (q_ii + q_jj + 2.0 * q_ij).max(TAU);
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = a_i - a_j;
                a_i += delta;
                a_j += delta;
                if diff > 0.0 {
                    if a_j < 0.0 {
                        a_j = 0.0;
                        a_i = diff;
                    }
                } else if a_i < 0.0 {
                    a_i = 0.0;
                    a_j = -diff;
                }
                if diff > 0.0 {
                    if a_i > c {
                        a_i = c;
                        a_j = c - diff;
                    }
                } else if a_j > c {
                    a_j = c;
                    a_i = c + diff;
                }
            } else {
                let quad = (q_ii + q_jj - 2.0 * q_ij).max(TAU);
                let delta = (grad[i] - grad[j]) / quad;
                let sum = a_i + a_j;
                a_i -= delta;
                a_j += delta;
                if sum > c {
                    if a_i > c {
                        a_i = c;
                        a_j = sum - c;
                    }
                } else if a_j < 0.0 {
                    a_j = 0.0;
                    a_i = sum;
                }
                if sum > c {
                    if a_j > c {
                        a_j = c;
                        a_i = sum - c;
                    }
                } else if a_i < 0.0 {
                    a_i = 0.0;
                    a_j = sum;
                }
            }
            alpha[i] = a_i;
            alpha[j] = a_j;
            let (d_i, d_j) = (a_i - old_i, a_j - old_j);

            #[cfg(debug_assertions)]
            {
                let change = grad[i] * d_i
                    + grad[j] * d_j
                    + 0.5 * (q_ii * d_i * d_i + q_jj * d_j * d_j + 2.0 * q_ij * d_i * d_j);
                objective += change;
                debug_assert!(
                    change <= 1e-9 * (1.0 + objective.abs()),
                    "objective increased by {change} at iteration {iterations}"
                );
            }

            for t in 0..l {
                grad[t] += self.q(k_i, i, t) * d_i + self.q(k_j, j, t) * d_j;
            }
        }

        let objective = 0.5
            * alpha
                .iter()
                .zip(grad.iter().zip(&self.linear))
                .map(|(a, (g, p))| a * (g + p))
                .sum::<f64>();
        let rho = self.rho(&alpha, &grad);
        Solution {
            alpha,
            rho,
            objective,
            iterations,
            converged,
        }
    }

    fn rho(&self, alpha: &[f64], grad: &[f64]) -> f64 {
        let mut ub = f64::INFINITY;
        let mut lb = f64::NEG_INFINITY;
        let mut free_sum = 0.0;
        let mut free = 0usize;
        // Round-off residue next to a bound must not pin the bias.
        let eps = 1e-12 * self.c;
        for t in 0..alpha.len() {
            let yg = self.sign[t] * grad[t];
            let positive = self.sign[t] > 0.0;
            if alpha[t] >= self.c - eps {
                if positive {
                    lb = lb.max(yg);
                } else {
                    ub = ub.min(yg);
                }
            } else if alpha[t] <= eps {
                if positive {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                free_sum += yg;
            }
        }
        if free > 0 {
            free_sum / free as f64
        } else {
            (ub + lb) / 2.0
        }
    }
}
