//! Reference dual solver for tiny problems, independent of the SMO path.
//!
//! Accelerated projected gradient over the full box-and-hyperplane feasible
//! set, followed by an exact solve of the KKT system on the variables the
//! gradient run left strictly inside the box.

use super::kernel::KernelSpec;
use super::model::{Mode, SvmParams};
use crate::error::{Error, Result};

pub const ORACLE_MAX_ROWS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// Dual objective in maximization form.
    pub objective: f64,
    /// `y_i alpha_i` (classification) or `alpha_i - alpha*_i` (regression).
    pub coefs: Vec<f64>,
    pub bias: f64,
}

impl OracleSolution {
    pub fn decision_value(&self, x: &[Vec<f64>], kernel: &KernelSpec, point: &[f64]) -> f64 {
        x.iter()
            .zip(&self.coefs)
            .map(|(r, c)| c * kernel.eval(r, point).expect("dimension checked by caller"))
            .sum::<f64>()
            + self.bias
    }
}

struct Qp {
    q: Vec<Vec<f64>>,
    p: Vec<f64>,
    s: Vec<f64>,
    c: f64,
}

impl Qp {
    fn objective(&self, v: &[f64]) -> f64 {
        let l = v.len();
        let mut f = 0.0;
        for a in 0..l {
            let qv: f64 = (0..l).map(|b| self.q[a][b] * v[b]).sum();
            f += v[a] * (0.5 * qv + self.p[a]);
        }
        f
    }

    fn gradient(&self, v: &[f64]) -> Vec<f64> {
        (0..v.len())
            .map(|a| self.p[a] + (0..v.len()).map(|b| self.q[a][b] * v[b]).sum::<f64>())
            .collect()
    }

    /// Euclidean projection onto `{0 <= v <= C, s'v = 0}` by bisection on
    /// the hyperplane multiplier.
    fn project(&self, u: &[f64]) -> Vec<f64> {
        let at = |lambda: f64| -> (Vec<f64>, f64) {
            let v: Vec<f64> = u
                .iter()
                .zip(&self.s)
                .map(|(x, s)| (x - lambda * s).clamp(0.0, self.c))
                .collect();
            let h = v.iter().zip(&self.s).map(|(a, s)| a * s).sum();
            (v, h)
        };
        let span = u.iter().map(|x| x.abs()).fold(0.0, f64::max) + self.c + 1.0;
        let (mut lo, mut hi) = (-span, span);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if at(mid).1 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(0.5 * (lo + hi)).0
    }

    /// KKT violation at `v`: how far the best ascent pair is from balanced.
    fn kkt_gap(&self, v: &[f64]) -> f64 {
        let g = self.gradient(v);
        let mut up = f64::NEG_INFINITY;
        let mut low = f64::INFINITY;
        for a in 0..v.len() {
            let val = -self.s[a] * g[a];
            let can_raise = if self.s[a] > 0.0 {
                v[a] < self.c
            } else {
                v[a] > 0.0
            };
            let can_lower = if self.s[a] > 0.0 {
                v[a] > 0.0
            } else {
                v[a] < self.c
            };
            if can_raise {
                up = up.max(val);
            }
            if can_lower {
                low = low.min(val);
            }
        }
        (up - low).max(0.0)
    }

    /// Accelerated projected gradient with restarts. Every few hundred steps
    /// the iterate is polished; a polished point meeting the KKT conditions
    /// ends the run.
    fn solve(&self) -> Vec<f64> {
        let l = self.p.len();
        let lipschitz = self
            .q
            .iter()
            .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
            .max(1e-12);
        let step = 1.0 / lipschitz;
        let mut v = vec![0.0; l];
        let mut y = v.clone();
        let mut t = 1.0f64;
        let mut f_prev = self.objective(&v);
        for iter in 1..=200_000 {
            if iter % 250 == 0 {
                if let Some(p) = self.certified(&v) {
                    return p;
                }
            }
            let g = self.gradient(&y);
            let u: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let next = self.project(&u);
            let f_next = self.objective(&next);
            if f_next > f_prev {
                // restart momentum
                t = 1.0;
                y = v.clone();
                continue;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = next
                .iter()
                .zip(&v)
                .map(|(a, b)| a + (t - 1.0) / t_next * (a - b))
                .collect();
            v = next;
            t = t_next;
            f_prev = f_next;
        }
        self.certified(&v).unwrap_or(v)
    }

    /// Tries progressively looser bound-detection thresholds and returns the
    /// first polished point that satisfies the KKT conditions.
    fn certified(&self, v: &[f64]) -> Option<Vec<f64>> {
        let f = self.objective(v);
        [1e-10, 1e-8, 1e-6, 1e-4, 1e-3].iter().find_map(|&rel| {
            self.polish(v, rel * self.c)
                .filter(|p| self.kkt_gap(p) < 1e-9 && self.objective(p) <= f + 1e-9)
        })
    }

    /// Solves the KKT system with bounded variables fixed; `None` when the
    /// system is singular or the result leaves the box.
    fn polish(&self, v: &[f64], tol: f64) -> Option<Vec<f64>> {
        let l = v.len();
        let mut fixed = v.to_vec();
        let mut free = Vec::new();
        for a in 0..l {
            if v[a] <= tol {
                fixed[a] = 0.0;
            } else if v[a] >= self.c - tol {
                fixed[a] = self.c;
            } else {
                free.push(a);
            }
        }
        if free.is_empty() {
            let h: f64 = fixed.iter().zip(&self.s).map(|(a, s)| a * s).sum();
            return (h.abs() < 1e-12).then_some(fixed);
        }
        let m = free.len() + 1;
        let mut mat = vec![vec![0.0; m + 1]; m];
        for (r, &a) in free.iter().enumerate() {
            for (k, &b) in free.iter().enumerate() {
                mat[r][k] = self.q[a][b];
            }
            mat[r][m - 1] = self.s[a];
            let bound: f64 = (0..l)
                .filter(|b| !free.contains(b))
                .map(|b| self.q[a][b] * fixed[b])
                .sum();
            mat[r][m] = -(self.p[a] + bound);
        }
        for (k, &b) in free.iter().enumerate() {
            mat[m - 1][k] = self.s[b];
        }
        mat[m - 1][m] = -(0..l)
            .filter(|b| !free.contains(b))
            .map(|b| self.s[b] * fixed[b])
            .sum::<f64>();
        let sol = gauss_solve(mat)?;
        for (k, &a) in free.iter().enumerate() {
            if sol[k] < -1e-12 || sol[k] > self.c + 1e-12 {
                return None;
            }
            fixed[a] = sol[k].clamp(0.0, self.c);
        }
        Some(fixed)
    }

    /// Bias from the KKT conditions at `v`.
    fn bias(&self, v: &[f64]) -> f64 {
        let g = self.gradient(v);
        let tol = 1e-9 * self.c;
        let free: Vec<f64> = (0..v.len())
            .filter(|&a| v[a] > tol && v[a] < self.c - tol)
            .map(|a| self.s[a] * g[a])
            .collect();
        let rho = if free.is_empty() {
            // midpoint of the interval allowed by the bounded variables
            let mut ub = f64::INFINITY;
            let mut lb = f64::NEG_INFINITY;
            for a in 0..v.len() {
                let sg = self.s[a] * g[a];
                let at_upper = v[a] >= self.c - tol;
                if (at_upper && self.s[a] < 0.0) || (!at_upper && self.s[a] > 0.0) {
                    ub = ub.min(sg);
                } else {
                    lb = lb.max(sg);
                }
            }
            0.5 * (ub + lb)
        } else {
            free.iter().sum::<f64>() / free.len() as f64
        };
        -rho
    }
}

fn gauss_solve(mut m: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        m[r][k] -= f * m[col][k];
                    }
                }
            }
        }
    }
    Some((0..n).map(|r| m[r][n] / m[r][r]).collect())
}

/// Maximizes the classification (`Mode::Svc`, targets = +-1 labels) or
/// regression dual for at most [`ORACLE_MAX_ROWS`] rows.
pub fn brute_force_dual(
    x: &[Vec<f64>],
    targets: &[f64],
    params: &SvmParams,
    mode: Mode,
) -> Result<OracleSolution> {
    let n = x.len();
    if n > ORACLE_MAX_ROWS {
        return Err(Error::invalid(format!(
            "the reference solver handles at most {ORACLE_MAX_ROWS} rows, got {n}"
        )));
    }
    if n == 0 || targets.len() != n {
        return Err(Error::invalid(
            "reference solver needs matching, non-empty rows and targets",
        ));
    }
    params.validate()?;
    let k = |a: usize, b: usize| params.kernel.eval(&x[a], &x[b]);
    let qp = match mode {
        Mode::Svc => {
            let mut q = vec![vec![0.0; n]; n];
            for a in 0..n {
                for b in 0..n {
                    q[a][b] = targets[a] * targets[b] * k(a, b)?;
                }
            }
            Qp {
                q,
                p: vec![-1.0; n],
                s: targets.to_vec(),
                c: params.c,
            }
        }
        Mode::Svr => {
            let l = 2 * n;
            let s: Vec<f64> = (0..l).map(|a| if a < n { 1.0 } else { -1.0 }).collect();
            let mut q = vec![vec![0.0; l]; l];
            for a in 0..l {
                for b in 0..l {
                    q[a][b] = s[a] * s[b] * k(a % n, b % n)?;
                }
            }
            let p = (0..l)
                .map(|a| {
                    if a < n {
                        params.epsilon - targets[a]
                    } else {
                        params.epsilon + targets[a - n]
                    }
                })
                .collect();
            Qp {
                q,
                p,
                s,
                c: params.c,
            }
        }
    };
    let v = qp.solve();
    let coefs = match mode {
        Mode::Svc => v.iter().zip(targets).map(|(a, y)| a * y).collect(),
        Mode::Svr => (0..n).map(|i| v[i] - v[i + n]).collect(),
    };
    Ok(OracleSolution {
        objective: -qp.objective(&v),
        coefs,
        bias: qp.bias(&v),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(c: f64) -> SvmParams {
        SvmParams::new(
            c,
            KernelSpec {
                coef0: 1.0,
                ..KernelSpec::polynomial(0.5)
            },
        )
    }

    #[test]
    fn refuses_large_problems() {
        let x = vec![vec![0.0]; 11];
        assert!(brute_force_dual(&x, &[1.0; 11], &params(1.0), Mode::Svr).is_err());
    }

    #[test]
    fn single_point_inside_tube() {
        let sol = brute_force_dual(&[vec![0.4, -0.2]], &[0.05], &params(1.0), Mode::Svr).unwrap();
        assert!(sol.objective.abs() < 1e-12);
        assert!(sol.coefs[0].abs() < 1e-12);
    }

    #[test]
    fn two_point_hard_margin_closed_form() {
        // with one point per class the equality constraint forces
        // alpha_1 = alpha_2 = 2 / (K11 + K22 - 2 K12)
        let x = vec![vec![1.0, 0.5], vec![-0.5, -1.0]];
        let p = params(100.0);
        let k = |a: usize, b: usize| p.kernel.eval(&x[a], &x[b]).unwrap();
        let expected = 2.0 / (k(0, 0) + k(1, 1) - 2.0 * k(0, 1));
        let sol = brute_force_dual(&x, &[1.0, -1.0], &p, Mode::Svc).unwrap();
        assert!(
            (sol.coefs[0] - expected).abs() < 1e-9,
            "{} vs {expected}",
            sol.coefs[0]
        );
        assert!((sol.coefs[1] + expected).abs() < 1e-9);
        assert!((sol.objective - expected).abs() < 1e-9);
        // both points sit on the margin
        assert!((sol.decision_value(&x, &p.kernel, &x[0]) - 1.0).abs() < 1e-9);
        assert!((sol.decision_value(&x, &p.kernel, &x[1]) + 1.0).abs() < 1e-9);
    }

    #[test]
    fn projection_is_feasible() {
        let qp = Qp {
            q: vec![vec![1.0, 0.0, 0.0]; 3],
            p: vec![0.0; 3],
            s: vec![1.0, -1.0, 1.0],
            c: 2.0,
        };
        let v = qp.project(&[5.0, -3.0, 0.7]);
        assert!(v.iter().all(|a| (0.0..=2.0).contains(a)));
        assert!((v[0] - v[1] + v[2]).abs() < 1e-12);
    }
}
