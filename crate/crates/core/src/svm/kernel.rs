use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// `(gamma * <u, v> + coef0)^degree`
    Polynomial,
    /// `tanh(gamma * <u, v> + coef0)`
    Sigmoid,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::Polynomial => "polynomial",
            KernelKind::Sigmoid => "sigmoid",
        })
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polynomial" | "poly" => Ok(KernelKind::Polynomial),
            "sigmoid" => Ok(KernelKind::Sigmoid),
            other => Err(Error::invalid(format!("unknown kernel `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: f64,
    pub coef0: f64,
    /// Only used by the polynomial kernel.
    pub degree: u32,
}

impl KernelSpec {
    pub const DEFAULT_DEGREE: u32 = 3;

    pub fn polynomial(gamma: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Polynomial,
            gamma,
            coef0: 0.0,
            degree: Self::DEFAULT_DEGREE,
        }
    }

    pub fn sigmoid(gamma: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Sigmoid,
            gamma,
            coef0: 0.0,
            degree: Self::DEFAULT_DEGREE,
        }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        KernelSpec { gamma, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::invalid(format!(
                "kernel gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !self.coef0.is_finite() {
            return Err(Error::invalid("kernel coef0 must be finite"));
        }
        if self.degree == 0 {
            return Err(Error::invalid("polynomial degree must be at least 1"));
        }
        Ok(())
    }

    /// Kernel value given the inner product of the two vectors.
    #[inline]
    pub fn from_inner(&self, dot: f64) -> f64 {
        let z = self.gamma * dot + self.coef0;
        match self.kind {
            KernelKind::Polynomial => z.powi(self.degree as i32),
            KernelKind::Sigmoid => z.tanh(),
        }
    }

    pub fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != v.len() {
            return Err(Error::Dimension {
                expected: u.len(),
                actual: v.len(),
            });
        }
        Ok(self.from_inner(dot(u, v)))
    }
}

#[inline]
pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Pairwise inner products of a row set. Both supported kernels are
/// functions of `<u, v>`, so one of these serves every gamma.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerProducts {
    n: usize,
    values: Vec<f64>,
}

impl InnerProducts {
    pub fn new(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let d = dot(&rows[i], &rows[j]);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        InnerProducts { n, values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Kernel matrix access for the solver: a dense cache or on-demand rows.
pub(crate) enum Gram<'a> {
    Dense {
        n: usize,
        values: Vec<f64>,
    },
    Lazy {
        rows: &'a [Vec<f64>],
        kernel: KernelSpec,
        diag: Vec<f64>,
    },
}

/// Largest training set whose full kernel matrix is cached.
pub const GRAM_CACHE_LIMIT: usize = 4000;

impl<'a> Gram<'a> {
    pub(crate) fn new(
        rows: &'a [Vec<f64>],
        kernel: KernelSpec,
        inner: Option<&InnerProducts>,
    ) -> Self {
        let n = rows.len();
        if let Some(inner) = inner {
            return Gram::Dense {
                n,
                values: inner
                    .values()
                    .iter()
                    .map(|&d| kernel.from_inner(d))
                    .collect(),
            };
        }
        if n <= GRAM_CACHE_LIMIT {
            let inner = InnerProducts::new(rows);
            Gram::Dense {
                n,
                values: inner
                    .values
                    .into_iter()
                    .map(|d| kernel.from_inner(d))
                    .collect(),
            }
        } else {
            let diag = rows.iter().map(|r| kernel.from_inner(dot(r, r))).collect();
            Gram::Lazy { rows, kernel, diag }
        }
    }

    pub(crate) fn diag(&self, i: usize) -> f64 {
        match self {
            Gram::Dense { n, values } => values[i * n + i],
            Gram::Lazy { diag, .. } => diag[i],
        }
    }

    /// Row `i` of the kernel matrix, borrowing `buf` when computed on demand.
    pub(crate) fn row<'s>(&'s self, i: usize, buf: &'s mut Vec<f64>) -> &'s [f64] {
        match self {
            Gram::Dense { n, values } => &values[i * n..(i + 1) * n],
            Gram::Lazy { rows, kernel, .. } => {
                buf.clear();
                buf.extend(rows.iter().map(|r| kernel.from_inner(dot(&rows[i], r))));
                buf
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_examples() {
        let k = KernelSpec::polynomial(1.0);
        assert_eq!(k.eval(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        let k = KernelSpec::polynomial(0.5);
        assert!((k.eval(&[1.0, 2.0], &[3.0, 4.0]).unwrap() - 166.375).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_example() {
        let k = KernelSpec::sigmoid(1.0);
        assert_eq!(k.eval(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        let k = KernelSpec {
            coef0: -0.5,
            ..KernelSpec::sigmoid(0.25)
        };
        assert!(
            (k.eval(&[1.0, 2.0], &[3.0, 4.0]).unwrap() - (0.25f64 * 11.0 - 0.5).tanh()).abs()
                < 1e-15
        );
    }

    #[test]
    fn dimension_mismatch() {
        assert!(KernelSpec::polynomial(1.0)
            .eval(&[1.0], &[1.0, 2.0])
            .is_err());
    }

    #[test]
    fn validation() {
        assert!(KernelSpec::polynomial(0.0).validate().is_err());
        assert!(KernelSpec {
            degree: 0,
            ..KernelSpec::polynomial(1.0)
        }
        .validate()
        .is_err());
        assert!(KernelSpec::sigmoid(0.1).validate().is_ok());
        assert_eq!(
            "sigmoid".parse::<KernelKind>().unwrap(),
            KernelKind::Sigmoid
        );
        assert!("rbf".parse::<KernelKind>().is_err());
    }

    #[test]
    fn lazy_rows_match_dense() {
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|i| vec![i as f64, 1.0 - i as f64 * 0.3])
            .collect();
        let k = KernelSpec::polynomial(0.7);
        let dense = Gram::new(&rows, k, None);
        let lazy = Gram::Lazy {
            rows: &rows,
            kernel: k,
            diag: rows.iter().map(|r| k.from_inner(dot(r, r))).collect(),
        };
        let (mut b1, mut b2) = (Vec::new(), Vec::new());
        for i in 0..5 {
            assert_eq!(dense.row(i, &mut b1), lazy.row(i, &mut b2));
            assert_eq!(dense.diag(i), lazy.diag(i));
        }
    }
}
