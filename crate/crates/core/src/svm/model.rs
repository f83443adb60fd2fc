use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use super::kernel::{Gram, InnerProducts, KernelKind, KernelSpec};
use super::smo::{default_budget, Problem, Solution};
use crate::error::{Error, Result};
use crate::features::ScalingParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// C-SVC on the up/down tendency label.
    Svc,
    /// epsilon-SVR on the standardized next-day adjusted close.
    Svr,
}

impl Mode {
    /// Polynomial for classification, sigmoid for regression.
    pub fn default_kernel(self, gamma: f64) -> KernelSpec {
        match self {
            Mode::Svc => KernelSpec::polynomial(gamma),
            Mode::Svr => KernelSpec::sigmoid(gamma),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Svc => "svc",
            Mode::Svr => "svr",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svc" => Ok(Mode::Svc),
            "svr" => Ok(Mode::Svr),
            other => Err(Error::invalid(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub epsilon: f64,
    pub kernel: KernelSpec,
    /// KKT violation tolerance.
    pub tolerance: f64,
    /// Iteration budget; `None` uses `10 n^2` clamped to `[1e5, 1e7]`.
    pub max_iter: Option<usize>,
}

impl SvmParams {
    pub const DEFAULT_EPSILON: f64 = 0.1;
    pub const DEFAULT_TOLERANCE: f64 = 1e-3;

    pub fn new(c: f64, kernel: KernelSpec) -> Self {
        SvmParams {
            c,
            epsilon: Self::DEFAULT_EPSILON,
            kernel,
            tolerance: Self::DEFAULT_TOLERANCE,
            max_iter: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::invalid(format!(
                "cost C must be positive, got {}",
                self.c
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        self.kernel.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub mode: Mode,
    pub params: SvmParams,
    pub support_vectors: Vec<Vec<f64>>,
    /// `y_i alpha_i` for classification, `alpha_i - alpha*_i` for regression.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    /// Statistics the training rows were standardized with, if any.
    pub scaler: Option<ScalingParams>,
    /// Dual objective at the solution, in maximization form.
    pub dual_objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn check_rows(x: &[Vec<f64>], targets: &[f64]) -> Result<usize> {
    if x.len() != targets.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            actual: targets.len(),
        });
    }
    let dim = x.first().map_or(0, Vec::len);
    if let Some(r) = x.iter().find(|r| r.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            actual: r.len(),
        });
    }
    if x.iter().flatten().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::invalid("training data contains non-finite values"));
    }
    Ok(dim)
}

fn check_inner(inner: Option<&InnerProducts>, n: usize) -> Result<()> {
    match inner {
        Some(ip) if ip.len() != n => Err(Error::Dimension {
            expected: n,
            actual: ip.len(),
        }),
        _ => Ok(()),
    }
}

pub fn train_svc(x: &[Vec<f64>], labels: &[f64], params: &SvmParams) -> Result<SvmModel> {
    train_svc_with(x, labels, params, None)
}

/// As [`train_svc`], reusing precomputed inner products of `x`.
pub fn train_svc_with(
    x: &[Vec<f64>],
    labels: &[f64],
    params: &SvmParams,
    inner: Option<&InnerProducts>,
) -> Result<SvmModel> {
    params.validate()?;
    check_rows(x, labels)?;
    check_inner(inner, x.len())?;
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::invalid("classification labels must be +1 or -1"));
    }
    if !(labels.contains(&1.0) && labels.contains(&-1.0)) {
        return Err(Error::invalid(
            "classification needs both classes in the training rows",
        ));
    }
    let n = x.len();
    let gram = Gram::new(x, params.kernel, inner);
    let problem = Problem {
        gram: &gram,
        row: (0..n).collect(),
        sign: labels.to_vec(),
        linear: vec![-1.0; n],
        c: params.c,
        tolerance: params.tolerance,
        max_iter: params.max_iter.unwrap_or_else(|| default_budget(n)),
    };
    let sol = problem.solve();
    let coefs: Vec<f64> = sol.alpha.iter().zip(labels).map(|(a, y)| a * y).collect();
    Ok(finish(Mode::Svc, x, coefs, &sol, params))
}

pub fn train_svr(x: &[Vec<f64>], targets: &[f64], params: &SvmParams) -> Result<SvmModel> {
    train_svr_with(x, targets, params, None)
}

/// As [`train_svr`], reusing precomputed inner products of `x`.
pub fn train_svr_with(
    x: &[Vec<f64>],
    targets: &[f64],
    params: &SvmParams,
    inner: Option<&InnerProducts>,
) -> Result<SvmModel> {
    params.validate()?;
    check_rows(x, targets)?;
    check_inner(inner, x.len())?;
    if x.len() < 2 {
        return Err(Error::invalid(
            "regression needs at least two training rows",
        ));
    }
    let n = x.len();
    let gram = Gram::new(x, params.kernel, inner);
    let mut sign = vec![1.0; n];
    sign.extend(std::iter::repeat_n(-1.0, n));
    let mut linear: Vec<f64> = targets.iter().map(|z| params.epsilon - z).collect();
    linear.extend(targets.iter().map(|z| params.epsilon + z));
    let problem = Problem {
        gram: &gram,
        row: (0..n).chain(0..n).collect(),
        sign,
        linear,
        c: params.c,
        tolerance: params.tolerance,
        max_iter: params.max_iter.unwrap_or_else(|| default_budget(n)),
    };
    let sol = problem.solve();
    let coefs: Vec<f64> = (0..n).map(|i| sol.alpha[i] - sol.alpha[i + n]).collect();
    Ok(finish(Mode::Svr, x, coefs, &sol, params))
}

fn finish(
    mode: Mode,
    x: &[Vec<f64>],
    coefs: Vec<f64>,
    sol: &Solution,
    params: &SvmParams,
) -> SvmModel {
    if !sol.converged {
        log::warn!(
            "{mode} solver stopped after {} iterations without reaching tolerance {}",
            sol.iterations,
            params.tolerance
        );
    }
    let (support_vectors, dual_coefs) = x
        .iter()
        .zip(coefs)
        .filter(|(_, c)| *c != 0.0)
        .map(|(r, c)| (r.clone(), c))
        .unzip();
    SvmModel {
        mode,
        params: *params,
        support_vectors,
        dual_coefs,
        bias: -sol.rho,
        scaler: None,
        dual_objective: -sol.objective,
        iterations: sol.iterations,
        converged: sol.converged,
    }
}

impl SvmModel {
    pub fn dim(&self) -> Option<usize> {
        self.support_vectors
            .first()
            .map(Vec::len)
            .or_else(|| self.scaler.as_ref().map(ScalingParams::dim))
    }

    /// `f(x) = sum_i coef_i K(sv_i, x) + b` on an already scaled row.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if let Some(dim) = self.dim() {
            if dim != x.len() {
                return Err(Error::Dimension {
                    expected: dim,
                    actual: x.len(),
                });
            }
        }
        let k = &self.params.kernel;
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, c)| c * k.from_inner(super::kernel::dot(sv, x)))
            .sum::<f64>()
            + self.bias)
    }

    /// Class (+1 / -1, with `f = 0` mapped to +1) or regression value.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let f = self.decision_value(x)?;
        Ok(match self.mode {
            Mode::Svc if f >= 0.0 => 1.0,
            Mode::Svc => -1.0,
            Mode::Svr => f,
        })
    }

    /// Scales a raw feature row with the stored scaler, then predicts.
    pub fn predict_raw(&self, raw: &[f64]) -> Result<f64> {
        match &self.scaler {
            Some(s) => self.predict(&s.scale(raw)?),
            None => self.predict(raw),
        }
    }

    /// Regression prediction mapped back to price units.
    pub fn predict_price(&self, raw: &[f64]) -> Result<f64> {
        if self.mode != Mode::Svr {
            return Err(Error::invalid("price prediction needs a regression model"));
        }
        let z = self.predict_raw(raw)?;
        Ok(match &self.scaler {
            Some(s) => s.unscale_target(z),
            None => z,
        })
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        super::io::write_model(self, w)
    }

    pub fn read<R: BufRead>(r: R, name: &str) -> Result<SvmModel> {
        super::io::read_model(r, name)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SvmModel> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(std::io::BufReader::new(f), &path.display().to_string())
    }
}

/// Which kernel a mode uses unless overridden.
pub fn kernel_for(mode: Mode, kind: Option<KernelKind>, gamma: f64) -> KernelSpec {
    match kind {
        Some(KernelKind::Polynomial) => KernelSpec::polynomial(gamma),
        Some(KernelKind::Sigmoid) => KernelSpec::sigmoid(gamma),
        None => mode.default_kernel(gamma),
    }
}
