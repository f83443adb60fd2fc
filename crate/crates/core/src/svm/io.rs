//! Plain-text model files.
//!
//! A `newsvm-model 1` line, then one `key value...` line per field, then
//! `support_vectors N` followed by N lines of `coef f1 .. fd`. Floats use
//! the shortest representation that parses back to the same bits.

use std::io::{BufRead, Write};

use super::kernel::KernelSpec;
use super::model::{SvmModel, SvmParams};
use crate::error::{Error, Result};
use crate::features::ScalingParams;

const MAGIC: &str = "newsvm-model 1";

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

pub(crate) fn write_model<W: Write>(m: &SvmModel, mut w: W) -> Result<()> {
    let io = |e| Error::io("<model>", e);
    let p = &m.params;
    let mut text = String::new();
    let mut line = |k: &str, v: String| {
        text.push_str(k);
        text.push(' ');
        text.push_str(&v);
        text.push('\n');
    };
    line("mode", m.mode.to_string());
    line("kernel", p.kernel.kind.to_string());
    line("gamma", p.kernel.gamma.to_string());
    line("coef0", p.kernel.coef0.to_string());
    line("degree", p.kernel.degree.to_string());
    line("c", p.c.to_string());
    line("epsilon", p.epsilon.to_string());
    line("tolerance", p.tolerance.to_string());
    line(
        "max_iter",
        p.max_iter.map_or("none".into(), |n| n.to_string()),
    );
    line("bias", m.bias.to_string());
    line("dual_objective", m.dual_objective.to_string());
    line("iterations", m.iterations.to_string());
    line("converged", m.converged.to_string());
    line("dim", m.dim().unwrap_or(0).to_string());
    match &m.scaler {
        Some(s) => {
            line("scaler", "1".into());
            line("scaler_mean", join(&s.mean));
            line("scaler_std", join(&s.std));
            line(
                "scaler_constant",
                join(&s.constant.iter().map(|&c| u8::from(c)).collect::<Vec<_>>()),
            );
            line("target_mean", s.target_mean.to_string());
            line("target_std", s.target_std.to_string());
        }
        None => line("scaler", "0".into()),
    }
    line("support_vectors", m.support_vectors.len().to_string());
    writeln!(w, "{MAGIC}").map_err(io)?;
    w.write_all(text.as_bytes()).map_err(io)?;
    for (sv, c) in m.support_vectors.iter().zip(&m.dual_coefs) {
        writeln!(w, "{c} {}", join(sv)).map_err(io)?;
    }
    w.flush().map_err(io)
}

struct Lines<'n, R> {
    inner: std::io::Lines<R>,
    line_no: usize,
    name: &'n str,
}

impl<R: BufRead> Lines<'_, R> {
    fn next_line(&mut self) -> Result<String> {
        self.line_no += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(self.err(e.to_string())),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.name, self.line_no, msg)
    }

    /// Reads the next `key value` line and returns the value.
    fn field(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.to_owned()),
            _ if line == key => Ok(String::new()),
            _ => Err(self.err(format!("expected `{key}`"))),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        v.trim()
            .parse()
            .map_err(|_| self.err(format!("bad value for `{key}`")))
    }

    fn floats(&mut self, key: &str, n: usize) -> Result<Vec<f64>> {
        let v = self.field(key)?;
        let out = v
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| self.err(format!("bad number in `{key}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if out.len() != n {
            return Err(self.err(format!("`{key}` needs {n} values")));
        }
        Ok(out)
    }
}

pub(crate) fn read_model<R: BufRead>(r: R, name: &str) -> Result<SvmModel> {
    let mut lines = Lines {
        inner: r.lines(),
        line_no: 0,
        name,
    };
    if lines.next_line()? != MAGIC {
        return Err(lines.err(format!("expected `{MAGIC}`")));
    }
    let mode = lines.field("mode")?.parse()?;
    let kind = lines.field("kernel")?.parse()?;
    let kernel = KernelSpec {
        kind,
        gamma: lines.parsed("gamma")?,
        coef0: lines.parsed("coef0")?,
        degree: lines.parsed("degree")?,
    };
    let c = lines.parsed("c")?;
    let epsilon = lines.parsed("epsilon")?;
    let tolerance = lines.parsed("tolerance")?;
    let max_iter = match lines.field("max_iter")?.as_str() {
        "none" => None,
        v => Some(v.parse().map_err(|_| lines.err("bad max_iter"))?),
    };
    let params = SvmParams {
        c,
        epsilon,
        kernel,
        tolerance,
        max_iter,
    };
    params.validate().map_err(|e| lines.err(e.to_string()))?;
    let bias = lines.parsed("bias")?;
    let dual_objective = lines.parsed("dual_objective")?;
    let iterations = lines.parsed("iterations")?;
    let converged = lines.parsed("converged")?;
    let dim: usize = lines.parsed("dim")?;
    let scaler = match lines.parsed::<u8>("scaler")? {
        0 => None,
        1 => {
            let mean = lines.floats("scaler_mean", dim)?;
            let std = lines.floats("scaler_std", dim)?;
            let constant = lines
                .floats("scaler_constant", dim)?
                .into_iter()
                .map(|v| v != 0.0)
                .collect();
            Some(ScalingParams {
                mean,
                std,
                constant,
                target_mean: lines.parsed("target_mean")?,
                target_std: lines.parsed("target_std")?,
            })
        }
        _ => return Err(lines.err("bad scaler flag")),
    };
    let count: usize = lines.parsed("support_vectors")?;
    let mut support_vectors = Vec::with_capacity(count);
    let mut dual_coefs = Vec::with_capacity(count);
    for _ in 0..count {
        let line = lines.next_line()?;
        let values = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| lines.err("bad support vector value"))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != dim + 1 {
            return Err(lines.err(format!("support vector needs {} values", dim + 1)));
        }
        dual_coefs.push(values[0]);
        support_vectors.push(values[1..].to_vec());
    }
    Ok(SvmModel {
        mode,
        params,
        support_vectors,
        dual_coefs,
        bias,
        scaler,
        dual_objective,
        iterations,
        converged,
    })
}
