//! Source impact factors: how far perturbing one news node moves each
//! stock's predicted price, aggregated across stocks by trading volume.

use std::io::Write;

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::svm::SvmModel;

pub const DEFAULT_DELTA: f64 = 100.0;
/// Zero-based index of the probe row.
pub const PROBE_ROW: usize = 4;

/// One stock's trained regression model and its full (expanded) dataset.
#[derive(Debug, Clone, Copy)]
pub struct ImpactInput<'a> {
    pub stock_id: &'a str,
    pub model: &'a SvmModel,
    pub dataset: &'a Dataset,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactMatrix {
    /// Stocks that produced a row, in input order.
    pub stock_ids: Vec<String>,
    pub volumes: Vec<f64>,
    /// `m[i][j] = (perturbed[i][j] - base[i]) / base[i]`.
    pub m: Vec<Vec<f64>>,
    pub base: Vec<f64>,
    pub perturbed: Vec<Vec<f64>>,
    /// Skipped stocks with the reason.
    pub excluded: Vec<(String, String)>,
}

enum StockImpact {
    Row { base: f64, perturbed: Vec<f64> },
    Excluded(String),
}

fn stock_impact(input: &ImpactInput, delta: f64) -> Result<StockImpact> {
    let ds = input.dataset;
    let Some(probe) = ds.rows.get(PROBE_ROW) else {
        return Ok(StockImpact::Excluded(format!("only {} rows", ds.len())));
    };
    let base = input.model.predict_price(&probe.x)?;
    if base == 0.0 || !base.is_finite() {
        return Ok(StockImpact::Excluded(format!("base prediction is {base}")));
    }
    let mut x = probe.x.clone();
    let mut perturbed = Vec::with_capacity(ds.news_nodes);
    for j in 0..ds.news_nodes {
        x[j] += delta;
        perturbed.push(input.model.predict_price(&x)?);
        x[j] = probe.x[j];
    }
    Ok(StockImpact::Row { base, perturbed })
}

/// Perturbs each raw news node of every stock's fifth row by `delta`.
pub fn impact_matrix(inputs: &[ImpactInput], delta: f64) -> Result<ImpactMatrix> {
    if !delta.is_finite() {
        return Err(Error::invalid("delta must be finite"));
    }
    let nodes = inputs.first().map_or(0, |i| i.dataset.news_nodes);
    if let Some(bad) = inputs.iter().find(|i| i.dataset.news_nodes != nodes) {
        return Err(Error::Dimension {
            expected: nodes,
            actual: bad.dataset.news_nodes,
        });
    }
    let results: Vec<Result<StockImpact>> =
        inputs.par_iter().map(|i| stock_impact(i, delta)).collect();
    let mut out = ImpactMatrix {
        stock_ids: Vec::new(),
        volumes: Vec::new(),
        m: Vec::new(),
        base: Vec::new(),
        perturbed: Vec::new(),
        excluded: Vec::new(),
    };
    for (input, result) in inputs.iter().zip(results) {
        match result? {
            StockImpact::Row { base, perturbed } => {
                out.stock_ids.push(input.stock_id.to_string());
                out.volumes.push(input.volume);
                out.m
                    .push(perturbed.iter().map(|p| (p - base) / base).collect());
                out.base.push(base);
                out.perturbed.push(perturbed);
            }
            StockImpact::Excluded(reason) => {
                warn!("impact: excluding {}: {reason}", input.stock_id);
                out.excluded.push((input.stock_id.to_string(), reason));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceWeights {
    /// `z[j] = sum_i m[i][j] * volumes[i]`.
    pub z: Vec<f64>,
    pub volumes: Vec<f64>,
    /// `z` mapped linearly onto [0, 100].
    pub normalized: Vec<f64>,
    /// Source indices by descending `z`, ties by index.
    pub ranking: Vec<usize>,
    /// Set when every `z` is equal, so the ranking carries no information.
    pub degenerate: bool,
}

impl SourceWeights {
    /// One-based rank of each source.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.ranking.len()];
        for (pos, &j) in self.ranking.iter().enumerate() {
            ranks[j] = pos + 1;
        }
        ranks
    }

    pub fn write_csv<W: Write>(&self, source_ids: &[String], mut w: W) -> Result<()> {
        if source_ids.len() != self.z.len() {
            return Err(Error::Dimension {
                expected: self.z.len(),
                actual: source_ids.len(),
            });
        }
        let io = |e| Error::io("<impact report>", e);
        writeln!(
            w,
            "# newsvm impact-report v1 degenerate={}",
            self.degenerate
        )
        .map_err(io)?;
        writeln!(w, "source_id,z_raw,z_normalized,rank").map_err(io)?;
        for (j, rank) in self.ranks().into_iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{}",
                source_ids[j], self.z[j], self.normalized[j], rank
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

pub fn source_weights(m: &[Vec<f64>], volumes: &[f64]) -> Result<SourceWeights> {
    if m.len() != volumes.len() {
        return Err(Error::Dimension {
            expected: m.len(),
            actual: volumes.len(),
        });
    }
    if volumes.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid("volumes must be positive"));
    }
    let k = m.first().map_or(0, Vec::len);
    if let Some(row) = m.iter().find(|r| r.len() != k) {
        return Err(Error::Dimension {
            expected: k,
            actual: row.len(),
        });
    }
    let mut z = vec![0.0; k];
    for (row, v) in m.iter().zip(volumes) {
        for (zj, mij) in z.iter_mut().zip(row) {
            *zj += mij * v;
        }
    }
    let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let degenerate = hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater);
    let normalized = if degenerate {
        vec![0.0; k]
    } else {
        z.iter().map(|v| 100.0 * (v - lo) / (hi - lo)).collect()
    };
    let mut ranking: Vec<usize> = (0..k).collect();
    ranking.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
    Ok(SourceWeights {
        z,
        volumes: volumes.to_vec(),
        normalized,
        ranking,
        degenerate,
    })
}

impl ImpactMatrix {
    pub fn write_csv<W: Write>(&self, source_ids: &[String], mut w: W) -> Result<()> {
        let io = |e| Error::io("<impact matrix>", e);
        writeln!(w, "# newsvm impact-matrix v1").map_err(io)?;
        writeln!(w, "stock_id,volume,base_price,{}", source_ids.join(",")).map_err(io)?;
        for (i, row) in self.m.iter().enumerate() {
            if row.len() != source_ids.len() {
                return Err(Error::Dimension {
                    expected: source_ids.len(),
                    actual: row.len(),
                });
            }
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(
                w,
                "{},{},{},{}",
                self.stock_ids[i],
                self.volumes[i],
                self.base[i],
                cells.join(",")
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Average ranks (one-based) with ties sharing their mean rank.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation; `None` when either side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}
