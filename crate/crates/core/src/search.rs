//! Exhaustive ("traverse") and split-wise ("approximate") searches over the
//! `(C, gamma)` grid.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{apply_scaler, fit_scaler, split_indices, Dataset, ScaledRows};
use crate::svm::{
    evaluate, train_svc_with, train_svr_with, InnerProducts, KernelKind, KernelSpec, Mode,
    SvmParams,
};

/// An inclusive arithmetic range `lo, lo + step, ..., hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl AxisRange {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite())
            || lo > hi
            || step <= 0.0
            || lo <= 0.0
        {
            return Err(Error::invalid(format!("bad search range {lo}:{hi}:{step}")));
        }
        Ok(AxisRange { lo, hi, step })
    }

    pub fn values(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        // rounding keeps 0.01 * 30 printing as 0.3
        (0..count)
            .map(|k| ((self.lo + k as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }
}

impl std::str::FromStr for AxisRange {
    type Err = Error;

    /// Parses `lo:hi:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::invalid(format!("bad range `{s}`, expected lo:hi:step")))?;
        match parts[..] {
            [lo, hi, step] => AxisRange::new(lo, hi, step),
            _ => Err(Error::invalid(format!(
                "bad range `{s}`, expected lo:hi:step"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub c: AxisRange,
    pub g: AxisRange,
}

impl Default for Grid {
    /// C in [1, 25] by 1, gamma in [0.01, 0.30] by 0.01.
    fn default() -> Self {
        Grid {
            c: AxisRange {
                lo: 1.0,
                hi: 25.0,
                step: 1.0,
            },
            g: AxisRange {
                lo: 0.01,
                hi: 0.30,
                step: 0.01,
            },
        }
    }
}

impl Grid {
    /// All `(c, g)` cells, C-major.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let gs = self.g.values();
        self.c
            .values()
            .into_iter()
            .flat_map(|c| gs.iter().map(move |&g| (c, g)))
            .collect()
    }
}

/// Everything about a training run except `C` and `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub mode: Mode,
    pub kernel: KernelKind,
    pub coef0: f64,
    pub degree: u32,
    pub epsilon: f64,
    pub tolerance: f64,
    pub train_fraction: f64,
}

impl SearchConfig {
    pub fn new(mode: Mode) -> Self {
        let k = mode.default_kernel(1.0);
        SearchConfig {
            mode,
            kernel: k.kind,
            coef0: k.coef0,
            degree: k.degree,
            epsilon: SvmParams::DEFAULT_EPSILON,
            tolerance: SvmParams::DEFAULT_TOLERANCE,
            train_fraction: crate::features::DEFAULT_TRAIN_FRACTION,
        }
    }

    pub fn params(&self, c: f64, g: f64) -> SvmParams {
        SvmParams {
            c,
            epsilon: self.epsilon,
            kernel: KernelSpec {
                kind: self.kernel,
                gamma: g,
                coef0: self.coef0,
                degree: self.degree,
            },
            tolerance: self.tolerance,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub c: f64,
    pub g: f64,
    /// Split-averaged metrics.
    pub acc: Option<f64>,
    pub mse: f64,
    pub scc: f64,
    /// False when any split's training ran out of iterations.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub mode: Mode,
    pub cells: Vec<CellResult>,
    pub best: Option<(f64, f64)>,
    pub splits_used: usize,
    pub seed: u64,
}

impl SearchResult {
    pub fn cell(&self, c: f64, g: f64) -> Option<&CellResult> {
        self.cells.iter().find(|r| r.c == c && r.g == g)
    }

    pub fn best_cell(&self) -> Option<&CellResult> {
        self.best.and_then(|(c, g)| self.cell(c, g))
    }

    /// Between-level variance of the selection metric along gamma and
    /// along C, as `(gamma, c)`.
    pub fn factor_variance(&self) -> (f64, f64) {
        let cells: Vec<&CellResult> = self.cells.iter().filter(|r| r.converged).collect();
        let metric = |r: &CellResult| metric_value(self.mode, r);
        let between = |key: &dyn Fn(&CellResult) -> f64| {
            let mut groups: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
            for r in &cells {
                let e = groups.entry(key(r).to_bits()).or_insert((0.0, 0));
                e.0 += metric(r);
                e.1 += 1;
            }
            let means: Vec<f64> = groups.values().map(|(s, n)| s / *n as f64).collect();
            let grand = means.iter().sum::<f64>() / means.len() as f64;
            means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / means.len() as f64
        };
        (between(&|r| r.g), between(&|r| r.c))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<search report>", e);
        writeln!(
            w,
            "# newsvm search-report v1 mode={} splits={} seed={}",
            self.mode, self.splits_used, self.seed
        )
        .map_err(io)?;
        writeln!(w, "c,g,acc,mse,scc,converged").map_err(io)?;
        for r in &self.cells {
            let acc = r.acc.map_or(String::new(), |a| a.to_string());
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.c, r.g, acc, r.mse, r.scc, r.converged
            )
            .map_err(io)?;
        }
        match self.best {
            Some((c, g)) => writeln!(w, "best,{c},{g}"),
            None => writeln!(w, "best,,"),
        }
        .map_err(io)?;
        w.flush().map_err(io)
    }
}

/// The value each mode optimizes: accuracy for classification, MSE otherwise.
pub fn metric_value(mode: Mode, cell: &CellResult) -> f64 {
    match mode {
        Mode::Svc => cell.acc.unwrap_or(f64::NAN),
        Mode::Svr => cell.mse,
    }
}

fn better(mode: Mode, a: f64, b: f64) -> bool {
    match mode {
        Mode::Svc => a > b,
        Mode::Svr => a < b,
    }
}

/// Best converged cell; ties go to the smaller gamma, then the smaller C.
fn select_best(mode: Mode, cells: &[CellResult]) -> Option<(f64, f64)> {
    let mut order: Vec<&CellResult> = cells.iter().filter(|r| r.converged).collect();
    order.sort_by(|a, b| a.g.total_cmp(&b.g).then(a.c.total_cmp(&b.c)));
    let mut best: Option<&CellResult> = None;
    for r in order {
        let v = metric_value(mode, r);
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|b| better(mode, v, metric_value(mode, b))) {
            best = Some(r);
        }
    }
    best.map(|r| (r.c, r.g))
}

/// Seeds for `count` splits derived from one search seed.
pub fn split_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.next_u64()).collect()
}

/// A scaled train/test split plus the training inner products.
pub struct PreparedSplit {
    pub train: ScaledRows,
    pub test: ScaledRows,
    inner: InnerProducts,
}

impl PreparedSplit {
    pub fn new(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<Self> {
        let (train_idx, test_idx) = split_indices(dataset.len(), train_fraction, seed)?;
        let train_rows = dataset.select(&train_idx).rows;
        let test_rows = dataset.select(&test_idx).rows;
        let scaler = fit_scaler(&train_rows)?;
        let train = apply_scaler(&scaler, &train_rows)?;
        let test = apply_scaler(&scaler, &test_rows)?;
        let inner = InnerProducts::new(&train.x);
        Ok(PreparedSplit { train, test, inner })
    }

    fn targets(rows: &ScaledRows, mode: Mode) -> &[f64] {
        match mode {
            Mode::Svc => &rows.class,
            Mode::Svr => &rows.target,
        }
    }

    /// Trains on the training side and scores the test side.
    pub fn run(&self, mode: Mode, params: &SvmParams) -> Result<(crate::svm::Metrics, bool)> {
        let y = Self::targets(&self.train, mode);
        let model = match mode {
            Mode::Svc => train_svc_with(&self.train.x, y, params, Some(&self.inner))?,
            Mode::Svr => train_svr_with(&self.train.x, y, params, Some(&self.inner))?,
        };
        let preds = self
            .test
            .x
            .iter()
            .map(|x| model.predict(x))
            .collect::<Result<Vec<_>>>()?;
        let metrics = evaluate(&preds, Self::targets(&self.test, mode), mode)?;
        Ok((metrics, model.converged))
    }
}

fn evaluate_cell(
    splits: &[PreparedSplit],
    config: &SearchConfig,
    c: f64,
    g: f64,
) -> Result<CellResult> {
    let params = config.params(c, g);
    let mut acc = 0.0;
    let mut mse = 0.0;
    let mut scc = 0.0;
    let mut converged = true;
    for split in splits {
        let (m, ok) = split.run(config.mode, &params)?;
        acc += m.acc.unwrap_or(0.0);
        mse += m.mse;
        scc += m.scc;
        converged &= ok;
    }
    let k = splits.len() as f64;
    Ok(CellResult {
        c,
        g,
        acc: (config.mode == Mode::Svc).then_some(acc / k),
        mse: mse / k,
        scc: scc / k,
        converged,
    })
}

fn search_splits(
    splits: &[PreparedSplit],
    grid: &Grid,
    config: &SearchConfig,
) -> Result<Vec<CellResult>> {
    grid.cells()
        .into_par_iter()
        .map(|(c, g)| evaluate_cell(splits, config, c, g))
        .collect()
}

fn validate(dataset: &Dataset, config: &SearchConfig, count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::invalid("a search needs at least one split"));
    }
    crate::features::test_size(dataset.len(), config.train_fraction)?;
    config.params(1.0, 1.0).validate()
}

/// Scores every grid cell on the same `splits` seeded train/test splits and
/// averages the metrics.
pub fn traverse_search(
    dataset: &Dataset,
    grid: &Grid,
    config: &SearchConfig,
    seed: u64,
    splits: usize,
) -> Result<SearchResult> {
    validate(dataset, config, splits)?;
    let prepared = split_seeds(seed, splits)
        .into_iter()
        .map(|s| PreparedSplit::new(dataset, config.train_fraction, s))
        .collect::<Result<Vec<_>>>()?;
    let cells = search_splits(&prepared, grid, config)?;
    Ok(SearchResult {
        mode: config.mode,
        best: select_best(config.mode, &cells),
        cells,
        splits_used: splits,
        seed,
    })
}

/// Evaluates one explicitly given cell exactly as [`traverse_search`] would.
pub fn evaluate_single_cell(
    dataset: &Dataset,
    config: &SearchConfig,
    seed: u64,
    splits: usize,
    c: f64,
    g: f64,
) -> Result<CellResult> {
    validate(dataset, config, splits)?;
    let prepared = split_seeds(seed, splits)
        .into_iter()
        .map(|s| PreparedSplit::new(dataset, config.train_fraction, s))
        .collect::<Result<Vec<_>>>()?;
    evaluate_cell(&prepared, config, c, g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximateResult {
    /// Each group's own best cell; `None` if nothing converged.
    pub local_optima: Vec<Option<(f64, f64)>>,
    pub aggregate: Option<(f64, f64)>,
    pub seed: u64,
}

impl ApproximateResult {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<approximate report>", e);
        writeln!(
            w,
            "# newsvm approx-report v1 groups={} seed={}",
            self.local_optima.len(),
            self.seed
        )
        .map_err(io)?;
        writeln!(w, "group,c,g").map_err(io)?;
        for (k, opt) in self.local_optima.iter().enumerate() {
            match opt {
                Some((c, g)) => writeln!(w, "{k},{c},{g}"),
                None => writeln!(w, "{k},,"),
            }
            .map_err(io)?;
        }
        match self.aggregate {
            Some((c, g)) => writeln!(w, "aggregate,{c},{g}"),
            None => writeln!(w, "aggregate,,"),
        }
        .map_err(io)?;
        w.flush().map_err(io)
    }
}

/// Most frequent value; ties go to the smaller value.
fn mode_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut counts: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for v in values {
        counts.entry(v.to_bits()).or_insert((v, 0)).1 += 1;
    }
    counts
        .into_values()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.total_cmp(&a.0)))
        .map(|(v, _)| v)
}

/// Runs a one-split traverse per group and aggregates the local optima by
/// per-coordinate mode.
pub fn approximate_search(
    dataset: &Dataset,
    grid: &Grid,
    config: &SearchConfig,
    seed: u64,
    groups: usize,
) -> Result<ApproximateResult> {
    validate(dataset, config, groups)?;
    let local_optima = split_seeds(seed, groups)
        .into_iter()
        .map(|s| {
            let split = [PreparedSplit::new(dataset, config.train_fraction, s)?];
            let cells = search_splits(&split, grid, config)?;
            Ok(select_best(config.mode, &cells))
        })
        .collect::<Result<Vec<_>>>()?;
    let found: Vec<(f64, f64)> = local_optima.iter().flatten().copied().collect();
    let aggregate = match (
        mode_of(found.iter().map(|p| p.0)),
        mode_of(found.iter().map(|p| p.1)),
    ) {
        (Some(c), Some(g)) => Some((c, g)),
        _ => None,
    };
    Ok(ApproximateResult {
        local_optima,
        aggregate,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(c: f64, g: f64, acc: f64, mse: f64) -> CellResult {
        CellResult {
            c,
            g,
            acc: Some(acc),
            mse,
            scc: 0.0,
            converged: true,
        }
    }

    #[test]
    fn default_grid_shape() {
        let grid = Grid::default();
        assert_eq!(grid.c.values().len(), 25);
        let gs = grid.g.values();
        assert_eq!(gs.len(), 30);
        assert_eq!(gs[0], 0.01);
        assert_eq!(gs[29], 0.3);
        assert_eq!(grid.cells().len(), 750);
    }

    #[test]
    fn range_parsing() {
        let r: AxisRange = "1:5:2".parse().unwrap();
        assert_eq!(r.values(), vec![1.0, 3.0, 5.0]);
        assert!("1:5".parse::<AxisRange>().is_err());
        assert!("5:1:1".parse::<AxisRange>().is_err());
        assert!("1:5:0".parse::<AxisRange>().is_err());
    }

    #[test]
    fn ties_prefer_smaller_gamma_then_c() {
        let cells = vec![
            cell(1.0, 0.2, 0.7, 1.0),
            cell(2.0, 0.1, 0.7, 1.0),
            cell(1.0, 0.1, 0.7, 1.0),
        ];
        assert_eq!(select_best(Mode::Svc, &cells), Some((1.0, 0.1)));
        assert_eq!(select_best(Mode::Svr, &cells), Some((1.0, 0.1)));
    }

    #[test]
    fn non_converged_cells_are_skipped() {
        let mut cells = vec![cell(1.0, 0.1, 0.9, 0.1), cell(2.0, 0.1, 0.6, 0.5)];
        cells[0].converged = false;
        assert_eq!(select_best(Mode::Svc, &cells), Some((2.0, 0.1)));
        cells[1].converged = false;
        assert_eq!(select_best(Mode::Svc, &cells), None);
    }

    #[test]
    fn coordinate_mode() {
        assert_eq!(mode_of([0.2, 0.1, 0.2, 0.1].into_iter()), Some(0.1));
        assert_eq!(mode_of([0.3, 0.2, 0.3].into_iter()), Some(0.3));
        assert_eq!(mode_of(std::iter::empty()), None);
    }

    #[test]
    fn factor_variance_separates_axes() {
        let mut cells = Vec::new();
        for c in [1.0, 2.0] {
            for g in [0.1, 0.2] {
                cells.push(cell(c, g, 0.5 + g, 0.0));
            }
        }
        let r = SearchResult {
            mode: Mode::Svc,
            cells,
            best: None,
            splits_used: 1,
            seed: 0,
        };
        let (vg, vc) = r.factor_variance();
        assert!((vg - 0.0025).abs() < 1e-12);
        assert!(vc.abs() < 1e-12);
    }
}
