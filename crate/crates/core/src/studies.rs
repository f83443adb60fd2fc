//! End-to-end runs: the file-driven training pipeline, the lag study, the
//! expansion study and the impact study.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{
    apply_scaler, assemble, fit_scaler, split_indices, Assembled, Dataset, FeatureLayout,
};
use crate::impact::{
    impact_matrix, source_weights, ImpactInput, ImpactMatrix, SourceWeights, PROBE_ROW,
};
use crate::market_data::{load_stock_series, StockSeries};
use crate::svm::{
    evaluate, kernel_for, train_svc, train_svr, KernelKind, Metrics, Mode, SvmModel, SvmParams,
};
use crate::textpipe::{
    daily_signals, load_corpus, DailySourceSignal, Lexicons, NewsDocument, Sources,
};

/// Overrides for the model hyperparameters; unset values use `C = 1`,
/// `gamma = 1 / dim` and the mode's kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSettings {
    pub c: Option<f64>,
    pub g: Option<f64>,
    pub kernel: Option<KernelKind>,
    pub coef0: Option<f64>,
    pub degree: Option<u32>,
    pub epsilon: f64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            c: None,
            g: None,
            kernel: None,
            coef0: None,
            degree: None,
            epsilon: SvmParams::DEFAULT_EPSILON,
        }
    }
}

impl ModelSettings {
    pub fn params(&self, mode: Mode, dim: usize) -> SvmParams {
        let g = self.g.unwrap_or(1.0 / dim.max(1) as f64);
        let mut kernel = kernel_for(mode, self.kernel, g);
        if let Some(coef0) = self.coef0 {
            kernel.coef0 = coef0;
        }
        if let Some(degree) = self.degree {
            kernel.degree = degree;
        }
        SvmParams {
            epsilon: self.epsilon,
            ..SvmParams::new(self.c.unwrap_or(1.0), kernel)
        }
    }
}

/// Fits a scaler on `train`, trains on the scaled rows and attaches the
/// scaler to the model.
pub fn train_model(train: &Dataset, mode: Mode, params: &SvmParams) -> Result<SvmModel> {
    let scaler = fit_scaler(&train.rows)?;
    let scaled = apply_scaler(&scaler, &train.rows)?;
    let mut model = match mode {
        Mode::Svc => train_svc(&scaled.x, &scaled.class, params)?,
        Mode::Svr => train_svr(&scaled.x, &scaled.target, params)?,
    };
    model.scaler = Some(scaler);
    Ok(model)
}

/// Scores a scaled model on raw rows. Regression errors are measured in
/// standardized target units.
pub fn score_model(model: &SvmModel, test: &Dataset) -> Result<Metrics> {
    let scaler = model
        .scaler
        .as_ref()
        .ok_or_else(|| Error::invalid("model carries no scaler"))?;
    let mut preds = Vec::with_capacity(test.len());
    let mut truths = Vec::with_capacity(test.len());
    for r in &test.rows {
        preds.push(model.predict_raw(&r.x)?);
        truths.push(match model.mode {
            Mode::Svc => f64::from(r.label_class),
            Mode::Svr => scaler.scale_target(r.label_price),
        });
    }
    evaluate(&preds, &truths, model.mode)
}

fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(dataset.len(), train_fraction, seed)?;
    Ok((dataset.select(&train), dataset.select(&test)))
}

/// `acc,mse,scc` cells honoring the mode: classification reports accuracy
/// only, regression MSE and SCC only.
fn metric_cells(mode: Mode, m: Option<&Metrics>) -> String {
    match (mode, m) {
        (Mode::Svc, Some(m)) => format!("{},,", m.acc.unwrap_or(f64::NAN)),
        (Mode::Svr, Some(m)) => format!(",{},{}", m.mse, m.scc),
        (_, None) => ",,".to_string(),
    }
}

fn status(error: &Option<String>) -> String {
    match error {
        None => "ok".to_string(),
        Some(e) => format!("error: {}", e.replace([',', '\n'], ";")),
    }
}

fn report_io(e: std::io::Error) -> Error {
    Error::io("<report>", e)
}

pub fn featurize_all(
    stocks: &[StockSeries],
    signals: &BTreeMap<NaiveDate, DailySourceSignal>,
    layout: FeatureLayout,
) -> Result<Vec<Assembled>> {
    stocks
        .iter()
        .map(|s| assemble(s, signals, layout))
        .collect()
}

// ---------------------------------------------------------------- inputs

/// Pipeline stage named in error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Collect,
    Preprocess,
    Train,
    Evaluate,
    Persist,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Collect => "collect",
            Stage::Preprocess => "preprocess",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Persist => "persist",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

pub trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputPaths {
    pub news: PathBuf,
    pub sentiment: PathBuf,
    pub stopwords: PathBuf,
    /// Source list, one id per line; defaults to the ids seen in the corpus.
    pub sources: Option<PathBuf>,
    /// A stock CSV or a directory of them.
    pub stocks: PathBuf,
}

impl InputPaths {
    /// The layout written by the synthetic generator.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        use crate::synth::*;
        let dir = dir.as_ref();
        InputPaths {
            news: dir.join(NEWS_FILE),
            sentiment: dir.join(SENTIMENT_FILE),
            stopwords: dir.join(STOPWORDS_FILE),
            sources: Some(dir.join(SOURCES_FILE)),
            stocks: dir.join(STOCKS_DIR),
        }
    }
}

/// Stock CSVs at `path`: the file itself, or every `*.csv` in the
/// directory sorted by name.
pub fn load_stocks(path: impl AsRef<Path>) -> Result<Vec<StockSeries>> {
    let path = path.as_ref();
    if !path.is_dir() {
        return Ok(vec![load_stock_series(path)?]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::invalid(format!(
            "no stock CSV files in {}",
            path.display()
        )));
    }
    files.iter().map(load_stock_series).collect()
}

#[derive(Debug, Clone)]
pub struct Inputs {
    pub docs: Vec<NewsDocument>,
    pub sources: Sources,
    pub lexicons: Lexicons,
    pub stocks: Vec<StockSeries>,
}

impl Inputs {
    pub fn load(paths: &InputPaths) -> std::result::Result<Inputs, StageError> {
        let lexicons = Lexicons::load(&paths.sentiment, &paths.stopwords).at(Stage::Collect)?;
        let docs = load_corpus(&paths.news).at(Stage::Collect)?;
        let sources = match &paths.sources {
            Some(p) => Sources::load(p),
            None => Sources::from_corpus(&docs),
        }
        .at(Stage::Collect)?;
        let stocks = load_stocks(&paths.stocks).at(Stage::Collect)?;
        Ok(Inputs {
            docs,
            sources,
            lexicons,
            stocks,
        })
    }

    pub fn signals(&self) -> Result<BTreeMap<NaiveDate, DailySourceSignal>> {
        daily_signals(&self.docs, &self.sources, &self.lexicons)
    }
}

// -------------------------------------------------------------- pipeline

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub layout: FeatureLayout,
    pub expanded: bool,
    pub mode: Mode,
    pub settings: ModelSettings,
    pub train_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRow {
    pub stock_id: String,
    pub train_rows: usize,
    pub test_rows: usize,
    pub params: SvmParams,
    pub metrics: Metrics,
    pub converged: bool,
    pub model_file: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub mode: Mode,
    pub seed: u64,
    pub rows: Vec<PipelineRow>,
}

impl PipelineReport {
    pub const HEADER: &'static str =
        "stock_id,mode,train_rows,test_rows,c,g,acc,mse,scc,converged,model";

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# newsvm pipeline-report v1 mode={} seed={}",
            self.mode, self.seed
        )
        .map_err(report_io)?;
        writeln!(w, "{}", Self::HEADER).map_err(report_io)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.stock_id,
                self.mode,
                r.train_rows,
                r.test_rows,
                r.params.c,
                r.params.kernel.gamma,
                metric_cells(self.mode, Some(&r.metrics)),
                r.converged,
                r.model_file
            )
            .map_err(report_io)?;
        }
        w.flush().map_err(report_io)
    }
}

pub const PIPELINE_REPORT_FILE: &str = "metrics.csv";

/// Featurizes every stock, trains one model per stock on a seeded split,
/// saves `<stock>.model` and `metrics.csv` into `out_dir` and returns the
/// report.
pub fn run_pipeline(
    inputs: &Inputs,
    config: &PipelineConfig,
    out_dir: &Path,
) -> std::result::Result<PipelineReport, StageError> {
    let signals = inputs.signals().at(Stage::Preprocess)?;
    let assembled = featurize_all(&inputs.stocks, &signals, config.layout).at(Stage::Preprocess)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(out_dir, e))
        .at(Stage::Persist)?;
    let mut rows = Vec::with_capacity(assembled.len());
    for (series, asm) in inputs.stocks.iter().zip(&assembled) {
        let ds = asm.view(config.expanded);
        let (train, test) = split(ds, config.train_fraction, config.seed).at(Stage::Preprocess)?;
        let params = config.settings.params(config.mode, ds.dim());
        let model = train_model(&train, config.mode, &params).at(Stage::Train)?;
        let metrics = score_model(&model, &test).at(Stage::Evaluate)?;
        let model_file = format!("{}.model", series.stock_id());
        model.save(out_dir.join(&model_file)).at(Stage::Persist)?;
        rows.push(PipelineRow {
            stock_id: series.stock_id().to_string(),
            train_rows: train.len(),
            test_rows: test.len(),
            params,
            metrics,
            converged: model.converged,
            model_file,
        });
    }
    let report = PipelineReport {
        mode: config.mode,
        seed: config.seed,
        rows,
    };
    let path = out_dir.join(PIPELINE_REPORT_FILE);
    let file = std::fs::File::create(&path)
        .map_err(|e| Error::io(&path, e))
        .at(Stage::Persist)?;
    report
        .write_csv(std::io::BufWriter::new(file))
        .at(Stage::Persist)?;
    Ok(report)
}

// ------------------------------------------------------------- lag study

#[derive(Debug, Clone, PartialEq)]
pub struct LagStudyConfig {
    pub num_sources: usize,
    pub news_window: usize,
    pub lags: Vec<usize>,
    pub expanded: bool,
    pub settings: ModelSettings,
    pub train_fraction: f64,
    pub seed: u64,
}

impl LagStudyConfig {
    pub fn new(num_sources: usize, seed: u64) -> Self {
        LagStudyConfig {
            num_sources,
            news_window: 1,
            lags: (1..=crate::features::MAX_LAG).collect(),
            expanded: false,
            settings: ModelSettings::default(),
            train_fraction: crate::features::DEFAULT_TRAIN_FRACTION,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagCell {
    pub stock_id: String,
    pub lag: usize,
    pub with_news: bool,
    pub mode: Mode,
    pub rows: usize,
    pub params: SvmParams,
    pub metrics: Option<Metrics>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagStudy {
    pub seed: u64,
    pub cells: Vec<LagCell>,
}

impl LagStudy {
    pub const HEADER: &'static str =
        "stock_id,lag,variant,mode,rows,c,g,acc,mse,scc,converged,status";

    pub fn cell(
        &self,
        stock_id: &str,
        lag: usize,
        with_news: bool,
        mode: Mode,
    ) -> Option<&LagCell> {
        self.cells.iter().find(|c| {
            c.stock_id == stock_id && c.lag == lag && c.with_news == with_news && c.mode == mode
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# newsvm lag-study v1 seed={}", self.seed).map_err(report_io)?;
        writeln!(w, "{}", Self::HEADER).map_err(report_io)?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                c.stock_id,
                c.lag,
                if c.with_news { "news" } else { "stock" },
                c.mode,
                c.rows,
                c.params.c,
                c.params.kernel.gamma,
                metric_cells(c.mode, c.metrics.as_ref()),
                c.converged,
                status(&c.error)
            )
            .map_err(report_io)?;
        }
        w.flush().map_err(report_io)
    }
}

fn lag_cell(
    series: &StockSeries,
    signals: &BTreeMap<NaiveDate, DailySourceSignal>,
    config: &LagStudyConfig,
    lag: usize,
    with_news: bool,
    mode: Mode,
) -> LagCell {
    let mut cell = LagCell {
        stock_id: series.stock_id().to_string(),
        lag,
        with_news,
        mode,
        rows: 0,
        params: config.settings.params(mode, 1),
        metrics: None,
        converged: false,
        error: None,
    };
    let run = |cell: &mut LagCell| -> Result<()> {
        let layout =
            FeatureLayout::new(config.num_sources, lag)?.with_news_window(config.news_window)?;
        let asm = assemble(series, signals, layout)?;
        let full = asm.view(config.expanded);
        let ds = if with_news {
            full.clone()
        } else {
            full.without_news()
        };
        cell.rows = ds.len();
        cell.params = config.settings.params(mode, ds.dim());
        let (train, test) = split(&ds, config.train_fraction, config.seed)?;
        let model = train_model(&train, mode, &cell.params)?;
        cell.metrics = Some(score_model(&model, &test)?);
        cell.converged = model.converged;
        Ok(())
    };
    if let Err(e) = run(&mut cell) {
        cell.error = Some(e.to_string());
    }
    cell
}

/// Every lag with and without news nodes, in both modes. Cells that fail
/// are reported with their error instead of aborting the study.
pub fn run_lag_study(
    stocks: &[StockSeries],
    signals: &BTreeMap<NaiveDate, DailySourceSignal>,
    config: &LagStudyConfig,
) -> Result<LagStudy> {
    if config.lags.is_empty() || stocks.is_empty() {
        return Err(Error::invalid(
            "lag study needs at least one lag and one stock",
        ));
    }
    let mut keys = Vec::new();
    for series in stocks {
        for &lag in &config.lags {
            for with_news in [true, false] {
                for mode in [Mode::Svc, Mode::Svr] {
                    keys.push((series, lag, with_news, mode));
                }
            }
        }
    }
    let cells = keys
        .into_par_iter()
        .map(|(s, lag, news, mode)| lag_cell(s, signals, config, lag, news, mode))
        .collect();
    Ok(LagStudy {
        seed: config.seed,
        cells,
    })
}

// ------------------------------------------------------- expansion study

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionConfig {
    pub layout: FeatureLayout,
    pub settings: ModelSettings,
    pub train_fraction: f64,
    pub seed: u64,
}

/// One stock and mode: the expanded and standard models share the test set
/// (the held-out days that have news).
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCell {
    pub stock_id: String,
    pub mode: Mode,
    pub expanded_train_rows: usize,
    pub standard_train_rows: usize,
    pub test_rows: usize,
    pub params: SvmParams,
    pub expanded: Option<Metrics>,
    pub standard: Option<Metrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionStudy {
    pub seed: u64,
    /// No stock had a day without news, so both variants coincide.
    pub degenerate: bool,
    pub cells: Vec<ExpansionCell>,
}

impl ExpansionStudy {
    pub const HEADER: &'static str =
        "stock_id,mode,expanded_train_rows,standard_train_rows,test_rows,c,g,\
expanded_acc,expanded_mse,expanded_scc,standard_acc,standard_mse,standard_scc,status";

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# newsvm expansion-study v1 seed={} degenerate={}",
            self.seed, self.degenerate
        )
        .map_err(report_io)?;
        writeln!(w, "{}", Self::HEADER).map_err(report_io)?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                c.stock_id,
                c.mode,
                c.expanded_train_rows,
                c.standard_train_rows,
                c.test_rows,
                c.params.c,
                c.params.kernel.gamma,
                metric_cells(c.mode, c.expanded.as_ref()),
                metric_cells(c.mode, c.standard.as_ref()),
                status(&c.error)
            )
            .map_err(report_io)?;
        }
        w.flush().map_err(report_io)
    }
}

fn expansion_cell(
    id: &str,
    asm: &Assembled,
    config: &ExpansionConfig,
    mode: Mode,
) -> ExpansionCell {
    let full = &asm.expanded;
    let params = config.settings.params(mode, full.dim());
    let mut cell = ExpansionCell {
        stock_id: id.to_string(),
        mode,
        expanded_train_rows: 0,
        standard_train_rows: 0,
        test_rows: 0,
        params,
        expanded: None,
        standard: None,
        error: None,
    };
    let run = |cell: &mut ExpansionCell| -> Result<()> {
        let (train_idx, test_idx) = split_indices(full.len(), config.train_fraction, config.seed)?;
        let news = |i: &&usize| full.rows[**i].has_news;
        let standard_idx: Vec<usize> = train_idx.iter().filter(news).copied().collect();
        let test_idx: Vec<usize> = test_idx.iter().filter(news).copied().collect();
        let test = full.select(&test_idx);
        cell.expanded_train_rows = train_idx.len();
        cell.standard_train_rows = standard_idx.len();
        cell.test_rows = test.len();
        let expanded_model = train_model(&full.select(&train_idx), mode, &cell.params)?;
        cell.expanded = Some(score_model(&expanded_model, &test)?);
        let standard_model = train_model(&full.select(&standard_idx), mode, &cell.params)?;
        cell.standard = Some(score_model(&standard_model, &test)?);
        Ok(())
    };
    if let Err(e) = run(&mut cell) {
        cell.error = Some(e.to_string());
    }
    cell
}

/// Trains with and without the zero-filled no-news days, in both modes.
pub fn run_expansion_study(
    stocks: &[StockSeries],
    signals: &BTreeMap<NaiveDate, DailySourceSignal>,
    config: &ExpansionConfig,
) -> Result<ExpansionStudy> {
    let assembled = featurize_all(stocks, signals, config.layout)?;
    let degenerate = assembled
        .iter()
        .all(|a| a.expanded.len() == a.standard.len());
    let keys: Vec<(usize, Mode)> = (0..stocks.len())
        .flat_map(|i| [(i, Mode::Svc), (i, Mode::Svr)])
        .collect();
    let cells = keys
        .into_par_iter()
        .map(|(i, mode)| expansion_cell(stocks[i].stock_id(), &assembled[i], config, mode))
        .collect();
    Ok(ExpansionStudy {
        seed: config.seed,
        degenerate,
        cells,
    })
}

// ---------------------------------------------------------- impact study

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactStudy {
    pub matrix: ImpactMatrix,
    pub weights: SourceWeights,
}

/// Trains one regression model per stock on its expanded dataset without
/// the probe row, then perturbs the probe row's news nodes.
pub fn run_impact_study(
    stocks: &[StockSeries],
    signals: &BTreeMap<NaiveDate, DailySourceSignal>,
    layout: FeatureLayout,
    settings: &ModelSettings,
    delta: f64,
) -> Result<ImpactStudy> {
    let assembled = featurize_all(stocks, signals, layout)?;
    let models = assembled
        .par_iter()
        .map(|asm| {
            let ds = &asm.expanded;
            if ds.len() <= PROBE_ROW {
                return Ok(None);
            }
            let train: Vec<usize> = (0..ds.len()).filter(|&i| i != PROBE_ROW).collect();
            let params = settings.params(Mode::Svr, ds.dim());
            train_model(&ds.select(&train), Mode::Svr, &params).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    let placeholder = SvmModel {
        mode: Mode::Svr,
        params: settings.params(Mode::Svr, 1),
        support_vectors: Vec::new(),
        dual_coefs: Vec::new(),
        bias: 0.0,
        scaler: None,
        dual_objective: 0.0,
        iterations: 0,
        converged: true,
    };
    let inputs: Vec<ImpactInput> = stocks
        .iter()
        .zip(&assembled)
        .zip(&models)
        .map(|((s, asm), m)| ImpactInput {
            stock_id: s.stock_id(),
            model: m.as_ref().unwrap_or(&placeholder),
            dataset: &asm.expanded,
            volume: s.total_volume() as f64,
        })
        .collect();
    let matrix = impact_matrix(&inputs, delta)?;
    if matrix.m.is_empty() {
        return Err(Error::invalid(
            "every stock was excluded from the impact matrix",
        ));
    }
    let weights = source_weights(&matrix.m, &matrix.volumes)?;
    Ok(ImpactStudy { matrix, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig, SynthOutput};

    fn synthetic(seed: u64, no_news: f64, stocks: usize) -> SynthOutput {
        let mut c = SynthConfig::planted(seed, 90, 4, stocks);
        c.no_news_probability = no_news;
        generate(&c).unwrap()
    }

    fn report_text(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn default_settings() {
        let p = ModelSettings::default().params(Mode::Svr, 30);
        assert_eq!(p.c, 1.0);
        assert_eq!(p.kernel.gamma, 1.0 / 30.0);
        assert_eq!(p.kernel.kind, KernelKind::Sigmoid);
        assert_eq!(
            ModelSettings::default().params(Mode::Svc, 4).kernel.kind,
            KernelKind::Polynomial
        );
        let o = ModelSettings {
            c: Some(3.0),
            g: Some(0.2),
            kernel: Some(KernelKind::Sigmoid),
            coef0: Some(1.0),
            degree: Some(2),
            epsilon: 0.5,
        }
        .params(Mode::Svc, 4);
        assert_eq!(
            (
                o.c,
                o.kernel.gamma,
                o.kernel.coef0,
                o.kernel.degree,
                o.epsilon
            ),
            (3.0, 0.2, 1.0, 2, 0.5)
        );
        assert_eq!(o.kernel.kind, KernelKind::Sigmoid);
    }

    #[test]
    fn lag_study_covers_every_cell_and_is_deterministic() {
        let out = synthetic(2, 0.0, 1);
        let signals = out.signals().unwrap();
        let mut config = LagStudyConfig::new(4, 7);
        config.lags = vec![1, 2, 3];
        let a = run_lag_study(&out.stocks, &signals, &config).unwrap();
        assert_eq!(a.cells.len(), 3 * 2 * 2);
        assert!(a.cells.iter().all(|c| c.error.is_none()));
        let svc = a.cell("SYN01", 1, true, Mode::Svc).unwrap();
        assert!(svc.metrics.unwrap().acc.is_some());
        let stock_only = a.cell("SYN01", 1, false, Mode::Svr).unwrap();
        assert_eq!(stock_only.params.kernel.gamma, 1.0);
        let b = run_lag_study(&out.stocks, &signals, &config).unwrap();
        let ta = report_text(|w| a.write_csv(w));
        assert_eq!(ta, report_text(|w| b.write_csv(w)));
        let mut lines = ta.lines();
        assert_eq!(lines.next(), Some("# newsvm lag-study v1 seed=7"));
        assert_eq!(lines.next(), Some(LagStudy::HEADER));
        let svc_line = lines.next().unwrap();
        assert!(svc_line.starts_with("SYN01,1,news,svc,"), "{svc_line}");
        assert!(
            svc_line.ends_with(",,,true,ok") || svc_line.ends_with(",,,false,ok"),
            "{svc_line}"
        );
    }

    #[test]
    fn lag_study_marks_failed_cells() {
        let out = synthetic(3, 0.0, 1);
        let mut config = LagStudyConfig::new(4, 1);
        config.lags = vec![1, 200];
        let study = run_lag_study(&out.stocks, &out.signals().unwrap(), &config).unwrap();
        let bad = study.cell("SYN01", 200, true, Mode::Svc).unwrap();
        assert!(bad.error.is_some() && bad.metrics.is_none());
        assert!(study
            .cell("SYN01", 1, true, Mode::Svc)
            .unwrap()
            .error
            .is_none());
        let text = report_text(|w| study.write_csv(w));
        assert!(text
            .lines()
            .any(|l| l.starts_with("SYN01,200,") && l.contains(",error: ")));
    }

    fn expansion(out: &SynthOutput) -> ExpansionStudy {
        let config = ExpansionConfig {
            layout: FeatureLayout::new(4, 2).unwrap(),
            settings: ModelSettings::default(),
            train_fraction: 0.8,
            seed: 5,
        };
        run_expansion_study(&out.stocks, &out.signals().unwrap(), &config).unwrap()
    }

    #[test]
    fn expansion_without_silent_days_is_degenerate() {
        let study = expansion(&synthetic(4, 0.0, 1));
        assert!(study.degenerate);
        for c in &study.cells {
            assert_eq!(c.expanded, c.standard);
            assert_eq!(c.expanded_train_rows, c.standard_train_rows);
        }
    }

    #[test]
    fn expansion_with_silent_days_trains_on_more_rows() {
        let out = synthetic(4, 0.3, 1);
        let a = expansion(&out);
        assert!(!a.degenerate);
        let svr = a.cells.iter().find(|c| c.mode == Mode::Svr).unwrap();
        assert!(svr.expanded_train_rows > svr.standard_train_rows);
        assert!(svr.expanded.is_some() && svr.standard.is_some());
        let text = report_text(|w| a.write_csv(w));
        assert_eq!(text, report_text(|w| expansion(&out).write_csv(w)));
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("# newsvm expansion-study v1 seed=5 degenerate=false")
        );
        assert_eq!(lines.next(), Some(ExpansionStudy::HEADER));
    }

    #[test]
    fn pipeline_round_trip_and_mode_contract() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        synthetic(6, 0.1, 2).write_to(&data).unwrap();
        let inputs = Inputs::load(&InputPaths::in_dir(&data)).unwrap();
        for mode in [Mode::Svc, Mode::Svr] {
            let config = PipelineConfig {
                layout: FeatureLayout::new(4, 3).unwrap(),
                expanded: false,
                mode,
                settings: ModelSettings::default(),
                train_fraction: 0.8,
                seed: 9,
            };
            let out = dir.path().join(mode.to_string());
            let report = run_pipeline(&inputs, &config, &out).unwrap();
            assert_eq!(report.rows.len(), 2);
            let text = std::fs::read_to_string(out.join(PIPELINE_REPORT_FILE)).unwrap();
            let mut lines = text.lines().skip(1);
            assert_eq!(lines.next(), Some(PipelineReport::HEADER));
            let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
            match mode {
                Mode::Svc => {
                    assert!(!fields[6].is_empty() && fields[7].is_empty() && fields[8].is_empty())
                }
                Mode::Svr => {
                    assert!(fields[6].is_empty() && !fields[7].is_empty() && !fields[8].is_empty())
                }
            }
            let loaded = SvmModel::load(out.join(&report.rows[0].model_file)).unwrap();
            let signals = inputs.signals().unwrap();
            let asm = assemble(&inputs.stocks[0], &signals, config.layout).unwrap();
            let (train, _) = split(&asm.standard, 0.8, 9).unwrap();
            let params = config.settings.params(mode, asm.standard.dim());
            let in_memory = train_model(&train, mode, &params).unwrap();
            for r in &asm.standard.rows {
                let a = in_memory.predict_raw(&r.x).unwrap();
                let b = loaded.predict_raw(&r.x).unwrap();
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn missing_lexicon_names_the_input() {
        let dir = tempfile::tempdir().unwrap();
        synthetic(6, 0.0, 1).write_to(dir.path()).unwrap();
        let mut paths = InputPaths::in_dir(dir.path());
        paths.sentiment = dir.path().join("absent.tsv");
        let err = Inputs::load(&paths).unwrap_err();
        assert_eq!(err.stage, Stage::Collect);
        assert!(err.to_string().contains("absent.tsv"), "{err}");
        assert!(err.to_string().starts_with("collect stage failed"));
    }

    #[test]
    fn impact_study_runs_on_synthetic_stocks() {
        let out = synthetic(8, 0.0, 3);
        let settings = ModelSettings {
            g: Some(0.01),
            ..ModelSettings::default()
        };
        let study = run_impact_study(
            &out.stocks,
            &out.signals().unwrap(),
            FeatureLayout::new(4, 1).unwrap(),
            &settings,
            100.0,
        )
        .unwrap();
        assert_eq!(study.matrix.m.len(), 3);
        assert_eq!(study.weights.z.len(), 4);
        let zero = run_impact_study(
            &out.stocks,
            &out.signals().unwrap(),
            FeatureLayout::new(4, 1).unwrap(),
            &settings,
            0.0,
        )
        .unwrap();
        assert!(zero.weights.degenerate);
    }
}
