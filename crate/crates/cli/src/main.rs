//! `newsvm` command-line tool.

mod plots;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use newsvm::features::{DEFAULT_LAG, DEFAULT_TRAIN_FRACTION, MAX_LAG};
use newsvm::search::{approximate_search, traverse_search, AxisRange, Grid, SearchConfig};
use newsvm::studies::{
    run_expansion_study, run_impact_study, run_lag_study, run_pipeline, AtStage, ExpansionConfig,
    InputPaths, Inputs, LagStudyConfig, ModelSettings, PipelineConfig, Stage,
};
use newsvm::synth::{generate, signal_std, SynthConfig};
use newsvm::textpipe::{
    lexicon_iteration, load_corpus, load_scores, read_candidate_terms, write_candidates, Lexicons,
    SentimentLexicon, StopwordLexicon, CANDIDATE_LIMIT,
};
use newsvm::{Dataset, FeatureLayout, KernelKind, Mode, SvmModel};

#[derive(Debug, Parser)]
#[command(
    name = "newsvm",
    version,
    about = "News-sentiment SVM forecasting toolkit"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Seed for every random choice (splits, synthetic data, searches).
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// svc (tendency) or svr (price).
    #[arg(long, global = true, default_value = "svc")]
    mode: Mode,
    /// Number of lagged adjusted-close nodes.
    #[arg(long, global = true, default_value_t = DEFAULT_LAG)]
    lag: usize,
    /// Keep days without news, with zero news nodes.
    #[arg(long, global = true, overrides_with = "no_expand")]
    expand: bool,
    /// Drop days without news (default).
    #[arg(long = "no-expand", global = true)]
    no_expand: bool,
    /// Cost; defaults to 1.
    #[arg(long, global = true)]
    c: Option<f64>,
    /// Kernel gamma; defaults to 1 / (number of features).
    #[arg(long, global = true)]
    g: Option<f64>,
    #[arg(long, global = true, default_value_t = 0.1)]
    epsilon: f64,
    /// polynomial or sigmoid; defaults to polynomial for svc, sigmoid for svr.
    #[arg(long, global = true)]
    kernel: Option<KernelKind>,
    #[arg(long, global = true)]
    coef0: Option<f64>,
    #[arg(long, global = true)]
    degree: Option<u32>,
    /// Days of news summed into each row.
    #[arg(long = "news-window", global = true, default_value_t = 1)]
    news_window: usize,
    #[arg(long = "train-fraction", global = true, default_value_t = DEFAULT_TRAIN_FRACTION)]
    train_fraction: f64,
    /// Also write PNG plots next to the reports.
    #[arg(long, global = true)]
    plots: bool,
}

impl Global {
    fn settings(&self) -> ModelSettings {
        ModelSettings {
            c: self.c,
            g: self.g,
            kernel: self.kernel,
            coef0: self.coef0,
            degree: self.degree,
            epsilon: self.epsilon,
        }
    }

    fn layout(&self, num_sources: usize) -> Result<FeatureLayout> {
        let layout = FeatureLayout::new(num_sources, self.lag).at(Stage::Preprocess)?;
        Ok(layout
            .with_news_window(self.news_window)
            .at(Stage::Preprocess)?)
    }
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Directory laid out like `newsvm synth` output; individual paths
    /// below override its files.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    news: Option<PathBuf>,
    #[arg(long)]
    sentiment: Option<PathBuf>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Source list, one id per line.
    #[arg(long)]
    sources: Option<PathBuf>,
    /// A stock CSV or a directory of them.
    #[arg(long)]
    stocks: Option<PathBuf>,
}

impl InputArgs {
    fn paths(&self) -> Result<InputPaths> {
        let base = self.data.as_ref().map(InputPaths::in_dir);
        let pick = |own: &Option<PathBuf>, from: fn(&InputPaths) -> PathBuf, name: &str| {
            own.clone()
                .or_else(|| base.as_ref().map(from))
                .ok_or_else(|| anyhow!("collect stage failed: no --{name} given (or use --data)"))
        };
        Ok(InputPaths {
            news: pick(&self.news, |p| p.news.clone(), "news")?,
            sentiment: pick(&self.sentiment, |p| p.sentiment.clone(), "sentiment")?,
            stopwords: pick(&self.stopwords, |p| p.stopwords.clone(), "stopwords")?,
            sources: self.sources.clone().or_else(|| {
                base.as_ref()
                    .and_then(|p| p.sources.clone())
                    .filter(|p| p.exists())
            }),
            stocks: pick(&self.stocks, |p| p.stocks.clone(), "stocks")?,
        })
    }

    fn load(&self) -> Result<Inputs> {
        Ok(Inputs::load(&self.paths()?)?)
    }
}

#[derive(Debug, Args)]
struct GridArgs {
    /// C axis as lo:hi:step.
    #[arg(long = "c-range", default_value = "1:25:1")]
    c_range: AxisRange,
    /// Gamma axis as lo:hi:step.
    #[arg(long = "g-range", default_value = "0.01:0.30:0.01")]
    g_range: AxisRange,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus, lexicons and price histories.
    Synth {
        #[arg(long, default_value_t = 500)]
        days: usize,
        #[arg(long = "num-sources", default_value_t = 20)]
        num_sources: usize,
        #[arg(long = "num-stocks", default_value_t = 1)]
        num_stocks: usize,
        /// Return noise; defaults to a tenth of the planted signal's spread.
        #[arg(long = "noise-std")]
        noise_std: Option<f64>,
        #[arg(long = "no-news-probability", default_value_t = 0.0)]
        no_news_probability: f64,
    },
    /// One round of the lexicon-building loop.
    BuildDict {
        /// News corpus (JSON lines).
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        sentiment: Option<PathBuf>,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Expert scores for the previous candidates: term, score[, stop].
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Candidate list produced by the previous round.
        #[arg(long)]
        previous: Option<PathBuf>,
        #[arg(long, default_value_t = CANDIDATE_LIMIT)]
        limit: usize,
    },
    /// Write each stock's featurized dataset as CSV.
    Featurize(InputArgs),
    /// Train, evaluate and save one model per stock.
    Train(InputArgs),
    /// Predict every row of a featurized dataset with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Evaluate every (C, gamma) cell averaged over seeded splits.
    GridSearch {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 10)]
        splits: usize,
    },
    /// Aggregate the optima of many single-split searches.
    ApproxSearch {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 50)]
        groups: usize,
    },
    /// Metrics against lag, with and without news nodes.
    LagStudy {
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long = "max-lag", default_value_t = MAX_LAG)]
        max_lag: usize,
    },
    /// Models trained with and without zero-filled no-news days.
    ExpansionStudy(InputArgs),
    /// Per-source impact factors from perturbed regression predictions.
    Impact {
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long, default_value_t = newsvm::impact::DEFAULT_DELTA)]
        delta: f64,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path)
        .map_err(|e| newsvm::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
        .at(Stage::Persist)?;
    Ok(BufWriter::new(f))
}

fn out_dir(global: &Global) -> Result<&Path> {
    std::fs::create_dir_all(&global.out)
        .with_context(|| format!("persist stage failed: creating {}", global.out.display()))?;
    Ok(&global.out)
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let expanded = g.expand && !g.no_expand;
    match &cli.command {
        Command::Synth {
            days,
            num_sources,
            num_stocks,
            noise_std,
            no_news_probability,
        } => {
            let mut config = SynthConfig::planted(g.seed, *days, *num_sources, *num_stocks);
            config.noise_std = noise_std.unwrap_or(signal_std(&config.coefficients) / 10.0);
            config.no_news_probability = *no_news_probability;
            let out = generate(&config).at(Stage::Collect)?;
            out.write_to(out_dir(g)?).at(Stage::Persist)?;
            println!(
                "wrote {} documents and {} stocks to {}",
                out.docs.len(),
                out.stocks.len(),
                g.out.display()
            );
        }
        Command::BuildDict {
            corpus,
            sentiment,
            stopwords,
            scores,
            previous,
            limit,
        } => {
            let docs = load_corpus(corpus).at(Stage::Collect)?;
            let sent = match sentiment {
                Some(p) => SentimentLexicon::load(p).at(Stage::Collect)?,
                None => SentimentLexicon::new(),
            };
            let stop = match stopwords {
                Some(p) => StopwordLexicon::load(p).at(Stage::Collect)?,
                None => StopwordLexicon::new(),
            };
            let lexicons = Lexicons::new(sent, stop).at(Stage::Collect)?;
            let scores = match scores {
                Some(p) => load_scores(p).at(Stage::Collect)?,
                None => Vec::new(),
            };
            let previous = match previous {
                Some(p) => {
                    let f = File::open(p)
                        .with_context(|| format!("collect stage failed: {}", p.display()))?;
                    read_candidate_terms(BufReader::new(f))?
                }
                None => Vec::new(),
            };
            let outcome = lexicon_iteration(
                docs.iter().map(|d| d.text.as_str()),
                &lexicons,
                &previous,
                &scores,
                *limit,
            )
            .at(Stage::Preprocess)?;
            let dir = out_dir(g)?;
            outcome
                .lexicons
                .sentiment()
                .save(dir.join("sentiment.tsv"))
                .at(Stage::Persist)?;
            outcome
                .lexicons
                .stop()
                .save(dir.join("stopwords.txt"))
                .at(Stage::Persist)?;
            write_candidates(&outcome.candidates, create(&dir.join("candidates.tsv"))?)?;
            println!(
                "coverage {:.4} converged {} candidates {}",
                outcome.coverage,
                outcome.converged(),
                outcome.candidates.len()
            );
        }
        Command::Featurize(inputs) => {
            let inputs = inputs.load()?;
            let signals = inputs.signals().at(Stage::Preprocess)?;
            let layout = g.layout(inputs.sources.len())?;
            let dir = out_dir(g)?;
            for series in &inputs.stocks {
                let asm = newsvm::assemble(series, &signals, layout).at(Stage::Preprocess)?;
                let ds = asm.view(expanded);
                ds.write_csv(create(&dir.join(format!("{}.csv", series.stock_id())))?)
                    .at(Stage::Persist)?;
                println!("{}: {} rows", series.stock_id(), ds.len());
            }
        }
        Command::Train(inputs) => {
            let inputs = inputs.load()?;
            let config = PipelineConfig {
                layout: g.layout(inputs.sources.len())?,
                expanded,
                mode: g.mode,
                settings: g.settings(),
                train_fraction: g.train_fraction,
                seed: g.seed,
            };
            let report = run_pipeline(&inputs, &config, out_dir(g)?)?;
            for r in &report.rows {
                match g.mode {
                    Mode::Svc => println!(
                        "{} ACC {:.4}",
                        r.stock_id,
                        r.metrics.acc.unwrap_or(f64::NAN)
                    ),
                    Mode::Svr => println!(
                        "{} MSE {:.6} SCC {:.4}",
                        r.stock_id, r.metrics.mse, r.metrics.scc
                    ),
                }
            }
        }
        Command::Predict { model, dataset } => {
            let model = SvmModel::load(model).at(Stage::Collect)?;
            let f = File::open(dataset)
                .map_err(|e| newsvm::Error::Io {
                    path: dataset.clone(),
                    source: e,
                })
                .at(Stage::Collect)?;
            let ds = Dataset::read_csv(BufReader::new(f), &dataset.display().to_string())
                .at(Stage::Collect)?;
            let mut w = create(&out_dir(g)?.join("predictions.csv"))?;
            writeln!(w, "# newsvm predictions v1 mode={}", model.mode)?;
            writeln!(w, "date,prediction,truth")?;
            let mut hits = 0usize;
            for r in &ds.rows {
                let (pred, truth) = match model.mode {
                    Mode::Svc => (model.predict_raw(&r.x), f64::from(r.label_class)),
                    Mode::Svr => (model.predict_price(&r.x), r.label_price),
                };
                let pred = pred.at(Stage::Evaluate)?;
                hits += usize::from(pred == truth);
                writeln!(w, "{},{pred},{truth}", r.date.format("%Y-%m-%d"))?;
            }
            w.flush()?;
            if model.mode == Mode::Svc && !ds.is_empty() {
                println!(
                    "{} rows, ACC {:.4}",
                    ds.len(),
                    hits as f64 / ds.len() as f64
                );
            } else {
                println!("{} rows", ds.len());
            }
        }
        Command::GridSearch {
            inputs,
            grid,
            splits,
        } => {
            let (datasets, config) = search_inputs(g, inputs, expanded)?;
            let grid = Grid {
                c: grid.c_range,
                g: grid.g_range,
            };
            let dir = out_dir(g)?;
            for (id, ds) in &datasets {
                info!("grid search on {id}: {} cells", grid.cells().len());
                let result =
                    traverse_search(ds, &grid, &config, g.seed, *splits).at(Stage::Train)?;
                result.write_csv(create(&dir.join(format!("grid_{id}.csv")))?)?;
                if g.plots {
                    plots::search_heatmap(&result, &dir.join(format!("grid_{id}.png")))?;
                }
                match result.best {
                    Some((c, gamma)) => println!("{id}: best C {c} g {gamma}"),
                    None => println!("{id}: no converged cell"),
                }
            }
        }
        Command::ApproxSearch {
            inputs,
            grid,
            groups,
        } => {
            let (datasets, config) = search_inputs(g, inputs, expanded)?;
            let grid = Grid {
                c: grid.c_range,
                g: grid.g_range,
            };
            let dir = out_dir(g)?;
            for (id, ds) in &datasets {
                let result =
                    approximate_search(ds, &grid, &config, g.seed, *groups).at(Stage::Train)?;
                result.write_csv(create(&dir.join(format!("approx_{id}.csv")))?)?;
                match result.aggregate {
                    Some((c, gamma)) => println!("{id}: aggregate C {c} g {gamma}"),
                    None => println!("{id}: no converged group"),
                }
            }
        }
        Command::LagStudy { inputs, max_lag } => {
            let inputs = inputs.load()?;
            let signals = inputs.signals().at(Stage::Preprocess)?;
            let mut config = LagStudyConfig::new(inputs.sources.len(), g.seed);
            config.lags = (1..=*max_lag).collect();
            config.news_window = g.news_window;
            config.expanded = expanded;
            config.settings = g.settings();
            config.train_fraction = g.train_fraction;
            let study = run_lag_study(&inputs.stocks, &signals, &config).at(Stage::Train)?;
            let dir = out_dir(g)?;
            study.write_csv(create(&dir.join("lag_study.csv"))?)?;
            if g.plots {
                for s in &inputs.stocks {
                    for mode in [Mode::Svc, Mode::Svr] {
                        let path = dir.join(format!("lag_{}_{mode}.png", s.stock_id()));
                        plots::lag_plot(&study, s.stock_id(), mode, &path)?;
                    }
                }
            }
            let failed = study.cells.iter().filter(|c| c.error.is_some()).count();
            println!("{} cells, {failed} failed", study.cells.len());
        }
        Command::ExpansionStudy(inputs) => {
            let inputs = inputs.load()?;
            let signals = inputs.signals().at(Stage::Preprocess)?;
            let config = ExpansionConfig {
                layout: g.layout(inputs.sources.len())?,
                settings: g.settings(),
                train_fraction: g.train_fraction,
                seed: g.seed,
            };
            let study = run_expansion_study(&inputs.stocks, &signals, &config).at(Stage::Train)?;
            study.write_csv(create(&out_dir(g)?.join("expansion_study.csv"))?)?;
            if study.degenerate {
                println!("no day without news: expanded and standard variants coincide");
            }
            println!("{} cells", study.cells.len());
        }
        Command::Impact { inputs, delta } => {
            let inputs = inputs.load()?;
            let signals = inputs.signals().at(Stage::Preprocess)?;
            let layout = g.layout(inputs.sources.len())?;
            let study = run_impact_study(&inputs.stocks, &signals, layout, &g.settings(), *delta)
                .at(Stage::Train)?;
            let dir = out_dir(g)?;
            let ids = inputs.sources.ids();
            study
                .weights
                .write_csv(ids, create(&dir.join("impact.csv"))?)?;
            study
                .matrix
                .write_csv(ids, create(&dir.join("impact_matrix.csv"))?)?;
            for &j in study.weights.ranking.iter().take(5) {
                println!("{} z {:.6e}", ids[j], study.weights.z[j]);
            }
        }
    }
    Ok(())
}

type Datasets = Vec<(String, Dataset)>;

fn search_inputs(
    g: &Global,
    inputs: &InputArgs,
    expanded: bool,
) -> Result<(Datasets, SearchConfig)> {
    let inputs = inputs.load()?;
    let signals = inputs.signals().at(Stage::Preprocess)?;
    let layout = g.layout(inputs.sources.len())?;
    let mut datasets = Vec::new();
    for s in &inputs.stocks {
        let asm = newsvm::assemble(s, &signals, layout).at(Stage::Preprocess)?;
        datasets.push((s.stock_id().to_string(), asm.view(expanded).clone()));
    }
    let mut config = SearchConfig::new(g.mode);
    let defaults = g.settings().params(g.mode, 1).kernel;
    config.kernel = defaults.kind;
    config.coef0 = defaults.coef0;
    config.degree = defaults.degree;
    config.epsilon = g.epsilon;
    config.train_fraction = g.train_fraction;
    if g.c.is_some() || g.g.is_some() {
        bail!(
            "train stage failed: --c/--g fix a single cell; use --c-range/--g-range for searches"
        );
    }
    Ok((datasets, config))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<newsvm::studies::StageError>().is_some() => {
            eprintln!("newsvm: {e}");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("newsvm: {e:#}");
            ExitCode::FAILURE
        }
    }
}
