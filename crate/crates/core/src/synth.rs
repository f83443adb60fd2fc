//! Seeded synthetic news corpus and price histories with a planted
//! news-to-return relationship.
//!
//! Each trading day every source gets a sentiment level `s[j]` drawn
//! uniformly from [-5, 5]; its documents are composed from lexicon terms so
//! that scoring them recovers `s[j]` to within 0.05. The next day's
//! log-return of every stock is `sum_j w[j] * s[j] + noise`.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{save_stock_series, DailyBar, StockSeries};
use crate::textpipe::{
    daily_signals, save_corpus, DailySourceSignal, Lexicons, NewsDocument, SentimentLexicon,
    Sources, StopwordLexicon,
};

pub const MIN_DAYS: usize = 40;
const START_PRICE: f64 = 10.0;
const TERMS_PER_LEVEL: usize = 3;
const SENTIMENT_TERMS_PER_DOC: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub num_days: usize,
    pub num_sources: usize,
    pub num_stocks: usize,
    /// Planted influence of each source's sentiment on the next log-return.
    pub coefficients: Vec<f64>,
    pub noise_std: f64,
    pub no_news_probability: f64,
    /// Documents per source on a news day are drawn from `1..=max_docs`.
    pub max_docs: usize,
}

impl SynthConfig {
    /// Coefficients log-spaced over one order of magnitude (0.0005 to
    /// 0.005) and noise at one tenth of the signal's standard deviation.
    pub fn planted(seed: u64, num_days: usize, num_sources: usize, num_stocks: usize) -> Self {
        let coefficients = log_spaced(0.0005, 0.005, num_sources);
        let noise_std = signal_std(&coefficients) / 10.0;
        SynthConfig {
            seed,
            num_days,
            num_sources,
            num_stocks,
            coefficients,
            noise_std,
            no_news_probability: 0.0,
            max_docs: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_days < MIN_DAYS {
            return Err(Error::invalid(format!(
                "synthetic runs need at least {MIN_DAYS} days"
            )));
        }
        if self.num_sources == 0 || self.num_stocks == 0 || self.max_docs == 0 {
            return Err(Error::invalid(
                "sources, stocks and documents per day must be positive",
            ));
        }
        if self.coefficients.len() != self.num_sources
            || self.coefficients.iter().any(|w| !w.is_finite())
        {
            return Err(Error::invalid("need one finite coefficient per source"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid("noise_std must be finite and non-negative"));
        }
        if !(0.0..1.0).contains(&self.no_news_probability) {
            return Err(Error::invalid("no_news_probability must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// `n` values from `lo` to `hi` with constant ratio.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|j| lo * (hi / lo).powf(j as f64 / (n - 1) as f64))
        .collect()
}

/// Standard deviation of `sum_j w[j] * s[j]` for independent uniform [-5, 5]
/// sentiment.
pub fn signal_std(coefficients: &[f64]) -> f64 {
    let var_s = 100.0 / 12.0;
    (coefficients.iter().map(|w| w * w).sum::<f64>() * var_s).sqrt()
}

/// Ground truth written next to the generated files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub config: SynthConfig,
    pub sources: Vec<String>,
    pub stocks: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// Planted sentiment per day and source; all zero on no-news days.
    pub sentiment: Vec<Vec<f64>>,
    pub news_days: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub sources: Sources,
    pub docs: Vec<NewsDocument>,
    pub stocks: Vec<StockSeries>,
    pub lexicons: Lexicons,
    pub truth: Truth,
}

pub const NEWS_FILE: &str = "news.jsonl";
pub const SENTIMENT_FILE: &str = "sentiment.tsv";
pub const STOPWORDS_FILE: &str = "stopwords.txt";
pub const SOURCES_FILE: &str = "sources.txt";
pub const TRUTH_FILE: &str = "truth.json";
pub const STOCKS_DIR: &str = "stocks";

impl SynthOutput {
    /// Daily per-source signals scored with the generated lexicons.
    pub fn signals(&self) -> Result<BTreeMap<NaiveDate, DailySourceSignal>> {
        daily_signals(&self.docs, &self.sources, &self.lexicons)
    }

    /// Writes the corpus, lexicons, source list, one CSV per stock and
    /// `truth.json` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let stocks_dir = dir.join(STOCKS_DIR);
        std::fs::create_dir_all(&stocks_dir).map_err(|e| Error::io(&stocks_dir, e))?;
        save_corpus(&self.docs, dir.join(NEWS_FILE))?;
        self.lexicons.sentiment().save(dir.join(SENTIMENT_FILE))?;
        self.lexicons.stop().save(dir.join(STOPWORDS_FILE))?;
        let sources = dir.join(SOURCES_FILE);
        std::fs::write(&sources, self.sources.ids().join("\n") + "\n")
            .map_err(|e| Error::io(&sources, e))?;
        for s in &self.stocks {
            save_stock_series(s, stocks_dir.join(format!("{}.csv", s.stock_id())))?;
        }
        let truth = dir.join(TRUTH_FILE);
        let json =
            serde_json::to_string_pretty(&self.truth).map_err(|e| Error::invalid(e.to_string()))?;
        std::fs::write(&truth, json + "\n").map_err(|e| Error::io(&truth, e))
    }
}

/// Distinct two-character words drawn from a block of CJK code points.
fn words(block_start: u32, count: usize) -> Vec<String> {
    (0..count as u32)
        .map(|k| {
            let a = char::from_u32(block_start + 2 * k).unwrap();
            let b = char::from_u32(block_start + 2 * k + 1).unwrap();
            format!("{a}{b}")
        })
        .collect()
}

struct Vocabulary {
    /// Terms for each integer level -5..=-1, 1..=5.
    levels: Vec<(f64, Vec<String>)>,
    stop: Vec<String>,
    filler: Vec<String>,
}

impl Vocabulary {
    fn new() -> Self {
        let level_values: Vec<f64> = (-5..=5).filter(|v| *v != 0).map(f64::from).collect();
        let sentiment = words(0x4E00, level_values.len() * TERMS_PER_LEVEL);
        let levels = level_values
            .iter()
            .zip(sentiment.chunks(TERMS_PER_LEVEL))
            .map(|(v, terms)| (*v, terms.to_vec()))
            .collect();
        Vocabulary {
            levels,
            stop: words(0x5E00, 6),
            filler: words(0x6E00, 40),
        }
    }

    fn lexicons(&self) -> Lexicons {
        let sent = SentimentLexicon::from_entries(
            self.levels
                .iter()
                .flat_map(|(v, terms)| terms.iter().map(move |t| (t.clone(), *v))),
        )
        .expect("generated terms are unique and in range");
        let stop =
            StopwordLexicon::from_terms(self.stop.iter().cloned()).expect("unique stop words");
        Lexicons::new(sent, stop).expect("disjoint blocks")
    }

    /// Levels `(a, b)` with `a <= s <= b`, skipping the excluded zero.
    fn bracket(&self, s: f64) -> (usize, usize) {
        let hi = self
            .levels
            .iter()
            .position(|(v, _)| *v >= s)
            .unwrap_or(self.levels.len() - 1);
        if hi == 0 {
            (0, 0)
        } else {
            (hi - 1, hi)
        }
    }

    /// A document whose mean sentiment score is within 0.05 of `s`.
    fn document(&self, s: f64, rng: &mut ChaCha8Rng) -> String {
        let (a, b) = self.bracket(s);
        let (va, vb) = (self.levels[a].0, self.levels[b].0);
        let n = SENTIMENT_TERMS_PER_DOC;
        let k = if vb > va {
            (((s - va) / (vb - va)) * n as f64).round() as usize
        } else {
            0
        };
        let mut tokens: Vec<&str> = Vec::with_capacity(n + 8);
        for i in 0..n {
            let level = if i < k { b } else { a };
            let terms = &self.levels[level].1;
            tokens.push(&terms[rng.random_range(0..terms.len())]);
        }
        for _ in 0..rng.random_range(1..=4) {
            tokens.push(&self.stop[rng.random_range(0..self.stop.len())]);
        }
        for _ in 0..rng.random_range(2..=6) {
            tokens.push(&self.filler[rng.random_range(0..self.filler.len())]);
        }
        tokens.shuffle(rng);
        tokens.join("，") + "。"
    }
}

fn trading_days(count: usize) -> Vec<NaiveDate> {
    let mut d = NaiveDate::from_ymd_opt(2010, 1, 4).unwrap();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().unwrap();
    }
    out
}

pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vocab = Vocabulary::new();
    let source_ids: Vec<String> = (1..=config.num_sources)
        .map(|j| format!("src{j:02}"))
        .collect();
    let stock_ids: Vec<String> = (1..=config.num_stocks)
        .map(|k| format!("SYN{k:02}"))
        .collect();
    let dates = trading_days(config.num_days);

    let mut news_days = Vec::with_capacity(config.num_days);
    let mut sentiment = Vec::with_capacity(config.num_days);
    let mut docs = Vec::new();
    for &date in &dates {
        let has_news = !rng.random_bool(config.no_news_probability);
        let mut day = vec![0.0; config.num_sources];
        if has_news {
            for (j, src) in source_ids.iter().enumerate() {
                let s = rng.random_range(-5.0..=5.0);
                day[j] = s;
                for _ in 0..rng.random_range(1..=config.max_docs) {
                    docs.push(NewsDocument {
                        date,
                        source_id: src.clone(),
                        text: vocab.document(s, &mut rng),
                    });
                }
            }
        }
        news_days.push(has_news);
        sentiment.push(day);
    }

    let noise = Normal::new(0.0, config.noise_std).map_err(|e| Error::invalid(e.to_string()))?;
    let mut stocks = Vec::with_capacity(config.num_stocks);
    for id in &stock_ids {
        let base_volume = rng.random_range(1_000_000.0..10_000_000.0);
        let mut log_price = 0.0;
        let mut prev_close = START_PRICE;
        let mut bars = Vec::with_capacity(config.num_days);
        for (d, &date) in dates.iter().enumerate() {
            if d > 0 {
                let drift: f64 = sentiment[d - 1]
                    .iter()
                    .zip(&config.coefficients)
                    .map(|(s, w)| s * w)
                    .sum();
                log_price += drift + noise.sample(&mut rng);
            }
            let close = START_PRICE * f64::exp(log_price);
            let open = if d == 0 { close } else { prev_close };
            let high = open.max(close) * (1.0 + rng.random_range(0.0..0.01));
            let low = open.min(close) * (1.0 - rng.random_range(0.0..0.01));
            let volume = (base_volume * rng.random_range(0.5..1.5)) as u64;
            bars.push(DailyBar {
                date,
                open,
                high,
                low,
                close,
                adj_close: close,
                volume,
            });
            prev_close = close;
        }
        stocks.push(StockSeries::new(id.clone(), bars)?);
    }

    Ok(SynthOutput {
        sources: Sources::new(source_ids.iter().cloned())?,
        docs,
        stocks,
        lexicons: vocab.lexicons(),
        truth: Truth {
            config: config.clone(),
            sources: source_ids,
            stocks: stock_ids,
            dates,
            sentiment,
            news_days,
        },
    })
}
