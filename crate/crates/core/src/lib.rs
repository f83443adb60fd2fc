//! Stock tendency and price forecasting from news sentiment with support
//! vector machines.
//!
//! The pipeline turns a news corpus and daily price bars into per-day
//! feature vectors (one sentiment node per news source plus lagged adjusted
//! closes), trains C-SVC or epsilon-SVR models with a from-scratch SMO
//! solver, searches the `(C, gamma)` grid, and ranks news sources by how far
//! a perturbation of their node moves the predicted price.

pub mod error;
pub mod features;
pub mod impact;
pub mod market_data;
pub mod search;
pub mod studies;
pub mod svm;
pub mod synth;
pub mod textpipe;

pub use error::{Error, Result};
pub use features::{assemble, Dataset, FeatureLayout, FeatureVector, ScalingParams};
pub use impact::{ImpactMatrix, SourceWeights};
pub use market_data::{load_stock_series, DailyBar, StockSeries};
pub use search::{Grid, SearchConfig, SearchResult};
pub use svm::{evaluate, KernelKind, KernelSpec, Metrics, Mode, SvmModel, SvmParams};
pub use synth::SynthConfig;
pub use textpipe::{
    DailySourceSignal, Lexicons, NewsDocument, SentimentLexicon, Sources, StopwordLexicon,
};
