//! Lexicons, segmentation, document scoring and per-source daily signals.

mod builder;
mod corpus;
mod lexicon;
mod segment;
mod signal;

pub use builder::{
    lexicon_iteration, load_scores, read_candidate_terms, read_scores, write_candidates, Candidate,
    IterationOutcome, TermScore, CANDIDATE_LIMIT, COVERAGE_TARGET,
};
pub use corpus::{load_corpus, read_corpus, save_corpus, write_corpus, NewsDocument, Sources};
pub use lexicon::{Lexicons, SentimentLexicon, StopwordLexicon, MAX_SCORE, MIN_SCORE};
pub use segment::{segment, Segmenter, Token};
pub use signal::{aggregate_daily, daily_signals, score_document, DailySourceSignal};
