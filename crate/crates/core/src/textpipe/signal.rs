use std::collections::BTreeMap;

use chrono::NaiveDate;

use super::corpus::{NewsDocument, Sources};
use super::lexicon::Lexicons;
use super::segment::Segmenter;
use crate::error::{Error, Result};

/// One trading day's news nodes: the mean document score per source.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySourceSignal {
    pub date: NaiveDate,
    pub values: Vec<f64>,
    pub coverage: Vec<usize>,
}

impl DailySourceSignal {
    pub fn silent(date: NaiveDate, num_sources: usize) -> Self {
        DailySourceSignal {
            date,
            values: vec![0.0; num_sources],
            coverage: vec![0; num_sources],
        }
    }

    pub fn has_news(&self) -> bool {
        self.coverage.iter().any(|&c| c > 0)
    }
}

pub fn score_document(doc: &NewsDocument, lexicons: &Lexicons) -> f64 {
    Segmenter::new(lexicons).score(&doc.text)
}

fn aggregate_with<'d>(
    segmenter: &Segmenter<'_>,
    docs: impl IntoIterator<Item = &'d NewsDocument>,
    date: NaiveDate,
    sources: &Sources,
) -> Result<DailySourceSignal> {
    let mut sums = vec![0.0; sources.len()];
    let mut signal = DailySourceSignal::silent(date, sources.len());
    for doc in docs {
        if doc.date != date {
            return Err(Error::invalid(format!(
                "document dated {} aggregated into {date}",
                doc.date
            )));
        }
        let j = sources
            .position(&doc.source_id)
            .ok_or_else(|| Error::invalid(format!("unknown source `{}`", doc.source_id)))?;
        sums[j] += segmenter.score(&doc.text);
        signal.coverage[j] += 1;
    }
    for (j, sum) in sums.into_iter().enumerate() {
        if signal.coverage[j] > 0 {
            signal.values[j] = sum / signal.coverage[j] as f64;
        }
    }
    Ok(signal)
}

/// Per-source mean document score for `date`; silent sources are exactly 0.
pub fn aggregate_daily(
    docs: &[NewsDocument],
    date: NaiveDate,
    sources: &Sources,
    lexicons: &Lexicons,
) -> Result<DailySourceSignal> {
    aggregate_with(&Segmenter::new(lexicons), docs, date, sources)
}

/// Groups a whole corpus by date and aggregates each day.
pub fn daily_signals(
    docs: &[NewsDocument],
    sources: &Sources,
    lexicons: &Lexicons,
) -> Result<BTreeMap<NaiveDate, DailySourceSignal>> {
    let segmenter = Segmenter::new(lexicons);
    let mut by_day: BTreeMap<NaiveDate, Vec<&NewsDocument>> = BTreeMap::new();
    for doc in docs {
        by_day.entry(doc.date).or_default().push(doc);
    }
    by_day
        .into_iter()
        .map(|(date, day_docs)| Ok((date, aggregate_with(&segmenter, day_docs, date, sources)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textpipe::{SentimentLexicon, StopwordLexicon};
    use proptest::prelude::*;

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2012, 5, 7).unwrap()
    }

    fn doc(source: &str, text: &str) -> NewsDocument {
        NewsDocument {
            date: day(),
            source_id: source.into(),
            text: text.into(),
        }
    }

    fn lexicons() -> Lexicons {
        Lexicons::new(
            SentimentLexicon::from_entries([("一", 1.0), ("三", 3.0), ("负", -5.0), ("正", 5.0)])
                .unwrap(),
            StopwordLexicon::from_terms(["的"]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn no_docs_is_silent() {
        let sources = Sources::new(["a", "b"]).unwrap();
        let s = aggregate_daily(&[], day(), &sources, &lexicons()).unwrap();
        assert_eq!(s, DailySourceSignal::silent(day(), 2));
        assert!(!s.has_news());
    }

    #[test]
    fn per_source_mean_and_silent_source() {
        let sources = Sources::new(["a", "b"]).unwrap();
        let docs = [doc("a", "一"), doc("a", "三")];
        let s = aggregate_daily(&docs, day(), &sources, &lexicons()).unwrap();
        assert_eq!(s.values, vec![2.0, 0.0]);
        assert_eq!(s.coverage, vec![2, 0]);
        assert_eq!(score_document(&docs[1], &lexicons()), 3.0);
    }

    #[test]
    fn unknown_source_rejected() {
        let sources = Sources::new(["a"]).unwrap();
        assert!(aggregate_daily(&[doc("zz", "一")], day(), &sources, &lexicons()).is_err());
    }

    #[test]
    fn wrong_date_rejected() {
        let sources = Sources::new(["a"]).unwrap();
        let mut d = doc("a", "一");
        d.date = day().succ_opt().unwrap();
        assert!(aggregate_daily(&[d], day(), &sources, &lexicons()).is_err());
    }

    proptest! {
        #[test]
        fn values_stay_in_score_range(texts in proptest::collection::vec(("[ab]", "[一三负正的x]{0,8}"), 0..10)) {
            let sources = Sources::new(["a", "b"]).unwrap();
            let docs: Vec<_> = texts.iter().map(|(s, t)| doc(s, t)).collect();
            let s = aggregate_daily(&docs, day(), &sources, &lexicons()).unwrap();
            for (v, c) in s.values.iter().zip(&s.coverage) {
                prop_assert!((-5.0..=5.0).contains(v));
                if *c == 0 { prop_assert_eq!(*v, 0.0); }
            }
        }
    }
}
