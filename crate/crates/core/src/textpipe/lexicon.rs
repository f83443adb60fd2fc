use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MIN_SCORE: f64 = -5.0;
pub const MAX_SCORE: f64 = 5.0;

pub(crate) fn check_score(term: &str, score: f64) -> Result<()> {
    if !score.is_finite() || !(MIN_SCORE..=MAX_SCORE).contains(&score) {
        return Err(Error::invalid(format!(
            "score {score} for `{term}` is outside [-5, 5]"
        )));
    }
    Ok(())
}

/// Term to sentiment score, every score in [-5, 5] and non-zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentimentLexicon {
    entries: BTreeMap<String, f64>,
}

impl SentimentLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut lex = SentimentLexicon::new();
        for (term, score) in entries {
            let term = term.into();
            if lex.entries.contains_key(&term) {
                return Err(Error::invalid(format!("duplicate sentiment term `{term}`")));
            }
            lex.insert(term, score)?;
        }
        Ok(lex)
    }

    /// Adds or replaces a term.
    pub fn insert(&mut self, term: impl Into<String>, score: f64) -> Result<()> {
        let term = term.into();
        if term.is_empty() {
            return Err(Error::invalid("empty sentiment term"));
        }
        check_score(&term, score)?;
        if score == 0.0 {
            return Err(Error::invalid(format!(
                "`{term}` has score 0; zero-scored terms are stop words"
            )));
        }
        self.entries.insert(term, score);
        Ok(())
    }

    pub fn remove(&mut self, term: &str) -> Option<f64> {
        self.entries.remove(term)
    }

    pub fn score(&self, term: &str) -> Option<f64> {
        self.entries.get(term).copied()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.entries.contains_key(term)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(t, s)| (t.as_str(), *s))
    }

    /// Parses `term<TAB>score` lines. Blank lines are skipped.
    pub fn read_tsv<R: BufRead>(reader: R, name: &str) -> Result<Self> {
        let mut lex = SentimentLexicon::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::parse(name, i + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let (term, score) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(name, i + 1, "expected `term<TAB>score`"))?;
            let score: f64 = score
                .trim()
                .parse()
                .map_err(|_| Error::parse(name, i + 1, format!("bad score `{score}`")))?;
            if lex.contains(term) {
                return Err(Error::parse(
                    name,
                    i + 1,
                    format!("duplicate term `{term}`"),
                ));
            }
            lex.insert(term, score)
                .map_err(|e| Error::parse(name, i + 1, e.to_string()))?;
        }
        Ok(lex)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (term, score) in &self.entries {
            writeln!(w, "{term}\t{score}")?;
        }
        w.flush()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_tsv(std::io::BufReader::new(f), &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_tsv(std::io::BufWriter::new(f))
            .map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StopwordLexicon {
    terms: BTreeSet<String>,
}

impl StopwordLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut lex = StopwordLexicon::new();
        for term in terms {
            let term = term.into();
            if lex.contains(&term) {
                return Err(Error::invalid(format!("duplicate stop word `{term}`")));
            }
            lex.insert(term)?;
        }
        Ok(lex)
    }

    pub fn insert(&mut self, term: impl Into<String>) -> Result<()> {
        let term = term.into();
        if term.is_empty() {
            return Err(Error::invalid("empty stop word"));
        }
        self.terms.insert(term);
        Ok(())
    }

    pub fn remove(&mut self, term: &str) -> bool {
        self.terms.remove(term)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    /// One term per line; surrounding whitespace is trimmed.
    pub fn read_lines<R: BufRead>(reader: R, name: &str) -> Result<Self> {
        let mut lex = StopwordLexicon::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::parse(name, i + 1, e.to_string()))?;
            let term = line.trim();
            if term.is_empty() {
                continue;
            }
            if lex.contains(term) {
                return Err(Error::parse(
                    name,
                    i + 1,
                    format!("duplicate stop word `{term}`"),
                ));
            }
            lex.insert(term)?;
        }
        Ok(lex)
    }

    pub fn write_lines<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for term in &self.terms {
            writeln!(w, "{term}")?;
        }
        w.flush()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_lines(std::io::BufReader::new(f), &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_lines(std::io::BufWriter::new(f))
            .map_err(|e| Error::io(path, e))
    }
}

/// A sentiment lexicon and a stop-word lexicon with no term in common.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicons {
    sentiment: SentimentLexicon,
    stop: StopwordLexicon,
}

impl Lexicons {
    pub fn new(sentiment: SentimentLexicon, stop: StopwordLexicon) -> Result<Self> {
        if let Some(term) = stop.iter().find(|t| sentiment.contains(t)) {
            return Err(Error::invalid(format!(
                "`{term}` is in both the sentiment and stop-word lexicons"
            )));
        }
        Ok(Lexicons { sentiment, stop })
    }

    pub fn load(sentiment: impl AsRef<Path>, stop: impl AsRef<Path>) -> Result<Self> {
        Lexicons::new(
            SentimentLexicon::load(sentiment)?,
            StopwordLexicon::load(stop)?,
        )
    }

    pub fn sentiment(&self) -> &SentimentLexicon {
        &self.sentiment
    }

    pub fn stop(&self) -> &StopwordLexicon {
        &self.stop
    }

    pub fn into_parts(self) -> (SentimentLexicon, StopwordLexicon) {
        (self.sentiment, self.stop)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.sentiment.contains(term) || self.stop.contains(term)
    }

    /// Moves `term` into the stop-word lexicon.
    pub(crate) fn mark_stop(&mut self, term: &str) -> Result<()> {
        self.sentiment.remove(term);
        self.stop.insert(term)
    }

    /// Moves `term` into the sentiment lexicon with `score`.
    pub(crate) fn mark_sentiment(&mut self, term: &str, score: f64) -> Result<()> {
        self.sentiment.insert(term, score)?;
        self.stop.remove(term);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_and_zero_scores() {
        assert!(SentimentLexicon::from_entries([("a", 5.5)]).is_err());
        assert!(SentimentLexicon::from_entries([("a", 0.0)]).is_err());
        assert!(SentimentLexicon::from_entries([("", 1.0)]).is_err());
        assert!(SentimentLexicon::from_entries([("a", 1.0), ("a", 2.0)]).is_err());
        assert!(SentimentLexicon::from_entries([("a", -5.0), ("b", 5.0)]).is_ok());
    }

    #[test]
    fn overlapping_lexicons_rejected() {
        let sent = SentimentLexicon::from_entries([("涨停", 4.0)]).unwrap();
        let stop = StopwordLexicon::from_terms(["涨停"]).unwrap();
        assert!(Lexicons::new(sent, stop).is_err());
    }

    #[test]
    fn tsv_round_trip() {
        let sent = SentimentLexicon::from_entries([("涨停", 4.0), ("跌停", -4.5)]).unwrap();
        let mut buf = Vec::new();
        sent.write_tsv(&mut buf).unwrap();
        assert_eq!(
            SentimentLexicon::read_tsv(buf.as_slice(), "mem").unwrap(),
            sent
        );

        let stop = StopwordLexicon::from_terms(["今日", "的"]).unwrap();
        let mut buf = Vec::new();
        stop.write_lines(&mut buf).unwrap();
        assert_eq!(
            StopwordLexicon::read_lines(buf.as_slice(), "mem").unwrap(),
            stop
        );
    }

    #[test]
    fn tsv_errors_carry_line_numbers() {
        let err = SentimentLexicon::read_tsv("a\t1\nb\t9\n".as_bytes(), "lex.tsv").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = SentimentLexicon::read_tsv("a 1\n".as_bytes(), "lex.tsv").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }
}
