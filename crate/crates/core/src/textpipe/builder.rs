//! One round of the iterative dictionary-building loop.
//!
//! The corpus is segmented with the current lexicons, the most frequent
//! uncovered words are handed to an external scorer, and the scorer's
//! verdicts are folded back in on the next call. The caller repeats until
//! the scorer has covered at least [`COVERAGE_TARGET`] of the candidates.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use super::lexicon::{check_score, Lexicons};
use super::segment::{Segmenter, Token};
use crate::error::{Error, Result};

pub const CANDIDATE_LIMIT: usize = 500;
pub const COVERAGE_TARGET: f64 = 0.9;

/// One verdict from the external scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct TermScore {
    pub term: String,
    /// Averaged score in [-5, 5]; 0 means stop word.
    pub score: f64,
    /// Set when a majority of scorers called the term a stop word.
    pub stopword: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub term: String,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub lexicons: Lexicons,
    pub candidates: Vec<Candidate>,
    /// Fraction of the previous candidate set that is now scored.
    pub coverage: f64,
}

impl IterationOutcome {
    pub fn converged(&self) -> bool {
        self.coverage >= COVERAGE_TARGET
    }
}

/// Applies `scores`, re-segments `corpus` and proposes the next candidates.
pub fn lexicon_iteration<'c>(
    corpus: impl IntoIterator<Item = &'c str>,
    lexicons: &Lexicons,
    previous_candidates: &[String],
    scores: &[TermScore],
    limit: usize,
) -> Result<IterationOutcome> {
    for s in scores {
        check_score(&s.term, s.score)?;
        if s.term.is_empty() {
            return Err(Error::invalid("empty term in score file"));
        }
    }
    let mut updated = lexicons.clone();
    for s in scores {
        if s.stopword || s.score == 0.0 {
            updated.mark_stop(&s.term)?;
        } else {
            updated.mark_sentiment(&s.term, s.score)?;
        }
    }

    let coverage = if previous_candidates.is_empty() {
        1.0
    } else {
        let scored = previous_candidates
            .iter()
            .filter(|t| updated.contains(t))
            .count();
        scored as f64 / previous_candidates.len() as f64
    };

    let segmenter = Segmenter::new(&updated);
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for text in corpus {
        for token in segmenter.tokens(text) {
            if let Token::Unknown(term) = token {
                *counts.entry(term).or_insert(0) += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let candidates = ranked
        .into_iter()
        .take(limit)
        .map(|(term, count)| Candidate {
            term: term.to_owned(),
            count,
        })
        .collect();
    drop(segmenter);

    Ok(IterationOutcome {
        lexicons: updated,
        candidates,
        coverage,
    })
}

/// Parses scorer output: `term<TAB>score[<TAB>stop]`. Rows with an empty
/// score are unscored and skipped.
pub fn read_scores<R: BufRead>(reader: R, name: &str) -> Result<Vec<TermScore>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse(name, i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let term = fields.next().unwrap_or("").to_owned();
        let score = fields.next().unwrap_or("").trim();
        if score.is_empty() {
            continue;
        }
        let score: f64 = score
            .parse()
            .map_err(|_| Error::parse(name, i + 1, format!("bad score `{score}`")))?;
        check_score(&term, score).map_err(|e| Error::parse(name, i + 1, e.to_string()))?;
        let stopword = matches!(fields.next().map(str::trim), Some("stop" | "1" | "true"));
        out.push(TermScore {
            term,
            score,
            stopword,
        });
    }
    Ok(out)
}

pub fn load_scores(path: impl AsRef<Path>) -> Result<Vec<TermScore>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_scores(std::io::BufReader::new(f), &path.display().to_string())
}

/// Writes candidates as `term<TAB>` rows with the score column left blank.
pub fn write_candidates<W: Write>(candidates: &[Candidate], mut w: W) -> std::io::Result<()> {
    for c in candidates {
        writeln!(w, "{}\t", c.term)?;
    }
    w.flush()
}

/// Reads back a candidate file: the first column of every non-blank row.
pub fn read_candidate_terms<R: BufRead>(reader: R) -> std::io::Result<Vec<String>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let term = line.split('\t').next().unwrap_or("");
        if !term.is_empty() {
            out.push(term.to_owned());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textpipe::{SentimentLexicon, StopwordLexicon};
    use proptest::prelude::*;

    fn base() -> Lexicons {
        Lexicons::new(
            SentimentLexicon::from_entries([("好", 3.0)]).unwrap(),
            StopwordLexicon::from_terms(["的"]).unwrap(),
        )
        .unwrap()
    }

    fn score(term: &str, score: f64, stopword: bool) -> TermScore {
        TermScore {
            term: term.into(),
            score,
            stopword,
        }
    }

    #[test]
    fn empty_corpus() {
        let out =
            lexicon_iteration(std::iter::empty(), &base(), &[], &[], CANDIDATE_LIMIT).unwrap();
        assert!(out.candidates.is_empty());
        assert_eq!(out.coverage, 1.0);
        assert!(out.converged());
    }

    #[test]
    fn applies_scores_and_routes_stop_words() {
        let corpus = ["银行 好 股价", "银行 利好"];
        let prev: Vec<String> = ["银行", "股价", "利好"].map(String::from).to_vec();
        let scores = [
            score("银行", 0.0, false),
            score("利好", 4.0, false),
            score("股价", 2.0, true),
        ];
        let out = lexicon_iteration(corpus, &base(), &prev, &scores, CANDIDATE_LIMIT).unwrap();
        assert_eq!(out.coverage, 1.0);
        assert!(out.lexicons.stop().contains("银行"));
        assert!(out.lexicons.stop().contains("股价"));
        assert_eq!(out.lexicons.sentiment().score("利好"), Some(4.0));
        assert!(out.candidates.is_empty());
    }

    #[test]
    fn rescoring_moves_terms_between_lexicons() {
        let out = lexicon_iteration(["好"], &base(), &[], &[score("好", 0.0, false)], 10).unwrap();
        assert!(!out.lexicons.sentiment().contains("好"));
        assert!(out.lexicons.stop().contains("好"));
        let back =
            lexicon_iteration(["好"], &out.lexicons, &[], &[score("好", -1.5, false)], 10).unwrap();
        assert_eq!(back.lexicons.sentiment().score("好"), Some(-1.5));
        assert!(!back.lexicons.stop().contains("好"));
    }

    #[test]
    fn partial_coverage() {
        let prev: Vec<String> = ["甲", "乙", "丙", "丁"].map(String::from).to_vec();
        let out = lexicon_iteration(
            ["甲 乙 丙 丁"],
            &base(),
            &prev,
            &[score("甲", 1.0, false)],
            10,
        )
        .unwrap();
        assert_eq!(out.coverage, 0.25);
        assert!(!out.converged());
        let terms: Vec<_> = out.candidates.iter().map(|c| c.term.as_str()).collect();
        assert_eq!(terms, ["丁", "丙", "乙"]);
    }

    #[test]
    fn rejects_out_of_range_score() {
        assert!(lexicon_iteration(["x"], &base(), &[], &[score("x", 6.0, false)], 10).is_err());
        assert!(read_scores("x\t-7\n".as_bytes(), "s.tsv").is_err());
    }

    #[test]
    fn score_file_parsing() {
        let parsed =
            read_scores("甲\t1.5\n乙\t\n丙\t0\n丁\t2\tstop\n".as_bytes(), "s.tsv").unwrap();
        assert_eq!(
            parsed,
            vec![
                score("甲", 1.5, false),
                score("丙", 0.0, false),
                score("丁", 2.0, true)
            ]
        );
    }

    #[test]
    fn candidate_file_round_trip() {
        let cands = vec![
            Candidate {
                term: "甲".into(),
                count: 3,
            },
            Candidate {
                term: "乙".into(),
                count: 1,
            },
        ];
        let mut buf = Vec::new();
        write_candidates(&cands, &mut buf).unwrap();
        assert_eq!(
            read_candidate_terms(buf.as_slice()).unwrap(),
            vec!["甲", "乙"]
        );
        // an unscored candidate file is a valid, empty score file
        assert!(read_scores(buf.as_slice(), "c.tsv").unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn candidates_are_top_k_by_count(
            counts in proptest::collection::btree_map("[a-z]{3}", 1usize..6, 0..40),
            limit in 1usize..20,
            scored in proptest::collection::vec(("[a-z]{3}", -5i32..=5), 0..6),
        ) {
            // build a corpus with exactly the requested term frequencies
            let mut words = Vec::new();
            for (term, n) in &counts {
                for _ in 0..*n { words.push(term.clone()); }
            }
            let corpus = words.join(" ");
            let scores: Vec<TermScore> = scored
                .iter()
                .map(|(t, s)| score(t, *s as f64, false))
                .collect();
            let mut seen = std::collections::HashSet::new();
            let scores: Vec<_> = scores.into_iter().filter(|s| seen.insert(s.term.clone())).collect();
            let lex = Lexicons::default();
            let out = lexicon_iteration([corpus.as_str()], &lex, &[], &scores, limit).unwrap();

            // brute-force oracle over the planted counts
            let mut expected: Vec<(String, usize)> = counts
                .iter()
                .filter(|(t, _)| !out.lexicons.contains(t))
                .map(|(t, n)| (t.clone(), *n))
                .collect();
            expected.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            expected.truncate(limit);
            let got: Vec<(String, usize)> = out.candidates.iter().map(|c| (c.term.clone(), c.count)).collect();
            prop_assert_eq!(got, expected);

            // disjointness survives the update
            for t in out.lexicons.stop().iter() {
                prop_assert!(!out.lexicons.sentiment().contains(t));
            }
        }
    }
}
