//! Greedy longest-match segmentation against the two lexicons.

use std::collections::HashMap;

use super::lexicon::Lexicons;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Token<'t> {
    Sentiment(&'t str, f64),
    Stop(&'t str),
    /// A maximal run of alphanumeric characters no lexicon term covers.
    Unknown(&'t str),
}

#[derive(Clone, Copy)]
enum Entry {
    Sentiment(f64),
    Stop,
}

pub struct Segmenter<'a> {
    index: HashMap<&'a str, Entry>,
    max_chars: usize,
}

impl<'a> Segmenter<'a> {
    pub fn new(lexicons: &'a Lexicons) -> Self {
        let mut index = HashMap::with_capacity(lexicons.sentiment().len() + lexicons.stop().len());
        let mut max_chars = 0;
        for (term, score) in lexicons.sentiment().iter() {
            max_chars = max_chars.max(term.chars().count());
            index.insert(term, Entry::Sentiment(score));
        }
        for term in lexicons.stop().iter() {
            max_chars = max_chars.max(term.chars().count());
            index.insert(term, Entry::Stop);
        }
        Segmenter { index, max_chars }
    }

    /// Scans left to right, taking the longest lexicon term at each position.
    pub fn tokens<'t>(&self, text: &'t str) -> Vec<Token<'t>> {
        // byte offset of every char boundary, including the end
        let bounds: Vec<usize> = text
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(text.len()))
            .collect();
        let n_chars = bounds.len() - 1;
        let mut out = Vec::new();
        let mut unknown_start: Option<usize> = None;
        let mut pos = 0;
        while pos < n_chars {
            let longest = (1..=self.max_chars.min(n_chars - pos))
                .rev()
                .find_map(|len| {
                    let piece = &text[bounds[pos]..bounds[pos + len]];
                    self.index.get(piece).map(|e| (len, piece, *e))
                });
            match longest {
                Some((len, piece, entry)) => {
                    if let Some(start) = unknown_start.take() {
                        out.push(Token::Unknown(&text[start..bounds[pos]]));
                    }
                    out.push(match entry {
                        Entry::Sentiment(s) => Token::Sentiment(piece, s),
                        Entry::Stop => Token::Stop(piece),
                    });
                    pos += len;
                }
                None => {
                    let ch = text[bounds[pos]..].chars().next().unwrap();
                    if ch.is_alphanumeric() {
                        unknown_start.get_or_insert(bounds[pos]);
                    } else if let Some(start) = unknown_start.take() {
                        out.push(Token::Unknown(&text[start..bounds[pos]]));
                    }
                    pos += 1;
                }
            }
        }
        if let Some(start) = unknown_start {
            out.push(Token::Unknown(&text[start..]));
        }
        out
    }

    /// Matched sentiment terms in text order. Stop words are consumed but dropped.
    pub fn segment<'t>(&self, text: &'t str) -> Vec<&'t str> {
        self.tokens(text)
            .into_iter()
            .filter_map(|t| match t {
                Token::Sentiment(term, _) => Some(term),
                _ => None,
            })
            .collect()
    }

    /// Mean score of matched sentiment terms, 0.0 when nothing matches.
    pub fn score(&self, text: &str) -> f64 {
        let (sum, count) = self
            .tokens(text)
            .into_iter()
            .fold((0.0, 0usize), |(sum, count), t| match t {
                Token::Sentiment(_, s) => (sum + s, count + 1),
                _ => (sum, count),
            });
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }
}

pub fn segment(text: &str, lexicons: &Lexicons) -> Vec<String> {
    Segmenter::new(lexicons)
        .segment(text)
        .into_iter()
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textpipe::{SentimentLexicon, StopwordLexicon};
    use proptest::prelude::*;

    fn lex(sent: &[(&str, f64)], stop: &[&str]) -> Lexicons {
        Lexicons::new(
            SentimentLexicon::from_entries(sent.iter().map(|(t, s)| (*t, *s))).unwrap(),
            StopwordLexicon::from_terms(stop.iter().copied()).unwrap(),
        )
        .unwrap()
    }

    /// Character-at-a-time reference: at every position try all lengths,
    /// longest first, using plain linear scans of the term lists.
    fn reference(text: &str, sent: &[(&str, f64)], stop: &[&str]) -> Vec<String> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let mut matched = 0;
            let mut is_sent = false;
            for len in (1..=chars.len() - i).rev() {
                let piece: String = chars[i..i + len].iter().collect();
                if sent.iter().any(|(t, _)| *t == piece) {
                    matched = len;
                    is_sent = true;
                    break;
                }
                if stop.iter().any(|t| *t == piece) {
                    matched = len;
                    break;
                }
            }
            if matched == 0 {
                i += 1;
            } else {
                if is_sent {
                    out.push(chars[i..i + matched].iter().collect());
                }
                i += matched;
            }
        }
        out
    }

    #[test]
    fn empty_text() {
        assert!(segment("", &lex(&[("a", 1.0)], &[])).is_empty());
    }

    #[test]
    fn stop_words_are_consumed() {
        let sent = [("涨停", 4.0)];
        let stop = ["今日"];
        let got = segment("今日涨停", &lex(&sent, &stop));
        assert_eq!(got, vec!["涨停"]);
        assert_eq!(got, reference("今日涨停", &sent, &stop));
    }

    #[test]
    fn longest_match_wins() {
        let sent = [("ab", 1.0), ("abc", 2.0)];
        let got = segment("abc", &lex(&sent, &[]));
        assert_eq!(got, vec!["abc"]);
        assert_eq!(got, reference("abc", &sent, &[]));
    }

    #[test]
    fn unknown_runs_split_on_separators() {
        let l = lex(&[("涨", 1.0)], &["的"]);
        let seg = Segmenter::new(&l);
        let toks = seg.tokens("银行的股价涨, 大幅x");
        assert_eq!(
            toks,
            vec![
                Token::Unknown("银行"),
                Token::Stop("的"),
                Token::Unknown("股价"),
                Token::Sentiment("涨", 1.0),
                Token::Unknown("大幅x"),
            ]
        );
    }

    #[test]
    fn document_score_rules() {
        let l = lex(&[("好", 4.0), ("坏", -2.0), ("崩", -5.0)], &["的"]);
        let seg = Segmenter::new(&l);
        assert_eq!(seg.score("好的坏"), 1.0);
        assert_eq!(seg.score("的的"), 0.0);
        assert_eq!(seg.score("崩"), -5.0);
        // cross-check the mean against summing the matcher output
        let terms = seg.segment("好的坏好");
        let sum: f64 = terms.iter().map(|t| l.sentiment().score(t).unwrap()).sum();
        assert_eq!(seg.score("好的坏好"), sum / terms.len() as f64);
    }

    proptest! {
        #[test]
        fn matches_reference_matcher(text in "[abcxy的 ]{0,24}") {
            let sent = [("a", 1.0), ("ab", -2.0), ("abc", 3.0), ("bc", 0.5), ("x", -1.0)];
            let stop = ["c", "的", "yx"];
            let l = lex(&sent, &stop);
            let got = segment(&text, &l);
            prop_assert_eq!(&got, &reference(&text, &sent, &stop));
            // stop words never leak
            prop_assert!(got.iter().all(|t| l.sentiment().contains(t)));
        }

        #[test]
        fn score_invariant_under_block_permutation(
            blocks in proptest::collection::vec(prop_oneof![
                Just("好"), Just("坏"), Just("的"), Just("大涨"), Just("x")], 0..12),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let l = lex(&[("好", 4.0), ("坏", -2.0), ("大涨", 5.0)], &["的"]);
            let seg = Segmenter::new(&l);
            let mut shuffled = blocks.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = seg.score(&blocks.join(" "));
            let b = seg.score(&shuffled.join(" "));
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
