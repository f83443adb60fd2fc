use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsDocument {
    pub date: NaiveDate,
    pub source_id: String,
    pub text: String,
}

pub fn read_corpus<R: BufRead>(reader: R, name: &str) -> Result<Vec<NewsDocument>> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse(name, i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: NewsDocument =
            serde_json::from_str(&line).map_err(|e| Error::parse(name, i + 1, e.to_string()))?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_corpus<W: Write>(docs: &[NewsDocument], mut w: W) -> Result<()> {
    for doc in docs {
        let line = serde_json::to_string(doc).map_err(|e| Error::invalid(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io("<corpus>", e))?;
    }
    w.flush().map_err(|e| Error::io("<corpus>", e))
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<NewsDocument>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(std::io::BufReader::new(f), &path.display().to_string())
}

pub fn save_corpus(docs: &[NewsDocument], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_corpus(docs, std::io::BufWriter::new(f)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// The ordered list of news sources; position `j` is news node `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sources {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl Sources {
    pub fn new<I, S>(ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        if ids.is_empty() {
            return Err(Error::invalid("at least one news source is required"));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (j, id) in ids.iter().enumerate() {
            if id.is_empty() || index.insert(id.clone(), j).is_some() {
                return Err(Error::invalid(format!("bad or duplicate source id `{id}`")));
            }
        }
        Ok(Sources { ids, index })
    }

    /// Sorted distinct source ids found in `docs`.
    pub fn from_corpus(docs: &[NewsDocument]) -> Result<Self> {
        let mut ids: Vec<&str> = docs.iter().map(|d| d.source_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        Sources::new(ids)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Sources::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let docs = vec![NewsDocument {
            date: NaiveDate::from_ymd_opt(2010, 3, 4).unwrap(),
            source_id: "s1".into(),
            text: "今日涨停".into(),
        }];
        let mut buf = Vec::new();
        write_corpus(&docs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains(r#""date":"2010-03-04""#), "{text}");
        assert_eq!(read_corpus(buf.as_slice(), "mem").unwrap(), docs);
    }

    #[test]
    fn bad_json_line_is_reported() {
        let err = read_corpus(
            "{\"date\":\"2010-01-01\",\"source_id\":\"a\",\"text\":\"\"}\n{oops\n".as_bytes(),
            "c.jsonl",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn sources_reject_duplicates() {
        assert!(Sources::new(["a", "b", "a"]).is_err());
        assert!(Sources::new(Vec::<String>::new()).is_err());
        let s = Sources::new(["a", "b"]).unwrap();
        assert_eq!(s.position("b"), Some(1));
        assert_eq!(s.position("c"), None);
    }
}
