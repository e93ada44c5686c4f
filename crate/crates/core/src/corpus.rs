//! Line-delimited JSON corpora: one bracketed tree and its entity spans per
//! line.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bracket::{parse_bracketed, serialize_bracketed, ParseError};
use crate::enrich::{AnnotatedSentence, EntitySpan};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordEntity {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub tree: String,
    #[serde(default)]
    pub entities: Vec<RecordEntity>,
}

impl CorpusRecord {
    pub fn from_sentence(s: &AnnotatedSentence) -> Self {
        CorpusRecord {
            id: s.id.clone(),
            tree: serialize_bracketed(&s.tree),
            entities: s
                .entities
                .iter()
                .map(|e| RecordEntity {
                    start: e.start,
                    end: e.end,
                    label: e.label.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}, record {id}: {source}")]
    Tree {
        line: usize,
        id: String,
        #[source]
        source: ParseError,
    },
    #[error("line {line}, record {id}: span {label}[{start},{end}) is invalid for {tokens} tokens")]
    Span {
        line: usize,
        id: String,
        label: String,
        start: usize,
        end: usize,
        tokens: usize,
    },
}

/// Parse a corpus held in memory. Blank lines are skipped; line numbers
/// start at 1.
pub fn parse_corpus(text: &str) -> Result<Vec<AnnotatedSentence>, CorpusError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: CorpusRecord = serde_json::from_str(raw).map_err(|e| CorpusError::Json {
            line,
            message: e.to_string(),
        })?;
        let tree = parse_bracketed(&rec.tree).map_err(|source| CorpusError::Tree {
            line,
            id: rec.id.clone(),
            source,
        })?;
        let sentence = AnnotatedSentence::new(rec.id.clone(), tree, vec![]);
        let tokens = sentence.token_count();
        let mut spans = Vec::with_capacity(rec.entities.len());
        for e in rec.entities {
            if e.start >= e.end || e.end > tokens {
                return Err(CorpusError::Span {
                    line,
                    id: rec.id,
                    label: e.label,
                    start: e.start,
                    end: e.end,
                    tokens,
                });
            }
            spans.push(EntitySpan::new(rec.id.clone(), e.start, e.end, e.label));
        }
        out.push(AnnotatedSentence::new(rec.id, sentence.tree, spans));
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<AnnotatedSentence>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text)
}

/// One JSON record per line.
pub fn write_corpus(sentences: &[AnnotatedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&serde_json::to_string(&CorpusRecord::from_sentence(s)).expect("record serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEART_RATE: &str = r#"{"id":"s1","tree":"(λ (NP (DT The) (NN heart) (NN rate)) (VP (VBD was) (NP (CD 100) (NN bpm))))","entities":[{"start":1,"end":3,"label":"SOSY"},{"start":4,"end":5,"label":"VALUE"},{"start":5,"end":6,"label":"UNIT"}]}"#;

    #[test]
    fn one_record() {
        let c = parse_corpus(HEART_RATE).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].id, "s1");
        assert_eq!(c[0].entities.len(), 3);
        assert_eq!(c[0].token_count(), 6);
    }

    #[test]
    fn empty() {
        assert!(parse_corpus("").unwrap().is_empty());
        assert!(parse_corpus("\n  \n").unwrap().is_empty());
    }

    #[test]
    fn errors_carry_location() {
        let bad_span = r#"{"id":"x","tree":"(λ (NP a b))","entities":[{"start":1,"end":1,"label":"A"}]}"#;
        match parse_corpus(&format!("{HEART_RATE}\n{bad_span}")) {
            Err(CorpusError::Span { line: 2, id, .. }) => assert_eq!(id, "x"),
            other => panic!("{other:?}"),
        }
        let past_end = r#"{"id":"y","tree":"(λ (NP a b))","entities":[{"start":1,"end":3,"label":"A"}]}"#;
        assert!(matches!(parse_corpus(past_end), Err(CorpusError::Span { .. })));
        let bad_tree = r#"{"id":"z","tree":"(λ (NP a b)","entities":[]}"#;
        match parse_corpus(bad_tree) {
            Err(CorpusError::Tree { line: 1, id, .. }) => assert_eq!(id, "z"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_corpus("\n{not json"), Err(CorpusError::Json { line: 2, .. })));
        assert!(matches!(load_corpus(Path::new("/no/such/file.jsonl")), Err(CorpusError::Io { .. })));
    }

    #[test]
    fn round_trip() {
        let c = parse_corpus(HEART_RATE).unwrap();
        let again = parse_corpus(&write_corpus(&c)).unwrap();
        assert_eq!(c, again);
    }
}
