//! Labeled review corpus: loading and seeded sampling.
//!
//! On-disk formats are deliberately minimal: CSV with an `id,text,label`
//! header or JSONL with the same keys, one review per row. Labels are
//! carried through to trial records for downstream analysis but are never
//! shown to agents.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sentiment {
    Positive,
    Negative,
}

impl FromStr for Sentiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(Sentiment::Positive),
            "negative" => Ok(Sentiment::Negative),
            other => Err(format!(
                "label must be \"positive\" or \"negative\", got {other:?}"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Review {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Sentiment>,
}

/// Immutable after load; iteration order is file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub reviews: Vec<Review>,
    /// Provenance string, the path the corpus was loaded from.
    pub source: String,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusFormat::Csv => write!(f, "csv"),
            CorpusFormat::Jsonl => write!(f, "jsonl"),
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(CorpusFormat::Csv),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(format!("corpus format must be csv or jsonl, got {other:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed row: {detail}")]
    MalformedRow {
        path: String,
        line: u64,
        detail: String,
    },
    #[error("{path}:{line}: empty review text (id {id:?})")]
    EmptyText { path: String, line: u64, id: String },
    #[error("{path}:{line}: duplicate review id {id:?}")]
    DuplicateId { path: String, line: u64, id: String },
    #[error("sample of {n} exceeds corpus size {size}")]
    SampleTooLarge { n: usize, size: usize },
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    let display = path.display().to_string();
    let raw = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: display.clone(),
        source,
    })?;
    let reviews = match format {
        CorpusFormat::Csv => parse_csv(&display, &raw)?,
        CorpusFormat::Jsonl => parse_jsonl(&display, &raw)?,
    };
    Ok(Corpus {
        reviews,
        source: display,
    })
}

fn check_row(
    path: &str,
    line: u64,
    seen: &mut HashSet<String>,
    review: &Review,
) -> Result<(), CorpusError> {
    if review.id.trim().is_empty() {
        return Err(CorpusError::MalformedRow {
            path: path.to_string(),
            line,
            detail: "empty id".into(),
        });
    }
    if review.text.trim().is_empty() {
        return Err(CorpusError::EmptyText {
            path: path.to_string(),
            line,
            id: review.id.clone(),
        });
    }
    if !seen.insert(review.id.clone()) {
        return Err(CorpusError::DuplicateId {
            path: path.to_string(),
            line,
            id: review.id.clone(),
        });
    }
    Ok(())
}

fn parse_csv(path: &str, raw: &str) -> Result<Vec<Review>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(raw.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| CorpusError::MalformedRow {
            path: path.to_string(),
            line: 1,
            detail: e.to_string(),
        })?
        .clone();
    let columns: Vec<&str> = headers.iter().collect();
    let has_label = match columns.as_slice() {
        ["id", "text"] => false,
        ["id", "text", "label"] => true,
        other => {
            return Err(CorpusError::MalformedRow {
                path: path.to_string(),
                line: 1,
                detail: format!("header must be id,text[,label], got {other:?}"),
            })
        }
    };

    let mut seen = HashSet::new();
    let mut reviews = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line())
                .unwrap_or(reviews.len() as u64 + 2);
            CorpusError::MalformedRow {
                path: path.to_string(),
                line,
                detail: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let label = if has_label {
            let cell = record.get(2).unwrap_or("");
            if cell.is_empty() {
                None
            } else {
                Some(
                    cell.parse::<Sentiment>()
                        .map_err(|detail| CorpusError::MalformedRow {
                            path: path.to_string(),
                            line,
                            detail,
                        })?,
                )
            }
        } else {
            None
        };
        let review = Review {
            id: record.get(0).unwrap_or("").to_string(),
            text: record.get(1).unwrap_or("").to_string(),
            label,
        };
        check_row(path, line, &mut seen, &review)?;
        reviews.push(review);
    }
    Ok(reviews)
}

fn parse_jsonl(path: &str, raw: &str) -> Result<Vec<Review>, CorpusError> {
    let mut seen = HashSet::new();
    let mut reviews = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        let lineno = idx as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let review: Review =
            serde_json::from_str(line).map_err(|e| CorpusError::MalformedRow {
                path: path.to_string(),
                line: lineno,
                detail: e.to_string(),
            })?;
        check_row(path, lineno, &mut seen, &review)?;
        reviews.push(review);
    }
    Ok(reviews)
}

/// Draw `n` distinct reviews, fully determined by `(corpus, n, seed)`.
///
/// Partial Fisher-Yates over the index vector; `u64` draws keep the
/// stream identical across platforms.
pub fn sample_reviews<'a>(
    corpus: &'a Corpus,
    n: usize,
    seed: u64,
) -> Result<Vec<&'a Review>, CorpusError> {
    let size = corpus.len();
    if n > size {
        return Err(CorpusError::SampleTooLarge { n, size });
    }
    let mut rng = rng_from_seed(seed);
    let mut indices: Vec<usize> = (0..size).collect();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let j = i + rng.gen_range(0..(size - i) as u64) as usize;
        indices.swap(i, j);
        out.push(&corpus.reviews[indices[i]]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn corpus_of(n: usize) -> Corpus {
        let reviews = (0..n)
            .map(|i| Review {
                id: format!("r{i}"),
                text: format!("review {i}"),
                label: None,
            })
            .collect();
        Corpus {
            reviews,
            source: "test".into(),
        }
    }

    fn write_temp(content: &str, ext: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new()
            .suffix(&format!(".{ext}"))
            .tempfile()
            .unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn loads_three_row_csv_in_order() {
        let f = write_temp(
            "id,text,label\na,Great movie.,positive\nb,Terrible.,negative\nc,Fine I guess,\n",
            "csv",
        );
        let corpus = load_corpus(f.path(), CorpusFormat::Csv).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.reviews[0].id, "a");
        assert_eq!(corpus.reviews[1].label, Some(Sentiment::Negative));
        assert_eq!(corpus.reviews[2].label, None);
    }

    #[test]
    fn loads_csv_without_label_column() {
        let f = write_temp("id,text\na,Great movie.\n", "csv");
        let corpus = load_corpus(f.path(), CorpusFormat::Csv).unwrap();
        assert_eq!(corpus.reviews[0].label, None);
    }

    #[test]
    fn csv_quoting_round_trips_commas_and_newlines() {
        let f = write_temp(
            "id,text,label\na,\"Loved it, truly.\nBest since 1999.\",positive\n",
            "csv",
        );
        let corpus = load_corpus(f.path(), CorpusFormat::Csv).unwrap();
        assert_eq!(corpus.reviews[0].text, "Loved it, truly.\nBest since 1999.");
    }

    #[test]
    fn loads_jsonl() {
        let f = write_temp(
            "{\"id\":\"a\",\"text\":\"Great movie.\",\"label\":\"positive\"}\n{\"id\":\"b\",\"text\":\"Bad.\"}\n",
            "jsonl",
        );
        let corpus = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.reviews[0].label, Some(Sentiment::Positive));
        assert_eq!(corpus.reviews[1].label, None);
    }

    #[test]
    fn empty_text_names_offending_line() {
        let f = write_temp("id,text,label\na,Great.,\nb,  ,\n", "csv");
        let err = load_corpus(f.path(), CorpusFormat::Csv).unwrap_err();
        match err {
            CorpusError::EmptyText { line, ref id, .. } => {
                assert_eq!(line, 3);
                assert_eq!(id, "b");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_rejected_with_line() {
        let f = write_temp(
            "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n",
            "jsonl",
        );
        let err = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap_err();
        match err {
            CorpusError::DuplicateId { line, ref id, .. } => {
                assert_eq!(line, 2);
                assert_eq!(id, "a");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_jsonl_key_rejected() {
        let f = write_temp("{\"id\":\"a\",\"text\":\"x\",\"rating\":1}\n", "jsonl");
        let err = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap_err();
        assert!(err.to_string().contains("rating"), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_corpus(Path::new("/nonexistent/reviews.csv"), CorpusFormat::Csv)
            .unwrap_err();
        assert!(matches!(err, CorpusError::Io { .. }));
    }

    #[test]
    fn sample_zero_is_empty() {
        let corpus = corpus_of(4);
        assert!(sample_reviews(&corpus, 0, 1).unwrap().is_empty());
    }

    #[test]
    fn sample_is_deterministic() {
        let corpus = corpus_of(50);
        let a: Vec<&str> = sample_reviews(&corpus, 10, 99)
            .unwrap()
            .iter()
            .map(|r| r.id.as_str())
            .collect();
        let b: Vec<&str> = sample_reviews(&corpus, 10, 99)
            .unwrap()
            .iter()
            .map(|r| r.id.as_str())
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn full_sample_is_permutation() {
        let corpus = corpus_of(20);
        let sample = sample_reviews(&corpus, 20, 3).unwrap();
        let mut ids: Vec<&str> = sample.iter().map(|r| r.id.as_str()).collect();
        ids.sort_unstable();
        let mut expected: Vec<String> = (0..20).map(|i| format!("r{i}")).collect();
        expected.sort_unstable();
        assert_eq!(ids, expected);
    }

    #[test]
    fn sampled_ids_are_distinct() {
        let corpus = corpus_of(30);
        for seed in 0..50 {
            let sample = sample_reviews(&corpus, 15, seed).unwrap();
            let distinct: HashSet<&str> = sample.iter().map(|r| r.id.as_str()).collect();
            assert_eq!(distinct.len(), 15);
        }
    }

    #[test]
    fn oversized_sample_errors() {
        let corpus = corpus_of(3);
        assert!(matches!(
            sample_reviews(&corpus, 4, 0),
            Err(CorpusError::SampleTooLarge { n: 4, size: 3 })
        ));
    }

    #[test]
    fn single_draws_are_near_uniform() {
        // 10,000 single-review draws from 4 reviews; expected frequency
        // 0.25 per review, tolerance band [0.22, 0.28].
        let corpus = corpus_of(4);
        let mut counts = [0usize; 4];
        for seed in 0..10_000 {
            let pick = sample_reviews(&corpus, 1, seed).unwrap()[0];
            let idx: usize = pick.id[1..].parse().unwrap();
            counts[idx] += 1;
        }
        for &c in &counts {
            let freq = c as f64 / 10_000.0;
            assert!((0.22..=0.28).contains(&freq), "frequency {freq} out of band");
        }
    }
}
