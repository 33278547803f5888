use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::{Corpus, CorpusSource, RetrievalError};

#[derive(Deserialize)]
struct Record {
    url: String,
    title: String,
    body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ingested {
    pub corpus: Corpus,
    /// Records dropped because their body was blank.
    pub skipped_empty: usize,
}

/// Reads one JSON object `{url, title, body}` per line. Blank lines are
/// ignored; line numbers in errors are 1-based.
pub fn ingest_local(reader: impl BufRead) -> Result<Ingested, RetrievalError> {
    let mut docs = Vec::new();
    let mut skipped_empty = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(&line).map_err(|e| RetrievalError::MalformedRecord {
                line: i + 1,
                message: e.to_string(),
            })?;
        if record.body.trim().is_empty() {
            skipped_empty += 1;
            continue;
        }
        docs.push((record.url, record.title, record.body));
    }
    if skipped_empty > 0 {
        tracing::warn!(skipped_empty, "dropped records with empty bodies");
    }
    if docs.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }
    Ok(Ingested {
        corpus: Corpus::new(docs, CorpusSource::LocalFiles),
        skipped_empty,
    })
}

pub fn load_corpus(path: &Path) -> Result<Ingested, RetrievalError> {
    ingest_local(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest(text: &str) -> Result<Ingested, RetrievalError> {
        ingest_local(text.as_bytes())
    }

    #[test]
    fn assigns_ids_in_file_order() {
        let text = (0..3)
            .map(|i| format!(r#"{{"url":"u{i}","title":"t{i}","body":"b{i}"}}"#))
            .collect::<Vec<_>>()
            .join("\n");
        let got = ingest(&text).unwrap();
        let ids: Vec<_> = got.corpus.documents.iter().map(|d| d.doc_id).collect();
        assert_eq!(ids, [0, 1, 2]);
        assert_eq!(got.corpus.documents[2].url, "u2");
        assert_eq!(got.corpus.source, CorpusSource::LocalFiles);
    }

    #[test]
    fn missing_body_reports_line() {
        let text =
            "{\"url\":\"u\",\"title\":\"t\",\"body\":\"b\"}\n{\"url\":\"u\",\"title\":\"t\"}\n";
        assert!(matches!(
            ingest(text),
            Err(RetrievalError::MalformedRecord { line: 2, .. })
        ));
    }

    #[test]
    fn empty_input_is_an_empty_corpus() {
        assert!(matches!(ingest(""), Err(RetrievalError::EmptyCorpus)));
        assert!(matches!(
            ingest(r#"{"url":"u","title":"t","body":"  "}"#),
            Err(RetrievalError::EmptyCorpus)
        ));
    }

    #[test]
    fn counts_empty_bodies() {
        let text = "{\"url\":\"a\",\"title\":\"\",\"body\":\"\"}\n\n{\"url\":\"b\",\"title\":\"\",\"body\":\"x\"}";
        let got = ingest(text).unwrap();
        assert_eq!(got.skipped_empty, 1);
        assert_eq!(got.corpus.documents[0].doc_id, 0);
        assert_eq!(got.corpus.documents[0].url, "b");
    }
}
