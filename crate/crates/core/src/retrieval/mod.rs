//! Corpus loading, web fetching, passage ranking and input assembly.

mod assemble;
mod extract;
mod fetch;
mod ingest;
mod rank;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::InputError;

pub use assemble::{assemble_input, order_documents, retrieve, RetrievalConfig, Retrieved};
pub use extract::{extract_text, Extracted};
pub use fetch::{fetch_documents, FetchErrorKind, FetchFailure, FetchLimits, FetchOutcome};
pub use ingest::{ingest_local, load_corpus, Ingested};
pub use rank::{passages, rank_passages, Bm25Ranker, Passage, PassageRanker, RankedPassage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: usize,
    pub url: String,
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusSource {
    LocalFiles,
    Fetched,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub source: CorpusSource,
}

impl Corpus {
    /// Assigns doc ids `0..n` in the given order.
    pub fn new(
        documents: impl IntoIterator<Item = (String, String, String)>,
        source: CorpusSource,
    ) -> Self {
        let documents = documents
            .into_iter()
            .enumerate()
            .map(|(doc_id, (url, title, body))| Document {
                doc_id,
                url,
                title,
                body,
            })
            .collect();
        Corpus { documents, source }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, doc_id: usize) -> Option<&Document> {
        self.documents.get(doc_id)
    }
}

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no ranked passages to assemble")]
    NoPassages,
    #[error("invalid retrieval parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("no URL could be fetched ({} failure(s))", .0.len())]
    AllFetchesFailed(Vec<FetchFailure>),
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
