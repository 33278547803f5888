use serde::{Deserialize, Serialize};

use super::rank::{rank_passages, PassageRanker, RankedPassage};
use super::{Corpus, Document, RetrievalError};
use crate::engine::{build_model_input, ModelInput, SourceDocument};
use crate::text::TokenCounter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub top_k: usize,
    pub passage_window: usize,
    /// Cap on documents handed to the generator.
    pub max_docs: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            top_k: 20,
            passage_window: 5,
            max_docs: 5,
        }
    }
}

/// Documents in order of their best passage's rank, each listed once.
pub fn order_documents<'c>(ranked: &[RankedPassage], corpus: &'c Corpus) -> Vec<&'c Document> {
    let mut by_rank: Vec<&RankedPassage> = ranked.iter().collect();
    by_rank.sort_by_key(|p| p.rank);
    let mut seen = Vec::new();
    for p in by_rank {
        if !seen.contains(&p.doc_id) {
            seen.push(p.doc_id);
        }
    }
    seen.into_iter().filter_map(|id| corpus.get(id)).collect()
}

/// Feeds whole documents, ordered by [`order_documents`], into
/// [`build_model_input`].
pub fn assemble_input(
    query: &str,
    ranked: &[RankedPassage],
    corpus: &Corpus,
    token_budget: usize,
    counter: &dyn TokenCounter,
) -> Result<ModelInput, RetrievalError> {
    if ranked.is_empty() {
        return Err(RetrievalError::NoPassages);
    }
    let docs: Vec<SourceDocument> = order_documents(ranked, corpus)
        .into_iter()
        .map(|d| SourceDocument {
            url: d.url.clone(),
            title: d.title.clone(),
            body: d.body.clone(),
        })
        .collect();
    Ok(build_model_input(query, &docs, token_budget, counter)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieved {
    pub ranked: Vec<RankedPassage>,
    /// The documents selected for generation, in rank order.
    pub documents: Vec<Document>,
    pub input: ModelInput,
}

/// Ranks passages, keeps the best `config.max_docs` documents and assembles
/// the model input from them.
pub fn retrieve(
    query: &str,
    corpus: &Corpus,
    ranker: &dyn PassageRanker,
    config: &RetrievalConfig,
    token_budget: usize,
    counter: &dyn TokenCounter,
) -> Result<Retrieved, RetrievalError> {
    if config.max_docs == 0 {
        return Err(RetrievalError::InvalidParameter(
            "max_docs must be positive".into(),
        ));
    }
    let ranked = rank_passages(ranker, query, corpus, config.top_k, config.passage_window)?;
    let documents: Vec<Document> = order_documents(&ranked, corpus)
        .into_iter()
        .take(config.max_docs)
        .cloned()
        .collect();
    let kept: Vec<RankedPassage> = ranked
        .iter()
        .filter(|p| documents.iter().any(|d| d.doc_id == p.doc_id))
        .cloned()
        .collect();
    let input = assemble_input(query, &kept, corpus, token_budget, counter)?;
    Ok(Retrieved {
        ranked,
        documents,
        input,
    })
}
