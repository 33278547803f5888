use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::TokenCounter;

/// Separator between the query and each document in the encoder input.
pub const DOC_SEPARATOR: &str = " [DOC] ";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDocument {
    pub url: String,
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InputError {
    #[error("query is empty")]
    EmptyQuery,
    #[error(
        "token budget {budget} leaves no room for documents after a {query_tokens}-token query"
    )]
    EmptyBudget { query_tokens: usize, budget: usize },
}

/// Query plus ranked documents, flattened and cut to the encoder budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelInput {
    pub query: String,
    /// Documents that contributed to `formatted_text`, untruncated.
    pub documents: Vec<SourceDocument>,
    pub formatted_text: String,
    pub token_budget: usize,
    /// Whether the last document was cut short.
    pub truncated: bool,
}

impl ModelInput {
    /// Full text of the contributing documents, one per line. Grounding checks
    /// run against this rather than the truncated encoder input.
    pub fn document_text(&self) -> String {
        self.documents
            .iter()
            .map(|d| format!("{} {}", d.title, d.body))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Formats `query [DOC] title1 body1 [DOC] title2 body2 ...` within
/// `token_budget` tokens as measured by `counter`.
///
/// Whitespace inside each field is collapsed to single spaces. Documents are
/// kept whole while they fit; the first one that does not fit loses trailing
/// words until the text fits, and everything after it is dropped.
pub fn build_model_input(
    query: &str,
    documents: &[SourceDocument],
    token_budget: usize,
    counter: &dyn TokenCounter,
) -> Result<ModelInput, InputError> {
    let query = query.split_whitespace().collect::<Vec<_>>().join(" ");
    if query.is_empty() {
        return Err(InputError::EmptyQuery);
    }
    let query_tokens = counter.count_tokens(&query);
    if token_budget <= query_tokens {
        return Err(InputError::EmptyBudget {
            query_tokens,
            budget: token_budget,
        });
    }

    let mut text = query.clone();
    let mut included = Vec::new();
    let mut truncated = false;

    for doc in documents {
        let words: Vec<&str> = doc
            .title
            .split_whitespace()
            .chain(doc.body.split_whitespace())
            .collect();
        if words.is_empty() {
            continue;
        }
        let with_words = |n: usize| format!("{text}{DOC_SEPARATOR}{}", words[..n].join(" "));

        let full = with_words(words.len());
        if counter.count_tokens(&full) <= token_budget {
            text = full;
            included.push(doc.clone());
            continue;
        }

        // Largest word prefix that fits; counts are monotone in the prefix.
        let (mut lo, mut hi) = (0usize, words.len() - 1);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if counter.count_tokens(&with_words(mid)) <= token_budget {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        if lo > 0 {
            text = with_words(lo);
            included.push(doc.clone());
            truncated = true;
        }
        break;
    }

    Ok(ModelInput {
        query,
        documents: included,
        formatted_text: text,
        token_budget,
        truncated,
    })
}
