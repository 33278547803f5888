use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Corpus, RetrievalError};
use crate::text::{segment_sentences, terms};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPassage {
    pub doc_id: usize,
    /// Index of the passage's first sentence within its document.
    pub start: usize,
    pub passage_text: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// A window of consecutive sentences from one document body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Passage {
    pub doc_id: usize,
    pub start: usize,
    pub text: String,
    pub terms: Vec<String>,
}

/// Splits every body into non-overlapping windows of `window` sentences. The
/// last window of a document may be shorter.
pub fn passages(corpus: &Corpus, window: usize) -> Vec<Passage> {
    let mut out = Vec::new();
    for doc in &corpus.documents {
        let sentences = segment_sentences(&doc.body);
        for (i, chunk) in sentences.chunks(window.max(1)).enumerate() {
            let text = chunk.join(" ");
            out.push(Passage {
                doc_id: doc.doc_id,
                start: i * window,
                terms: terms(&text),
                text,
            });
        }
    }
    out
}

pub trait PassageRanker: Send + Sync {
    /// Scores `passages` against `query`, one score per passage, same order.
    fn score(&self, query: &str, passages: &[Passage]) -> Vec<f64>;
}

/// Okapi BM25 over normalized terms, with document frequencies taken over
/// passages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Ranker {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Ranker {
    fn default() -> Self {
        Bm25Ranker { k1: 1.2, b: 0.75 }
    }
}

impl PassageRanker for Bm25Ranker {
    fn score(&self, query: &str, passages: &[Passage]) -> Vec<f64> {
        let mut query_terms: Vec<String> = Vec::new();
        for t in terms(query) {
            if !query_terms.contains(&t) {
                query_terms.push(t);
            }
        }

        let n = passages.len() as f64;
        let tfs: Vec<HashMap<&str, usize>> = passages
            .iter()
            .map(|p| {
                let mut tf = HashMap::new();
                for t in &p.terms {
                    *tf.entry(t.as_str()).or_insert(0) += 1;
                }
                tf
            })
            .collect();
        let idf: Vec<f64> = query_terms
            .iter()
            .map(|q| {
                let df = tfs.iter().filter(|tf| tf.contains_key(q.as_str())).count() as f64;
                (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
            })
            .collect();
        let total: usize = passages.iter().map(|p| p.terms.len()).sum();
        let avgdl = if passages.is_empty() {
            0.0
        } else {
            total as f64 / n
        };

        passages
            .iter()
            .zip(&tfs)
            .map(|(p, tf)| {
                let rel_len = if avgdl > 0.0 {
                    p.terms.len() as f64 / avgdl
                } else {
                    1.0
                };
                let norm = self.k1 * (1.0 - self.b + self.b * rel_len);
                let mut score = 0.0;
                for (q, w) in query_terms.iter().zip(&idf) {
                    let f = tf.get(q.as_str()).copied().unwrap_or(0) as f64;
                    if f > 0.0 {
                        score += w * f * (self.k1 + 1.0) / (f + norm);
                    }
                }
                score
            })
            .collect()
    }
}

/// Top `k` passages by score. Equal scores keep the lower doc id first, then
/// the earlier passage.
pub fn rank_passages(
    ranker: &dyn PassageRanker,
    query: &str,
    corpus: &Corpus,
    k: usize,
    window: usize,
) -> Result<Vec<RankedPassage>, RetrievalError> {
    if query.trim().is_empty() {
        return Err(RetrievalError::EmptyQuery);
    }
    if k == 0 || window == 0 {
        return Err(RetrievalError::InvalidParameter(
            "k and passage window must be positive".into(),
        ));
    }
    let passages = passages(corpus, window);
    if passages.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }
    let scores = ranker.score(query, &passages);
    let mut order: Vec<usize> = (0..passages.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then(passages[a].doc_id.cmp(&passages[b].doc_id))
            .then(passages[a].start.cmp(&passages[b].start))
    });
    Ok(order
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, idx)| {
            let p = &passages[idx];
            RankedPassage {
                doc_id: p.doc_id,
                start: p.start,
                passage_text: p.text.clone(),
                score: scores[idx],
                rank: i + 1,
            }
        })
        .collect())
}
