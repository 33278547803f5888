//! Helpers shared by the integration tests: seeded random inputs and
//! brute-force reference implementations.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use blueprint::engine::{BackendError, Generation, GeneratorBackend};
use blueprint::retrieval::{Corpus, CorpusSource};
use parking_lot::Mutex;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small vocabulary so that term collisions and score ties are common.
pub const VOCAB: &[&str] = &[
    "river", "stone", "harbor", "lamp", "orbit", "cedar", "signal", "copper", "meadow", "falcon",
    "glacier", "violet", "engine", "canyon", "ember", "tide", "the", "of", "and", "is",
];

pub fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// A generated sentence: lowercase words plus its display form
/// (`Capitalized words ending with a period.`).
#[derive(Debug, Clone)]
pub struct GenSentence {
    pub words: Vec<String>,
}

impl GenSentence {
    pub fn text(&self) -> String {
        let mut words = self.words.clone();
        words[0] = capitalize(&words[0]);
        format!("{}.", words.join(" "))
    }
}

#[derive(Debug, Clone)]
pub struct GenDoc {
    pub title: String,
    pub sentences: Vec<GenSentence>,
}

impl GenDoc {
    pub fn body(&self) -> String {
        self.sentences
            .iter()
            .map(GenSentence::text)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub fn random_sentence(rng: &mut TestRng, min: usize, max: usize) -> GenSentence {
    let n = rng.random_range(min..=max);
    GenSentence {
        words: (0..n)
            .map(|_| VOCAB.choose(rng).unwrap().to_string())
            .collect(),
    }
}

pub fn random_docs(rng: &mut TestRng, max_docs: usize, max_sentences: usize) -> Vec<GenDoc> {
    let n = rng.random_range(1..=max_docs);
    (0..n)
        .map(|i| GenDoc {
            title: format!("Doc {i}"),
            sentences: (0..rng.random_range(1..=max_sentences))
                .map(|_| random_sentence(rng, 2, 9))
                .collect(),
        })
        .collect()
}

pub fn corpus_of(docs: &[GenDoc]) -> Corpus {
    Corpus::new(
        docs.iter().enumerate().map(|(i, d)| {
            (
                format!("https://example.org/{i}"),
                d.title.clone(),
                d.body(),
            )
        }),
        CorpusSource::LocalFiles,
    )
}

pub fn random_query(rng: &mut TestRng) -> String {
    let n = rng.random_range(1..=4);
    let words: Vec<&str> = (0..n).map(|_| *VOCAB.choose(rng).unwrap()).collect();
    format!("{}?", capitalize(&words.join(" ")))
}

/// Brute-force BM25 (k1 = 1.2, b = 0.75) over windows of `window` generated
/// sentences, returning `(doc_id, start, score)` sorted by score, then doc,
/// then start, and cut to `k`.
pub fn brute_force_bm25(
    query: &str,
    docs: &[GenDoc],
    k: usize,
    window: usize,
) -> Vec<(usize, usize, f64)> {
    let (k1, b) = (1.2f64, 0.75f64);
    let mut query_terms: Vec<String> = Vec::new();
    for raw in query.split_whitespace() {
        let t = raw
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase();
        if !t.is_empty() && !query_terms.contains(&t) {
            query_terms.push(t);
        }
    }
    let mut passages: Vec<(usize, usize, Vec<String>)> = Vec::new();
    for (d, doc) in docs.iter().enumerate() {
        let mut start = 0;
        while start < doc.sentences.len() {
            let end = (start + window).min(doc.sentences.len());
            let words = doc.sentences[start..end]
                .iter()
                .flat_map(|s| s.words.iter().cloned())
                .collect();
            passages.push((d, start, words));
            start = end;
        }
    }
    let n = passages.len() as f64;
    let avgdl = passages.iter().map(|p| p.2.len()).sum::<usize>() as f64 / n;
    let mut scored: Vec<(usize, usize, f64)> = passages
        .iter()
        .map(|(d, s, words)| {
            let mut score = 0.0;
            for q in &query_terms {
                let df = passages.iter().filter(|p| p.2.contains(q)).count() as f64;
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                let f = words.iter().filter(|w| *w == q).count() as f64;
                if f > 0.0 {
                    let norm = k1 * (1.0 - b + b * (words.len() as f64 / avgdl));
                    score += idf * f * (k1 + 1.0) / (f + norm);
                }
            }
            (*d, *s, score)
        })
        .collect();
    scored.sort_by(|x, y| y.2.total_cmp(&x.2).then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1)));
    scored.truncate(k);
    scored
}

/// Lowercases and strips edge punctuation from each token, as a reference
/// for containment checks on generated text.
pub fn reference_normalize(text: &str) -> String {
    text.split_whitespace()
        .map(|t| t.to_lowercase())
        .map(|t| {
            t.trim_matches(|c: char| !c.is_alphanumeric() && c != '$' && c != '%')
                .to_string()
        })
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Indices of the answers contained in `input` after normalization.
pub fn containment_oracle(answers: &[String], input: &str) -> Vec<usize> {
    let haystack = reference_normalize(input);
    answers
        .iter()
        .enumerate()
        .filter(|(_, a)| {
            let needle = reference_normalize(a);
            !needle.is_empty() && haystack.contains(&needle)
        })
        .map(|(i, _)| i)
        .collect()
}

pub fn content_overlap(a: &str, b: &str) -> usize {
    let terms = |s: &str| -> BTreeSet<String> {
        reference_normalize(s)
            .split(' ')
            .filter(|t| !t.is_empty() && !blueprint::text::is_stop_word(t))
            .map(str::to_string)
            .collect()
    };
    terms(a).intersection(&terms(b)).count()
}

/// Wraps a backend and records every call.
pub struct Recording<B> {
    pub inner: B,
    pub calls: Mutex<Vec<Call>>,
}

#[derive(Debug, Clone)]
pub struct Call {
    pub source: String,
    pub prefix: String,
    pub max_new_tokens: usize,
}

impl<B> Recording<B> {
    pub fn new(inner: B) -> Self {
        Recording {
            inner,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<Call> {
        self.calls.lock().clone()
    }
}

impl<B: GeneratorBackend> GeneratorBackend for Recording<B> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn generate(
        &self,
        source: &str,
        forced_prefix: &str,
        max_new_tokens: usize,
    ) -> Result<Generation, BackendError> {
        self.calls.lock().push(Call {
            source: source.to_string(),
            prefix: forced_prefix.to_string(),
            max_new_tokens,
        });
        self.inner.generate(source, forced_prefix, max_new_tokens)
    }

    fn count_tokens(&self, text: &str) -> usize {
        self.inner.count_tokens(text)
    }
}

/// Sentences of each document in a formatted model input.
pub fn input_sentences(formatted_text: &str) -> Vec<String> {
    formatted_text
        .split(blueprint::engine::DOC_SEPARATOR)
        .skip(1)
        .flat_map(blueprint::text::segment_sentences)
        .collect()
}

/// Counts of pair index to sentence index matches, over every pair.
pub fn full_alignment(
    answers: &[(usize, String)],
    sentences: &[String],
) -> BTreeMap<usize, Vec<usize>> {
    let mut out = BTreeMap::new();
    for (i, s) in sentences.iter().enumerate() {
        let s = reference_normalize(s);
        let hits: Vec<usize> = answers
            .iter()
            .filter(|(_, a)| s.contains(&reference_normalize(a)))
            .map(|(j, _)| *j)
            .collect();
        if !hits.is_empty() {
            out.insert(i, hits);
        }
    }
    out
}

/// Runs `f`, returning its value and the elapsed wall time.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// An API server on an ephemeral local port, stopped on drop.
pub struct TestServer {
    pub base: String,
    pub client: reqwest::Client,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    pub handle: Option<tokio::task::JoinHandle<std::io::Result<()>>>,
}

impl TestServer {
    pub async fn start(state: blueprint::service::AppState) -> TestServer {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let handle = tokio::spawn(blueprint::service::serve(listener, state, async {
            let _ = rx.await;
        }));
        TestServer {
            base,
            client: reqwest::Client::new(),
            shutdown: Some(tx),
            handle: Some(handle),
        }
    }

    /// Stub backends over the bundled fixture corpus `name`.
    pub async fn fixture(name: &str) -> TestServer {
        Self::with_config(name, blueprint::service::ServiceConfig::default()).await
    }

    pub async fn with_config(name: &str, config: blueprint::service::ServiceConfig) -> TestServer {
        let corpus = blueprint::fixtures::corpus_fixture(name).unwrap().corpus();
        let state = blueprint::service::AppState::new(
            blueprint::engine::Backends::stub(),
            Some(corpus),
            config,
        );
        Self::start(state).await
    }

    /// Status and raw body text.
    pub async fn post(&self, path: &str, body: &serde_json::Value) -> (u16, String) {
        let resp = self
            .client
            .post(format!("{}{path}", self.base))
            .json(body)
            .send()
            .await
            .unwrap();
        (resp.status().as_u16(), resp.text().await.unwrap())
    }

    pub async fn post_json(
        &self,
        path: &str,
        body: &serde_json::Value,
    ) -> (u16, serde_json::Value) {
        let (status, text) = self.post(path, body).await;
        (
            status,
            serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}")),
        )
    }

    pub async fn get(&self, path: &str) -> (u16, String) {
        let resp = self
            .client
            .get(format!("{}{path}", self.base))
            .send()
            .await
            .unwrap();
        (resp.status().as_u16(), resp.text().await.unwrap())
    }

    pub async fn stop(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(handle) = self.handle.take() {
            handle.await.unwrap().unwrap();
        }
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}
