use std::time::Duration;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use super::extract::extract_text;
use super::{Corpus, CorpusSource, RetrievalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FetchLimits {
    pub concurrency: usize,
    pub timeout: Duration,
    pub max_bytes: usize,
}

impl Default for FetchLimits {
    fn default() -> Self {
        FetchLimits {
            concurrency: 8,
            timeout: Duration::from_secs(10),
            max_bytes: 2 * 1024 * 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum FetchErrorKind {
    Timeout,
    Status(u16),
    Network(String),
    TooLarge,
    EmptyExtraction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchFailure {
    pub url: String,
    pub error: FetchErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchOutcome {
    pub corpus: Corpus,
    pub failures: Vec<FetchFailure>,
}

fn network(e: reqwest::Error) -> FetchErrorKind {
    if e.is_timeout() {
        FetchErrorKind::Timeout
    } else {
        FetchErrorKind::Network(e.to_string())
    }
}

async fn fetch_one(
    client: &reqwest::Client,
    url: &str,
    max_bytes: usize,
) -> Result<(String, String), FetchErrorKind> {
    let mut response = client.get(url).send().await.map_err(network)?;
    if !response.status().is_success() {
        return Err(FetchErrorKind::Status(response.status().as_u16()));
    }
    if response
        .content_length()
        .is_some_and(|n| n as usize > max_bytes)
    {
        return Err(FetchErrorKind::TooLarge);
    }
    let mut bytes = Vec::new();
    while let Some(chunk) = response.chunk().await.map_err(network)? {
        if bytes.len() + chunk.len() > max_bytes {
            return Err(FetchErrorKind::TooLarge);
        }
        bytes.extend_from_slice(&chunk);
    }
    let html = String::from_utf8_lossy(&bytes);
    let page = extract_text(&html, url).ok_or(FetchErrorKind::EmptyExtraction)?;
    Ok((page.title, page.body))
}

/// Downloads and extracts each URL. Up to `limits.concurrency` requests run
/// at once; results keep the order of `urls` whatever order they finish in.
pub async fn fetch_documents(
    urls: &[String],
    limits: &FetchLimits,
) -> Result<FetchOutcome, RetrievalError> {
    if urls.is_empty() {
        return Err(RetrievalError::InvalidParameter("no URLs to fetch".into()));
    }
    if limits.concurrency == 0 {
        return Err(RetrievalError::InvalidParameter(
            "fetch concurrency must be positive".into(),
        ));
    }
    let client = reqwest::Client::builder()
        .timeout(limits.timeout)
        .build()
        .map_err(|e| RetrievalError::InvalidParameter(e.to_string()))?;

    let max_bytes = limits.max_bytes;
    let results: Vec<_> = stream::iter(urls.iter().cloned())
        .map(|url| {
            let client = client.clone();
            async move {
                let result = fetch_one(&client, &url, max_bytes).await;
                (url, result)
            }
        })
        .buffered(limits.concurrency)
        .collect()
        .await;

    let mut docs = Vec::new();
    let mut failures = Vec::new();
    for (url, result) in results {
        match result {
            Ok((title, body)) => docs.push((url, title, body)),
            Err(error) => {
                tracing::warn!(%url, ?error, "fetch failed");
                failures.push(FetchFailure { url, error });
            }
        }
    }
    if docs.is_empty() {
        return Err(RetrievalError::AllFetchesFailed(failures));
    }
    Ok(FetchOutcome {
        corpus: Corpus::new(docs, CorpusSource::Fetched),
        failures,
    })
}
