use std::sync::Arc;
use std::time::Duration;

use parking_lot::FairMutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ModelKind, RemoteBackend, StubBackend};
use crate::text::{self, TokenCounter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    StopMarker,
    TokenLimit,
}

/// One decoder continuation. `text` never repeats the forced prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generation {
    pub text: String,
    pub finish_reason: FinishReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("backend timed out")]
    Timeout,
    #[error("backend protocol error: {0}")]
    Protocol(String),
    #[error("backend rejected the prompt: {0}")]
    InvalidPrompt(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Concurrency {
    /// `generate` may be called from many threads at once.
    Parallel,
    /// Calls must be funneled one at a time, in arrival order.
    Serial,
}

/// A text generator that can be prompted on the decoder side.
pub trait GeneratorBackend: Send + Sync {
    fn id(&self) -> &str;

    fn generate(
        &self,
        source: &str,
        forced_prefix: &str,
        max_new_tokens: usize,
    ) -> Result<Generation, BackendError>;

    fn count_tokens(&self, text: &str) -> usize {
        text::count_tokens(text)
    }

    fn concurrency(&self) -> Concurrency {
        Concurrency::Parallel
    }
}

/// Measures budgets with a backend's own tokenizer.
pub struct BackendCounter<'a>(pub &'a dyn GeneratorBackend);

impl TokenCounter for BackendCounter<'_> {
    fn count_tokens(&self, text: &str) -> usize {
        self.0.count_tokens(text)
    }
}

struct SerialBackend {
    inner: Arc<dyn GeneratorBackend>,
    gate: FairMutex<()>,
}

impl GeneratorBackend for SerialBackend {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn generate(
        &self,
        source: &str,
        forced_prefix: &str,
        max_new_tokens: usize,
    ) -> Result<Generation, BackendError> {
        let _turn = self.gate.lock();
        self.inner.generate(source, forced_prefix, max_new_tokens)
    }

    fn count_tokens(&self, text: &str) -> usize {
        self.inner.count_tokens(text)
    }

    fn concurrency(&self) -> Concurrency {
        Concurrency::Parallel
    }
}

/// Wraps backends that declared [`Concurrency::Serial`] in a FIFO gate so
/// callers can share them freely.
pub fn serialized(backend: Arc<dyn GeneratorBackend>) -> Arc<dyn GeneratorBackend> {
    match backend.concurrency() {
        Concurrency::Parallel => backend,
        Concurrency::Serial => Arc::new(SerialBackend {
            inner: backend,
            gate: FairMutex::new(()),
        }),
    }
}

/// One backend per model variant, as each variant is a separately trained
/// decoder.
#[derive(Clone)]
pub struct Backends {
    id: String,
    end_to_end: Arc<dyn GeneratorBackend>,
    iterative: Arc<dyn GeneratorBackend>,
    interactive: Arc<dyn GeneratorBackend>,
}

impl Backends {
    pub fn new(
        id: impl Into<String>,
        end_to_end: Arc<dyn GeneratorBackend>,
        iterative: Arc<dyn GeneratorBackend>,
        interactive: Arc<dyn GeneratorBackend>,
    ) -> Self {
        Backends {
            id: id.into(),
            end_to_end: serialized(end_to_end),
            iterative: serialized(iterative),
            interactive: serialized(interactive),
        }
    }

    pub fn stub() -> Self {
        Self::new(
            "stub",
            Arc::new(StubBackend::new(ModelKind::EndToEnd)),
            Arc::new(StubBackend::new(ModelKind::Iterative)),
            Arc::new(StubBackend::new(ModelKind::Interactive)),
        )
    }

    /// Remote variants live at `<base_url>/<model id>`.
    pub fn remote(base_url: &str, timeout: Duration) -> Result<Self, BackendError> {
        let base = base_url.trim_end_matches('/');
        let make = |kind: ModelKind| -> Result<Arc<dyn GeneratorBackend>, BackendError> {
            Ok(Arc::new(RemoteBackend::new(
                format!("{base}/{}", kind.id()),
                timeout,
            )?))
        };
        Ok(Self::new(
            "remote",
            make(ModelKind::EndToEnd)?,
            make(ModelKind::Iterative)?,
            make(ModelKind::Interactive)?,
        ))
    }

    /// `"stub"` or an `http(s)://` base URL.
    pub fn from_spec(spec: &str, timeout: Duration) -> Result<Self, BackendError> {
        match spec {
            "stub" => Ok(Self::stub()),
            url if url.starts_with("http://") || url.starts_with("https://") => {
                Self::remote(url, timeout)
            }
            other => Err(BackendError::Unavailable(format!(
                "unknown backend {other:?}; expected \"stub\" or an http(s) URL"
            ))),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn for_model(&self, kind: ModelKind) -> &dyn GeneratorBackend {
        match kind {
            ModelKind::EndToEnd => self.end_to_end.as_ref(),
            ModelKind::Iterative => self.iterative.as_ref(),
            ModelKind::Interactive => self.interactive.as_ref(),
        }
    }
}

impl std::fmt::Debug for Backends {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Backends").field("id", &self.id).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::thread;

    struct Exclusive {
        active: AtomicUsize,
        overlaps: AtomicUsize,
    }

    impl GeneratorBackend for Exclusive {
        fn id(&self) -> &str {
            "exclusive"
        }

        fn generate(&self, _: &str, _: &str, _: usize) -> Result<Generation, BackendError> {
            if self.active.fetch_add(1, Ordering::SeqCst) > 0 {
                self.overlaps.fetch_add(1, Ordering::SeqCst);
            }
            thread::sleep(Duration::from_millis(2));
            self.active.fetch_sub(1, Ordering::SeqCst);
            Ok(Generation {
                text: String::new(),
                finish_reason: FinishReason::StopMarker,
            })
        }

        fn concurrency(&self) -> Concurrency {
            Concurrency::Serial
        }
    }

    #[test]
    fn serial_backends_never_overlap() {
        let raw = Arc::new(Exclusive {
            active: AtomicUsize::new(0),
            overlaps: AtomicUsize::new(0),
        });
        let wrapped = serialized(raw.clone());
        thread::scope(|s| {
            for _ in 0..8 {
                let b = wrapped.clone();
                s.spawn(move || {
                    for _ in 0..5 {
                        b.generate("", "", 1).unwrap();
                    }
                });
            }
        });
        assert_eq!(raw.overlaps.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            Backends::from_spec("stub", Duration::from_secs(1))
                .unwrap()
                .id(),
            "stub"
        );
        assert!(Backends::from_spec("gpu", Duration::from_secs(1)).is_err());
        assert_eq!(
            Backends::from_spec("http://127.0.0.1:9", Duration::from_secs(1))
                .unwrap()
                .id(),
            "remote"
        );
    }
}
