//! The three plan-then-write control flows over an abstract decoder.
//!
//! A [`GeneratorBackend`] continues a forced decoder prefix given a source
//! text. End-to-end generation lets it write `plan [SUMMARY] summary` in one
//! go; regeneration forces an edited plan and lets it write only the summary;
//! the iterative flow forces the sentences written so far and asks for one
//! more per-sentence plan and sentence at a time.

mod backend;
mod flows;
mod input;
mod remote;
mod stub;

pub use backend::{
    serialized, BackendCounter, BackendError, Backends, Concurrency, FinishReason, Generation,
    GeneratorBackend,
};
pub use flows::{
    regenerate_with_plan, run_end_to_end, run_interactive, run_iterative, EngineError,
    GenerationParams, GenerationResult, IterationStep, MAX_OUTPUT_TOKENS,
};
pub use input::{build_model_input, InputError, ModelInput, SourceDocument, DOC_SEPARATOR};
pub use remote::{GenerateRequest, GenerateResponse, RemoteBackend};
pub use stub::{StubBackend, FALLBACK_PREFIX};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Literal the iterative model emits when it has nothing left to say.
pub const STOP_MARKER: &str = " [DONE] ";

/// Default encoder input limit, in tokens.
pub const MAX_INPUT_TOKENS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    EndToEnd,
    Iterative,
    Interactive,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::EndToEnd,
        ModelKind::Iterative,
        ModelKind::Interactive,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ModelKind::EndToEnd => "end_to_end",
            ModelKind::Iterative => "iterative",
            ModelKind::Interactive => "interactive",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown model {0:?}")]
pub struct UnknownModel(pub String);

impl FromStr for ModelKind {
    type Err = UnknownModel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| UnknownModel(s.to_string()))
    }
}
