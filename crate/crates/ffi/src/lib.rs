//! C interface to the blueprint library.
//!
//! Every function returns a [`BpStatus`] and writes results through out
//! pointers. On failure, [`bp_last_error`] describes what went wrong on the
//! calling thread. Strings handed out by the library are released with
//! [`bp_string_free`]; every handle has its own `_free` function. Passing
//! `NULL` to a `_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;
use std::time::Duration;

use blueprint::engine::{
    regenerate_with_plan, run_end_to_end, run_interactive, run_iterative, BackendCounter, Backends,
    EngineError, GenerationParams, GenerationResult, ModelInput, ModelKind, MAX_INPUT_TOKENS,
    MAX_OUTPUT_TOKENS,
};
use blueprint::filter::{apply_policy, FilterPolicy};
use blueprint::plan::{
    apply_edit, parse_model_output, serialize_blueprint, Blueprint, PlanEdit, PlanMode,
};
use blueprint::retrieval::{
    ingest_local, load_corpus, retrieve, Bm25Ranker, Corpus, RetrievalConfig,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpStatus {
    Ok = 0,
    /// A required pointer was null, or a string was not UTF-8.
    InvalidArgument = 1,
    Io = 2,
    /// Malformed JSON, corpus records or model output.
    Parse = 3,
    /// A plan edit or filter could not be applied.
    Plan = 4,
    Retrieval = 5,
    /// Generation failed before reaching the backend.
    Engine = 6,
    Backend = 7,
    Panic = 8,
}

pub struct BpEngine {
    backends: Backends,
}

pub struct BpCorpus {
    corpus: Corpus,
}

pub struct BpBlueprint {
    blueprint: Blueprint,
}

pub struct BpResult {
    result: GenerationResult,
    input: Arc<ModelInput>,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BpParams {
    pub max_input_tokens: usize,
    pub max_output_tokens: usize,
    pub max_pairs: usize,
    pub max_sentences: usize,
}

impl From<BpParams> for GenerationParams {
    fn from(p: BpParams) -> Self {
        GenerationParams {
            max_output_tokens: p.max_output_tokens,
            max_pairs: p.max_pairs,
            max_sentences: p.max_sentences,
        }
    }
}

struct Failure(BpStatus, String);

type Outcome = Result<(), Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nulls replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(body: impl FnOnce() -> Outcome) -> BpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => BpStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(&format!("internal error: {message}"));
            BpStatus::Panic
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(BpStatus::InvalidArgument, message.into())
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| invalid(format!("{name} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Outcome {
    if out.is_null() {
        return Err(invalid("output pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, value: String) -> Outcome {
    if out.is_null() {
        return Err(invalid("output pointer is null"));
    }
    let c = CString::new(value).map_err(|_| invalid("string contains a null byte"))?;
    *out = c.into_raw();
    Ok(())
}

fn engine_failure(e: EngineError) -> Failure {
    let status = match e {
        EngineError::Backend(_) => BpStatus::Backend,
        EngineError::Parse { .. } => BpStatus::Parse,
        _ => BpStatus::Engine,
    };
    let message = match e.raw_output() {
        Some(raw) => format!("{e} (raw output: {raw})"),
        None => e.to_string(),
    };
    Failure(status, message)
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn bp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn bp_params_default() -> BpParams {
    let d = GenerationParams::default();
    BpParams {
        max_input_tokens: MAX_INPUT_TOKENS,
        max_output_tokens: MAX_OUTPUT_TOKENS,
        max_pairs: d.max_pairs,
        max_sentences: d.max_sentences,
    }
}

/// Creates an engine. `backend` is `"stub"` or a generation server base URL.
///
/// # Safety
/// `backend` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_engine_new(
    backend: *const c_char,
    timeout_ms: u64,
    out: *mut *mut BpEngine,
) -> BpStatus {
    guard(|| {
        let spec = str_arg(backend, "backend")?;
        let backends = Backends::from_spec(spec, Duration::from_millis(timeout_ms))
            .map_err(|e| invalid(e.to_string()))?;
        put(out, BpEngine { backends })
    })
}

/// # Safety
/// `engine` must be null or a live handle from [`bp_engine_new`].
#[no_mangle]
pub unsafe extern "C" fn bp_engine_free(engine: *mut BpEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Loads a JSON-lines corpus file.
///
/// # Safety
/// `path` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_corpus_load(path: *const c_char, out: *mut *mut BpCorpus) -> BpStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let ingested = load_corpus(Path::new(path)).map_err(|e| match e {
            blueprint::retrieval::RetrievalError::Io(io) => Failure(BpStatus::Io, io.to_string()),
            other => Failure(BpStatus::Parse, other.to_string()),
        })?;
        put(
            out,
            BpCorpus {
                corpus: ingested.corpus,
            },
        )
    })
}

/// Builds a corpus from JSON-lines text held in memory.
///
/// # Safety
/// `jsonl` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_corpus_from_jsonl(
    jsonl: *const c_char,
    out: *mut *mut BpCorpus,
) -> BpStatus {
    guard(|| {
        let text = str_arg(jsonl, "jsonl")?;
        let ingested =
            ingest_local(text.as_bytes()).map_err(|e| Failure(BpStatus::Parse, e.to_string()))?;
        put(
            out,
            BpCorpus {
                corpus: ingested.corpus,
            },
        )
    })
}

/// Number of documents, or 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or a live corpus handle.
#[no_mangle]
pub unsafe extern "C" fn bp_corpus_len(corpus: *const BpCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.corpus.len())
}

/// # Safety
/// `corpus` must be null or a live corpus handle.
#[no_mangle]
pub unsafe extern "C" fn bp_corpus_free(corpus: *mut BpCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Retrieves from `corpus` and runs `model` (`end_to_end`, `iterative` or
/// `interactive`). A null `params` means [`bp_params_default`].
///
/// # Safety
/// Handles must be live, strings valid C strings, `params` null or valid and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bp_summarize(
    engine: *const BpEngine,
    corpus: *const BpCorpus,
    query: *const c_char,
    model: *const c_char,
    params: *const BpParams,
    out: *mut *mut BpResult,
) -> BpStatus {
    guard(|| {
        let engine = ref_arg(engine, "engine")?;
        let corpus = ref_arg(corpus, "corpus")?;
        let query = str_arg(query, "query")?;
        let model: ModelKind = str_arg(model, "model")?
            .parse()
            .map_err(|e: blueprint::engine::UnknownModel| invalid(e.to_string()))?;
        let params = params
            .as_ref()
            .copied()
            .unwrap_or_else(|| bp_params_default());
        let backend = engine.backends.for_model(model);
        let retrieved = retrieve(
            query,
            &corpus.corpus,
            &Bm25Ranker::default(),
            &RetrievalConfig::default(),
            params.max_input_tokens,
            &BackendCounter(backend),
        )
        .map_err(|e| Failure(BpStatus::Retrieval, e.to_string()))?;
        let gen = GenerationParams::from(params);
        let input = retrieved.input;
        let result = match model {
            ModelKind::EndToEnd => run_end_to_end(&input, backend, &gen),
            ModelKind::Iterative => run_iterative(&input, backend, &gen),
            ModelKind::Interactive => run_interactive(&input, None, backend, &gen),
        }
        .map_err(engine_failure)?;
        put(
            out,
            BpResult {
                result,
                input: Arc::new(input),
            },
        )
    })
}

/// Rewrites the summary of `previous` from `plan`, reusing its input. A
/// question-answer plan is forced as is; a question-only plan goes through
/// the interactive model.
///
/// # Safety
/// Handles must be live, `params` null or valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bp_regenerate(
    engine: *const BpEngine,
    previous: *const BpResult,
    plan: *const BpBlueprint,
    params: *const BpParams,
    out: *mut *mut BpResult,
) -> BpStatus {
    guard(|| {
        let engine = ref_arg(engine, "engine")?;
        let previous = ref_arg(previous, "previous")?;
        let plan = &ref_arg(plan, "plan")?.blueprint;
        let params = GenerationParams::from(
            params
                .as_ref()
                .copied()
                .unwrap_or_else(|| bp_params_default()),
        );
        let input = previous.input.clone();
        let result = match plan.mode() {
            PlanMode::Qa => regenerate_with_plan(
                &input,
                plan,
                engine.backends.for_model(ModelKind::EndToEnd),
                &params,
            ),
            PlanMode::QuestionOnly => {
                let questions: Vec<String> = plan
                    .included()
                    .map(|(_, p)| p.question().to_string())
                    .collect();
                run_interactive(
                    &input,
                    Some(&questions),
                    engine.backends.for_model(ModelKind::Interactive),
                    &params,
                )
            }
        }
        .map_err(engine_failure)?;
        put(out, BpResult { result, input })
    })
}

/// # Safety
/// `result` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bp_result_to_json(
    result: *const BpResult,
    out: *mut *mut c_char,
) -> BpStatus {
    guard(|| {
        let result = ref_arg(result, "result")?;
        let json = serde_json::to_string(&result.result)
            .map_err(|e| Failure(BpStatus::Parse, e.to_string()))?;
        put_string(out, json)
    })
}

/// Copies the result's plan into a new handle.
///
/// # Safety
/// `result` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bp_result_blueprint(
    result: *const BpResult,
    out: *mut *mut BpBlueprint,
) -> BpStatus {
    guard(|| {
        let result = ref_arg(result, "result")?;
        put(
            out,
            BpBlueprint {
                blueprint: result.result.blueprint.clone(),
            },
        )
    })
}

/// The summary as one string, sentences separated by single spaces.
///
/// # Safety
/// `result` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bp_result_summary_text(
    result: *const BpResult,
    out: *mut *mut c_char,
) -> BpStatus {
    guard(|| {
        let result = ref_arg(result, "result")?;
        put_string(out, result.result.summary.render())
    })
}

/// # Safety
/// `result` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn bp_result_free(result: *mut BpResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Splits decoder output into a plan and summary text. Either out pointer
/// may be null when that part is not wanted.
///
/// # Safety
/// `text` must be a valid C string; non-null out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_output_parse(
    text: *const c_char,
    question_only: bool,
    plan_out: *mut *mut BpBlueprint,
    summary_out: *mut *mut c_char,
) -> BpStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let mode = if question_only {
            PlanMode::QuestionOnly
        } else {
            PlanMode::Qa
        };
        let (blueprint, summary) =
            parse_model_output(text, mode).map_err(|e| Failure(BpStatus::Parse, e.to_string()))?;
        if !summary_out.is_null() {
            put_string(summary_out, summary.render())?;
        }
        if !plan_out.is_null() {
            put(plan_out, BpBlueprint { blueprint })?;
        }
        Ok(())
    })
}

/// # Safety
/// `json` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_blueprint_from_json(
    json: *const c_char,
    out: *mut *mut BpBlueprint,
) -> BpStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        let blueprint: Blueprint =
            serde_json::from_str(json).map_err(|e| Failure(BpStatus::Parse, e.to_string()))?;
        put(out, BpBlueprint { blueprint })
    })
}

/// # Safety
/// `bp` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bp_blueprint_to_json(
    bp: *const BpBlueprint,
    out: *mut *mut c_char,
) -> BpStatus {
    guard(|| {
        let bp = ref_arg(bp, "blueprint")?;
        let json = serde_json::to_string(&bp.blueprint)
            .map_err(|e| Failure(BpStatus::Parse, e.to_string()))?;
        put_string(out, json)
    })
}

/// The plan in decoder-prefix form, included pairs only.
///
/// # Safety
/// `bp` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bp_blueprint_serialize(
    bp: *const BpBlueprint,
    out: *mut *mut c_char,
) -> BpStatus {
    guard(|| {
        put_string(
            out,
            serialize_blueprint(&ref_arg(bp, "blueprint")?.blueprint),
        )
    })
}

/// Number of pairs, included or not; 0 for a null handle.
///
/// # Safety
/// `bp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bp_blueprint_len(bp: *const BpBlueprint) -> usize {
    bp.as_ref().map_or(0, |b| b.blueprint.len())
}

/// # Safety
/// `bp` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bp_blueprint_question(
    bp: *const BpBlueprint,
    index: usize,
    out: *mut *mut c_char,
) -> BpStatus {
    guard(|| {
        let bp = ref_arg(bp, "blueprint")?;
        let pair = bp.blueprint.pairs().get(index).ok_or_else(|| {
            invalid(format!(
                "index {index} out of range for {} pairs",
                bp.blueprint.len()
            ))
        })?;
        put_string(out, pair.question().to_string())
    })
}

/// Applies an edit given as JSON, e.g. `{"kind":"toggle_include","target_index":0}`.
///
/// # Safety
/// `bp` must be live, `edit_json` a valid C string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bp_blueprint_apply_edit(
    bp: *const BpBlueprint,
    edit_json: *const c_char,
    out: *mut *mut BpBlueprint,
) -> BpStatus {
    guard(|| {
        let bp = ref_arg(bp, "blueprint")?;
        let edit: PlanEdit = serde_json::from_str(str_arg(edit_json, "edit_json")?)
            .map_err(|e| Failure(BpStatus::Parse, e.to_string()))?;
        let blueprint =
            apply_edit(&bp.blueprint, &edit).map_err(|e| Failure(BpStatus::Plan, e.to_string()))?;
        put(out, BpBlueprint { blueprint })
    })
}

/// Removes pairs whose answers are not grounded in `input_text`. A null
/// `policy_json` uses the default policy.
///
/// # Safety
/// `bp` must be live, strings null or valid C strings as noted, and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn bp_blueprint_filter(
    bp: *const BpBlueprint,
    input_text: *const c_char,
    policy_json: *const c_char,
    out: *mut *mut BpBlueprint,
) -> BpStatus {
    guard(|| {
        let bp = ref_arg(bp, "blueprint")?;
        let text = str_arg(input_text, "input_text")?;
        let policy: FilterPolicy = if policy_json.is_null() {
            FilterPolicy::default()
        } else {
            serde_json::from_str(str_arg(policy_json, "policy_json")?)
                .map_err(|e| Failure(BpStatus::Parse, e.to_string()))?
        };
        let blueprint = apply_policy(&bp.blueprint, text, &policy)
            .map_err(|e| Failure(BpStatus::Plan, e.to_string()))?;
        put(out, BpBlueprint { blueprint })
    })
}

/// # Safety
/// `bp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bp_blueprint_free(bp: *mut BpBlueprint) {
    if !bp.is_null() {
        drop(Box::from_raw(bp));
    }
}
