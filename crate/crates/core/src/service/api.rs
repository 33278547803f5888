use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Request, State};
use axum::http::StatusCode;
use axum::Json;
use serde::{Deserialize, Serialize};

use super::error::ApiError;
use super::session::Session;
use super::AppState;
use crate::engine::{
    regenerate_with_plan, run_end_to_end, run_interactive, run_iterative, BackendCounter,
    EngineError, GenerationParams, GenerationResult, GeneratorBackend, ModelKind,
};
use crate::filter::{apply_policy, FilterPolicy};
use crate::plan::{Blueprint, PlanMode};
use crate::retrieval::{fetch_documents, retrieve, Bm25Ranker, Document, FetchFailure};

/// `Json` with rejections reported in the service's error format.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(value)) => Ok(ApiJson(value)),
            Err(rejection) => Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "InvalidRequest",
                rejection.body_text(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub id: ModelKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelsResponse {
    pub models: Vec<ModelDescriptor>,
    pub backends: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrieveRequest {
    pub query: String,
    #[serde(default)]
    pub urls: Vec<String>,
    #[serde(default)]
    pub max_docs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrieveResponse {
    pub session_id: String,
    pub documents: Vec<Document>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<FetchFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummarizeRequest {
    pub session_id: String,
    pub model: String,
    #[serde(default)]
    pub params: GenerationParams,
    /// Interactive model only: questions to force as the plan.
    #[serde(default)]
    pub questions: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegenerateRequest {
    pub session_id: String,
    pub model: String,
    pub blueprint: Blueprint,
    #[serde(default)]
    pub params: GenerationParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRequest {
    pub session_id: String,
    #[serde(default)]
    pub policy: FilterPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterResponse {
    pub blueprint: Blueprint,
    pub removed: usize,
}

fn parse_model(model: &str) -> Result<ModelKind, ApiError> {
    model.parse().map_err(|_| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "UnknownModel",
            format!("unknown model {model:?}"),
        )
    })
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string())
}

/// Runs a generation flow on the blocking pool so the acceptor stays free.
async fn generate<F>(
    app: &AppState,
    model: ModelKind,
    flow: F,
) -> Result<GenerationResult, ApiError>
where
    F: FnOnce(&dyn GeneratorBackend) -> Result<GenerationResult, EngineError> + Send + 'static,
{
    let backends = app.backends.clone();
    let result = tokio::task::spawn_blocking(move || flow(backends.for_model(model)))
        .await
        .map_err(internal)?;
    Ok(result?)
}

pub async fn models(State(app): State<AppState>) -> Json<ModelsResponse> {
    Json(ModelsResponse {
        models: ModelKind::ALL
            .iter()
            .map(|&id| ModelDescriptor { id })
            .collect(),
        backends: vec![app.backends.id().to_string()],
    })
}

pub async fn retrieve_documents(
    State(app): State<AppState>,
    ApiJson(req): ApiJson<RetrieveRequest>,
) -> Result<Json<RetrieveResponse>, ApiError> {
    let query = req.query.trim().to_string();
    if query.is_empty() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "EmptyQuery",
            "query is empty",
        ));
    }
    let (corpus, failures) = if !req.urls.is_empty() {
        let outcome = fetch_documents(&req.urls, &app.config.fetch_limits).await?;
        (Arc::new(outcome.corpus), outcome.failures)
    } else if let Some(corpus) = &app.corpus {
        (corpus.clone(), Vec::new())
    } else {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "NoCorpus",
            "no corpus is configured and no urls were given",
        ));
    };

    let mut config = app.config.retrieval;
    if let Some(max_docs) = req.max_docs {
        config.max_docs = max_docs;
    }
    let budget = app.config.max_input_tokens;
    let backends = app.backends.clone();
    let (q, c) = (query.clone(), corpus.clone());
    let retrieved = tokio::task::spawn_blocking(move || {
        let counter = BackendCounter(backends.for_model(ModelKind::EndToEnd));
        retrieve(&q, &c, &Bm25Ranker::default(), &config, budget, &counter)
    })
    .await
    .map_err(internal)??;

    let session_id = app.ids.next_id();
    app.store.insert(Session {
        id: session_id.clone(),
        query,
        corpus,
        documents: retrieved.documents.clone(),
        model_input: Arc::new(retrieved.input),
        last_result: None,
    });
    Ok(Json(RetrieveResponse {
        session_id,
        documents: retrieved.documents,
        failures,
    }))
}

pub async fn summarize(
    State(app): State<AppState>,
    ApiJson(req): ApiJson<SummarizeRequest>,
) -> Result<Json<GenerationResult>, ApiError> {
    let model = parse_model(&req.model)?;
    if req.questions.is_some() && model != ModelKind::Interactive {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "InvalidRequest",
            "questions are only accepted by the interactive model",
        ));
    }
    let slot = app
        .store
        .get(&req.session_id)
        .ok_or_else(|| ApiError::unknown_session(&req.session_id))?;
    let mut session = slot.lock().await;
    let input = session.model_input.clone();
    let params = req.params;
    let questions = req.questions;
    let result = generate(&app, model, move |backend| match model {
        ModelKind::EndToEnd => run_end_to_end(&input, backend, &params),
        ModelKind::Iterative => run_iterative(&input, backend, &params),
        ModelKind::Interactive => run_interactive(&input, questions.as_deref(), backend, &params),
    })
    .await?;
    session.last_result = Some(result.clone());
    Ok(Json(result))
}

pub async fn regenerate(
    State(app): State<AppState>,
    ApiJson(req): ApiJson<RegenerateRequest>,
) -> Result<Json<GenerationResult>, ApiError> {
    let model = parse_model(&req.model)?;
    if model == ModelKind::Iterative {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "Unsupported",
            "the iterative model does not take an edited plan",
        ));
    }
    if model == ModelKind::EndToEnd && req.blueprint.mode() != PlanMode::Qa {
        return Err(EngineError::ModeMismatch {
            expected: PlanMode::Qa,
            found: req.blueprint.mode(),
        }
        .into());
    }
    let slot = app
        .store
        .get(&req.session_id)
        .ok_or_else(|| ApiError::unknown_session(&req.session_id))?;
    let mut session = slot.lock().await;
    let input = session.model_input.clone();
    let params = req.params;
    let plan = req.blueprint;
    let result = generate(&app, model, move |backend| match model {
        ModelKind::Interactive => {
            let questions: Vec<String> = plan
                .included()
                .map(|(_, p)| p.question().to_string())
                .collect();
            run_interactive(&input, Some(&questions), backend, &params)
        }
        _ => regenerate_with_plan(&input, &plan, backend, &params),
    })
    .await?;
    session.last_result = Some(result.clone());
    Ok(Json(result))
}

pub async fn filter(
    State(app): State<AppState>,
    ApiJson(req): ApiJson<FilterRequest>,
) -> Result<Json<FilterResponse>, ApiError> {
    let slot = app
        .store
        .get(&req.session_id)
        .ok_or_else(|| ApiError::unknown_session(&req.session_id))?;
    let session = slot.lock().await;
    let last = session.last_result.as_ref().ok_or_else(|| {
        ApiError::new(
            StatusCode::CONFLICT,
            "NoResult",
            "the session has no plan to filter yet",
        )
    })?;
    let text = if req.policy.strict {
        session.model_input.formatted_text.clone()
    } else {
        session.model_input.document_text()
    };
    let blueprint = apply_policy(&last.blueprint, &text, &req.policy)?;
    let removed = last.blueprint.len() - blueprint.len();
    Ok(Json(FilterResponse { blueprint, removed }))
}
