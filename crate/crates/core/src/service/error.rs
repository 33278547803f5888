use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use crate::engine::EngineError;
use crate::filter::FilterError;
use crate::retrieval::RetrievalError;

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error_code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_output: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error_code: code.into(),
                message: message.into(),
                raw_output: None,
            },
        }
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "UnknownSession",
            format!("no session {id:?}"),
        )
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let message = e.to_string();
        let (status, code) = match &e {
            EngineError::Input(_) => (StatusCode::BAD_REQUEST, "InvalidInput"),
            EngineError::InvalidParams(_) => (StatusCode::BAD_REQUEST, "InvalidParams"),
            EngineError::InputOverBudget { .. } => (StatusCode::BAD_REQUEST, "InputOverBudget"),
            EngineError::EmptyPlan => (StatusCode::BAD_REQUEST, "EmptyPlan"),
            EngineError::EmptyQuestion => (StatusCode::BAD_REQUEST, "EmptyQuestion"),
            EngineError::InvalidQuestion(_) => (StatusCode::BAD_REQUEST, "InvalidQuestion"),
            EngineError::ModeMismatch { .. } => (StatusCode::BAD_REQUEST, "ModeMismatch"),
            EngineError::Backend(_) => (StatusCode::BAD_GATEWAY, "BackendFailure"),
            EngineError::Parse { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "ParseFailure"),
        };
        let mut err = ApiError::new(status, code, message);
        err.body.raw_output = e.raw_output().map(str::to_string);
        err
    }
}

impl From<RetrievalError> for ApiError {
    fn from(e: RetrievalError) -> Self {
        let (status, code) = match &e {
            RetrievalError::EmptyQuery => (StatusCode::BAD_REQUEST, "EmptyQuery"),
            RetrievalError::InvalidParameter(_) => (StatusCode::BAD_REQUEST, "InvalidParameter"),
            RetrievalError::Input(_) => (StatusCode::BAD_REQUEST, "InvalidInput"),
            RetrievalError::AllFetchesFailed(_) => (StatusCode::BAD_GATEWAY, "AllFetchesFailed"),
            RetrievalError::EmptyCorpus | RetrievalError::NoPassages => {
                (StatusCode::UNPROCESSABLE_ENTITY, "EmptyCorpus")
            }
            RetrievalError::MalformedRecord { .. } | RetrievalError::Io(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "CorpusError")
            }
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<FilterError> for ApiError {
    fn from(e: FilterError) -> Self {
        let code = match e {
            FilterError::ModeMismatch(_) => "ModeMismatch",
            FilterError::EmptyAnswer => "EmptyAnswer",
            FilterError::InvalidThreshold(_) => "InvalidThreshold",
        };
        ApiError::new(StatusCode::BAD_REQUEST, code, e.to_string())
    }
}
