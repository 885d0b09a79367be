use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::Value;

use chardiff::discovery::DiscoveryError;
use chardiff::snapshot::SnapshotError;

/// Error body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub detail: Value,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                detail: Value::Null,
            },
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.body.detail = detail;
        self
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "NotFound", format!("no {what} `{id}`"))
            .with_detail(serde_json::json!({ "resource": what, "id": id }))
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }

    /// Snapshot errors with an explicit status (upload errors are 400, later
    /// schema problems 422).
    pub fn snapshot(e: &SnapshotError, status: StatusCode) -> Self {
        let detail = match e {
            SnapshotError::KeySetMismatch {
                only_in_source,
                only_in_target,
            } => serde_json::json!({
                "only_in_source": only_in_source,
                "only_in_target": only_in_target,
            }),
            SnapshotError::MalformedCsv { line, .. } => serde_json::json!({ "line": line }),
            SnapshotError::InvalidNumber { attribute, row, value } => {
                serde_json::json!({ "attribute": attribute, "row": row, "value": value })
            }
            _ => Value::Null,
        };
        ApiError::new(status, e.code(), e.to_string()).with_detail(detail)
    }
}

impl From<DiscoveryError> for ApiError {
    fn from(e: DiscoveryError) -> Self {
        match e {
            DiscoveryError::Snapshot(s) => ApiError::snapshot(&s, StatusCode::UNPROCESSABLE_ENTITY),
            DiscoveryError::BudgetExceeded { count, budget } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "BudgetExceeded", e.to_string())
                    .with_detail(serde_json::json!({ "candidates": count.to_string(), "budget": budget.to_string() }))
            }
            other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, other.code(), other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_set_mismatch_lists_both_sides() {
        let e = SnapshotError::KeySetMismatch {
            only_in_source: vec!["Ann".into()],
            only_in_target: vec!["Zed".into()],
        };
        let api = ApiError::snapshot(&e, StatusCode::BAD_REQUEST);
        assert_eq!(api.status, StatusCode::BAD_REQUEST);
        assert_eq!(api.body.code, "KeySetMismatch");
        assert_eq!(api.body.detail["only_in_source"][0], "Ann");
        assert_eq!(api.body.detail["only_in_target"][0], "Zed");
    }

    #[test]
    fn discovery_errors_are_unprocessable() {
        let api: ApiError = DiscoveryError::BudgetExceeded { count: 48, budget: 10 }.into();
        assert_eq!(api.status, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(api.body.code, "BudgetExceeded");
        assert_eq!(api.body.detail["candidates"], "48");
        let api: ApiError = DiscoveryError::Snapshot(SnapshotError::NonNumericTarget("gen".into())).into();
        assert_eq!(api.status, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(api.body.code, "NonNumericTarget");
    }

    #[test]
    fn not_found_names_the_resource() {
        let api = ApiError::not_found("run", "abc");
        assert_eq!(api.status, StatusCode::NOT_FOUND);
        assert_eq!(api.body.detail, serde_json::json!({ "resource": "run", "id": "abc" }));
        let text = serde_json::to_value(&api.body).unwrap();
        assert_eq!(text.as_object().unwrap().len(), 3);
    }
}
