//! HTTP service over a shared, immutable detector.

use std::sync::{Arc, OnceLock};

use anyhow::Context;
use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use detox_core::pipelines::DetectError;
use detox_core::{Detector, Language, ResultRecord};

use crate::config::EngineConfig;
use crate::engine;
use crate::error::{exit, CliResult};
use crate::wire::{render_record, DetectRequest, ErrorBody, Health, MatchResponse, MatchView};

/// Engine slot filled once loading finishes; requests before that get 503.
#[derive(Clone, Default)]
pub struct ServiceState {
    engine: Arc<OnceLock<Detector>>,
}

impl ServiceState {
    pub fn starting() -> Self {
        Self::default()
    }

    pub fn ready(detector: Detector) -> Self {
        let s = Self::default();
        s.install(detector);
        s
    }

    pub fn install(&self, detector: Detector) {
        let _ = self.engine.set(detector);
    }

    #[allow(clippy::result_large_err)]
    fn get(&self) -> Result<&Detector, Response> {
        self.engine.get().ok_or_else(|| error(StatusCode::SERVICE_UNAVAILABLE, "engine is still loading"))
    }
}

pub fn router(state: ServiceState) -> Router {
    Router::new()
        .route("/v1/detect", post(detect))
        .route("/v1/match", post(match_terms))
        .route("/v1/health", get(health))
        .with_state(state)
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: msg.into() })).into_response()
}

fn json_line(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

#[allow(clippy::result_large_err)]
fn check_request(detector: &Detector, body: Result<Json<DetectRequest>, JsonRejection>) -> Result<DetectRequest, Response> {
    let Json(req) = body.map_err(|e| error(StatusCode::BAD_REQUEST, e.body_text()))?;
    if let Some(tag) = &req.language {
        let lang: Language = tag.parse().map_err(|e: detox_core::language::UnsupportedLanguage| {
            error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
        })?;
        if lang != detector.language() {
            return Err(error(
                StatusCode::UNPROCESSABLE_ENTITY,
                format!("language {lang} is not loaded (engine is {})", detector.language()),
            ));
        }
    }
    Ok(req)
}

async fn detect(State(state): State<ServiceState>, body: Result<Json<DetectRequest>, JsonRejection>) -> Response {
    let detector = match state.get() {
        Ok(d) => d.clone(),
        Err(r) => return r,
    };
    let req = match check_request(&detector, body) {
        Ok(r) => r,
        Err(r) => return r,
    };
    let id = req.id();
    let outcome = tokio::task::spawn_blocking(move || detector.detect(&id, &req.text).map_err(|e| (id, e))).await;
    match outcome {
        Ok(Ok(result)) => json_line(StatusCode::OK, render_record(&ResultRecord::from(&result), false)),
        Ok(Err((id, err))) => {
            let status = match err {
                DetectError::Match(_) => StatusCode::INTERNAL_SERVER_ERROR,
                DetectError::Uncertified(_) | DetectError::Fusion(_) => StatusCode::BAD_GATEWAY,
            };
            let rec = ResultRecord::from_error(&detox_core::pipelines::ItemError { text_id: id, error: err });
            json_line(status, render_record(&rec, false))
        }
        Err(join) => error(StatusCode::INTERNAL_SERVER_ERROR, join.to_string()),
    }
}

async fn match_terms(State(state): State<ServiceState>, body: Result<Json<DetectRequest>, JsonRejection>) -> Response {
    let detector = match state.get() {
        Ok(d) => d.clone(),
        Err(r) => return r,
    };
    let req = match check_request(&detector, body) {
        Ok(r) => r,
        Err(r) => return r,
    };
    let id = req.id();
    match tokio::task::spawn_blocking(move || detector.find_matches(&req.text).map_err(|e| e.to_string())).await {
        Ok(Ok(ms)) => Json(MatchResponse { id, matches: ms.iter().map(MatchView::from).collect() }).into_response(),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
        Err(join) => error(StatusCode::INTERNAL_SERVER_ERROR, join.to_string()),
    }
}

async fn health(State(state): State<ServiceState>) -> Response {
    match state.engine.get() {
        Some(d) => Json(Health {
            status: "ok".into(),
            vocabulary_size: d.vocabulary.len(),
            provider: d.provider.identity().to_string(),
            language: d.language().to_string(),
        })
        .into_response(),
        None => (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(Health { status: "starting".into(), vocabulary_size: 0, provider: String::new(), language: String::new() }),
        )
            .into_response(),
    }
}

/// Binds first so health checks see 503 while the vocabulary loads.
pub async fn serve(config: EngineConfig, bind: Option<String>) -> CliResult<i32> {
    let addr = bind.unwrap_or_else(|| config.service.bind.clone());
    let listener = tokio::net::TcpListener::bind(&addr).await.with_context(|| format!("binding {addr}"))?;
    eprintln!("listening on {}", listener.local_addr().context("local address")?);
    let state = ServiceState::starting();
    let app = router(state.clone());
    let server = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    });
    let loaded = tokio::task::spawn_blocking(move || engine::detector(&config)).await.context("engine loader")?;
    match loaded {
        Ok(detector) => {
            eprintln!("engine ready: {} entries", detector.vocabulary.len());
            state.install(detector);
        }
        Err(e) => {
            server.abort();
            return Err(e);
        }
    }
    server.await.context("server task")?.context("server")?;
    Ok(exit::OK)
}
