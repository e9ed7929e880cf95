//! Scoring service: `POST /score`, `POST /score_group`, `GET /healthz`
//! over HTTP, or the same payloads as JSON lines on stdin/stdout.

use std::io::{BufRead, Write};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};

use forgecot_core::reward::wire::{self, ErrorReply, GroupRequest, ScoreRequest};
use forgecot_core::reward::RewardConfig;

struct AppState {
    reward: RewardConfig,
    started: Instant,
}

fn error(id: serde_json::Value, e: impl ToString) -> Response {
    (StatusCode::BAD_REQUEST, Json(ErrorReply { id, error: e.to_string() })).into_response()
}

async fn score(State(s): State<Arc<AppState>>, Json(req): Json<ScoreRequest>) -> Response {
    match wire::score(&req, &s.reward) {
        Ok(reply) => Json(reply).into_response(),
        Err(e) => error(req.id, e),
    }
}

async fn score_group(State(s): State<Arc<AppState>>, Json(req): Json<GroupRequest>) -> Response {
    match wire::score_group(&req, &s.reward) {
        Ok(reply) => Json(reply).into_response(),
        Err(e) => error(req.id, e),
    }
}

async fn healthz(State(s): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(serde_json::json!({
        "status": "ok",
        "version": forgecot_core::GENERATOR_VERSION,
        "uptime_secs": s.started.elapsed().as_secs_f64(),
    }))
}

pub fn router(reward: RewardConfig) -> Router {
    let state = Arc::new(AppState { reward, started: Instant::now() });
    Router::new()
        .route("/score", post(score))
        .route("/score_group", post(score_group))
        .route("/healthz", get(healthz))
        .with_state(state)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    log::info!("shutting down after in-flight requests");
}

pub fn http(host: &str, port: u16, reward: RewardConfig) -> Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .with_context(|| format!("BindError: cannot bind {host}:{port}"))?;
        // Printed so callers that asked for port 0 can find the service.
        println!("listening on http://{}", listener.local_addr()?);
        std::io::stdout().flush()?;
        axum::serve(listener, router(reward))
            .with_graceful_shutdown(shutdown_signal())
            .await?;
        Ok(())
    })
}

/// One JSON request per input line, one reply per output line, in order.
pub fn stdio(reward: RewardConfig) -> Result<()> {
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(out, "{}", wire::handle_line(&line, &reward))?;
        out.flush()?;
    }
    Ok(())
}
