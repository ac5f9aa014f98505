#![allow(dead_code)]

use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::routing::post;
use axum::{Json, Router};
use fimforge_core::endpoint::{GenerateRequest, ScoreRequest, ScoreResponse};
use fimforge_core::ingest::{ingest_repo, IngestConfig, RepoIndex};
use fimforge_core::text::{lex_tokens, sha256_hex};
use serde_json::{json, Value};

pub fn fixture_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/polyglot")
}

pub fn fixture_index() -> RepoIndex {
    let config = IngestConfig {
        repo_id: Some("polyglot".into()),
        ..IngestConfig::default()
    };
    ingest_repo(&fixture_root(), &config).expect("fixture ingest").0
}

fn unit(seed: &str, salt: u64) -> f64 {
    let h = sha256_hex(format!("{salt}:{seed}"));
    u64::from_str_radix(&h[..12], 16).unwrap() as f64 / (1u64 << 48) as f64
}

/// Deterministic fake log-probabilities: one per lexical token of the completion.
pub fn fake_logprobs(prompt: &str, completion: &str) -> ScoreResponse {
    let tokens: Vec<String> = lex_tokens(completion).into_iter().map(String::from).collect();
    let level = 0.05 + 2.5 * unit(prompt, 0);
    let logprobs = (0..tokens.len().max(1))
        .map(|i| -(level * (0.5 + unit(completion, i as u64))))
        .collect();
    ScoreResponse { tokens, logprobs }
}

/// Deterministic fake completions mixing near-misses, duplicates and blanks.
pub fn fake_completions(prompt: &str, n: usize) -> Vec<String> {
    let tail = prompt.lines().rev().find(|l| !l.trim().is_empty()).unwrap_or("").trim();
    (0..n)
        .map(|i| match (unit(prompt, i as u64) * 6.0) as usize {
            0 => String::new(),
            1 => tail.to_string(),
            2 => format!("value_{}", (unit(prompt, 99) * 50.0) as usize),
            3 => format!("call_{}(x, {i})", (unit(prompt, i as u64 + 7) * 9.0) as usize),
            _ => format!("tmp{i} = compute({})", (unit(prompt, 3) * 1000.0) as usize),
        })
        .collect()
}

pub struct MockServer {
    pub base: String,
    pub hits: Arc<AtomicUsize>,
}

impl MockServer {
    pub fn score_url(&self) -> String {
        format!("{}/score", self.base)
    }

    pub fn generate_url(&self) -> String {
        format!("{}/generate", self.base)
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

/// Serves `/score` and `/generate` on an ephemeral port from a background runtime.
pub fn spawn_mock() -> MockServer {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let (h1, h2) = (hits.clone(), hits.clone());
    let app = Router::new()
        .route(
            "/score",
            post(move |Json(req): Json<ScoreRequest>| {
                h1.fetch_add(1, Ordering::SeqCst);
                async move { Json(fake_logprobs(&req.prompt, &req.completion)) }
            }),
        )
        .route(
            "/generate",
            post(move |Json(req): Json<GenerateRequest>| {
                h2.fetch_add(1, Ordering::SeqCst);
                async move { Json::<Value>(json!({ "completions": fake_completions(&req.prompt, req.n) })) }
            }),
        );
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    MockServer { base, hits }
}
