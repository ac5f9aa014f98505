//! HTTP clients for the external log-probability scorer and the completion
//! generator, with retries and a request-hash response cache.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use rayon::prelude::*;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use crate::error::{Error, Result};
use crate::text::sha256_hex;

pub const SCORER_URL_ENV: &str = "FIMFORGE_SCORER_URL";
pub const SCORER_KEY_ENV: &str = "FIMFORGE_SCORER_KEY";
pub const GENERATOR_URL_ENV: &str = "FIMFORGE_GENERATOR_URL";
pub const GENERATOR_KEY_ENV: &str = "FIMFORGE_GENERATOR_KEY";

/// Per-token natural-log probabilities of `completion` given `prompt`.
pub trait Scorer: Send + Sync {
    fn logprobs(&self, prompt: &str, completion: &str) -> Result<Vec<f64>>;
}

/// Sampled completions for a prompt.
pub trait Generator: Send + Sync {
    fn generate(&self, prompt: &str, n: usize, temperature: f64, max_tokens: usize) -> Result<Vec<String>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub prompt: String,
    pub completion: String,
    pub echo_logprobs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub tokens: Vec<String>,
    pub logprobs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub prompt: String,
    pub n: usize,
    pub temperature: f64,
    pub max_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GenerateResponse {
    Completions { completions: Vec<String> },
    Choices { choices: Vec<Choice> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub text: String,
}

impl GenerateResponse {
    pub fn into_texts(self) -> Vec<String> {
        match self {
            GenerateResponse::Completions { completions } => completions,
            GenerateResponse::Choices { choices } => choices.into_iter().map(|c| c.text).collect(),
        }
    }
}

/// A JSON-over-HTTP endpoint. With a cache directory, every response is
/// stored under the SHA-256 of its request body and replayed on a hit, so an
/// endpoint without a URL can still serve fully cached runs.
#[derive(Debug, Clone)]
pub struct HttpEndpoint {
    url: Option<String>,
    key: Option<String>,
    cache_dir: Option<PathBuf>,
    client: Client,
    attempts: u32,
    backoff: Duration,
}

impl HttpEndpoint {
    pub fn new(url: Option<String>, key: Option<String>, cache_dir: Option<PathBuf>) -> Result<Self> {
        let client = Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| Error::Endpoint(format!("building HTTP client: {e}")))?;
        Ok(HttpEndpoint {
            url: url.filter(|u| !u.is_empty()),
            key: key.filter(|k| !k.is_empty()),
            cache_dir,
            client,
            attempts: 3,
            backoff: Duration::from_millis(250),
        })
    }

    pub fn from_env(url_var: &str, key_var: &str, cache_dir: Option<PathBuf>) -> Result<Self> {
        HttpEndpoint::new(std::env::var(url_var).ok(), std::env::var(key_var).ok(), cache_dir)
    }

    pub fn scorer_from_env(cache_dir: Option<PathBuf>) -> Result<Self> {
        HttpEndpoint::from_env(SCORER_URL_ENV, SCORER_KEY_ENV, cache_dir)
    }

    pub fn generator_from_env(cache_dir: Option<PathBuf>) -> Result<Self> {
        HttpEndpoint::from_env(GENERATOR_URL_ENV, GENERATOR_KEY_ENV, cache_dir)
    }

    pub fn with_retry(mut self, attempts: u32, backoff: Duration) -> Self {
        self.attempts = attempts.max(1);
        self.backoff = backoff;
        self
    }

    pub fn url(&self) -> Option<&str> {
        self.url.as_deref()
    }

    fn cache_path(&self, body: &[u8]) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|d| d.join(format!("{}.json", sha256_hex(body))))
    }

    /// POSTs `request` and decodes the reply, consulting the cache first.
    pub fn call<Q: Serialize, A: DeserializeOwned>(&self, request: &Q) -> Result<A> {
        let body = serde_json::to_vec(request)?;
        let cache = self.cache_path(&body);
        if let Some(path) = &cache {
            if let Ok(bytes) = fs::read(path) {
                debug!("cache hit {}", path.display());
                return serde_json::from_slice(&bytes)
                    .map_err(|e| Error::Endpoint(format!("corrupt cache entry {}: {e}", path.display())));
            }
        }
        let bytes = self.post(&body)?;
        let value: A = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Endpoint(format!("protocol violation: {e}")))?;
        if let Some(path) = &cache {
            store(path, &bytes)?;
        }
        Ok(value)
    }

    fn post(&self, body: &[u8]) -> Result<Vec<u8>> {
        let Some(url) = &self.url else {
            return Err(Error::Endpoint("no cached response and no endpoint URL configured".into()));
        };
        let mut last = String::new();
        for attempt in 0..self.attempts {
            if attempt > 0 {
                thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            let mut req = self
                .client
                .post(url)
                .header(reqwest::header::CONTENT_TYPE, "application/json")
                .body(body.to_vec());
            if let Some(key) = &self.key {
                req = req.bearer_auth(key);
            }
            match req.send() {
                Ok(resp) if resp.status().is_success() => {
                    return resp
                        .bytes()
                        .map(|b| b.to_vec())
                        .map_err(|e| Error::Endpoint(format!("reading response: {e}")));
                }
                Ok(resp) if transient(resp.status()) => last = format!("HTTP {}", resp.status()),
                Ok(resp) => return Err(Error::Endpoint(format!("HTTP {} from {url}", resp.status()))),
                Err(e) => last = e.to_string(),
            }
            warn!("request to {url} failed (attempt {}): {last}", attempt + 1);
        }
        Err(Error::Endpoint(format!("{url}: {last} after {} attempts", self.attempts)))
    }
}

fn transient(status: StatusCode) -> bool {
    status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS || status == StatusCode::REQUEST_TIMEOUT
}

fn store(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

impl Scorer for HttpEndpoint {
    fn logprobs(&self, prompt: &str, completion: &str) -> Result<Vec<f64>> {
        let resp: ScoreResponse = self.call(&ScoreRequest {
            prompt: prompt.to_owned(),
            completion: completion.to_owned(),
            echo_logprobs: true,
        })?;
        if resp.tokens.len() != resp.logprobs.len() {
            return Err(Error::Endpoint(format!(
                "protocol violation: {} tokens but {} logprobs",
                resp.tokens.len(),
                resp.logprobs.len()
            )));
        }
        Ok(resp.logprobs)
    }
}

impl Generator for HttpEndpoint {
    fn generate(&self, prompt: &str, n: usize, temperature: f64, max_tokens: usize) -> Result<Vec<String>> {
        let resp: GenerateResponse = self.call(&GenerateRequest {
            prompt: prompt.to_owned(),
            n,
            temperature,
            max_tokens,
        })?;
        Ok(resp.into_texts())
    }
}

/// Maps `f` over `items` with at most `jobs` calls in flight; output keeps input order.
pub fn bounded_map<T, U, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

/// Aborts when more than `limit` (a fraction) of `total` calls failed.
/// `first` is the first recorded error message, echoed in the abort error.
pub fn check_failure_rate(failed: usize, total: usize, limit: f64, first: Option<&str>) -> Result<()> {
    if total > 0 && failed as f64 > limit * total as f64 {
        return Err(Error::TooManyFailures {
            failed,
            total,
            limit: limit * 100.0,
            first: first.unwrap_or_default().to_string(),
        });
    }
    Ok(())
}
