//! Classification backends.
//!
//! Three interchangeable ways to turn a prompt/query into a verdict:
//!
//! - **remote** — one chat-completion request per query against any
//!   endpoint speaking the usual JSON shape (`messages` array, first choice
//!   taken), with exponential-backoff retries and a response cache keyed by
//!   prompt digest;
//! - **replay** — cache-only; a digest miss is an error, so a replayed run
//!   provably makes zero network calls;
//! - **surrogate** — a deterministic scattering-center matcher that stands
//!   in for the model, scoring each prototype by greedily pairing centers
//!   within a position tolerance.
//!
//! The surrogate keeps the whole evaluation suite runnable offline.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::prompt::{hex_string, parse_verdict, PromptDocument, TaskContext, Verdict};
use crate::prototype::Prototype;
use crate::scatter::SCSignature;

/// Which backend services classification requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Surrogate,
    Replay,
}

/// Backend configuration. The API key is read from the environment variable
/// named by `api_key_env` at request time and never persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint_url: String,
    pub model_name: String,
    pub api_key_env: String,
    pub temperature: f64,
    pub max_retries: u32,
    /// First retry delay, seconds; doubles per attempt.
    pub backoff_base_s: f64,
    /// Upper bound on concurrent in-flight remote requests.
    pub concurrency_limit: usize,
    pub cache_dir: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Surrogate,
            endpoint_url: String::new(),
            model_name: "surrogate".to_string(),
            api_key_env: "ADP_API_KEY".to_string(),
            temperature: 0.0,
            max_retries: 3,
            backoff_base_s: 1.0,
            concurrency_limit: 4,
            cache_dir: None,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0) {
            return Err(Error::invalid(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.concurrency_limit < 1 {
            return Err(Error::invalid("concurrency_limit must be at least 1"));
        }
        if !(self.backoff_base_s >= 0.0) {
            return Err(Error::invalid("backoff_base_s must be >= 0"));
        }
        if self.kind == BackendKind::Remote && self.endpoint_url.is_empty() {
            return Err(Error::invalid("remote backend needs an endpoint_url"));
        }
        if self.kind == BackendKind::Replay && self.cache_dir.is_none() {
            return Err(Error::invalid("replay backend needs a cache_dir"));
        }
        Ok(())
    }
}

/// Surrogate matching parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchParams {
    /// Two centers pair up when their range indices differ by at most this.
    pub position_tol: usize,
    /// Cost per scattering center left unmatched on either side.
    pub unmatched_penalty: f64,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            position_tol: 5,
            unmatched_penalty: 0.1,
        }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.unmatched_penalty >= 0.0) || !self.unmatched_penalty.is_finite() {
            return Err(Error::invalid(format!(
                "unmatched_penalty must be finite and >= 0, got {}",
                self.unmatched_penalty
            )));
        }
        Ok(())
    }
}

/// Greedy signature similarity.
///
/// Query centers are visited strongest-first; each takes the nearest unused
/// prototype center within `position_tol` (distance ties prefer the
/// stronger, i.e. earlier, prototype entry). A matched pair contributes
/// `min` of the two amplitudes; every unmatched center on either side
/// subtracts `unmatched_penalty`.
pub fn surrogate_score(query: &SCSignature, proto: &SCSignature, mp: &MatchParams) -> f64 {
    let mut used = vec![false; proto.len()];
    let mut score = 0.0;
    let mut matched = 0usize;
    for q in query.entries() {
        let mut best: Option<(usize, usize)> = None; // (distance, proto index)
        for (j, p) in proto.entries().iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = p.range_index.abs_diff(q.range_index);
            if d > mp.position_tol {
                continue;
            }
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, j));
            }
        }
        if let Some((_, j)) = best {
            used[j] = true;
            matched += 1;
            score += q.amplitude.min(proto.entries()[j].amplitude);
        }
    }
    let unmatched = (query.len() - matched) + (proto.len() - matched);
    score - mp.unmatched_penalty * unmatched as f64
}

/// Classifies a query as the class of its best-scoring prototype.
///
/// Ties prefer the earlier candidate class, then the lower cluster id. The
/// rationale is a per-prototype score table.
pub fn classify_surrogate(
    query: &SCSignature,
    prototypes: &[Prototype],
    mp: &MatchParams,
    ctx: &TaskContext,
) -> Result<Verdict> {
    mp.validate()?;
    if prototypes.is_empty() {
        return Err(Error::invalid("no prototypes to score against"));
    }
    for p in prototypes {
        if !ctx.candidate_classes.contains(&p.class_label) {
            return Err(Error::invalid(format!(
                "prototype class '{}' is not a candidate",
                p.class_label
            )));
        }
    }

    let mut table = String::new();
    let mut best: Option<(f64, &Prototype)> = None;
    for class in &ctx.candidate_classes {
        let mut of_class: Vec<&Prototype> =
            prototypes.iter().filter(|p| &p.class_label == class).collect();
        of_class.sort_by_key(|p| p.cluster_id);
        for proto in of_class {
            let score = surrogate_score(query, &proto.signature, mp);
            table.push_str(&format!(
                "{class} cluster {}: {score:.6}\n",
                proto.cluster_id
            ));
            if best.map_or(true, |(bs, _)| score > bs) {
                best = Some((score, proto));
            }
        }
    }
    let (_, winner) = best.expect("non-empty prototypes");
    Ok(Verdict {
        predicted: winner.class_label.clone(),
        rationale: table.clone(),
        raw: table,
    })
}

/// One cached response.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheRecord {
    pub prompt_sha: String,
    pub model: String,
    pub response: String,
    pub timestamp: String,
}

/// File-per-digest response cache; writes go through a temp file and an
/// atomic rename so concurrent writers cannot tear records.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ResponseCache { dir: dir.into() }
    }

    fn path(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    pub fn get(&self, digest: &str) -> Result<Option<CacheRecord>> {
        let path = self.path(digest);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(path)?;
        Ok(Some(serde_json::from_str(&text)?))
    }

    pub fn put(&self, record: &CacheRecord) -> Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        serde_json::to_writer(&mut tmp, record)?;
        tmp.persist(self.path(&record.prompt_sha))
            .map_err(|e| Error::Io(e.error))?;
        Ok(())
    }
}

/// Digest that keys the cache: SHA-256 over prompt text and model name.
pub fn prompt_digest(prompt_text: &str, model_name: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prompt_text.as_bytes());
    hasher.update(model_name.as_bytes());
    hex_string(&hasher.finalize())
}

/// Remote chat-completion client (also drives replay mode).
pub struct RemoteClient {
    cfg: BackendConfig,
    agent: ureq::Agent,
    cache: Option<ResponseCache>,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: String,
}

impl RemoteClient {
    pub fn new(cfg: BackendConfig) -> Result<Self> {
        cfg.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .http_status_as_error(false)
            .build()
            .into();
        let cache = cfg.cache_dir.as_ref().map(ResponseCache::new);
        Ok(RemoteClient { cfg, agent, cache })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.cfg
    }

    /// Classifies one prompt, consulting the cache first. Cache hits never
    /// touch the network; replay mode treats a miss as an error.
    pub fn classify(&self, prompt: &PromptDocument, ctx: &TaskContext) -> Result<Verdict> {
        let digest = prompt_digest(&prompt.text, &self.cfg.model_name);
        if let Some(cache) = &self.cache {
            if let Some(record) = cache.get(&digest)? {
                return parse_verdict(&record.response, ctx);
            }
        }
        if self.cfg.kind == BackendKind::Replay {
            return Err(Error::ReplayCacheMiss { digest });
        }

        let response = self.request_with_retries(&prompt.text)?;
        if let Some(cache) = &self.cache {
            cache.put(&CacheRecord {
                prompt_sha: digest,
                model: self.cfg.model_name.clone(),
                response: response.clone(),
                timestamp: unix_timestamp(),
            })?;
        }
        parse_verdict(&response, ctx)
    }

    /// Classifies a batch with at most `concurrency_limit` requests in
    /// flight. Results keep the input order regardless of completion order.
    pub fn classify_batch(
        &self,
        prompts: &[PromptDocument],
        ctx: &TaskContext,
    ) -> Vec<Result<Verdict>> {
        let workers = self.cfg.concurrency_limit.min(prompts.len().max(1));
        if workers <= 1 {
            return prompts.iter().map(|p| self.classify(p, ctx)).collect();
        }
        let next = AtomicUsize::new(0);
        let results: Vec<Mutex<Option<Result<Verdict>>>> =
            prompts.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= prompts.len() {
                        break;
                    }
                    let verdict = self.classify(&prompts[i], ctx);
                    *results[i].lock().unwrap() = Some(verdict);
                });
            }
        });
        results
            .into_iter()
            .map(|slot| slot.into_inner().unwrap().expect("worker filled slot"))
            .collect()
    }

    fn request_with_retries(&self, prompt_text: &str) -> Result<String> {
        let key = std::env::var(&self.cfg.api_key_env).map_err(|_| {
            Error::BackendUnavailable(format!(
                "api key variable {} is not set",
                self.cfg.api_key_env
            ))
        })?;
        let body = ChatRequest {
            model: &self.cfg.model_name,
            messages: [ChatMessage {
                role: "user",
                content: prompt_text,
            }],
            temperature: self.cfg.temperature,
        };

        let mut last_failure = String::new();
        for attempt in 0..=self.cfg.max_retries {
            if attempt > 0 {
                let delay = self.cfg.backoff_base_s * 2f64.powi(attempt as i32 - 1);
                std::thread::sleep(Duration::from_secs_f64(delay));
            }
            match self
                .agent
                .post(&self.cfg.endpoint_url)
                .header("Authorization", &format!("Bearer {key}"))
                .send_json(&body)
            {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if (200..300).contains(&status) {
                        let text = resp.body_mut().read_to_string().map_err(|e| {
                            Error::BackendUnavailable(format!("reading response body: {e}"))
                        })?;
                        let parsed: ChatResponse = serde_json::from_str(&text).map_err(|e| {
                            Error::BackendUnavailable(format!("malformed chat response: {e}"))
                        })?;
                        return parsed
                            .choices
                            .into_iter()
                            .next()
                            .map(|c| c.message.content)
                            .ok_or_else(|| {
                                Error::BackendUnavailable("response has no choices".into())
                            });
                    }
                    // 429 and 5xx are transient; anything else is fatal.
                    if status == 429 || status >= 500 {
                        last_failure = format!("http status {status}");
                        continue;
                    }
                    return Err(Error::BackendUnavailable(format!("http status {status}")));
                }
                Err(e) => {
                    last_failure = format!("transport: {e}");
                    continue;
                }
            }
        }
        Err(Error::BackendUnavailable(format!(
            "retries exhausted after {} attempts: {last_failure}",
            self.cfg.max_retries + 1
        )))
    }
}

fn unix_timestamp() -> String {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_else(|_| "0".to_string())
}

/// A ready-to-use backend built from a [`BackendConfig`].
pub enum BackendHandle {
    Surrogate(MatchParams),
    Remote(RemoteClient),
}

impl BackendHandle {
    pub fn from_config(cfg: &BackendConfig, mp: MatchParams) -> Result<Self> {
        cfg.validate()?;
        Ok(match cfg.kind {
            BackendKind::Surrogate => BackendHandle::Surrogate(mp),
            BackendKind::Remote | BackendKind::Replay => {
                BackendHandle::Remote(RemoteClient::new(cfg.clone())?)
            }
        })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            BackendHandle::Surrogate(_) => "surrogate",
            BackendHandle::Remote(c) => match c.cfg.kind {
                BackendKind::Replay => "replay",
                _ => "remote",
            },
        }
    }
}
