//! Language-model harness: prompt construction, chat transport, response
//! parsing, and the zero-shot scheduling and title-clustering loops.
//!
//! Everything runs against the [`ChatClient`] trait. [`ReplayClient`] serves
//! recorded responses keyed by the SHA-256 of the prompt, so the whole
//! pipeline can run offline and reproducibly.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::{self, LineDefect, ParsedBlock, ResolutionReport};
use crate::metrics::{self, ViolationReport};
use crate::model::{Instance, Labeling, ModelError, Paper, PaperId, Schedule};

pub const SCHEDULE_PROMPT_TEMPLATE: &str = include_str!("../resources/schedule_prompt.txt");
pub const CLUSTER_PROMPT_TEMPLATE: &str = include_str!("../resources/cluster_prompt_v1.txt");
pub const CLUSTER_PROMPT_VERSION: &str = "v1";
pub const CLUSTER_HEADER: &str = "talk_title@cluster";

pub const DEFAULT_TEMPERATURE: f64 = 0.8;
pub const DEFAULT_MAX_RETRIES: u32 = 3;
pub const DEFAULT_MODEL: &str = "gpt-4";

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("no recorded response for prompt {key} in {dir}")]
    MissingFixture { dir: PathBuf, key: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("request failed: {0}")]
    Http(String),
    #[error("unexpected response body: {0}")]
    Body(String),
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("transport failed after {attempts} attempt(s): {source}")]
    Transport {
        attempts: u32,
        source: TransportError,
        transcript: Vec<TranscriptEntry>,
    },
    #[error("no usable response after {attempts} attempt(s)")]
    Unparseable {
        attempts: u32,
        transcript: Vec<TranscriptEntry>,
    },
    #[error("temperature must be finite and non-negative, got {0}")]
    Temperature(f64),
    #[error("cluster count must be at least 1")]
    ClusterCount,
    #[error("papers_per_session must be at least 1")]
    SampleSize,
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl LlmError {
    pub fn transcript(&self) -> &[TranscriptEntry] {
        match self {
            LlmError::Transport { transcript, .. } | LlmError::Unparseable { transcript, .. } => transcript,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub prompt: String,
    /// Total attempts allowed for one exchange.
    pub max_retries: u32,
}

impl ChatRequest {
    pub fn new(prompt: String) -> Self {
        Self {
            model: DEFAULT_MODEL.to_owned(),
            temperature: DEFAULT_TEMPERATURE,
            prompt,
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }
}

/// A chat-completion backend. Implementations must not touch artifact state.
pub trait ChatClient: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<String, TransportError>;
}

impl<C: ChatClient + ?Sized> ChatClient for &C {
    fn send(&self, request: &ChatRequest) -> Result<String, TransportError> {
        (**self).send(request)
    }
}

impl<C: ChatClient + ?Sized> ChatClient for Box<C> {
    fn send(&self, request: &ChatRequest) -> Result<String, TransportError> {
        (**self).send(request)
    }
}

/// Hex SHA-256 of the prompt; names replay fixtures.
pub fn prompt_key(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Serves `{dir}/{prompt_key(prompt)}.txt`.
#[derive(Debug, Clone)]
pub struct ReplayClient {
    dir: PathBuf,
}

impl ReplayClient {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn fixture_path(&self, prompt: &str) -> PathBuf {
        self.dir.join(format!("{}.txt", prompt_key(prompt)))
    }

    /// Stores `response` as the recorded answer to `prompt`.
    pub fn record(&self, prompt: &str, response: &str) -> std::io::Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.fixture_path(prompt);
        fs::write(&path, response)?;
        Ok(path)
    }
}

impl ChatClient for ReplayClient {
    fn send(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let path = self.fixture_path(&request.prompt);
        match fs::read_to_string(&path) {
            Ok(text) => Ok(text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(TransportError::MissingFixture {
                dir: self.dir.clone(),
                key: prompt_key(&request.prompt),
            }),
            Err(source) => Err(TransportError::Io { path, source }),
        }
    }
}

/// OpenAI-style `POST {model, temperature, messages}` with a bearer token.
#[derive(Debug, Clone)]
pub struct HttpChatClient {
    endpoint: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            api_key,
            agent,
        }
    }
}

impl ChatClient for HttpChatClient {
    fn send(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let body = serde_json::json!({
            "model": request.model,
            "temperature": request.temperature,
            "messages": [{ "role": "user", "content": request.prompt }],
        });
        let mut call = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call
            .send_json(&body)
            .map_err(|e| TransportError::Http(e.to_string()))?;
        let value: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| TransportError::Body(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| TransportError::Body("missing choices[0].message.content".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptEntry {
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub prompt: String,
    pub response: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub attempt: u32,
}

/// Appends transcript entries as JSON lines.
pub fn append_transcript(path: &Path, entries: &[TranscriptEntry]) -> std::io::Result<()> {
    let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    for entry in entries {
        serde_json::to_writer(&mut file, entry)?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Sends the same request until `parse` accepts a response or attempts run
/// out. Transport failure on the final attempt is an error; running out
/// with only unparseable responses yields `None`.
fn exchange<T>(
    client: &dyn ChatClient,
    request: &ChatRequest,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<(Option<T>, Vec<TranscriptEntry>, u32), LlmError> {
    if !request.temperature.is_finite() || request.temperature < 0.0 {
        return Err(LlmError::Temperature(request.temperature));
    }
    let attempts = request.max_retries.max(1);
    let mut transcript = Vec::new();
    for attempt in 1..=attempts {
        match client.send(request) {
            Ok(text) => {
                let parsed = parse(&text);
                transcript.push(TranscriptEntry {
                    timestamp: now(),
                    prompt: request.prompt.clone(),
                    response: Some(text),
                    error: None,
                    attempt,
                });
                if let Some(value) = parsed {
                    return Ok((Some(value), transcript, attempt));
                }
            }
            Err(e) => {
                transcript.push(TranscriptEntry {
                    timestamp: now(),
                    prompt: request.prompt.clone(),
                    response: None,
                    error: Some(e.to_string()),
                    attempt,
                });
                if attempt == attempts {
                    return Err(LlmError::Transport {
                        attempts,
                        source: e,
                        transcript,
                    });
                }
            }
        }
    }
    Ok((None, transcript, attempts))
}

/// Substitutes `{name}` placeholders in one left-to-right pass; inserted
/// text is never rescanned.
fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let hit = values.iter().find(|(name, _)| {
            tail.len() > name.len() + 1
                && tail[1..].starts_with(name)
                && tail[1 + name.len()..].starts_with('}')
        });
        match hit {
            Some((name, value)) => {
                out.push_str(value);
                rest = &tail[name.len() + 2..];
            }
            None => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn shuffled<T>(items: &mut [T], seed: u64) {
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
}

/// Session table (`session@title@length`) for the prompt.
pub fn sessions_table(instance: &Instance) -> String {
    let mut out = String::from("session@title@length\n");
    for s in instance.sessions() {
        out.push_str(&format!(
            "{}@{}@{}\n",
            ingest::sanitize_field(s.id.as_str()),
            ingest::sanitize_field(&s.title),
            s.length
        ));
    }
    out.trim_end().to_owned()
}

/// Paper table (`talk_title@duration`) in a seeded shuffled order.
pub fn papers_table(papers: &[Paper], seed: u64) -> String {
    let mut order: Vec<&Paper> = papers.iter().collect();
    shuffled(&mut order, seed);
    let mut out = String::from("talk_title@duration\n");
    for p in order {
        out.push_str(&format!("{}@{}\n", ingest::sanitize_field(&p.title), p.duration));
    }
    out.trim_end().to_owned()
}

/// The zero-shot scheduling prompt; byte-identical for equal seeds.
pub fn build_schedule_prompt(instance: &Instance, seed: u64) -> String {
    render(
        SCHEDULE_PROMPT_TEMPLATE,
        &[
            ("sessions_df_string", &sessions_table(instance)),
            ("papers_df_string", &papers_table(instance.papers(), seed)),
        ],
    )
}

/// The title-only clustering prompt.
pub fn build_cluster_prompt(papers: &[Paper], k: usize, seed: u64) -> String {
    let mut titles: Vec<String> = papers.iter().map(|p| ingest::sanitize_field(&p.title)).collect();
    shuffled(&mut titles, seed);
    render(
        CLUSTER_PROMPT_TEMPLATE,
        &[
            ("k", &k.to_string()),
            ("max_label", &k.saturating_sub(1).to_string()),
            ("titles_string", &titles.join("\n")),
        ],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmSettings {
    pub model: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub seed: u64,
}

impl Default for LlmSettings {
    fn default() -> Self {
        Self {
            model: DEFAULT_MODEL.to_owned(),
            temperature: DEFAULT_TEMPERATURE,
            max_retries: DEFAULT_MAX_RETRIES,
            seed: 0,
        }
    }
}

impl LlmSettings {
    fn request(&self, prompt: String) -> ChatRequest {
        ChatRequest {
            model: self.model.clone(),
            temperature: self.temperature,
            prompt,
            max_retries: self.max_retries,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroShotOutcome {
    pub schedule: Schedule,
    pub parsed: Option<ParsedBlock>,
    pub resolution: Option<ResolutionReport>,
    pub violations: ViolationReport,
    pub transcript: Vec<TranscriptEntry>,
    pub attempts: u32,
}

/// Prompts for a full schedule, then parses, resolves and audits the reply.
/// A reply without a fenced block is retried; if every attempt fails that
/// way the outcome carries an `unparseable` report instead of an error.
pub fn zero_shot_schedule(
    instance: &Instance,
    client: &dyn ChatClient,
    settings: &LlmSettings,
) -> Result<ZeroShotOutcome, LlmError> {
    let request = settings.request(build_schedule_prompt(instance, settings.seed));
    let (parsed, transcript, attempts) =
        exchange(client, &request, |text| ingest::parse_schedule_block(text).ok())?;
    Ok(match parsed {
        Some(parsed) => {
            let resolution = ingest::resolve_titles(&parsed.rows, instance);
            let violations = metrics::violation_report(instance, &parsed.rows, &resolution);
            ZeroShotOutcome {
                schedule: resolution.schedule,
                parsed: Some(parsed),
                resolution: Some(resolution.report),
                violations,
                transcript,
                attempts,
            }
        }
        None => ZeroShotOutcome {
            schedule: Schedule::new(),
            parsed: None,
            resolution: None,
            violations: ViolationReport::unparseable(instance),
            transcript,
            attempts,
        },
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClusterRepair {
    /// Papers the reply left out (or only listed with invalid labels),
    /// placed into the largest returned cluster.
    pub omitted: Vec<PaperId>,
    pub rejected_rows: Vec<LineDefect>,
    /// Rows naming a paper another row already claimed.
    pub duplicate_rows: Vec<usize>,
}

impl ClusterRepair {
    pub fn is_clean(&self) -> bool {
        self.omitted.is_empty() && self.rejected_rows.is_empty() && self.duplicate_rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterOutcome {
    pub labeling: Labeling,
    pub repair: ClusterRepair,
    pub transcript: Vec<TranscriptEntry>,
    pub attempts: u32,
}

struct ClusterRows {
    rows: Vec<(String, u32)>,
    rejected: Vec<LineDefect>,
}

fn parse_cluster_block(text: &str, k: usize) -> Option<ClusterRows> {
    let block = ingest::extract_fenced_block(text)?;
    let mut parsed = ClusterRows {
        rows: Vec::new(),
        rejected: Vec::new(),
    };
    for (line, content) in ingest::block_lines(block, CLUSTER_HEADER) {
        let fields: Vec<&str> = content.split('@').collect();
        let reject = |reason: String| LineDefect {
            line,
            text: content.to_owned(),
            reason,
        };
        if fields.len() != 2 {
            parsed
                .rejected
                .push(reject(format!("expected 2 `@`-separated fields, found {}", fields.len())));
            continue;
        }
        match fields[1].trim().parse::<u32>() {
            Ok(label) if (label as usize) < k => parsed.rows.push((fields[0].trim().to_owned(), label)),
            Ok(label) => parsed
                .rejected
                .push(reject(format!("cluster {label} outside 0..{}", k - 1))),
            Err(_) => parsed
                .rejected
                .push(reject(format!("cluster `{}` is not an integer", fields[1].trim()))),
        }
    }
    Some(parsed)
}

/// Asks the model to cluster paper titles into `k` groups. The result is
/// always total with labels in `0..k`.
pub fn llm_cluster(
    papers: &[Paper],
    k: usize,
    client: &dyn ChatClient,
    settings: &LlmSettings,
) -> Result<ClusterOutcome, LlmError> {
    if k == 0 {
        return Err(LlmError::ClusterCount);
    }
    let request = settings.request(build_cluster_prompt(papers, k, settings.seed));
    let (parsed, transcript, attempts) = exchange(client, &request, |text| parse_cluster_block(text, k))?;
    let Some(parsed) = parsed else {
        return Err(LlmError::Unparseable { attempts, transcript });
    };

    let titles: Vec<&str> = parsed.rows.iter().map(|(t, _)| t.as_str()).collect();
    let matching = ingest::match_titles(&titles, None, papers);
    let mut labels: Vec<Option<u32>> = vec![None; papers.len()];
    for (row, paper) in matching.matches.iter().enumerate() {
        if let Some(p) = paper {
            labels[*p] = Some(parsed.rows[row].1);
        }
    }

    let mut sizes: BTreeMap<u32, usize> = BTreeMap::new();
    for label in labels.iter().flatten() {
        *sizes.entry(*label).or_default() += 1;
    }
    // largest cluster, smallest label on ties
    let fallback = sizes
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map_or(0, |(l, _)| *l);

    let mut repair = ClusterRepair {
        rejected_rows: parsed.rejected,
        duplicate_rows: matching.duplicates.iter().map(|(r, _)| *r).collect(),
        ..ClusterRepair::default()
    };
    let mut labeling = Labeling::new();
    for (paper, label) in papers.iter().zip(labels) {
        let label = label.unwrap_or_else(|| {
            repair.omitted.push(paper.id.clone());
            fallback
        });
        labeling.insert(paper.id.clone(), label);
    }
    Ok(ClusterOutcome {
        labeling,
        repair,
        transcript,
        attempts,
    })
}

/// Keeps the first `papers_per_session` papers (in instance order) of each
/// reference session. Each non-empty session's length is rescaled to the
/// kept duration times its original length/duration ratio, rounded up;
/// sessions the reference leaves empty keep their length.
pub fn downsample(
    instance: &Instance,
    reference: &Schedule,
    papers_per_session: usize,
) -> Result<(Instance, Schedule), LlmError> {
    if papers_per_session == 0 {
        return Err(LlmError::SampleSize);
    }
    let positions = reference.positions(instance)?;
    let mut keep = vec![false; instance.paper_count()];
    let mut sessions = Vec::with_capacity(instance.session_count());
    for (m, session) in instance.sessions().iter().enumerate() {
        let population: Vec<usize> = (0..instance.paper_count())
            .filter(|&i| positions[i] == Some(m))
            .collect();
        let mut session = session.clone();
        if !population.is_empty() {
            let sample = &population[..population.len().min(papers_per_session)];
            let original: u64 = population.iter().map(|&i| u64::from(instance.papers()[i].duration)).sum();
            let kept: u64 = sample.iter().map(|&i| u64::from(instance.papers()[i].duration)).sum();
            let length = (kept * u64::from(session.length)).div_ceil(original);
            session.length = u32::try_from(length).unwrap_or(u32::MAX);
            sample.iter().for_each(|&i| keep[i] = true);
        }
        sessions.push(session);
    }
    let papers: Vec<Paper> = instance
        .papers()
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(p, _)| p.clone())
        .collect();
    let restricted: Schedule = papers
        .iter()
        .map(|p| (p.id.clone(), reference.session_of(&p.id).expect("kept papers are assigned").clone()))
        .collect();
    Ok((Instance::new(papers, sessions)?, restricted))
}
