use std::path::{Path, PathBuf};
use std::time::Duration;

use sessionize::ingest;
use sessionize::llm::{self, ChatClient, HttpChatClient, LlmSettings, ReplayClient, TranscriptEntry};
use sessionize::Instance;

use crate::args::{InstanceArgs, LlmArgs};
use crate::config::FileConfig;
use crate::output::{Failure, EXIT_TRANSPORT};

pub mod cluster;
pub mod evaluate;
pub mod ingest_check;
pub mod llm_schedule;
pub mod solve;

pub const DEFAULT_API_KEY_ENV: &str = "SESSIONIZE_API_KEY";
pub const DEFAULT_TRANSCRIPT: &str = "sessionize-transcript.jsonl";
const DEFAULT_TIMEOUT_SECS: f64 = 120.0;

pub struct Context {
    pub seed: u64,
    pub config: FileConfig,
}

pub fn load_instance(args: &InstanceArgs) -> Result<Instance, Failure> {
    Ok(ingest::load_instance(&args.papers, &args.sessions)?)
}

pub fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

/// A chat backend plus the settings and transcript file for one run.
pub struct LlmSession {
    pub client: Box<dyn ChatClient>,
    pub settings: LlmSettings,
    pub replay: bool,
    pub transcript: PathBuf,
}

impl LlmSession {
    pub fn open(args: &LlmArgs, ctx: &Context) -> Result<Self, Failure> {
        let file = &ctx.config.llm;
        let defaults = LlmSettings::default();
        let settings = LlmSettings {
            model: args.model.clone().or_else(|| file.model.clone()).unwrap_or(defaults.model),
            temperature: args.temperature.or(file.temperature).unwrap_or(defaults.temperature),
            max_retries: args.max_retries.or(file.max_retries).unwrap_or(defaults.max_retries),
            seed: ctx.seed,
        };
        if settings.max_retries == 0 {
            return Err(Failure::input("--max-retries must be at least 1"));
        }

        let replay_dir = args.replay_dir.clone().or_else(|| file.replay_dir.clone());
        let endpoint = args.endpoint.clone().or_else(|| file.endpoint.clone());
        let (client, replay): (Box<dyn ChatClient>, bool) = match (replay_dir, endpoint) {
            (Some(dir), _) => {
                if !dir.is_dir() {
                    return Err(Failure::input(format!("replay directory {} does not exist", dir.display())));
                }
                (Box::new(ReplayClient::new(dir)), true)
            }
            (None, Some(url)) => {
                let var = args
                    .api_key_env
                    .clone()
                    .or_else(|| file.api_key_env.clone())
                    .unwrap_or_else(|| DEFAULT_API_KEY_ENV.to_owned());
                let key = std::env::var(&var).ok().filter(|k| !k.is_empty());
                let secs = args.timeout.or(file.timeout).unwrap_or(DEFAULT_TIMEOUT_SECS);
                let timeout = Duration::try_from_secs_f64(secs)
                    .map_err(|_| Failure::input(format!("invalid timeout {secs}")))?;
                (Box::new(HttpChatClient::new(url, key, timeout)), false)
            }
            (None, None) => {
                return Err(Failure::input(
                    "no language model configured: pass --replay-dir or --endpoint",
                ))
            }
        };

        let transcript = args.transcript.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_TRANSCRIPT));
        std::fs::File::create(&transcript)
            .map_err(|e| Failure::input(format!("cannot create transcript {}: {e}", transcript.display())))?;
        Ok(Self {
            client,
            settings,
            replay,
            transcript,
        })
    }

    /// Appends entries to the transcript. Replayed exchanges carry timestamp
    /// 0 so reruns produce identical files.
    pub fn log(&self, entries: &[TranscriptEntry]) -> Result<(), Failure> {
        let mut entries = entries.to_vec();
        if self.replay {
            entries.iter_mut().for_each(|e| e.timestamp = 0);
        }
        llm::append_transcript(&self.transcript, &entries)
            .map_err(|e| Failure::input(format!("cannot write transcript {}: {e}", self.transcript.display())))
    }

    /// Logs what a failed call left behind and maps it to an exit code.
    pub fn fail(&self, error: llm::LlmError) -> Failure {
        if let Err(f) = self.log(error.transcript()) {
            return f;
        }
        match error {
            llm::LlmError::Transport { .. } => Failure {
                code: EXIT_TRANSPORT,
                message: format!("{error}; transcript at {}", self.transcript.display()),
            },
            other => Failure::input(format!("{other}; transcript at {}", self.transcript.display())),
        }
    }
}
