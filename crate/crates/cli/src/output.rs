use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_TIMEOUT: u8 = 4;
pub const EXIT_TRANSPORT: u8 = 5;

/// A run that ends with a nonzero exit code and a message on stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

macro_rules! input_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::input(e.to_string())
            }
        }
    )*};
}

input_errors!(
    sessionize::ingest::IngestError,
    sessionize::ingest::ParseError,
    sessionize::model::ModelError,
    sessionize::similarity::SimilarityError,
    sessionize::metrics::MetricsError,
    sessionize::solver::SolverError
);

/// What a subcommand produced: text for people, JSON for programs, and the
/// exit code to finish with.
pub struct Report {
    pub human: String,
    pub json: serde_json::Value,
    pub code: u8,
}

impl Report {
    pub fn new(human: String, json: impl Serialize) -> Self {
        Self {
            human,
            json: serde_json::to_value(json).expect("report serializes"),
            code: 0,
        }
    }

    pub fn with_code(mut self, code: u8) -> Self {
        self.code = code;
        self
    }
}

pub struct Sink {
    pub json: bool,
    pub output: Option<PathBuf>,
}

impl Sink {
    /// The selected format goes to `--output` or stdout; in JSON mode the
    /// human text goes to stderr.
    pub fn deliver(&self, report: &Report) -> Result<(), Failure> {
        let main = if self.json {
            eprint!("{}", report.human);
            let mut text = serde_json::to_string_pretty(&report.json).expect("json value");
            text.push('\n');
            text
        } else {
            report.human.clone()
        };
        match &self.output {
            Some(path) => write_file(path, &main),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(main.as_bytes())
                    .and_then(|()| out.flush())
                    .map_err(|e| Failure::input(format!("cannot write to stdout: {e}")))
            }
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

pub fn fmt_score(x: f64) -> String {
    format!("{x:.4}")
}

pub fn describe_violations(report: &sessionize::ViolationReport) -> String {
    let mut text = String::new();
    if report.unparseable {
        text.push_str("no schedule block found in the response\n");
    }
    text.push_str(&format!("missing papers: {}\n", report.missing_papers));
    text.push_str(&format!("added sessions: {}", report.added_sessions));
    if !report.added_session_ids.is_empty() {
        text.push_str(&format!(" ({})", report.added_session_ids.join(", ")));
    }
    text.push('\n');
    text.push_str(&format!(
        "overfull sessions: {} ({} over 10%, {} over 50%)\n",
        report.overfull_sessions.len(),
        report.sessions_over_10pct,
        report.sessions_over_50pct
    ));
    if !report.qa_misplaced.is_empty() {
        text.push_str(&format!("misplaced discussion slots: {}\n", report.qa_misplaced.len()));
    }
    if !report.duplicate_assignments.is_empty() {
        text.push_str(&format!("papers listed twice: {}\n", report.duplicate_assignments.len()));
    }
    text
}

pub fn describe_scores(scores: Option<sessionize::ScorePair>) -> String {
    match scores {
        Some(s) => format!(
            "homogeneity {} completeness {}\n",
            fmt_score(s.homogeneity),
            fmt_score(s.completeness)
        ),
        None => "homogeneity n/a completeness n/a\n".to_owned(),
    }
}
