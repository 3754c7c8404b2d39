#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sessionize::{Instance, Paper, Session};

pub fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

/// Runs the binary in `dir` with no inherited configuration.
pub fn run(dir: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sessionize"));
    cmd.current_dir(dir).args(args);
    for (key, _) in std::env::vars() {
        if key.starts_with("SESSIONIZE_") {
            cmd.env_remove(key);
        }
    }
    cmd.output().expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

pub fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", stdout(out)))
}

fn quote(field: &str) -> String {
    format!("\"{}\"", field.replace('"', "\"\""))
}

pub fn write_papers(path: &Path, papers: &[Paper]) {
    let mut text = String::from("id,title,abstract,duration\n");
    for p in papers {
        text.push_str(&format!(
            "{},{},{},{}\n",
            p.id,
            quote(&p.title),
            quote(p.abstract_text.as_deref().unwrap_or("")),
            p.duration
        ));
    }
    std::fs::write(path, text).unwrap();
}

pub fn write_sessions(path: &Path, sessions: &[Session]) {
    let mut text = String::from("id,title,length\n");
    for s in sessions {
        text.push_str(&format!("{},{},{}\n", s.id, quote(&s.title), s.length));
    }
    std::fs::write(path, text).unwrap();
}

/// Writes `papers.csv` and `sessions.csv` into `dir`.
pub fn write_instance(dir: &Path, instance: &Instance) {
    write_papers(&dir.join("papers.csv"), instance.papers());
    write_sessions(&dir.join("sessions.csv"), instance.sessions());
}
