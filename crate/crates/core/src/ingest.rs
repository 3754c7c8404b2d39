//! File formats: the papers/sessions/labeling CSVs and the `@`-delimited
//! schedule block exchanged with language models.
//!
//! The schedule block looks like
//!
//! ~~~text
//! ```
//! session@talk_title@duration
//! 231@An Empirical Study on Maintainable Method ...@7
//! ```
//! ~~~
//!
//! Models echo titles (often truncated) rather than ids, so
//! [`resolve_titles`] maps rows back onto instance papers with a greedy
//! one-to-one fuzzy match.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    Instance, Labeling, ModelError, Paper, PaperId, Schedule, Session, SessionId,
    SimilarityMatrix,
};

pub const SCHEDULE_HEADER: &str = "session@talk_title@duration";
pub const FENCE: &str = "```";
/// Minimum normalized score for a row title to claim a paper.
pub const MATCH_THRESHOLD: f64 = 0.6;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: &'static str },
    #[error("{path}: row {row}: {message}")]
    InvalidRow {
        path: PathBuf,
        row: u64,
        message: String,
    },
    #[error("{path}: row {row}: duplicate id `{id}`")]
    DuplicateId { path: PathBuf, row: u64, id: String },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("no ``` fenced block found in response")]
    NoFencedBlock,
}

/// One `session@talk_title@duration` line as emitted by a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RawScheduleRow {
    pub session: String,
    pub talk_title: String,
    pub duration: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineDefect {
    /// 1-based line number inside the fenced block.
    pub line: usize,
    pub text: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParsedBlock {
    pub rows: Vec<RawScheduleRow>,
    pub defects: Vec<LineDefect>,
}

// ---------------------------------------------------------------------------
// CSV input
// ---------------------------------------------------------------------------

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })
}

struct CsvTable {
    path: PathBuf,
    reader: csv::Reader<Box<dyn Read>>,
    columns: HashMap<String, usize>,
}

impl CsvTable {
    fn new(path: &Path, input: Box<dyn Read>, required: &[&'static str]) -> Result<Self, IngestError> {
        let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(input);
        let headers = reader.headers().map_err(|source| IngestError::Csv {
            path: path.to_owned(),
            source,
        })?;
        let columns: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().trim_start_matches('\u{feff}').to_owned(), i))
            .collect();
        for &column in required {
            if !columns.contains_key(column) {
                return Err(IngestError::MissingColumn {
                    path: path.to_owned(),
                    column,
                });
            }
        }
        Ok(Self {
            path: path.to_owned(),
            reader,
            columns,
        })
    }

    /// Visits each record with its 1-based file line.
    fn for_each(
        &mut self,
        mut f: impl FnMut(u64, &dyn Fn(&str) -> String) -> Result<(), IngestError>,
    ) -> Result<(), IngestError> {
        let mut record = csv::StringRecord::new();
        loop {
            let more = self
                .reader
                .read_record(&mut record)
                .map_err(|source| IngestError::Csv {
                    path: self.path.clone(),
                    source,
                })?;
            if !more {
                return Ok(());
            }
            let line = record.position().map_or(0, |p| p.line());
            let columns = &self.columns;
            let field = |name: &str| {
                columns
                    .get(name)
                    .and_then(|&i| record.get(i))
                    .unwrap_or("")
                    .to_owned()
            };
            f(line, &field)?;
        }
    }

    fn invalid(&self, row: u64, message: impl Into<String>) -> IngestError {
        IngestError::InvalidRow {
            path: self.path.clone(),
            row,
            message: message.into(),
        }
    }
}

fn parse_positive(raw: &str, what: &str) -> Result<u32, String> {
    let value: u32 = raw
        .trim()
        .parse()
        .map_err(|_| format!("{what} `{raw}` is not a non-negative integer"))?;
    if value == 0 {
        return Err(format!("{what} must be positive"));
    }
    Ok(value)
}

pub fn load_papers(path: impl AsRef<Path>) -> Result<Vec<Paper>, IngestError> {
    let path = path.as_ref();
    read_papers(path, Box::new(open(path)?))
}

/// Reads a `id,title,abstract,duration` table. `origin` is used in errors.
pub fn read_papers(origin: &Path, input: Box<dyn Read>) -> Result<Vec<Paper>, IngestError> {
    let mut table = CsvTable::new(origin, input, &["id", "title", "abstract", "duration"])?;
    let mut papers = Vec::new();
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    table.for_each(|line, field| {
        rows.push((line, field("id"), field("title"), field("abstract"), field("duration")));
        Ok(())
    })?;
    for (line, id, title, abstract_text, duration) in rows {
        let id = id.trim().to_owned();
        if id.is_empty() {
            return Err(table.invalid(line, "empty id"));
        }
        if title.trim().is_empty() {
            return Err(table.invalid(line, "empty title"));
        }
        let duration = parse_positive(&duration, "duration").map_err(|m| table.invalid(line, m))?;
        if !seen.insert(id.clone()) {
            return Err(IngestError::DuplicateId {
                path: origin.to_owned(),
                row: line,
                id,
            });
        }
        papers.push(Paper {
            id: PaperId(id),
            title,
            abstract_text: (!abstract_text.trim().is_empty()).then_some(abstract_text),
            duration,
        });
    }
    Ok(papers)
}

pub fn load_sessions(path: impl AsRef<Path>) -> Result<Vec<Session>, IngestError> {
    let path = path.as_ref();
    read_sessions(path, Box::new(open(path)?))
}

/// Reads a `id,title,length` table.
pub fn read_sessions(origin: &Path, input: Box<dyn Read>) -> Result<Vec<Session>, IngestError> {
    let mut table = CsvTable::new(origin, input, &["id", "title", "length"])?;
    let mut rows = Vec::new();
    table.for_each(|line, field| {
        rows.push((line, field("id"), field("title"), field("length")));
        Ok(())
    })?;
    let mut sessions = Vec::new();
    let mut seen = HashSet::new();
    for (line, id, title, length) in rows {
        let id = id.trim().to_owned();
        if id.is_empty() {
            return Err(table.invalid(line, "empty id"));
        }
        let length = parse_positive(&length, "length").map_err(|m| table.invalid(line, m))?;
        if !seen.insert(id.clone()) {
            return Err(IngestError::DuplicateId {
                path: origin.to_owned(),
                row: line,
                id,
            });
        }
        sessions.push(Session {
            id: SessionId(id),
            title,
            length,
        });
    }
    Ok(sessions)
}

pub fn load_instance(
    papers: impl AsRef<Path>,
    sessions: impl AsRef<Path>,
) -> Result<Instance, IngestError> {
    Ok(Instance::new(load_papers(papers)?, load_sessions(sessions)?)?)
}

/// Reads a `paper_id,cluster` table.
pub fn load_labeling(path: impl AsRef<Path>) -> Result<Labeling, IngestError> {
    let path = path.as_ref();
    let mut table = CsvTable::new(path, Box::new(open(path)?), &["paper_id", "cluster"])?;
    let mut rows = Vec::new();
    table.for_each(|line, field| {
        rows.push((line, field("paper_id"), field("cluster")));
        Ok(())
    })?;
    let mut labeling = Labeling::new();
    let mut seen = HashSet::new();
    for (line, id, cluster) in rows {
        let id = id.trim().to_owned();
        let cluster: u32 = cluster
            .trim()
            .parse()
            .map_err(|_| table.invalid(line, format!("cluster `{cluster}` is not a non-negative integer")))?;
        if !seen.insert(id.clone()) {
            return Err(IngestError::DuplicateId {
                path: path.to_owned(),
                row: line,
                id,
            });
        }
        labeling.insert(PaperId(id), cluster);
    }
    Ok(labeling)
}

/// Renders a labeling as `paper_id,cluster` rows in the given paper order.
pub fn write_labeling(papers: &[Paper], labeling: &Labeling) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["paper_id", "cluster"]).expect("in-memory write");
    for p in papers {
        if let Some(label) = labeling.get(&p.id) {
            writer
                .write_record([p.id.as_str(), &label.to_string()])
                .expect("in-memory write");
        }
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// Reads a sparse `paper_a,paper_b,similarity` table. Unlisted pairs are 0.
pub fn load_similarity(
    path: impl AsRef<Path>,
    instance: &Instance,
) -> Result<SimilarityMatrix, IngestError> {
    let path = path.as_ref();
    let mut table = CsvTable::new(
        path,
        Box::new(open(path)?),
        &["paper_a", "paper_b", "similarity"],
    )?;
    let mut rows = Vec::new();
    table.for_each(|line, field| {
        rows.push((line, field("paper_a"), field("paper_b"), field("similarity")));
        Ok(())
    })?;
    let mut sim = SimilarityMatrix::zeros(instance.paper_count());
    for (line, a, b, value) in rows {
        let lookup = |id: &str| {
            instance
                .paper_position(&PaperId(id.trim().to_owned()))
                .ok_or_else(|| table.invalid(line, format!("unknown paper `{id}`")))
        };
        let (i, j) = (lookup(&a)?, lookup(&b)?);
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| table.invalid(line, format!("similarity `{value}` is not a number")))?;
        sim.set(i, j, v).map_err(|e| table.invalid(line, e.to_string()))?;
    }
    Ok(sim)
}

// ---------------------------------------------------------------------------
// Fenced `@` blocks
// ---------------------------------------------------------------------------

/// Content of the first triple-backquote region. The rest of the opening
/// fence line (a language tag) is dropped; an unclosed fence runs to the
/// end of the text.
pub fn extract_fenced_block(text: &str) -> Option<&str> {
    let start = text.find(FENCE)?;
    let after = &text[start + FENCE.len()..];
    let body = match after.find('\n') {
        Some(nl) => &after[nl + 1..],
        None => return Some(""),
    };
    Some(match body.find(FENCE) {
        Some(end) => &body[..end],
        None => body,
    })
}

/// Non-empty lines of a fenced block with their 1-based line numbers,
/// minus a leading header line equal to `header`.
pub(crate) fn block_lines<'a>(block: &'a str, header: &str) -> Vec<(usize, &'a str)> {
    let mut lines = block
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();
    if lines
        .peek()
        .is_some_and(|(_, l)| l.eq_ignore_ascii_case(header))
    {
        lines.next();
    }
    lines.collect()
}

/// Extracts `session@talk_title@duration` rows. Malformed lines are collected
/// as defects and parsing continues; only a missing fence is an error.
pub fn parse_schedule_block(text: &str) -> Result<ParsedBlock, ParseError> {
    let block = extract_fenced_block(text).ok_or(ParseError::NoFencedBlock)?;
    let mut parsed = ParsedBlock::default();
    for (line, content) in block_lines(block, SCHEDULE_HEADER) {
        let fields: Vec<&str> = content.split('@').collect();
        let defect = |reason: String| LineDefect {
            line,
            text: content.to_owned(),
            reason,
        };
        if fields.len() != 3 {
            parsed
                .defects
                .push(defect(format!("expected 3 `@`-separated fields, found {}", fields.len())));
            continue;
        }
        match fields[2].trim().parse::<u32>() {
            Ok(duration) => parsed.rows.push(RawScheduleRow {
                session: fields[0].trim().to_owned(),
                talk_title: fields[1].trim().to_owned(),
                duration,
            }),
            Err(_) => parsed
                .defects
                .push(defect(format!("duration `{}` is not an integer", fields[2].trim()))),
        }
    }
    Ok(parsed)
}

/// Replaces characters that would break a `@` row.
pub fn sanitize_field(text: &str) -> String {
    text.replace('@', "(at)")
        .replace(['\r', '\n'], " ")
        .replace(FENCE, "'''")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedSchedule {
    pub text: String,
    /// Papers whose titles had to be rewritten to fit the format.
    pub sanitized: Vec<PaperId>,
}

/// Renders a total schedule as a fenced block, grouped by session in
/// instance order and then by paper in instance order.
pub fn emit_schedule(instance: &Instance, schedule: &Schedule) -> Result<EmittedSchedule, ModelError> {
    let positions = schedule.total_positions(instance)?;
    let mut text = String::new();
    text.push_str(FENCE);
    text.push('\n');
    text.push_str(SCHEDULE_HEADER);
    text.push('\n');
    let mut sanitized = Vec::new();
    for (m, session) in instance.sessions().iter().enumerate() {
        for (paper, _) in instance
            .papers()
            .iter()
            .zip(&positions)
            .filter(|(_, &pm)| pm == m)
        {
            let title = sanitize_field(&paper.title);
            if title != paper.title {
                sanitized.push(paper.id.clone());
            }
            text.push_str(&format!(
                "{}@{}@{}\n",
                sanitize_field(session.id.as_str()),
                title,
                paper.duration
            ));
        }
    }
    text.push_str(FENCE);
    text.push('\n');
    Ok(EmittedSchedule { text, sanitized })
}

// ---------------------------------------------------------------------------
// Title resolution
// ---------------------------------------------------------------------------

/// Case-folded, punctuation-stripped, whitespace-collapsed form used for
/// matching.
pub fn normalize_title(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if c.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.extend(c.to_lowercase());
        } else if c.is_whitespace() {
            pending_space = true;
        }
    }
    out
}

fn is_truncated(raw: &str) -> bool {
    let t = raw.trim_end();
    t.ends_with("...") || t.ends_with('\u{2026}')
}

/// Longest-common-prefix ratio between a row title and a paper title.
///
/// Rows marked as truncated (trailing `...`) are scored against their own
/// length, everything else against the longer of the two.
pub fn title_score(row_title: &str, paper_title: &str) -> f64 {
    let row: Vec<char> = normalize_title(row_title).chars().collect();
    let paper: Vec<char> = normalize_title(paper_title).chars().collect();
    if row.is_empty() || paper.is_empty() {
        return 0.0;
    }
    let lcp = row.iter().zip(&paper).take_while(|(a, b)| a == b).count();
    let denom = if is_truncated(row_title) {
        row.len()
    } else {
        row.len().max(paper.len())
    };
    lcp as f64 / denom as f64
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TitleMatching {
    /// Matched paper position per row.
    pub matches: Vec<Option<usize>>,
    /// Score of the accepted match per row (0 when unmatched).
    pub scores: Vec<f64>,
    /// Rows whose only qualifying papers were claimed by better rows,
    /// with the paper they scored highest against.
    pub duplicates: Vec<(usize, usize)>,
}

/// Greedy one-to-one assignment of row titles to papers by descending score.
///
/// Ties are broken by smaller edit distance between the raw titles, then by
/// matching duration when supplied, then row order, then paper order.
pub fn match_titles(
    row_titles: &[&str],
    row_durations: Option<&[u32]>,
    papers: &[Paper],
) -> TitleMatching {
    struct Candidate {
        row: usize,
        paper: usize,
        score: f64,
        distance: usize,
        duration_mismatch: bool,
    }
    let mut candidates = Vec::new();
    for (r, title) in row_titles.iter().enumerate() {
        let folded = title.trim().to_lowercase();
        for (p, paper) in papers.iter().enumerate() {
            let score = title_score(title, &paper.title);
            if score + 1e-12 < MATCH_THRESHOLD {
                continue;
            }
            candidates.push(Candidate {
                row: r,
                paper: p,
                score,
                distance: strsim::levenshtein(&folded, &paper.title.trim().to_lowercase()),
                duration_mismatch: row_durations.is_some_and(|d| d[r] != paper.duration),
            });
        }
    }
    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.distance.cmp(&b.distance))
            .then(a.duration_mismatch.cmp(&b.duration_mismatch))
            .then(a.row.cmp(&b.row))
            .then(a.paper.cmp(&b.paper))
    });

    let mut matching = TitleMatching {
        matches: vec![None; row_titles.len()],
        scores: vec![0.0; row_titles.len()],
        duplicates: Vec::new(),
    };
    let mut best_for_row: Vec<Option<usize>> = vec![None; row_titles.len()];
    let mut taken = vec![false; papers.len()];
    for c in &candidates {
        if best_for_row[c.row].is_none() {
            best_for_row[c.row] = Some(c.paper);
        }
        if matching.matches[c.row].is_some() || taken[c.paper] {
            continue;
        }
        matching.matches[c.row] = Some(c.paper);
        matching.scores[c.row] = c.score;
        taken[c.paper] = true;
    }
    for (row, best) in best_for_row.iter().enumerate() {
        if let (None, Some(paper)) = (matching.matches[row], best) {
            matching.duplicates.push((row, *paper));
        }
    }
    matching
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResolutionReport {
    /// Matched paper per input row, including rows routed to unknown sessions.
    pub row_papers: Vec<Option<PaperId>>,
    /// Rows with no paper scoring at least [`MATCH_THRESHOLD`].
    pub unmatched_rows: Vec<usize>,
    /// Instance papers no row was matched to.
    pub unmatched_papers: Vec<PaperId>,
    /// Rows that lost their paper to a better-scoring row.
    pub duplicate_matches: Vec<(usize, PaperId)>,
    /// Rows whose session token is not an instance session id.
    pub unknown_sessions: Vec<(usize, String)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Resolution {
    pub schedule: Schedule,
    pub report: ResolutionReport,
}

/// Maps parsed rows onto instance papers and sessions.
///
/// A matched row whose session token is unknown still accounts for its
/// paper (the paper is not missing) but contributes no assignment.
pub fn resolve_titles(rows: &[RawScheduleRow], instance: &Instance) -> Resolution {
    let titles: Vec<&str> = rows.iter().map(|r| r.talk_title.as_str()).collect();
    let durations: Vec<u32> = rows.iter().map(|r| r.duration).collect();
    let matching = match_titles(&titles, Some(&durations), instance.papers());
    let papers = instance.papers();

    let mut report = ResolutionReport::default();
    let mut schedule = Schedule::new();
    let mut matched = vec![false; papers.len()];
    let duplicate_rows: HashSet<usize> = matching.duplicates.iter().map(|(r, _)| *r).collect();
    for (r, row) in rows.iter().enumerate() {
        let session = SessionId(row.session.clone());
        let known = instance.session_position(&session).is_some();
        if !known {
            report.unknown_sessions.push((r, row.session.clone()));
        }
        match matching.matches[r] {
            Some(p) => {
                matched[p] = true;
                report.row_papers.push(Some(papers[p].id.clone()));
                if known {
                    schedule.assign(papers[p].id.clone(), session);
                }
            }
            None => {
                report.row_papers.push(None);
                if !duplicate_rows.contains(&r) {
                    report.unmatched_rows.push(r);
                }
            }
        }
    }
    report.duplicate_matches = matching
        .duplicates
        .iter()
        .map(|&(r, p)| (r, papers[p].id.clone()))
        .collect();
    report.unmatched_papers = papers
        .iter()
        .zip(&matched)
        .filter(|(_, &m)| !m)
        .map(|(p, _)| p.id.clone())
        .collect();
    Resolution { schedule, report }
}

/// Parses and resolves a schedule file (fenced `@` block) in one step.
pub fn read_schedule_text(text: &str, instance: &Instance) -> Result<(ParsedBlock, Resolution), ParseError> {
    let parsed = parse_schedule_block(text)?;
    let resolution = resolve_titles(&parsed.rows, instance);
    Ok((parsed, resolution))
}

/// Per-session paper ids in row order, for ordering checks.
pub(crate) fn session_sequences(
    report: &ResolutionReport,
    rows: &[RawScheduleRow],
    instance: &Instance,
) -> BTreeMap<usize, Vec<PaperId>> {
    let mut out: BTreeMap<usize, Vec<PaperId>> = BTreeMap::new();
    for (row, paper) in rows.iter().zip(&report.row_papers) {
        if let (Some(paper), Some(m)) = (
            paper,
            instance.session_position(&SessionId(row.session.clone())),
        ) {
            out.entry(m).or_default().push(paper.clone());
        }
    }
    out
}
