//! Domain model: papers, sessions, instances, schedules, labelings and
//! pairwise similarity, plus the feasibility and objective checks every
//! other module builds on.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Title that marks a discussion slot which must close its session.
pub const DISCUSSION_TITLE: &str = "Discussions and Q/A";

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("instance needs at least one paper")]
    NoPapers,
    #[error("instance needs at least one session")]
    NoSessions,
    #[error("duplicate paper id `{0}`")]
    DuplicatePaper(PaperId),
    #[error("duplicate session id `{0}`")]
    DuplicateSession(SessionId),
    #[error("paper `{0}` has an empty title")]
    EmptyTitle(PaperId),
    #[error("paper `{0}` has zero duration")]
    ZeroDuration(PaperId),
    #[error("session `{0}` has zero length")]
    ZeroLength(SessionId),
    #[error("schedule references unknown paper `{0}`")]
    UnknownPaper(PaperId),
    #[error("schedule references unknown session `{0}`")]
    UnknownSession(SessionId),
    #[error("schedule does not assign paper `{0}`")]
    Unassigned(PaperId),
    #[error("similarity matrix is {found}x{found} but the instance has {expected} papers")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("similarity matrix entry ({row}, {col}) is invalid: {reason}")]
    InvalidSimilarity {
        row: usize,
        col: usize,
        reason: &'static str,
    },
    #[error("labeling does not cover paper `{0}`")]
    MissingLabel(PaperId),
}

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(PaperId);
string_id!(SessionId);

/// One accepted talk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paper {
    pub id: PaperId,
    pub title: String,
    pub abstract_text: Option<String>,
    /// Minutes.
    pub duration: u32,
}

impl Paper {
    pub fn new(id: impl Into<PaperId>, title: impl Into<String>, duration: u32) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            abstract_text: None,
            duration,
        }
    }

    pub fn with_abstract(mut self, text: impl Into<String>) -> Self {
        self.abstract_text = Some(text.into());
        self
    }

    /// Discussion slots are ordinary papers with a reserved title.
    pub fn is_discussion(&self) -> bool {
        self.title.trim() == DISCUSSION_TITLE
    }
}

/// One fixed-length slot of the program.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: SessionId,
    pub title: String,
    /// Minutes.
    pub length: u32,
}

impl Session {
    pub fn new(id: impl Into<SessionId>, title: impl Into<String>, length: u32) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            length,
        }
    }
}

/// Validated set of papers and sessions. Immutable after construction.
///
/// Total duration exceeding total capacity is allowed; the solver reports
/// such instances as infeasible.
#[derive(Debug, Clone)]
pub struct Instance {
    papers: Vec<Paper>,
    sessions: Vec<Session>,
    paper_index: HashMap<PaperId, usize>,
    session_index: HashMap<SessionId, usize>,
}

impl Instance {
    pub fn new(papers: Vec<Paper>, sessions: Vec<Session>) -> Result<Self, ModelError> {
        if papers.is_empty() {
            return Err(ModelError::NoPapers);
        }
        if sessions.is_empty() {
            return Err(ModelError::NoSessions);
        }
        let mut paper_index = HashMap::with_capacity(papers.len());
        for (i, p) in papers.iter().enumerate() {
            if p.title.trim().is_empty() {
                return Err(ModelError::EmptyTitle(p.id.clone()));
            }
            if p.duration == 0 {
                return Err(ModelError::ZeroDuration(p.id.clone()));
            }
            if paper_index.insert(p.id.clone(), i).is_some() {
                return Err(ModelError::DuplicatePaper(p.id.clone()));
            }
        }
        let mut session_index = HashMap::with_capacity(sessions.len());
        for (j, s) in sessions.iter().enumerate() {
            if s.length == 0 {
                return Err(ModelError::ZeroLength(s.id.clone()));
            }
            if session_index.insert(s.id.clone(), j).is_some() {
                return Err(ModelError::DuplicateSession(s.id.clone()));
            }
        }
        Ok(Self {
            papers,
            sessions,
            paper_index,
            session_index,
        })
    }

    pub fn papers(&self) -> &[Paper] {
        &self.papers
    }

    pub fn sessions(&self) -> &[Session] {
        &self.sessions
    }

    pub fn paper_count(&self) -> usize {
        self.papers.len()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    pub fn paper_position(&self, id: &PaperId) -> Option<usize> {
        self.paper_index.get(id).copied()
    }

    pub fn session_position(&self, id: &SessionId) -> Option<usize> {
        self.session_index.get(id).copied()
    }

    pub fn total_duration(&self) -> u64 {
        self.papers.iter().map(|p| u64::from(p.duration)).sum()
    }

    pub fn total_capacity(&self) -> u64 {
        self.sessions.iter().map(|s| u64::from(s.length)).sum()
    }
}

/// Map from paper to session. Solver output is total; parsed schedules may
/// be partial.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule {
    assignment: BTreeMap<PaperId, SessionId>,
}

impl Schedule {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a schedule from per-paper session positions in instance order.
    pub fn from_positions(instance: &Instance, positions: &[usize]) -> Self {
        let assignment = instance
            .papers()
            .iter()
            .zip(positions)
            .map(|(p, &m)| (p.id.clone(), instance.sessions()[m].id.clone()))
            .collect();
        Self { assignment }
    }

    pub fn assign(&mut self, paper: PaperId, session: SessionId) -> Option<SessionId> {
        self.assignment.insert(paper, session)
    }

    pub fn session_of(&self, paper: &PaperId) -> Option<&SessionId> {
        self.assignment.get(paper)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PaperId, &SessionId)> {
        self.assignment.iter()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Session position per paper position; `None` for unassigned papers.
    pub fn positions(&self, instance: &Instance) -> Result<Vec<Option<usize>>, ModelError> {
        self.validate_ids(instance)?;
        Ok(instance
            .papers()
            .iter()
            .map(|p| {
                self.assignment
                    .get(&p.id)
                    .and_then(|s| instance.session_position(s))
            })
            .collect())
    }

    /// Like [`Schedule::positions`] but requires every paper to be assigned.
    pub fn total_positions(&self, instance: &Instance) -> Result<Vec<usize>, ModelError> {
        self.positions(instance)?
            .into_iter()
            .zip(instance.papers())
            .map(|(m, p)| m.ok_or_else(|| ModelError::Unassigned(p.id.clone())))
            .collect()
    }

    fn validate_ids(&self, instance: &Instance) -> Result<(), ModelError> {
        for (p, s) in &self.assignment {
            if instance.paper_position(p).is_none() {
                return Err(ModelError::UnknownPaper(p.clone()));
            }
            if instance.session_position(s).is_none() {
                return Err(ModelError::UnknownSession(s.clone()));
            }
        }
        Ok(())
    }
}

impl FromIterator<(PaperId, SessionId)> for Schedule {
    fn from_iter<I: IntoIterator<Item = (PaperId, SessionId)>>(iter: I) -> Self {
        Self {
            assignment: iter.into_iter().collect(),
        }
    }
}

/// Cluster or class label per paper. Labels need not be contiguous.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Labeling {
    labels: BTreeMap<PaperId, u32>,
}

impl Labeling {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pairs `labels[i]` with the i-th paper of `papers`.
    pub fn from_labels(papers: &[Paper], labels: &[u32]) -> Self {
        Self {
            labels: papers
                .iter()
                .zip(labels)
                .map(|(p, &l)| (p.id.clone(), l))
                .collect(),
        }
    }

    /// Labels each paper by the position of its session.
    pub fn from_schedule(instance: &Instance, schedule: &Schedule) -> Self {
        Self {
            labels: schedule
                .iter()
                .filter_map(|(p, s)| {
                    instance
                        .session_position(s)
                        .map(|m| (p.clone(), m as u32))
                })
                .collect(),
        }
    }

    pub fn insert(&mut self, paper: PaperId, label: u32) {
        self.labels.insert(paper, label);
    }

    pub fn get(&self, paper: &PaperId) -> Option<u32> {
        self.labels.get(paper).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PaperId, u32)> {
        self.labels.iter().map(|(p, &l)| (p, l))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn papers(&self) -> impl Iterator<Item = &PaperId> {
        self.labels.keys()
    }

    /// Labels in the instance's paper order.
    pub fn aligned(&self, papers: &[Paper]) -> Result<Vec<u32>, ModelError> {
        papers
            .iter()
            .map(|p| self.get(&p.id).ok_or_else(|| ModelError::MissingLabel(p.id.clone())))
            .collect()
    }
}

impl FromIterator<(PaperId, u32)> for Labeling {
    fn from_iter<I: IntoIterator<Item = (PaperId, u32)>>(iter: I) -> Self {
        Self {
            labels: iter.into_iter().collect(),
        }
    }
}

/// Symmetric, non-negative pairwise similarity with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; n * n],
        }
    }

    /// Validates symmetry and sign; the diagonal is forced to zero.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(ModelError::InvalidSimilarity {
                        row: i,
                        col: j,
                        reason: "must be finite and non-negative",
                    });
                }
                if v != rows[j][i] {
                    return Err(ModelError::InvalidSimilarity {
                        row: i,
                        col: j,
                        reason: "matrix is not symmetric",
                    });
                }
                values.push(if i == j { 0.0 } else { v });
            }
        }
        Ok(Self { n, values })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Sets both (i, j) and (j, i). Diagonal writes are ignored.
    pub fn set(&mut self, i: usize, j: usize, v: f64) -> Result<(), ModelError> {
        if !v.is_finite() || v < 0.0 {
            return Err(ModelError::InvalidSimilarity {
                row: i,
                col: j,
                reason: "must be finite and non-negative",
            });
        }
        if i != j {
            self.values[i * self.n + j] = v;
            self.values[j * self.n + i] = v;
        }
        Ok(())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Sum over unordered pairs.
    pub fn pair_total(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        if !factor.is_finite() || factor < 0.0 {
            return Err(ModelError::InvalidSimilarity {
                row: 0,
                col: 0,
                reason: "scale factor must be finite and non-negative",
            });
        }
        Ok(Self {
            n: self.n,
            values: self.values.iter().map(|v| v * factor).collect(),
        })
    }

    pub fn check_dim(&self, instance: &Instance) -> Result<(), ModelError> {
        if self.n != instance.paper_count() {
            return Err(ModelError::DimensionMismatch {
                expected: instance.paper_count(),
                found: self.n,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeasibilityReport {
    pub ok: bool,
    pub overfull_sessions: Vec<SessionId>,
    pub unassigned_papers: Vec<PaperId>,
}

/// Every paper assigned once and no session over its length.
pub fn check_feasible(
    instance: &Instance,
    schedule: &Schedule,
) -> Result<FeasibilityReport, ModelError> {
    let positions = schedule.positions(instance)?;
    let mut load = vec![0u64; instance.session_count()];
    let mut unassigned_papers = Vec::new();
    for (paper, m) in instance.papers().iter().zip(&positions) {
        match m {
            Some(m) => load[*m] += u64::from(paper.duration),
            None => unassigned_papers.push(paper.id.clone()),
        }
    }
    let overfull_sessions: Vec<SessionId> = instance
        .sessions()
        .iter()
        .zip(&load)
        .filter(|(s, &l)| l > u64::from(s.length))
        .map(|(s, _)| s.id.clone())
        .collect();
    Ok(FeasibilityReport {
        ok: overfull_sessions.is_empty() && unassigned_papers.is_empty(),
        overfull_sessions,
        unassigned_papers,
    })
}

/// Sum of similarity over unordered co-located pairs.
pub fn objective_value(
    instance: &Instance,
    schedule: &Schedule,
    sim: &SimilarityMatrix,
) -> Result<f64, ModelError> {
    sim.check_dim(instance)?;
    let positions = schedule.total_positions(instance)?;
    Ok(colocated_sum(&positions, sim))
}

pub(crate) fn colocated_sum(positions: &[usize], sim: &SimilarityMatrix) -> f64 {
    let mut total = 0.0;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            if positions[i] == positions[j] {
                total += sim.get(i, j);
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(durations: &[u32], lengths: &[u32]) -> Instance {
        let papers = durations
            .iter()
            .enumerate()
            .map(|(i, &d)| Paper::new(format!("p{i}"), format!("Paper {i}"), d))
            .collect();
        let sessions = lengths
            .iter()
            .enumerate()
            .map(|(j, &l)| Session::new(format!("s{j}"), format!("Session {j}"), l))
            .collect();
        Instance::new(papers, sessions).unwrap()
    }

    fn cluster_sim(labels: &[u32]) -> SimilarityMatrix {
        let n = labels.len();
        let mut sim = SimilarityMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j && labels[i] == labels[j] {
                    sim.set(i, j, 1.0).unwrap();
                }
            }
        }
        sim
    }

    #[test]
    fn capacity_met_with_equality_is_feasible() {
        let instance = inst(&[7, 7], &[14]);
        let s = Schedule::from_positions(&instance, &[0, 0]);
        let report = check_feasible(&instance, &s).unwrap();
        assert!(report.ok);
    }

    #[test]
    fn exceeding_by_one_minute_lists_session() {
        let instance = inst(&[7, 7], &[13]);
        let s = Schedule::from_positions(&instance, &[0, 0]);
        let report = check_feasible(&instance, &s).unwrap();
        assert!(!report.ok);
        assert_eq!(report.overfull_sessions, vec![SessionId::from("s0")]);
    }

    #[test]
    fn missing_paper_is_unassigned() {
        let instance = inst(&[7, 7], &[14]);
        let mut s = Schedule::new();
        s.assign("p0".into(), "s0".into());
        let report = check_feasible(&instance, &s).unwrap();
        assert!(!report.ok);
        assert_eq!(report.unassigned_papers, vec![PaperId::from("p1")]);
    }

    #[test]
    fn unknown_ids_are_malformed() {
        let instance = inst(&[7], &[14]);
        let mut s = Schedule::new();
        s.assign("p9".into(), "s0".into());
        assert_eq!(
            check_feasible(&instance, &s),
            Err(ModelError::UnknownPaper("p9".into()))
        );
        let mut s = Schedule::new();
        s.assign("p0".into(), "s7".into());
        assert_eq!(
            check_feasible(&instance, &s),
            Err(ModelError::UnknownSession("s7".into()))
        );
    }

    #[test]
    fn objective_examples() {
        let instance = inst(&[7, 7, 7, 7], &[28, 28, 28, 28]);
        let sim = cluster_sim(&[0, 0, 1, 1]);
        let apart = Schedule::from_positions(&instance, &[0, 1, 2, 3]);
        assert_eq!(objective_value(&instance, &apart, &sim).unwrap(), 0.0);

        let mut single = SimilarityMatrix::zeros(4);
        single.set(0, 1, 1.0).unwrap();
        let ab = Schedule::from_positions(&instance, &[0, 0, 1, 2]);
        assert_eq!(objective_value(&instance, &ab, &single).unwrap(), 1.0);

        let paired = Schedule::from_positions(&instance, &[0, 0, 1, 1]);
        assert_eq!(objective_value(&instance, &paired, &sim).unwrap(), 2.0);
    }

    #[test]
    fn objective_rejects_dimension_mismatch() {
        let instance = inst(&[7, 7], &[14]);
        let s = Schedule::from_positions(&instance, &[0, 0]);
        assert!(matches!(
            objective_value(&instance, &s, &SimilarityMatrix::zeros(3)),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert_eq!(
            Instance::new(vec![], vec![Session::new("s", "S", 1)]).unwrap_err(),
            ModelError::NoPapers
        );
        let dup = vec![Paper::new("a", "A", 1), Paper::new("a", "B", 1)];
        assert!(matches!(
            Instance::new(dup, vec![Session::new("s", "S", 1)]),
            Err(ModelError::DuplicatePaper(_))
        ));
        assert!(matches!(
            Instance::new(vec![Paper::new("a", "A", 0)], vec![Session::new("s", "S", 1)]),
            Err(ModelError::ZeroDuration(_))
        ));
        assert!(matches!(
            Instance::new(vec![Paper::new("a", "A", 1)], vec![Session::new("s", "S", 0)]),
            Err(ModelError::ZeroLength(_))
        ));
        // over-subscribed instances are still valid input
        assert!(Instance::new(vec![Paper::new("a", "A", 10)], vec![Session::new("s", "S", 5)]).is_ok());
    }

    #[test]
    fn similarity_rejects_asymmetry_and_zeroes_diagonal() {
        assert!(SimilarityMatrix::from_rows(vec![vec![0.0, 1.0], vec![0.5, 0.0]]).is_err());
        assert!(SimilarityMatrix::from_rows(vec![vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
        let m = SimilarityMatrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.get(0, 1), 2.0);
    }
}
