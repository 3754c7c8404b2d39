//! Allocation of conference papers to fixed-length sessions.
//!
//! Papers are grouped by text similarity (TFIDF k-means or a language
//! model), the grouping becomes a pairwise similarity, and an exact
//! branch-and-bound search places every paper in one session without
//! overrunning any session while maximizing same-session similarity.
//! Any schedule, including one written by a language model, can be audited
//! for constraint violations and scored against a reference schedule.

pub mod ingest;
pub mod llm;
pub mod metrics;
pub mod model;
pub mod similarity;
pub mod solver;

pub use metrics::{ScorePair, ViolationReport};
pub use model::{
    check_feasible, objective_value, FeasibilityReport, Instance, Labeling, Paper, PaperId,
    Schedule, Session, SessionId, SimilarityMatrix,
};
pub use solver::{SolverProblem, SolverResult, SolverStatus};
