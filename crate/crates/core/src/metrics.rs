//! Schedule and clustering evaluation.
//!
//! Homogeneity and completeness are entropy ratios over the contingency
//! table of reference classes against predicted clusters (natural logs).
//! The violation report counts the defects a generated schedule can have:
//! dropped papers, invented sessions, overfull sessions and misplaced
//! discussion slots.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{self, RawScheduleRow, Resolution};
use crate::model::{Instance, Labeling, PaperId, Schedule, SessionId};

pub const OVERAGE_MODERATE: f64 = 0.10;
pub const OVERAGE_SEVERE: f64 = 0.50;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("labelings cover different papers (first difference: `{0}`)")]
    DomainMismatch(PaperId),
    #[error("no papers to score")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub homogeneity: f64,
    pub completeness: f64,
}

/// Sums in ascending order so the result does not depend on which side of
/// the contingency table the terms came from.
fn stable_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

fn entropy(counts: impl Iterator<Item = usize>, total: f64) -> f64 {
    stable_sum(
        counts
            .filter(|&c| c > 0)
            .map(|c| {
                let p = c as f64 / total;
                -p * p.ln()
            })
            .collect(),
    )
}

/// Homogeneity of `predicted` clusters w.r.t. `reference` classes, and
/// completeness of the same pair.
pub fn homogeneity_completeness(
    reference: &Labeling,
    predicted: &Labeling,
) -> Result<ScorePair, MetricsError> {
    if reference.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(p) = reference
        .papers()
        .find(|p| predicted.get(p).is_none())
        .or_else(|| predicted.papers().find(|p| reference.get(p).is_none()))
    {
        return Err(MetricsError::DomainMismatch(p.clone()));
    }

    let mut joint: HashMap<(u32, u32), usize> = HashMap::new();
    let mut classes: BTreeMap<u32, usize> = BTreeMap::new();
    let mut clusters: BTreeMap<u32, usize> = BTreeMap::new();
    for (paper, c) in reference.iter() {
        let k = predicted.get(paper).expect("domains checked");
        *joint.entry((c, k)).or_default() += 1;
        *classes.entry(c).or_default() += 1;
        *clusters.entry(k).or_default() += 1;
    }
    let n = reference.len() as f64;
    let h_c = entropy(classes.values().copied(), n);
    let h_k = entropy(clusters.values().copied(), n);

    // H(C|K) = -sum n_ck/N ln(n_ck/n_k), H(K|C) symmetrically
    let mut c_given_k = Vec::with_capacity(joint.len());
    let mut k_given_c = Vec::with_capacity(joint.len());
    for (&(c, k), &n_ck) in &joint {
        let p = n_ck as f64 / n;
        c_given_k.push(-p * (n_ck as f64 / clusters[&k] as f64).ln());
        k_given_c.push(-p * (n_ck as f64 / classes[&c] as f64).ln());
    }
    let h_c_given_k = stable_sum(c_given_k);
    let h_k_given_c = stable_sum(k_given_c);

    let ratio = |cond: f64, total: f64| {
        if total == 0.0 {
            1.0
        } else {
            (1.0 - cond / total).clamp(0.0, 1.0)
        }
    };
    Ok(ScorePair {
        homogeneity: ratio(h_c_given_k, h_c),
        completeness: ratio(h_k_given_c, h_k),
    })
}

/// Scores two schedules over the papers both of them place.
pub fn schedule_scores(
    reference: &Schedule,
    predicted: &Schedule,
    instance: &Instance,
) -> Result<ScorePair, MetricsError> {
    let reference = Labeling::from_schedule(instance, reference);
    let predicted = Labeling::from_schedule(instance, predicted);
    let common: Vec<PaperId> = reference
        .papers()
        .filter(|p| predicted.get(p).is_some())
        .cloned()
        .collect();
    if common.is_empty() {
        return Err(MetricsError::Empty);
    }
    let restrict = |l: &Labeling| -> Labeling {
        common
            .iter()
            .map(|p| (p.clone(), l.get(p).expect("common paper")))
            .collect()
    };
    homogeneity_completeness(&restrict(&reference), &restrict(&predicted))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overage {
    pub session: SessionId,
    pub total: u64,
    pub length: u32,
    /// `(total - length) / length`, always positive.
    pub overage_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    /// Set when no schedule block could be extracted at all.
    pub unparseable: bool,
    pub missing_papers: usize,
    pub missing_paper_ids: Vec<PaperId>,
    pub added_sessions: usize,
    pub added_session_ids: Vec<String>,
    pub overfull_sessions: Vec<Overage>,
    pub sessions_over_10pct: usize,
    pub sessions_over_50pct: usize,
    pub qa_misplaced: Vec<SessionId>,
    pub duplicate_assignments: Vec<PaperId>,
}

impl ViolationReport {
    /// Report for a response with no usable schedule: every paper missing.
    pub fn unparseable(instance: &Instance) -> Self {
        let missing: Vec<PaperId> = instance.papers().iter().map(|p| p.id.clone()).collect();
        Self {
            unparseable: true,
            missing_papers: missing.len(),
            missing_paper_ids: missing,
            ..Self::default()
        }
    }

    pub fn is_clean(&self) -> bool {
        !self.unparseable
            && self.missing_papers == 0
            && self.added_sessions == 0
            && self.overfull_sessions.is_empty()
            && self.qa_misplaced.is_empty()
            && self.duplicate_assignments.is_empty()
    }
}

/// Builds the violation report for parsed rows and their resolution.
///
/// Session loads use the instance's durations, not the durations claimed in
/// the rows.
pub fn violation_report(
    instance: &Instance,
    rows: &[RawScheduleRow],
    resolved: &Resolution,
) -> ViolationReport {
    let report = &resolved.report;

    let matched: BTreeSet<&PaperId> = report.row_papers.iter().flatten().collect();
    let missing_paper_ids: Vec<PaperId> = instance
        .papers()
        .iter()
        .filter(|p| !matched.contains(&p.id))
        .map(|p| p.id.clone())
        .collect();

    let added_session_ids: Vec<String> = rows
        .iter()
        .map(|r| r.session.as_str())
        .filter(|s| instance.session_position(&SessionId((*s).to_owned())).is_none())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect();

    let mut load = vec![0u64; instance.session_count()];
    for (paper, session) in resolved.schedule.iter() {
        if let (Some(i), Some(m)) = (instance.paper_position(paper), instance.session_position(session)) {
            load[m] += u64::from(instance.papers()[i].duration);
        }
    }
    let overfull_sessions: Vec<Overage> = instance
        .sessions()
        .iter()
        .zip(&load)
        .filter(|(s, &total)| total > u64::from(s.length))
        .map(|(s, &total)| Overage {
            session: s.id.clone(),
            total,
            length: s.length,
            overage_fraction: (total - u64::from(s.length)) as f64 / f64::from(s.length),
        })
        .collect();

    let qa_misplaced = ingest::session_sequences(report, rows, instance)
        .into_iter()
        .filter(|(_, seq)| {
            seq.iter()
                .enumerate()
                .any(|(pos, id)| pos + 1 < seq.len() && is_discussion(instance, id))
        })
        .map(|(m, _)| instance.sessions()[m].id.clone())
        .collect();

    let duplicate_assignments: Vec<PaperId> = report
        .duplicate_matches
        .iter()
        .map(|(_, p)| p.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    ViolationReport {
        unparseable: false,
        missing_papers: missing_paper_ids.len(),
        missing_paper_ids,
        added_sessions: added_session_ids.len(),
        added_session_ids,
        sessions_over_10pct: overfull_sessions
            .iter()
            .filter(|o| o.overage_fraction > OVERAGE_MODERATE)
            .count(),
        sessions_over_50pct: overfull_sessions
            .iter()
            .filter(|o| o.overage_fraction > OVERAGE_SEVERE)
            .count(),
        overfull_sessions,
        qa_misplaced,
        duplicate_assignments,
    }
}

fn is_discussion(instance: &Instance, id: &PaperId) -> bool {
    instance
        .paper_position(id)
        .is_some_and(|i| instance.papers()[i].is_discussion())
}
