use std::fmt::Write;

use serde::Serialize;
use sessionize::ingest;
use sessionize::{check_feasible, Instance};

use super::{read_text, Context};
use crate::args::IngestCheckArgs;
use crate::output::{Failure, Report};

#[derive(Serialize, Default)]
struct Summary {
    papers: usize,
    total_duration: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sessions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    total_capacity: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labeled_papers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    clusters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    similarity_pair_total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule_rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule_defects: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unmatched_rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule_feasible: Option<bool>,
}

pub fn run(args: &IngestCheckArgs, _ctx: &Context) -> Result<Report, Failure> {
    let papers = ingest::load_papers(&args.papers)?;
    let mut summary = Summary {
        papers: papers.len(),
        total_duration: papers.iter().map(|p| u64::from(p.duration)).sum(),
        ..Summary::default()
    };

    if let Some(path) = &args.labeling {
        let labeling = ingest::load_labeling(path)?;
        labeling.aligned(&papers).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let mut clusters: Vec<u32> = labeling.iter().map(|(_, l)| l).collect();
        clusters.sort_unstable();
        clusters.dedup();
        summary.labeled_papers = Some(labeling.len());
        summary.clusters = Some(clusters.len());
    }

    if let Some(path) = &args.sessions {
        let instance = Instance::new(papers, ingest::load_sessions(path)?)?;
        summary.sessions = Some(instance.session_count());
        summary.total_capacity = Some(instance.total_capacity());
        if let Some(path) = &args.similarity {
            summary.similarity_pair_total = Some(ingest::load_similarity(path, &instance)?.pair_total());
        }
        if let Some(path) = &args.schedule {
            let (parsed, resolution) = ingest::read_schedule_text(&read_text(path)?, &instance)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            summary.schedule_rows = Some(parsed.rows.len());
            summary.schedule_defects = Some(parsed.defects.len());
            summary.unmatched_rows = Some(resolution.report.unmatched_rows.len());
            summary.schedule_feasible = Some(check_feasible(&instance, &resolution.schedule)?.ok);
        }
    }

    let mut human = format!("{} papers, {} minutes in total\n", summary.papers, summary.total_duration);
    if let (Some(m), Some(cap)) = (summary.sessions, summary.total_capacity) {
        let _ = writeln!(human, "{m} sessions, {cap} minutes of capacity");
        if cap < summary.total_duration {
            human.push_str("warning: papers need more time than the sessions provide\n");
        }
    }
    if let (Some(n), Some(k)) = (summary.labeled_papers, summary.clusters) {
        let _ = writeln!(human, "labeling covers {n} papers in {k} clusters");
    }
    if let Some(total) = summary.similarity_pair_total {
        let _ = writeln!(human, "similarity pair total {total}");
    }
    if let (Some(rows), Some(defects), Some(unmatched), Some(ok)) = (
        summary.schedule_rows,
        summary.schedule_defects,
        summary.unmatched_rows,
        summary.schedule_feasible,
    ) {
        let _ = writeln!(
            human,
            "schedule: {rows} rows, {defects} malformed, {unmatched} unmatched, {}",
            if ok { "feasible" } else { "not feasible" }
        );
    }
    Ok(Report::new(human, summary))
}
