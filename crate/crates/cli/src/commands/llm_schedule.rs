use serde::Serialize;
use sessionize::ingest::{self, LineDefect, RawScheduleRow, ResolutionReport, FENCE, SCHEDULE_HEADER};
use sessionize::llm;
use sessionize::metrics::{self, ScorePair};
use sessionize::{Instance, Schedule, ViolationReport};

use super::{load_instance, read_text, Context, LlmSession};
use crate::args::LlmScheduleArgs;
use crate::output::{describe_scores, describe_violations, write_file, Failure, Report};

#[derive(Serialize)]
struct LlmScheduleReport<'a> {
    papers: usize,
    sessions: usize,
    attempts: u32,
    violations: &'a ViolationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    scores: Option<ScorePair>,
    resolution: Option<&'a ResolutionReport>,
    defects: &'a [LineDefect],
    assignment: &'a Schedule,
    transcript: String,
}

/// The reply's rows as a wire-format block, kept verbatim so a later
/// `evaluate` sees exactly what the model proposed.
fn rows_block(rows: &[RawScheduleRow]) -> String {
    let mut text = format!("{FENCE}\n{SCHEDULE_HEADER}\n");
    for row in rows {
        text.push_str(&format!("{}@{}@{}\n", row.session, row.talk_title, row.duration));
    }
    text.push_str(FENCE);
    text.push('\n');
    text
}

fn reference_schedule(args: &LlmScheduleArgs, instance: &Instance) -> Result<Option<Schedule>, Failure> {
    let Some(path) = &args.reference_schedule else {
        return Ok(None);
    };
    let (_, resolution) = ingest::read_schedule_text(&read_text(path)?, instance)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(Some(resolution.schedule))
}

pub fn run(args: &LlmScheduleArgs, ctx: &Context) -> Result<Report, Failure> {
    let full = load_instance(&args.instance)?;
    let reference = reference_schedule(args, &full)?;
    let (instance, reference) = match (args.papers_per_session, reference) {
        (Some(p), Some(reference)) => {
            let (small, restricted) =
                llm::downsample(&full, &reference, p).map_err(|e| Failure::input(e.to_string()))?;
            (small, Some(restricted))
        }
        (_, reference) => (full, reference),
    };

    let session = LlmSession::open(&args.llm, ctx)?;
    let outcome = llm::zero_shot_schedule(&instance, session.client.as_ref(), &session.settings)
        .map_err(|e| session.fail(e))?;
    session.log(&outcome.transcript)?;

    let rows = outcome.parsed.as_ref().map_or(&[][..], |p| &p.rows[..]);
    if let (Some(path), Some(_)) = (&args.schedule_out, &outcome.parsed) {
        write_file(path, &rows_block(rows))?;
    }
    let scores = match &reference {
        Some(r) => metrics::schedule_scores(r, &outcome.schedule, &instance).ok(),
        None => None,
    };

    let mut human = format!(
        "{} papers, {} sessions, {} attempt(s)\n",
        instance.paper_count(),
        instance.session_count(),
        outcome.attempts
    );
    human.push_str(&describe_violations(&outcome.violations));
    if reference.is_some() {
        human.push_str(&describe_scores(scores));
    }
    if outcome.parsed.is_some() && args.schedule_out.is_none() {
        human.push_str(&rows_block(rows));
    }

    let report = LlmScheduleReport {
        papers: instance.paper_count(),
        sessions: instance.session_count(),
        attempts: outcome.attempts,
        violations: &outcome.violations,
        scores,
        resolution: outcome.resolution.as_ref(),
        defects: outcome.parsed.as_ref().map_or(&[][..], |p| &p.defects[..]),
        assignment: &outcome.schedule,
        transcript: session.transcript.display().to_string(),
    };
    Ok(Report::new(human, report))
}
