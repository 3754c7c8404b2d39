use serde::Serialize;
use sessionize::ingest;
use sessionize::metrics::{self, ScorePair};
use sessionize::ViolationReport;

use super::{load_instance, read_text, Context};
use crate::args::EvaluateArgs;
use crate::output::{describe_scores, describe_violations, Failure, Report};

#[derive(Serialize)]
struct Evaluation {
    scores: Option<ScorePair>,
    violations: ViolationReport,
}

pub fn run(args: &EvaluateArgs, _ctx: &Context) -> Result<Report, Failure> {
    let instance = load_instance(&args.instance)?;
    let (_, reference) = ingest::read_schedule_text(&read_text(&args.reference)?, &instance)
        .map_err(|e| Failure::input(format!("reference {}: {e}", args.reference.display())))?;

    // a candidate without a schedule block is still evaluated
    let (scores, violations) = match ingest::read_schedule_text(&read_text(&args.candidate)?, &instance) {
        Ok((parsed, resolution)) => (
            metrics::schedule_scores(&reference.schedule, &resolution.schedule, &instance).ok(),
            metrics::violation_report(&instance, &parsed.rows, &resolution),
        ),
        Err(_) => (None, ViolationReport::unparseable(&instance)),
    };

    let mut human = describe_scores(scores);
    human.push_str(&describe_violations(&violations));
    Ok(Report::new(human, Evaluation { scores, violations }))
}
