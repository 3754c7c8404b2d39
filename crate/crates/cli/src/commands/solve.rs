use std::fmt::Write;
use std::time::Duration;

use sessionize::ingest;
use sessionize::similarity::labeling_to_similarity;
use sessionize::solver::{self, SolverProblem, SolverStatus};

use super::{load_instance, Context};
use crate::args::SolveArgs;
use crate::output::{write_file, Failure, Report, EXIT_INFEASIBLE, EXIT_TIMEOUT};

pub fn run(args: &SolveArgs, ctx: &Context) -> Result<Report, Failure> {
    let instance = load_instance(&args.instance)?;
    let sim = match (&args.labeling, &args.similarity) {
        (Some(path), _) => labeling_to_similarity(&ingest::load_labeling(path)?, &instance)?,
        (None, Some(path)) => ingest::load_similarity(path, &instance)?,
        (None, None) => return Err(Failure::input("pass --labeling or --similarity")),
    };

    let mut problem = SolverProblem::new(&instance, &sim)?;
    if let Some(secs) = args.time_budget.or(ctx.config.solve.time_budget) {
        let budget = Duration::try_from_secs_f64(secs)
            .map_err(|_| Failure::input(format!("invalid --time-budget {secs}")))?;
        problem = problem.with_time_budget(budget);
    }
    let result = if args.oracle {
        solver::brute_force(&problem)?
    } else {
        solver::solve(&problem)?
    };

    let wire = match &result.schedule {
        Some(schedule) => Some(ingest::emit_schedule(&instance, schedule)?),
        None => None,
    };
    if let (Some(path), Some(wire)) = (&args.schedule_out, &wire) {
        write_file(path, &wire.text)?;
    }

    let status = serde_json::to_value(result.status).expect("status serializes");
    let mut human = format!("status {}\n", status.as_str().unwrap_or_default());
    if let Some(obj) = result.objective {
        let _ = writeln!(human, "objective {obj}");
    }
    let _ = writeln!(human, "bound {}\nnodes {}", result.bound, result.nodes_explored);
    if let Some(wire) = &wire {
        if !wire.sanitized.is_empty() {
            let _ = writeln!(human, "sanitized {} title(s) for the wire format", wire.sanitized.len());
        }
        if args.schedule_out.is_none() {
            human.push_str(&wire.text);
        }
    }

    let code = match result.status {
        SolverStatus::Infeasible => EXIT_INFEASIBLE,
        SolverStatus::TimeoutNoIncumbent => EXIT_TIMEOUT,
        _ => 0,
    };
    Ok(Report::new(human, &result).with_code(code))
}
