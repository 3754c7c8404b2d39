use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;
use sessionize::ingest;
use sessionize::llm::{self, ClusterRepair, LlmSettings};
use sessionize::metrics::ScorePair;
use sessionize::similarity::{self, TextFields};
use sessionize::{Labeling, PaperId};

use super::{Context, LlmSession};
use crate::args::{ClusterArgs, Method};
use crate::output::{fmt_score, write_file, Failure, Report};

#[derive(Serialize)]
struct TrialReport {
    seed: u64,
    #[serde(flatten)]
    scores: Option<ScorePair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    repair: Option<ClusterRepair>,
    labeling: BTreeMap<PaperId, u32>,
}

#[derive(Serialize)]
struct ClusterReport {
    method: &'static str,
    fields: TextFields,
    k: usize,
    trials: Vec<TrialReport>,
    mean: Option<ScorePair>,
}

pub fn run(args: &ClusterArgs, ctx: &Context) -> Result<Report, Failure> {
    let papers = ingest::load_papers(&args.papers)?;
    let reference = args.reference.as_ref().map(ingest::load_labeling).transpose()?;
    if args.trials == 0 {
        return Err(Failure::input("--trials must be at least 1"));
    }
    let seeds = similarity::trial_seeds(ctx.seed, args.trials);
    let fields = TextFields::from(args.fields);

    let (labelings, repairs): (Vec<(u64, Labeling)>, Vec<Option<ClusterRepair>>) = match args.method {
        Method::Tfidf => {
            let model = similarity::build_tfidf(&papers, fields)?;
            let runs = seeds
                .iter()
                .map(|&s| similarity::kmeans(&model, args.k, s).map(|l| ((s, l), None)))
                .collect::<Result<Vec<_>, _>>()?;
            runs.into_iter().unzip()
        }
        Method::Llm => {
            if args.fields != crate::args::Fields::Title {
                return Err(Failure::input("--method llm clusters titles only; use --fields title"));
            }
            let session = LlmSession::open(&args.llm, ctx)?;
            let mut runs = Vec::with_capacity(seeds.len());
            for &seed in &seeds {
                let settings = LlmSettings {
                    seed,
                    ..session.settings.clone()
                };
                let outcome = llm::llm_cluster(&papers, args.k, session.client.as_ref(), &settings)
                    .map_err(|e| session.fail(e))?;
                session.log(&outcome.transcript)?;
                runs.push(((seed, outcome.labeling), Some(outcome.repair)));
            }
            runs.into_iter().unzip()
        }
    };

    if let Some(dir) = &args.labels_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))?;
        for (seed, labeling) in &labelings {
            write_file(&dir.join(format!("trial-{seed}.csv")), &ingest::write_labeling(&papers, labeling))?;
        }
    }

    let summary = similarity::summarize_trials(labelings, reference.as_ref())?;
    let method = match args.method {
        Method::Tfidf => "tfidf",
        Method::Llm => "llm",
    };

    let mut human = format!("method {method}, k {}, {} trial(s)\n", args.k, args.trials);
    for (trial, repair) in summary.trials.iter().zip(&repairs) {
        let _ = write!(human, "seed {}", trial.seed);
        if let Some(s) = trial.scores {
            let _ = write!(human, ": homogeneity {} completeness {}", fmt_score(s.homogeneity), fmt_score(s.completeness));
        }
        if let Some(r) = repair.as_ref().filter(|r| !r.is_clean()) {
            let _ = write!(
                human,
                " (repaired: {} omitted, {} rejected, {} duplicate rows)",
                r.omitted.len(),
                r.rejected_rows.len(),
                r.duplicate_rows.len()
            );
        }
        human.push('\n');
    }
    if let Some(m) = summary.mean {
        let _ = writeln!(
            human,
            "mean: homogeneity {} completeness {}",
            fmt_score(m.homogeneity),
            fmt_score(m.completeness)
        );
    }

    let report = ClusterReport {
        method,
        fields,
        k: args.k,
        mean: summary.mean,
        trials: summary
            .trials
            .into_iter()
            .zip(repairs)
            .map(|(t, repair)| TrialReport {
                seed: t.seed,
                scores: t.scores,
                repair,
                labeling: t.labeling.iter().map(|(p, l)| (p.clone(), l)).collect(),
            })
            .collect(),
    };
    Ok(Report::new(human, report))
}
