//! Synthetic workloads shared by the benchmarks.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sessionize::{Instance, Labeling, Paper, Session, SimilarityMatrix};

const TOPICS: &[&[&str]] = &[
    &["flaky", "tests", "mutation", "coverage", "regression", "fuzzing"],
    &["vulnerabilities", "dependencies", "exploits", "security", "patches", "advisories"],
    &["neural", "models", "embeddings", "transformers", "training", "generation"],
    &["developers", "newcomers", "contributors", "onboarding", "maintainers", "toxicity"],
    &["builds", "compilation", "pipelines", "docker", "configuration", "breakages"],
];
const FILLER: &[&str] = &["empirical", "study", "towards", "large", "scale", "analysis", "open", "source"];

/// `topics * per_topic` papers of `paper_len` minutes and just enough
/// sessions of `session_len` minutes to hold them, with ground-truth topics.
pub fn clustered(topics: usize, per_topic: usize, paper_len: u32, session_len: u32) -> (Instance, Labeling) {
    let n = topics * per_topic;
    let papers: Vec<Paper> = (0..n)
        .map(|i| Paper::new(format!("p{i}"), format!("Paper {i}"), paper_len))
        .collect();
    let per_session = (session_len / paper_len).max(1) as usize;
    let sessions: Vec<Session> = (0..n.div_ceil(per_session))
        .map(|j| Session::new(format!("s{j}"), format!("Session {j}"), session_len))
        .collect();
    let labels: Vec<u32> = (0..n).map(|i| (i / per_topic) as u32).collect();
    let labeling = Labeling::from_labels(&papers, &labels);
    (Instance::new(papers, sessions).expect("valid instance"), labeling)
}

/// `n` papers with durations 5..=20 and `m` equal sessions with 20% slack,
/// plus uniform random pairwise similarity.
pub fn random_weighted(seed: u64, n: usize, m: usize) -> (Instance, SimilarityMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let durations: Vec<u32> = (0..n).map(|_| rng.random_range(5..=20)).collect();
    let total: u32 = durations.iter().sum();
    let length = (total * 6 / 5).div_ceil(m as u32);
    let papers = durations
        .iter()
        .enumerate()
        .map(|(i, &d)| Paper::new(format!("p{i}"), format!("Paper {i}"), d))
        .collect();
    let sessions = (0..m)
        .map(|j| Session::new(format!("s{j}"), format!("Session {j}"), length))
        .collect();
    let mut sim = SimilarityMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            sim.set(i, j, rng.random_range(0.0..1.0)).expect("non-negative");
        }
    }
    (Instance::new(papers, sessions).expect("valid instance"), sim)
}

/// Papers whose titles and abstracts mix topic words with filler.
pub fn corpus(seed: u64, n: usize) -> (Vec<Paper>, Labeling) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::with_capacity(n);
    let papers: Vec<Paper> = (0..n)
        .map(|i| {
            let t = rng.random_range(0..TOPICS.len());
            labels.push(t as u32);
            let mut words = |k: usize| -> String {
                (0..k)
                    .map(|_| {
                        let pool = if rng.random_bool(0.6) { TOPICS[t] } else { FILLER };
                        *pool.choose(&mut rng).expect("non-empty pool")
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let title = words(7);
            let abstract_text = words(40);
            Paper::new(format!("p{i}"), title, 15).with_abstract(abstract_text)
        })
        .collect();
    let labeling = Labeling::from_labels(&papers, &labels);
    (papers, labeling)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clustered_fills_sessions_exactly() {
        let (inst, labels) = clustered(5, 8, 15, 60);
        assert_eq!(inst.session_count(), 10);
        assert_eq!(inst.total_duration(), inst.total_capacity());
        assert_eq!(labels.len(), 40);
    }

    #[test]
    fn random_weighted_has_slack() {
        let (inst, sim) = random_weighted(1, 30, 4);
        assert!(inst.total_capacity() >= inst.total_duration());
        assert_eq!(sim.dim(), 30);
    }

    #[test]
    fn corpus_is_seeded() {
        assert_eq!(corpus(3, 20).0, corpus(3, 20).0);
        assert_ne!(corpus(3, 20).0, corpus(4, 20).0);
    }
}
