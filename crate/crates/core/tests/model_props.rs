mod common;

use std::collections::HashMap;

use common::{cluster_sim, random_case, random_positions, rng};
use proptest::prelude::*;
use sessionize::{objective_value, Instance, Paper, Schedule, Session, SessionId};

fn binom2(n: usize) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

#[test]
fn cluster_objective_is_sum_of_within_session_pairs() {
    let mut r = rng(1);
    for _ in 0..300 {
        let (inst, labels) = random_case(&mut r, 8, 3);
        let sim = cluster_sim(&labels);
        let positions = random_positions(&mut r, inst.paper_count(), inst.session_count());
        let schedule = Schedule::from_positions(&inst, &positions);
        let mut counts: HashMap<(usize, u32), usize> = HashMap::new();
        for (m, l) in positions.iter().zip(&labels) {
            *counts.entry((*m, *l)).or_default() += 1;
        }
        let expected: f64 = counts.values().map(|&c| binom2(c)).sum();
        assert_eq!(objective_value(&inst, &schedule, &sim).unwrap(), expected);
    }
}

/// Ordered double sum over all (i, j) with a unit diagonal.
fn ordered_sum(positions: &[usize], labels: &[u32]) -> f64 {
    let mut total = 0.0;
    for i in 0..positions.len() {
        for j in 0..positions.len() {
            let sim = if i == j || labels[i] == labels[j] { 1.0 } else { 0.0 };
            if positions[i] == positions[j] {
                total += sim;
            }
        }
    }
    total
}

#[test]
fn ordered_sum_ranks_schedules_identically() {
    let mut r = rng(2);
    for _ in 0..50 {
        let (inst, labels) = random_case(&mut r, 6, 3);
        let sim = cluster_sim(&labels);
        let (n, m) = (inst.paper_count(), inst.session_count());
        let mut scored = Vec::new();
        for code in 0..m.pow(n as u32) {
            let positions: Vec<usize> = (0..n).map(|p| code / m.pow(p as u32) % m).collect();
            let schedule = Schedule::from_positions(&inst, &positions);
            if !sessionize::check_feasible(&inst, &schedule).unwrap().ok {
                continue;
            }
            let ours = objective_value(&inst, &schedule, &sim).unwrap();
            let theirs = ordered_sum(&positions, &labels);
            assert_eq!(theirs, 2.0 * ours + n as f64);
            scored.push((ours, theirs));
        }
        for a in &scored {
            for b in &scored {
                assert_eq!(a.0.partial_cmp(&b.0), a.1.partial_cmp(&b.1));
            }
        }
    }
}

fn renamed(inst: &Instance, prefix: &str) -> Instance {
    Instance::new(
        inst.papers().to_vec(),
        inst.sessions()
            .iter()
            .map(|s| Session::new(format!("{prefix}{}", s.id), s.title.clone(), s.length))
            .collect(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn objective_ignores_session_names(
        labels in prop::collection::vec(0u32..3, 1..9),
        seed in any::<u64>(),
        prefix in "[a-z]{1,4}",
    ) {
        let papers: Vec<Paper> = (0..labels.len()).map(|i| Paper::new(format!("p{i}"), "t", 5)).collect();
        let inst = Instance::new(papers, (0..3).map(|j| Session::new(format!("s{j}"), "S", 50)).collect()).unwrap();
        let other = renamed(&inst, &prefix);
        let mut r = rng(seed);
        let positions = random_positions(&mut r, labels.len(), 3);
        let sim = cluster_sim(&labels);
        let a = objective_value(&inst, &Schedule::from_positions(&inst, &positions), &sim).unwrap();
        // also permute which session each group lands in
        let shifted: Vec<usize> = positions.iter().map(|m| (m + 1) % 3).collect();
        let b = objective_value(&other, &Schedule::from_positions(&other, &shifted), &sim).unwrap();
        prop_assert_eq!(a, b);
        let first = SessionId(format!("{}s0", prefix));
        prop_assert!(other.session_position(&first).is_some());
    }
}
