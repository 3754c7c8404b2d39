#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sessionize::{Instance, Labeling, Paper, Session, SimilarityMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn instance(durations: &[u32], lengths: &[u32]) -> Instance {
    Instance::new(
        durations
            .iter()
            .enumerate()
            .map(|(i, &d)| Paper::new(format!("p{i}"), format!("Paper {i}"), d))
            .collect(),
        lengths
            .iter()
            .enumerate()
            .map(|(j, &l)| Session::new(format!("s{j}"), format!("Session {j}"), l))
            .collect(),
    )
    .unwrap()
}

/// Random instance with N <= max_n papers (durations 1..=10) and
/// M <= max_m sessions (lengths 5..=30), plus cluster labels in 0..3.
pub fn random_case(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> (Instance, Vec<u32>) {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=max_m);
    let durations: Vec<u32> = (0..n).map(|_| rng.random_range(1..=10)).collect();
    let lengths: Vec<u32> = (0..m).map(|_| rng.random_range(5..=30)).collect();
    let labels: Vec<u32> = (0..n).map(|_| rng.random_range(0..3)).collect();
    (instance(&durations, &lengths), labels)
}

pub fn cluster_sim(labels: &[u32]) -> SimilarityMatrix {
    let n = labels.len();
    let mut sim = SimilarityMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            if labels[i] == labels[j] {
                sim.set(i, j, 1.0).unwrap();
            }
        }
    }
    sim
}

pub fn random_sim(rng: &mut ChaCha8Rng, n: usize) -> SimilarityMatrix {
    let mut sim = SimilarityMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            sim.set(i, j, rng.random_range(0.0..1.0)).unwrap();
        }
    }
    sim
}

pub fn labeling(instance: &Instance, labels: &[u32]) -> Labeling {
    Labeling::from_labels(instance.papers(), labels)
}

pub fn random_positions(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..m)).collect()
}
