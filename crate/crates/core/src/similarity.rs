//! Text similarity: bag-of-words TFIDF vectors, seeded k-means over them,
//! and the binary same-cluster similarity fed to the solver.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{self, MetricsError, ScorePair};
use crate::model::{Instance, Labeling, ModelError, Paper, PaperId, SimilarityMatrix};

pub const DEFAULT_CLUSTERS: usize = 5;
pub const DEFAULT_TRIALS: usize = 5;
pub const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("no papers to vectorize")]
    Empty,
    #[error("paper index {index} out of range for {len} documents")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("cluster count {k} must be between 1 and {max} (documents with non-empty text)")]
    ClusterCount { k: usize, max: usize },
    #[error("{trials} trials requested but {seeds} seeds supplied")]
    SeedCount { trials: usize, seeds: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TextFields {
    Title,
    TitleAbstract,
}

impl TextFields {
    fn text(self, paper: &Paper) -> String {
        match (self, &paper.abstract_text) {
            (TextFields::TitleAbstract, Some(a)) => format!("{} {}", paper.title, a),
            _ => paper.title.clone(),
        }
    }
}

/// Lowercased maximal alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Sparse vector as (column, weight) pairs sorted by column.
pub type SparseVector = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    pub paper_ids: Vec<PaperId>,
    /// Token to column; columns follow lexicographic token order.
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    /// L2-normalized document vectors (zero vector for empty text).
    pub documents: Vec<SparseVector>,
}

/// Raw counts times smoothed idf `ln((1+N)/(1+df)) + 1`, then L2-normalized.
pub fn build_tfidf(papers: &[Paper], fields: TextFields) -> Result<TfidfModel, SimilarityError> {
    if papers.is_empty() {
        return Err(SimilarityError::Empty);
    }
    let counts: Vec<BTreeMap<String, usize>> = papers
        .iter()
        .map(|p| {
            let mut tf = BTreeMap::new();
            for token in tokenize(&fields.text(p)) {
                *tf.entry(token).or_insert(0) += 1;
            }
            tf
        })
        .collect();

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &counts {
        for token in doc.keys() {
            *df.entry(token.as_str()).or_insert(0) += 1;
        }
    }
    let n = papers.len() as f64;
    let vocabulary: BTreeMap<String, usize> = df
        .keys()
        .enumerate()
        .map(|(i, t)| ((*t).to_owned(), i))
        .collect();
    let idf: Vec<f64> = df
        .values()
        .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
        .collect();

    let documents = counts
        .iter()
        .map(|doc| {
            let mut v: SparseVector = doc
                .iter()
                .map(|(t, &c)| {
                    let col = vocabulary[t];
                    (col, c as f64 * idf[col])
                })
                .collect();
            let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|(_, w)| *w /= norm);
            }
            v
        })
        .collect();

    Ok(TfidfModel {
        paper_ids: papers.iter().map(|p| p.id.clone()).collect(),
        vocabulary,
        idf,
        documents,
    })
}

impl TfidfModel {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn idf_of(&self, token: &str) -> Option<f64> {
        self.vocabulary.get(token).map(|&c| self.idf[c])
    }

    pub fn nonzero_documents(&self) -> usize {
        self.documents.iter().filter(|d| !d.is_empty()).count()
    }

    fn dense(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.vocabulary.len()];
        for &(c, w) in &self.documents[i] {
            v[c] = w;
        }
        v
    }
}

/// Cosine of two documents, clamped to [0, 1]; 0 when either is empty.
pub fn cosine(model: &TfidfModel, i: usize, j: usize) -> Result<f64, SimilarityError> {
    let len = model.len();
    for index in [i, j] {
        if index >= len {
            return Err(SimilarityError::IndexOutOfRange { index, len });
        }
    }
    let (a, b) = (&model.documents[i], &model.documents[j]);
    let (mut x, mut y, mut dot) = (0, 0, 0.0);
    while x < a.len() && y < b.len() {
        match a[x].0.cmp(&b[y].0) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                dot += a[x].1 * b[y].1;
                x += 1;
                y += 1;
            }
        }
    }
    Ok(dot.clamp(0.0, 1.0))
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding: first centre uniform, then D²-weighted draws.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in dist.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave target at the very top of the range
            pick.unwrap_or_else(|| dist.iter().rposition(|&d| d > 0.0).expect("positive total"))
        } else {
            // every point coincides with a centre; fall back to unchosen points
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centroids.push(points[pick].clone());
        let newest = centroids.last().expect("just pushed");
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, newest));
        }
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> Vec<u32> {
    let k = centroids.len();
    let dim = points.first().map_or(0, Vec::len);
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sizes[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            if sizes[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
            }
        }
        // refill empty clusters with the point farthest from its centroid
        for c in 0..k {
            if sizes[c] > 0 {
                continue;
            }
            let donor = (0..points.len())
                .filter(|&i| sizes[labels[i]] > 1)
                .map(|i| (i, squared_distance(&points[i], &centroids[labels[i]])))
                .fold(None::<(usize, f64)>, |best, (i, d)| match best {
                    Some((_, bd)) if bd >= d => best,
                    _ => Some((i, d)),
                });
            if let Some((i, _)) = donor {
                sizes[labels[i]] -= 1;
                labels[i] = c;
                sizes[c] = 1;
                centroids[c] = points[i].clone();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    labels.into_iter().map(|l| l as u32).collect()
}

/// Seeded k-means over the normalized document vectors (squared Euclidean).
pub fn kmeans(model: &TfidfModel, k: usize, seed: u64) -> Result<Labeling, SimilarityError> {
    let max = model.nonzero_documents();
    if k == 0 || k > max {
        return Err(SimilarityError::ClusterCount { k, max });
    }
    let points: Vec<Vec<f64>> = (0..model.len()).map(|i| model.dense(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centroids = seed_centroids(&points, k, &mut rng);
    let labels = lloyd(&points, centroids);
    Ok(model.paper_ids.iter().cloned().zip(labels).collect())
}

/// 1 for distinct papers sharing a label, 0 otherwise.
pub fn labeling_to_similarity(
    labeling: &Labeling,
    instance: &Instance,
) -> Result<SimilarityMatrix, SimilarityError> {
    let labels = labeling.aligned(instance.papers())?;
    let n = labels.len();
    let mut sim = SimilarityMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            if labels[i] == labels[j] {
                sim.set(i, j, 1.0)?;
            }
        }
    }
    Ok(sim)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trial {
    pub seed: u64,
    #[serde(skip)]
    pub labeling: Labeling,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub scores: Option<ScorePair>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trials: Vec<Trial>,
    pub mean: Option<ScorePair>,
}

/// Seeds `base, base+1, ...` for `trials` runs.
pub fn trial_seeds(base: u64, trials: usize) -> Vec<u64> {
    (0..trials as u64).map(|t| base.wrapping_add(t)).collect()
}

/// Mean of score pairs; `None` for an empty slice.
pub fn mean_scores(scores: &[ScorePair]) -> Option<ScorePair> {
    if scores.is_empty() {
        return None;
    }
    let n = scores.len() as f64;
    Some(ScorePair {
        homogeneity: scores.iter().map(|s| s.homogeneity).sum::<f64>() / n,
        completeness: scores.iter().map(|s| s.completeness).sum::<f64>() / n,
    })
}

/// Scores each labeling against `reference` and averages.
pub fn summarize_trials(
    trials: Vec<(u64, Labeling)>,
    reference: Option<&Labeling>,
) -> Result<TrialSummary, SimilarityError> {
    let mut out = Vec::with_capacity(trials.len());
    for (seed, labeling) in trials {
        let scores = reference
            .map(|r| metrics::homogeneity_completeness(r, &labeling))
            .transpose()?;
        out.push(Trial {
            seed,
            labeling,
            scores,
        });
    }
    let scored: Vec<ScorePair> = out.iter().filter_map(|t| t.scores).collect();
    Ok(TrialSummary {
        mean: mean_scores(&scored),
        trials: out,
    })
}

/// One TFIDF k-means run per seed, scored against `reference` when given.
pub fn run_trials(
    papers: &[Paper],
    fields: TextFields,
    k: usize,
    trials: usize,
    seeds: &[u64],
    reference: Option<&Labeling>,
) -> Result<TrialSummary, SimilarityError> {
    if trials != seeds.len() {
        return Err(SimilarityError::SeedCount {
            trials,
            seeds: seeds.len(),
        });
    }
    let model = build_tfidf(papers, fields)?;
    let labelings = seeds
        .iter()
        .map(|&seed| kmeans(&model, k, seed).map(|l| (seed, l)))
        .collect::<Result<Vec<_>, _>>()?;
    summarize_trials(labelings, reference)
}
