//! Exact paper-to-session assignment.
//!
//! Maximizes the similarity of co-located paper pairs subject to every paper
//! sitting in exactly one session and no session exceeding its length. The
//! pair indicator "papers i and j share session m" is never materialized;
//! the search assigns one paper at a time and accumulates co-location gains
//! directly, which is equivalent to the linearized formulation with
//! `z >= x_i + x_j - 1, z <= x_i, z <= x_j` for any fixed assignment.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::model::{self, Instance, ModelError, PaperId, Schedule, SessionId, SimilarityMatrix};

/// Largest `sessions^papers` the brute-force enumerator accepts.
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;
const EPS: f64 = 1e-9;
const CLOCK_CHECK_INTERVAL: u64 = 256;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("brute force would enumerate {sessions}^{papers} assignments (limit {BRUTE_FORCE_LIMIT})")]
    TooLarge { papers: usize, sessions: usize },
}

#[derive(Debug, Clone)]
pub struct SolverProblem<'a> {
    pub instance: &'a Instance,
    pub sim: &'a SimilarityMatrix,
    pub time_budget: Option<Duration>,
}

impl<'a> SolverProblem<'a> {
    pub fn new(instance: &'a Instance, sim: &'a SimilarityMatrix) -> Result<Self, SolverError> {
        sim.check_dim(instance)?;
        Ok(Self {
            instance,
            sim,
            time_budget: None,
        })
    }

    pub fn with_time_budget(mut self, budget: Duration) -> Self {
        self.time_budget = Some(budget);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    FeasibleIncumbent,
    Infeasible,
    TimeoutWithIncumbent,
    TimeoutNoIncumbent,
}

impl SolverStatus {
    pub fn has_schedule(self) -> bool {
        matches!(
            self,
            SolverStatus::Optimal | SolverStatus::FeasibleIncumbent | SolverStatus::TimeoutWithIncumbent
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverResult {
    pub status: SolverStatus,
    pub objective: Option<f64>,
    /// Upper bound on the optimum. Equals the objective at optimality; 0 for
    /// infeasible instances.
    pub bound: f64,
    pub nodes_explored: u64,
    #[serde(rename = "assignment", serialize_with = "serialize_assignment")]
    pub schedule: Option<Schedule>,
}

fn serialize_assignment<S: Serializer>(schedule: &Option<Schedule>, s: S) -> Result<S::Ok, S::Error> {
    let map: Option<BTreeMap<&PaperId, &SessionId>> = schedule.as_ref().map(|sch| sch.iter().collect());
    map.serialize(s)
}

impl SolverResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

/// Papers are twins when they have the same duration and identical
/// similarity to every other paper; swapping twins never changes the
/// objective. Returns a class id per paper (the index of its first twin).
fn twin_classes(instance: &Instance, sim: &SimilarityMatrix) -> Vec<usize> {
    let n = instance.paper_count();
    let durations: Vec<u32> = instance.papers().iter().map(|p| p.duration).collect();
    let twins = |i: usize, j: usize| {
        durations[i] == durations[j] && (0..n).all(|k| k == i || k == j || sim.get(i, k) == sim.get(j, k))
    };
    let mut class: Vec<usize> = (0..n).collect();
    let mut representatives: Vec<usize> = Vec::new();
    for i in 0..n {
        match representatives.iter().find(|&&r| twins(r, i)) {
            Some(&r) => class[i] = r,
            None => representatives.push(i),
        }
    }
    class
}

/// Papers by descending duration with twins adjacent, then instance order.
fn branching_order(instance: &Instance, class: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..instance.paper_count()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(instance.papers()[i].duration), class[i], i));
    order
}

fn gain(sim: &SimilarityMatrix, paper: usize, members: &[usize]) -> f64 {
    members.iter().map(|&q| sim.get(paper, q)).sum()
}

/// First-fit-decreasing warm start. Each paper goes to the fitting session
/// with the largest similarity gain, then most remaining room, then lowest
/// index. `None` if some paper fits nowhere.
pub fn greedy_incumbent(problem: &SolverProblem<'_>) -> Option<Schedule> {
    let instance = problem.instance;
    let mut remaining: Vec<u64> = instance.sessions().iter().map(|s| u64::from(s.length)).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); instance.session_count()];
    let mut positions = vec![0usize; instance.paper_count()];
    for paper in branching_order(instance, &twin_classes(instance, problem.sim)) {
        let duration = u64::from(instance.papers()[paper].duration);
        let mut best: Option<(usize, f64)> = None;
        for m in 0..remaining.len() {
            if remaining[m] < duration {
                continue;
            }
            let g = gain(problem.sim, paper, &members[m]);
            let better = match best {
                None => true,
                Some((b, bg)) => g > bg + EPS || ((g - bg).abs() <= EPS && remaining[m] > remaining[b]),
            };
            if better {
                best = Some((m, g));
            }
        }
        let (m, _) = best?;
        remaining[m] -= duration;
        members[m].push(paper);
        positions[paper] = m;
    }
    Some(Schedule::from_positions(instance, &positions))
}

struct Search<'p, 'a, F> {
    problem: &'p SolverProblem<'a>,
    order: Vec<usize>,
    durations: Vec<u64>,
    lengths: Vec<u64>,
    remaining: Vec<u64>,
    members: Vec<Vec<usize>>,
    positions: Vec<usize>,
    placed: Vec<bool>,
    class: Vec<usize>,
    /// Per paper, the others with positive similarity by similarity per
    /// minute, best first.
    partners: Vec<Vec<usize>>,
    /// Duration of papers not yet placed, indexed by depth.
    suffix_duration: Vec<u64>,
    incumbent: Option<(f64, Vec<usize>)>,
    /// Bound of every node on the current path.
    path_bounds: Vec<f64>,
    nodes: u64,
    deadline: Option<Instant>,
    timed_out: bool,
    timeout_bound: f64,
    observer: F,
}

impl<F: FnMut(f64, Option<f64>)> Search<'_, '_, F> {
    fn incumbent_value(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|(v, _)| *v)
    }

    /// Best value any unexplored node could still reach.
    fn global_bound(&self) -> f64 {
        let open = self.path_bounds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match self.incumbent_value() {
            Some(v) => open.max(v),
            None => open.max(0.0),
        }
    }

    fn out_of_time(&mut self) -> bool {
        if let Some(deadline) = self.deadline {
            if self.nodes % CLOCK_CHECK_INTERVAL == 1 && Instant::now() >= deadline {
                self.timed_out = true;
            }
        }
        self.timed_out
    }

    /// Fractional knapsack over `paper`'s unplaced partners within `room`
    /// minutes: an upper bound on the similarity it can still gain from them.
    fn partner_bound(&self, paper: usize, mut room: u64) -> f64 {
        let mut total = 0.0;
        for &q in &self.partners[paper] {
            if room == 0 {
                break;
            }
            if self.placed[q] {
                continue;
            }
            let s = self.problem.sim.get(paper, q);
            let d = self.durations[q];
            if d <= room {
                total += s;
                room -= d;
            } else {
                total += s * room as f64 / d as f64;
                room = 0;
            }
        }
        total
    }

    /// Upper bound on the similarity still to be gained below `depth`. Each
    /// unplaced paper takes its best fitting session: the gain to papers
    /// already there plus half of what unplaced partners could add in the
    /// room left, since those pairs are counted from both ends. `None` if
    /// some paper fits nowhere.
    fn completion_bound(&self, depth: usize) -> Option<f64> {
        let mut total = 0.0;
        for &paper in &self.order[depth..] {
            let d = self.durations[paper];
            let mut best: Option<f64> = None;
            for m in 0..self.remaining.len() {
                if self.remaining[m] < d {
                    continue;
                }
                let value = gain(self.problem.sim, paper, &self.members[m])
                    + 0.5 * self.partner_bound(paper, self.remaining[m] - d);
                best = Some(best.map_or(value, |b: f64| b.max(value)));
            }
            total += best?;
        }
        Some(total)
    }

    /// `current`: realized similarity. `open`: similarity of pairs with at
    /// least one unplaced paper, all of which could still be realized.
    fn dfs(&mut self, depth: usize, current: f64, open: f64) {
        self.nodes += 1;
        let mut bound = current + open;
        if self.out_of_time() {
            // captured before the path unwinds; this node is still unexplored
            self.timeout_bound = self.global_bound().max(bound);
            return;
        }
        let best = self.incumbent_value();
        if best.is_some_and(|b| bound <= b + EPS) {
            return;
        }
        if depth < self.order.len() {
            match self.completion_bound(depth) {
                Some(rest) => bound = bound.min(current + rest),
                None => return,
            }
            if best.is_some_and(|b| bound <= b + EPS) {
                return;
            }
        }
        if depth == self.order.len() {
            self.incumbent = Some((current, self.positions.clone()));
            let global = self.global_bound();
            (self.observer)(global, Some(current));
            return;
        }
        if self.suffix_duration[depth] > self.remaining.iter().sum::<u64>() {
            return;
        }
        let paper = self.order[depth];
        let duration = self.durations[paper];
        if self.remaining.iter().all(|&r| r < duration) {
            return;
        }

        let sim = self.problem.sim;
        let mut children: Vec<(usize, f64)> = Vec::new();
        let mut seen_empty_lengths: Vec<u64> = Vec::new();
        // a twin placed just before bounds the session index from below
        let first_session = match depth.checked_sub(1).map(|d| self.order[d]) {
            Some(prev) if self.class[prev] == self.class[paper] => self.positions[prev],
            _ => 0,
        };
        for m in first_session..self.remaining.len() {
            if self.remaining[m] < duration {
                continue;
            }
            if self.members[m].is_empty() {
                if seen_empty_lengths.contains(&self.lengths[m]) {
                    continue;
                }
                seen_empty_lengths.push(self.lengths[m]);
            }
            children.push((m, gain(sim, paper, &self.members[m])));
        }
        children.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

        // pairs between this paper and already placed ones leave `open` for good
        let placed: f64 = self.order[..depth].iter().map(|&q| sim.get(paper, q)).sum();

        self.path_bounds.push(bound);
        if self.nodes % CLOCK_CHECK_INTERVAL == 0 {
            let global = self.global_bound();
            let incumbent = self.incumbent_value();
            (self.observer)(global, incumbent);
        }
        let frame = self.path_bounds.len() - 1;
        // siblings are covered both by this node's bound and their own open bound
        let child_bound = |g: f64| (current + g + open - placed).min(bound);
        for k in 0..children.len() {
            let (m, g) = children[k];
            // this frame now only stands for the siblings still to come
            self.path_bounds[frame] = children
                .get(k + 1)
                .map_or(f64::NEG_INFINITY, |&(_, next)| child_bound(next));
            self.remaining[m] -= duration;
            self.members[m].push(paper);
            self.positions[paper] = m;
            self.placed[paper] = true;
            self.dfs(depth + 1, current + g, open - placed);
            self.placed[paper] = false;
            self.members[m].pop();
            self.remaining[m] += duration;
            if self.timed_out {
                break;
            }
        }
        self.path_bounds.pop();
    }
}

/// Depth-first branch-and-bound to proven optimality (or the time budget).
pub fn solve(problem: &SolverProblem<'_>) -> Result<SolverResult, SolverError> {
    solve_observed(problem, |_, _| {})
}

/// [`solve`] with a progress callback receiving `(global bound, incumbent)`
/// whenever the incumbent improves and periodically during the search.
pub fn solve_observed(
    problem: &SolverProblem<'_>,
    observer: impl FnMut(f64, Option<f64>),
) -> Result<SolverResult, SolverError> {
    let instance = problem.instance;
    problem.sim.check_dim(instance)?;
    let started = Instant::now();
    let class = twin_classes(instance, problem.sim);
    let order = branching_order(instance, &class);
    let durations: Vec<u64> = instance.papers().iter().map(|p| u64::from(p.duration)).collect();
    let lengths: Vec<u64> = instance.sessions().iter().map(|s| u64::from(s.length)).collect();
    let mut suffix_duration = vec![0u64; order.len() + 1];
    for d in (0..order.len()).rev() {
        suffix_duration[d] = suffix_duration[d + 1] + durations[order[d]];
    }

    let incumbent = greedy_incumbent(problem).map(|s| {
        let positions = s.total_positions(instance).expect("greedy is total");
        (model::colocated_sum(&positions, problem.sim), positions)
    });
    let root_bound = problem.sim.pair_total();
    let partners: Vec<Vec<usize>> = (0..instance.paper_count())
        .map(|i| {
            let mut others: Vec<usize> = (0..instance.paper_count())
                .filter(|&j| j != i && problem.sim.get(i, j) > 0.0)
                .collect();
            let density = |j: usize| problem.sim.get(i, j) / durations[j] as f64;
            others.sort_by(|&a, &b| density(b).total_cmp(&density(a)).then(a.cmp(&b)));
            others
        })
        .collect();

    let mut search = Search {
        problem,
        order,
        durations,
        remaining: lengths.clone(),
        lengths,
        members: vec![Vec::new(); instance.session_count()],
        positions: vec![0; instance.paper_count()],
        placed: vec![false; instance.paper_count()],
        class,
        partners,
        suffix_duration,
        incumbent,
        path_bounds: Vec::new(),
        nodes: 0,
        deadline: problem.time_budget.map(|b| started + b),
        timed_out: false,
        timeout_bound: 0.0,
        observer,
    };
    let initial = search.incumbent_value();
    (search.observer)(root_bound, initial);
    search.dfs(0, 0.0, root_bound);

    let timed_out = search.timed_out;
    let bound = if timed_out { search.timeout_bound } else { 0.0 };
    let nodes_explored = search.nodes;
    let result = match (search.incumbent, timed_out) {
        (Some((value, positions)), false) => SolverResult {
            status: SolverStatus::Optimal,
            objective: Some(value),
            bound: value,
            nodes_explored,
            schedule: Some(Schedule::from_positions(instance, &positions)),
        },
        (Some((value, positions)), true) => SolverResult {
            status: SolverStatus::TimeoutWithIncumbent,
            objective: Some(value),
            bound: bound.max(value),
            nodes_explored,
            schedule: Some(Schedule::from_positions(instance, &positions)),
        },
        (None, false) => SolverResult {
            status: SolverStatus::Infeasible,
            objective: None,
            bound: 0.0,
            nodes_explored,
            schedule: None,
        },
        (None, true) => SolverResult {
            status: SolverStatus::TimeoutNoIncumbent,
            objective: None,
            bound,
            nodes_explored,
            schedule: None,
        },
    };
    Ok(result)
}

/// Enumerates all `sessions^papers` assignments. Test oracle.
pub fn brute_force(problem: &SolverProblem<'_>) -> Result<SolverResult, SolverError> {
    let instance = problem.instance;
    problem.sim.check_dim(instance)?;
    let (n, m) = (instance.paper_count(), instance.session_count());
    let total = u32::try_from(n)
        .ok()
        .and_then(|n| (m as u64).checked_pow(n))
        .filter(|&t| t <= BRUTE_FORCE_LIMIT)
        .ok_or(SolverError::TooLarge { papers: n, sessions: m })?;

    let durations: Vec<u64> = instance.papers().iter().map(|p| u64::from(p.duration)).collect();
    let lengths: Vec<u64> = instance.sessions().iter().map(|s| u64::from(s.length)).collect();
    let mut positions = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut load = vec![0u64; m];
    for code in 0..total {
        let mut c = code;
        for p in positions.iter_mut() {
            *p = (c % m as u64) as usize;
            c /= m as u64;
        }
        load.iter_mut().for_each(|l| *l = 0);
        for (p, &s) in positions.iter().enumerate() {
            load[s] += durations[p];
        }
        if load.iter().zip(&lengths).any(|(l, cap)| l > cap) {
            continue;
        }
        let value = model::colocated_sum(&positions, problem.sim);
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, positions.clone()));
        }
    }
    Ok(match best {
        Some((value, positions)) => SolverResult {
            status: SolverStatus::Optimal,
            objective: Some(value),
            bound: value,
            nodes_explored: total,
            schedule: Some(Schedule::from_positions(instance, &positions)),
        },
        None => SolverResult {
            status: SolverStatus::Infeasible,
            objective: None,
            bound: 0.0,
            nodes_explored: total,
            schedule: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_feasible, objective_value, Paper, Session};

    fn inst(durations: &[u32], lengths: &[u32]) -> Instance {
        Instance::new(
            durations
                .iter()
                .enumerate()
                .map(|(i, &d)| Paper::new(format!("p{i}"), format!("Paper {i}"), d))
                .collect(),
            lengths
                .iter()
                .enumerate()
                .map(|(j, &l)| Session::new(format!("s{j}"), "S", l))
                .collect(),
        )
        .unwrap()
    }

    fn clusters(labels: &[u32]) -> SimilarityMatrix {
        let mut sim = SimilarityMatrix::zeros(labels.len());
        for i in 0..labels.len() {
            for j in i + 1..labels.len() {
                if labels[i] == labels[j] {
                    sim.set(i, j, 1.0).unwrap();
                }
            }
        }
        sim
    }

    #[test]
    fn greedy_examples() {
        let i = inst(&[7, 7], &[14]);
        let sim = SimilarityMatrix::zeros(2);
        let s = greedy_incumbent(&SolverProblem::new(&i, &sim).unwrap()).unwrap();
        assert_eq!(s.total_positions(&i).unwrap(), vec![0, 0]);

        let i = inst(&[7, 7, 7], &[7, 7, 7]);
        let sim = SimilarityMatrix::zeros(3);
        let s = greedy_incumbent(&SolverProblem::new(&i, &sim).unwrap()).unwrap();
        let mut pos = s.total_positions(&i).unwrap();
        pos.sort_unstable();
        assert_eq!(pos, vec![0, 1, 2]);

        let i = inst(&[7, 7, 7, 7], &[14, 14]);
        let sim = clusters(&[0, 0, 1, 1]);
        let s = greedy_incumbent(&SolverProblem::new(&i, &sim).unwrap()).unwrap();
        assert_eq!(objective_value(&i, &s, &sim).unwrap(), 2.0);
    }

    #[test]
    fn greedy_may_strand() {
        // 4 takes the roomier session, stranding the second 3
        let i = inst(&[4, 3, 3], &[6, 4]);
        let sim = SimilarityMatrix::zeros(3);
        let problem = SolverProblem::new(&i, &sim).unwrap();
        assert!(greedy_incumbent(&problem).is_none());
        let result = solve(&problem).unwrap();
        assert_eq!(result.status, SolverStatus::Optimal);
        assert!(check_feasible(&i, result.schedule.as_ref().unwrap()).unwrap().ok);
    }

    #[test]
    fn two_clusters_two_sessions() {
        let i = inst(&[7, 7, 7, 7], &[14, 14]);
        let sim = clusters(&[0, 0, 1, 1]);
        let problem = SolverProblem::new(&i, &sim).unwrap();
        let result = solve(&problem).unwrap();
        assert_eq!(result.status, SolverStatus::Optimal);
        assert_eq!(result.objective, Some(2.0));
        assert_eq!(result.bound, 2.0);
        assert_eq!(brute_force(&problem).unwrap().objective, Some(2.0));
    }

    #[test]
    fn too_small_sessions_are_infeasible() {
        let i = inst(&[10], &[5]);
        let sim = SimilarityMatrix::zeros(1);
        let problem = SolverProblem::new(&i, &sim).unwrap();
        let result = solve(&problem).unwrap();
        assert_eq!(result.status, SolverStatus::Infeasible);
        assert!(result.schedule.is_none());
        assert_eq!(brute_force(&problem).unwrap().status, SolverStatus::Infeasible);
    }

    #[test]
    fn zero_similarity_is_optimal_at_zero() {
        let i = inst(&[3, 4, 5, 6], &[10, 10]);
        let sim = SimilarityMatrix::zeros(4);
        let result = solve(&SolverProblem::new(&i, &sim).unwrap()).unwrap();
        assert_eq!(result.status, SolverStatus::Optimal);
        assert_eq!(result.objective, Some(0.0));
        assert!(check_feasible(&i, result.schedule.as_ref().unwrap()).unwrap().ok);
    }

    #[test]
    fn single_paper_brute_force() {
        let i = inst(&[5], &[3, 8]);
        let sim = SimilarityMatrix::zeros(1);
        let result = brute_force(&SolverProblem::new(&i, &sim).unwrap()).unwrap();
        assert_eq!(result.objective, Some(0.0));
        assert_eq!(
            result.schedule.unwrap().session_of(&"p0".into()),
            Some(&SessionId::from("s1"))
        );
    }

    #[test]
    fn brute_force_guard() {
        let i = inst(&[1; 16], &[100; 4]);
        let sim = SimilarityMatrix::zeros(16);
        assert_eq!(
            brute_force(&SolverProblem::new(&i, &sim).unwrap()),
            Err(SolverError::TooLarge { papers: 16, sessions: 4 })
        );
    }

    #[test]
    fn dimension_mismatch() {
        let i = inst(&[1, 2], &[3]);
        let sim = SimilarityMatrix::zeros(3);
        assert!(matches!(SolverProblem::new(&i, &sim), Err(SolverError::Model(_))));
        let problem = SolverProblem { instance: &i, sim: &sim, time_budget: None };
        assert!(solve(&problem).is_err());
    }

    #[test]
    fn json_shape() {
        let i = inst(&[7, 7], &[14]);
        let sim = clusters(&[0, 0]);
        let result = solve(&SolverProblem::new(&i, &sim).unwrap()).unwrap();
        let json: serde_json::Value = serde_json::from_str(&result.to_json()).unwrap();
        assert_eq!(json["status"], "optimal");
        assert_eq!(json["objective"], 1.0);
        assert_eq!(json["assignment"]["p1"], "s0");
        assert!(json["nodes_explored"].as_u64().is_some());
    }
}
