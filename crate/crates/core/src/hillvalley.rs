//! Hill-Valley test and Hill-Valley clustering.
//!
//! Two solutions belong to the same niche when no equidistant interior test
//! point on the segment between them is worse than both endpoints. The
//! clustering visits a selection best-first and attaches every solution to
//! the cluster of one of its `d + 1` nearest better neighbours, running one
//! Hill-Valley test per distinct neighbouring cluster. The number of test
//! points grows with the edge length relative to the expected edge length
//! `(V / n)^(1/d)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, EvalError, Result};
use crate::neighbours::NearestBetter;
use crate::problems::BudgetedObjective;

/// Relative fitness difference below which a test point is not a hill.
/// Objectives summing many large terms (Shubert reaches about 186) differ by
/// round-off of order 1e-13 along a segment inside one basin.
pub const HILL_RELATIVE_TOLERANCE: f64 = 1e-12;

/// A point of the search space with its (minimized) fitness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub position: Vec<f64>,
    pub fitness: f64,
}

impl Solution {
    pub fn new(position: Vec<f64>, fitness: f64) -> Self {
        Self { position, fitness }
    }

    pub fn dimension(&self) -> usize {
        self.position.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HillValleyOutcome {
    /// Whether the two solutions were judged to share a niche.
    pub same_niche: bool,
    /// Objective evaluations spent by this test.
    pub evaluations: usize,
    /// The budget ran out before all required points were evaluated.
    pub exhausted: bool,
}

/// Runs the Hill-Valley test with `n_test` equidistant interior points.
///
/// Test point `k` is `right + k / (n_test + 1) * (left - right)`. The test
/// stops at the first point whose fitness is strictly worse than both
/// endpoints, beyond a relative [`HILL_RELATIVE_TOLERANCE`]. When the budget runs out mid-test the solutions are treated as
/// sharing a niche.
pub fn hill_valley_test<O>(
    left: &Solution,
    right: &Solution,
    n_test: usize,
    objective: &mut O,
) -> Result<HillValleyOutcome>
where
    O: BudgetedObjective + ?Sized,
{
    let d = objective.dimension();
    for s in [left, right] {
        if s.dimension() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: s.dimension(),
            });
        }
    }

    let worst = left.fitness.max(right.fitness);
    let threshold = worst + HILL_RELATIVE_TOLERANCE * worst.abs();
    let denom = (n_test + 1) as f64;
    let mut point = vec![0.0; d];
    let mut evaluations = 0;
    for k in 1..=n_test {
        // Both weights are exact integer ratios, so swapping the endpoints
        // (k -> n_test + 1 - k) reproduces the same point bit for bit.
        let w_left = k as f64 / denom;
        let w_right = (n_test + 1 - k) as f64 / denom;
        for ((p, l), r) in point.iter_mut().zip(&left.position).zip(&right.position) {
            *p = w_right * r + w_left * l;
        }
        match objective.evaluate(&point) {
            Ok(f) => {
                evaluations += 1;
                if threshold < f {
                    return Ok(HillValleyOutcome {
                        same_niche: false,
                        evaluations,
                        exhausted: false,
                    });
                }
            }
            Err(EvalError::BudgetExhausted) => {
                return Ok(HillValleyOutcome {
                    same_niche: true,
                    evaluations,
                    exhausted: true,
                });
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(HillValleyOutcome {
        same_niche: true,
        evaluations,
        exhausted: false,
    })
}

/// Spacing of `n` points spread evenly over a space of the given volume.
pub fn expected_edge_length(volume: f64, n: usize, d: usize) -> f64 {
    (volume / n as f64).powf(1.0 / d as f64)
}

/// Maximum number of Hill-Valley test points for an edge: `1 + floor(edge / eel)`.
pub fn test_point_count(edge_length: f64, eel: f64) -> usize {
    let ratio = edge_length / eel;
    if ratio.is_finite() && ratio > 0.0 {
        1 + ratio.floor() as usize
    } else {
        1
    }
}

/// How the reference edge length for [`test_point_count`] is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EdgeLength {
    /// Expected edge length from the search-space volume.
    Expected { volume: f64 },
    /// Mean distance of every solution to its nearest better solution, for
    /// spaces whose volume is unknown.
    AverageNearestBetter,
}

/// Members of one presumed niche, as indices into the clustered selection.
/// The founder (first member) is the fittest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    members: Vec<usize>,
}

impl Cluster {
    fn founded_by(index: usize) -> Self {
        Self {
            members: vec![index],
        }
    }

    pub fn founder(&self) -> usize {
        self.members[0]
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn solutions<'a>(&'a self, selection: &'a [Solution]) -> impl Iterator<Item = &'a Solution> + 'a {
        self.members.iter().map(move |&i| &selection[i])
    }
}

/// Partition of a selection into clusters, ordered by founder fitness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    /// The budget ran out; solutions after that point became singletons.
    pub incomplete: bool,
    /// Objective evaluations spent on Hill-Valley tests.
    pub evaluations: usize,
    pub hill_valley_tests: usize,
    /// Reference edge length used to size the tests.
    pub edge_length: f64,
}

impl ClusterSet {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Cluster> {
        self.clusters.iter()
    }
}

/// Hill-Valley clustering with the expected edge length of `selection.len()`
/// points in a domain of `volume`.
pub fn hill_valley_clustering<O>(
    selection: &[Solution],
    volume: f64,
    d: usize,
    objective: &mut O,
) -> Result<ClusterSet>
where
    O: BudgetedObjective + ?Sized,
{
    if d != objective.dimension() {
        return Err(Error::DimensionMismatch {
            expected: objective.dimension(),
            found: d,
        });
    }
    cluster_selection(selection, EdgeLength::Expected { volume }, objective)
}

/// Hill-Valley clustering with an explicit edge-length provider.
pub fn cluster_selection<O>(
    selection: &[Solution],
    edge: EdgeLength,
    objective: &mut O,
) -> Result<ClusterSet>
where
    O: BudgetedObjective + ?Sized,
{
    let d = objective.dimension();
    if let Some(s) = selection.iter().find(|s| s.dimension() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: s.dimension(),
        });
    }

    let n = selection.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| selection[a].fitness.total_cmp(&selection[b].fitness));

    let edge_length = match edge {
        EdgeLength::Expected { volume } => expected_edge_length(volume, n.max(1), d),
        EdgeLength::AverageNearestBetter => average_nearest_better(selection, &order),
    };

    let mut set = ClusterSet {
        clusters: Vec::new(),
        incomplete: false,
        evaluations: 0,
        hill_valley_tests: 0,
        edge_length,
    };
    if n == 0 {
        return Ok(set);
    }

    // cluster id of each solution, indexed by rank
    let mut cluster_of = vec![0usize; n];
    set.clusters.push(Cluster::founded_by(order[0]));
    let mut checked: Vec<usize> = Vec::with_capacity(d + 1);
    let mut neighbours = NearestBetter::new(selection, &order, d + 1);

    for rank in 1..n {
        let current = &selection[order[rank]];
        if set.incomplete {
            cluster_of[rank] = set.clusters.len();
            set.clusters.push(Cluster::founded_by(order[rank]));
            continue;
        }

        checked.clear();
        let mut joined = None;
        for &(dist, better_rank) in neighbours.collect(rank) {
            let cluster = cluster_of[better_rank];
            if checked.contains(&cluster) {
                continue;
            }
            checked.push(cluster);

            let n_test = test_point_count(dist, edge_length);
            let outcome =
                hill_valley_test(&selection[order[better_rank]], current, n_test, objective)?;
            set.evaluations += outcome.evaluations;
            set.hill_valley_tests += 1;
            if outcome.exhausted {
                set.incomplete = true;
            }
            if outcome.same_niche {
                joined = Some(cluster);
                break;
            }
        }

        match joined {
            Some(c) => {
                cluster_of[rank] = c;
                set.clusters[c].members.push(order[rank]);
            }
            None => {
                cluster_of[rank] = set.clusters.len();
                set.clusters.push(Cluster::founded_by(order[rank]));
            }
        }
    }
    Ok(set)
}

fn average_nearest_better(selection: &[Solution], order: &[usize]) -> f64 {
    if order.len() < 2 {
        return 0.0;
    }
    let mut nb = NearestBetter::new(selection, order, 1);
    let total: f64 = (1..order.len()).map(|rank| nb.collect(rank)[0].0).sum();
    total / (order.len() - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{BenchmarkProblem, Evaluator, SearchDomain};

    fn problem_1d(f: fn(f64) -> f64) -> BenchmarkProblem {
        BenchmarkProblem::custom(
            "test",
            SearchDomain::cube(-2.0, 2.0, 1).unwrap(),
            move |x: &[f64]| f(x[0]),
            1_000_000,
        )
    }

    fn sol(p: &BenchmarkProblem, x: &[f64]) -> Solution {
        Solution::new(x.to_vec(), p.value(x))
    }

    fn double_well(x: f64) -> f64 {
        (x * x - 1.0).powi(2)
    }

    #[test]
    fn convex_segment_passes() {
        let p = problem_1d(|x| x * x);
        let mut ev = Evaluator::new(&p, 100);
        let out = hill_valley_test(&sol(&p, &[-1.0]), &sol(&p, &[1.0]), 1, &mut ev).unwrap();
        assert!(out.same_niche);
        assert_eq!(out.evaluations, 1);
        assert_eq!(ev.counter().used(), 1);
    }

    #[test]
    fn double_well_midpoint_rejects() {
        let p = problem_1d(double_well);
        let mut ev = Evaluator::new(&p, 100);
        let out = hill_valley_test(&sol(&p, &[-1.0]), &sol(&p, &[1.0]), 1, &mut ev).unwrap();
        assert!(!out.same_niche);
        assert_eq!(out.evaluations, 1);
    }

    #[test]
    fn double_well_early_exit_at_first_third() {
        // first test point is x = 1 + (1/3)(-1 - 1) = 1/3, f = (1/9 - 1)^2
        let p = problem_1d(double_well);
        let expected = (1.0f64 / 9.0 - 1.0).powi(2);
        assert!((expected - 0.790_123_456_790_123_4).abs() < 1e-15);
        let mut ev = Evaluator::new(&p, 100);
        let out = hill_valley_test(&sol(&p, &[-1.0]), &sol(&p, &[1.0]), 2, &mut ev).unwrap();
        assert!(!out.same_niche);
        assert_eq!(out.evaluations, 1);
    }

    #[test]
    fn exhaustion_mid_test_merges() {
        let p = problem_1d(|x| x * x);
        let mut ev = Evaluator::new(&p, 2);
        let out = hill_valley_test(&sol(&p, &[-1.0]), &sol(&p, &[1.0]), 5, &mut ev).unwrap();
        assert!(out.same_niche);
        assert!(out.exhausted);
        assert_eq!(out.evaluations, 2);
    }

    #[test]
    fn dimension_mismatch() {
        let p = problem_1d(|x| x);
        let mut ev = Evaluator::new(&p, 10);
        let bad = Solution::new(vec![0.0, 1.0], 0.0);
        let err = hill_valley_test(&bad, &sol(&p, &[1.0]), 1, &mut ev).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 1, found: 2 });
    }

    #[test]
    fn edge_length_examples() {
        assert_eq!(expected_edge_length(16.0, 4, 2), 2.0);
        assert_eq!(expected_edge_length(10.0, 20, 1), 0.5);
        assert!((expected_edge_length(8.0, 1, 3) - 2.0).abs() < 1e-15);
        assert_eq!(test_point_count(1.2, 0.5), 3);
        assert_eq!(test_point_count(0.4, 0.5), 1);
        assert_eq!(test_point_count(2.0, 2.0), 2);
        assert_eq!(test_point_count(0.0, 1.0), 1);
    }

    #[test]
    fn double_well_clustering_trace() {
        let p = problem_1d(double_well);
        let selection: Vec<Solution> = [-1.0, 1.0, -0.9, 0.9].iter().map(|&x| sol(&p, &[x])).collect();
        let mut ev = Evaluator::new(&p, 1000);
        let set = hill_valley_clustering(&selection, 4.0, 1, &mut ev).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.clusters[0].members(), &[0, 2]);
        assert_eq!(set.clusters[1].members(), &[1, 3]);
        assert!(!set.incomplete);
    }

    #[test]
    fn singleton_selection_costs_nothing() {
        let p = problem_1d(double_well);
        let mut ev = Evaluator::new(&p, 1000);
        let set = hill_valley_clustering(&[sol(&p, &[0.3])], 4.0, 1, &mut ev).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(ev.counter().used(), 0);
    }

    #[test]
    fn convex_objective_single_cluster() {
        let p = problem_1d(|x| x * x);
        let selection: Vec<Solution> = [-1.5, 0.2, 1.9, -0.7, 0.05, 1.1]
            .iter()
            .map(|&x| sol(&p, &[x]))
            .collect();
        let mut ev = Evaluator::new(&p, 1000);
        let set = hill_valley_clustering(&selection, 4.0, 1, &mut ev).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.clusters[0].founder(), 4);
    }

    #[test]
    fn exhaustion_leaves_singletons() {
        let p = problem_1d(double_well);
        let selection: Vec<Solution> = [-1.0, 1.0, -0.9, 0.9, 0.95]
            .iter()
            .map(|&x| sol(&p, &[x]))
            .collect();
        // One evaluation: solution 1.0 is rejected against -1.0 at the
        // midpoint, then nothing is left for the rest.
        let mut ev = Evaluator::new(&p, 1);
        let set = hill_valley_clustering(&selection, 4.0, 1, &mut ev).unwrap();
        assert!(set.incomplete);
        let total: usize = set.iter().map(Cluster::len).sum();
        assert_eq!(total, selection.len());
        assert_eq!(ev.counter().used(), 1);
    }

    #[test]
    fn average_edge_length_provider() {
        let p = problem_1d(double_well);
        let selection: Vec<Solution> = [-1.0, 1.0, -0.9, 0.9].iter().map(|&x| sol(&p, &[x])).collect();
        let mut ev = Evaluator::new(&p, 1000);
        let set = cluster_selection(&selection, EdgeLength::AverageNearestBetter, &mut ev).unwrap();
        // nearest better edges: 2.0, 0.1, 0.1
        assert!((set.edge_length - 2.2 / 3.0).abs() < 1e-12);
        assert_eq!(set.len(), 2);
    }
}
