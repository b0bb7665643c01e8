//! Peak ratio against ground-truth optima and aggregation over repetitions.

use serde::{Deserialize, Serialize};

use crate::hillvalley::Solution;
use crate::optimizer::RunResult;
use crate::problems::{distance, BenchmarkProblem, KnownOptimum, PhaseFractions};

/// A reported solution credited with a known optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub reported: Solution,
    pub optimum: KnownOptimum,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakRatioReport {
    pub found: usize,
    pub total: usize,
    /// `found / total`; zero for problems without known optima.
    pub ratio: f64,
    pub matched_pairs: Vec<MatchedPair>,
}

/// Fraction of known global optima matched by `reported`.
///
/// A reported solution qualifies for an optimum when its (internal) fitness is
/// at most `epsilon` worse than the optimum's and it lies strictly within the
/// problem's niche radius. Reported solutions are visited best first (ties by
/// position, so the result does not depend on input order) and each takes the
/// nearest optimum that is still unmatched.
pub fn peak_ratio(reported: &[Solution], problem: &BenchmarkProblem, epsilon: f64) -> PeakRatioReport {
    let optima = problem.known_optima();
    let radius = problem.niche_radius();

    let mut order: Vec<&Solution> = reported.iter().collect();
    order.sort_by(|a, b| {
        a.fitness.total_cmp(&b.fitness).then_with(|| {
            a.position
                .iter()
                .zip(&b.position)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });

    let mut taken = vec![false; optima.len()];
    let mut matched_pairs = Vec::new();
    for s in order {
        if s.dimension() != problem.dimension() {
            continue;
        }
        let nearest = optima
            .iter()
            .enumerate()
            .filter(|(j, o)| !taken[*j] && s.fitness - o.fitness <= epsilon)
            .map(|(j, o)| (j, distance(&s.position, &o.position)))
            .filter(|&(_, dist)| dist < radius)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((j, dist)) = nearest {
            taken[j] = true;
            matched_pairs.push(MatchedPair {
                reported: s.clone(),
                optimum: optima[j].clone(),
                distance: dist,
            });
        }
    }

    let found = matched_pairs.len();
    let total = optima.len();
    PeakRatioReport {
        found,
        total,
        ratio: if total == 0 { 0.0 } else { found as f64 / total as f64 },
        matched_pairs,
    }
}

/// Summary of repeated runs on one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub mean_ratio: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub mean_evaluations: f64,
    pub mean_phase_fractions: PhaseFractions,
}

/// Arithmetic means and extremes over `(run, report)` pairs. Returns `None`
/// for an empty slice.
pub fn aggregate(results: &[(RunResult, PeakRatioReport)]) -> Option<Aggregate> {
    if results.is_empty() {
        return None;
    }
    let n = results.len() as f64;
    let ratios = results.iter().map(|(_, r)| r.ratio);
    let mut phases = PhaseFractions::default();
    for (run, _) in results {
        let f = run.phase_fractions();
        phases.init += f.init / n;
        phases.clustering += f.clustering / n;
        phases.local_opt += f.local_opt / n;
        phases.postprocess += f.postprocess / n;
    }
    Some(Aggregate {
        runs: results.len(),
        mean_ratio: ratios.clone().sum::<f64>() / n,
        min_ratio: ratios.clone().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.fold(f64::NEG_INFINITY, f64::max),
        mean_evaluations: results.iter().map(|(run, _)| run.evaluations_used() as f64).sum::<f64>() / n,
        mean_phase_fractions: phases,
    })
}
