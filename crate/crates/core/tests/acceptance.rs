//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Quantitative criteria run 20 seeded repetitions per configuration at the
//! benchmark budgets. Property criteria use proptest runners with at least
//! 1000 cases each. The process exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use hillvallea::hillvalley::EdgeLength;
use hillvallea::optimizer::RunResult;
use hillvallea::problems::Phase;
use hillvallea::{
    cluster_selection, expected_edge_length, hill_valley_clustering, hill_valley_test, make_problem,
    peak_ratio, postprocess, run_hillvallea, test_point_count, BenchmarkProblem, ElitistArchive, Evaluator,
    InjectionMode, OptimizerConfig, SearchDomain, SearcherKind, Solution,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const SEEDS: u64 = 20;
const EPSILON: f64 = 1e-5;
const CASES: u32 = 1000;

struct Sweep {
    mean_ratio: f64,
    min_ratio: f64,
    mean_hvc: f64,
    mean_lopt: f64,
}

fn sweep(id: u32, injection: InjectionMode, budget_multiplier: u64) -> Sweep {
    let problem = make_problem(id).expect("built-in problem");
    let config = OptimizerConfig {
        injection,
        budget: Some(problem.budget() * budget_multiplier),
        ..OptimizerConfig::default()
    };
    let mut ratios = Vec::new();
    let (mut hvc, mut lopt) = (0.0, 0.0);
    for seed in 1..=SEEDS {
        let run = run_hillvallea(&problem, SearcherKind::Amu, &config, seed).expect("run");
        assert!(run.evaluations_used() <= config.budget.unwrap());
        ratios.push(peak_ratio(&run.optima(), &problem, EPSILON).ratio);
        let f = run.phase_fractions();
        hvc += f.clustering + f.postprocess;
        lopt += f.local_opt;
    }
    let n = SEEDS as f64;
    Sweep {
        mean_ratio: ratios.iter().sum::<f64>() / n,
        min_ratio: ratios.iter().copied().fold(1.0, f64::min),
        mean_hvc: hvc / n,
        mean_lopt: lopt / n,
    }
}

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("[{}] {id} {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn run_properties<S: Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn sphere(d: usize, lo: f64, hi: f64, budget: u64) -> BenchmarkProblem {
    BenchmarkProblem::custom(
        "sphere",
        SearchDomain::cube(lo, hi, d).unwrap(),
        |x: &[f64]| x.iter().map(|v| v * v).sum(),
        budget,
    )
}

fn double_well(budget: u64) -> BenchmarkProblem {
    BenchmarkProblem::custom(
        "double-well",
        SearchDomain::cube(-2.0, 2.0, 1).unwrap(),
        |x: &[f64]| (x[0] * x[0] - 1.0).powi(2),
        budget,
    )
}

fn evaluated(problem: &BenchmarkProblem, points: &[Vec<f64>]) -> Vec<Solution> {
    points
        .iter()
        .map(|x| Solution::new(x.clone(), problem.value(x)))
        .collect()
}

fn point(d: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(lo..hi, d)
}

fn quantitative(report: &mut Report) {
    let mut worst = (0, 1.0f64);
    let mut ok = true;
    let mut details = Vec::new();
    for id in [1, 2, 3, 4, 5, 10] {
        let s = sweep(id, InjectionMode::OnlyGlobal, 1);
        ok &= s.mean_ratio >= 0.98;
        if s.mean_ratio < worst.1 {
            worst = (id, s.mean_ratio);
        }
        details.push(format!("p{id}={:.3}", s.mean_ratio));
    }
    report.line(
        "AC-1",
        ok,
        format!("problems 1-5,10 AMu mean peak ratio >= 0.98: {}", details.join(" ")),
    );

    let p7 = sweep(7, InjectionMode::OnlyGlobal, 1);
    report.line(
        "AC-2",
        p7.mean_ratio >= 0.97,
        format!("problem 7 AMu mean peak ratio {:.3} >= 0.97 (min {:.3})", p7.mean_ratio, p7.min_ratio),
    );

    let p6 = sweep(6, InjectionMode::OnlyGlobal, 1);
    report.line(
        "AC-3",
        p6.mean_ratio >= 0.90,
        format!("problem 6 AMu mean peak ratio {:.3} >= 0.90 (min {:.3})", p6.mean_ratio, p6.min_ratio),
    );

    let p9 = sweep(9, InjectionMode::OnlyGlobal, 1);
    report.line(
        "AC-4",
        p9.mean_ratio >= 0.75,
        format!("problem 9 AMu mean peak ratio {:.3} >= 0.75 (min {:.3})", p9.mean_ratio, p9.min_ratio),
    );

    let p9_none = sweep(9, InjectionMode::None, 1);
    let gain = p9.mean_ratio - p9_none.mean_ratio;
    report.line(
        "AC-5",
        gain >= 0.2,
        format!(
            "problem 9 only-global {:.3} minus none {:.3} = {:.3} >= 0.2",
            p9.mean_ratio, p9_none.mean_ratio, gain
        ),
    );

    let p6_long = sweep(6, InjectionMode::OnlyGlobal, 10);
    let p7_long = sweep(7, InjectionMode::OnlyGlobal, 10);
    report.line(
        "AC-6",
        p6_long.mean_ratio >= 0.99 && p7_long.mean_ratio >= 0.99,
        format!(
            "10x budget mean peak ratio problem 6 {:.3}, problem 7 {:.3} >= 0.99",
            p6_long.mean_ratio, p7_long.mean_ratio
        ),
    );

    report.line(
        "AC-7",
        p7.mean_hvc >= 0.05 && p7.mean_lopt <= 0.9,
        format!(
            "problem 7 phase fractions: clustering {:.3} >= 0.05, local optimization {:.3} <= 0.9",
            p7.mean_hvc, p7.mean_lopt
        ),
    );
}

fn convex_clustering(report: &mut Report) {
    let problem = sphere(2, -5.0, 5.0, u64::MAX);
    let selections = proptest::collection::vec(point(2, -5.0, 5.0), 1..120);
    let mut runner = TestRunner::new(Config {
        cases: 200,
        failure_persistence: None,
        ..Config::default()
    });
    let result = runner.run(&selections, |points| {
        let selection = evaluated(&problem, &points);
        let mut ev = Evaluator::new(&problem, problem.budget());
        let clusters = hill_valley_clustering(&selection, problem.domain().volume(), 2, &mut ev).unwrap();
        prop_assert_eq!(clusters.len(), 1);
        Ok(())
    });
    report.line(
        "AC-8",
        result.is_ok(),
        format!("200 random selections on the 2-D sphere form one cluster{}", err_suffix(&result)),
    );
}

fn double_well_trace(report: &mut Report) {
    let problem = double_well(u64::MAX);
    let selection = evaluated(&problem, &[vec![-1.0], vec![1.0], vec![-0.9], vec![0.9]]);
    let mut ev = Evaluator::new(&problem, problem.budget());
    let clusters = hill_valley_clustering(&selection, 4.0, 1, &mut ev).unwrap();
    let members: Vec<Vec<f64>> = clusters
        .iter()
        .map(|c| c.solutions(&selection).map(|s| s.position[0]).collect())
        .collect();
    let pass = members == vec![vec![-1.0, -0.9], vec![1.0, 0.9]];
    report.line("AC-9", pass, format!("double-well clustering gives {members:?}"));
}

fn err_suffix(result: &Result<(), impl std::fmt::Display>) -> String {
    match result {
        Ok(()) => String::new(),
        Err(e) => format!(" ({e})"),
    }
}

fn properties(report: &mut Report) {
    let mut results: Vec<(&str, Result<(), String>)> = Vec::new();

    // a rugged 2-D landscape with many niches
    let rugged = BenchmarkProblem::custom(
        "rugged",
        SearchDomain::cube(-3.0, 3.0, 2).unwrap(),
        |x: &[f64]| (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + 0.1 * (x[0] * x[0] + x[1] * x[1]),
        u64::MAX,
    );

    results.push((
        "hill-valley symmetry",
        run_properties(
            (point(2, -3.0, 3.0), point(2, -3.0, 3.0), 1usize..12),
            |(a, b, n)| {
                let s = evaluated(&rugged, &[a, b]);
                let mut ev = Evaluator::new(&rugged, u64::MAX);
                let ab = hill_valley_test(&s[0], &s[1], n, &mut ev).unwrap();
                let ba = hill_valley_test(&s[1], &s[0], n, &mut ev).unwrap();
                prop_assert_eq!(ab.same_niche, ba.same_niche);
                Ok(())
            },
        ),
    ));

    results.push((
        "hill-valley evaluation bound",
        run_properties(
            (point(2, -3.0, 3.0), point(2, -3.0, 3.0), 1usize..12, 0u64..16),
            |(a, b, n, budget)| {
                let s = evaluated(&rugged, &[a, b]);
                let mut ev = Evaluator::new(&rugged, budget);
                let out = hill_valley_test(&s[0], &s[1], n, &mut ev).unwrap();
                prop_assert_eq!(out.evaluations as u64, ev.counter().used());
                if out.exhausted {
                    prop_assert!(out.same_niche);
                    prop_assert!(out.evaluations < n);
                } else {
                    prop_assert!(out.evaluations >= 1 && out.evaluations <= n);
                    // a hill found at the last test point also costs n evaluations
                    if out.same_niche {
                        prop_assert_eq!(out.evaluations, n);
                    }
                }
                Ok(())
            },
        ),
    ));

    results.push((
        "clustering partition",
        run_properties(
            (proptest::collection::vec(point(2, -3.0, 3.0), 1..40), 0u64..400),
            |(points, budget)| {
                let selection = evaluated(&rugged, &points);
                let mut ev = Evaluator::new(&rugged, budget);
                let clusters = cluster_selection(&selection, EdgeLength::Expected { volume: 36.0 }, &mut ev).unwrap();
                let mut seen = vec![0usize; selection.len()];
                for c in clusters.iter() {
                    prop_assert!(!c.is_empty());
                    for &m in c.members() {
                        seen[m] += 1;
                        prop_assert!(selection[c.founder()].fitness <= selection[m].fitness);
                    }
                }
                prop_assert!(seen.iter().all(|&k| k == 1));
                prop_assert_eq!(clusters.evaluations as u64, ev.counter().used());
                Ok(())
            },
        ),
    ));

    let tol = 1e-5;
    results.push((
        "archive spread",
        run_properties(
            proptest::collection::vec(
                proptest::collection::vec((point(2, -3.0, 3.0), 0.0f64..3e-5), 0..6),
                1..5,
            ),
            |rounds| {
                let mut archive = ElitistArchive::new();
                let mut ev = Evaluator::new(&rugged, u64::MAX);
                for round in rounds {
                    let candidates = round
                        .into_iter()
                        .map(|(x, f)| Solution::new(x, f))
                        .collect();
                    postprocess(candidates, &mut archive, tol, 5, &mut ev).unwrap();
                    prop_assert!(archive.fitness_spread() <= tol);
                }
                Ok(())
            },
        ),
    ));

    results.push((
        "budget hard stop",
        run_properties((1u32..=10, 1u64..3000, any::<u64>(), 0usize..5), |(id, budget, seed, k)| {
            let problem = make_problem(id).unwrap();
            let kind = SearcherKind::ALL[k];
            let config = OptimizerConfig {
                budget: Some(budget),
                ..OptimizerConfig::default()
            };
            let run = run_hillvallea(&problem, kind, &config, seed).unwrap();
            prop_assert_eq!(run.evaluations_used(), budget);
            let by_phase: u64 = Phase::ALL.iter().map(|&p| run.counter.phase_used(p)).sum();
            prop_assert_eq!(by_phase, budget);
            prop_assert!((run.phase_fractions().total() - 1.0).abs() <= 1e-9);
            Ok(())
        }),
    ));

    results.push((
        "seed determinism",
        run_properties((1u32..=10, 1u64..3000, any::<u64>(), 0usize..5), |(id, budget, seed, k)| {
            let problem = make_problem(id).unwrap();
            let kind = SearcherKind::ALL[k];
            let config = OptimizerConfig {
                budget: Some(budget),
                ..OptimizerConfig::default()
            };
            let a: RunResult = run_hillvallea(&problem, kind, &config, seed).unwrap();
            let b: RunResult = run_hillvallea(&problem, kind, &config, seed).unwrap();
            prop_assert_eq!(a, b);
            Ok(())
        }),
    ));

    let failed: Vec<String> = results
        .iter()
        .filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}")))
        .collect();
    let names: Vec<&str> = results.iter().map(|(n, _)| *n).collect();
    report.line(
        "AC-10",
        failed.is_empty(),
        format!(
            "{CASES} cases each for {}{}",
            names.join(", "),
            if failed.is_empty() { String::new() } else { format!("; failures: {}", failed.join("; ")) }
        ),
    );
}

fn arithmetic(report: &mut Report) {
    let mut checks = vec![
        ("eel(4, 4, 1)", expected_edge_length(4.0, 4, 1) == 1.0),
        ("eel(100, 25, 2)", expected_edge_length(100.0, 25, 2) == 2.0),
        ("N_t(2.0, 1.0)", test_point_count(2.0, 1.0) == 3),
        ("N_t(0.5, 1.0)", test_point_count(0.5, 1.0) == 1),
        ("N_t(0.1, 0.05)", test_point_count(0.1, 0.05) == 3),
    ];
    let sizes = [
        (SearcherKind::Amu, 2, 15),
        (SearcherKind::Am, 2, 26),
        (SearcherKind::Iamu, 1, 4),
        (SearcherKind::Iam, 1, 10),
        (SearcherKind::Amu, 1, 10),
        (SearcherKind::Am, 1, 20),
        (SearcherKind::Cmsa, 1, 4),
        (SearcherKind::Cmsa, 2, 7),
        (SearcherKind::Amu, 3, 18),
        (SearcherKind::Iamu, 3, 7),
    ];
    let mut ok_sizes = true;
    for (kind, d, n) in sizes {
        ok_sizes &= kind.recommended_population_size(d) == n;
    }
    checks.push(("recommended population sizes", ok_sizes));
    checks.push(("tau", SearcherKind::Cmsa.selection_fraction() == 0.5 && SearcherKind::Amu.selection_fraction() == 0.35));
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    report.line(
        "AC-11",
        failed.is_empty(),
        if failed.is_empty() {
            "edge length, test point count and population size arithmetic".to_string()
        } else {
            format!("edge length, test point count and population size arithmetic, failed: {}", failed.join(", "))
        },
    );
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    let started = Instant::now();
    quantitative(&mut report);
    convex_clustering(&mut report);
    double_well_trace(&mut report);
    properties(&mut report);
    arithmetic(&mut report);
    println!(
        "acceptance: {} failure(s), {:.1}s",
        report.failures,
        started.elapsed().as_secs_f64()
    );
    if report.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
