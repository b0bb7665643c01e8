//! The Hill-Valley evolutionary algorithm: a restart scheme around
//! Hill-Valley clustering and per-niche core search.
//!
//! Each restart samples `N` points uniformly, adds the archived elites,
//! selects the best fraction, clusters the selection and runs one core search
//! per cluster that is not already represented by an elite. The searchers'
//! results are merged into an elitist archive. Restarts that find no new
//! optimum double `N` and grow the searcher population by 20%.

mod archive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, EvalError, Result};
use crate::evaluation::peak_ratio;
use crate::hillvalley::{cluster_selection, EdgeLength, Solution};
use crate::problems::{BenchmarkProblem, BudgetedObjective, EvaluationCounter, Evaluator, Phase, PhaseFractions, SearchDomain};
use crate::search::{Searcher, SearcherConfig, SearcherKind, TerminationReason};

pub use archive::{postprocess, Elite, ElitistArchive, PostprocessOutcome};

/// Which archived solutions are added to the population of a restart.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InjectionMode {
    /// Global elites plus every local optimum found so far.
    #[serde(rename = "all")]
    AllOptima,
    #[default]
    #[serde(rename = "global")]
    OnlyGlobal,
    #[serde(rename = "none")]
    None,
}

impl InjectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InjectionMode::AllOptima => "all",
            InjectionMode::OnlyGlobal => "global",
            InjectionMode::None => "none",
        }
    }
}

impl std::str::FromStr for InjectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" | "all_optima" => Ok(InjectionMode::AllOptima),
            "global" | "only_global" => Ok(InjectionMode::OnlyGlobal),
            "none" => Ok(InjectionMode::None),
            other => Err(Error::InvalidConfig(format!("unknown injection mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for InjectionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Run configuration of [`run_hillvallea`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Accuracy of optima: searcher stagnation threshold and archive filter.
    pub tol: f64,
    pub injection: InjectionMode,
    /// Overrides the problem's budget.
    pub budget: Option<u64>,
    /// Initial population size is this many points per dimension.
    pub initial_population_per_dim: usize,
    pub population_growth: f64,
    pub cluster_size_growth: f64,
    /// Initial searcher population as a multiple of the recommended size.
    pub cluster_size_scale: f64,
    /// Hill-Valley test points used when checking elites for distinctness.
    pub postprocess_test_points: usize,
    /// Edge-length provider for clustering; the domain volume when unset.
    pub edge_length: Option<EdgeLength>,
    /// Fitness accuracy of the peak ratios recorded in the trace.
    pub trace_epsilon: f64,
    pub searcher: SearcherConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            injection: InjectionMode::OnlyGlobal,
            budget: None,
            initial_population_per_dim: 16,
            population_growth: 2.0,
            cluster_size_growth: 1.2,
            cluster_size_scale: 1.0,
            postprocess_test_points: 5,
            edge_length: None,
            trace_epsilon: 1e-5,
            searcher: SearcherConfig::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidConfig(what.to_string()))
            }
        };
        check(self.tol >= 0.0, "tol must be non-negative")?;
        check(self.initial_population_per_dim >= 1, "initial population must be positive")?;
        check(self.population_growth >= 1.0, "population growth must be at least 1")?;
        check(self.cluster_size_growth >= 1.0, "cluster size growth must be at least 1")?;
        check(self.cluster_size_scale > 0.0, "cluster size scale must be positive")?;
        check(self.postprocess_test_points >= 1, "post-processing needs at least one test point")?;
        check(self.trace_epsilon > 0.0, "trace epsilon must be positive")?;
        Ok(())
    }
}

/// Archive state after one restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub evaluations: u64,
    pub restart: usize,
    pub archive_size: usize,
    pub best_fitness: Option<f64>,
    /// Peak ratio of the archive; `None` without known optima.
    pub peak_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartLog {
    pub restart: usize,
    pub population_size: usize,
    pub cluster_size: usize,
    pub selection_size: usize,
    pub clusters: usize,
    /// Clusters whose best member is an elite.
    pub skipped: usize,
    pub searchers_run: usize,
    pub new_elites: usize,
    /// Budget ran out during this restart.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub problem_id: u32,
    pub kind: SearcherKind,
    pub seed: u64,
    pub archive: ElitistArchive,
    pub counter: EvaluationCounter,
    pub trace: Vec<TracePoint>,
    pub restarts: usize,
    pub per_restart_log: Vec<RestartLog>,
}

impl RunResult {
    pub fn evaluations_used(&self) -> u64 {
        self.counter.used()
    }

    pub fn phase_fractions(&self) -> PhaseFractions {
        self.counter.phase_fractions()
    }

    /// The archived elites, in archive order.
    pub fn optima(&self) -> Vec<Solution> {
        self.archive.to_solutions()
    }
}

/// The best `max(1, floor(tau * |population|))` solutions, stable on ties.
pub fn truncation_selection(population: &[Solution], tau: f64) -> Vec<Solution> {
    selection_indices(population, tau)
        .into_iter()
        .map(|i| population[i].clone())
        .collect()
}

fn selection_indices(population: &[Solution], tau: f64) -> Vec<usize> {
    let size = ((tau * population.len() as f64).floor() as usize).clamp(1, population.len().max(1));
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&a, &b| population[a].fitness.total_cmp(&population[b].fitness));
    order.truncate(size.min(population.len()));
    order
}

/// `n` points drawn uniformly from the domain.
pub fn uniform_sample<R: Rng + ?Sized>(domain: &SearchDomain, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut x: Vec<f64> = domain
                .lower()
                .iter()
                .zip(domain.upper())
                .map(|(lo, hi)| lo + rng.random::<f64>() * (hi - lo))
                .collect();
            domain.clamp(&mut x);
            x
        })
        .collect()
}

/// Runs the Hill-Valley evolutionary algorithm until the budget is spent.
///
/// Sampling and core search draw from separate streams of one ChaCha
/// generator seeded with `seed`, so the result is a deterministic function of
/// `(problem, kind, config, seed)`.
pub fn run_hillvallea(
    problem: &BenchmarkProblem,
    kind: SearcherKind,
    config: &OptimizerConfig,
    seed: u64,
) -> Result<RunResult> {
    config.validate()?;
    let budget = config.budget.unwrap_or(problem.budget());
    if budget == 0 {
        return Err(Error::InvalidConfig("budget must be positive".into()));
    }
    let d = problem.dimension();
    let domain = problem.domain();
    let edge = config.edge_length.unwrap_or(EdgeLength::Expected {
        volume: domain.volume(),
    });
    let tau = kind.selection_fraction();

    let mut sampling_rng = ChaCha8Rng::seed_from_u64(seed);
    sampling_rng.set_stream(0);
    let mut search_rng = ChaCha8Rng::seed_from_u64(seed);
    search_rng.set_stream(1);

    let mut ev = Evaluator::new(problem, budget);
    let mut archive = ElitistArchive::new();
    let mut local_optima: Vec<Solution> = Vec::new();
    let mut population_size = config.initial_population_per_dim * d;
    let mut cluster_size =
        ((config.cluster_size_scale * kind.recommended_population_size(d) as f64).ceil() as usize).max(1);
    let mut trace = Vec::new();
    let mut log = Vec::new();

    while !ev.counter().is_exhausted() {
        let restart = log.len();

        ev.set_phase(Phase::Init);
        let mut population: Vec<Solution> = Vec::with_capacity(population_size + archive.len());
        for x in uniform_sample(domain, population_size, &mut sampling_rng) {
            match ev.evaluate(&x) {
                Ok(f) => population.push(Solution::new(x, f)),
                Err(EvalError::BudgetExhausted) => break,
                Err(e) => return Err(e.into()),
            }
        }
        let sampled = population.len();
        if config.injection != InjectionMode::None {
            population.extend(archive.solutions().cloned());
        }
        if config.injection == InjectionMode::AllOptima {
            population.extend(local_optima.iter().cloned());
        }
        if population.is_empty() {
            break;
        }

        let selected_idx = selection_indices(&population, tau);
        let injected = |i: usize| i >= sampled;
        let selection: Vec<Solution> = selected_idx.iter().map(|&i| population[i].clone()).collect();

        ev.set_phase(Phase::Clustering);
        let clusters = cluster_selection(&selection, edge, &mut ev)?;

        let mut candidates = Vec::new();
        let mut skipped = 0;
        let mut searchers_run = 0;
        ev.set_phase(Phase::LocalOpt);
        for cluster in clusters.iter() {
            if injected(selected_idx[cluster.founder()]) {
                skipped += 1;
                continue;
            }
            let founder = &selection[cluster.founder()];
            if ev.counter().is_exhausted() {
                candidates.push(founder.clone());
                continue;
            }
            let members: Vec<&Solution> = cluster.solutions(&selection).collect();
            let mut searcher = Searcher::from_cluster(
                &members,
                clusters.edge_length,
                kind,
                cluster_size,
                config.tol,
                &config.searcher,
            )?;
            let reason = searcher.run(&mut ev, domain, &mut search_rng)?;
            searchers_run += 1;
            debug_assert!(reason != TerminationReason::BudgetExhausted || ev.counter().is_exhausted());
            candidates.push(searcher.into_best());
        }

        ev.set_phase(Phase::Postprocess);
        let outcome = postprocess(candidates, &mut archive, config.tol, config.postprocess_test_points, &mut ev)?;
        if outcome.emptied {
            local_optima.clear();
        }
        if config.injection == InjectionMode::AllOptima {
            local_optima.extend(outcome.discarded);
        }

        log.push(RestartLog {
            restart,
            population_size,
            cluster_size,
            selection_size: selection.len(),
            clusters: clusters.len(),
            skipped,
            searchers_run,
            new_elites: outcome.added,
            truncated: ev.counter().is_exhausted(),
        });
        trace.push(TracePoint {
            evaluations: ev.counter().used(),
            restart,
            archive_size: archive.len(),
            best_fitness: archive.best_fitness(),
            peak_ratio: (!problem.known_optima().is_empty())
                .then(|| peak_ratio(&archive.to_solutions(), problem, config.trace_epsilon).ratio),
        });

        if outcome.added == 0 {
            population_size = ((population_size as f64) * config.population_growth).ceil() as usize;
            cluster_size = ((cluster_size as f64) * config.cluster_size_growth).ceil() as usize;
        }
    }

    Ok(RunResult {
        problem_id: problem.id(),
        kind,
        seed,
        archive,
        counter: ev.into_counter(),
        trace,
        restarts: log.len(),
        per_restart_log: log,
    })
}
