//! Core search algorithms: single-niche Gaussian optimizers started from a
//! cluster.
//!
//! [`SearcherKind::Cmsa`] is a covariance matrix self-adaptation evolution
//! strategy with elitism. The remaining kinds are AMaLGaM-style estimation of
//! distribution algorithms: a maximum-likelihood Gaussian refit on the
//! truncation selection, an anticipated mean shift and an adaptive
//! distribution multiplier. The `u` variants estimate a diagonal covariance,
//! the `i` variants smooth the covariance across generations.

mod cmsa;
mod eda;
pub(crate) mod gaussian;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hillvalley::Solution;
use crate::problems::{BudgetedObjective, SearchDomain};

pub use cmsa::cmsa_generation;
pub use eda::eda_generation;
use gaussian::{mean_of, scatter, Factorization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearcherKind {
    Cmsa,
    Am,
    Amu,
    Iam,
    Iamu,
}

impl SearcherKind {
    pub const ALL: [SearcherKind; 5] = [
        SearcherKind::Cmsa,
        SearcherKind::Am,
        SearcherKind::Amu,
        SearcherKind::Iam,
        SearcherKind::Iamu,
    ];

    /// Truncation selection fraction used both by the optimizer and inside
    /// the searcher.
    pub fn selection_fraction(self) -> f64 {
        match self {
            SearcherKind::Cmsa => 0.5,
            _ => 0.35,
        }
    }

    /// Recommended cluster (population) size for dimension `d`, rounded up.
    pub fn recommended_population_size(self, d: usize) -> usize {
        let d = d.max(1) as f64;
        let size = match self {
            SearcherKind::Cmsa => (3.0 * d.ln()).ceil() + 4.0,
            SearcherKind::Am => (17.0 + 3.0 * d * d.sqrt()).ceil(),
            SearcherKind::Amu | SearcherKind::Iam => (10.0 * d.sqrt()).ceil(),
            SearcherKind::Iamu => (4.0 * d.sqrt()).ceil(),
        };
        (size as usize).max(4)
    }

    pub fn is_univariate(self) -> bool {
        matches!(self, SearcherKind::Amu | SearcherKind::Iamu)
    }

    pub fn is_incremental(self) -> bool {
        matches!(self, SearcherKind::Iam | SearcherKind::Iamu)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SearcherKind::Cmsa => "cmsa",
            SearcherKind::Am => "am",
            SearcherKind::Amu => "amu",
            SearcherKind::Iam => "iam",
            SearcherKind::Iamu => "iamu",
        }
    }
}

impl fmt::Display for SearcherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SearcherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SearcherKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown searcher kind `{s}`")))
    }
}

/// Constants of the core search algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearcherConfig {
    /// Initial standard deviation of a singleton cluster, as a fraction of
    /// the expected edge length.
    pub singleton_scale: f64,
    /// CMSA step-size learning rate; `1 / sqrt(2d)` when unset.
    pub cmsa_tau_sigma: Option<f64>,
    /// CMSA covariance time constant; `1 + d(d+1) / (2 mu)` when unset.
    pub cmsa_tau_c: Option<f64>,
    pub cmsa_min_std: f64,
    pub cmsa_max_condition: f64,
    /// Improvement window is `window_base + floor(window_factor * d / N_c)`.
    pub window_base: usize,
    pub window_factor: f64,
    /// Covariance smoothing weight of the incremental EDA variants.
    pub eda_smoothing: f64,
    pub multiplier_decay: f64,
    pub multiplier_min: f64,
    pub multiplier_max: f64,
    pub mahalanobis_threshold: f64,
    /// Fraction of `tau * N_c` offspring that receive the anticipated mean shift.
    pub ams_fraction: f64,
    pub ams_factor: f64,
    pub eda_min_std: f64,
    pub eda_min_fitness_std: f64,
}

impl Default for SearcherConfig {
    fn default() -> Self {
        Self {
            singleton_scale: 0.01,
            cmsa_tau_sigma: None,
            cmsa_tau_c: None,
            cmsa_min_std: 1e-15,
            cmsa_max_condition: 1e14,
            window_base: 10,
            window_factor: 30.0,
            eda_smoothing: 0.7,
            multiplier_decay: 0.9,
            multiplier_min: 1e-4,
            multiplier_max: 1e4,
            mahalanobis_threshold: 1.0,
            ams_fraction: 0.5,
            ams_factor: 2.0,
            eda_min_std: 1e-12,
            eda_min_fitness_std: 1e-12,
        }
    }
}

impl SearcherConfig {
    pub fn improvement_window(&self, d: usize, population_size: usize) -> usize {
        self.window_base + (self.window_factor * d as f64 / population_size.max(1) as f64).floor() as usize
    }
}

/// Gaussian initialization of a searcher: mean, covariance and population size.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianInit {
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub population_size: usize,
}

impl GaussianInit {
    /// Mean and sample covariance of the cluster. Clusters with fewer than
    /// `d + 1` members only estimate the diagonal; a single member gets
    /// `(singleton_scale * eel)^2 * I`.
    pub fn from_cluster(
        members: &[&Solution],
        eel: f64,
        population_size: usize,
        singleton_scale: f64,
    ) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidConfig("cannot initialize from an empty cluster".into()))?;
        let d = first.dimension();
        if let Some(m) = members.iter().find(|m| m.dimension() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.dimension(),
            });
        }

        let mean = mean_of(members.iter().map(|m| m.position.as_slice()), d);
        let floor = (singleton_scale * eel).powi(2);
        let covariance = if members.len() == 1 {
            DMatrix::identity(d, d) * floor
        } else {
            let diagonal_only = members.len() < d + 1;
            let mut cov = scatter(
                members.iter().map(|m| m.position.as_slice()),
                &mean,
                (members.len() - 1) as f64,
                diagonal_only,
            );
            // coincident coordinates would leave the model without support
            for i in 0..d {
                if cov[(i, i)].is_nan() || cov[(i, i)] <= 0.0 {
                    cov[(i, i)] = floor;
                }
            }
            cov
        };
        Ok(Self {
            mean,
            covariance,
            population_size,
        })
    }
}

/// Kind-specific parts of the search model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelState {
    /// Global step size; the covariance field holds the shape matrix.
    Cmsa { sigma: f64 },
    /// Distribution multiplier and the mean of the previous generation.
    Eda {
        multiplier: f64,
        previous_mean: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationReason {
    /// Best fitness improved less than `tol` over the improvement window.
    NoImprovement,
    /// CMSA sampling standard deviation reached machine accuracy.
    StepSizeCollapse,
    IllConditioned,
    /// Largest per-coordinate standard deviation of the population is tiny.
    PopulationCollapse,
    FitnessCollapse,
    /// The covariance fit has no support even on the diagonal.
    DegenerateModel,
    BudgetExhausted,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::NoImprovement => "no-improvement",
            TerminationReason::StepSizeCollapse => "step-size-collapse",
            TerminationReason::IllConditioned => "ill-conditioned",
            TerminationReason::PopulationCollapse => "population-collapse",
            TerminationReason::FitnessCollapse => "fitness-collapse",
            TerminationReason::DegenerateModel => "degenerate-model",
            TerminationReason::BudgetExhausted => "budget-exhausted",
        }
    }
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything a searcher carries between generations.
#[derive(Debug, Clone, PartialEq)]
pub struct SearcherState {
    pub generation: usize,
    pub best_ever: Solution,
    /// `best_ever.fitness` after each generation, newest last; holds at most
    /// one improvement window plus one entry.
    pub best_history: VecDeque<f64>,
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub population_size: usize,
    pub model: ModelState,
    /// Offspring of the latest generation.
    pub population: Vec<Solution>,
    pub evaluations: usize,
    /// Consecutive generations without a new best.
    pub no_improvement: usize,
    pub terminated: Option<TerminationReason>,
}

impl SearcherState {
    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    fn record_generation(&mut self, improved: bool, window: usize) {
        self.generation += 1;
        if improved {
            self.no_improvement = 0;
        } else {
            self.no_improvement += 1;
        }
        self.best_history.push_back(self.best_ever.fitness);
        while self.best_history.len() > window + 1 {
            self.best_history.pop_front();
        }
    }
}

/// Builds the searcher state for a cluster. `best_ever` starts as the
/// fittest member.
pub fn init_from_cluster(
    members: &[&Solution],
    eel: f64,
    kind: SearcherKind,
    population_size: usize,
    config: &SearcherConfig,
) -> Result<SearcherState> {
    let init = GaussianInit::from_cluster(members, eel, population_size, config.singleton_scale)?;
    let best = members
        .iter()
        .min_by(|a, b| a.fitness.total_cmp(&b.fitness))
        .map(|s| (*s).clone())
        .expect("non-empty cluster");

    let (covariance, model) = match kind {
        SearcherKind::Cmsa => {
            let d = init.mean.len() as f64;
            let sigma = (init.covariance.diagonal().sum() / d).sqrt();
            (
                &init.covariance / (sigma * sigma),
                ModelState::Cmsa { sigma },
            )
        }
        _ => (
            if kind.is_univariate() {
                DMatrix::from_diagonal(&init.covariance.diagonal())
            } else {
                init.covariance
            },
            ModelState::Eda {
                multiplier: 1.0,
                previous_mean: init.mean.clone(),
            },
        ),
    };

    let mut best_history = VecDeque::new();
    best_history.push_back(best.fitness);
    Ok(SearcherState {
        generation: 0,
        best_ever: best,
        best_history,
        mean: init.mean,
        covariance,
        population_size: init.population_size,
        model,
        population: Vec::new(),
        evaluations: 0,
        no_improvement: 0,
        terminated: None,
    })
}

/// Termination test for a searcher of the given kind.
///
/// CMSA stops when the best fitness improved less than `tol` over the last
/// `10 + floor(30 d / N_c)` generations, when its sampling standard deviation
/// reaches `cmsa_min_std`, or when the shape matrix is ill-conditioned. EDA
/// kinds stop when the population or its fitness values have (almost) no
/// spread. Budget exhaustion and model degeneracy stop every kind.
pub fn check_termination(
    state: &SearcherState,
    kind: SearcherKind,
    tol: f64,
    config: &SearcherConfig,
) -> Option<TerminationReason> {
    if let Some(reason) = state.terminated {
        return Some(reason);
    }
    match (&state.model, kind) {
        (ModelState::Cmsa { sigma }, SearcherKind::Cmsa) => {
            let window = config.improvement_window(state.dimension(), state.population_size);
            if state.best_history.len() > window {
                let oldest = state.best_history[state.best_history.len() - 1 - window];
                let newest = *state.best_history.back().expect("history is never empty");
                if oldest - newest < tol {
                    return Some(TerminationReason::NoImprovement);
                }
            }
            let max_var = state.covariance.diagonal().max();
            if sigma * max_var.max(0.0).sqrt() <= config.cmsa_min_std {
                return Some(TerminationReason::StepSizeCollapse);
            }
            if Factorization::new(&state.covariance).condition_number() > config.cmsa_max_condition {
                return Some(TerminationReason::IllConditioned);
            }
            None
        }
        (ModelState::Eda { .. }, k) if k != SearcherKind::Cmsa => {
            if state.population.len() < 2 {
                return None;
            }
            let d = state.dimension();
            let mean = mean_of(state.population.iter().map(|s| s.position.as_slice()), d);
            let n = state.population.len() as f64;
            let max_std = (0..d)
                .map(|i| {
                    let var = state
                        .population
                        .iter()
                        .map(|s| (s.position[i] - mean[i]).powi(2))
                        .sum::<f64>()
                        / n;
                    var.sqrt()
                })
                .fold(0.0, f64::max);
            if max_std < config.eda_min_std {
                return Some(TerminationReason::PopulationCollapse);
            }
            let fmean = state.population.iter().map(|s| s.fitness).sum::<f64>() / n;
            let fstd = (state
                .population
                .iter()
                .map(|s| (s.fitness - fmean).powi(2))
                .sum::<f64>()
                / n)
                .sqrt();
            if fstd < config.eda_min_fitness_std {
                return Some(TerminationReason::FitnessCollapse);
            }
            None
        }
        _ => Some(TerminationReason::DegenerateModel),
    }
}

/// A core search algorithm bound to its configuration.
#[derive(Debug, Clone)]
pub struct Searcher {
    kind: SearcherKind,
    tol: f64,
    config: SearcherConfig,
    state: SearcherState,
}

impl Searcher {
    pub fn from_cluster(
        members: &[&Solution],
        eel: f64,
        kind: SearcherKind,
        population_size: usize,
        tol: f64,
        config: &SearcherConfig,
    ) -> Result<Self> {
        Ok(Self {
            kind,
            tol,
            config: config.clone(),
            state: init_from_cluster(members, eel, kind, population_size, config)?,
        })
    }

    pub fn kind(&self) -> SearcherKind {
        self.kind
    }

    pub fn state(&self) -> &SearcherState {
        &self.state
    }

    pub fn best(&self) -> &Solution {
        &self.state.best_ever
    }

    pub fn into_best(self) -> Solution {
        self.state.best_ever
    }

    pub fn check_termination(&self) -> Option<TerminationReason> {
        check_termination(&self.state, self.kind, self.tol, &self.config)
    }

    /// Runs one generation.
    pub fn generation<O, R>(&mut self, objective: &mut O, domain: &SearchDomain, rng: &mut R) -> Result<()>
    where
        O: BudgetedObjective + ?Sized,
        R: Rng + ?Sized,
    {
        match self.kind {
            SearcherKind::Cmsa => cmsa_generation(&mut self.state, objective, domain, rng, &self.config),
            kind => eda_generation(&mut self.state, objective, domain, kind, rng, &self.config),
        }
    }

    /// Runs generations until a termination criterion fires.
    pub fn run<O, R>(&mut self, objective: &mut O, domain: &SearchDomain, rng: &mut R) -> Result<TerminationReason>
    where
        O: BudgetedObjective + ?Sized,
        R: Rng + ?Sized,
    {
        loop {
            if let Some(reason) = self.check_termination() {
                self.state.terminated = Some(reason);
                return Ok(reason);
            }
            self.generation(objective, domain, rng)?;
        }
    }
}
