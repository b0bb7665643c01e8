use rand::Rng;

use super::gaussian::{mean_of, scatter, Factorization};
use super::{ModelState, SearcherConfig, SearcherKind, SearcherState, TerminationReason};
use crate::error::{Error, EvalError, Result};
use crate::hillvalley::Solution;
use crate::problems::{BudgetedObjective, SearchDomain};

/// One generation of the AMaLGaM-style EDA for `kind`.
///
/// Samples `N_c` solutions from `N(mu, c^2 Sigma)`, the first
/// `floor(ams_fraction * tau * N_c)` of them shifted by
/// `ams_factor * c * (mu_t - mu_{t-1})`, then refits mean and covariance by
/// maximum likelihood on the best `floor(tau * N_c)` of the offspring and the
/// best-ever solution. Univariate kinds fit only the diagonal; incremental
/// kinds estimate the spread around the previous mean and blend it into the
/// previous covariance. The multiplier `c` grows when the generation improved
/// the best-ever solution far from the mean and shrinks when it did not.
pub fn eda_generation<O, R>(
    state: &mut SearcherState,
    objective: &mut O,
    domain: &SearchDomain,
    kind: SearcherKind,
    rng: &mut R,
    config: &SearcherConfig,
) -> Result<()>
where
    O: BudgetedObjective + ?Sized,
    R: Rng + ?Sized,
{
    if kind == SearcherKind::Cmsa {
        return Err(Error::InvalidConfig("EDA generation requested for CMSA".into()));
    }
    let ModelState::Eda {
        multiplier,
        ref previous_mean,
    } = state.model
    else {
        return Err(Error::InvalidConfig("EDA generation on a non-EDA searcher".into()));
    };
    let d = state.dimension();
    let n = state.population_size.max(1);
    let tau = kind.selection_fraction();
    let n_selected = ((tau * n as f64).floor() as usize).max(1);
    let n_shifted = (config.ams_fraction * tau * n as f64).floor() as usize;

    let model = Factorization::new(&state.covariance);
    let sampling = Factorization::new(&(&state.covariance * (multiplier * multiplier)));
    let shift: Vec<f64> = state
        .mean
        .iter()
        .zip(previous_mean)
        .map(|(m, p)| config.ams_factor * multiplier * (m - p))
        .collect();

    let previous_best = state.best_ever.fitness;
    let mut population: Vec<Solution> = Vec::with_capacity(n);
    let mut exhausted = false;
    let mut z = vec![0.0; d];
    for l in 0..n {
        sampling.sample(rng, &mut z);
        let mut x: Vec<f64> = state.mean.iter().zip(&z).map(|(m, zi)| m + zi).collect();
        if l < n_shifted {
            for (xi, s) in x.iter_mut().zip(&shift) {
                *xi += s;
            }
        }
        domain.clamp(&mut x);
        let fitness = match objective.evaluate(&x) {
            Ok(f) => f,
            Err(EvalError::BudgetExhausted) => {
                exhausted = true;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        state.evaluations += 1;
        if fitness < state.best_ever.fitness {
            state.best_ever = Solution::new(x.clone(), fitness);
        }
        population.push(Solution::new(x, fitness));
    }

    let improved = state.best_ever.fitness < previous_best;
    if exhausted {
        state.population = population;
        state.terminated = Some(TerminationReason::BudgetExhausted);
        return Ok(());
    }

    // multiplier adaptation against the model that generated this population
    let mut multiplier = multiplier;
    if improved {
        let offset: Vec<f64> = state
            .best_ever
            .position
            .iter()
            .zip(&state.mean)
            .map(|(b, m)| b - m)
            .collect();
        if model.mahalanobis_squared(&offset).sqrt() > config.mahalanobis_threshold {
            multiplier /= config.multiplier_decay;
        }
    } else {
        multiplier = (multiplier * config.multiplier_decay).max(config.multiplier_min);
    }
    multiplier = multiplier.min(config.multiplier_max);

    // elitism: the best-ever solution competes for selection with the offspring
    let mut pool: Vec<&Solution> = population.iter().collect();
    if !population.contains(&state.best_ever) {
        pool.push(&state.best_ever);
    }
    pool.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
    let selected: Vec<&[f64]> = pool[..n_selected.min(pool.len())]
        .iter()
        .map(|s| s.position.as_slice())
        .collect();

    let new_mean = mean_of(selected.iter().copied(), d);
    // Incremental kinds measure the spread of the selection around the mean it
    // was sampled from, which stays informative for a selection of one.
    let center = if kind.is_incremental() { &state.mean } else { &new_mean };
    let divisor = selected.len() as f64;
    let mut fit = scatter(selected.iter().copied(), center, divisor, kind.is_univariate());
    if !kind.is_univariate() && Factorization::new(&fit).min_eigenvalue() <= 0.0 {
        fit = scatter(selected.iter().copied(), center, divisor, true);
    }
    let degenerate = fit.diagonal().iter().any(|v| v.is_nan() || *v <= 0.0);

    let covariance = if kind.is_incremental() {
        &state.covariance * (1.0 - config.eda_smoothing) + fit * config.eda_smoothing
    } else {
        fit
    };

    let old_mean = std::mem::replace(&mut state.mean, new_mean);
    state.covariance = covariance;
    state.model = ModelState::Eda {
        multiplier,
        previous_mean: old_mean,
    };
    state.population = population;
    if degenerate && !kind.is_incremental() {
        state.terminated = Some(TerminationReason::DegenerateModel);
    }
    let window = config.improvement_window(d, state.population_size);
    state.record_generation(improved, window);
    Ok(())
}
