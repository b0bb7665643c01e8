use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::gaussian::{mean_of, Factorization};
use super::{ModelState, SearcherConfig, SearcherState, TerminationReason};
use crate::error::{Error, EvalError, Result};
use crate::hillvalley::Solution;
use crate::problems::{BudgetedObjective, SearchDomain};

struct Offspring {
    solution: Solution,
    sigma: f64,
    z: Vec<f64>,
}

/// One CMSA generation with best-ever elitism.
///
/// Each of the `N_c` offspring draws its own step size
/// `sigma * exp(tau_sigma * N(0,1))` and direction `z ~ N(0, C)`. The best
/// `max(1, N_c / 2)` (after the all-time best replaced the worst offspring)
/// set the new mean, step size (mean of their step sizes) and shape matrix
/// (rank-mu update with time constant `tau_c`).
pub fn cmsa_generation<O, R>(
    state: &mut SearcherState,
    objective: &mut O,
    domain: &SearchDomain,
    rng: &mut R,
    config: &SearcherConfig,
) -> Result<()>
where
    O: BudgetedObjective + ?Sized,
    R: Rng + ?Sized,
{
    let ModelState::Cmsa { sigma } = state.model else {
        return Err(Error::InvalidConfig("CMSA generation on a non-CMSA searcher".into()));
    };
    let d = state.dimension();
    let lambda = state.population_size.max(1);
    let mu = (lambda / 2).max(1);
    let tau_sigma = config
        .cmsa_tau_sigma
        .unwrap_or_else(|| 1.0 / (2.0 * d as f64).sqrt());
    let tau_c = config
        .cmsa_tau_c
        .unwrap_or_else(|| 1.0 + (d * (d + 1)) as f64 / (2.0 * mu as f64));

    let shape = Factorization::new(&state.covariance);
    let previous_best = state.best_ever.fitness;
    let mut offspring: Vec<Offspring> = Vec::with_capacity(lambda);
    let mut exhausted = false;
    for _ in 0..lambda {
        let step = sigma * (tau_sigma * rng.sample::<f64, _>(StandardNormal)).exp();
        let mut z = vec![0.0; d];
        shape.sample(rng, &mut z);
        let mut x: Vec<f64> = state.mean.iter().zip(&z).map(|(m, zi)| m + step * zi).collect();
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
        offspring.push(Offspring {
            solution: Solution::new(x, fitness),
            sigma: step,
            z,
        });
    }

    let improved = state.best_ever.fitness < previous_best;
    if exhausted {
        state.population = offspring.into_iter().map(|o| o.solution).collect();
        state.terminated = Some(TerminationReason::BudgetExhausted);
        return Ok(());
    }

    if !improved {
        // the all-time best takes the place of the worst offspring
        if let Some(worst) = offspring
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.solution.fitness.total_cmp(&b.1.solution.fitness))
            .map(|(i, _)| i)
        {
            let z = state
                .best_ever
                .position
                .iter()
                .zip(&state.mean)
                .map(|(b, m)| (b - m) / sigma)
                .collect();
            offspring[worst] = Offspring {
                solution: state.best_ever.clone(),
                sigma,
                z,
            };
        }
    }

    let mut ranked: Vec<usize> = (0..offspring.len()).collect();
    ranked.sort_by(|&a, &b| offspring[a].solution.fitness.total_cmp(&offspring[b].solution.fitness));
    let selected = &ranked[..mu.min(ranked.len())];

    state.mean = mean_of(selected.iter().map(|&i| offspring[i].solution.position.as_slice()), d);
    let new_sigma = selected.iter().map(|&i| offspring[i].sigma).sum::<f64>() / selected.len() as f64;

    let mut rank_mu = DMatrix::<f64>::zeros(d, d);
    for &i in selected {
        let z = &offspring[i].z;
        for r in 0..d {
            for c in 0..=r {
                rank_mu[(r, c)] += z[r] * z[c];
            }
        }
    }
    let weight = 1.0 / selected.len() as f64;
    let learn = 1.0 / tau_c;
    for r in 0..d {
        for c in 0..=r {
            let v = (1.0 - learn) * state.covariance[(r, c)] + learn * weight * rank_mu[(r, c)];
            state.covariance[(r, c)] = v;
            state.covariance[(c, r)] = v;
        }
    }

    state.model = ModelState::Cmsa { sigma: new_sigma };
    state.population = offspring.into_iter().map(|o| o.solution).collect();
    let window = config.improvement_window(d, state.population_size);
    state.record_generation(improved, window);
    Ok(())
}
