use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hillvalley::{hill_valley_test, Solution};
use crate::problems::BudgetedObjective;

/// An archived presumed global optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elite {
    pub solution: Solution,
    /// False when the budget ran out before the distinctness tests for this
    /// elite could be run.
    pub verified: bool,
}

/// Presumed distinct global optima collected across restarts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ElitistArchive {
    elites: Vec<Elite>,
}

impl ElitistArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.elites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elites.is_empty()
    }

    pub fn elites(&self) -> &[Elite] {
        &self.elites
    }

    pub fn solutions(&self) -> impl Iterator<Item = &Solution> + '_ {
        self.elites.iter().map(|e| &e.solution)
    }

    pub fn to_solutions(&self) -> Vec<Solution> {
        self.solutions().cloned().collect()
    }

    pub fn best_fitness(&self) -> Option<f64> {
        self.solutions().map(|s| s.fitness).min_by(f64::total_cmp)
    }

    /// Largest minus smallest elite fitness; zero when empty.
    pub fn fitness_spread(&self) -> f64 {
        let worst = self.solutions().map(|s| s.fitness).max_by(f64::total_cmp);
        match (self.best_fitness(), worst) {
            (Some(b), Some(w)) => w - b,
            _ => 0.0,
        }
    }

    pub fn contains(&self, s: &Solution) -> bool {
        self.solutions().any(|e| e == s)
    }

    pub fn clear(&mut self) {
        self.elites.clear();
    }

    fn push(&mut self, solution: Solution, verified: bool) {
        self.elites.push(Elite { solution, verified });
    }
}

/// What [`postprocess`] did with the candidates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PostprocessOutcome {
    /// Candidates appended as new elites.
    pub added: usize,
    /// Elites replaced by a strictly better candidate from the same niche.
    pub replaced: usize,
    /// Candidates dropped as duplicates of an elite.
    pub duplicates: usize,
    /// Candidates more than `tol` worse than the all-time best.
    pub discarded: Vec<Solution>,
    /// Whether the archive was emptied because a better optimum appeared.
    pub emptied: bool,
    /// Candidates appended without distinctness tests after the budget ran out.
    pub unverified: usize,
    pub evaluations: usize,
}

/// Merges the best solutions of one restart into the archive.
///
/// Candidates more than `tol` worse than the best of candidates and archive
/// are discarded. If a surviving candidate beats an elite by more than `tol`,
/// the archive is emptied first. Each survivor, best first, is then tested
/// against every elite with `n_test` Hill-Valley test points: a survivor
/// sharing a niche replaces that elite when strictly better and is dropped
/// otherwise; survivors in a niche of their own are appended.
pub fn postprocess<O>(
    candidates: Vec<Solution>,
    archive: &mut ElitistArchive,
    tol: f64,
    n_test: usize,
    objective: &mut O,
) -> Result<PostprocessOutcome>
where
    O: BudgetedObjective + ?Sized,
{
    let mut outcome = PostprocessOutcome::default();
    let best = candidates
        .iter()
        .chain(archive.solutions())
        .map(|s| s.fitness)
        .min_by(f64::total_cmp);
    let Some(best) = best else {
        return Ok(outcome);
    };

    let (mut survivors, discarded): (Vec<Solution>, Vec<Solution>) =
        candidates.into_iter().partition(|s| s.fitness - best <= tol);
    outcome.discarded = discarded;
    survivors.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));

    if let (Some(first), Some(worst)) = (
        survivors.first(),
        archive.solutions().map(|s| s.fitness).max_by(f64::total_cmp),
    ) {
        if first.fitness + tol < worst {
            archive.clear();
            outcome.emptied = true;
        }
    }

    let mut exhausted = false;
    for candidate in survivors {
        if exhausted {
            archive.push(candidate, false);
            outcome.added += 1;
            outcome.unverified += 1;
            continue;
        }
        let mut niche = None;
        for (j, elite) in archive.elites.iter().enumerate() {
            let test = hill_valley_test(&candidate, &elite.solution, n_test, objective)?;
            outcome.evaluations += test.evaluations;
            if test.exhausted {
                exhausted = true;
                break;
            }
            if test.same_niche {
                niche = Some(j);
                break;
            }
        }
        if exhausted {
            archive.push(candidate, false);
            outcome.added += 1;
            outcome.unverified += 1;
            continue;
        }
        match niche {
            Some(j) if candidate.fitness < archive.elites[j].solution.fitness => {
                archive.elites[j] = Elite {
                    solution: candidate,
                    verified: true,
                };
                outcome.replaced += 1;
            }
            Some(_) => outcome.duplicates += 1,
            None => {
                archive.push(candidate, true);
                outcome.added += 1;
            }
        }
    }
    Ok(outcome)
}
