//! Fixtures shared by the benchmarks.

use hillvallea::{BenchmarkProblem, Solution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `n` uniformly sampled, evaluated solutions of `problem`, best first.
pub fn sorted_sample(problem: &BenchmarkProblem, n: usize, seed: u64) -> Vec<Solution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample: Vec<Solution> = hillvallea::uniform_sample(problem.domain(), n, &mut rng)
        .into_iter()
        .map(|x| {
            let f = problem.value(&x);
            Solution::new(x, f)
        })
        .collect();
    sample.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
    sample
}

/// The known optima of `problem` as reported solutions, followed by `extra`
/// random samples.
pub fn reported_set(problem: &BenchmarkProblem, extra: usize, seed: u64) -> Vec<Solution> {
    let mut out: Vec<Solution> = problem
        .known_optima()
        .iter()
        .map(|o| Solution::new(o.position.clone(), o.fitness))
        .collect();
    out.extend(sorted_sample(problem, extra, seed));
    out
}
