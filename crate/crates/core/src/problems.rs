//! Problem contract, budgeted evaluation and the niching benchmark suite.
//!
//! Benchmark functions 1-10 are the standard closed forms of the CEC2013
//! niching suite. They are maximization problems; the stored objective is the
//! negated function so that every component of the crate minimizes.
//! Composition functions (ids 11-20) depend on external rotation and shift
//! data and are not built in; [`BenchmarkProblem::custom`] is the extension
//! point for them.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, EvalError, Result};

/// Axis-aligned box `[lower, upper]` in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidDomain("dimension must be positive".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::InvalidDomain(format!(
                "{} lower bounds but {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidDomain(format!(
                    "coordinate {i}: lower bound {lo} must be finite and below upper bound {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval on every coordinate.
    pub fn cube(lower: f64, upper: f64, dimension: usize) -> Result<Self> {
        Self::new(vec![lower; dimension], vec![upper; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .product()
    }

    /// Length of the main diagonal of the box.
    pub fn diagonal(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Coordinate-wise projection onto the box.
    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// A known global optimum of a benchmark problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownOptimum {
    pub position: Vec<f64>,
    /// Internal (minimized) fitness.
    pub fitness: f64,
}

/// Evaluation phases of one optimizer run, used for budget accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Init,
    Clustering,
    LocalOpt,
    Postprocess,
}

impl Phase {
    pub const ALL: [Phase; 4] = [
        Phase::Init,
        Phase::Clustering,
        Phase::LocalOpt,
        Phase::Postprocess,
    ];

    fn index(self) -> usize {
        match self {
            Phase::Init => 0,
            Phase::Clustering => 1,
            Phase::LocalOpt => 2,
            Phase::Postprocess => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::Clustering => "clustering",
            Phase::LocalOpt => "local_opt",
            Phase::Postprocess => "postprocess",
        }
    }
}

/// Fraction of the used evaluations spent in each phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseFractions {
    pub init: f64,
    pub clustering: f64,
    pub local_opt: f64,
    pub postprocess: f64,
}

impl PhaseFractions {
    pub fn get(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Init => self.init,
            Phase::Clustering => self.clustering,
            Phase::LocalOpt => self.local_opt,
            Phase::Postprocess => self.postprocess,
        }
    }

    pub fn total(&self) -> f64 {
        self.init + self.clustering + self.local_opt + self.postprocess
    }
}

/// Hard evaluation budget with per-phase accounting.
///
/// `used` never exceeds `budget`, and always equals the sum over phases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationCounter {
    budget: u64,
    used: u64,
    phase_used: [u64; 4],
}

impl EvaluationCounter {
    pub fn new(budget: u64) -> Self {
        Self {
            budget,
            used: 0,
            phase_used: [0; 4],
        }
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.used
    }

    pub fn is_exhausted(&self) -> bool {
        self.used >= self.budget
    }

    pub fn phase_used(&self, phase: Phase) -> u64 {
        self.phase_used[phase.index()]
    }

    /// Reserves one evaluation for `phase`.
    pub fn try_consume(&mut self, phase: Phase) -> Result<(), EvalError> {
        if self.is_exhausted() {
            return Err(EvalError::BudgetExhausted);
        }
        self.used += 1;
        self.phase_used[phase.index()] += 1;
        Ok(())
    }

    pub fn phase_fractions(&self) -> PhaseFractions {
        if self.used == 0 {
            return PhaseFractions::default();
        }
        let total = self.used as f64;
        let frac = |p: Phase| self.phase_used(p) as f64 / total;
        PhaseFractions {
            init: frac(Phase::Init),
            clustering: frac(Phase::Clustering),
            local_opt: frac(Phase::LocalOpt),
            postprocess: frac(Phase::Postprocess),
        }
    }
}

pub type ObjectiveFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Objective with a bounded domain, a budget, and optional ground truth.
///
/// The stored objective is minimized. For built-in benchmarks `maximize` is
/// set and [`BenchmarkProblem::reported_fitness`] restores the original sign.
#[derive(Clone)]
pub struct BenchmarkProblem {
    id: u32,
    name: String,
    domain: SearchDomain,
    objective: ObjectiveFn,
    known_optima: Vec<KnownOptimum>,
    budget: u64,
    niche_radius: f64,
    maximize: bool,
}

impl fmt::Debug for BenchmarkProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BenchmarkProblem")
            .field("id", &self.id)
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("known_optima", &self.known_optima.len())
            .field("budget", &self.budget)
            .field("niche_radius", &self.niche_radius)
            .finish()
    }
}

impl BenchmarkProblem {
    /// A user-supplied minimization problem without ground truth. Its id is 0.
    pub fn custom<F>(name: impl Into<String>, domain: SearchDomain, objective: F, budget: u64) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let niche_radius = 0.01 * domain.diagonal();
        Self {
            id: 0,
            name: name.into(),
            domain,
            objective: Arc::new(objective),
            known_optima: Vec::new(),
            budget,
            niche_radius,
            maximize: false,
        }
    }

    /// Attaches ground-truth global optima given by position. Their fitness
    /// is computed from the objective, and the niche radius is reset to the
    /// default for the new optimum set.
    pub fn with_known_optima(mut self, positions: Vec<Vec<f64>>) -> Result<Self> {
        let mut optima = Vec::with_capacity(positions.len());
        for position in positions {
            if position.len() != self.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: self.dimension(),
                    found: position.len(),
                });
            }
            if !self.domain.contains(&position) {
                return Err(Error::InvalidDomain(format!(
                    "known optimum {position:?} lies outside the domain"
                )));
            }
            let fitness = self.value(&position);
            optima.push(KnownOptimum { position, fitness });
        }
        self.niche_radius = default_niche_radius(&optima, &self.domain);
        self.known_optima = optima;
        Ok(self)
    }

    pub fn with_niche_radius(mut self, radius: f64) -> Self {
        self.niche_radius = radius;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &SearchDomain {
        &self.domain
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn niche_radius(&self) -> f64 {
        self.niche_radius
    }

    pub fn known_optima(&self) -> &[KnownOptimum] {
        &self.known_optima
    }

    /// Shared internal fitness of the known global optima, if any.
    pub fn optimal_fitness(&self) -> Option<f64> {
        self.known_optima
            .iter()
            .map(|o| o.fitness)
            .min_by(f64::total_cmp)
    }

    pub fn is_maximization(&self) -> bool {
        self.maximize
    }

    /// Internal objective value, without budget accounting.
    pub fn value(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }

    /// Converts an internal fitness to the problem's original sign.
    pub fn reported_fitness(&self, fitness: f64) -> f64 {
        if self.maximize {
            -fitness
        } else {
            fitness
        }
    }
}

/// Half the minimum pairwise distance among the optima; one optimum falls
/// back to 1% of the domain diagonal.
fn default_niche_radius(optima: &[KnownOptimum], domain: &SearchDomain) -> f64 {
    let mut min_dist = f64::INFINITY;
    for (i, a) in optima.iter().enumerate() {
        for b in &optima[i + 1..] {
            min_dist = min_dist.min(distance(&a.position, &b.position));
        }
    }
    if min_dist.is_finite() && min_dist > 0.0 {
        0.5 * min_dist
    } else {
        0.01 * domain.diagonal()
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Evaluates `x`, charging one evaluation to `phase`.
///
/// Returns [`EvalError::BudgetExhausted`] without evaluating when the budget
/// is already spent.
pub fn evaluate(
    problem: &BenchmarkProblem,
    x: &[f64],
    counter: &mut EvaluationCounter,
    phase: Phase,
) -> Result<f64, EvalError> {
    if x.len() != problem.dimension() {
        return Err(EvalError::DimensionMismatch {
            expected: problem.dimension(),
            found: x.len(),
        });
    }
    counter.try_consume(phase)?;
    Ok(problem.value(x))
}

/// An objective that may refuse evaluations once its budget is spent.
pub trait BudgetedObjective {
    fn dimension(&self) -> usize;

    fn evaluate(&mut self, x: &[f64]) -> Result<f64, EvalError>;
}

/// A problem bound to the counter of a single run, charging the current phase.
#[derive(Debug)]
pub struct Evaluator<'a> {
    problem: &'a BenchmarkProblem,
    counter: EvaluationCounter,
    phase: Phase,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a BenchmarkProblem, budget: u64) -> Self {
        Self {
            problem,
            counter: EvaluationCounter::new(budget),
            phase: Phase::Init,
        }
    }

    pub fn problem(&self) -> &'a BenchmarkProblem {
        self.problem
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn counter(&self) -> &EvaluationCounter {
        &self.counter
    }

    pub fn into_counter(self) -> EvaluationCounter {
        self.counter
    }
}

impl BudgetedObjective for Evaluator<'_> {
    fn dimension(&self) -> usize {
        self.problem.dimension()
    }

    fn evaluate(&mut self, x: &[f64]) -> Result<f64, EvalError> {
        evaluate(self.problem, x, &mut self.counter, self.phase)
    }
}

/// Ids of the built-in benchmark problems.
pub const BUILTIN_IDS: std::ops::RangeInclusive<u32> = 1..=10;

const NAMES: [&str; 10] = [
    "five-uneven-peak-trap",
    "equal-maxima",
    "uneven-decreasing-maxima",
    "himmelblau",
    "six-hump-camel-back",
    "shubert-2d",
    "vincent-2d",
    "shubert-3d",
    "vincent-3d",
    "modified-rastrigin",
];

/// Resolves a problem by numeric id or by its kebab-case name.
pub fn problem_by_name(name: &str) -> Result<BenchmarkProblem> {
    let key = name.trim().to_ascii_lowercase();
    if let Ok(id) = key.parse::<u32>() {
        return make_problem(id);
    }
    match NAMES.iter().position(|n| *n == key) {
        Some(i) => make_problem(i as u32 + 1),
        None => Err(Error::UnknownProblem(name.to_owned())),
    }
}

/// Builds benchmark problem `id` (1-10) with its suite budget and known
/// global optima.
pub fn make_problem(id: u32) -> Result<BenchmarkProblem> {
    let (domain, objective, optima, budget): (SearchDomain, ObjectiveFn, Vec<Vec<f64>>, u64) =
        match id {
            1 => (
                SearchDomain::cube(0.0, 30.0, 1)?,
                Arc::new(|x: &[f64]| -five_uneven_peak_trap(x[0])),
                vec![vec![0.0], vec![30.0]],
                50_000,
            ),
            2 => (
                SearchDomain::cube(0.0, 1.0, 1)?,
                Arc::new(|x: &[f64]| -equal_maxima(x[0])),
                (0..5).map(|k| vec![0.1 + 0.2 * k as f64]).collect(),
                50_000,
            ),
            3 => (
                SearchDomain::cube(0.0, 1.0, 1)?,
                Arc::new(|x: &[f64]| -uneven_decreasing_maxima(x[0])),
                vec![vec![UNEVEN_DECREASING_MAXIMUM]],
                50_000,
            ),
            4 => (
                SearchDomain::cube(-6.0, 6.0, 2)?,
                Arc::new(|x: &[f64]| -himmelblau(x)),
                HIMMELBLAU_OPTIMA.iter().map(|p| p.to_vec()).collect(),
                50_000,
            ),
            5 => (
                SearchDomain::new(vec![-1.9, -1.1], vec![1.9, 1.1])?,
                Arc::new(|x: &[f64]| -six_hump_camel_back(x)),
                vec![
                    vec![CAMEL_X, -CAMEL_Y],
                    vec![-CAMEL_X, CAMEL_Y],
                ],
                50_000,
            ),
            6 => (
                SearchDomain::cube(-10.0, 10.0, 2)?,
                Arc::new(|x: &[f64]| -shubert(x)),
                shubert_optima(2),
                200_000,
            ),
            7 => (
                SearchDomain::cube(0.25, 10.0, 2)?,
                Arc::new(|x: &[f64]| -vincent(x)),
                vincent_optima(2),
                200_000,
            ),
            8 => (
                SearchDomain::cube(-10.0, 10.0, 3)?,
                Arc::new(|x: &[f64]| -shubert(x)),
                shubert_optima(3),
                400_000,
            ),
            9 => (
                SearchDomain::cube(0.25, 10.0, 3)?,
                Arc::new(|x: &[f64]| -vincent(x)),
                vincent_optima(3),
                400_000,
            ),
            10 => (
                SearchDomain::cube(0.0, 1.0, 2)?,
                Arc::new(|x: &[f64]| -modified_rastrigin(x)),
                rastrigin_optima(),
                200_000,
            ),
            11..=20 => return Err(Error::UnsupportedProblem(id)),
            _ => return Err(Error::UnknownProblem(id.to_string())),
        };

    BenchmarkProblem {
        id,
        name: NAMES[id as usize - 1].to_owned(),
        domain,
        objective,
        known_optima: Vec::new(),
        budget,
        niche_radius: 0.0,
        maximize: true,
    }
    .with_known_optima(optima)
}

pub fn five_uneven_peak_trap(x: f64) -> f64 {
    if x < 2.5 {
        80.0 * (2.5 - x)
    } else if x < 5.0 {
        64.0 * (x - 2.5)
    } else if x < 7.5 {
        64.0 * (7.5 - x)
    } else if x < 12.5 {
        28.0 * (x - 7.5)
    } else if x < 17.5 {
        28.0 * (17.5 - x)
    } else if x < 22.5 {
        32.0 * (x - 17.5)
    } else if x < 27.5 {
        32.0 * (27.5 - x)
    } else {
        80.0 * (x - 27.5)
    }
}

pub fn equal_maxima(x: f64) -> f64 {
    (5.0 * PI * x).sin().powi(6)
}

pub fn uneven_decreasing_maxima(x: f64) -> f64 {
    let envelope = (-2.0 * std::f64::consts::LN_2 * ((x - 0.08) / 0.854).powi(2)).exp();
    envelope * (5.0 * PI * (x.powf(0.75) - 0.05)).sin().powi(6)
}

pub fn himmelblau(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    200.0 - (a * a + b - 11.0).powi(2) - (a + b * b - 7.0).powi(2)
}

pub fn six_hump_camel_back(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let a2 = a * a;
    let b2 = b * b;
    -4.0 * ((4.0 - 2.1 * a2 + a2 * a2 / 3.0) * a2 + a * b + (4.0 * b2 - 4.0) * b2)
}

fn shubert_factor(v: f64) -> f64 {
    (1..=5)
        .map(|j| {
            let j = j as f64;
            j * ((j + 1.0) * v + j).cos()
        })
        .sum()
}

pub fn shubert(x: &[f64]) -> f64 {
    -x.iter().map(|&v| shubert_factor(v)).product::<f64>()
}

pub fn vincent(x: &[f64]) -> f64 {
    x.iter().map(|&v| (10.0 * v.ln()).sin()).sum::<f64>() / x.len() as f64
}

pub fn modified_rastrigin(x: &[f64]) -> f64 {
    const K: [f64; 2] = [3.0, 4.0];
    -x.iter()
        .zip(K)
        .map(|(&v, k)| 10.0 + 9.0 * (2.0 * PI * k * v).cos())
        .sum::<f64>()
}

// Stationary points refined offline to full double precision; the grid-scan
// tests re-derive them independently.
const UNEVEN_DECREASING_MAXIMUM: f64 = 0.079_699_779_611_795_82;

const HIMMELBLAU_OPTIMA: [[f64; 2]; 4] = [
    [3.0, 2.0],
    [-2.805_118_086_952_745, 3.131_312_518_250_573],
    [-3.779_310_253_377_747, -3.283_185_991_286_169_4],
    [3.584_428_340_330_491_7, -1.848_126_526_964_403_5],
];

const CAMEL_X: f64 = 0.089_842_013_100_318_06;
const CAMEL_Y: f64 = 0.712_656_403_020_739_6;

/// Minimizers and maximizers of `sum_j j cos((j+1) v + j)` on [-10, 10].
const SHUBERT_FACTOR_MINIMA: [f64; 3] = [
    -7.708_313_735_499_347,
    -1.425_128_428_319_761,
    4.858_056_878_859_825,
];
const SHUBERT_FACTOR_MAXIMA: [f64; 3] = [
    -7.083_506_407_651_559_6,
    -0.800_321_100_471_973_1,
    5.482_864_206_707_613,
];

/// The Shubert product is minimal (its negation maximal) with exactly one
/// coordinate at a factor minimum and the others at factor maxima.
fn shubert_optima(d: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for negative in 0..d {
        let mut stack: Vec<Vec<f64>> = vec![Vec::new()];
        for coord in 0..d {
            let choices: &[f64] = if coord == negative {
                &SHUBERT_FACTOR_MINIMA
            } else {
                &SHUBERT_FACTOR_MAXIMA
            };
            stack = stack
                .into_iter()
                .flat_map(|prefix| {
                    choices.iter().map(move |&c| {
                        let mut p = prefix.clone();
                        p.push(c);
                        p
                    })
                })
                .collect();
        }
        out.extend(stack);
    }
    out
}

/// `sin(10 ln v) = 1` at `v = exp((pi/2 + 2 pi k) / 10)`; six of these lie in
/// [0.25, 10].
fn vincent_optima(d: usize) -> Vec<Vec<f64>> {
    let roots: Vec<f64> = (-2..=3)
        .map(|k| ((PI / 2.0 + 2.0 * PI * k as f64) / 10.0).exp())
        .collect();
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                roots.iter().map(move |&r| {
                    let mut p = prefix.clone();
                    p.push(r);
                    p
                })
            })
            .collect();
    }
    out
}

/// `cos(2 pi k v) = -1` at `v = (2m + 1) / (2k)`.
fn rastrigin_optima() -> Vec<Vec<f64>> {
    let xs: Vec<f64> = (0..3).map(|m| (2 * m + 1) as f64 / 6.0).collect();
    let ys: Vec<f64> = (0..4).map(|m| (2 * m + 1) as f64 / 8.0).collect();
    xs.iter()
        .flat_map(|&x| ys.iter().map(move |&y| vec![x, y]))
        .collect()
}
