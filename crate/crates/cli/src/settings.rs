//! Command-line flags, `key = value` configuration files and their merge.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, ValueEnum};
use hillvallea::hillvalley::EdgeLength;
use hillvallea::problems::problem_by_name;
use hillvallea::{make_problem, BenchmarkProblem, OptimizerConfig, SearcherKind};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Benchmark sweeps of the Hill-Valley evolutionary algorithm.
///
/// Every flag can also be given in a `--config` file as `key = value`
/// (flag name without dashes); flags take precedence over the file.
#[derive(Debug, Default, Parser)]
#[command(name = "hillvallea", version, about)]
pub struct Args {
    /// Problem ids, ranges or names, e.g. `1-5,10` or `himmelblau`.
    #[arg(long)]
    pub problems: Option<String>,
    /// Core search algorithms, comma separated: cmsa, am, amu, iam, iamu.
    #[arg(long)]
    pub algo: Option<String>,
    /// Repetitions per problem.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Base seed; repetition r uses seed + r.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evaluation budget replacing the problem's default.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Multiplies the budget.
    #[arg(long)]
    pub budget_multiplier: Option<f64>,
    /// Fitness tolerance separating global from local optima.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Fitness accuracy of the peak ratio.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Archived optima injected on restart: all, global or none.
    #[arg(long)]
    pub injection: Option<String>,
    /// Write convergence traces with this many evaluations between rows.
    #[arg(long, value_name = "N")]
    pub trace: Option<u64>,
    /// Output file; JSON goes to stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format; defaults to the extension of `--out`, else json.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Parallel runs.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// `key = value` file with flag values and algorithm constants.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

/// A fully resolved sweep.
#[derive(Debug, Clone)]
pub struct Settings {
    pub problems: Vec<u32>,
    pub kinds: Vec<SearcherKind>,
    pub reps: usize,
    pub seed: u64,
    pub budget: Option<u64>,
    pub budget_multiplier: Option<f64>,
    pub epsilon: f64,
    pub trace: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub jobs: usize,
    pub optimizer: OptimizerConfig,
}

impl Settings {
    pub fn from_args(args: Args) -> Result<Self> {
        let file = match &args.config {
            Some(path) => read_config_file(path)?,
            None => Args::default(),
        };
        let mut optimizer = OptimizerConfig::default();
        let mut epsilon = 1e-5;
        if let Some(path) = &args.config {
            apply_constants(path, &mut optimizer)?;
        }
        let pick = |flag: Option<String>, file: Option<String>| flag.or(file);

        let problems = parse_problem_list(&pick(args.problems, file.problems).unwrap_or_else(|| "1-10".into()))?;
        let kinds = parse_kind_list(&pick(args.algo, file.algo).unwrap_or_else(|| "amu".into()))?;
        if let Some(injection) = pick(args.injection, file.injection) {
            optimizer.injection = injection.parse()?;
        }
        if let Some(tol) = args.tol.or(file.tol) {
            optimizer.tol = tol;
        }
        if let Some(e) = args.epsilon.or(file.epsilon) {
            epsilon = e;
        }
        optimizer.trace_epsilon = epsilon;

        let settings = Settings {
            problems,
            kinds,
            reps: args.reps.or(file.reps).unwrap_or(1),
            seed: args.seed.or(file.seed).unwrap_or(0),
            budget: args.budget.or(file.budget),
            budget_multiplier: args.budget_multiplier.or(file.budget_multiplier),
            epsilon,
            trace: args.trace.or(file.trace),
            format: args
                .format
                .or(file.format)
                .unwrap_or_else(|| format_from_path(args.out.as_deref().or(file.out.as_deref()))),
            out: args.out.or(file.out),
            jobs: args.jobs.or(file.jobs).unwrap_or(1),
            optimizer,
        };
        settings.validate()?;
        Ok(settings)
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            bail!("--reps must be at least 1");
        }
        if let Some(m) = self.budget_multiplier {
            if !(m > 0.0 && m.is_finite()) {
                bail!("--budget-multiplier must be positive, got {m}");
            }
        }
        if self.budget == Some(0) {
            bail!("--budget must be positive");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            bail!("--epsilon must be positive, got {}", self.epsilon);
        }
        if self.trace == Some(0) {
            bail!("--trace must be positive");
        }
        if self.jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        if self.format == Format::Csv && self.out.is_none() {
            bail!("CSV output needs --out");
        }
        self.optimizer.validate()?;
        Ok(())
    }

    /// Budget of a run on `problem` after override and multiplier.
    pub fn budget_for(&self, problem: &BenchmarkProblem) -> u64 {
        let base = self.budget.unwrap_or(problem.budget());
        match self.budget_multiplier {
            Some(m) => ((base as f64) * m).round().max(1.0) as u64,
            None => base,
        }
    }
}

fn format_from_path(path: Option<&Path>) -> Format {
    match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
        _ => Format::Json,
    }
}

/// Parses `1-5,10,himmelblau` into problem ids, keeping order and dropping
/// repeats.
/// Parses `amu,cmsa` into searcher kinds, dropping repeats.
pub fn parse_kind_list(list: &str) -> Result<Vec<SearcherKind>> {
    let mut kinds = Vec::new();
    for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let kind: SearcherKind = token.parse()?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        bail!("no algorithm given");
    }
    Ok(kinds)
}

pub fn parse_problem_list(spec: &str) -> Result<Vec<u32>> {
    let mut ids = Vec::new();
    for token in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let range = token
            .split_once('-')
            .and_then(|(a, b)| Some((a.trim().parse::<u32>().ok()?, b.trim().parse::<u32>().ok()?)));
        let batch: Vec<u32> = match range {
            Some((a, b)) if a <= b => (a..=b).collect(),
            Some((a, b)) => bail!("empty problem range {a}-{b}"),
            None => vec![problem_by_name(token)?.id()],
        };
        for id in batch {
            make_problem(id)?;
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
    }
    if ids.is_empty() {
        bail!("no problems selected");
    }
    Ok(ids)
}

fn config_lines(path: &Path) -> Result<Vec<(usize, String, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected `key = value`", path.display(), n + 1))?;
        out.push((n + 1, key.trim().replace('-', "_"), value.trim().to_string()));
    }
    Ok(out)
}

const FLAG_KEYS: [&str; 13] = [
    "problems",
    "algo",
    "reps",
    "seed",
    "budget",
    "budget_multiplier",
    "tol",
    "epsilon",
    "injection",
    "trace",
    "out",
    "format",
    "jobs",
];

fn read_config_file(path: &Path) -> Result<Args> {
    let mut args = Args::default();
    for (line, key, value) in config_lines(path)? {
        let at = || format!("{}:{line}: invalid value for `{key}`", path.display());
        match key.as_str() {
            "problems" => args.problems = Some(value),
            "algo" => args.algo = Some(value),
            "reps" => args.reps = Some(value.parse().with_context(at)?),
            "seed" => args.seed = Some(value.parse().with_context(at)?),
            "budget" => args.budget = Some(value.parse().with_context(at)?),
            "budget_multiplier" => args.budget_multiplier = Some(value.parse().with_context(at)?),
            "tol" => args.tol = Some(value.parse().with_context(at)?),
            "epsilon" => args.epsilon = Some(value.parse().with_context(at)?),
            "injection" => args.injection = Some(value),
            "trace" => args.trace = Some(value.parse().with_context(at)?),
            "out" => args.out = Some(PathBuf::from(value)),
            "format" => args.format = Some(Format::from_str(&value, true).map_err(|e| anyhow!(e)).with_context(at)?),
            "jobs" => args.jobs = Some(value.parse().with_context(at)?),
            _ => {}
        }
    }
    Ok(args)
}

/// Applies the algorithm constants of a config file: any scalar field of the
/// optimizer or searcher configuration, plus `edge_length`.
fn apply_constants(path: &Path, optimizer: &mut OptimizerConfig) -> Result<()> {
    let mut tree = serde_json::to_value(&*optimizer)?;
    for (line, key, value) in config_lines(path)? {
        if FLAG_KEYS.contains(&key.as_str()) {
            continue;
        }
        if key == "edge_length" {
            let edge = match value.as_str() {
                "expected" => Value::Null,
                "average_nearest_better" => serde_json::to_value(EdgeLength::AverageNearestBetter)?,
                other => bail!("{}:{line}: unknown edge length `{other}`", path.display()),
            };
            tree["edge_length"] = edge;
            continue;
        }
        let parsed = serde_json::from_str::<Value>(&value).unwrap_or(Value::String(value.clone()));
        let slot = if tree.get(&key).is_some_and(|v| !v.is_object()) {
            &mut tree[&key]
        } else if tree["searcher"].get(&key).is_some() {
            &mut tree["searcher"][&key]
        } else {
            bail!("{}:{line}: unknown key `{key}`", path.display());
        };
        *slot = parsed;
    }
    *optimizer = serde_json::from_value(tree).with_context(|| format!("invalid constants in {}", path.display()))?;
    Ok(())
}
