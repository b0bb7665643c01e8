//! Runs the (problem, algorithm, repetition) grid and turns results into flat records.

use std::time::Instant;

use anyhow::{Context, Result};
use hillvallea::optimizer::RunResult;
use hillvallea::{aggregate, make_problem, peak_ratio, run_hillvallea, PeakRatioReport, SearcherKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::settings::Settings;

/// One run, as written to the output files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem_id: u32,
    pub kind: String,
    pub seed: u64,
    pub evaluations_used: u64,
    pub peak_ratio: f64,
    pub n_elites: usize,
    pub restarts: usize,
    pub phase_init: f64,
    /// Clustering plus the distinctness tests of post-processing.
    pub phase_hvc: f64,
    pub phase_lopt: f64,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub problem_id: u32,
    pub kind: String,
    pub runs: usize,
    pub mean_peak_ratio: f64,
    pub min_peak_ratio: f64,
    pub max_peak_ratio: f64,
    pub mean_evaluations: f64,
    pub mean_phase_init: f64,
    pub mean_phase_hvc: f64,
    pub mean_phase_lopt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub problem_id: u32,
    pub kind: String,
    pub seed: u64,
    pub evaluations: u64,
    pub peak_ratio: f64,
    pub archive_size: usize,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<AggregateRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub traces: Vec<TraceRecord>,
}

struct Finished {
    result: RunResult,
    report: PeakRatioReport,
    wall_time_ms: u64,
}

pub fn run_sweep(settings: &Settings) -> Result<SweepOutput> {
    let mut tasks: Vec<(u32, SearcherKind, u64)> = Vec::new();
    for &id in &settings.problems {
        for &kind in &settings.kinds {
            tasks.extend((0..settings.reps as u64).map(|r| (id, kind, settings.seed.wrapping_add(r))));
        }
    }

    let run_one = |&(id, kind, seed): &(u32, SearcherKind, u64)| -> Result<Finished> {
        let problem = make_problem(id)?;
        let mut config = settings.optimizer.clone();
        config.budget = Some(settings.budget_for(&problem));
        let started = Instant::now();
        let result =
            run_hillvallea(&problem, kind, &config, seed).with_context(|| format!("problem {id}, {kind}, seed {seed}"))?;
        let wall_time_ms = started.elapsed().as_millis() as u64;
        let report = peak_ratio(&result.optima(), &problem, settings.epsilon);
        Ok(Finished {
            result,
            report,
            wall_time_ms,
        })
    };

    let finished: Vec<Finished> = if settings.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(settings.jobs).build()?;
        pool.install(|| tasks.par_iter().map(run_one).collect::<Result<_>>())?
    } else {
        tasks.iter().map(run_one).collect::<Result<_>>()?
    };

    let mut output = SweepOutput::default();
    for f in &finished {
        output.runs.push(run_record(f));
        if let Some(step) = settings.trace {
            output.traces.extend(trace_records(&f.result, step));
        }
    }
    for (&id, &kind) in settings.problems.iter().flat_map(|id| settings.kinds.iter().map(move |k| (id, k))) {
        let group: Vec<(RunResult, PeakRatioReport)> = finished
            .iter()
            .filter(|f| f.result.problem_id == id && f.result.kind == kind)
            .map(|f| (f.result.clone(), f.report.clone()))
            .collect();
        if let Some(a) = aggregate(&group) {
            output.aggregates.push(AggregateRecord {
                problem_id: id,
                kind: kind.to_string(),
                runs: a.runs,
                mean_peak_ratio: a.mean_ratio,
                min_peak_ratio: a.min_ratio,
                max_peak_ratio: a.max_ratio,
                mean_evaluations: a.mean_evaluations,
                mean_phase_init: a.mean_phase_fractions.init,
                mean_phase_hvc: a.mean_phase_fractions.clustering + a.mean_phase_fractions.postprocess,
                mean_phase_lopt: a.mean_phase_fractions.local_opt,
            });
        }
    }
    Ok(output)
}

fn run_record(f: &Finished) -> RunRecord {
    let phases = f.result.phase_fractions();
    RunRecord {
        problem_id: f.result.problem_id,
        kind: f.result.kind.to_string(),
        seed: f.result.seed,
        evaluations_used: f.result.evaluations_used(),
        peak_ratio: f.report.ratio,
        n_elites: f.result.archive.len(),
        restarts: f.result.restarts,
        phase_init: phases.init,
        phase_hvc: phases.clustering + phases.postprocess,
        phase_lopt: phases.local_opt,
        wall_time_ms: f.wall_time_ms,
    }
}

/// Samples the archive history every `step` evaluations up to the end of the
/// run. The archive only changes at the end of a restart, so each row shows
/// the latest restart that finished at or before its evaluation count.
pub fn trace_records(result: &RunResult, step: u64) -> Vec<TraceRecord> {
    let end = result.evaluations_used();
    let mut rows = Vec::new();
    let mut next = 0;
    let mut at = step.min(end);
    loop {
        while next < result.trace.len() && result.trace[next].evaluations <= at {
            next += 1;
        }
        let (ratio, size) = match next.checked_sub(1).map(|i| &result.trace[i]) {
            Some(p) => (p.peak_ratio.unwrap_or(0.0), p.archive_size),
            None => (0.0, 0),
        };
        rows.push(TraceRecord {
            problem_id: result.problem_id,
            kind: result.kind.to_string(),
            seed: result.seed,
            evaluations: at,
            peak_ratio: ratio,
            archive_size: size,
        });
        if at >= end {
            break;
        }
        at = (at + step).min(end);
    }
    rows
}
