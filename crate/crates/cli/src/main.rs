use std::process::ExitCode;

use clap::Parser;
use hillvallea_cli::{output, run_sweep, Args, Settings};

fn run() -> anyhow::Result<()> {
    let settings = Settings::from_args(Args::parse())?;
    let result = run_sweep(&settings)?;
    for a in &result.aggregates {
        eprintln!(
            "problem {:>2} {}: mean peak ratio {:.3} (min {:.3}, max {:.3}) over {} run(s), {:.0} evaluations",
            a.problem_id, a.kind, a.mean_peak_ratio, a.min_peak_ratio, a.max_peak_ratio, a.runs, a.mean_evaluations
        );
    }
    match &settings.out {
        Some(path) => {
            for written in output::write_files(&result, path, settings.format)? {
                eprintln!("wrote {}", written.display());
            }
        }
        None => output::write_stdout(&result)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
