//! JSON and CSV writers.
//!
//! With `--out results.json` the runs and aggregates go to `results.json` and
//! traces to `results.trace.json`. CSV output writes runs to `results.csv`,
//! aggregates to `results.aggregates.csv` and traces to
//! `results.trace.csv`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::settings::Format;
use crate::sweep::SweepOutput;

#[derive(Serialize)]
struct Document<'a, R, A> {
    runs: &'a [R],
    aggregates: &'a [A],
}

/// `dir/stem.json` with `suffix` → `dir/stem.suffix.json`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.{suffix}.{ext}"),
        None => format!("{stem}.{suffix}"),
    };
    path.with_file_name(name)
}

pub fn write_stdout(output: &SweepOutput) -> Result<()> {
    let stdout = io::stdout();
    let mut w = stdout.lock();
    serde_json::to_writer_pretty(&mut w, output)?;
    writeln!(w)?;
    Ok(())
}

/// Writes every file of the sweep and returns their paths.
pub fn write_files(output: &SweepOutput, path: &Path, format: Format) -> Result<Vec<PathBuf>> {
    let mut written = vec![path.to_path_buf()];
    match format {
        Format::Json => {
            write_json(
                path,
                &Document {
                    runs: &output.runs,
                    aggregates: &output.aggregates,
                },
            )?;
            if !output.traces.is_empty() {
                let trace = sibling(path, "trace");
                write_json(&trace, &output.traces)?;
                written.push(trace);
            }
        }
        Format::Csv => {
            write_csv(path, &output.runs)?;
            let aggregates = sibling(path, "aggregates");
            write_csv(&aggregates, &output.aggregates)?;
            written.push(aggregates);
            if !output.traces.is_empty() {
                let trace = sibling(path, "trace");
                write_csv(&trace, &output.traces)?;
                written.push(trace);
            }
        }
    }
    Ok(written)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
