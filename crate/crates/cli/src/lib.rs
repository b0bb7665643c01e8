//! Benchmark harness behind the `hillvallea` binary: flag and config-file
//! handling, repetition sweeps and result files.

pub mod output;
pub mod settings;
pub mod sweep;

pub use settings::{Args, Format, Settings};
pub use sweep::{run_sweep, AggregateRecord, RunRecord, SweepOutput, TraceRecord};
