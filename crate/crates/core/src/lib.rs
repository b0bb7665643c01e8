//! Multi-modal continuous black-box optimization driven by Hill-Valley
//! clustering.
//!
//! The crate is organised bottom-up:
//!
//! - [`problems`]: the problem contract, budgeted evaluation and the ten
//!   non-composition niching benchmark functions.
//! - [`hillvalley`]: the Hill-Valley test and Hill-Valley clustering.
//! - [`search`]: Gaussian core search algorithms (CMSA and AMaLGaM-style
//!   EDAs) that optimize a single niche.
//! - [`optimizer`]: the restart scheme with an elitist archive (HillVallEA).
//! - [`evaluation`]: peak ratio and repetition aggregation.
//!
//! All objectives are minimized internally. Benchmark functions, which are
//! maximization problems, are negated on construction.

pub mod error;
pub mod evaluation;
pub mod hillvalley;
mod neighbours;
pub mod optimizer;
pub mod problems;
pub mod search;

pub use error::{Error, EvalError, Result};
pub use evaluation::{aggregate, peak_ratio, Aggregate, PeakRatioReport};
pub use hillvalley::{
    cluster_selection, expected_edge_length, hill_valley_clustering, hill_valley_test,
    test_point_count, Cluster, ClusterSet, EdgeLength, HillValleyOutcome, Solution,
};
pub use optimizer::{
    postprocess, run_hillvallea, truncation_selection, uniform_sample, ElitistArchive,
    InjectionMode, OptimizerConfig, RunResult,
};
pub use problems::{
    evaluate, make_problem, BenchmarkProblem, BudgetedObjective, EvaluationCounter, Evaluator,
    KnownOptimum, Phase, SearchDomain,
};
pub use search::{Searcher, SearcherConfig, SearcherKind, TerminationReason};
