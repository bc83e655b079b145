//! Experiment machinery: file formats, trial harness, theoretical iteration
//! curves and density clustering of trial errors.

pub mod dbscan;
pub mod harness;
pub mod io;
pub mod theory;

pub use dbscan::{dbscan_1d, ClusterResult};
pub use harness::{
    derive_seed, ground_truth_error, outer_iterations_to_success, records_csv, run_benchmark,
    run_method, summary_csv, BenchConfig, BenchInput, BenchReport, GroupSummary, Method,
    TrialRecord, SUCCESS_THRESHOLD,
};
pub use io::{
    format_correspondences, format_result, load_correspondences, parse_correspondences,
    save_correspondences, save_result, CorrespondenceSet, FormatError, MethodConfig,
};
pub use theory::{linspace, theory_curves, theory_csv, TheoryRow};
