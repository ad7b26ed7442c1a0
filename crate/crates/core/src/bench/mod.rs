//! Benchmark scenarios, leave-one-out evaluation and report output.

pub mod report;
pub mod run;
pub mod scenario;

pub use report::{emit_report, ReportFormat};
pub use run::{
    loocv_folds, run_bench, run_inference_bench, run_prediction_bench, BenchConfig, BenchReport,
    BenchRow, Method,
};
pub use scenario::{builtin_scenario, Scenario, ScenarioName};
