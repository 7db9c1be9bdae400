//! Filter-learning and node-classification benchmarks.

pub mod classification;
pub mod filter_bench;
pub mod tasks;

pub use classification::{
    ablation_suite, run_node_classification, AblationConfig, AblationReport, AblationVariant, ClassificationReport,
    ClassifierConfig, SplitRatios,
};
pub use filter_bench::{run_filter_bench, BenchReport, FilterBenchConfig};
pub use tasks::{make_filter_tasks, FilterTask, FilterTaskSet};
