//! Benchmark workload: query templates, synthetic data, brute-force oracle
//! and the benchmark runner.

pub mod bench;
pub mod datagen;
pub mod oracle;
mod templates;

pub use bench::{run_bench, BenchConfig, ReportRow, SELECTIVITIES};
pub use datagen::{from_vectors, generate, generate_clustered, load, ClusterSpec, Dataset, DatasetConfig};
pub use oracle::{calibrate_threshold, oracle, recall, recall_by_query, QueryParams};
pub use templates::{example_catalog, example_params, items_schema, queries_schema, Template};
