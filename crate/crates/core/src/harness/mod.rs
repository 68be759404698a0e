//! Experiment plumbing: seeds, warmup, traces, config files, result output.
pub mod config;
pub mod prefill;
pub mod run;
pub mod seed;
pub mod trace;
pub use config::{AesSpec, BenchSpec, ExperimentConfig, ExperimentKind, FingerprintSpec, OutputFormat, SweepSpec};
pub use prefill::{spurious_prefill, warm_up, Warmup};
pub use run::{bench, config_digest, render, run_and_write, run_experiment, ExperimentOutput};
pub use seed::{component_rng, sub_seed};
pub use trace::{load_trace, parse_trace, Trace, TraceEntry};
