//! Experiment configuration, orchestration, count files and reports.

pub mod config;
pub mod plot;
pub mod report;
pub mod run;
pub mod table;

pub use config::{Experiment, ExperimentConfig};
pub use plot::emit_plot_data;
pub use report::{analyze_table, AnalysisOptions, Report};
pub use run::{analyze_file, run_experiment, simulate, RunOutput, Simulation};
pub use table::CountTable;
