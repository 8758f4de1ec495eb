//! Configuration, experiment orchestration and result persistence.

mod config;
mod record;
mod run;
mod sweep;

pub use config::{parse_f64_list, parse_int_list, ExperimentConfig, ExperimentKind};
pub use record::{
    csv_header, export, import_csv, import_json_lines, schema, ExportFormat, Field, FieldType, RunRecord,
};
pub use run::{cells, replicates, Cell};
pub use sweep::{derive_seed, run_experiment, sweep, SweepOptions, SweepOutcome, DEFAULT_MAX_RUNS};
