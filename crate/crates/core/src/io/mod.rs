//! Configuration parsing, checkpoints and report emission.

pub mod checkpoint;
pub mod config;
pub mod report;

pub use checkpoint::{read_checkpoint, read_state_for, write_checkpoint, Checkpoint};
pub use config::{parse_config, ReportFormat, RunConfig, SystemKind};
pub use report::{emit_report, report_csv, report_human, report_json_lines};
