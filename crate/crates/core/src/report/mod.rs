//! Experiment configuration, orchestration and report files.

mod bundle;
mod config;
mod run;

pub use bundle::{
    strip_timestamp, to_csv, to_ndjson, to_text, verify_certificate, verify_text, write_atomic,
    write_reports, VerifyOutcome, CURVES_CSV, REPORT_NDJSON, REPORT_TXT,
};
pub use config::{
    Budgets, DensityConfig, ExperimentConfig, MixingConfig, NoiseConfig, OutputConfig,
    SCHEMA_VERSION,
};
pub use run::{
    build_model, build_schedule, expected_probe_count, iid_step_law, probe_options,
    run_experiment, CurveRow, Provenance, ReportBundle, Summary, BERRY_ESSEEN_C, IID_WINDOWS,
};
