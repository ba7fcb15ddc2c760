//! Configuration, certificate and orchestration for the `cftransfer` command line.

pub mod config;
pub mod pipeline;

pub use config::{FitConfig, HolderConfig, PipelineConfig, PlanKindConfig};
pub use pipeline::{run_transfer_pipeline, PipelineCertificate, PipelineError, StageRecord, StageStatus, CERTIFICATE_SCHEMA};

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const VERIFICATION_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
}
