//! Experiment orchestration: config files, the two-stage pipeline, the
//! monolithic baseline, curve merging and plots, robustness probes, random
//! hyperparameter search, and output manifests.
//!
//! Every run is a single process writing into one per-run output directory;
//! the manifest (written last) lists a SHA-256 for each artifact so reruns
//! can be compared byte for byte.

mod cli;
mod config;
mod curves;
mod manifest;
mod robustness;
mod run;
mod search;

pub use cli::{cli_main, Cli};
pub use config::{
    load_config, ExperimentConfig, ExperimentSection, ImitationSection, PpoOverrides,
    QuadSection, RobustnessSection, RocketSection, SearchSection, StagesSection,
};
pub use curves::{
    curve_rows, load_curve_csv, merge_two_stage, write_curves_svg, CurveRow, MergedCurve,
    MergedRow, SvgSeries,
};
pub use manifest::{Manifest, ManifestEntry, ManifestIssue};
pub use robustness::{eval_robustness, RobustnessReport, RobustnessRow, RobustnessSuite};
pub use run::{
    evaluate_deterministic, run_baseline, run_imitate_only, run_plan_only, run_two_stage,
    BaselineArtifacts, EvalSummary, PlanArtifacts, TwoStageArtifacts, BASELINE_CHECKPOINT_FILE,
    BASELINE_CURVE_FILE, CURVES_SVG_FILE, IMITATION_CHECKPOINT_FILE, IMITATION_CURVE_FILE,
    MANIFEST_FILE, MERGED_CURVE_FILE, PLANNER_CHECKPOINT_FILE, PLAN_CURVE_FILE,
    QUAD_TRAJECTORY_FILE, TRAJECTORY_FILE,
};
pub use search::{random_search, write_search_csv, SearchSpace, TrialRow};

use thiserror::Error;

/// Pipeline failures, partitioned by how the process should exit:
/// bad input (2), a stage gate stopping the run (3), anything else (4).
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error(
        "stage gate: planner finished {distance:.3} m from the goal \
         (threshold {threshold} m); not training an imitator on a plan \
         that never arrives"
    )]
    StageGate { distance: f64, threshold: f64 },
    #[error("{0}")]
    Runtime(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::StageGate { .. } => 3,
            PipelineError::Runtime(_) => 4,
        }
    }

    pub(crate) fn runtime(context: &str, err: impl std::fmt::Display) -> Self {
        PipelineError::Runtime(format!("{context}: {err}"))
    }
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Runtime(format!("I/O: {e}"))
    }
}

impl From<crate::ppo::TrainError> for PipelineError {
    fn from(e: crate::ppo::TrainError) -> Self {
        match e {
            crate::ppo::TrainError::Config(c) => PipelineError::Config(c.to_string()),
            other => PipelineError::Runtime(other.to_string()),
        }
    }
}

impl From<crate::rocket::TrajectoryError> for PipelineError {
    fn from(e: crate::rocket::TrajectoryError) -> Self {
        PipelineError::Runtime(format!("reference trajectory: {e}"))
    }
}

impl From<crate::nn::CheckpointError> for PipelineError {
    fn from(e: crate::nn::CheckpointError) -> Self {
        PipelineError::Runtime(format!("checkpoint: {e}"))
    }
}

impl From<crate::quad::QuadTrajectoryError> for PipelineError {
    fn from(e: crate::quad::QuadTrajectoryError) -> Self {
        PipelineError::Runtime(format!("quad trajectory: {e}"))
    }
}
