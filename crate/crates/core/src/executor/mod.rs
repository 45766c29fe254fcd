//! Trial execution: one job run at one parameter assignment, repeated and timed.
//!
//! Three implementations share the [`Executor`] contract:
//! [`SyntheticExecutor`] evaluates a closed-form response surface,
//! [`LocalExecutor`] times a local shell command, and [`RemoteExecutor`]
//! submits a Hadoop job over SSH and collects logs and outputs.

mod local;
mod phases;
pub mod process;
mod remote;
mod synthetic;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::paramspace::{SpaceError, TrialPoint};

pub use local::{run_local_command, template_placeholders, LocalExecutor};
pub use phases::parse_phase_times;
pub use remote::{assemble_hadoop_command, remote_run_job, RemoteExecutor, RemoteOutput, RemoteShell, SshShell};
pub use synthetic::{synthetic_eval, LookupTable, SurfaceFamily, SurfaceSpec, SyntheticExecutor};

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("cannot reach cluster: {0}")]
    ConnectFailure(String),
    #[error("staging failed: {0}")]
    StagingFailure(String),
    #[error("unknown placeholder `{{{0}}}` in command template")]
    UnknownPlaceholder(String),
    #[error("failed to spawn command: {0}")]
    SpawnFailure(#[source] std::io::Error),
    #[error("dimension mismatch: surface expects {expected}, point has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid surface: {0}")]
    InvalidSurface(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// What to run for each trial.
#[derive(Debug, Clone, PartialEq)]
pub struct JobSpec {
    /// Jar path (remote) or command template (local).
    pub artifact: String,
    pub main_entry: Option<String>,
    pub static_args: Vec<String>,
    pub timeout_s: f64,
    pub repetitions: u32,
    /// Delete the job output path before every repetition.
    pub cleanup_output: bool,
}

impl JobSpec {
    pub fn new(artifact: impl Into<String>) -> Self {
        Self {
            artifact: artifact.into(),
            main_entry: None,
            static_args: Vec::new(),
            timeout_s: 3600.0,
            repetitions: 1,
            cleanup_output: false,
        }
    }

    pub fn with_repetitions(mut self, n: u32) -> Self {
        self.repetitions = n;
        self
    }

    pub fn with_timeout(mut self, secs: f64) -> Self {
        self.timeout_s = secs;
        self
    }

    pub fn timeout(&self) -> std::time::Duration {
        std::time::Duration::from_secs_f64(self.timeout_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Success,
    Failed,
    Timeout,
}

impl TrialStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialStatus::Success => "success",
            TrialStatus::Failed => "failed",
            TrialStatus::Timeout => "timeout",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "success" => Some(TrialStatus::Success),
            "failed" => Some(TrialStatus::Failed),
            "timeout" => Some(TrialStatus::Timeout),
            _ => None,
        }
    }
}

/// Per-phase durations in seconds; absent phases were not found in the logs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub map: Option<f64>,
    pub shuffle: Option<f64>,
    pub reduce: Option<f64>,
}

impl PhaseTimes {
    pub fn is_empty(&self) -> bool {
        self.map.is_none() && self.shuffle.is_none() && self.reduce.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub status: TrialStatus,
    pub rep_times_s: Vec<f64>,
    pub phase_times_s: Option<PhaseTimes>,
    pub result_dir: Option<PathBuf>,
    pub log_ref: Option<String>,
}

impl TrialResult {
    pub fn success(rep_times_s: Vec<f64>) -> Self {
        Self {
            status: TrialStatus::Success,
            rep_times_s,
            phase_times_s: None,
            result_dir: None,
            log_ref: None,
        }
    }

    pub fn with_status(status: TrialStatus, rep_times_s: Vec<f64>) -> Self {
        Self {
            status,
            ..Self::success(rep_times_s)
        }
    }
}

/// Where a Hadoop cluster lives and how to reach it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterEnv {
    pub master_host: String,
    pub port: u16,
    pub user: String,
    pub auth_key_path: PathBuf,
    pub remote_workdir: String,
    pub hadoop_home: String,
    pub history_log_dir: String,
}

/// Runs one trial. Implementations are used by one session at a time.
pub trait Executor {
    /// Called once before the first trial of a session; infrastructure
    /// problems surface here rather than as failed trials.
    fn prepare(&mut self) -> Result<(), ExecError> {
        Ok(())
    }

    /// Executes the job `job.repetitions` times at `point`.
    ///
    /// Job-level failures are reported through [`TrialResult::status`]; an
    /// `Err` means the session cannot continue.
    fn execute_trial(
        &mut self,
        job: &JobSpec,
        point: &TrialPoint,
        trial_id: u64,
    ) -> Result<TrialResult, ExecError>;
}

impl<E: Executor + ?Sized> Executor for Box<E> {
    fn prepare(&mut self) -> Result<(), ExecError> {
        (**self).prepare()
    }

    fn execute_trial(
        &mut self,
        job: &JobSpec,
        point: &TrialPoint,
        trial_id: u64,
    ) -> Result<TrialResult, ExecError> {
        (**self).execute_trial(job, point, trial_id)
    }
}
