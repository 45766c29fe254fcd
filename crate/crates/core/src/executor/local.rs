//! Desk-scale executor: times a local shell command per repetition.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use super::process::run_captured;
use super::{parse_phase_times, ExecError, Executor, JobSpec, TrialResult, TrialStatus};
use crate::paramspace::{validate_point, ParamSpace, SpaceError, TrialPoint};

/// Names of the `{placeholder}`s in `template`, in order of appearance.
pub fn template_placeholders(template: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                out.push(&after[..close]);
                rest = &after[close + 1..];
            }
            None => break,
        }
    }
    out
}

fn substitute(template: &str, point: &TrialPoint) -> Result<String, ExecError> {
    for name in template_placeholders(template) {
        if point.get(name).is_none() {
            return Err(ExecError::UnknownPlaceholder(name.to_string()));
        }
    }
    let mut cmd = template.to_string();
    for (name, value) in point.iter() {
        cmd = cmd.replace(&format!("{{{name}}}"), &value.to_string());
    }
    Ok(cmd)
}

/// Runs `template` (after placeholder substitution) once per repetition via
/// `sh -c`, timing each run from spawn to exit. Stops at the first failing or
/// timed-out repetition.
pub fn run_local_command(template: &str, point: &TrialPoint, job: &JobSpec) -> Result<TrialResult, ExecError> {
    run_in(template, point, job, None, None)
}

fn run_in(
    template: &str,
    point: &TrialPoint,
    job: &JobSpec,
    workdir: Option<&Path>,
    log_file: Option<&Path>,
) -> Result<TrialResult, ExecError> {
    let cmd = substitute(template, point)?;
    let mut times = Vec::with_capacity(job.repetitions as usize);
    let mut status = TrialStatus::Success;
    let mut log = String::new();
    for _ in 0..job.repetitions {
        let mut c = Command::new("sh");
        c.arg("-c").arg(&cmd);
        if let Some(dir) = workdir {
            c.current_dir(dir);
        }
        let run = run_captured(&mut c, job.timeout()).map_err(ExecError::SpawnFailure)?;
        log.push_str(&run.stdout);
        log.push_str(&run.stderr);
        if run.timed_out() {
            status = TrialStatus::Timeout;
            break;
        }
        if !run.success() {
            status = TrialStatus::Failed;
            break;
        }
        times.push(run.elapsed.as_secs_f64());
    }
    let phases = parse_phase_times(&log);
    let mut result = TrialResult::with_status(status, times);
    result.phase_times_s = (!phases.is_empty()).then_some(phases);
    if let Some(path) = log_file {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, &log)?;
        result.log_ref = Some(path.display().to_string());
    }
    Ok(result)
}

/// Executor wrapping [`run_local_command`] with a working directory and an
/// optional per-trial log directory.
#[derive(Debug, Clone)]
pub struct LocalExecutor {
    template: String,
    space: ParamSpace,
    workdir: Option<PathBuf>,
    log_dir: Option<PathBuf>,
}

impl LocalExecutor {
    pub fn new(template: impl Into<String>, space: ParamSpace) -> Self {
        Self {
            template: template.into(),
            space,
            workdir: None,
            log_dir: None,
        }
    }

    pub fn in_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.workdir = Some(dir.into());
        self
    }

    /// Writes each trial's combined output to `<dir>/trial_<id>/output.log`.
    pub fn with_log_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.log_dir = Some(dir.into());
        self
    }
}

impl Executor for LocalExecutor {
    fn execute_trial(&mut self, job: &JobSpec, point: &TrialPoint, trial_id: u64) -> Result<TrialResult, ExecError> {
        validate_point(point, &self.space).map_err(|v| ExecError::Space(SpaceError::InvalidPoint(v)))?;
        let log = self
            .log_dir
            .as_ref()
            .map(|d| d.join(format!("trial_{trial_id}")).join("output.log"));
        let mut r = run_in(&self.template, point, job, self.workdir.as_deref(), log.as_deref())?;
        r.result_dir = log.as_ref().and_then(|p| p.parent()).map(Path::to_path_buf);
        Ok(r)
    }
}
