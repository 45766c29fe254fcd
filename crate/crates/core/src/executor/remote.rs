//! Hadoop job submission over SSH.
//!
//! Per trial: stage the jar (skipped when the remote copy's SHA-256 matches),
//! run `hadoop jar` once per repetition, pull the aggregated YARN logs, and
//! download the job output into `<project>/downloaded_results/trial_<id>/`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use sha2::{Digest, Sha256};

use super::process::{run_captured, shell_quote};
use super::{parse_phase_times, ClusterEnv, ExecError, Executor, JobSpec, TrialResult, TrialStatus};
use crate::paramspace::{render_config_args, ParamSpace, TrialPoint};

/// ssh exits with 255 when the connection itself fails.
const SSH_CONNECT_EXIT: i32 = 255;
const HOUSEKEEPING_TIMEOUT: Duration = Duration::from_secs(300);

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteOutput {
    /// `None` on timeout.
    pub exit: Option<i32>,
    pub stdout: String,
    pub stderr: String,
    pub elapsed: Duration,
}

impl RemoteOutput {
    pub fn ok(&self) -> bool {
        self.exit == Some(0)
    }
}

/// Remote shell and file transfer. Transport failures are reported as
/// [`ExecError::ConnectFailure`]; remote command failures are in the output.
pub trait RemoteShell {
    fn run(&mut self, command: &str, timeout: Duration) -> Result<RemoteOutput, ExecError>;
    fn upload(&mut self, local: &Path, remote: &str) -> Result<(), ExecError>;
    /// Copies remote directory `remote` into `local_parent/<basename>`.
    fn download_dir(&mut self, remote: &str, local_parent: &Path) -> Result<(), ExecError>;
}

/// [`RemoteShell`] backed by the system `ssh` and `scp` clients with key auth.
#[derive(Debug, Clone)]
pub struct SshShell {
    env: ClusterEnv,
    ssh_program: String,
    scp_program: String,
}

impl SshShell {
    pub fn new(env: ClusterEnv) -> Self {
        Self {
            env,
            ssh_program: "ssh".into(),
            scp_program: "scp".into(),
        }
    }

    /// Overrides the client binaries (e.g. a wrapper script).
    pub fn with_programs(mut self, ssh: impl Into<String>, scp: impl Into<String>) -> Self {
        self.ssh_program = ssh.into();
        self.scp_program = scp.into();
        self
    }

    fn target(&self) -> String {
        format!("{}@{}", self.env.user, self.env.master_host)
    }

    fn scp(&self, args: &[String]) -> Result<(), ExecError> {
        let mut c = Command::new(&self.scp_program);
        c.args(["-B", "-q", "-P", &self.env.port.to_string(), "-i"])
            .arg(&self.env.auth_key_path)
            .args(args);
        let out = run_captured(&mut c, HOUSEKEEPING_TIMEOUT).map_err(|e| ExecError::ConnectFailure(e.to_string()))?;
        match out.code() {
            Some(0) => Ok(()),
            Some(SSH_CONNECT_EXIT) => Err(ExecError::ConnectFailure(out.stderr.trim().to_string())),
            _ => Err(ExecError::StagingFailure(format!("scp failed: {}", out.stderr.trim()))),
        }
    }
}

impl RemoteShell for SshShell {
    fn run(&mut self, command: &str, timeout: Duration) -> Result<RemoteOutput, ExecError> {
        let mut c = Command::new(&self.ssh_program);
        c.args(["-o", "BatchMode=yes", "-o", "ConnectTimeout=15", "-p", &self.env.port.to_string(), "-i"])
            .arg(&self.env.auth_key_path)
            .arg(self.target())
            .arg(command);
        let out = run_captured(&mut c, timeout).map_err(|e| ExecError::ConnectFailure(e.to_string()))?;
        if out.code() == Some(SSH_CONNECT_EXIT) {
            return Err(ExecError::ConnectFailure(out.stderr.trim().to_string()));
        }
        Ok(RemoteOutput {
            exit: if out.timed_out() { None } else { Some(out.code().unwrap_or(-1)) },
            stdout: out.stdout,
            stderr: out.stderr,
            elapsed: out.elapsed,
        })
    }

    fn upload(&mut self, local: &Path, remote: &str) -> Result<(), ExecError> {
        self.scp(&[local.display().to_string(), format!("{}:{remote}", self.target())])
    }

    fn download_dir(&mut self, remote: &str, local_parent: &Path) -> Result<(), ExecError> {
        self.scp(&[
            "-r".into(),
            format!("{}:{remote}", self.target()),
            local_parent.display().to_string(),
        ])
    }
}

fn artifact_name(artifact: &str) -> &str {
    Path::new(artifact)
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or(artifact)
}

fn bin(env: &ClusterEnv, tool: &str) -> String {
    format!("{}/bin/{tool}", env.hadoop_home.trim_end_matches('/'))
}

/// `<hadoop_home>/bin/hadoop jar <jar> [<main>] -D… <static args…>`, with the
/// jar referenced by file name inside the remote working directory.
pub fn assemble_hadoop_command(
    env: &ClusterEnv,
    job: &JobSpec,
    point: &TrialPoint,
    space: &ParamSpace,
) -> Result<String, ExecError> {
    let mut parts = vec![bin(env, "hadoop"), "jar".into(), artifact_name(&job.artifact).to_string()];
    parts.extend(job.main_entry.clone());
    parts.extend(render_config_args(point, space)?);
    parts.extend(job.static_args.iter().cloned());
    Ok(parts.iter().map(|p| shell_quote(p)).collect::<Vec<_>>().join(" "))
}

fn find_application_id(text: &str) -> Option<&str> {
    let start = text.find("application_")?;
    let tail = &text[start..];
    let end = tail
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .unwrap_or(tail.len());
    let id = &tail[..end];
    let mut parts = id.split('_').skip(1);
    let numeric = |s: Option<&str>| s.is_some_and(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()));
    (numeric(parts.next()) && numeric(parts.next())).then_some(id)
}

fn sha256_file(path: &Path) -> Result<String, ExecError> {
    let bytes = fs::read(path).map_err(|e| ExecError::StagingFailure(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Runs one trial of `job` on the cluster. See the module docs for the steps.
pub fn remote_run_job<S: RemoteShell + ?Sized>(
    shell: &mut S,
    env: &ClusterEnv,
    job: &JobSpec,
    point: &TrialPoint,
    space: &ParamSpace,
    project_root: &Path,
    trial_id: u64,
) -> Result<TrialResult, ExecError> {
    let mut ex = RemoteRun { shell, env, project_root };
    ex.stage(job, None)?;
    ex.run_trial(job, point, space, trial_id)
}

struct RemoteRun<'a, S: ?Sized> {
    shell: &'a mut S,
    env: &'a ClusterEnv,
    project_root: &'a Path,
}

impl<S: RemoteShell + ?Sized> RemoteRun<'_, S> {
    fn workdir(&self) -> &str {
        self.env.remote_workdir.trim_end_matches('/')
    }

    /// Uploads the artifact unless the remote copy already has `hash`.
    /// Returns the local content hash.
    fn stage(&mut self, job: &JobSpec, known: Option<&str>) -> Result<String, ExecError> {
        let local = self.project_root.join(&job.artifact);
        let hash = sha256_file(&local)?;
        if known == Some(hash.as_str()) {
            return Ok(hash);
        }
        let remote = format!("{}/{}", self.workdir(), artifact_name(&job.artifact));
        let check = self
            .shell
            .run(&format!("sha256sum {} 2>/dev/null", shell_quote(&remote)), HOUSEKEEPING_TIMEOUT)?;
        if check.ok() && check.stdout.split_whitespace().next() == Some(hash.as_str()) {
            return Ok(hash);
        }
        let mk = self
            .shell
            .run(&format!("mkdir -p {}", shell_quote(self.workdir())), HOUSEKEEPING_TIMEOUT)?;
        if !mk.ok() {
            return Err(ExecError::StagingFailure(format!(
                "cannot create {}: {}",
                self.workdir(),
                mk.stderr.trim()
            )));
        }
        self.shell.upload(&local, &remote)?;
        Ok(hash)
    }

    fn run_trial(
        &mut self,
        job: &JobSpec,
        point: &TrialPoint,
        space: &ParamSpace,
        trial_id: u64,
    ) -> Result<TrialResult, ExecError> {
        let hadoop = assemble_hadoop_command(self.env, job, point, space)?;
        let command = format!("cd {} && {hadoop}", shell_quote(self.workdir()));
        let output_path = job.static_args.last();

        let mut client_log = String::new();
        let mut times = Vec::new();
        let mut status = TrialStatus::Success;
        for _ in 0..job.repetitions {
            if job.cleanup_output {
                if let Some(out) = output_path {
                    let rm = format!("{} dfs -rm -r -f {}", bin(self.env, "hdfs"), shell_quote(out));
                    self.shell.run(&rm, HOUSEKEEPING_TIMEOUT)?;
                }
            }
            let run = self.shell.run(&command, job.timeout())?;
            client_log.push_str(&run.stdout);
            client_log.push_str(&run.stderr);
            match run.exit {
                None => {
                    status = TrialStatus::Timeout;
                    break;
                }
                Some(0) => times.push(run.elapsed.as_secs_f64()),
                Some(_) => {
                    status = TrialStatus::Failed;
                    break;
                }
            }
        }

        let local_dir = self
            .project_root
            .join("downloaded_results")
            .join(format!("trial_{trial_id}"));
        fs::create_dir_all(&local_dir)?;
        fs::write(local_dir.join("client.log"), &client_log)?;

        let logs = self.fetch_logs(&client_log)?;
        if let Some(text) = &logs {
            fs::write(local_dir.join("yarn.log"), text)?;
        }
        if status == TrialStatus::Success {
            if let Some(out) = output_path {
                self.download_output(out, trial_id, &local_dir)?;
            }
        }

        let mut all = client_log;
        if let Some(text) = &logs {
            all.push_str(text);
        }
        let phases = parse_phase_times(&all);
        let mut result = TrialResult::with_status(status, times);
        result.phase_times_s = (!phases.is_empty()).then_some(phases);
        result.log_ref = Some(local_dir.join("client.log").display().to_string());
        result.result_dir = Some(local_dir);
        Ok(result)
    }

    /// Aggregated YARN logs, archived under `history_log_dir`. Any failure
    /// other than a lost connection degrades to `None`.
    fn fetch_logs(&mut self, client_log: &str) -> Result<Option<String>, ExecError> {
        let Some(app) = find_application_id(client_log) else {
            return Ok(None);
        };
        let dir = self.env.history_log_dir.trim_end_matches('/');
        let file = shell_quote(&format!("{dir}/{app}.log"));
        let cmd = format!(
            "mkdir -p {} && {} logs -applicationId {app} > {file} && cat {file}",
            shell_quote(dir),
            bin(self.env, "yarn"),
        );
        match self.shell.run(&cmd, HOUSEKEEPING_TIMEOUT) {
            Ok(out) if out.ok() => Ok(Some(out.stdout)),
            Ok(_) => Ok(None),
            Err(e @ ExecError::ConnectFailure(_)) => Err(e),
            Err(_) => Ok(None),
        }
    }

    fn download_output(&mut self, hdfs_out: &str, trial_id: u64, local_dir: &Path) -> Result<(), ExecError> {
        let remote = format!("{}/results/trial_{trial_id}/output", self.workdir());
        let cmd = format!(
            "rm -rf {r} && mkdir -p {parent} && {hdfs} dfs -get {out} {r}",
            r = shell_quote(&remote),
            parent = shell_quote(&format!("{}/results/trial_{trial_id}", self.workdir())),
            hdfs = bin(self.env, "hdfs"),
            out = shell_quote(hdfs_out),
        );
        let got = self.shell.run(&cmd, HOUSEKEEPING_TIMEOUT)?;
        if got.ok() {
            match self.shell.download_dir(&remote, local_dir) {
                Ok(()) => {}
                Err(e @ ExecError::ConnectFailure(_)) => return Err(e),
                Err(e) => eprintln!("warning: trial {trial_id}: output download failed: {e}"),
            }
        } else {
            eprintln!("warning: trial {trial_id}: could not fetch job output: {}", got.stderr.trim());
        }
        Ok(())
    }
}

/// Executor submitting each trial to a Hadoop cluster through a [`RemoteShell`].
pub struct RemoteExecutor {
    env: ClusterEnv,
    shell: Box<dyn RemoteShell + Send>,
    space: ParamSpace,
    project_root: PathBuf,
    staged_hash: Option<String>,
}

impl RemoteExecutor {
    pub fn new(env: ClusterEnv, space: ParamSpace, project_root: impl Into<PathBuf>) -> Self {
        let shell = Box::new(SshShell::new(env.clone()));
        Self::with_shell(env, shell, space, project_root)
    }

    pub fn with_shell(
        env: ClusterEnv,
        shell: Box<dyn RemoteShell + Send>,
        space: ParamSpace,
        project_root: impl Into<PathBuf>,
    ) -> Self {
        Self {
            env,
            shell,
            space,
            project_root: project_root.into(),
            staged_hash: None,
        }
    }
}

impl Executor for RemoteExecutor {
    fn prepare(&mut self) -> Result<(), ExecError> {
        let out = self.shell.run("true", Duration::from_secs(30))?;
        if out.ok() {
            Ok(())
        } else {
            Err(ExecError::ConnectFailure(format!(
                "{}: remote shell check failed: {}",
                self.env.master_host,
                out.stderr.trim()
            )))
        }
    }

    fn execute_trial(&mut self, job: &JobSpec, point: &TrialPoint, trial_id: u64) -> Result<TrialResult, ExecError> {
        let mut run = RemoteRun {
            shell: self.shell.as_mut(),
            env: &self.env,
            project_root: &self.project_root,
        };
        let hash = run.stage(job, self.staged_hash.as_deref())?;
        let result = run.run_trial(job, point, &self.space, trial_id)?;
        self.staged_hash = Some(hash);
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paramspace::{parse_param_file, ParamValue};
    use std::collections::VecDeque;
    use std::sync::{Arc, Mutex};

    fn env() -> ClusterEnv {
        ClusterEnv {
            master_host: "10.0.0.1".into(),
            port: 22,
            user: "hadoop".into(),
            auth_key_path: "/keys/id".into(),
            remote_workdir: "/home/hadoop/tune".into(),
            hadoop_home: "/opt/hadoop/".into(),
            history_log_dir: "/home/hadoop/logs".into(),
        }
    }

    /// In-memory shell answering from a script of canned outputs.
    struct Scripted {
        calls: Arc<Mutex<Vec<String>>>,
        uploads: usize,
        answers: VecDeque<(String, RemoteOutput)>,
    }

    impl Scripted {
        fn out(exit: i32, stdout: &str) -> RemoteOutput {
            RemoteOutput {
                exit: Some(exit),
                stdout: stdout.into(),
                stderr: String::new(),
                elapsed: Duration::from_millis(1500),
            }
        }
    }

    impl RemoteShell for Scripted {
        fn run(&mut self, command: &str, _: Duration) -> Result<RemoteOutput, ExecError> {
            self.calls.lock().unwrap().push(command.to_string());
            let pos = self.answers.iter().position(|(needle, _)| command.contains(needle.as_str()));
            Ok(match pos {
                Some(i) => self.answers.remove(i).unwrap().1,
                None => Self::out(0, ""),
            })
        }
        fn upload(&mut self, _: &Path, _: &str) -> Result<(), ExecError> {
            self.uploads += 1;
            Ok(())
        }
        fn download_dir(&mut self, _: &str, local_parent: &Path) -> Result<(), ExecError> {
            fs::create_dir_all(local_parent.join("output"))?;
            fs::write(local_parent.join("output/part-r-00000"), "a\t1\n")?;
            Ok(())
        }
    }

    fn job() -> JobSpec {
        let mut j = JobSpec::new("app.jar");
        j.main_entry = Some("WordCount".into());
        j.static_args = vec!["/in".into(), "/out".into()];
        j
    }

    #[test]
    fn command_string() {
        let space = parse_param_file("mapreduce.reduce.tasks int min=1 max=16 step=1").unwrap();
        let p = TrialPoint::new().with("mapreduce.reduce.tasks", ParamValue::Int(8));
        assert_eq!(
            assemble_hadoop_command(&env(), &job(), &p, &space).unwrap(),
            "/opt/hadoop/bin/hadoop jar app.jar WordCount -Dmapreduce.reduce.tasks=8 /in /out"
        );
    }

    #[test]
    fn app_id_extraction() {
        assert_eq!(
            find_application_id("INFO impl.YarnClientImpl: Submitted application application_1490_0007\n"),
            Some("application_1490_0007")
        );
        assert_eq!(find_application_id("application_x"), None);
        assert_eq!(find_application_id(""), None);
    }

    #[test]
    fn trial_flow_with_staging_skip() {
        let root = tempfile::tempdir().unwrap();
        fs::write(root.path().join("app.jar"), b"jar-bytes").unwrap();
        let space = parse_param_file("mapreduce.reduce.tasks int min=1 max=16 step=1").unwrap();
        let p = TrialPoint::new().with("mapreduce.reduce.tasks", ParamValue::Int(8));
        let client = "Submitted application application_1_0001\nTotal time spent by all map tasks (ms)=44550\n";
        let log = Arc::new(Mutex::new(Vec::new()));
        let shell = Scripted {
            calls: log.clone(),
            uploads: 0,
            answers: VecDeque::from(vec![
                ("bin/hadoop jar".to_string(), Scripted::out(0, client)),
                ("bin/hadoop jar".to_string(), Scripted::out(0, client)),
                ("yarn logs".to_string(), Scripted::out(0, "Total time spent by all reduce tasks (ms)=1000\n")),
            ]),
        };
        let mut ex = RemoteExecutor::with_shell(env(), Box::new(shell), space, root.path());
        let mut j = job();
        j.repetitions = 2;
        j.cleanup_output = true;
        let r = ex.execute_trial(&j, &p, 1).unwrap();
        assert_eq!(r.status, TrialStatus::Success);
        assert_eq!(r.rep_times_s, vec![1.5, 1.5]);
        let ph = r.phase_times_s.unwrap();
        assert_eq!((ph.map, ph.reduce), (Some(44.55), Some(1.0)));
        let dir = root.path().join("downloaded_results/trial_1");
        assert!(dir.join("client.log").exists());
        assert!(dir.join("output/part-r-00000").exists());
        // second trial reuses the staged jar without a remote hash check
        let r2 = ex.execute_trial(&job(), &p, 2).unwrap();
        assert_eq!(r2.status, TrialStatus::Success);
        let calls = log.lock().unwrap();
        assert_eq!(calls.iter().filter(|c| c.contains("sha256sum")).count(), 1);
        assert_eq!(calls.iter().filter(|c| c.contains("dfs -rm -r -f /out")).count(), 2);
    }

    #[test]
    fn remote_failure_is_failed_trial() {
        let root = tempfile::tempdir().unwrap();
        fs::write(root.path().join("app.jar"), b"jar").unwrap();
        let space = parse_param_file("mapreduce.reduce.tasks int min=1 max=16 step=1").unwrap();
        let p = TrialPoint::new().with("mapreduce.reduce.tasks", ParamValue::Int(8));
        let mut shell = Scripted {
            calls: Default::default(),
            uploads: 0,
            answers: VecDeque::from(vec![("bin/hadoop jar".to_string(), Scripted::out(1, "boom"))]),
        };
        let r = remote_run_job(&mut shell, &env(), &job(), &p, &space, root.path(), 4).unwrap();
        assert_eq!(r.status, TrialStatus::Failed);
        assert!(r.rep_times_s.is_empty());
        assert_eq!(shell.uploads, 1);
        assert!(!root.path().join("downloaded_results/trial_4/output").exists());
    }

    #[test]
    fn missing_artifact_is_staging_failure() {
        let root = tempfile::tempdir().unwrap();
        let space = parse_param_file("a int min=1 max=2 step=1").unwrap();
        let mut shell = Scripted { calls: Default::default(), uploads: 0, answers: VecDeque::new() };
        let err = remote_run_job(&mut shell, &env(), &job(), &space.default_point(), &space, root.path(), 1).unwrap_err();
        assert!(matches!(err, ExecError::StagingFailure(_)));
        assert!(shell.calls.lock().unwrap().is_empty());
    }
}
