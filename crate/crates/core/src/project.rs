//! Project directories: loading, validation and templates.
//!
//! ```text
//! <root>/params.conf      parameter space (optional for single-job runs)
//! <root>/job.conf         executor and job description
//! <root>/HadoopEnv.txt    cluster access, remote projects only
//! <root>/jobs.list        job files for batch runs (optional)
//! <root>/tuning.conf      strategy options (optional)
//! <root>/history/         session state, written by tuning
//! <root>/downloaded_results/
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::executor::{
    template_placeholders, ClusterEnv, ExecError, Executor, JobSpec, LocalExecutor, LookupTable, RemoteExecutor,
    SurfaceFamily, SurfaceSpec, SyntheticExecutor,
};
use crate::kv::{self, Entries};
use crate::paramspace::{parse_param_file, ParamSpace, SpaceError};
use crate::search::StrategyOptions;

pub const PARAMS_FILE: &str = "params.conf";
pub const JOB_FILE: &str = "job.conf";
pub const ENV_FILE: &str = "HadoopEnv.txt";
pub const JOBS_LIST_FILE: &str = "jobs.list";
pub const TUNING_FILE: &str = "tuning.conf";
pub const RESULTS_DIR: &str = "downloaded_results";

/// Marker for values the user must supply in a scaffolded template.
const FILL: &str = "<FILL";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("line {line}: bad value for `{key}`: {detail}")]
    BadValue { key: String, line: usize, detail: String },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("missing file {0}")]
    MissingFile(String),
    #[error("{file}: {source}")]
    Env { file: String, source: EnvError },
    #[error("{file}: {source}")]
    Space { file: String, source: SpaceError },
    #[error("{file}: line {line}: {msg}")]
    Config { file: String, line: usize, msg: String },
    #[error("{0}")]
    CrossValidation(String),
    #[error("{0} exists and is not empty")]
    DirNotEmpty(PathBuf),
    #[error("project directory {0} does not exist")]
    NoSuchDir(PathBuf),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecutorKind {
    Synthetic,
    Local,
    Remote,
}

impl ExecutorKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "synthetic" => Some(Self::Synthetic),
            "local" => Some(Self::Local),
            "remote" => Some(Self::Remote),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Project {
    pub root: PathBuf,
    pub env: Option<ClusterEnv>,
    pub space: ParamSpace,
    pub job: JobSpec,
    pub executor_kind: ExecutorKind,
    pub surface: Option<SurfaceSpec>,
    /// Job files listed in jobs.list, relative to the root.
    pub jobs: Vec<String>,
    pub options: StrategyOptions,
    pub memoize: bool,
}

const ENV_KEYS: [&str; 7] = [
    "master",
    "port",
    "user",
    "key_path",
    "remote_workdir",
    "hadoop_home",
    "history_log_dir",
];

fn not_placeholder(key: &str, e: &kv::Entry) -> Result<(), EnvError> {
    if e.value.is_empty() || e.value.starts_with(FILL) {
        Err(EnvError::BadValue {
            key: key.into(),
            line: e.line,
            detail: "value not filled in".into(),
        })
    } else {
        Ok(())
    }
}

/// Parses the cluster environment file.
pub fn parse_env_file(text: &str) -> Result<ClusterEnv, EnvError> {
    let entries = kv::parse(text).map_err(|e| EnvError::Syntax { line: e.line, msg: e.msg })?;
    if let Some(k) = entries.keys().find(|k| !ENV_KEYS.contains(&k.as_str())) {
        return Err(EnvError::Syntax {
            line: entries[k].line,
            msg: format!("unknown key `{k}`"),
        });
    }
    let get = |k: &str| -> Result<String, EnvError> {
        let e = entries.get(k).ok_or_else(|| EnvError::MissingKey(k.into()))?;
        not_placeholder(k, e)?;
        Ok(e.value.clone())
    };
    let port_text = get("port")?;
    let port = port_text.parse::<u16>().map_err(|_| EnvError::BadValue {
        key: "port".into(),
        line: entries["port"].line,
        detail: format!("`{port_text}` is not a port number"),
    })?;
    Ok(ClusterEnv {
        master_host: get("master")?,
        port,
        user: get("user")?,
        auth_key_path: PathBuf::from(get("key_path")?),
        remote_workdir: get("remote_workdir")?,
        hadoop_home: get("hadoop_home")?,
        history_log_dir: get("history_log_dir")?,
    })
}

/// Job file contents after parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    pub kind: ExecutorKind,
    pub job: JobSpec,
    pub surface: Option<SurfaceSpec>,
}

const JOB_KEYS: [&str; 17] = [
    "executor",
    "command",
    "jar",
    "main_entry",
    "args",
    "timeout_s",
    "repetitions",
    "cleanup_output",
    "surface",
    "base_s",
    "weights",
    "optimum",
    "noise_sd_s",
    "seed",
    "table_shape",
    "table",
    "name",
];

struct Fields<'a> {
    file: &'a str,
    entries: Entries,
}

impl Fields<'_> {
    fn err(&self, key: &str, msg: impl Into<String>) -> ProjectError {
        ProjectError::Config {
            file: self.file.into(),
            line: self.entries.get(key).map_or(0, |e| e.line),
            msg: msg.into(),
        }
    }

    fn str(&self, key: &str) -> Result<Option<&str>, ProjectError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) if e.value.starts_with(FILL) => Err(self.err(key, format!("`{key}` is not filled in"))),
            Some(e) => Ok(Some(e.value.as_str())),
        }
    }

    fn required(&self, key: &str, why: &str) -> Result<&str, ProjectError> {
        self.str(key)?.ok_or_else(|| ProjectError::Config {
            file: self.file.into(),
            line: 0,
            msg: format!("missing `{key}` ({why})"),
        })
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ProjectError> {
        self.str(key)?
            .map(|v| v.parse::<T>().map_err(|_| self.err(key, format!("bad value for `{key}`: `{v}`"))))
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, ProjectError> {
        match self.str(key)? {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<T>().map_err(|_| self.err(key, format!("bad list item `{t}` in `{key}`"))))
                .collect(),
        }
    }
}

/// Parses a job file (`job.conf` format).
pub fn parse_job_file(text: &str, file: &str) -> Result<JobConfig, ProjectError> {
    let entries = kv::parse(text).map_err(|e| ProjectError::Config {
        file: file.into(),
        line: e.line,
        msg: e.msg,
    })?;
    let f = Fields { file, entries };
    if let Some(k) = f.entries.keys().find(|k| !JOB_KEYS.contains(&k.as_str())) {
        return Err(f.err(k, format!("unknown key `{k}`")));
    }
    let kind_text = f.required("executor", "synthetic, local or remote")?;
    let kind = ExecutorKind::parse(kind_text).ok_or_else(|| f.err("executor", format!("unknown executor `{kind_text}`")))?;

    let artifact = match kind {
        ExecutorKind::Synthetic => "synthetic".to_string(),
        ExecutorKind::Local => f.required("command", "local jobs run a command template")?.to_string(),
        ExecutorKind::Remote => f.required("jar", "remote jobs submit a jar")?.to_string(),
    };
    let mut job = JobSpec::new(artifact);
    job.main_entry = f.str("main_entry")?.map(String::from);
    job.static_args = f.str("args")?.map(|a| a.split_whitespace().map(String::from).collect()).unwrap_or_default();
    if let Some(t) = f.parsed::<f64>("timeout_s")? {
        if !(t > 0.0) {
            return Err(f.err("timeout_s", "timeout_s must be positive"));
        }
        job.timeout_s = t;
    }
    if let Some(n) = f.parsed::<u32>("repetitions")? {
        if n == 0 {
            return Err(f.err("repetitions", "repetitions must be at least 1"));
        }
        job.repetitions = n;
    }
    job.cleanup_output = f.parsed("cleanup_output")?.unwrap_or(false);

    let surface = if kind == ExecutorKind::Synthetic {
        let name = f.required("surface", "synthetic jobs need a surface family")?;
        let family = SurfaceFamily::parse(name).ok_or_else(|| f.err("surface", format!("unknown surface `{name}`")))?;
        let table = if family == SurfaceFamily::LookupTable {
            Some(LookupTable {
                shape: f.list("table_shape")?,
                values: f.list("table")?,
            })
        } else {
            None
        };
        Some(SurfaceSpec {
            family,
            base_s: f.parsed("base_s")?.unwrap_or(100.0),
            weights: f.list("weights")?,
            optimum: f.list("optimum")?,
            noise_sd_s: f.parsed("noise_sd_s")?.unwrap_or(0.0),
            seed: f.parsed("seed")?.unwrap_or(0),
            table,
        })
    } else {
        None
    };
    Ok(JobConfig { kind, job, surface })
}

fn read_optional(root: &Path, name: &str) -> Result<Option<String>, ProjectError> {
    match fs::read_to_string(root.join(name)) {
        Ok(t) => Ok(Some(t)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn read_required(root: &Path, name: &str) -> Result<String, ProjectError> {
    read_optional(root, name)?.ok_or_else(|| ProjectError::MissingFile(name.into()))
}

fn parse_tuning_file(text: &str) -> Result<(StrategyOptions, bool), ProjectError> {
    let err = |line: usize, msg: String| ProjectError::Config {
        file: TUNING_FILE.into(),
        line,
        msg,
    };
    let entries = kv::parse(text).map_err(|e| err(e.line, e.msg))?;
    let mut options = StrategyOptions::default();
    let mut memoize = false;
    for (k, e) in &entries {
        if k == "memoize" {
            memoize = e.value.parse().map_err(|_| err(e.line, format!("bad value for `memoize`: `{}`", e.value)))?;
        } else if !options.set(k, &e.value).map_err(|x| err(e.line, x.to_string()))? {
            return Err(err(e.line, format!("unknown key `{k}`")));
        }
    }
    options.validate().map_err(|x| err(0, x.to_string()))?;
    Ok((options, memoize))
}

/// Loads and cross-checks the project in `dir`. Nothing is written.
pub fn load_project(dir: &Path) -> Result<Project, ProjectError> {
    if !dir.is_dir() {
        return Err(ProjectError::NoSuchDir(dir.to_path_buf()));
    }
    let space = match read_optional(dir, PARAMS_FILE)? {
        Some(text) => parse_param_file(&text).map_err(|source| ProjectError::Space {
            file: PARAMS_FILE.into(),
            source,
        })?,
        None => ParamSpace::empty(),
    };
    let jc = parse_job_file(&read_required(dir, JOB_FILE)?, JOB_FILE)?;
    let env = match jc.kind {
        ExecutorKind::Remote => Some(parse_env_file(&read_required(dir, ENV_FILE)?).map_err(|source| ProjectError::Env {
            file: ENV_FILE.into(),
            source,
        })?),
        _ => None,
    };
    let jobs = match read_optional(dir, JOBS_LIST_FILE)? {
        Some(text) => text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect(),
        None => Vec::new(),
    };
    let (options, memoize) = match read_optional(dir, TUNING_FILE)? {
        Some(text) => parse_tuning_file(&text)?,
        None => (StrategyOptions::default(), false),
    };
    let project = Project {
        root: dir.to_path_buf(),
        env,
        space,
        job: jc.job,
        executor_kind: jc.kind,
        surface: jc.surface,
        jobs,
        options,
        memoize,
    };
    project.cross_validate(JOB_FILE)?;
    for name in &project.jobs {
        project.with_job_file(name)?;
    }
    Ok(project)
}

impl Project {
    fn cross_validate(&self, file: &str) -> Result<(), ProjectError> {
        match self.executor_kind {
            ExecutorKind::Local => {
                for p in template_placeholders(&self.job.artifact) {
                    if self.space.spec(p).is_none() {
                        return Err(ProjectError::CrossValidation(format!(
                            "{file}: command uses `{{{p}}}` but {PARAMS_FILE} declares no such parameter"
                        )));
                    }
                }
            }
            ExecutorKind::Synthetic => {
                let s = self.surface.as_ref().expect("synthetic jobs carry a surface");
                s.validate(self.space.dim())
                    .map_err(|e| ProjectError::CrossValidation(format!("{file}: surface does not fit {PARAMS_FILE}: {e}")))?;
            }
            ExecutorKind::Remote => {}
        }
        Ok(())
    }

    /// This project with its job replaced by the one in `name` (relative to the root).
    pub fn with_job_file(&self, name: &str) -> Result<Project, ProjectError> {
        let text = read_required(&self.root, name)?;
        let jc = parse_job_file(&text, name)?;
        let env = match (jc.kind, &self.env) {
            (ExecutorKind::Remote, None) => Some(
                parse_env_file(&read_required(&self.root, ENV_FILE)?).map_err(|source| ProjectError::Env {
                    file: ENV_FILE.into(),
                    source,
                })?,
            ),
            _ => self.env.clone(),
        };
        let p = Project {
            env,
            job: jc.job,
            executor_kind: jc.kind,
            surface: jc.surface,
            ..self.clone()
        };
        p.cross_validate(name)?;
        Ok(p)
    }

    pub fn results_dir(&self) -> PathBuf {
        self.root.join(RESULTS_DIR)
    }

    /// Builds this project's executor; `seed` keys synthetic noise.
    pub fn executor(&self, seed: u64) -> Result<Box<dyn Executor + Send>, ExecError> {
        Ok(match self.executor_kind {
            ExecutorKind::Synthetic => {
                let surface = self.surface.as_ref().expect("synthetic jobs carry a surface");
                Box::new(SyntheticExecutor::new(surface.reseeded(seed), self.space.clone())?)
            }
            ExecutorKind::Local => Box::new(
                LocalExecutor::new(self.job.artifact.clone(), self.space.clone())
                    .in_dir(&self.root)
                    .with_log_dir(self.results_dir()),
            ),
            ExecutorKind::Remote => {
                let env = self.env.clone().expect("remote projects carry an env");
                Box::new(RemoteExecutor::new(env, self.space.clone(), &self.root))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateKind {
    Task,
    Project,
    Tuning,
}

impl TemplateKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "task" => Some(Self::Task),
            "project" => Some(Self::Project),
            "tuning" => Some(Self::Tuning),
            _ => None,
        }
    }
}

const ENV_TEMPLATE: &str = "\
# Cluster access. Replace every <FILL: ...> value.
master=<FILL: master host name or address>
port=22
user=<FILL: login user>
key_path=<FILL: path to the private key>
# staging directory for the job jar on the master
remote_workdir=<FILL: remote working directory>
hadoop_home=<FILL: Hadoop installation directory>
# YARN log aggregation must be enabled
history_log_dir=<FILL: directory for fetched job logs>
";

const JOB_TEMPLATE: &str = "\
# Job to run. executor = synthetic | local | remote
executor=remote
jar=<FILL: path to the job jar>
main_entry=<FILL: main class>
# static arguments after the -D options, usually input and output paths
args=<FILL: input path> <FILL: output path>
timeout_s=3600
repetitions=3
# remove the output path (the last argument) before every run
cleanup_output=true
";

const JOBS_LIST_TEMPLATE: &str = "\
# One job file per line, relative to this directory.
job.conf
";

const PARAMS_TEMPLATE: &str = "\
# name int|float min=.. max=.. step=.. [default=..] [unit=..]
# name cat values=a,b,c [default=..]
mapreduce.job.reduces int min=1 max=16 step=1 default=1
mapreduce.task.io.sort.mb int min=50 max=500 step=50 default=100 unit=MB
";

fn tuning_template() -> String {
    let mut s = String::from("# Strategy options; delete lines to keep defaults.\nmemoize=false\n");
    for (k, v) in StrategyOptions::default().to_pairs() {
        s += &format!("{k}={v}\n");
    }
    s
}

/// Writes a commented template tree into `dir`, which must be absent or empty.
pub fn scaffold(kind: TemplateKind, dir: &Path) -> Result<(), ProjectError> {
    if dir.exists() && fs::read_dir(dir)?.next().is_some() {
        return Err(ProjectError::DirNotEmpty(dir.to_path_buf()));
    }
    let mut files: Vec<(&str, String)> = vec![(ENV_FILE, ENV_TEMPLATE.into()), (JOB_FILE, JOB_TEMPLATE.into())];
    if kind != TemplateKind::Task {
        files.push((JOBS_LIST_FILE, JOBS_LIST_TEMPLATE.into()));
    }
    if kind == TemplateKind::Tuning {
        files.push((PARAMS_FILE, PARAMS_TEMPLATE.into()));
        files.push((TUNING_FILE, tuning_template()));
    }
    fs::create_dir_all(dir)?;
    for (name, body) in files {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}
