//! Tuning sessions: the propose → execute → record → observe loop, its
//! durable history and deterministic resume.
//!
//! On-disk layout under the project root:
//!
//! ```text
//! history/session.conf          manifest (strategy, seed, budget, space hash, status, options)
//! history/trials.csv            one row per trial, appended and synced before the searcher sees it
//! history/raw/trial_NNNNNN.json full per-trial record, the source for `aggregate_history`
//! history/summary.txt           written by `aggregate_history`
//! history/.lock                 held by the running session
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::{ExecError, Executor, JobSpec, PhaseTimes, TrialResult, TrialStatus};
use crate::kv;
use crate::paramspace::{ParamSpace, TrialPoint};
use crate::project::{load_project, Project, ProjectError};
use crate::search::{build_searcher, replay, Proposal, SearchError, Searcher, Strategy, StrategyOptions};

pub const HISTORY_DIR: &str = "history";
pub const TRIALS_FILE: &str = "trials.csv";
pub const MANIFEST_FILE: &str = "session.conf";
pub const SUMMARY_FILE: &str = "summary.txt";
const RAW_DIR: &str = "raw";
const LOCK_FILE: &str = ".lock";
const FAILED: &str = "FAILED";

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("budget must be at least 1, got {0}")]
    InvalidBudget(u64),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("trial id {got} does not follow {last}")]
    IdGap { last: u64, got: u64 },
    #[error("history is corrupt after trial {last_valid_id}: {detail}")]
    HistoryCorrupt { last_valid_id: u64, detail: String },
    #[error("{0} already holds a session history; resume it or remove the history directory")]
    HistoryExists(PathBuf),
    #[error("no session manifest at {0}")]
    ManifestMissing(PathBuf),
    #[error("bad session manifest: {0}")]
    ManifestInvalid(String),
    #[error("parameter space changed since the session started (hash {recorded}, now {current})")]
    SpaceMismatch { recorded: String, current: String },
    #[error("another session holds {0}; remove it if that session is gone")]
    Locked(PathBuf),
    #[error("no successful trial in history")]
    NoSuccessfulTrial,
    #[error("session interrupted after {completed} trials: {source}")]
    Interrupted {
        completed: u64,
        #[source]
        source: ExecError,
    },
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionStatus {
    Running,
    Interrupted,
    Finished,
}

impl SessionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionStatus::Running => "running",
            SessionStatus::Interrupted => "interrupted",
            SessionStatus::Finished => "finished",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "running" => Some(SessionStatus::Running),
            "interrupted" => Some(SessionStatus::Interrupted),
            "finished" => Some(SessionStatus::Finished),
            _ => None,
        }
    }
}

/// Sample median; `None` for an empty slice.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

/// One executed trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub point: TrialPoint,
    pub result: TrialResult,
    /// Median of the repetition times; `None` is FAILED.
    pub aggregate_s: Option<f64>,
    pub strategy: String,
    pub timestamp: DateTime<Utc>,
}

impl TrialRecord {
    /// Builds a record, deriving the aggregate from the result. The
    /// timestamp is truncated to microseconds, the precision of trials.csv.
    pub fn new(trial_id: u64, point: TrialPoint, mut result: TrialResult, strategy: &str, at: DateTime<Utc>) -> Self {
        let aggregate_s = match result.status {
            TrialStatus::Success => median(&result.rep_times_s),
            _ => None,
        };
        if result.phase_times_s.is_some_and(|p| p.is_empty()) {
            result.phase_times_s = None;
        }
        let timestamp = DateTime::from_timestamp_micros(at.timestamp_micros()).unwrap_or(at);
        Self {
            trial_id,
            point,
            result,
            aggregate_s,
            strategy: strategy.to_string(),
            timestamp,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.aggregate_s.is_some()
    }
}

/// Minimum-aggregate successful record; ties go to the lowest trial id.
pub fn best_of(history: &[TrialRecord]) -> Result<&TrialRecord, SessionError> {
    history
        .iter()
        .filter_map(|r| r.aggregate_s.map(|a| (a, r)))
        .fold(None::<(f64, &TrialRecord)>, |best, (a, r)| match best {
            Some((b, _)) if b <= a => best,
            _ => Some((a, r)),
        })
        .map(|(_, r)| r)
        .ok_or(SessionError::NoSuccessfulTrial)
}

// ---- trials.csv ----

pub fn history_dir(root: &Path) -> PathBuf {
    root.join(HISTORY_DIR)
}

pub fn trials_path(root: &Path) -> PathBuf {
    history_dir(root).join(TRIALS_FILE)
}

fn raw_path(root: &Path, trial_id: u64) -> PathBuf {
    history_dir(root).join(RAW_DIR).join(format!("trial_{trial_id:06}.json"))
}

pub fn trials_header(space: &ParamSpace) -> Vec<String> {
    let mut h: Vec<String> = ["trial_id", "strategy", "timestamp_utc"].map(String::from).into();
    h.extend(space.specs().iter().map(|s| s.name.clone()));
    h.extend(["status", "rep_times_s", "aggregate_s", "map_s", "shuffle_s", "reduce_s"].map(String::from));
    h
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn record_fields(r: &TrialRecord, space: &ParamSpace) -> Vec<String> {
    let mut f = vec![
        r.trial_id.to_string(),
        r.strategy.clone(),
        r.timestamp.to_rfc3339_opts(SecondsFormat::Micros, true),
    ];
    f.extend(
        space
            .specs()
            .iter()
            .map(|s| r.point.get(&s.name).map(|v| v.to_string()).unwrap_or_default()),
    );
    let phases = r.result.phase_times_s.unwrap_or_default();
    f.extend([
        r.result.status.as_str().to_string(),
        r.result.rep_times_s.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
        r.aggregate_s.map_or_else(|| FAILED.to_string(), |a| a.to_string()),
        opt_num(phases.map),
        opt_num(phases.shuffle),
        opt_num(phases.reduce),
    ]);
    f
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn csv_line(fields: &[String]) -> Vec<u8> {
    let mut w = csv_writer(Vec::new());
    w.write_record(fields).expect("writing to memory");
    w.into_inner().expect("writing to memory")
}

/// Renders a complete trials.csv.
pub fn render_history(space: &ParamSpace, records: &[TrialRecord]) -> Vec<u8> {
    let mut out = csv_line(&trials_header(space));
    for r in records {
        out.extend(csv_line(&record_fields(r, space)));
    }
    out
}

fn parse_row(row: &csv::StringRecord, space: &ParamSpace) -> Result<TrialRecord, String> {
    let d = space.dim();
    if row.len() != d + 9 {
        return Err(format!("expected {} fields, got {}", d + 9, row.len()));
    }
    let num = |i: usize, what: &str| -> Result<Option<f64>, String> {
        let s = &row[i];
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| format!("bad {what} `{s}`"))
        }
    };
    let trial_id: u64 = row[0].parse().map_err(|_| format!("bad trial_id `{}`", &row[0]))?;
    let timestamp = DateTime::parse_from_rfc3339(&row[2])
        .map_err(|e| format!("bad timestamp `{}`: {e}", &row[2]))?
        .with_timezone(&Utc);
    let mut point = TrialPoint::new();
    for (k, spec) in space.specs().iter().enumerate() {
        let text = &row[3 + k];
        let v = spec
            .parse_value(text)
            .ok_or_else(|| format!("bad value `{text}` for {}", spec.name))?;
        point.insert(spec.name.clone(), v);
    }
    let status = TrialStatus::parse(&row[d + 3]).ok_or_else(|| format!("bad status `{}`", &row[d + 3]))?;
    let reps = &row[d + 4];
    let rep_times_s = if reps.is_empty() {
        Vec::new()
    } else {
        reps.split(';')
            .map(|t| t.parse::<f64>().map_err(|_| format!("bad repetition time `{t}`")))
            .collect::<Result<_, _>>()?
    };
    let aggregate_s = match &row[d + 5] {
        FAILED => None,
        _ => num(d + 5, "aggregate_s")?,
    };
    let phases = PhaseTimes {
        map: num(d + 6, "map_s")?,
        shuffle: num(d + 7, "shuffle_s")?,
        reduce: num(d + 8, "reduce_s")?,
    };
    Ok(TrialRecord {
        trial_id,
        point,
        result: TrialResult {
            status,
            rep_times_s,
            phase_times_s: (!phases.is_empty()).then_some(phases),
            result_dir: None,
            log_ref: None,
        },
        aggregate_s,
        strategy: row[1].to_string(),
        timestamp,
    })
}

/// Parses trials.csv bytes. A final line without its newline is a torn
/// append and is reported as corruption after the last complete row.
pub fn parse_history(bytes: &[u8], space: &ParamSpace) -> Result<Vec<TrialRecord>, SessionError> {
    let mut out: Vec<TrialRecord> = Vec::new();
    if bytes.is_empty() {
        return Ok(out);
    }
    let torn = !bytes.ends_with(b"\n");
    let complete = if torn {
        &bytes[..bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1)]
    } else {
        bytes
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(complete);
    let mut rows = rdr.records();
    let corrupt = |last: u64, detail: String| SessionError::HistoryCorrupt {
        last_valid_id: last,
        detail,
    };
    match rows.next() {
        Some(Ok(h)) if h.iter().eq(trials_header(space).iter().map(String::as_str)) => {}
        Some(Ok(_)) => return Err(corrupt(0, "header does not match the parameter space".into())),
        Some(Err(e)) => return Err(corrupt(0, e.to_string())),
        None => return Err(corrupt(0, "header row is truncated".into())),
    }
    for row in rows {
        let last = out.last().map_or(0, |r| r.trial_id);
        let rec = row
            .map_err(|e| e.to_string())
            .and_then(|r| parse_row(&r, space))
            .map_err(|e| corrupt(last, e))?;
        if rec.trial_id != last + 1 {
            return Err(corrupt(last, format!("trial id {} out of sequence", rec.trial_id)));
        }
        out.push(rec);
    }
    if torn {
        let last = out.last().map_or(0, |r| r.trial_id);
        return Err(corrupt(last, "last row is truncated".into()));
    }
    Ok(out)
}

/// Reads `history/trials.csv`; a missing file is an empty history.
pub fn read_history(root: &Path, space: &ParamSpace) -> Result<Vec<TrialRecord>, SessionError> {
    match fs::read(trials_path(root)) {
        Ok(bytes) => parse_history(&bytes, space),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(e.into()),
    }
}

/// Appender for trials.csv that enforces contiguous ids and syncs every row.
pub struct HistoryWriter {
    root: PathBuf,
    space: ParamSpace,
    file: File,
    last_id: u64,
}

impl HistoryWriter {
    /// Opens the history for appending, writing the header if the file is new.
    pub fn open(root: &Path, space: &ParamSpace) -> Result<Self, SessionError> {
        let existing = read_history(root, space)?;
        fs::create_dir_all(history_dir(root).join(RAW_DIR))?;
        let path = trials_path(root);
        let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
        if file.metadata()?.len() == 0 {
            file.write_all(&csv_line(&trials_header(space)))?;
            file.sync_data()?;
        }
        Ok(Self {
            root: root.to_path_buf(),
            space: space.clone(),
            file,
            last_id: existing.last().map_or(0, |r| r.trial_id),
        })
    }

    pub fn last_id(&self) -> u64 {
        self.last_id
    }

    /// Writes the raw record, then the CSV row; both are synced before return.
    pub fn append(&mut self, record: &TrialRecord) -> Result<(), SessionError> {
        if record.trial_id != self.last_id + 1 {
            return Err(SessionError::IdGap {
                last: self.last_id,
                got: record.trial_id,
            });
        }
        let raw = serde_json::to_vec_pretty(record).map_err(io::Error::other)?;
        write_synced(&raw_path(&self.root, record.trial_id), &raw)?;
        self.file.write_all(&csv_line(&record_fields(record, &self.space)))?;
        self.file.sync_data()?;
        self.last_id = record.trial_id;
        Ok(())
    }
}

/// Appends one record to the project's history.
pub fn append_history(root: &Path, space: &ParamSpace, record: &TrialRecord) -> Result<(), SessionError> {
    HistoryWriter::open(root, space)?.append(record)
}

fn write_synced(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_data()?;
    }
    fs::rename(tmp, path)
}

/// Rebuilds trials.csv and summary.txt from the raw per-trial records.
/// Running it twice produces identical bytes.
pub fn aggregate_history(root: &Path, space: &ParamSpace) -> Result<Vec<TrialRecord>, SessionError> {
    let raw_dir = history_dir(root).join(RAW_DIR);
    let mut records = Vec::new();
    match fs::read_dir(&raw_dir) {
        Ok(entries) => {
            for entry in entries {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "json") {
                    let rec: TrialRecord = serde_json::from_slice(&fs::read(&path)?)
                        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))?;
                    records.push(rec);
                }
            }
        }
        Err(e) if e.kind() == io::ErrorKind::NotFound => {}
        Err(e) => return Err(e.into()),
    }
    records.sort_by_key(|r| r.trial_id);
    for (i, r) in records.iter().enumerate() {
        if r.trial_id != i as u64 + 1 {
            return Err(SessionError::HistoryCorrupt {
                last_valid_id: i as u64,
                detail: format!("raw record for trial {} is missing", i + 1),
            });
        }
    }
    fs::create_dir_all(history_dir(root))?;
    write_synced(&trials_path(root), &render_history(space, &records))?;
    write_synced(&history_dir(root).join(SUMMARY_FILE), summary_text(&records).as_bytes())?;
    Ok(records)
}

fn summary_text(records: &[TrialRecord]) -> String {
    let ok = records.iter().filter(|r| r.succeeded()).count();
    let mut s = format!("trials={}\nsuccessful={}\nfailed={}\n", records.len(), ok, records.len() - ok);
    if let Ok(best) = best_of(records) {
        s += &format!("best_trial={}\nbest_aggregate_s={}\n", best.trial_id, best.aggregate_s.unwrap_or_default());
        for (k, v) in best.point.iter() {
            s += &format!("best.{k}={v}\n");
        }
    }
    s
}

// ---- manifest and lock ----

#[derive(Debug, Clone, PartialEq)]
pub struct SessionManifest {
    pub strategy: Strategy,
    pub seed: u64,
    pub budget: u64,
    pub space_hash: String,
    pub status: SessionStatus,
    pub memoize: bool,
    pub options: StrategyOptions,
}

impl SessionManifest {
    pub fn render(&self) -> String {
        let mut s = format!(
            "strategy={}\nseed={}\nbudget={}\nspace_hash={}\nstatus={}\nmemoize={}\n",
            self.strategy,
            self.seed,
            self.budget,
            self.space_hash,
            self.status.as_str(),
            self.memoize
        );
        for (k, v) in self.options.to_pairs() {
            s += &format!("{k}={v}\n");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, SessionError> {
        let bad = |m: String| SessionError::ManifestInvalid(m);
        let entries = kv::parse(text).map_err(|e| bad(format!("line {}: {}", e.line, e.msg)))?;
        let get = |k: &str| {
            entries
                .get(k)
                .map(|e| e.value.as_str())
                .ok_or_else(|| bad(format!("missing `{k}`")))
        };
        let num = |k: &str| get(k)?.parse::<u64>().map_err(|_| bad(format!("bad `{k}`")));
        let mut options = StrategyOptions::default();
        for (k, e) in &entries {
            if k.contains('.') && !options.set(k, &e.value)? {
                return Err(bad(format!("unknown option `{k}`")));
            }
        }
        Ok(Self {
            strategy: get("strategy")?.parse()?,
            seed: num("seed")?,
            budget: num("budget")?,
            space_hash: get("space_hash")?.to_string(),
            status: SessionStatus::parse(get("status")?).ok_or_else(|| bad("bad `status`".into()))?,
            memoize: get("memoize")?.parse().map_err(|_| bad("bad `memoize`".into()))?,
            options,
        })
    }
}

pub fn manifest_path(root: &Path) -> PathBuf {
    history_dir(root).join(MANIFEST_FILE)
}

pub fn read_manifest(root: &Path) -> Result<SessionManifest, SessionError> {
    let path = manifest_path(root);
    match fs::read_to_string(&path) {
        Ok(text) => SessionManifest::parse(&text),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Err(SessionError::ManifestMissing(path)),
        Err(e) => Err(e.into()),
    }
}

fn write_manifest(root: &Path, m: &SessionManifest) -> io::Result<()> {
    write_synced(&manifest_path(root), m.render().as_bytes())
}

struct SessionLock(PathBuf);

impl SessionLock {
    fn acquire(root: &Path) -> Result<Self, SessionError> {
        fs::create_dir_all(history_dir(root))?;
        let path = history_dir(root).join(LOCK_FILE);
        for _ in 0..2 {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    writeln!(f, "{}", std::process::id())?;
                    return Ok(Self(path));
                }
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                    let holder = fs::read_to_string(&path).ok().and_then(|s| s.trim().parse::<i32>().ok());
                    if holder.is_some_and(|pid| !process_alive(pid)) {
                        fs::remove_file(&path)?;
                        continue;
                    }
                    return Err(SessionError::Locked(path));
                }
                Err(e) => return Err(e.into()),
            }
        }
        Err(SessionError::Locked(path))
    }
}

impl Drop for SessionLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn process_alive(pid: i32) -> bool {
    // SAFETY: signal 0 only checks for existence and permission.
    let rc = unsafe { libc::kill(pid, 0) };
    rc == 0 || io::Error::last_os_error().raw_os_error() != Some(libc::ESRCH)
}

// ---- the tuning loop ----

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub strategy: Strategy,
    pub budget: u64,
    pub seed: u64,
    pub options: StrategyOptions,
    /// Reuse results of previously evaluated points instead of re-running them.
    pub memoize: bool,
}

impl SessionConfig {
    pub fn new(strategy: Strategy, budget: u64, seed: u64) -> Self {
        Self {
            strategy,
            budget,
            seed,
            options: StrategyOptions::default(),
            memoize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionSummary {
    pub strategy: Strategy,
    /// Trials in history, including ones from earlier runs of the session.
    pub trials: u64,
    pub new_trials: u64,
    pub best: Option<TrialRecord>,
    pub status: SessionStatus,
    pub wall_time: Duration,
}

/// Everything a session loop needs besides its searcher.
pub struct SessionContext<'a> {
    pub root: &'a Path,
    pub space: &'a ParamSpace,
    pub job: &'a JobSpec,
    pub executor: &'a mut dyn Executor,
    /// Stop after this many new trials, leaving the session interrupted.
    pub max_new_trials: Option<u64>,
}

/// Starts a new session in `ctx.root`. Fails if a history already exists.
pub fn start_session(ctx: SessionContext<'_>, config: &SessionConfig) -> Result<SessionSummary, SessionError> {
    if config.budget == 0 {
        return Err(SessionError::InvalidBudget(0));
    }
    config.options.validate()?;
    let _lock = SessionLock::acquire(ctx.root)?;
    if manifest_path(ctx.root).exists() || trials_path(ctx.root).exists() {
        return Err(SessionError::HistoryExists(history_dir(ctx.root)));
    }
    let searcher = build_searcher(config.strategy, ctx.space, &config.options)?;
    let mut manifest = SessionManifest {
        strategy: config.strategy,
        seed: config.seed,
        budget: config.budget,
        space_hash: ctx.space.hash(),
        status: SessionStatus::Running,
        memoize: config.memoize,
        options: config.options.clone(),
    };
    write_manifest(ctx.root, &manifest)?;
    drive(ctx, &mut manifest, searcher, Vec::new())
}

/// Continues the session recorded in `ctx.root`.
pub fn continue_session(ctx: SessionContext<'_>) -> Result<SessionSummary, SessionError> {
    let mut manifest = read_manifest(ctx.root)?;
    let current = ctx.space.hash();
    if manifest.space_hash != current {
        return Err(SessionError::SpaceMismatch {
            recorded: manifest.space_hash,
            current,
        });
    }
    let _lock = SessionLock::acquire(ctx.root)?;
    let history = read_history(ctx.root, ctx.space)?;
    let mut searcher = build_searcher(manifest.strategy, ctx.space, &manifest.options)?;
    replay(searcher.as_mut(), history.iter().map(|r| (&r.point, r.aggregate_s)))?;
    manifest.status = SessionStatus::Running;
    write_manifest(ctx.root, &manifest)?;
    drive(ctx, &mut manifest, searcher, history)
}

fn drive(
    ctx: SessionContext<'_>,
    manifest: &mut SessionManifest,
    mut searcher: Box<dyn Searcher>,
    mut history: Vec<TrialRecord>,
) -> Result<SessionSummary, SessionError> {
    let started = Instant::now();
    let mut writer = HistoryWriter::open(ctx.root, ctx.space)?;
    let strategy_id = manifest.strategy.as_str();
    let mut new_trials = 0u64;

    let outcome = (|| -> Result<SessionStatus, SessionError> {
        let mut prepared = false;
        loop {
            if history.len() as u64 >= manifest.budget {
                return Ok(SessionStatus::Finished);
            }
            if ctx.max_new_trials.is_some_and(|m| new_trials >= m) {
                return Ok(SessionStatus::Interrupted);
            }
            let point = match searcher.propose()? {
                Proposal::Done => return Ok(SessionStatus::Finished),
                Proposal::Point(p) => p,
            };
            let trial_id = writer.last_id() + 1;
            let cached = manifest
                .memoize
                .then(|| history.iter().find(|r| r.point == point).map(|r| r.result.clone()))
                .flatten();
            let result = match cached {
                Some(r) => r,
                None => {
                    if !prepared {
                        ctx.executor.prepare().map_err(|source| SessionError::Interrupted {
                            completed: history.len() as u64,
                            source,
                        })?;
                        prepared = true;
                    }
                    ctx.executor
                        .execute_trial(ctx.job, &point, trial_id)
                        .map_err(|source| SessionError::Interrupted {
                            completed: history.len() as u64,
                            source,
                        })?
                }
            };
            let record = TrialRecord::new(trial_id, point, result, strategy_id, Utc::now());
            writer.append(&record)?;
            searcher.observe(record.aggregate_s)?;
            history.push(record);
            new_trials += 1;
        }
    })();

    manifest.status = match &outcome {
        Ok(s) => *s,
        Err(_) => SessionStatus::Interrupted,
    };
    write_manifest(ctx.root, manifest)?;
    let status = outcome?;
    Ok(SessionSummary {
        strategy: manifest.strategy,
        trials: history.len() as u64,
        new_trials,
        best: best_of(&history).ok().cloned(),
        status,
        wall_time: started.elapsed(),
    })
}

/// Runs a fresh session on a loaded project with its configured executor.
pub fn run_tuning(project: &Project, strategy_id: &str, budget: u64, seed: u64) -> Result<SessionSummary, SessionError> {
    if budget == 0 {
        return Err(SessionError::InvalidBudget(0));
    }
    let strategy: Strategy = strategy_id.parse()?;
    let mut executor = project.executor(seed).map_err(ProjectError::from)?;
    let config = SessionConfig {
        strategy,
        budget,
        seed,
        options: project.options.clone(),
        memoize: project.memoize,
    };
    let ctx = SessionContext {
        root: &project.root,
        space: &project.space,
        job: &project.job,
        executor: &mut executor,
        max_new_trials: None,
    };
    start_session(ctx, &config)
}

/// Resumes the session in project directory `dir`.
pub fn resume_session(dir: &Path) -> Result<SessionSummary, SessionError> {
    let project = load_project(dir)?;
    let manifest = read_manifest(dir)?;
    let mut executor = project.executor(manifest.seed).map_err(ProjectError::from)?;
    let ctx = SessionContext {
        root: &project.root,
        space: &project.space,
        job: &project.job,
        executor: &mut executor,
        max_new_trials: None,
    };
    continue_session(ctx)
}
