//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::builder::PossibleValuesParser;
use clap::{Parser, Subcommand};

use crate::executor::{Executor, TrialResult};
use crate::project::{load_project, scaffold, Project, TemplateKind};
use crate::report::{write_convergence, write_surface};
use crate::search::Strategy;
use crate::session::{aggregate_history, history_dir, median, read_history, resume_session, run_tuning, SessionSummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "jobtune", version, about = "Tune batch-job configuration parameters by repeated trial runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the project's job once at the default parameter values.
    Task {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Run every job in the project's jobs.list once at defaults.
    Project {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Start a tuning session.
    Tune {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, value_parser = PossibleValuesParser::new(Strategy::ALL.map(Strategy::as_str)))]
        strategy: String,
        #[arg(long)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Continue an interrupted tuning session.
    Resume {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Rebuild history/trials.csv and history/summary.txt from raw trial records.
    Aggregate {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Write CSV reports into history/ (convergence by default).
    Report {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        convergence: bool,
        #[arg(long, num_args = 2, value_names = ["PX", "PY"])]
        surface: Option<Vec<String>>,
    },
    /// Write a template project.
    Scaffold {
        #[arg(long, value_parser = PossibleValuesParser::new(["task", "project", "tuning"]))]
        kind: String,
        #[arg(long)]
        dir: PathBuf,
    },
}

type AnyError = Box<dyn std::error::Error>;

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), AnyError> {
    match cmd {
        Command::Task { dir } => {
            let project = load_project(&dir)?;
            let rows = vec![run_once(&project, "job.conf", 1)?];
            let path = write_runs(&dir, "task_runs.csv", &rows)?;
            eprintln!("task finished: {} ({})", rows[0].1.status.as_str(), path.display());
        }
        Command::Project { dir } => {
            let project = load_project(&dir)?;
            if project.jobs.is_empty() {
                return Err(format!("{}: jobs.list is missing or empty", dir.display()).into());
            }
            let mut rows = Vec::new();
            for (i, name) in project.jobs.iter().enumerate() {
                let job_project = project.with_job_file(name)?;
                rows.push(run_once(&job_project, name, i as u64 + 1)?);
            }
            let path = write_runs(&dir, "project_runs.csv", &rows)?;
            eprintln!("ran {} jobs ({})", rows.len(), path.display());
        }
        Command::Tune {
            dir,
            strategy,
            budget,
            seed,
        } => {
            let project = load_project(&dir)?;
            report_summary(&run_tuning(&project, &strategy, budget, seed)?);
        }
        Command::Resume { dir } => report_summary(&resume_session(&dir)?),
        Command::Aggregate { dir } => {
            let project = load_project(&dir)?;
            let records = aggregate_history(&dir, &project.space)?;
            eprintln!("aggregated {} trials", records.len());
        }
        Command::Report {
            dir,
            convergence,
            surface,
        } => {
            let project = load_project(&dir)?;
            let history = read_history(&dir, &project.space)?;
            if convergence || surface.is_none() {
                eprintln!("wrote {}", write_convergence(&dir, &history)?.display());
            }
            if let Some(axes) = surface {
                let path = write_surface(&dir, &history, &project.space, &axes[0], &axes[1])?;
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Scaffold { kind, dir } => {
            let kind = TemplateKind::parse(&kind).expect("restricted by clap");
            scaffold(kind, &dir)?;
            eprintln!("wrote template into {}", dir.display());
        }
    }
    Ok(())
}

fn run_once(project: &Project, name: &str, trial_id: u64) -> Result<(String, TrialResult), AnyError> {
    let mut executor = project.executor(0)?;
    executor.prepare()?;
    let point = project.space.default_point();
    let result = executor.execute_trial(&project.job, &point, trial_id)?;
    Ok((name.to_string(), result))
}

fn write_runs(root: &Path, file: &str, rows: &[(String, TrialResult)]) -> Result<PathBuf, AnyError> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["job", "status", "rep_times_s", "aggregate_s", "map_s", "shuffle_s", "reduce_s"])?;
    for (name, r) in rows {
        let phases = r.phase_times_s.unwrap_or_default();
        let aggregate = match r.status {
            crate::executor::TrialStatus::Success => median(&r.rep_times_s),
            _ => None,
        };
        w.write_record([
            name.clone(),
            r.status.as_str().to_string(),
            r.rep_times_s.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
            aggregate.map_or_else(|| "FAILED".to_string(), |a| a.to_string()),
            opt(phases.map),
            opt(phases.shuffle),
            opt(phases.reduce),
        ])?;
    }
    let dir = history_dir(root);
    std::fs::create_dir_all(&dir)?;
    let path = dir.join(file);
    std::fs::write(&path, w.into_inner()?)?;
    Ok(path)
}

fn report_summary(s: &SessionSummary) {
    eprintln!(
        "{}: {} trials ({} new), status {}, {:.1}s",
        s.strategy,
        s.trials,
        s.new_trials,
        s.status.as_str(),
        s.wall_time.as_secs_f64()
    );
    if let Some(best) = &s.best {
        eprintln!(
            "best: trial {} at {} s",
            best.trial_id,
            best.aggregate_s.expect("best is successful")
        );
    }
}
