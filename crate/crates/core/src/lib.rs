//! Self-tuning harness for batch-job configuration parameters.
//!
//! A [`project::Project`] describes a parameter space, a job and an executor.
//! A session ([`session::run_tuning`]) repeatedly asks a searcher for a
//! point, runs the job there, records the median running time in
//! `history/trials.csv` and feeds it back, until the searcher finishes or
//! the budget is spent.
//!
//! The optimizers in [`dfo`] and [`direct_search`] are generic over the
//! scalar type; the aliases below fix them to `f64`.

pub mod cli;
pub mod dfo;
pub mod direct_search;
pub mod executor;
mod kv;
pub mod paramspace;
pub mod project;
pub mod report;
pub mod scalar;
pub mod search;
pub mod session;

pub use executor::{Executor, JobSpec, TrialResult, TrialStatus};
pub use paramspace::{parse_param_file, ParamSpace, ParamValue, TrialPoint};
pub use project::{load_project, Project};
pub use scalar::Scalar;
pub use search::{Searcher, Strategy, StrategyOptions};
pub use session::{best_of, resume_session, run_tuning, SessionSummary, TrialRecord};

pub type NelderMead = dfo::NelderMead<f64>;
pub type TrustRegion = dfo::TrustRegion<f64>;
pub type Compass = direct_search::Compass<f64>;
pub type DiagonalModel = dfo::DiagonalModel<f64>;
