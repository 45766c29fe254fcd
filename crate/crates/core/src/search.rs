//! Searcher contract shared by every tuning strategy.
//!
//! A searcher is a propose/observe state machine: the session asks for the
//! next point, executes it, and reports the aggregate back. Because every
//! strategy is deterministic given its options and the observed values, a
//! searcher rebuilt from a recorded history reaches exactly the same state.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dfo::{NelderMead, NelderMeadOptions, TrustRegion, TrustRegionOptions};
use crate::direct_search::{Compass, CompassOptions, GridSearcher};
use crate::paramspace::{decode_vector, encode_point, ParamSpace, SpaceError, TrialPoint};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("searcher state corrupt: {0}")]
    StateCorrupt(String),
    #[error("unknown strategy `{0}` (expected one of: grid, compass, nelder-mead, bobyqa-lite)")]
    UnknownStrategy(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Grid,
    Compass,
    NelderMead,
    BobyqaLite,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Grid, Strategy::Compass, Strategy::NelderMead, Strategy::BobyqaLite];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Grid => "grid",
            Strategy::Compass => "compass",
            Strategy::NelderMead => "nelder-mead",
            Strategy::BobyqaLite => "bobyqa-lite",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| SearchError::UnknownStrategy(s.to_string()))
    }
}

/// Next step requested by a searcher.
#[derive(Debug, Clone, PartialEq)]
pub enum Proposal<P> {
    Point(P),
    Done,
}

impl<P> Proposal<P> {
    pub fn is_done(&self) -> bool {
        matches!(self, Proposal::Done)
    }
}

/// Ask/tell optimizer over the unit cube `[0,1]^d`.
///
/// `ask` is idempotent until the matching `tell`.
pub trait CubeOptimizer<T: Scalar> {
    fn ask(&mut self) -> Result<Proposal<Vec<T>>, SearchError>;
    /// Reports the objective of the last asked point; failed evaluations are `+∞`.
    fn tell(&mut self, value: T) -> Result<(), SearchError>;
}

/// Session-facing searcher over native parameter points.
pub trait Searcher: Send {
    fn strategy(&self) -> Strategy;
    fn propose(&mut self) -> Result<Proposal<TrialPoint>, SearchError>;
    /// Reports the aggregate objective of the last proposal (`None` = failed).
    fn observe(&mut self, aggregate: Option<f64>) -> Result<(), SearchError>;
}

/// Options for every strategy; a session records all of them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StrategyOptions {
    pub compass: CompassOptions,
    pub nelder_mead: NelderMeadOptions,
    pub trust_region: TrustRegionOptions,
}

impl StrategyOptions {
    pub fn validate(&self) -> Result<(), SearchError> {
        self.compass.validate()?;
        self.nelder_mead.validate()?;
        self.trust_region.validate()
    }

    /// `key=value` pairs for the session manifest.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let c = &self.compass;
        let n = &self.nelder_mead;
        let t = &self.trust_region;
        [
            ("compass.initial_step", c.initial_step.to_string()),
            ("compass.min_step", c.min_step.to_string()),
            ("compass.expand_on_success", c.expand_on_success.to_string()),
            ("nelder_mead.alpha", n.alpha.to_string()),
            ("nelder_mead.gamma", n.gamma.to_string()),
            ("nelder_mead.beta", n.beta.to_string()),
            ("nelder_mead.sigma", n.sigma.to_string()),
            ("nelder_mead.init_offset", n.init_offset.to_string()),
            ("nelder_mead.spread_tol", n.spread_tol.to_string()),
            ("trust_region.initial_radius", t.initial_radius.to_string()),
            ("trust_region.rho_min", t.rho_min.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Applies one `key=value` pair; returns `false` for unknown keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, SearchError> {
        let num = || {
            value
                .parse::<f64>()
                .map_err(|_| SearchError::InvalidOptions(format!("{key}={value}")))
        };
        match key {
            "compass.initial_step" => self.compass.initial_step = num()?,
            "compass.min_step" => self.compass.min_step = num()?,
            "compass.expand_on_success" => {
                self.compass.expand_on_success = value
                    .parse()
                    .map_err(|_| SearchError::InvalidOptions(format!("{key}={value}")))?
            }
            "nelder_mead.alpha" => self.nelder_mead.alpha = num()?,
            "nelder_mead.gamma" => self.nelder_mead.gamma = num()?,
            "nelder_mead.beta" => self.nelder_mead.beta = num()?,
            "nelder_mead.sigma" => self.nelder_mead.sigma = num()?,
            "nelder_mead.init_offset" => self.nelder_mead.init_offset = num()?,
            "nelder_mead.spread_tol" => self.nelder_mead.spread_tol = num()?,
            "trust_region.initial_radius" => self.trust_region.initial_radius = num()?,
            "trust_region.rho_min" => self.trust_region.rho_min = num()?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Adapts a [`CubeOptimizer`] to a [`Searcher`] by decoding its proposals.
pub struct EncodedSearcher<O> {
    strategy: Strategy,
    optimizer: O,
    space: ParamSpace,
}

impl<O> EncodedSearcher<O> {
    pub fn new(strategy: Strategy, optimizer: O, space: ParamSpace) -> Self {
        Self {
            strategy,
            optimizer,
            space,
        }
    }

    pub fn optimizer(&self) -> &O {
        &self.optimizer
    }
}

impl<O: CubeOptimizer<f64> + Send> Searcher for EncodedSearcher<O> {
    fn strategy(&self) -> Strategy {
        self.strategy
    }

    fn propose(&mut self) -> Result<Proposal<TrialPoint>, SearchError> {
        Ok(match self.optimizer.ask()? {
            Proposal::Point(u) => Proposal::Point(decode_vector(&u, &self.space)?),
            Proposal::Done => Proposal::Done,
        })
    }

    fn observe(&mut self, aggregate: Option<f64>) -> Result<(), SearchError> {
        self.optimizer.tell(aggregate.unwrap_or(f64::INFINITY))
    }
}

/// Builds a fresh searcher for `strategy` over `space`, starting from the
/// space's default point.
pub fn build_searcher(
    strategy: Strategy,
    space: &ParamSpace,
    options: &StrategyOptions,
) -> Result<Box<dyn Searcher>, SearchError> {
    options.validate()?;
    if space.dim() == 0 {
        return Err(SearchError::InvalidOptions("parameter space is empty".into()));
    }
    let start: Vec<f64> = encode_point(&space.default_point(), space)?;
    Ok(match strategy {
        Strategy::Grid => Box::new(GridSearcher::new(space.clone())?),
        Strategy::Compass => {
            let snap_space = space.clone();
            let compass = Compass::new(
                start,
                options.compass.clone(),
                Box::new(move |u: &[f64]| snap_space.snap_unit(u).expect("dimension fixed")),
            )?;
            Box::new(EncodedSearcher::new(strategy, compass, space.clone()))
        }
        Strategy::NelderMead => {
            let nm = NelderMead::new(start, options.nelder_mead.clone())?;
            Box::new(EncodedSearcher::new(strategy, nm, space.clone()))
        }
        Strategy::BobyqaLite => {
            let tr = TrustRegion::new(start, options.trust_region.clone())?;
            Box::new(EncodedSearcher::new(strategy, tr, space.clone()))
        }
    })
}

/// Rebuilds a searcher's state by replaying `(point, aggregate)` pairs.
/// Fails if the searcher would have proposed anything else.
pub fn replay<'a, I>(searcher: &mut dyn Searcher, history: I) -> Result<(), SearchError>
where
    I: IntoIterator<Item = (&'a TrialPoint, Option<f64>)>,
{
    for (i, (point, value)) in history.into_iter().enumerate() {
        match searcher.propose()? {
            Proposal::Point(p) if &p == point => searcher.observe(value)?,
            Proposal::Point(p) => {
                return Err(SearchError::StateCorrupt(format!(
                    "trial {} was {point:?} but the searcher proposes {p:?}",
                    i + 1
                )))
            }
            Proposal::Done => {
                return Err(SearchError::StateCorrupt(format!(
                    "searcher finished before recorded trial {}",
                    i + 1
                )))
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_ids_roundtrip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert_eq!(
            "warp".parse::<Strategy>().unwrap_err(),
            SearchError::UnknownStrategy("warp".into())
        );
    }

    #[test]
    fn options_pairs_roundtrip() {
        let mut o = StrategyOptions::default();
        o.compass.expand_on_success = true;
        o.trust_region.rho_min = 2e-3;
        let mut back = StrategyOptions::default();
        for (k, v) in o.to_pairs() {
            assert!(back.set(&k, &v).unwrap());
        }
        assert_eq!(back, o);
        assert!(!back.set("nope", "1").unwrap());
    }
}
