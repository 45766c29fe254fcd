//! Direct search: exhaustive grid and compass (pattern) search.

use crate::paramspace::{ParamSpace, TrialPoint};
use crate::scalar::{clamp_unit_vec, Scalar};
use crate::search::{CubeOptimizer, Proposal, SearchError, Searcher, Strategy};

/// Walks the space's grid in canonical order, one proposal per point.
#[derive(Debug, Clone)]
pub struct GridSearcher {
    space: ParamSpace,
    cursor: u128,
    len: u128,
}

impl GridSearcher {
    pub fn new(space: ParamSpace) -> Result<Self, SearchError> {
        let len = space
            .grid_len()
            .ok_or_else(|| SearchError::InvalidOptions("grid size overflows".into()))?;
        Ok(Self { space, cursor: 0, len })
    }

    pub fn cursor(&self) -> u128 {
        self.cursor
    }

    pub fn len(&self) -> u128 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl Searcher for GridSearcher {
    fn strategy(&self) -> Strategy {
        Strategy::Grid
    }

    fn propose(&mut self) -> Result<Proposal<TrialPoint>, SearchError> {
        if self.cursor > self.len {
            return Err(SearchError::StateCorrupt(format!(
                "grid cursor {} past grid size {}",
                self.cursor, self.len
            )));
        }
        if self.cursor == self.len {
            return Ok(Proposal::Done);
        }
        Ok(Proposal::Point(self.space.grid_point(self.cursor)))
    }

    fn observe(&mut self, _aggregate: Option<f64>) -> Result<(), SearchError> {
        if self.cursor >= self.len {
            return Err(SearchError::StateCorrupt("observation after grid exhausted".into()));
        }
        self.cursor += 1;
        Ok(())
    }
}

/// Compass search settings, in encoded (unit-cube) units.
#[derive(Debug, Clone, PartialEq)]
pub struct CompassOptions {
    pub initial_step: f64,
    pub min_step: f64,
    /// Double the step (capped at 1) after an improving iteration.
    pub expand_on_success: bool,
}

impl Default for CompassOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.25,
            min_step: 1.0 / 256.0,
            expand_on_success: false,
        }
    }
}

impl CompassOptions {
    pub fn validate(&self) -> Result<(), SearchError> {
        let ok = self.initial_step > 0.0
            && self.initial_step <= 1.0
            && self.min_step > 0.0
            && self.min_step <= self.initial_step;
        if ok {
            Ok(())
        } else {
            Err(SearchError::InvalidOptions(format!(
                "compass needs 0 < min_step <= initial_step <= 1, got {} / {}",
                self.min_step, self.initial_step
            )))
        }
    }
}

/// Maps a cube point to the lattice point it decodes to, so polls that land on
/// the same configuration can be recognized.
pub type Projection<T> = Box<dyn Fn(&[T]) -> Vec<T> + Send>;

/// Compass search on the unit cube.
///
/// Each iteration polls `incumbent ± step·e_i` (clamped) for every axis, one
/// point at a time. Polls that project onto the incumbent or onto an earlier
/// poll of the same iteration are skipped. A strictly better poll becomes the
/// incumbent; otherwise the step halves. Finishes once the step drops to
/// `min_step` or below.
pub struct Compass<T: Scalar> {
    opts: CompassOptions,
    incumbent: Vec<T>,
    incumbent_value: Option<T>,
    step: T,
    min_step: T,
    polls: Vec<Vec<T>>,
    poll_values: Vec<T>,
    project: Projection<T>,
    iterations: usize,
    done: bool,
}

impl<T: Scalar> Compass<T> {
    pub fn new(start: Vec<T>, opts: CompassOptions, project: Projection<T>) -> Result<Self, SearchError> {
        opts.validate()?;
        if start.is_empty() {
            return Err(SearchError::InvalidOptions("compass needs at least one dimension".into()));
        }
        Ok(Self {
            step: T::lit(opts.initial_step),
            min_step: T::lit(opts.min_step),
            opts,
            incumbent: clamp_unit_vec(&start),
            incumbent_value: None,
            polls: Vec::new(),
            poll_values: Vec::new(),
            project,
            iterations: 0,
            done: false,
        })
    }

    /// Compass without lattice snapping (pure continuous search).
    pub fn continuous(start: Vec<T>, opts: CompassOptions) -> Result<Self, SearchError> {
        Self::new(start, opts, Box::new(|u: &[T]| u.to_vec()))
    }

    pub fn incumbent(&self) -> (&[T], Option<T>) {
        (&self.incumbent, self.incumbent_value)
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Poll set around the incumbent, in `+e_0, −e_0, +e_1, …` order.
    fn build_polls(&self) -> Vec<Vec<T>> {
        let mut keys = vec![(self.project)(&self.incumbent)];
        let mut out = Vec::new();
        for i in 0..self.incumbent.len() {
            for sign in [T::one(), -T::one()] {
                let mut u = self.incumbent.clone();
                u[i] = (u[i] + sign * self.step).unit_clamp();
                let key = (self.project)(&u);
                if !keys.contains(&key) {
                    keys.push(key);
                    out.push(u);
                }
            }
        }
        out
    }

    fn shrink(&mut self) {
        self.step = self.step / T::lit(2.0);
        if self.step <= self.min_step {
            self.done = true;
        }
    }

    fn finish_iteration(&mut self) {
        self.iterations += 1;
        let incumbent_value = self.incumbent_value.expect("incumbent evaluated");
        let best = self
            .poll_values
            .iter()
            .enumerate()
            .fold(None::<(usize, T)>, |acc, (i, &v)| match acc {
                Some((_, bv)) if !(v < bv) => acc,
                _ => Some((i, v)),
            });
        match best {
            Some((i, v)) if v < incumbent_value => {
                self.incumbent = self.polls[i].clone();
                self.incumbent_value = Some(v);
                if self.opts.expand_on_success {
                    self.step = (self.step * T::lit(2.0)).min(T::one());
                }
            }
            _ => self.shrink(),
        }
        self.polls.clear();
        self.poll_values.clear();
    }
}

impl<T: Scalar> CubeOptimizer<T> for Compass<T> {
    fn ask(&mut self) -> Result<Proposal<Vec<T>>, SearchError> {
        if self.incumbent_value.is_none() {
            return Ok(Proposal::Point(self.incumbent.clone()));
        }
        loop {
            if self.done {
                return Ok(Proposal::Done);
            }
            if self.polls.is_empty() {
                self.polls = self.build_polls();
                if self.polls.is_empty() {
                    // every poll collapses onto the incumbent
                    self.iterations += 1;
                    self.shrink();
                    continue;
                }
            }
            return Ok(Proposal::Point(self.polls[self.poll_values.len()].clone()));
        }
    }

    fn tell(&mut self, value: T) -> Result<(), SearchError> {
        let value = if value.is_nan() { T::infinity() } else { value };
        if self.incumbent_value.is_none() {
            self.incumbent_value = Some(value);
            return Ok(());
        }
        if self.done || self.poll_values.len() >= self.polls.len() {
            return Err(SearchError::StateCorrupt("compass received an unexpected value".into()));
        }
        self.poll_values.push(value);
        if self.poll_values.len() == self.polls.len() {
            self.finish_iteration();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paramspace::{enumerate_grid, parse_param_file, DEFAULT_GRID_CAP};

    fn ask_point<T: Scalar>(c: &mut Compass<T>) -> Vec<T> {
        match c.ask().unwrap() {
            Proposal::Point(u) => u,
            Proposal::Done => panic!("unexpected Done"),
        }
    }

    #[test]
    fn grid_proposes_canonical_order_then_done() {
        let space = parse_param_file("tasks int min=1 max=4 step=1\ncompress cat values=true,false").unwrap();
        let grid = enumerate_grid(&space, DEFAULT_GRID_CAP).unwrap();
        let mut g = GridSearcher::new(space).unwrap();
        for _ in 0..3 {
            g.propose().unwrap();
            g.observe(Some(1.0)).unwrap();
        }
        assert_eq!(g.propose().unwrap(), Proposal::Point(grid[3].clone()));
        for _ in 3..8 {
            g.propose().unwrap();
            g.observe(None).unwrap();
        }
        assert!(g.propose().unwrap().is_done());
        assert!(matches!(g.observe(Some(1.0)), Err(SearchError::StateCorrupt(_))));
    }

    #[test]
    fn grid_single_point() {
        let space = parse_param_file("a int min=2 max=2 step=1").unwrap();
        let mut g = GridSearcher::new(space).unwrap();
        assert!(!g.propose().unwrap().is_done());
        g.observe(Some(3.0)).unwrap();
        assert!(g.propose().unwrap().is_done());
    }

    #[test]
    fn compass_poll_set_order() {
        let mut c = Compass::continuous(vec![0.5, 0.5], CompassOptions::default()).unwrap();
        assert_eq!(ask_point(&mut c), vec![0.5, 0.5]);
        c.tell(10.0).unwrap();
        let mut polls = Vec::new();
        for _ in 0..4 {
            polls.push(ask_point(&mut c));
            c.tell(11.0).unwrap();
        }
        assert_eq!(polls, vec![vec![0.75, 0.5], vec![0.25, 0.5], vec![0.5, 0.75], vec![0.5, 0.25]]);
        assert_eq!(c.step(), 0.125);
    }

    #[test]
    fn compass_ask_is_idempotent() {
        let mut c = Compass::continuous(vec![0.5f32], CompassOptions::default()).unwrap();
        c.tell(1.0).unwrap();
        assert_eq!(ask_point(&mut c), ask_point(&mut c));
    }

    #[test]
    fn compass_skips_clamped_duplicate() {
        let mut c = Compass::continuous(vec![1.0, 0.5], CompassOptions::default()).unwrap();
        ask_point(&mut c);
        c.tell(10.0).unwrap();
        let mut n = 0;
        while c.step() == 0.25 {
            let u = ask_point(&mut c);
            assert_ne!(u, vec![1.0, 0.5]);
            c.tell(20.0).unwrap();
            n += 1;
        }
        assert_eq!(n, 3);
    }

    #[test]
    fn compass_moves_on_strict_improvement_only() {
        let mut c = Compass::continuous(vec![0.5], CompassOptions::default()).unwrap();
        ask_point(&mut c);
        c.tell(5.0).unwrap();
        ask_point(&mut c);
        c.tell(5.0).unwrap(); // tie: +step
        ask_point(&mut c);
        c.tell(4.0).unwrap(); // better: -step
        assert_eq!(c.incumbent(), (&[0.25][..], Some(4.0)));
        assert_eq!(c.step(), 0.25);
    }

    #[test]
    fn compass_expand_caps_at_one() {
        let opts = CompassOptions {
            initial_step: 0.75,
            expand_on_success: true,
            ..Default::default()
        };
        let mut c = Compass::continuous(vec![0.0], opts).unwrap();
        ask_point(&mut c);
        c.tell(5.0).unwrap();
        assert_eq!(ask_point(&mut c), vec![0.75]);
        c.tell(1.0).unwrap();
        assert_eq!(c.step(), 1.0);
    }

    #[test]
    fn compass_terminates_on_flat_objective() {
        let opts = CompassOptions::default();
        let bound = (opts.initial_step / opts.min_step).log2().ceil() as usize;
        let mut c = Compass::continuous(vec![0.3, 0.6], opts).unwrap();
        ask_point(&mut c);
        c.tell(1.0).unwrap();
        while let Proposal::Point(_) = c.ask().unwrap() {
            c.tell(1.0).unwrap();
        }
        assert_eq!(c.iterations(), bound);
    }

    #[test]
    fn compass_with_snapping_collapses_polls() {
        let space = parse_param_file("x int min=1 max=3 step=1").unwrap();
        let opts = CompassOptions { initial_step: 0.2, ..Default::default() };
        let mut c = Compass::new(vec![0.5], opts, Box::new(move |u: &[f64]| space.snap_unit(u).unwrap())).unwrap();
        ask_point(&mut c);
        c.tell(1.0).unwrap();
        // 0.5 ± 0.2 decodes to x = 2 again (0.7·2 = 1.4 → 1, 0.3·2 = 0.6 → 1), so
        // every iteration is empty until done
        assert!(c.ask().unwrap().is_done());
    }

    #[test]
    fn invalid_options() {
        let bad = CompassOptions { min_step: 0.5, initial_step: 0.25, ..Default::default() };
        assert!(Compass::continuous(vec![0.5], bad).is_err());
    }
}
