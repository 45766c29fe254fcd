//! Nelder-Mead simplex as a sequential ask/tell state machine, bounded to the
//! unit cube by clamping every proposal.

use crate::scalar::{clamp_unit_vec, dist, Scalar};
use crate::search::{CubeOptimizer, Proposal, SearchError};

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub sigma: f64,
    /// Edge length of the initial simplex, in encoded units.
    pub init_offset: f64,
    /// Finish once the largest vertex-to-vertex distance drops below this.
    pub spread_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            gamma: 2.0,
            beta: 0.5,
            sigma: 0.5,
            init_offset: 0.1,
            spread_tol: 1e-3,
        }
    }
}

impl NelderMeadOptions {
    pub fn validate(&self) -> Result<(), SearchError> {
        let ok = self.alpha > 0.0
            && self.gamma > 1.0
            && self.beta > 0.0
            && self.beta < 1.0
            && self.sigma > 0.0
            && self.sigma < 1.0
            && self.init_offset > 0.0
            && self.spread_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SearchError::InvalidOptions(format!("nelder-mead coefficients out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone)]
enum Phase<T> {
    /// Evaluating the initial vertices.
    Init { next: usize },
    /// Waiting to start an iteration.
    Iterate,
    Reflect { xr: Vec<T> },
    Expand { xr: Vec<T>, fr: T, xe: Vec<T> },
    Contract { xc: Vec<T> },
    /// Re-evaluating shrunk vertices `1..=d` (sorted order).
    Shrink { next: usize },
}

#[derive(Debug, Clone)]
pub struct NelderMead<T: Scalar> {
    opts: NelderMeadOptions,
    vertices: Vec<Vec<T>>,
    values: Vec<T>,
    phase: Phase<T>,
    done: bool,
}

impl<T: Scalar> NelderMead<T> {
    /// Simplex `start` plus `start + init_offset·e_i`, stepping inward instead
    /// when the forward vertex would leave the cube.
    pub fn new(start: Vec<T>, opts: NelderMeadOptions) -> Result<Self, SearchError> {
        opts.validate()?;
        if start.is_empty() {
            return Err(SearchError::InvalidOptions("nelder-mead needs at least one dimension".into()));
        }
        let x0 = clamp_unit_vec(&start);
        let off = T::lit(opts.init_offset);
        let mut simplex = vec![x0.clone()];
        for i in 0..x0.len() {
            let mut v = x0.clone();
            v[i] = if x0[i] + off <= T::one() { x0[i] + off } else { x0[i] - off };
            simplex.push(clamp_unit_vec(&v));
        }
        Self::from_simplex(simplex, opts)
    }

    /// Starts from an explicit simplex of `d + 1` points.
    pub fn from_simplex(simplex: Vec<Vec<T>>, opts: NelderMeadOptions) -> Result<Self, SearchError> {
        opts.validate()?;
        let d = simplex.first().map_or(0, Vec::len);
        if d == 0 || simplex.len() != d + 1 || simplex.iter().any(|v| v.len() != d) {
            return Err(SearchError::InvalidOptions("simplex must have d + 1 points of dimension d".into()));
        }
        Ok(Self {
            opts,
            vertices: simplex.iter().map(|v| clamp_unit_vec(v)).collect(),
            values: Vec::new(),
            phase: Phase::Init { next: 0 },
            done: false,
        })
    }

    pub fn vertices(&self) -> &[Vec<T>] {
        &self.vertices
    }

    /// Largest distance between any two vertices.
    pub fn spread(&self) -> T {
        let mut m = T::zero();
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                m = m.max(dist(a, b));
            }
        }
        m
    }

    /// Best vertex and its value, once the initial simplex is evaluated.
    pub fn best(&self) -> Option<(&[T], T)> {
        if self.values.len() < self.vertices.len() {
            return None;
        }
        let i = (0..self.values.len())
            .min_by(|&a, &b| self.values[a].partial_cmp(&self.values[b]).expect("no NaN"))?;
        Some((&self.vertices[i], self.values[i]))
    }

    fn sort(&mut self) {
        let mut idx: Vec<usize> = (0..self.vertices.len()).collect();
        idx.sort_by(|&a, &b| self.values[a].partial_cmp(&self.values[b]).expect("no NaN"));
        self.vertices = idx.iter().map(|&i| self.vertices[i].clone()).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }

    fn centroid(&self) -> Vec<T> {
        let d = self.vertices.len() - 1;
        let n = T::from_usize(d).expect("small");
        (0..d)
            .map(|j| self.vertices[..d].iter().fold(T::zero(), |s, v| s + v[j]) / n)
            .collect()
    }

    /// `c + coef·(x − c)`, clamped.
    fn along(c: &[T], x: &[T], coef: T) -> Vec<T> {
        c.iter().zip(x).map(|(&ci, &xi)| (ci + coef * (xi - ci)).unit_clamp()).collect()
    }

    fn replace_worst(&mut self, x: Vec<T>, f: T) {
        let w = self.vertices.len() - 1;
        self.vertices[w] = x;
        self.values[w] = f;
        self.phase = Phase::Iterate;
    }
}

impl<T: Scalar> CubeOptimizer<T> for NelderMead<T> {
    fn ask(&mut self) -> Result<Proposal<Vec<T>>, SearchError> {
        if self.done {
            return Ok(Proposal::Done);
        }
        let point = match &self.phase {
            Phase::Init { next } => self.vertices[*next].clone(),
            Phase::Iterate => {
                self.sort();
                if self.spread() < T::lit(self.opts.spread_tol) {
                    self.done = true;
                    return Ok(Proposal::Done);
                }
                let c = self.centroid();
                let worst = self.vertices.last().expect("nonempty");
                // x_r = c + alpha (c − x_worst)
                let xr = Self::along(&c, worst, -T::lit(self.opts.alpha));
                self.phase = Phase::Reflect { xr: xr.clone() };
                xr
            }
            Phase::Reflect { xr } => xr.clone(),
            Phase::Expand { xe, .. } => xe.clone(),
            Phase::Contract { xc } => xc.clone(),
            Phase::Shrink { next } => self.vertices[*next].clone(),
        };
        Ok(Proposal::Point(point))
    }

    fn tell(&mut self, value: T) -> Result<(), SearchError> {
        let f = if value.is_nan() { T::infinity() } else { value };
        let d = self.vertices.len() - 1;
        match std::mem::replace(&mut self.phase, Phase::Iterate) {
            Phase::Init { next } => {
                self.values.push(f);
                self.phase = if next + 1 == self.vertices.len() {
                    Phase::Iterate
                } else {
                    Phase::Init { next: next + 1 }
                };
            }
            Phase::Iterate => {
                return Err(SearchError::StateCorrupt("nelder-mead received a value before asking".into()));
            }
            Phase::Reflect { xr } => {
                let (f_best, f_second_worst) = (self.values[0], self.values[d - 1]);
                if f < f_best {
                    let c = self.centroid();
                    let xe = Self::along(&c, &xr, T::lit(self.opts.gamma));
                    self.phase = Phase::Expand { xr, fr: f, xe };
                } else if f < f_second_worst {
                    self.replace_worst(xr, f);
                } else {
                    let c = self.centroid();
                    let xc = Self::along(&c, &self.vertices[d], T::lit(self.opts.beta));
                    self.phase = Phase::Contract { xc };
                }
            }
            Phase::Expand { xr, fr, xe } => {
                if f < fr {
                    self.replace_worst(xe, f);
                } else {
                    self.replace_worst(xr, fr);
                }
            }
            Phase::Contract { xc } => {
                if f < self.values[d] {
                    self.replace_worst(xc, f);
                } else {
                    let best = self.vertices[0].clone();
                    let sigma = T::lit(self.opts.sigma);
                    for v in self.vertices.iter_mut().skip(1) {
                        *v = Self::along(&best, v, sigma);
                    }
                    self.phase = Phase::Shrink { next: 1 };
                }
            }
            Phase::Shrink { next } => {
                self.values[next] = f;
                self.phase = if next == d { Phase::Iterate } else { Phase::Shrink { next: next + 1 } };
            }
        }
        Ok(())
    }
}
