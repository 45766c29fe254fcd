//! Quadratic-model trust-region search ("bobyqa-lite").
//!
//! Keeps `2d + 1` interpolation points, fits the separable quadratic
//! `q(u) = c + gᵀ(u − u₀) + ½ Σ h_i (u_i − u₀_i)²` around the center `u₀`, and
//! proposes the minimizer of `q` over the box `[u₀ − Δ, u₀ + Δ] ∩ [0,1]^d`.
//! This is a deliberately simplified BOBYQA: no Frobenius-norm Hessian updates
//! and no Lagrange-polynomial geometry management.

use crate::dfo::linalg::lstsq;
use crate::scalar::{clamp_unit_vec, dist, Scalar};
use crate::search::{CubeOptimizer, Proposal, SearchError};

/// Radius is never expanded past this.
pub const MAX_RADIUS: f64 = 0.5;
const SWEEP_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionOptions {
    /// Starting radius Δ₀, also the offset of the axis seeds.
    pub initial_radius: f64,
    /// Finish once the radius would drop below this.
    pub rho_min: f64,
}

impl Default for TrustRegionOptions {
    fn default() -> Self {
        Self {
            initial_radius: 0.25,
            rho_min: 1e-3,
        }
    }
}

impl TrustRegionOptions {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.rho_min > 0.0 && self.rho_min <= self.initial_radius && self.initial_radius <= MAX_RADIUS {
            Ok(())
        } else {
            Err(SearchError::InvalidOptions(format!(
                "trust region needs 0 < rho_min <= initial_radius <= {MAX_RADIUS}, got {} / {}",
                self.rho_min, self.initial_radius
            )))
        }
    }
}

/// Separable quadratic model around `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalModel<T> {
    pub center: Vec<T>,
    pub c: T,
    pub g: Vec<T>,
    pub h: Vec<T>,
}

impl<T: Scalar> DiagonalModel<T> {
    /// Least-squares fit to `(point, value)` pairs; `None` if the design is
    /// singular or a value is not finite.
    pub fn fit(center: &[T], points: &[(Vec<T>, T)]) -> Option<Self> {
        let d = center.len();
        let half = T::lit(0.5);
        let rows: Vec<Vec<T>> = points
            .iter()
            .map(|(u, _)| {
                let mut row = Vec::with_capacity(2 * d + 1);
                row.push(T::one());
                row.extend(u.iter().zip(center).map(|(&x, &c)| x - c));
                row.extend(u.iter().zip(center).map(|(&x, &c)| half * (x - c) * (x - c)));
                row
            })
            .collect();
        let rhs: Vec<T> = points.iter().map(|(_, f)| *f).collect();
        let coef = lstsq(&rows, &rhs)?;
        Some(Self {
            center: center.to_vec(),
            c: coef[0],
            g: coef[1..=d].to_vec(),
            h: coef[d + 1..].to_vec(),
        })
    }

    pub fn eval(&self, u: &[T]) -> T {
        let half = T::lit(0.5);
        let mut q = self.c;
        for i in 0..u.len() {
            let s = u[i] - self.center[i];
            q = q + self.g[i] * s + half * self.h[i] * s * s;
        }
        q
    }

    /// Minimizes the model over `[center − radius, center + radius] ∩ [0,1]^d`
    /// by cyclic exact coordinate minimization.
    pub fn minimize_in_box(&self, radius: T) -> Vec<T> {
        let d = self.center.len();
        let lo: Vec<T> = self.center.iter().map(|&c| (c - radius).max(T::zero()) - c).collect();
        let hi: Vec<T> = self.center.iter().map(|&c| (c + radius).min(T::one()) - c).collect();
        let mut s = vec![T::zero(); d];
        for _ in 0..MAX_SWEEPS {
            let mut change = T::zero();
            for i in 0..d {
                // the model is separable, so other coordinates do not enter
                let next = coordinate_argmin(self.g[i], self.h[i], lo[i], hi[i]);
                change = change.max((next - s[i]).abs());
                s[i] = next;
            }
            if change < T::lit(SWEEP_TOL) {
                break;
            }
        }
        self.center.iter().zip(&s).map(|(&c, &si)| (c + si).unit_clamp()).collect()
    }
}

/// argmin of `g s + ½ h s²` on `[lo, hi]` (which contains 0); ties prefer the
/// smaller step.
fn coordinate_argmin<T: Scalar>(g: T, h: T, lo: T, hi: T) -> T {
    let phi = |s: T| g * s + T::lit(0.5) * h * s * s;
    let mut cands = vec![T::zero(), lo, hi];
    if h > T::zero() {
        cands.push((-g / h).max(lo).min(hi));
    }
    cands
        .into_iter()
        .fold(None::<(T, T)>, |best, s| {
            let v = phi(s);
            match best {
                Some((bs, bv)) if bv < v || (bv == v && bs.abs() <= s.abs()) => Some((bs, bv)),
                _ => Some((s, v)),
            }
        })
        .map(|(s, _)| s)
        .unwrap_or_else(T::zero)
}

#[derive(Debug, Clone)]
enum Phase<T> {
    Seed { next: usize },
    Iterate,
    /// Waiting for the value at a model minimizer.
    Step {
        point: Vec<T>,
        predicted: T,
        on_boundary: bool,
    },
    /// Waiting for a geometry sample that replaces interpolation point `slot`.
    Geometry { point: Vec<T>, slot: usize },
}

#[derive(Debug, Clone)]
pub struct TrustRegion<T: Scalar> {
    opts: TrustRegionOptions,
    seeds: Vec<Vec<T>>,
    points: Vec<(Vec<T>, T)>,
    center: usize,
    radius: T,
    axis_cursor: usize,
    phase: Phase<T>,
    model: Option<DiagonalModel<T>>,
    iterations: usize,
    done: bool,
}

impl<T: Scalar> TrustRegion<T> {
    pub fn new(start: Vec<T>, opts: TrustRegionOptions) -> Result<Self, SearchError> {
        opts.validate()?;
        if start.is_empty() {
            return Err(SearchError::InvalidOptions("trust region needs at least one dimension".into()));
        }
        let r0 = T::lit(opts.initial_radius);
        let u0 = clamp_unit_vec(&start);
        let mut seeds = vec![u0.clone()];
        for i in 0..u0.len() {
            for sign in [T::one(), -T::one()] {
                let mut u = u0.clone();
                u[i] = (u0[i] + sign * r0).unit_clamp();
                if seeds.contains(&u) {
                    // pushed onto an existing seed by the bound: step half as far inward
                    let inward = if u0[i] + sign * r0 > T::one() || sign > T::zero() { -T::one() } else { T::one() };
                    u[i] = (u0[i] + inward * r0 * T::lit(0.5)).unit_clamp();
                }
                seeds.push(u);
            }
        }
        Ok(Self {
            opts,
            seeds,
            points: Vec::new(),
            center: 0,
            radius: r0,
            axis_cursor: 0,
            phase: Phase::Seed { next: 0 },
            model: None,
            iterations: 0,
            done: false,
        })
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn center(&self) -> Option<(&[T], T)> {
        self.points.get(self.center).map(|(u, f)| (u.as_slice(), *f))
    }

    pub fn interpolation_set(&self) -> &[(Vec<T>, T)] {
        &self.points
    }

    pub fn model(&self) -> Option<&DiagonalModel<T>> {
        self.model.as_ref()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    fn dim(&self) -> usize {
        self.seeds[0].len()
    }

    fn center_point(&self) -> &[T] {
        &self.points[self.center].0
    }

    /// Halves the radius, finishing instead of dropping below `rho_min`.
    fn shrink(&mut self) {
        let next = self.radius * T::lit(0.5);
        if next < T::lit(self.opts.rho_min) {
            self.done = true;
        } else {
            self.radius = next;
        }
    }

    fn farthest_from_center(&self) -> usize {
        let c = self.center_point();
        (0..self.points.len())
            .filter(|&i| i != self.center)
            .max_by(|&a, &b| {
                dist(&self.points[a].0, c)
                    .partial_cmp(&dist(&self.points[b].0, c))
                    .expect("finite")
                    .then(b.cmp(&a))
            })
            .expect("m >= 3")
    }

    fn worst_point(&self) -> usize {
        (0..self.points.len())
            .filter(|&i| i != self.center)
            .max_by(|&a, &b| {
                let (fa, fb) = (self.points[a].1, self.points[b].1);
                fa.partial_cmp(&fb).unwrap_or(std::cmp::Ordering::Equal).then(b.cmp(&a))
            })
            .expect("m >= 3")
    }

    /// Axis sample `center ± radius·e_j` for the next `j` in rotation that does
    /// not coincide with an interpolation point.
    fn geometry_sample(&mut self, slot: usize) -> Phase<T> {
        let d = self.dim();
        let c = self.center_point().to_vec();
        let mut fallback = None;
        for _ in 0..2 * d {
            let j = self.axis_cursor % (2 * d);
            self.axis_cursor += 1;
            let sign = if j % 2 == 0 { T::one() } else { -T::one() };
            let mut u = c.clone();
            u[j / 2] = (c[j / 2] + sign * self.radius).unit_clamp();
            if !self.points.iter().any(|(p, _)| *p == u) {
                return Phase::Geometry { point: u, slot };
            }
            fallback.get_or_insert(u);
        }
        Phase::Geometry {
            point: fallback.expect("d >= 1"),
            slot,
        }
    }

    /// Decides the next proposal from the current interpolation set.
    fn plan(&mut self) -> Phase<T> {
        let center = self.center_point().to_vec();
        loop {
            if self.done {
                return Phase::Iterate;
            }
            let finite: Vec<_> = self.points.iter().filter(|(_, f)| f.is_finite()).cloned().collect();
            let model = if finite.len() == self.points.len() {
                DiagonalModel::fit(&center, &self.points)
            } else {
                None
            };
            let Some(model) = model else {
                self.model = None;
                let slot = self.worst_point();
                return self.geometry_sample(slot);
            };
            let plus = model.minimize_in_box(self.radius);
            let predicted = model.eval(&center) - model.eval(&plus);
            self.model = Some(model);
            let scale = self.points[self.center].1.abs().max(T::one());
            if predicted > T::epsilon() * scale * T::lit(16.0) && plus != center {
                let on_boundary = plus
                    .iter()
                    .zip(&center)
                    .any(|(&p, &c)| (p - c).abs() >= self.radius * T::lit(1.0 - 1e-6));
                return Phase::Step {
                    point: plus,
                    predicted,
                    on_boundary,
                };
            }
            // the model sees no descent inside the region
            self.iterations += 1;
            self.shrink();
            if self.done {
                return Phase::Iterate;
            }
            let far = self.farthest_from_center();
            let linf = self.points[far]
                .0
                .iter()
                .zip(&center)
                .fold(T::zero(), |m, (&p, &c)| m.max((p - c).abs()));
            if linf > T::lit(2.0) * self.radius {
                return self.geometry_sample(far);
            }
        }
    }

    fn adopt_if_better(&mut self, slot: usize) {
        if self.points[slot].1 < self.points[self.center].1 {
            self.center = slot;
        }
    }
}

impl<T: Scalar> CubeOptimizer<T> for TrustRegion<T> {
    fn ask(&mut self) -> Result<Proposal<Vec<T>>, SearchError> {
        if self.done {
            return Ok(Proposal::Done);
        }
        if matches!(self.phase, Phase::Iterate) {
            self.phase = self.plan();
            if self.done {
                return Ok(Proposal::Done);
            }
        }
        Ok(Proposal::Point(match &self.phase {
            Phase::Seed { next } => self.seeds[*next].clone(),
            Phase::Step { point, .. } | Phase::Geometry { point, .. } => point.clone(),
            Phase::Iterate => unreachable!("planned above"),
        }))
    }

    fn tell(&mut self, value: T) -> Result<(), SearchError> {
        let f = if value.is_nan() { T::infinity() } else { value };
        match std::mem::replace(&mut self.phase, Phase::Iterate) {
            Phase::Seed { next } => {
                self.points.push((self.seeds[next].clone(), f));
                if next + 1 < self.seeds.len() {
                    self.phase = Phase::Seed { next: next + 1 };
                } else {
                    // center on the best seed; ties keep the earliest
                    self.center = (0..self.points.len())
                        .fold(0, |b, i| if self.points[i].1 < self.points[b].1 { i } else { b });
                }
            }
            Phase::Iterate => {
                return Err(SearchError::StateCorrupt("trust region received a value before asking".into()));
            }
            Phase::Step {
                point,
                predicted,
                on_boundary,
            } => {
                self.iterations += 1;
                let f0 = self.points[self.center].1;
                let rho = (f0 - f) / predicted;
                if rho < T::lit(0.25) || !rho.is_finite() {
                    self.shrink();
                } else if rho > T::lit(0.75) && on_boundary {
                    self.radius = (self.radius * T::lit(2.0)).min(T::lit(MAX_RADIUS));
                }
                if f.is_finite() {
                    let accepted = rho > T::zero();
                    let slot = if accepted {
                        // farthest from the new center, which is not yet in the set
                        let far = (0..self.points.len())
                            .max_by(|&a, &b| {
                                dist(&self.points[a].0, &point)
                                    .partial_cmp(&dist(&self.points[b].0, &point))
                                    .expect("finite")
                                    .then(b.cmp(&a))
                            })
                            .expect("nonempty");
                        self.points[far] = (point, f);
                        far
                    } else {
                        let far = self.farthest_from_center();
                        self.points[far] = (point, f);
                        far
                    };
                    if accepted {
                        self.center = slot;
                    }
                }
            }
            Phase::Geometry { point, slot } => {
                if !f.is_finite() {
                    self.shrink();
                }
                if f.is_finite() || !self.points[slot].1.is_finite() {
                    self.points[slot] = (point, f);
                    self.adopt_if_better(slot);
                }
            }
        }
        Ok(())
    }
}
