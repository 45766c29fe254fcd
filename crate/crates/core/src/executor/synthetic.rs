//! Closed-form response surfaces standing in for a cluster.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ExecError, Executor, JobSpec, TrialResult};
use crate::paramspace::{encode_point, ParamSpace, TrialPoint};

const MIN_SECONDS: f64 = 0.001;
/// ChaCha words reserved per repetition within a trial's stream.
const WORDS_PER_REP: u128 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceFamily {
    /// `base + Σ w_i (u_i − o_i)²`
    Bowl,
    /// `base + Σ w_i (1 − u_i)`; fastest at the all-ones corner.
    MonotonePlaneBasin,
    /// Two-dimensional Rosenbrock valley, minimum at (1, 1).
    Rosenbrock,
    /// Nearest-cell lookup into an explicit table.
    LookupTable,
}

impl SurfaceFamily {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bowl" => Some(Self::Bowl),
            "monotone_plane_basin" => Some(Self::MonotonePlaneBasin),
            "rosenbrock" => Some(Self::Rosenbrock),
            "lookup_table" => Some(Self::LookupTable),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bowl => "bowl",
            Self::MonotonePlaneBasin => "monotone_plane_basin",
            Self::Rosenbrock => "rosenbrock",
            Self::LookupTable => "lookup_table",
        }
    }
}

/// Regular table over the unit cube; `values` is row-major with the last
/// axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupTable {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSpec {
    pub family: SurfaceFamily,
    pub base_s: f64,
    pub weights: Vec<f64>,
    pub optimum: Vec<f64>,
    pub noise_sd_s: f64,
    pub seed: u64,
    pub table: Option<LookupTable>,
}

impl SurfaceSpec {
    pub fn bowl(base_s: f64, weights: Vec<f64>, optimum: Vec<f64>) -> Self {
        Self {
            family: SurfaceFamily::Bowl,
            base_s,
            weights,
            optimum,
            noise_sd_s: 0.0,
            seed: 0,
            table: None,
        }
    }

    pub fn with_noise(mut self, sd: f64, seed: u64) -> Self {
        self.noise_sd_s = sd;
        self.seed = seed;
        self
    }

    /// Same surface with its noise stream mixed with `session_seed`.
    pub fn reseeded(&self, session_seed: u64) -> Self {
        let mut s = self.clone();
        s.seed = self.seed ^ session_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        s
    }

    /// Checks the surface against a dimension.
    pub fn validate(&self, dim: usize) -> Result<(), ExecError> {
        let bad = |m: String| Err(ExecError::InvalidSurface(m));
        if !(self.base_s > 0.0) {
            return bad(format!("base_s must be positive, got {}", self.base_s));
        }
        if !(self.noise_sd_s >= 0.0) {
            return bad(format!("noise_sd_s must be non-negative, got {}", self.noise_sd_s));
        }
        match self.family {
            SurfaceFamily::Bowl | SurfaceFamily::MonotonePlaneBasin => {
                if self.weights.len() != dim {
                    return Err(ExecError::DimensionMismatch { expected: self.weights.len(), got: dim });
                }
                if self.weights.iter().any(|w| !(*w > 0.0)) {
                    return bad("weights must be positive".into());
                }
                if self.family == SurfaceFamily::Bowl {
                    if self.optimum.len() != dim {
                        return Err(ExecError::DimensionMismatch { expected: self.optimum.len(), got: dim });
                    }
                    if self.optimum.iter().any(|o| !(0.0..=1.0).contains(o)) {
                        return bad("optimum coordinates must lie in [0, 1]".into());
                    }
                }
            }
            SurfaceFamily::Rosenbrock => {
                if dim != 2 {
                    return Err(ExecError::DimensionMismatch { expected: 2, got: dim });
                }
            }
            SurfaceFamily::LookupTable => {
                let Some(t) = &self.table else {
                    return bad("lookup_table needs a table".into());
                };
                if t.shape.len() != dim || t.shape.contains(&0) {
                    return bad(format!("table shape {:?} does not fit {dim} parameters", t.shape));
                }
                if t.shape.iter().product::<usize>() != t.values.len() {
                    return bad("table value count does not match its shape".into());
                }
            }
        }
        Ok(())
    }

    fn noiseless(&self, u: &[f64]) -> f64 {
        match self.family {
            SurfaceFamily::Bowl => {
                self.base_s
                    + self
                        .weights
                        .iter()
                        .zip(&self.optimum)
                        .zip(u)
                        .map(|((w, o), x)| w * (x - o) * (x - o))
                        .sum::<f64>()
            }
            SurfaceFamily::MonotonePlaneBasin => {
                self.base_s + self.weights.iter().zip(u).map(|(w, x)| w * (1.0 - x)).sum::<f64>()
            }
            SurfaceFamily::Rosenbrock => {
                let (a, b) = (u[0], u[1]);
                self.base_s + 100.0 * (b - a * a).powi(2) + (1.0 - a).powi(2)
            }
            SurfaceFamily::LookupTable => {
                let t = self.table.as_ref().expect("validated");
                let mut idx = 0usize;
                for (&n, &x) in t.shape.iter().zip(u) {
                    let cell = (x * (n - 1) as f64).round() as usize;
                    idx = idx * n + cell.min(n - 1);
                }
                t.values[idx]
            }
        }
    }

    fn noise(&self, trial_id: u64, rep: u32) -> f64 {
        if self.noise_sd_s == 0.0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial_id);
        rng.set_word_pos(rep as u128 * WORDS_PER_REP);
        let z: f64 = StandardNormal.sample(&mut rng);
        z * self.noise_sd_s
    }
}

/// Simulated running time at cube point `u` for repetition `rep` of trial
/// `trial_id`. Noise is a pure function of `(seed, trial_id, rep)`.
pub fn synthetic_eval(surface: &SurfaceSpec, u: &[f64], trial_id: u64, rep: u32) -> Result<f64, ExecError> {
    surface.validate(u.len())?;
    let u: Vec<f64> = u.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let t = surface.noiseless(&u) + surface.noise(trial_id, rep);
    Ok(t.max(MIN_SECONDS))
}

/// Executor that evaluates a [`SurfaceSpec`] at the encoded trial point.
#[derive(Debug, Clone)]
pub struct SyntheticExecutor {
    surface: SurfaceSpec,
    space: ParamSpace,
}

impl SyntheticExecutor {
    pub fn new(surface: SurfaceSpec, space: ParamSpace) -> Result<Self, ExecError> {
        surface.validate(space.dim())?;
        Ok(Self { surface, space })
    }

    pub fn surface(&self) -> &SurfaceSpec {
        &self.surface
    }
}

impl Executor for SyntheticExecutor {
    fn execute_trial(&mut self, job: &JobSpec, point: &TrialPoint, trial_id: u64) -> Result<TrialResult, ExecError> {
        let u: Vec<f64> = encode_point(point, &self.space)?;
        let times = (0..job.repetitions)
            .map(|rep| synthetic_eval(&self.surface, &u, trial_id, rep))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TrialResult::success(times))
    }
}
