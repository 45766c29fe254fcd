//! Tunable parameter space: declaration, validation, grid enumeration, and the
//! mapping between native values and the unit cube the optimizers search.
//!
//! Parameter files are line oriented:
//!
//! ```text
//! # comment
//! mapreduce.reduce.tasks int min=1 max=16 step=1 default=4
//! mapreduce.task.io.sort.mb int min=64 max=512 step=32 unit=MB
//! mapreduce.map.sort.spill.percent float min=0.5 max=0.95 step=0.05
//! mapreduce.map.output.compress cat values=true,false default=false
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::scalar::Scalar;

/// Default ceiling on the number of points `enumerate_grid` will materialize.
pub const DEFAULT_GRID_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: duplicate parameter `{name}`")]
    DuplicateParam { line: usize, name: String },
    #[error("parameter space is empty")]
    SpaceEmpty,
    #[error("line {line}: parameter `{name}`: {msg}")]
    Domain {
        line: usize,
        name: String,
        msg: String,
    },
    #[error("invalid point: {}", join_violations(.0))]
    InvalidPoint(Vec<Violation>),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("grid has {count} points, cap is {cap}")]
    GridTooLarge { count: u128, cap: u128 },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Integer,
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Integer {
        lower: i64,
        upper: i64,
        step: i64,
        default: i64,
    },
    Continuous {
        lower: f64,
        upper: f64,
        step: f64,
        default: f64,
    },
    Categorical {
        values: Vec<String>,
        default: usize,
    },
}

/// One tunable configuration key.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub domain: Domain,
    pub unit: Option<String>,
}

/// A concrete parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Cat(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Cat(s) => f.write_str(s),
        }
    }
}

/// A problem found by [`validate_point`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("unknown key `{0}`")]
    ExtraKey(String),
    #[error("`{name}` = {value} is out of range")]
    OutOfRange { name: String, value: String },
    #[error("`{name}` = {value} is not on the step grid")]
    Unsnapped { name: String, value: String },
    #[error("`{name}` has a value of the wrong kind")]
    WrongKind { name: String },
}

/// Assignment of a value to every parameter of a space.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrialPoint(BTreeMap<String, ParamValue>);

impl TrialPoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: ParamValue) -> Option<ParamValue> {
        self.0.insert(name.into(), value)
    }

    pub fn with(mut self, name: impl Into<String>, value: ParamValue) -> Self {
        self.insert(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.0.get(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ParamValue)> {
        self.0.iter()
    }
}

impl FromIterator<(String, ParamValue)> for TrialPoint {
    fn from_iter<I: IntoIterator<Item = (String, ParamValue)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl ParamSpec {
    pub fn kind(&self) -> ParamKind {
        match self.domain {
            Domain::Integer { .. } => ParamKind::Integer,
            Domain::Continuous { .. } => ParamKind::Continuous,
            Domain::Categorical { .. } => ParamKind::Categorical,
        }
    }

    pub fn default_value(&self) -> ParamValue {
        match &self.domain {
            Domain::Integer { default, .. } => ParamValue::Int(*default),
            Domain::Continuous { default, .. } => ParamValue::Float(*default),
            Domain::Categorical { values, default } => ParamValue::Cat(values[*default].clone()),
        }
    }

    /// Reads a value of this parameter's kind back from its display form.
    /// Domain membership is not checked.
    pub fn parse_value(&self, text: &str) -> Option<ParamValue> {
        match self.domain {
            Domain::Integer { .. } => text.parse().ok().map(ParamValue::Int),
            Domain::Continuous { .. } => text.parse().ok().map(ParamValue::Float),
            Domain::Categorical { .. } => Some(ParamValue::Cat(text.to_string())),
        }
    }

    /// Position of `value` along this axis, used to order report rows.
    pub fn sort_key(&self, value: &ParamValue) -> f64 {
        match (&self.domain, value) {
            (Domain::Categorical { values, .. }, ParamValue::Cat(s)) => {
                values.iter().position(|v| v == s).map_or(f64::INFINITY, |i| i as f64)
            }
            (_, ParamValue::Int(v)) => *v as f64,
            (_, ParamValue::Float(v)) => *v,
            _ => f64::INFINITY,
        }
    }

    /// Number of grid values along this parameter.
    pub fn grid_count(&self) -> u64 {
        match &self.domain {
            Domain::Integer {
                lower, upper, step, ..
            } => ((upper - lower) / step) as u64 + 1,
            Domain::Continuous {
                lower, upper, step, ..
            } => continuous_kmax(*lower, *upper, *step) + 1,
            Domain::Categorical { values, .. } => values.len() as u64,
        }
    }

    /// The `k`-th grid value (`k < grid_count()`).
    pub fn grid_value(&self, k: u64) -> ParamValue {
        match &self.domain {
            Domain::Integer { lower, step, .. } => ParamValue::Int(lower + k as i64 * step),
            Domain::Continuous {
                lower, upper, step, ..
            } => ParamValue::Float(continuous_at(*lower, *upper, *step, k)),
            Domain::Categorical { values, .. } => ParamValue::Cat(values[k as usize].clone()),
        }
    }

    fn check(&self, value: &ParamValue) -> Option<Violation> {
        let name = &self.name;
        let out_of_range = || Violation::OutOfRange {
            name: name.clone(),
            value: value.to_string(),
        };
        match (&self.domain, value) {
            (
                Domain::Integer {
                    lower, upper, step, ..
                },
                ParamValue::Int(v),
            ) => {
                if v < lower || v > upper {
                    Some(out_of_range())
                } else if (v - lower) % step != 0 {
                    Some(Violation::Unsnapped {
                        name: name.clone(),
                        value: value.to_string(),
                    })
                } else {
                    None
                }
            }
            (Domain::Continuous { lower, upper, .. }, ParamValue::Float(v)) => {
                if !v.is_finite() || v < lower || v > upper {
                    Some(out_of_range())
                } else {
                    None
                }
            }
            (Domain::Categorical { values, .. }, ParamValue::Cat(v)) => {
                if values.iter().any(|x| x == v) {
                    None
                } else {
                    Some(out_of_range())
                }
            }
            _ => Some(Violation::WrongKind { name: name.clone() }),
        }
    }

    fn encode<T: Scalar>(&self, value: &ParamValue) -> T {
        let ratio = match (&self.domain, value) {
            (Domain::Integer { lower, upper, .. }, ParamValue::Int(v)) => {
                if upper == lower {
                    0.0
                } else {
                    (v - lower) as f64 / (upper - lower) as f64
                }
            }
            (Domain::Continuous { lower, upper, .. }, ParamValue::Float(v)) => {
                if upper == lower {
                    0.0
                } else {
                    (v - lower) / (upper - lower)
                }
            }
            (Domain::Categorical { values, .. }, ParamValue::Cat(v)) => {
                let n = values.len();
                let i = values.iter().position(|x| x == v).unwrap_or(0);
                if n <= 1 {
                    0.0
                } else {
                    i as f64 / (n - 1) as f64
                }
            }
            _ => 0.0,
        };
        T::lit(ratio)
    }

    fn decode(&self, u: f64) -> ParamValue {
        let u = if u.is_nan() { 0.0 } else { u.clamp(0.0, 1.0) };
        match &self.domain {
            Domain::Integer {
                lower, upper, step, ..
            } => {
                let kmax = (upper - lower) / step;
                let span = (upper - lower) as f64;
                let k = (u * span / *step as f64).round() as i64;
                ParamValue::Int(lower + k.clamp(0, kmax) * step)
            }
            Domain::Continuous {
                lower, upper, step, ..
            } => {
                let kmax = continuous_kmax(*lower, *upper, *step);
                let v = lower + u * (upper - lower);
                let k = ((v - lower) / step).round().max(0.0) as u64;
                ParamValue::Float(continuous_at(*lower, *upper, *step, k.min(kmax)))
            }
            Domain::Categorical { values, .. } => {
                let n = values.len();
                let i = (u * (n - 1) as f64).round() as usize;
                ParamValue::Cat(values[i.min(n - 1)].clone())
            }
        }
    }
}

fn continuous_kmax(lower: f64, upper: f64, step: f64) -> u64 {
    ((upper - lower) / step + 1e-9).floor() as u64
}

fn continuous_at(lower: f64, upper: f64, step: f64, k: u64) -> f64 {
    (lower + k as f64 * step).min(upper)
}

impl fmt::Display for ParamSpec {
    /// Renders the spec as a parameter-file line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.domain {
            Domain::Integer {
                lower,
                upper,
                step,
                default,
            } => write!(
                f,
                "{} int min={lower} max={upper} step={step} default={default}",
                self.name
            )?,
            Domain::Continuous {
                lower,
                upper,
                step,
                default,
            } => write!(
                f,
                "{} float min={lower} max={upper} step={step} default={default}",
                self.name
            )?,
            Domain::Categorical { values, default } => write!(
                f,
                "{} cat values={} default={}",
                self.name,
                values.join(","),
                values[*default]
            )?,
        }
        if let Some(unit) = &self.unit {
            write!(f, " unit={unit}")?;
        }
        Ok(())
    }
}

/// Ordered set of parameter specs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSpace {
    specs: Vec<ParamSpec>,
}

impl ParamSpace {
    /// Builds a space, rejecting duplicate names.
    pub fn new(specs: Vec<ParamSpec>) -> Result<Self, SpaceError> {
        let mut seen = HashSet::new();
        for (i, s) in specs.iter().enumerate() {
            if !seen.insert(s.name.clone()) {
                return Err(SpaceError::DuplicateParam {
                    line: i + 1,
                    name: s.name.clone(),
                });
            }
        }
        Ok(Self { specs })
    }

    /// A zero-dimensional space, for projects that only run jobs at fixed settings.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn specs(&self) -> &[ParamSpec] {
        &self.specs
    }

    pub fn dim(&self) -> usize {
        self.specs.len()
    }

    pub fn spec(&self, name: &str) -> Option<&ParamSpec> {
        self.specs.iter().find(|s| s.name == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    pub fn default_point(&self) -> TrialPoint {
        self.specs
            .iter()
            .map(|s| (s.name.clone(), s.default_value()))
            .collect()
    }

    /// Total grid size, or `None` on overflow.
    pub fn grid_len(&self) -> Option<u128> {
        self.specs
            .iter()
            .try_fold(1u128, |acc, s| acc.checked_mul(s.grid_count() as u128))
    }

    /// Grid point at `index` in canonical order (last spec varies fastest).
    pub fn grid_point(&self, mut index: u128) -> TrialPoint {
        let mut values = vec![None; self.specs.len()];
        for (i, s) in self.specs.iter().enumerate().rev() {
            let n = s.grid_count() as u128;
            values[i] = Some(s.grid_value((index % n) as u64));
            index /= n;
        }
        self.specs
            .iter()
            .zip(values)
            .map(|(s, v)| (s.name.clone(), v.expect("filled")))
            .collect()
    }

    /// Short stable fingerprint of the space's canonical rendering.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for s in &self.specs {
            h.update(s.to_string().as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())[..16].to_string()
    }

    /// Maps a continuous cube point onto the nearest decodable lattice point,
    /// expressed back in cube coordinates.
    pub fn snap_unit<T: Scalar>(&self, u: &[T]) -> Result<Vec<T>, SpaceError> {
        let p = decode_vector(u, self)?;
        Ok(self
            .specs
            .iter()
            .map(|s| s.encode(p.get(&s.name).expect("decoded point is complete")))
            .collect())
    }
}

impl fmt::Display for ParamSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.specs {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Parses the line-oriented parameter file format.
pub fn parse_param_file(text: &str) -> Result<ParamSpace, SpaceError> {
    let mut specs: Vec<ParamSpec> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let spec = parse_param_line(line, line_no)?;
        if specs.iter().any(|s| s.name == spec.name) {
            return Err(SpaceError::DuplicateParam {
                line: line_no,
                name: spec.name,
            });
        }
        specs.push(spec);
    }
    if specs.is_empty() {
        return Err(SpaceError::SpaceEmpty);
    }
    ParamSpace::new(specs)
}

fn parse_param_line(line: &str, line_no: usize) -> Result<ParamSpec, SpaceError> {
    let syntax = |msg: String| SpaceError::Syntax { line: line_no, msg };
    let mut tokens = line.split_whitespace();
    let name = tokens.next().expect("nonempty line").to_string();
    let kind = tokens
        .next()
        .ok_or_else(|| syntax(format!("`{name}` has no kind (int, float, cat)")))?;
    let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| syntax(format!("expected key=value, found `{tok}`")))?;
        if v.is_empty() {
            return Err(syntax(format!("empty value for `{k}`")));
        }
        if kv.insert(k, v).is_some() {
            return Err(syntax(format!("repeated key `{k}`")));
        }
    }
    let allowed: &[&str] = match kind {
        "int" | "float" => &["min", "max", "step", "default", "unit"],
        "cat" => &["values", "default"],
        other => return Err(syntax(format!("unknown kind `{other}`"))),
    };
    if let Some(k) = kv.keys().find(|k| !allowed.contains(k)) {
        return Err(syntax(format!("unknown key `{k}` for kind `{kind}`")));
    }
    let domain_err = |msg: String| SpaceError::Domain {
        line: line_no,
        name: name.clone(),
        msg,
    };
    let unit = kv.get("unit").map(|s| s.to_string());

    let domain = match kind {
        "cat" => {
            let raw = kv
                .get("values")
                .ok_or_else(|| syntax("missing `values=`".into()))?;
            let values: Vec<String> = raw.split(',').map(str::to_string).collect();
            if values.iter().any(String::is_empty) {
                return Err(syntax("empty category in `values=`".into()));
            }
            let distinct: HashSet<_> = values.iter().collect();
            if distinct.len() != values.len() {
                return Err(domain_err("category values must be distinct".into()));
            }
            let default = match kv.get("default") {
                None => 0,
                Some(d) => values
                    .iter()
                    .position(|v| v == d)
                    .ok_or_else(|| domain_err(format!("default `{d}` is not a listed value")))?,
            };
            Domain::Categorical { values, default }
        }
        _ => {
            let num = |key: &str| -> Result<Option<f64>, SpaceError> {
                match kv.get(key) {
                    None => Ok(None),
                    Some(s) => s
                        .parse::<f64>()
                        .map(Some)
                        .map_err(|_| syntax(format!("`{key}={s}` is not a number"))),
                }
            };
            let req = |key: &str| -> Result<f64, SpaceError> {
                num(key)?.ok_or_else(|| syntax(format!("missing `{key}=`")))
            };
            let (lower, upper, step) = (req("min")?, req("max")?, req("step")?);
            let default = num("default")?.unwrap_or(lower);
            if ![lower, upper, step, default].iter().all(|v| v.is_finite()) {
                return Err(domain_err("bounds must be finite".into()));
            }
            if lower > upper {
                return Err(domain_err(format!("min {lower} exceeds max {upper}")));
            }
            if step <= 0.0 {
                return Err(domain_err(format!("step must be positive, got {step}")));
            }
            if default < lower || default > upper {
                return Err(domain_err(format!(
                    "default {default} outside [{lower}, {upper}]"
                )));
            }
            if kind == "int" {
                let whole = |v: f64| v.fract() == 0.0 && v.abs() < 9.0e15;
                if ![lower, upper, step, default].into_iter().all(whole) {
                    return Err(domain_err("integer parameter needs whole numbers".into()));
                }
                let (lower, upper, step, default) =
                    (lower as i64, upper as i64, step as i64, default as i64);
                if (default - lower) % step != 0 {
                    return Err(domain_err(format!(
                        "default {default} is not on the step grid"
                    )));
                }
                Domain::Integer {
                    lower,
                    upper,
                    step,
                    default,
                }
            } else {
                Domain::Continuous {
                    lower,
                    upper,
                    step,
                    default,
                }
            }
        }
    };
    Ok(ParamSpec { name, domain, unit })
}

/// Checks a point against the space, reporting every violation.
pub fn validate_point(point: &TrialPoint, space: &ParamSpace) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    for s in &space.specs {
        match point.get(&s.name) {
            None => out.push(Violation::MissingKey(s.name.clone())),
            Some(v) => out.extend(s.check(v)),
        }
    }
    for (k, _) in point.iter() {
        if space.spec(k).is_none() {
            out.push(Violation::ExtraKey(k.clone()));
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Maps a valid point into the unit cube, one coordinate per spec.
pub fn encode_point<T: Scalar>(point: &TrialPoint, space: &ParamSpace) -> Result<Vec<T>, SpaceError> {
    validate_point(point, space).map_err(SpaceError::InvalidPoint)?;
    Ok(space
        .specs
        .iter()
        .map(|s| s.encode(point.get(&s.name).expect("validated")))
        .collect())
}

/// Maps any real vector to a valid point: clamp, scale, snap to the step grid.
pub fn decode_vector<T: Scalar>(u: &[T], space: &ParamSpace) -> Result<TrialPoint, SpaceError> {
    if u.len() != space.dim() {
        return Err(SpaceError::DimensionMismatch {
            expected: space.dim(),
            got: u.len(),
        });
    }
    Ok(space
        .specs
        .iter()
        .zip(u)
        .map(|(s, x)| (s.name.clone(), s.decode(x.as_f64())))
        .collect())
}

/// Every grid point in canonical order, failing if the grid exceeds `cap`.
pub fn enumerate_grid(space: &ParamSpace, cap: u128) -> Result<Vec<TrialPoint>, SpaceError> {
    let count = space.grid_len().unwrap_or(u128::MAX);
    if count > cap {
        return Err(SpaceError::GridTooLarge { count, cap });
    }
    Ok((0..count).map(|i| space.grid_point(i)).collect())
}

/// Hadoop generic options, `-D<name>=<value>`, in spec order.
pub fn render_config_args(point: &TrialPoint, space: &ParamSpace) -> Result<Vec<String>, SpaceError> {
    validate_point(point, space).map_err(SpaceError::InvalidPoint)?;
    Ok(space
        .specs
        .iter()
        .map(|s| format!("-D{}={}", s.name, point.get(&s.name).expect("validated")))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_param() -> ParamSpace {
        parse_param_file(
            "mapreduce.reduce.tasks int min=1 max=16 step=1\n\
             mapreduce.task.io.sort.mb int min=64 max=512 step=1 default=100\n",
        )
        .unwrap()
    }

    #[test]
    fn parses_reduce_tasks_line() {
        let s = parse_param_file("mapreduce.reduce.tasks int min=1 max=16 step=1").unwrap();
        assert_eq!(s.dim(), 1);
        assert_eq!(s.specs()[0].name, "mapreduce.reduce.tasks");
        assert_eq!(
            s.specs()[0].domain,
            Domain::Integer {
                lower: 1,
                upper: 16,
                step: 1,
                default: 1
            }
        );
    }

    #[test]
    fn comment_only_file_is_empty() {
        assert_eq!(
            parse_param_file("# a\n   # b\n\n").unwrap_err(),
            SpaceError::SpaceEmpty
        );
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = parse_param_file(
            "mapreduce.task.io.sort.mb int min=64 max=512 step=32\n\
             mapreduce.task.io.sort.mb int min=64 max=256 step=32\n",
        )
        .unwrap_err();
        assert!(matches!(err, SpaceError::DuplicateParam { line: 2, .. }));
    }

    #[test]
    fn crlf_and_key_order() {
        let s = parse_param_file("# x\r\na float step=0.5 max=2 min=0 unit=s\r\nb cat default=y values=x,y\r\n")
            .unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.specs()[0].unit.as_deref(), Some("s"));
        assert_eq!(s.specs()[1].default_value(), ParamValue::Cat("y".into()));
    }

    #[test]
    fn domain_and_syntax_errors() {
        let cases = [
            ("a int min=5 max=1 step=1", "domain"),
            ("a int min=1 max=5 step=0", "domain"),
            ("a int min=1 max=5 step=-1", "domain"),
            ("a int min=1.5 max=5 step=1", "domain"),
            ("a int min=1 max=5 step=1 default=9", "domain"),
            ("a cat values=x,x", "domain"),
            ("a cat values=x,y default=z", "domain"),
            ("a", "syntax"),
            ("a blob min=1", "syntax"),
            ("a int min=1 max=5", "syntax"),
            ("a int min=x max=5 step=1", "syntax"),
            ("a int min=1 max=5 step=1 bogus", "syntax"),
            ("a cat values=x,y unit=MB", "syntax"),
        ];
        for (text, want) in cases {
            let err = parse_param_file(text).unwrap_err();
            let ok = match want {
                "domain" => matches!(err, SpaceError::Domain { line: 1, .. }),
                _ => matches!(err, SpaceError::Syntax { line: 1, .. }),
            };
            assert!(ok, "{text}: {err:?}");
        }
    }

    #[test]
    fn validate_reports_all_violations() {
        let s = two_param();
        let ok = TrialPoint::new()
            .with("mapreduce.reduce.tasks", ParamValue::Int(8))
            .with("mapreduce.task.io.sort.mb", ParamValue::Int(100));
        assert!(validate_point(&ok, &s).is_ok());

        let low = ok.clone().with("mapreduce.reduce.tasks", ParamValue::Int(0));
        assert!(matches!(
            validate_point(&low, &s).unwrap_err()[..],
            [Violation::OutOfRange { .. }]
        ));

        let missing = TrialPoint::new().with("mapreduce.reduce.tasks", ParamValue::Int(8));
        assert_eq!(
            validate_point(&missing, &s).unwrap_err(),
            vec![Violation::MissingKey("mapreduce.task.io.sort.mb".into())]
        );

        let many = TrialPoint::new()
            .with("mapreduce.reduce.tasks", ParamValue::Float(2.0))
            .with("extra", ParamValue::Int(1));
        assert_eq!(validate_point(&many, &s).unwrap_err().len(), 3);
    }

    #[test]
    fn unsnapped_integer_is_a_violation() {
        let s = parse_param_file("m int min=64 max=512 step=32").unwrap();
        let p = TrialPoint::new().with("m", ParamValue::Int(100));
        assert!(matches!(
            validate_point(&p, &s).unwrap_err()[..],
            [Violation::Unsnapped { .. }]
        ));
    }

    #[test]
    fn encode_bounds_and_interior() {
        let s = parse_param_file("io.sort.mb int min=64 max=512 step=1").unwrap();
        let enc = |v| encode_point::<f64>(&TrialPoint::new().with("io.sort.mb", ParamValue::Int(v)), &s).unwrap()[0];
        assert_eq!(enc(64), 0.0);
        assert_eq!(enc(512), 1.0);
        assert_relative_eq!(enc(100), 0.080_357_142_857_142_85, epsilon = 1e-12);
    }

    #[test]
    fn encode_degenerate_and_categorical() {
        let s = parse_param_file("a int min=3 max=3 step=1\nb cat values=x,y,z default=z\nc cat values=only").unwrap();
        let u: Vec<f64> = encode_point(&s.default_point(), &s).unwrap();
        assert_eq!(u, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn decode_half_rounds_away_and_clamps() {
        let s = parse_param_file("t int min=1 max=16 step=1").unwrap();
        assert_eq!(decode_vector(&[0.5f64], &s).unwrap().get("t"), Some(&ParamValue::Int(9)));
        assert_eq!(decode_vector(&[1.7f64], &s).unwrap().get("t"), Some(&ParamValue::Int(16)));
        assert_eq!(decode_vector(&[-3.0f64], &s).unwrap().get("t"), Some(&ParamValue::Int(1)));
        assert_eq!(decode_vector(&[f64::NAN], &s).unwrap().get("t"), Some(&ParamValue::Int(1)));
        assert!(matches!(
            decode_vector(&[0.1f64, 0.2], &s),
            Err(SpaceError::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn decode_stays_on_grid_when_upper_is_off_grid() {
        let s = parse_param_file("t int min=0 max=10 step=4\nf float min=0 max=0.3 step=0.1").unwrap();
        let p = decode_vector(&[1.0f64, 1.0], &s).unwrap();
        assert_eq!(p.get("t"), Some(&ParamValue::Int(8)));
        assert_eq!(p.get("f"), Some(&ParamValue::Float(0.3)));
        assert!(validate_point(&p, &s).is_ok());
    }

    #[test]
    fn roundtrip_example_point() {
        let s = parse_param_file("reduce.tasks int min=1 max=16 step=1\nio.sort.mb int min=64 max=512 step=32").unwrap();
        let p = TrialPoint::new()
            .with("reduce.tasks", ParamValue::Int(8))
            .with("io.sort.mb", ParamValue::Int(256));
        let u: Vec<f64> = encode_point(&p, &s).unwrap();
        assert_eq!(decode_vector(&u, &s).unwrap(), p);
        let u32v: Vec<f32> = encode_point(&p, &s).unwrap();
        assert_eq!(decode_vector(&u32v, &s).unwrap(), p);
    }

    #[test]
    fn grid_order_last_fastest() {
        let s = parse_param_file("tasks int min=1 max=4 step=1\ncompress cat values=true,false").unwrap();
        let g = enumerate_grid(&s, DEFAULT_GRID_CAP).unwrap();
        assert_eq!(g.len(), 8);
        let pair = |p: &TrialPoint| (p.get("tasks").cloned().unwrap(), p.get("compress").unwrap().to_string());
        assert_eq!(pair(&g[0]), (ParamValue::Int(1), "true".into()));
        assert_eq!(pair(&g[1]), (ParamValue::Int(1), "false".into()));
        assert_eq!(pair(&g[2]), (ParamValue::Int(2), "true".into()));
    }

    #[test]
    fn grid_degenerate_and_cap() {
        let s = parse_param_file("a int min=5 max=5 step=1").unwrap();
        assert_eq!(enumerate_grid(&s, DEFAULT_GRID_CAP).unwrap().len(), 1);
        let big = parse_param_file("a int min=0 max=999 step=1\nb int min=0 max=999 step=1\nc int min=0 max=9 step=1").unwrap();
        assert_eq!(
            enumerate_grid(&big, DEFAULT_GRID_CAP).unwrap_err(),
            SpaceError::GridTooLarge { count: 10_000_000, cap: DEFAULT_GRID_CAP }
        );
        assert_eq!(enumerate_grid(&big, 10).unwrap_err(), SpaceError::GridTooLarge { count: 10_000_000, cap: 10 });
    }

    #[test]
    fn renders_generic_options() {
        let s = parse_param_file(
            "mapreduce.reduce.tasks int min=1 max=16 step=1\n\
             mapreduce.task.io.sort.mb int min=64 max=512 step=32\n\
             mapreduce.map.output.compress cat values=true,false\n\
             mapreduce.map.sort.spill.percent float min=0.5 max=0.9 step=0.05",
        )
        .unwrap();
        let p = TrialPoint::new()
            .with("mapreduce.reduce.tasks", ParamValue::Int(8))
            .with("mapreduce.task.io.sort.mb", ParamValue::Int(256))
            .with("mapreduce.map.output.compress", ParamValue::Cat("true".into()))
            .with("mapreduce.map.sort.spill.percent", ParamValue::Float(0.8));
        assert_eq!(
            render_config_args(&p, &s).unwrap(),
            vec![
                "-Dmapreduce.reduce.tasks=8",
                "-Dmapreduce.task.io.sort.mb=256",
                "-Dmapreduce.map.output.compress=true",
                "-Dmapreduce.map.sort.spill.percent=0.8",
            ]
        );
        let bad = p.with("mapreduce.reduce.tasks", ParamValue::Int(99));
        assert!(matches!(render_config_args(&bad, &s), Err(SpaceError::InvalidPoint(_))));
    }

    #[test]
    fn space_hash_is_order_sensitive() {
        let a = parse_param_file("a int min=0 max=1 step=1\nb int min=0 max=1 step=1").unwrap();
        let b = parse_param_file("b int min=0 max=1 step=1\na int min=0 max=1 step=1").unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), parse_param_file(&a.to_string()).unwrap().hash());
    }
}
