//! Problem data for `∂_t^α u + u_xxxx = q u + f` on `(0, L) x (0, T]` with
//! `u` and `u_x` prescribed at both ends.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::{check_order, l1_caputo, l1_weights};
use crate::mesh::{MeshFamily, SpatialGrid, TimeMesh};
use crate::specfun::gamma;

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

pub fn time_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> TimeFn {
    Arc::new(f)
}

pub fn space_time_fn(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> SpaceTimeFn {
    Arc::new(f)
}

/// Boundary data at one end of the interval: `u = value(t)`, `u_x = slope(t)`,
/// plus the analytic Caputo derivatives of both.
#[derive(Clone)]
pub struct BoundaryData {
    pub value: TimeFn,
    pub slope: TimeFn,
    pub caputo_value: Option<TimeFn>,
    pub caputo_slope: Option<TimeFn>,
}

impl BoundaryData {
    pub fn zero() -> Self {
        BoundaryData {
            value: time_fn(|_| 0.0),
            slope: time_fn(|_| 0.0),
            caputo_value: Some(time_fn(|_| 0.0)),
            caputo_slope: Some(time_fn(|_| 0.0)),
        }
    }
}

/// A complete problem instance.
#[derive(Clone)]
pub struct ProblemSpec {
    pub alpha: f64,
    /// Reaction coefficient `q`.
    pub q: f64,
    pub length: f64,
    pub final_time: f64,
    pub source: SpaceTimeFn,
    /// `f_x(0, t)`.
    pub source_dx_left: TimeFn,
    /// `f_x(L, t)`.
    pub source_dx_right: TimeFn,
    pub initial: SpaceFn,
    pub left: BoundaryData,
    pub right: BoundaryData,
    pub exact_u: Option<SpaceTimeFn>,
    /// `u_xx` of the exact solution.
    pub exact_v: Option<SpaceTimeFn>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("alpha", &self.alpha)
            .field("q", &self.q)
            .field("length", &self.length)
            .field("final_time", &self.final_time)
            .field("exact_u", &self.exact_u.is_some())
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// All data identically zero.
    pub fn zero(alpha: f64, q: f64, length: f64, final_time: f64) -> Result<Self> {
        let spec = ProblemSpec {
            alpha,
            q,
            length,
            final_time,
            source: space_time_fn(|_, _| 0.0),
            source_dx_left: time_fn(|_| 0.0),
            source_dx_right: time_fn(|_| 0.0),
            initial: time_fn(|_| 0.0),
            left: BoundaryData::zero(),
            right: BoundaryData::zero(),
            exact_u: Some(space_time_fn(|_, _| 0.0)),
            exact_v: Some(space_time_fn(|_, _| 0.0)),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_order(self.alpha)?;
        if !(self.final_time > 0.0) || !(self.length > 0.0) {
            return Err(Error::invalid("domain length and final time must be positive"));
        }
        if !self.q.is_finite() {
            return Err(Error::invalid("reaction coefficient must be finite"));
        }
        for (name, u0, b0) in [
            ("left", (self.initial)(0.0), (self.left.value)(0.0)),
            ("right", (self.initial)(self.length), (self.right.value)(0.0)),
        ] {
            if (u0 - b0).abs() > 1e-12 * (1.0 + u0.abs().max(b0.abs())) {
                return Err(Error::Config(format!(
                    "initial data ({u0}) incompatible with {name} boundary value ({b0}) at t = 0"
                )));
            }
        }
        Ok(())
    }

    /// Multiply every datum (source, initial and boundary data, exact
    /// solution) by `factor`.
    pub fn scaled(&self, factor: f64) -> ProblemSpec {
        let st = |f: &SpaceTimeFn| -> SpaceTimeFn {
            let f = f.clone();
            space_time_fn(move |x, t| factor * f(x, t))
        };
        let tf = |f: &TimeFn| -> TimeFn {
            let f = f.clone();
            time_fn(move |t| factor * f(t))
        };
        let bd = |b: &BoundaryData| BoundaryData {
            value: tf(&b.value),
            slope: tf(&b.slope),
            caputo_value: b.caputo_value.as_ref().map(tf),
            caputo_slope: b.caputo_slope.as_ref().map(tf),
        };
        ProblemSpec {
            source: st(&self.source),
            source_dx_left: tf(&self.source_dx_left),
            source_dx_right: tf(&self.source_dx_right),
            initial: tf(&self.initial),
            left: bd(&self.left),
            right: bd(&self.right),
            exact_u: self.exact_u.as_ref().map(st),
            exact_v: self.exact_v.as_ref().map(st),
            ..self.clone()
        }
    }
}

/// `ω_β(t)` without error handling, for use inside data closures: yields
/// `inf` at `t = 0` when `β < 1`.
fn omega_fn(beta: f64) -> Result<impl Fn(f64) -> f64 + Copy + Send + Sync> {
    let inv_gamma = 1.0 / gamma(beta)?;
    Ok(move |t: f64| {
        if t == 0.0 && beta == 1.0 {
            inv_gamma
        } else {
            t.powf(beta - 1.0) * inv_gamma
        }
    })
}

/// The manufactured problem with exact solution `u = ω_{1+σ}(t) sin(πx)` on
/// `(0,1) x (0,1]`, `q = 1`.
///
/// Its time regularity is controlled by `σ`: `∂_t u ~ t^{σ-1}` near `t = 0`.
pub fn manufactured_problem(alpha: f64, sigma: f64) -> Result<ProblemSpec> {
    check_order(alpha)?;
    if !(sigma > 0.0 && sigma < 2.0 && sigma != 1.0) {
        return Err(Error::invalid(format!(
            "regularity parameter must lie in (0,1) ∪ (1,2), got {sigma}"
        )));
    }
    let w = omega_fn(1.0 + sigma)?;
    let wd = omega_fn(1.0 + sigma - alpha)?;
    let pi4m1 = PI.powi(4) - 1.0;
    let amplitude = move |t: f64| wd(t) + pi4m1 * w(t);

    let spec = ProblemSpec {
        alpha,
        q: 1.0,
        length: 1.0,
        final_time: 1.0,
        source: space_time_fn(move |x, t| amplitude(t) * (PI * x).sin()),
        source_dx_left: time_fn(move |t| PI * amplitude(t)),
        source_dx_right: time_fn(move |t| -PI * amplitude(t)),
        initial: time_fn(|_| 0.0),
        left: BoundaryData {
            value: time_fn(|_| 0.0),
            slope: time_fn(move |t| PI * w(t)),
            caputo_value: Some(time_fn(|_| 0.0)),
            caputo_slope: Some(time_fn(move |t| PI * wd(t))),
        },
        right: BoundaryData {
            value: time_fn(|_| 0.0),
            slope: time_fn(move |t| -PI * w(t)),
            caputo_value: Some(time_fn(|_| 0.0)),
            caputo_slope: Some(time_fn(move |t| -PI * wd(t))),
        },
        exact_u: Some(space_time_fn(move |x, t| w(t) * (PI * x).sin())),
        exact_v: Some(space_time_fn(move |x, t| -PI * PI * w(t) * (PI * x).sin())),
    };
    spec.validate()?;
    Ok(spec)
}

/// Where the Caputo derivatives inside the boundary closures come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum CaputoSource {
    Analytic,
    /// L1 formula on the boundary-data time series; adds a temporal
    /// consistency error to the boundary closure.
    L1Fallback,
}

/// The combinations `(q - ∂_t^α) b + f` that close the compact scheme at the
/// boundary:
///
/// ```text
/// hat_b0l = (q - ∂_t^α) b0l + f(0, t)      hat_b1l = (q - ∂_t^α) b1l + f_x(0, t)
/// hat_b0r = (q - ∂_t^α) b0r + f(L, t)      hat_b1r = (q - ∂_t^α) b1r + f_x(L, t)
/// ```
///
/// They equal `v_xx` and `v_xxx` of the exact `v = u_xx` at the endpoints.
#[derive(Clone)]
pub struct HatBoundary {
    pub b0l: TimeFn,
    pub b1l: TimeFn,
    pub b0r: TimeFn,
    pub b1r: TimeFn,
    pub source: CaputoSource,
}

impl fmt::Debug for HatBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HatBoundary").field("source", &self.source).finish_non_exhaustive()
    }
}

impl HatBoundary {
    /// `[hat_b0l, hat_b1l, hat_b0r, hat_b1r]` at time `t`.
    pub fn at(&self, t: f64) -> [f64; 4] {
        [(self.b0l)(t), (self.b1l)(t), (self.b0r)(t), (self.b1r)(t)]
    }
}

/// Hat data from the analytic Caputo derivatives in `spec`.
pub fn hat_boundary(spec: &ProblemSpec) -> Result<HatBoundary> {
    let missing = |name: &str| Error::Config(format!("missing Caputo derivative of {name}"));
    let cap_b0l = spec.left.caputo_value.clone().ok_or_else(|| missing("b0l"))?;
    let cap_b1l = spec.left.caputo_slope.clone().ok_or_else(|| missing("b1l"))?;
    let cap_b0r = spec.right.caputo_value.clone().ok_or_else(|| missing("b0r"))?;
    let cap_b1r = spec.right.caputo_slope.clone().ok_or_else(|| missing("b1r"))?;
    Ok(build_hat(spec, [cap_b0l, cap_b1l, cap_b0r, cap_b1r], CaputoSource::Analytic))
}

/// Hat data with any missing Caputo derivative replaced by the L1 formula
/// applied to the boundary data sampled on `mesh`. The fallback callables
/// are only meaningful at mesh nodes and return `NaN` elsewhere.
pub fn hat_boundary_with_fallback(spec: &ProblemSpec, mesh: &TimeMesh) -> Result<HatBoundary> {
    if let Ok(hat) = hat_boundary(spec) {
        return Ok(hat);
    }
    let fallback = |data: &TimeFn| -> Result<TimeFn> {
        let samples: Vec<f64> = mesh.nodes().iter().map(|&t| data(t)).collect();
        let mut values = vec![f64::NAN; samples.len()];
        for n in 1..samples.len() {
            let w = l1_weights(mesh, spec.alpha, n)?;
            values[n] = l1_caputo(&samples[..=n], &w)?;
        }
        let nodes = mesh.nodes().to_vec();
        Ok(time_fn(move |t| match nodes.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(k) => values[k],
            Err(_) => f64::NAN,
        }))
    };
    let pick = |cap: &Option<TimeFn>, data: &TimeFn| -> Result<TimeFn> {
        match cap {
            Some(c) => Ok(c.clone()),
            None => fallback(data),
        }
    };
    let caps = [
        pick(&spec.left.caputo_value, &spec.left.value)?,
        pick(&spec.left.caputo_slope, &spec.left.slope)?,
        pick(&spec.right.caputo_value, &spec.right.value)?,
        pick(&spec.right.caputo_slope, &spec.right.slope)?,
    ];
    Ok(build_hat(spec, caps, CaputoSource::L1Fallback))
}

fn build_hat(spec: &ProblemSpec, caps: [TimeFn; 4], source: CaputoSource) -> HatBoundary {
    let q = spec.q;
    let length = spec.length;
    let [cap_b0l, cap_b1l, cap_b0r, cap_b1r] = caps;
    let (b0l, b1l) = (spec.left.value.clone(), spec.left.slope.clone());
    let (b0r, b1r) = (spec.right.value.clone(), spec.right.slope.clone());
    let (f0, fl) = (spec.source.clone(), spec.source.clone());
    let (fx0, fxl) = (spec.source_dx_left.clone(), spec.source_dx_right.clone());
    HatBoundary {
        b0l: time_fn(move |t| q * b0l(t) - cap_b0l(t) + f0(0.0, t)),
        b1l: time_fn(move |t| q * b1l(t) - cap_b1l(t) + fx0(t)),
        b0r: time_fn(move |t| q * b0r(t) - cap_b0r(t) + fl(length, t)),
        b1r: time_fn(move |t| q * b1r(t) - cap_b1r(t) + fxl(t)),
        source,
    }
}

/// A manufactured-problem run described in a key-value text file:
///
/// ```text
/// # strongly graded temporal run
/// alpha = 0.5
/// sigma = 0.3
/// gamma = 5
/// M = 100
/// N = 1024
/// mesh = graded-uniform   # optional, also: graded
/// ```
///
/// `gamma` defaults to 1 and `mesh` to [`MeshFamily::default`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ProblemFile {
    pub alpha: f64,
    pub sigma: f64,
    pub gamma: f64,
    #[serde(rename = "M")]
    pub intervals: usize,
    #[serde(rename = "N")]
    pub steps: usize,
    pub mesh: MeshFamily,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut alpha = None;
        let mut sigma = None;
        let mut gamma = None;
        let mut intervals = None;
        let mut steps = None;
        let mut mesh = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |detail: String| Error::Parse { line: i + 1, detail };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let real = || {
                value
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("{key}: '{value}' is not a number ({e})")))
            };
            let count = || {
                value
                    .parse::<usize>()
                    .map_err(|e| parse_err(format!("{key}: '{value}' is not a count ({e})")))
            };
            let slot_taken = match key {
                "alpha" => alpha.replace(real()?).is_some(),
                "sigma" => sigma.replace(real()?).is_some(),
                "gamma" => gamma.replace(real()?).is_some(),
                "M" => intervals.replace(count()?).is_some(),
                "N" => steps.replace(count()?).is_some(),
                "mesh" => mesh
                    .replace(value.parse::<MeshFamily>().map_err(|e| parse_err(e.to_string()))?)
                    .is_some(),
                other => return Err(parse_err(format!("unknown key '{other}'"))),
            };
            if slot_taken {
                return Err(parse_err(format!("duplicate key '{key}'")));
            }
        }
        let missing = |key: &str| Error::Config(format!("problem file lacks '{key}'"));
        let file = ProblemFile {
            alpha: alpha.ok_or_else(|| missing("alpha"))?,
            sigma: sigma.ok_or_else(|| missing("sigma"))?,
            gamma: gamma.unwrap_or(1.0),
            intervals: intervals.ok_or_else(|| missing("M"))?,
            steps: steps.ok_or_else(|| missing("N"))?,
            mesh: mesh.unwrap_or_default(),
        };
        file.problem()?;
        file.mesh()?;
        file.grid()?;
        Ok(file)
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        manufactured_problem(self.alpha, self.sigma)
    }

    pub fn mesh(&self) -> Result<TimeMesh> {
        self.mesh.build(self.steps, 1.0, self.gamma)
    }

    pub fn grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(1.0, self.intervals)
    }
}

impl std::str::FromStr for ProblemFile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::omega;

    #[test]
    fn problem_file_round_trip() {
        let text = "# Table 4\nalpha = 0.5\nsigma=0.3\n\ngamma = 5 # graded\nM = 100\nN = 1024\nmesh = graded\n";
        let file: ProblemFile = text.parse().unwrap();
        assert_eq!(
            file,
            ProblemFile {
                alpha: 0.5,
                sigma: 0.3,
                gamma: 5.0,
                intervals: 100,
                steps: 1024,
                mesh: MeshFamily::Graded,
            }
        );
        assert_eq!(file.mesh().unwrap(), TimeMesh::graded(1024, 1.0, 5.0).unwrap());
        let minimal = ProblemFile::parse("alpha=0.9\nsigma=1.9\nM=8\nN=4").unwrap();
        assert_eq!(minimal.gamma, 1.0);
        assert_eq!(minimal.mesh, MeshFamily::GradedUniform);
    }

    #[test]
    fn problem_file_errors() {
        let parse = |s: &str| ProblemFile::parse(s).unwrap_err();
        assert!(matches!(parse("alpha 0.5"), Error::Parse { line: 1, .. }));
        assert!(matches!(parse("alpha=0.5\nbeta=1"), Error::Parse { line: 2, .. }));
        assert!(matches!(parse("alpha=0.5\nalpha=0.6"), Error::Parse { line: 2, .. }));
        assert!(matches!(parse("alpha=x"), Error::Parse { line: 1, .. }));
        assert!(matches!(parse("alpha=0.5\nsigma=0.3\nN=4"), Error::Config(_)));
        assert!(matches!(parse("alpha=1.5\nsigma=0.3\nM=8\nN=4"), Error::InvalidArgument(_)));
        assert!(matches!(parse("alpha=0.5\nsigma=0.3\nM=2\nN=4"), Error::InvalidArgument(_)));
        assert!(matches!(parse("alpha=0.5\nsigma=0.3\nM=8\nN=4\nmesh=odd"), Error::Parse { line: 5, .. }));
    }
    use approx::assert_relative_eq;

    #[test]
    fn manufactured_values() {
        let spec = manufactured_problem(0.3, 1.3).unwrap();
        let u = spec.exact_u.as_ref().unwrap();
        assert_relative_eq!(u(0.5, 1.0), 1.0 / gamma(2.3).unwrap(), max_relative = 1e-14);
        for &t in &[0.01, 0.3, 0.9] {
            let ratio = (spec.left.caputo_slope.as_ref().unwrap())(t) / (spec.left.slope)(t);
            let expected = gamma(2.3).unwrap() * t.powf(-0.3) / gamma(2.0).unwrap();
            assert_relative_eq!(ratio, expected, max_relative = 1e-13);
        }
    }

    #[test]
    fn manufactured_source_is_consistent() {
        // ∂_t^α u + u_xxxx - u = f with ∂_t^α ω_{1+σ} = ω_{1+σ-α}
        let (alpha, sigma) = (0.6, 0.4);
        let spec = manufactured_problem(alpha, sigma).unwrap();
        let pi = std::f64::consts::PI;
        for &(x, t) in &[(0.1, 0.2), (0.5, 1.0), (0.77, 0.003)] {
            let s = (pi * x).sin();
            let caputo = omega(1.0 + sigma - alpha, t).unwrap() * s;
            let u = omega(1.0 + sigma, t).unwrap() * s;
            let uxxxx = pi.powi(4) * u;
            assert_relative_eq!((spec.source)(x, t), caputo + uxxxx - u, max_relative = 1e-13);
        }
    }

    #[test]
    fn manufactured_rejects_bad_parameters() {
        assert!(manufactured_problem(0.0, 0.5).is_err());
        assert!(manufactured_problem(0.5, 1.0).is_err());
        assert!(manufactured_problem(0.5, 2.0).is_err());
    }

    #[test]
    fn hat_values() {
        let spec = manufactured_problem(0.4, 1.7).unwrap();
        let hat = hat_boundary(&spec).unwrap();
        let pi5 = std::f64::consts::PI.powi(5);
        for i in 1..=10 {
            let t = i as f64 / 10.0;
            let w = omega(2.7, t).unwrap();
            let [b0l, b1l, b0r, b1r] = hat.at(t);
            assert!(b0l.abs() < 1e-15);
            assert!(b0r.abs() < 1e-12);
            assert_relative_eq!(b1l, pi5 * w, max_relative = 1e-12);
            assert_relative_eq!(b1r, -pi5 * w, max_relative = 1e-12);
        }

        let zero = ProblemSpec::zero(0.5, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(hat_boundary(&zero).unwrap().at(0.3), [0.0; 4]);
    }

    #[test]
    fn missing_caputo_is_config_error() {
        let mut spec = manufactured_problem(0.5, 0.5).unwrap();
        spec.left.caputo_slope = None;
        assert!(matches!(hat_boundary(&spec), Err(Error::Config(_))));
        let mesh = TimeMesh::graded(64, 1.0, 3.0).unwrap();
        let hat = hat_boundary_with_fallback(&spec, &mesh).unwrap();
        assert_eq!(hat.source, CaputoSource::L1Fallback);
        let exact = hat_boundary(&manufactured_problem(0.5, 0.5).unwrap()).unwrap();
        let t = mesh.node(64);
        assert_relative_eq!((hat.b1l)(t), (exact.b1l)(t), max_relative = 1e-2);
        assert!((hat.b1l)(0.123_456).is_nan());
    }

    #[test]
    fn incompatible_initial_data() {
        let mut spec = ProblemSpec::zero(0.5, 1.0, 1.0, 1.0).unwrap();
        spec.initial = time_fn(|_| 1.0);
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
    }
}
