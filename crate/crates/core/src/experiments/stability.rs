//! Amplification of data perturbations.
//!
//! The scheme is linear, so the difference between a base run and a run with
//! perturbed data is itself the discrete solution driven by the perturbation
//! alone. The probe therefore solves the perturbation-only problem directly,
//! which keeps the measured ratios free of cancellation between two nearly
//! equal runs.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::mesh::{SpatialGrid, TimeMesh};
use crate::problem::{space_time_fn, time_fn, BoundaryData, ProblemSpec};
use crate::solver::{run_with, SolverOptions};
use crate::specfun::gamma;

use super::tables::StudyConfig;
use super::parallel_map;

const MODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Perturbation {
    Initial,
    Source,
    Boundary,
}

impl Perturbation {
    pub const ALL: [Perturbation; 3] = [Perturbation::Initial, Perturbation::Source, Perturbation::Boundary];

    pub fn name(self) -> &'static str {
        match self {
            Perturbation::Initial => "initial",
            Perturbation::Source => "source",
            Perturbation::Boundary => "boundary",
        }
    }
}

/// `max_{0<=n<=N} ‖Δu^n‖ / δ` in the `L²` norm, after averaging (`‖AΔu‖`)
/// and after differencing (`‖δ²Δu‖`); all absent when `δ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Amplification {
    pub perturbation: Perturbation,
    pub l2: Option<f64>,
    pub averaged: Option<f64>,
    pub dxx: Option<f64>,
}

impl Amplification {
    fn values(&self) -> [Option<f64>; 3] {
        [self.l2, self.averaged, self.dxx]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityProbe {
    pub delta: f64,
    #[serde(rename = "N")]
    pub steps: usize,
    #[serde(rename = "M")]
    pub intervals: usize,
    pub amplifications: Vec<Amplification>,
}

/// Random perturbation shapes, fixed by a seed.
#[derive(Debug, Clone)]
struct Shapes {
    /// `Σ c_j (1 - cos(2jπx/L))`: zero value and slope at both ends.
    initial: Vec<f64>,
    /// `Σ c_j sin(jπx/L)`.
    source: Vec<f64>,
    /// Coefficients of `t` in `b0l, b1l, b0r, b1r`.
    boundary: [f64; 4],
}

impl Shapes {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let series = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (1..=MODES).map(|j| rng.gen_range(-1.0..1.0) / j as f64).collect()
        };
        let initial = series(&mut rng);
        let source = series(&mut rng);
        let mut boundary = [0.0f64; 4];
        for b in &mut boundary {
            *b = rng.gen_range(-1.0..1.0);
        }
        let peak = boundary.iter().fold(0.0f64, |m, b| m.max(b.abs()));
        for b in &mut boundary {
            *b /= peak;
        }
        Shapes {
            initial,
            source,
            boundary,
        }
    }
}

fn cosine_bump(coeffs: &[f64], length: f64) -> impl Fn(f64) -> f64 + Clone {
    let coeffs = coeffs.to_vec();
    move |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * (1.0 - (2.0 * (j + 1) as f64 * PI * x / length).cos()))
            .sum()
    }
}

fn sine_series(coeffs: &[f64], length: f64) -> (impl Fn(f64) -> f64 + Clone, impl Fn(f64) -> f64 + Clone) {
    let c1 = coeffs.to_vec();
    let c2 = coeffs.to_vec();
    let value = move |x: f64| {
        c1.iter()
            .enumerate()
            .map(|(j, c)| c * ((j + 1) as f64 * PI * x / length).sin())
            .sum()
    };
    let slope = move |x: f64| {
        c2.iter()
            .enumerate()
            .map(|(j, c)| {
                let k = (j + 1) as f64 * PI / length;
                c * k * (k * x).cos()
            })
            .sum()
    };
    (value, slope)
}

/// Discrete `L²` norm of `f` on `grid`, used to normalize the shapes.
fn grid_norm(grid: &SpatialGrid, f: impl Fn(f64) -> f64) -> f64 {
    GridFunction::from_fn(*grid, f).norm()
}

/// The problem whose data is `delta` times one perturbation shape and zero
/// otherwise.
fn perturbation_problem(
    base: &ProblemSpec,
    grid: &SpatialGrid,
    kind: Perturbation,
    shapes: &Shapes,
    delta: f64,
) -> Result<ProblemSpec> {
    let mut p = ProblemSpec::zero(base.alpha, base.q, base.length, base.final_time)?;
    p.exact_u = None;
    p.exact_v = None;
    let length = base.length;
    match kind {
        Perturbation::Initial => {
            let shape = cosine_bump(&shapes.initial, length);
            let scale = delta / grid_norm(grid, shape.clone());
            p.initial = time_fn(move |x| scale * shape(x));
        }
        Perturbation::Source => {
            let (value, slope) = sine_series(&shapes.source, length);
            let scale = delta / grid_norm(grid, value.clone());
            p.source = space_time_fn(move |x, _| scale * value(x));
            let (s0, s1) = (slope.clone(), slope);
            p.source_dx_left = time_fn(move |_| scale * s0(0.0));
            p.source_dx_right = time_fn(move |_| scale * s1(length));
        }
        Perturbation::Boundary => {
            // c·t has Caputo derivative c·ω_{2-α}(t)
            let inv = 1.0 / gamma(2.0 - base.alpha)?;
            let beta = 1.0 - base.alpha;
            let linear = |c: f64| -> (crate::problem::TimeFn, crate::problem::TimeFn) {
                let c = delta * c;
                (time_fn(move |t| c * t), time_fn(move |t| c * t.powf(beta) * inv))
            };
            let [c0l, c1l, c0r, c1r] = shapes.boundary;
            let side = |cv: f64, cs: f64| {
                let (value, cap_value) = linear(cv);
                let (slope, cap_slope) = linear(cs);
                BoundaryData {
                    value,
                    slope,
                    caputo_value: Some(cap_value),
                    caputo_slope: Some(cap_slope),
                }
            };
            p.left = side(c0l, c1l);
            p.right = side(c0r, c1r);
        }
    }
    p.validate()?;
    Ok(p)
}

/// Amplification ratios of the three perturbation types on `mesh × grid`.
///
/// `problem` supplies `α`, `q`, `L` and `T`; `seed` fixes the perturbation
/// shapes. `delta = 0` is accepted and yields absent ratios.
pub fn stability_probe(
    problem: &ProblemSpec,
    mesh: &TimeMesh,
    grid: &SpatialGrid,
    delta: f64,
    seed: u64,
) -> Result<StabilityProbe> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("perturbation size must be >= 0, got {delta}")));
    }
    let shapes = Shapes::new(seed);
    let mut amplifications = Vec::with_capacity(3);
    for kind in Perturbation::ALL {
        let p = perturbation_problem(problem, grid, kind, &shapes, delta)?;
        let result = run_with(&p, mesh, grid, SolverOptions::default())?;
        let mut worst = [0.0f64; 3];
        for n in 0..result.levels() {
            let du = result.u(n);
            let norms = [du.norm(), du.averaged().norm(), du.dxx().norm()];
            for (w, v) in worst.iter_mut().zip(norms) {
                *w = w.max(v);
            }
        }
        let ratio = |v: f64| (delta > 0.0).then(|| v / delta);
        amplifications.push(Amplification {
            perturbation: kind,
            l2: ratio(worst[0]),
            averaged: ratio(worst[1]),
            dxx: ratio(worst[2]),
        });
    }
    Ok(StabilityProbe {
        delta,
        steps: mesh.steps(),
        intervals: grid.intervals(),
        amplifications,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityStudy {
    pub alpha: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub seed: u64,
    pub probes: Vec<StabilityProbe>,
    /// Largest relative increase `r_fine / r_coarse - 1` of any ratio between
    /// successive refinements; absent with fewer than two probes or `δ = 0`.
    pub max_growth: Option<f64>,
}

impl StabilityStudy {
    /// Whether every ratio grows by at most `limit` per refinement.
    pub fn bounded(&self, limit: f64) -> bool {
        self.max_growth.is_some_and(|g| g <= limit)
    }
}

/// Probes on the meshes of `config` with `n_list` steps and `m` intervals,
/// using the manufactured problem for the coefficients.
pub fn stability_study(
    config: &StudyConfig,
    m: usize,
    n_list: &[usize],
    delta: f64,
    seed: u64,
) -> Result<StabilityStudy> {
    let problem = crate::problem::manufactured_problem(config.alpha, config.sigma)?;
    let grid = SpatialGrid::new(problem.length, m)?;
    let probes = parallel_map(config.jobs, n_list, |&n| {
        let mesh = config.mesh.build(n, problem.final_time, config.gamma)?;
        stability_probe(&problem, &mesh, &grid, delta, seed)
    })?;
    let mut max_growth: Option<f64> = None;
    for pair in probes.windows(2) {
        for (a, b) in pair[0].amplifications.iter().zip(&pair[1].amplifications) {
            for (x, y) in a.values().into_iter().zip(b.values()) {
                if let (Some(x), Some(y)) = (x, y) {
                    let g = y / x - 1.0;
                    max_growth = Some(max_growth.map_or(g, |m| m.max(g)));
                }
            }
        }
    }
    Ok(StabilityStudy {
        alpha: config.alpha,
        sigma: config.sigma,
        gamma: config.gamma,
        seed,
        probes,
        max_growth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn setup() -> (ProblemSpec, TimeMesh, SpatialGrid) {
        (
            crate::problem::manufactured_problem(0.5, 0.3).unwrap(),
            TimeMesh::graded(16, 1.0, 2.0).unwrap(),
            SpatialGrid::new(1.0, 16).unwrap(),
        )
    }

    #[test]
    fn zero_delta_gives_absent_ratios() {
        let (p, mesh, grid) = setup();
        let probe = stability_probe(&p, &mesh, &grid, 0.0, 1).unwrap();
        assert_eq!(probe.amplifications.len(), 3);
        for a in &probe.amplifications {
            assert_eq!(a.values(), [None, None, None]);
        }
        assert!(stability_probe(&p, &mesh, &grid, -1.0, 1).is_err());
    }

    #[test]
    fn ratios_are_scale_invariant() {
        let (p, mesh, grid) = setup();
        let small = stability_probe(&p, &mesh, &grid, 1e-6, 7).unwrap();
        let large = stability_probe(&p, &mesh, &grid, 1e-5, 7).unwrap();
        for (a, b) in small.amplifications.iter().zip(&large.amplifications) {
            for (x, y) in a.values().into_iter().zip(b.values()) {
                let (x, y) = (x.unwrap(), y.unwrap());
                assert!(x > 0.0);
                assert_relative_eq!(x, y, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn shapes_are_compatible_and_seeded() {
        let (p, _, grid) = setup();
        let shapes = Shapes::new(3);
        assert_eq!(Shapes::new(3).source, shapes.source);
        assert_ne!(Shapes::new(4).source, shapes.source);
        for kind in Perturbation::ALL {
            perturbation_problem(&p, &grid, kind, &shapes, 1e-3).unwrap();
        }
        let u0 = perturbation_problem(&p, &grid, Perturbation::Initial, &shapes, 1.0).unwrap();
        assert_relative_eq!(GridFunction::from_fn(grid, |x| (u0.initial)(x)).norm(), 1.0, epsilon = 1e-12);
    }
}
