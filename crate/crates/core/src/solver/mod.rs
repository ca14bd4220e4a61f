//! Time stepping for the compact scheme.
//!
//! The coupled `(u, v)` scheme is reduced to a pentadiagonal system in `u`
//! alone. With `L` the "mass" rows (`A²` in the interior, the combinations
//! `19/36 A_1 + 1/18 A_2` and its mirror next to the boundary) and `K` the
//! matching "stiffness" rows (`δ⁴` in the interior), every unknown row
//! `1 <= r <= M-1` reads
//!
//! ```text
//! (a_0 - q) (L u^n)_r + (K u^n)_r = (L (w^n + f^n))_r - g^n_r
//! w^n = a_0 u^{n-1} - Σ_{k=1}^{n-1} a_{n-k} (u^k - u^{k-1})
//! ```
//!
//! where `g^n` carries the derivative boundary data and the hat terms. The
//! Dirichlet values `u_0^n`, `u_M^n` are moved to the right-hand side.
//! Once `u^n` is known, `v^n` follows from a tridiagonal solve with the
//! averaged operator.

mod banded;

use std::time::Instant;

use log::warn;
use serde::Serialize;

pub use banded::BandedLu;

use crate::error::{Error, Result};
use crate::grid::{apply_dxx, BandedOperator, GridFunction};
use crate::kernels::{l1_weights, L1Weights};
use crate::mesh::{SpatialGrid, TimeMesh};
use crate::problem::{hat_boundary, hat_boundary_with_fallback, CaputoSource, HatBoundary, ProblemSpec};
use crate::specfun::gamma;

#[derive(Debug, Clone, Copy, Default)]
pub struct SolverOptions {
    /// Recover and keep `v^n` at every level.
    pub record_v: bool,
    /// Evaluate missing boundary Caputo derivatives with the L1 formula
    /// instead of failing.
    pub caputo_fallback: bool,
    pub closure: BoundaryClosure,
}

/// Signs of the hat terms in the right boundary row of `A v`.
///
/// Both variants are fourth-order accurate. `Reference` is the default
/// and reproduces the reference error tables to three digits.
/// `Mirrored` is the Taylor expansion about `x = L` (odd derivatives flip
/// sign), the exact mirror image of the left row; on the manufactured
/// problem its spatial errors are roughly ten times smaller.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryClosure {
    #[default]
    Reference,
    Mirrored,
}

impl BoundaryClosure {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryClosure::Reference => "reference",
            BoundaryClosure::Mirrored => "mirrored",
        }
    }
}

impl std::str::FromStr for BoundaryClosure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(BoundaryClosure::Reference),
            "mirrored" => Ok(BoundaryClosure::Mirrored),
            other => Err(Error::invalid(format!(
                "unknown boundary closure '{other}' (expected reference or mirrored)"
            ))),
        }
    }
}

/// The row operators of the eliminated scheme over all `M + 1` nodes.
/// Rows `0` and `M` are unused and left empty.
#[derive(Debug, Clone)]
pub struct SchemeOperators {
    pub averaged: BandedOperator,
    pub second_difference: BandedOperator,
    pub mass: BandedOperator,
    pub stiffness: BandedOperator,
}

impl SchemeOperators {
    pub fn new(grid: &SpatialGrid) -> Result<Self> {
        let m = grid.intervals();
        let h = grid.h();
        let inv_h2 = 1.0 / (h * h);
        let a = BandedOperator::averaged(grid);
        let d = BandedOperator::second_difference(grid);
        let mut mass = a.compose(&a)?;
        let mut stiffness = d.compose(&d)?;
        for op in [&mut mass, &mut stiffness] {
            op.set_row(0, []);
            op.set_row(m, []);
        }

        // (r, inner neighbour, boundary node)
        for (r, r2, edge) in [(1, 2, 0), (m - 1, m - 2, m)] {
            let mass_row: Vec<_> = a
                .row(r)
                .map(|(j, v)| (j, 19.0 / 36.0 * v))
                .chain(a.row(r2).map(|(j, v)| (j, v / 18.0)))
                .collect();
            mass.set_row(r, mass_row);
            // (2/h)·(±δ_x u at the half node) divided by h², sign folded in
            let stiff_row: Vec<_> = [(r, 2.0 * inv_h2 * inv_h2), (edge, -2.0 * inv_h2 * inv_h2)]
                .into_iter()
                .chain(d.row(r).map(|(j, v)| (j, -5.0 / 3.0 * v * inv_h2)))
                .chain(d.row(r2).map(|(j, v)| (j, 2.0 / 3.0 * v * inv_h2)))
                .collect();
            stiffness.set_row(r, stiff_row);
        }
        Ok(SchemeOperators {
            averaged: a,
            second_difference: d,
            mass,
            stiffness,
        })
    }
}

/// Boundary-data load of the two closure rows, `(g_1, g_{M-1})`.
///
/// `hat = [hat_b0l, hat_b1l, hat_b0r, hat_b1r]`, `slopes = (b1l, b1r)`.
pub fn closure_load(h: f64, slopes: (f64, f64), hat: [f64; 4], closure: BoundaryClosure) -> (f64, f64) {
    let (left, right) = averaged_boundary_data(h, slopes, hat, closure);
    (left / (h * h), right / (h * h))
}

/// The `u`-independent part of `(A v)_0` and `(A v)_M`:
///
/// ```text
/// (A v)_0 = (2/h) δ_x u_{1/2} - (2/h) b1l + (h²/12) hat_b0l + (7h³/180) hat_b1l
/// (A v)_M = -(2/h) δ_x u_{M-1/2} + (2/h) b1r - (h²/12) hat_b0r + (7h³/180) hat_b1r   (Reference)
/// (A v)_M = -(2/h) δ_x u_{M-1/2} + (2/h) b1r + (h²/12) hat_b0r - (7h³/180) hat_b1r   (Mirrored)
/// ```
pub fn averaged_boundary_data(h: f64, slopes: (f64, f64), hat: [f64; 4], closure: BoundaryClosure) -> (f64, f64) {
    let [b0l, b1l, b0r, b1r] = hat;
    let c2 = h * h / 12.0;
    let c3 = 7.0 * h * h * h / 180.0;
    let sign = match closure {
        BoundaryClosure::Reference => -1.0,
        BoundaryClosure::Mirrored => 1.0,
    };
    (
        -2.0 / h * slopes.0 + c2 * b0l + c3 * b1l,
        2.0 / h * slopes.1 + sign * (c2 * b0r - c3 * b1r),
    )
}

/// The pentadiagonal system for the unknowns `u_1..u_{M-1}` at one level.
#[derive(Debug, Clone)]
pub struct EliminatedSystem {
    pub step: usize,
    pub matrix: BandedOperator,
    pub rhs: Vec<f64>,
}

/// Solve an assembled system by banded LU.
pub fn solve_banded(system: &EliminatedSystem) -> Result<Vec<f64>> {
    let lu = BandedLu::factor(&system.matrix).map_err(|e| with_step(e, system.step))?;
    lu.solve(&system.rhs)
}

fn with_step(err: Error, n: usize) -> Error {
    match err {
        Error::SingularPivot { row, .. } => Error::SingularPivot { row, step: Some(n) },
        other => other,
    }
}

/// Everything produced by a run.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub mesh: TimeMesh,
    pub grid: SpatialGrid,
    pub alpha: f64,
    /// `u^0..u^N`, each of length `M + 1`, stored contiguously.
    u: Vec<f64>,
    /// `v^1..v^N` when recorded.
    v: Option<Vec<f64>>,
    /// Wall time of each step in seconds.
    pub step_seconds: Vec<f64>,
    pub caputo_source: CaputoSource,
    pub step_bound: Option<f64>,
}

impl SolveResult {
    pub fn levels(&self) -> usize {
        self.mesh.steps() + 1
    }

    pub fn u_values(&self, n: usize) -> &[f64] {
        let w = self.grid.len();
        &self.u[n * w..(n + 1) * w]
    }

    pub fn u(&self, n: usize) -> GridFunction {
        GridFunction::new(self.grid, self.u_values(n).to_vec()).expect("stored levels are finite")
    }

    /// `v^n` for `1 <= n <= N`, if recorded.
    pub fn v_values(&self, n: usize) -> Option<&[f64]> {
        let w = self.grid.len();
        if n == 0 {
            return None;
        }
        self.v.as_ref().map(|v| &v[(n - 1) * w..n * w])
    }

    /// Whether the largest step exceeds `(4 Γ(2-α) q₊)^{-1/α}`, the sufficient
    /// step condition of the stability analysis. Informational only.
    pub fn step_bound_exceeded(&self) -> bool {
        self.step_bound.is_some_and(|b| self.mesh.max_step() > b)
    }

    /// Write `n,t,x,u,v` rows for the requested levels; `v` is left empty when
    /// not recorded.
    pub fn write_snapshots<W: std::io::Write>(&self, levels: &[usize], out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["n", "t", "x", "u", "v"])?;
        for &n in levels {
            if n >= self.levels() {
                return Err(Error::invalid(format!("time level {n} out of range 0..={}", self.mesh.steps())));
            }
            let t = self.mesh.node(n);
            let u = self.u_values(n);
            let v = self.v_values(n);
            for (i, x) in self.grid.nodes().enumerate() {
                let vv = v.map(|v| format!("{:?}", v[i])).unwrap_or_default();
                wtr.write_record([
                    n.to_string(),
                    format!("{t:?}"),
                    format!("{x:?}"),
                    format!("{:?}", u[i]),
                    vv,
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Summary statistics of a run, convenient for logging.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub steps: usize,
    pub intervals: usize,
    pub total_seconds: f64,
    pub caputo_source: CaputoSource,
    pub step_bound_exceeded: bool,
}

impl From<&SolveResult> for RunSummary {
    fn from(r: &SolveResult) -> Self {
        RunSummary {
            steps: r.mesh.steps(),
            intervals: r.grid.intervals(),
            total_seconds: r.step_seconds.iter().sum(),
            caputo_source: r.caputo_source,
            step_bound_exceeded: r.step_bound_exceeded(),
        }
    }
}

/// Sequential time stepper holding the full solution history.
pub struct Solver {
    problem: ProblemSpec,
    mesh: TimeMesh,
    grid: SpatialGrid,
    hat: HatBoundary,
    ops: SchemeOperators,
    averaged_lu: BandedLu,
    options: SolverOptions,
    u: Vec<f64>,
    v: Vec<f64>,
    n: usize,
    cached_lu: Option<(u64, BandedLu)>,
    step_seconds: Vec<f64>,
    step_bound: Option<f64>,
}

impl std::fmt::Debug for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solver")
            .field("grid", &self.grid)
            .field("steps", &self.mesh.steps())
            .field("current", &self.n)
            .finish_non_exhaustive()
    }
}

impl Solver {
    pub fn new(problem: ProblemSpec, mesh: TimeMesh, grid: SpatialGrid, options: SolverOptions) -> Result<Self> {
        problem.validate()?;
        if (grid.length() - problem.length).abs() > 1e-12 * problem.length {
            return Err(Error::Config(format!(
                "grid length {} differs from problem length {}",
                grid.length(),
                problem.length
            )));
        }
        let hat = if options.caputo_fallback {
            hat_boundary_with_fallback(&problem, &mesh)?
        } else {
            hat_boundary(&problem)?
        };
        let ops = SchemeOperators::new(&grid)?;
        let averaged_lu = BandedLu::factor(&ops.averaged)?;
        let u: Vec<f64> = grid.nodes().map(|x| (problem.initial)(x)).collect();
        if let Some(i) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("initial value at node {i}")));
        }

        let step_bound = if problem.q > 0.0 {
            let alpha = problem.alpha;
            Some((4.0 * gamma(2.0 - alpha)? * problem.q).powf(-1.0 / alpha))
        } else {
            None
        };
        if let Some(bound) = step_bound {
            if mesh.max_step() > bound {
                warn!(
                    "maximum time step {:.3e} exceeds the stability step condition {:.3e}",
                    mesh.max_step(),
                    bound
                );
            }
        }
        let capacity = (mesh.steps() + 1) * grid.len();
        let mut history = Vec::with_capacity(capacity);
        history.extend_from_slice(&u);
        Ok(Solver {
            problem,
            mesh,
            grid,
            hat,
            ops,
            averaged_lu,
            options,
            u: history,
            v: Vec::new(),
            n: 0,
            cached_lu: None,
            step_seconds: Vec::new(),
            step_bound,
        })
    }

    pub fn current_step(&self) -> usize {
        self.n
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn operators(&self) -> &SchemeOperators {
        &self.ops
    }

    pub fn hat(&self) -> &HatBoundary {
        &self.hat
    }

    pub fn u_values(&self, n: usize) -> &[f64] {
        let w = self.grid.len();
        &self.u[n * w..(n + 1) * w]
    }

    pub fn solution(&self, n: usize) -> Result<GridFunction> {
        if n > self.n {
            return Err(Error::State(format!("level {n} not computed yet (at {})", self.n)));
        }
        GridFunction::new(self.grid, self.u_values(n).to_vec())
    }

    /// Replace the history with externally supplied levels `u^0..u^{k}`, e.g.
    /// exact solution samples for residual checks.
    pub fn set_history(&mut self, levels: &[Vec<f64>]) -> Result<()> {
        if levels.is_empty() || levels.len() > self.mesh.steps() + 1 {
            return Err(Error::invalid("history must hold between 1 and N+1 levels"));
        }
        let w = self.grid.len();
        if levels.iter().any(|l| l.len() != w) {
            return Err(Error::GridMismatch("history level of wrong length".into()));
        }
        self.u = levels.concat();
        self.n = levels.len() - 1;
        self.v.clear();
        self.step_seconds.clear();
        Ok(())
    }

    /// `w^n = a_0 u^{n-1} - Σ_{k=1}^{n-1} a_{n-k} (u^k - u^{k-1})` over all nodes.
    fn history_load(&self, weights: &L1Weights) -> Vec<f64> {
        let n = weights.step();
        let w = self.grid.len();
        let mut load: Vec<f64> = self.u_values(n - 1).iter().map(|u| weights.get(0) * u).collect();
        for k in 1..n {
            let c = weights.for_increment(k);
            let (prev, cur) = self.u[(k - 1) * w..(k + 1) * w].split_at(w);
            for ((l, a), b) in load.iter_mut().zip(cur).zip(prev) {
                *l -= c * (a - b);
            }
        }
        load
    }

    /// Assemble the eliminated system for level `n`; levels `0..n-1` must
    /// already be in the history.
    pub fn assemble_step(&self, n: usize, weights: &L1Weights) -> Result<EliminatedSystem> {
        if n == 0 || n > self.mesh.steps() {
            return Err(Error::invalid(format!("step {n} out of range 1..={}", self.mesh.steps())));
        }
        if self.n + 1 < n {
            return Err(Error::State(format!(
                "history ends at level {} but step {n} needs level {}",
                self.n,
                n - 1
            )));
        }
        if weights.step() != n {
            return Err(Error::invalid(format!("weights are for step {}, not {n}", weights.step())));
        }
        let m = self.grid.intervals();
        let h = self.grid.h();
        let t = self.mesh.node(n);
        let a0 = weights.get(0);
        let q = self.problem.q;
        let ops = &self.ops;

        let mut load = self.history_load(weights);
        for (l, x) in load.iter_mut().zip(self.grid.nodes()) {
            *l += (self.problem.source)(x, t);
        }
        let hat = self.hat.at(t);
        let slopes = ((self.problem.left.slope)(t), (self.problem.right.slope)(t));
        let (g_left, g_right) = closure_load(h, slopes, hat, self.options.closure);
        let u_left = (self.problem.left.value)(t);
        let u_right = (self.problem.right.value)(t);
        let data_ok = [u_left, u_right, g_left, g_right].iter().chain(&load).all(|v| v.is_finite());
        if !data_ok {
            return Err(Error::NonFinite(format!("problem data at step {n} (t = {t})")));
        }

        let mut matrix = BandedOperator::zeros(m - 1, 2, 2);
        let mut rhs = vec![0.0; m - 1];
        for r in 1..m {
            let entry = |c: usize| (a0 - q) * ops.mass.get(r, c) + ops.stiffness.get(r, c);
            for c in ops.mass.row_span(r) {
                if c >= 1 && c <= m - 1 {
                    matrix.set(r - 1, c - 1, entry(c));
                }
            }
            let mut b = ops.mass.row_dot(r, &load) - entry(0) * u_left - entry(m) * u_right;
            if r == 1 {
                b -= g_left;
            }
            if r == m - 1 {
                b -= g_right;
            }
            rhs[r - 1] = b;
        }
        Ok(EliminatedSystem { step: n, matrix, rhs })
    }

    /// Advance one level.
    pub fn step(&mut self) -> Result<()> {
        let n = self.n + 1;
        if n > self.mesh.steps() {
            return Err(Error::State(format!("already at the final level {}", self.mesh.steps())));
        }
        let start = Instant::now();
        let weights = l1_weights(&self.mesh, self.problem.alpha, n)?;
        let system = self.assemble_step(n, &weights)?;
        let key = weights.get(0).to_bits();
        let reuse = matches!(&self.cached_lu, Some((k, _)) if *k == key);
        if !reuse {
            let lu = BandedLu::factor(&system.matrix).map_err(|e| with_step(e, n))?;
            self.cached_lu = Some((key, lu));
        }
        let lu = &self.cached_lu.as_ref().expect("factorization cached above").1;
        let interior = lu.solve(&system.rhs)?;

        let t = self.mesh.node(n);
        self.u.push((self.problem.left.value)(t));
        self.u.extend_from_slice(&interior);
        self.u.push((self.problem.right.value)(t));
        self.n = n;
        if self.options.record_v {
            let v = self.recover_v(n)?;
            self.v.extend_from_slice(v.values());
        }
        self.step_seconds.push(start.elapsed().as_secs_f64());
        Ok(())
    }

    /// Recover `v^n` from `u^n` by solving `A v = δ² u` with the compact
    /// boundary rows.
    pub fn recover_v(&self, n: usize) -> Result<GridFunction> {
        if n > self.n {
            return Err(Error::State(format!("level {n} not computed yet (at {})", self.n)));
        }
        let m = self.grid.intervals();
        let h = self.grid.h();
        let t = self.mesh.node(n);
        let u = self.u_values(n);
        let mut rhs = apply_dxx(u, h);
        let slopes = ((self.problem.left.slope)(t), (self.problem.right.slope)(t));
        let (left, right) = averaged_boundary_data(h, slopes, self.hat.at(t), self.options.closure);
        rhs[0] = 2.0 / h * (u[1] - u[0]) / h + left;
        rhs[m] = -2.0 / h * (u[m] - u[m - 1]) / h + right;
        if rhs.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("boundary data for v at level {n} (t = {t})")));
        }
        let v = self.averaged_lu.solve(&rhs)?;
        GridFunction::new(self.grid, v)
    }

    /// Step to the final level.
    pub fn run_to_end(&mut self) -> Result<()> {
        while self.n < self.mesh.steps() {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_result(self) -> SolveResult {
        SolveResult {
            alpha: self.problem.alpha,
            v: self.options.record_v.then_some(self.v),
            u: self.u,
            mesh: self.mesh,
            grid: self.grid,
            step_seconds: self.step_seconds,
            caputo_source: self.hat.source,
            step_bound: self.step_bound,
        }
    }
}

/// Solve `problem` on `mesh x grid` with default options.
pub fn run(problem: &ProblemSpec, mesh: &TimeMesh, grid: &SpatialGrid) -> Result<SolveResult> {
    run_with(problem, mesh, grid, SolverOptions::default())
}

pub fn run_with(
    problem: &ProblemSpec,
    mesh: &TimeMesh,
    grid: &SpatialGrid,
    options: SolverOptions,
) -> Result<SolveResult> {
    let mut solver = Solver::new(problem.clone(), mesh.clone(), *grid, options)?;
    solver.run_to_end()?;
    Ok(solver.into_result())
}
