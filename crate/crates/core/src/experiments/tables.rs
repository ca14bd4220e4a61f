use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{MeshFamily, SpatialGrid};
use crate::problem::{manufactured_problem, SpaceTimeFn};
use crate::solver::{run_with, BoundaryClosure, SolveResult, SolverOptions};

use super::parallel_map;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Spatial,
    Temporal,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Spatial => "spatial",
            Axis::Temporal => "temporal",
        }
    }
}

/// Parameters shared by every run of a study on the manufactured problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyConfig {
    pub alpha: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub mesh: MeshFamily,
    pub closure: BoundaryClosure,
    /// Worker threads; `0` or `1` runs sequentially.
    #[serde(skip)]
    pub jobs: usize,
}

impl StudyConfig {
    pub fn new(alpha: f64, sigma: f64, gamma: f64) -> Self {
        StudyConfig {
            alpha,
            sigma,
            gamma,
            mesh: MeshFamily::default(),
            closure: BoundaryClosure::default(),
            jobs: 1,
        }
    }

    pub fn with_jobs(self, jobs: usize) -> Self {
        StudyConfig { jobs, ..self }
    }

    /// Solve the manufactured problem with `m` intervals and `n` steps and
    /// return `e(M, N)`.
    pub fn error(&self, m: usize, n: usize) -> Result<f64> {
        let problem = manufactured_problem(self.alpha, self.sigma)?;
        let mesh = self.mesh.build(n, problem.final_time, self.gamma)?;
        let grid = SpatialGrid::new(problem.length, m)?;
        let options = SolverOptions {
            closure: self.closure,
            ..SolverOptions::default()
        };
        let result = run_with(&problem, &mesh, &grid, options)?;
        let exact = problem
            .exact_u
            .as_ref()
            .ok_or_else(|| Error::Config("manufactured problem without exact solution".into()))?;
        measure_error(&result, exact)
    }
}

/// `max_{1<=n<=N} ‖U(t_n) - u^n‖_∞`.
pub fn measure_error(result: &SolveResult, exact: &SpaceTimeFn) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 1..result.levels() {
        let t = result.mesh.node(n);
        for (x, u) in result.grid.nodes().zip(result.u_values(n)) {
            let e = (exact(x, t) - u).abs();
            if !e.is_finite() {
                return Err(Error::NonFinite(format!("error at x = {x}, t = {t}")));
            }
            worst = worst.max(e);
        }
    }
    Ok(worst)
}

/// `log₂(e_coarse / e_fine)`; absent unless both errors are positive.
pub fn order(e_coarse: f64, e_fine: f64) -> Option<f64> {
    order_with_ratio(e_coarse, e_fine, 2.0)
}

/// Observed order for a refinement by `ratio` (fine count over coarse count).
pub fn order_with_ratio(e_coarse: f64, e_fine: f64, ratio: f64) -> Option<f64> {
    if e_coarse > 0.0 && e_fine > 0.0 && ratio > 1.0 {
        Some((e_coarse / e_fine).ln() / ratio.ln())
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub error: f64,
    /// Against the previous row; absent on the first row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub axis: Axis,
    pub alpha: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub q: f64,
    pub mesh: MeshFamily,
    pub closure: BoundaryClosure,
    /// 4 in space, `min{γσ, 2-α}` in time.
    pub predicted: f64,
    pub rows: Vec<TableRow>,
}

impl ConvergenceTable {
    fn build(axis: Axis, config: &StudyConfig, sizes: &[(usize, usize)]) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::invalid("a study needs at least one grid size"));
        }
        let errors = parallel_map(config.jobs, sizes, |&(m, n)| config.error(m, n))?;
        let refined = |i: usize| match axis {
            Axis::Spatial => sizes[i].0 as f64,
            Axis::Temporal => sizes[i].1 as f64,
        };
        let rows = sizes
            .iter()
            .zip(&errors)
            .enumerate()
            .map(|(i, (&(m, n), &error))| TableRow {
                m,
                n,
                error,
                order: (i > 0)
                    .then(|| order_with_ratio(errors[i - 1], error, refined(i) / refined(i - 1)))
                    .flatten(),
            })
            .collect();
        let predicted = match axis {
            Axis::Spatial => 4.0,
            Axis::Temporal => (config.gamma * config.sigma).min(2.0 - config.alpha),
        };
        Ok(ConvergenceTable {
            axis,
            alpha: config.alpha,
            sigma: config.sigma,
            gamma: config.gamma,
            q: 1.0,
            mesh: config.mesh,
            closure: config.closure,
            predicted,
            rows,
        })
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }

    /// Rows whose order misses `predicted ± tolerance`, as messages.
    pub fn order_failures(&self, tolerance: f64) -> Vec<String> {
        self.rows
            .iter()
            .skip(1)
            .filter_map(|r| match r.order {
                Some(p) if (p - self.predicted).abs() <= tolerance => None,
                Some(p) => Some(format!(
                    "{} order {p:.3} at M={}, N={} outside {:.2} ± {tolerance}",
                    self.axis.name(),
                    r.m,
                    r.n,
                    self.predicted
                )),
                None => Some(format!("{} order undefined at M={}, N={}", self.axis.name(), r.m, r.n)),
            })
            .collect()
    }

    /// CSV rows under the header `axis,alpha,sigma,gamma,M,N,error,order,predicted`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_csv(std::slice::from_ref(self), out)
    }
}

pub const CSV_HEADER: [&str; 9] = ["axis", "alpha", "sigma", "gamma", "M", "N", "error", "order", "predicted"];

/// Several tables in one CSV stream, full double precision.
pub fn write_csv<W: Write>(tables: &[ConvergenceTable], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(CSV_HEADER)?;
    for t in tables {
        for r in &t.rows {
            wtr.write_record([
                t.axis.name().to_string(),
                format!("{:?}", t.alpha),
                format!("{:?}", t.sigma),
                format!("{:?}", t.gamma),
                r.m.to_string(),
                r.n.to_string(),
                format!("{:?}", r.error),
                r.order.map(|p| format!("{p:?}")).unwrap_or_default(),
                format!("{:?}", t.predicted),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Errors in the style `3.96e-04`: three significant digits and a signed,
/// two-digit exponent.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.2e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Orders with two decimals; `--` when absent.
pub fn format_order(p: Option<f64>) -> String {
    p.map(|p| format!("{p:.2}")).unwrap_or_else(|| "--".into())
}

impl fmt::Display for ConvergenceTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} accuracy: alpha={} sigma={} gamma={} ({} mesh, {} closure)",
            self.axis.name(),
            self.alpha,
            self.sigma,
            self.gamma,
            self.mesh.name(),
            self.closure.name()
        )?;
        writeln!(f, "{:>6} {:>7} {:>10} {:>7}", "M", "N", "e(M,N)", "order")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>6} {:>7} {:>10} {:>7}",
                r.m,
                r.n,
                format_sci(r.error),
                format_order(r.order)
            )?;
        }
        writeln!(f, "{:>6} {:>7} {:>10} {:>7.2}", "", "", "predicted", self.predicted)
    }
}

/// One run per entry of `m_list` with `n` steps.
pub fn spatial_study(config: &StudyConfig, n: usize, m_list: &[usize]) -> Result<ConvergenceTable> {
    let sizes: Vec<_> = m_list.iter().map(|&m| (m, n)).collect();
    ConvergenceTable::build(Axis::Spatial, config, &sizes)
}

/// One run per entry of `n_list` with `m` intervals.
pub fn temporal_study(config: &StudyConfig, m: usize, n_list: &[usize]) -> Result<ConvergenceTable> {
    let sizes: Vec<_> = n_list.iter().map(|&n| (m, n)).collect();
    ConvergenceTable::build(Axis::Temporal, config, &sizes)
}
