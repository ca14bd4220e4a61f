//! Time meshes and the uniform spatial grid.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

/// A strictly increasing set of time nodes `0 = t_0 < t_1 < ... < t_N = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    nodes: Vec<f64>,
    grading: Option<f64>,
}

impl TimeMesh {
    /// `t_k = kT/N`.
    pub fn uniform(steps: usize, final_time: f64) -> Result<Self> {
        let mut mesh = Self::graded(steps, final_time, 1.0)?;
        mesh.grading = Some(1.0);
        Ok(mesh)
    }

    /// `t_k = (k/N)^γ T`, clustering nodes near `t = 0` when `γ > 1`.
    pub fn graded(steps: usize, final_time: f64, grading: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("a time mesh needs at least one step"));
        }
        if !(final_time > 0.0) || !final_time.is_finite() {
            return Err(Error::invalid(format!("final time must be positive, got {final_time}")));
        }
        if !(grading >= 1.0) || !grading.is_finite() {
            return Err(Error::invalid(format!("grading parameter must be >= 1, got {grading}")));
        }
        let n = steps as f64;
        let mut nodes: Vec<f64> = (0..=steps)
            .map(|k| {
                let s = k as f64 / n;
                if grading == 1.0 {
                    s * final_time
                } else {
                    s.powf(grading) * final_time
                }
            })
            .collect();
        nodes[steps] = final_time;
        Ok(TimeMesh {
            nodes,
            grading: Some(grading),
        })
    }

    /// Graded on `[0, T_0]` and uniform on `[T_0, T]`, with
    /// `T_0 = min(1/γ, T)`, `N_0 = ⌈N / (T + 1 - 1/γ)⌉` graded steps
    /// `t_k = T_0 (k/N_0)^γ` and the remaining `N - N_0` steps of equal size.
    /// The last graded step and the uniform step agree to first order, so the
    /// mesh stays smooth at `T_0`. This is the default mesh of the
    /// temporal studies. With `T <= 1/γ` or `γ = 1` it coincides with
    /// [`graded`](Self::graded).
    pub fn graded_uniform(steps: usize, final_time: f64, grading: f64) -> Result<Self> {
        let mut mesh = Self::graded(steps, final_time, grading)?;
        let t0 = (1.0 / grading).min(final_time);
        let n0 = ((steps as f64) / (final_time + 1.0 - 1.0 / grading)).ceil() as usize;
        if t0 >= final_time || n0 >= steps {
            return Ok(mesh);
        }
        let n0 = n0.max(1);
        let tau = (final_time - t0) / (steps - n0) as f64;
        for (k, t) in mesh.nodes.iter_mut().enumerate() {
            *t = if k <= n0 {
                t0 * (k as f64 / n0 as f64).powf(grading)
            } else {
                t0 + (k - n0) as f64 * tau
            };
        }
        mesh.nodes[steps] = final_time;
        Ok(mesh)
    }

    /// A user-supplied mesh. Only `t_0 = 0` and strict monotonicity are enforced.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::invalid("a time mesh needs at least two nodes"));
        }
        if nodes[0] != 0.0 {
            return Err(Error::invalid(format!("first node must be 0, got {}", nodes[0])));
        }
        for (k, w) in nodes.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::invalid(format!(
                    "nodes must be finite and strictly increasing (t_{} = {}, t_{} = {})",
                    k,
                    w[0],
                    k + 1,
                    w[1]
                )));
            }
        }
        Ok(TimeMesh { nodes, grading: None })
    }

    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn final_time(&self) -> f64 {
        self.nodes[self.steps()]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    pub fn grading(&self) -> Option<f64> {
        self.grading
    }

    /// `τ_k = t_k - t_{k-1}` for `1 <= k <= N`.
    pub fn step(&self, k: usize) -> f64 {
        assert!(k >= 1 && k <= self.steps(), "step index {k} out of range 1..={}", self.steps());
        self.nodes[k] - self.nodes[k - 1]
    }

    /// All steps `τ_1..τ_N`.
    pub fn step_sizes(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.windows(2).map(|w| w[1] - w[0])
    }

    /// `ρ_k = τ_k / τ_{k+1}` for `1 <= k <= N-1`.
    pub fn ratio(&self, k: usize) -> f64 {
        self.step(k) / self.step(k + 1)
    }

    pub fn max_step(&self) -> f64 {
        self.step_sizes().fold(0.0, f64::max)
    }

    /// Largest adjacent step ratio; absent when `N = 1`.
    pub fn max_ratio(&self) -> Option<f64> {
        (1..self.steps()).map(|k| self.ratio(k)).reduce(f64::max)
    }

    /// One node per line, shortest round-trip representation.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.nodes.len() * 24);
        for t in &self.nodes {
            writeln!(out, "{t:?}").unwrap();
        }
        out
    }

    /// Parse the format written by [`to_text`](Self::to_text). Blank lines and
    /// `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut nodes = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let t: f64 = line.parse().map_err(|e| Error::Parse {
                line: lineno + 1,
                detail: format!("{e}: {line:?}"),
            })?;
            nodes.push(t);
        }
        Self::from_nodes(nodes)
    }
}

/// Named mesh constructors, selectable from studies and problem files.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshFamily {
    /// [`TimeMesh::graded`].
    Graded,
    /// [`TimeMesh::graded_uniform`].
    #[default]
    GradedUniform,
}

impl MeshFamily {
    pub fn build(self, steps: usize, final_time: f64, grading: f64) -> Result<TimeMesh> {
        match self {
            MeshFamily::Graded => TimeMesh::graded(steps, final_time, grading),
            MeshFamily::GradedUniform => TimeMesh::graded_uniform(steps, final_time, grading),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::Graded => "graded",
            MeshFamily::GradedUniform => "graded-uniform",
        }
    }
}

impl std::str::FromStr for MeshFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graded" => Ok(MeshFamily::Graded),
            "graded-uniform" => Ok(MeshFamily::GradedUniform),
            other => Err(Error::invalid(format!(
                "unknown mesh family '{other}' (expected graded or graded-uniform)"
            ))),
        }
    }
}

/// Constants measured against the graded-mesh assumption
/// `τ_k <= c1 τ min{1, t_k^(1-1/γ)}` and `t_k <= c2 t_{k-1}`.
///
/// Purely diagnostic: nothing in the crate rejects a mesh based on these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssgReport {
    pub gamma: f64,
    pub c1: f64,
    /// Absent for single-step meshes.
    pub c2: Option<f64>,
    pub max_ratio: Option<f64>,
}

pub fn assg_report(mesh: &TimeMesh, gamma: f64) -> Result<AssgReport> {
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("grading parameter must be positive, got {gamma}")));
    }
    let tau = mesh.max_step();
    let exponent = 1.0 - 1.0 / gamma;
    let c1 = (1..=mesh.steps())
        .map(|k| {
            let t = mesh.node(k);
            mesh.step(k) / (tau * t.powf(exponent).min(1.0))
        })
        .fold(0.0, f64::max);
    let c2 = (2..=mesh.steps())
        .map(|k| mesh.node(k) / mesh.node(k - 1))
        .reduce(f64::max);
    Ok(AssgReport {
        gamma,
        c1,
        c2,
        max_ratio: mesh.max_ratio(),
    })
}

/// Uniform grid `x_i = i h`, `h = L/M`, on `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpatialGrid {
    length: f64,
    intervals: usize,
}

impl SpatialGrid {
    /// Smallest interval count supported by the eliminated boundary rows.
    pub const MIN_INTERVALS: usize = 4;

    pub fn new(length: f64, intervals: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::invalid(format!("domain length must be positive, got {length}")));
        }
        if intervals < Self::MIN_INTERVALS {
            return Err(Error::invalid(format!(
                "need at least {} spatial intervals, got {intervals}",
                Self::MIN_INTERVALS
            )));
        }
        Ok(SpatialGrid { length, intervals })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// `M`.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Number of nodes, `M + 1`.
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn h(&self) -> f64 {
        self.length / self.intervals as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.length
        } else {
            i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.intervals).map(move |i| self.node(i))
    }
}
