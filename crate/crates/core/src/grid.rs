//! Grid functions, the compact averaging operator and second differences.
//!
//! On `x_i = i h` the averaged operator is
//!
//! ```text
//! (A v)_0 = (2/3) v_0 + (1/3) v_1
//! (A v)_i = (v_{i-1} + 10 v_i + v_{i+1}) / 12      1 <= i <= M-1
//! (A v)_M = (2/3) v_M + (1/3) v_{M-1}
//! ```
//!
//! and the second difference uses the one-sided rows `(2/h) δ_x v_{1/2}` and
//! `-(2/h) δ_x v_{M-1/2}` at the endpoints. Both are also available as
//! [`BandedOperator`]s so that compositions such as `A²` and `δ⁴` can be
//! formed numerically rather than written out by hand.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::mesh::SpatialGrid;

/// Values `v_0..v_M` on a [`SpatialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: SpatialGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("grid value at node {i} is {}", values[i])));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        GridFunction {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f(x_i)`.
    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().map(f).collect();
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    pub fn averaged(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: apply_averaged(&self.values),
        }
    }

    pub fn dxx(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: apply_dxx(&self.values, self.grid.h()),
        }
    }

    /// Trapezoidal inner product `(h/2) u_0 v_0 + h Σ u_i v_i + (h/2) u_M v_M`.
    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(weighted_inner(&self.values, &other.values, self.grid.h()))
    }

    /// Discrete L² norm.
    pub fn norm(&self) -> f64 {
        weighted_inner(&self.values, &self.values, self.grid.h()).sqrt()
    }

    /// `sqrt(<v, -δ² v>)`, defined for functions vanishing at both ends.
    pub fn h1_semi(&self) -> Result<f64> {
        let m = self.grid.intervals();
        if self.values[0] != 0.0 || self.values[m] != 0.0 {
            return Err(Error::invalid("the H1 semi-norm needs zero boundary values"));
        }
        let d2 = self.dxx();
        Ok((-weighted_inner(&self.values, &d2.values, self.grid.h())).max(0.0).sqrt())
    }

    /// `||δ² v||`.
    pub fn h2_semi(&self) -> f64 {
        self.dxx().norm()
    }

    pub fn max_norm(&self) -> f64 {
        max_norm(&self.values)
    }

    pub fn scaled(&self, factor: f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

impl<'a> Sub for &'a GridFunction {
    type Output = GridFunction;

    fn sub(self, rhs: &'a GridFunction) -> GridFunction {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<'a> Add for &'a GridFunction {
    type Output = GridFunction;

    fn add(self, rhs: &'a GridFunction) -> GridFunction {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect(),
        }
    }
}

pub(crate) fn weighted_inner(u: &[f64], v: &[f64], h: f64) -> f64 {
    let m = u.len() - 1;
    let interior: f64 = u[1..m].iter().zip(&v[1..m]).map(|(a, b)| a * b).sum();
    h * (0.5 * u[0] * v[0] + interior + 0.5 * u[m] * v[m])
}

pub(crate) fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// The averaged operator on raw values (at least three nodes).
pub fn apply_averaged(v: &[f64]) -> Vec<f64> {
    let m = v.len() - 1;
    assert!(m >= 2, "averaged operator needs at least three nodes");
    let mut out = vec![0.0; m + 1];
    out[0] = (2.0 * v[0] + v[1]) / 3.0;
    for i in 1..m {
        out[i] = (v[i - 1] + 10.0 * v[i] + v[i + 1]) / 12.0;
    }
    out[m] = (2.0 * v[m] + v[m - 1]) / 3.0;
    out
}

/// Second difference with the one-sided boundary rows.
pub fn apply_dxx(v: &[f64], h: f64) -> Vec<f64> {
    let m = v.len() - 1;
    assert!(m >= 2, "second difference needs at least three nodes");
    let h2 = h * h;
    let mut out = vec![0.0; m + 1];
    out[0] = 2.0 * (v[1] - v[0]) / h2;
    for i in 1..m {
        out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2;
    }
    out[m] = -2.0 * (v[m] - v[m - 1]) / h2;
    out
}

/// A square banded matrix with `lower` sub- and `upper` super-diagonals.
///
/// Rows are stored densely over the band window `i - lower ..= i + upper`,
/// entries outside the matrix kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedOperator {
    size: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandedOperator {
    pub fn zeros(size: usize, lower: usize, upper: usize) -> Self {
        BandedOperator {
            size,
            lower,
            upper,
            data: vec![0.0; size * (lower + upper + 1)],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut op = Self::zeros(size, 0, 0);
        op.data.iter_mut().for_each(|d| *d = 1.0);
        op
    }

    /// The averaged operator as an `(M+1) x (M+1)` matrix.
    pub fn averaged(grid: &SpatialGrid) -> Self {
        let n = grid.len();
        let mut op = Self::zeros(n, 1, 1);
        op.set(0, 0, 2.0 / 3.0);
        op.set(0, 1, 1.0 / 3.0);
        for i in 1..n - 1 {
            op.set(i, i - 1, 1.0 / 12.0);
            op.set(i, i, 10.0 / 12.0);
            op.set(i, i + 1, 1.0 / 12.0);
        }
        op.set(n - 1, n - 1, 2.0 / 3.0);
        op.set(n - 1, n - 2, 1.0 / 3.0);
        op
    }

    /// The second-difference operator as an `(M+1) x (M+1)` matrix.
    pub fn second_difference(grid: &SpatialGrid) -> Self {
        let n = grid.len();
        let inv_h2 = 1.0 / (grid.h() * grid.h());
        let mut op = Self::zeros(n, 1, 1);
        op.set(0, 0, -2.0 * inv_h2);
        op.set(0, 1, 2.0 * inv_h2);
        for i in 1..n - 1 {
            op.set(i, i - 1, inv_h2);
            op.set(i, i, -2.0 * inv_h2);
            op.set(i, i + 1, inv_h2);
        }
        op.set(n - 1, n - 1, -2.0 * inv_h2);
        op.set(n - 1, n - 2, 2.0 * inv_h2);
        op
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.lower >= i && j <= i + self.upper && i < self.size && j < self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[i * self.width() + j + self.lower - i]
        } else {
            0.0
        }
    }

    /// Panics when `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside the band");
        let w = self.width();
        self.data[i * w + j + self.lower - i] = value;
    }

    /// Column range of row `i` that may hold nonzeros.
    pub fn row_span(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.lower)..(i + self.upper + 1).min(self.size)
    }

    /// `(column, value)` pairs of row `i` within the band.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row_span(i).map(move |j| (j, self.get(i, j)))
    }

    /// `Σ_j M_ij v_j` for a single row.
    pub fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        self.row(i).map(|(j, m)| m * v[j]).sum()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.size {
            return Err(Error::invalid(format!(
                "operator of size {} applied to vector of length {}",
                self.size,
                v.len()
            )));
        }
        Ok((0..self.size).map(|i| self.row_dot(i, v)).collect())
    }

    /// The product `self · other` (apply `other` first).
    pub fn compose(&self, other: &BandedOperator) -> Result<BandedOperator> {
        if self.size != other.size {
            return Err(Error::invalid(format!(
                "cannot compose operators of sizes {} and {}",
                self.size, other.size
            )));
        }
        let mut out = Self::zeros(self.size, self.lower + other.lower, self.upper + other.upper);
        for i in 0..self.size {
            for (k, a) in self.row(i) {
                if a == 0.0 {
                    continue;
                }
                for (j, b) in other.row(k) {
                    let cur = out.get(i, j);
                    out.set(i, j, cur + a * b);
                }
            }
        }
        Ok(out)
    }

    /// `α self + β other`, with the band widened to cover both.
    pub fn linear_combination(&self, alpha: f64, other: &BandedOperator, beta: f64) -> Result<BandedOperator> {
        if self.size != other.size {
            return Err(Error::invalid("size mismatch in linear combination"));
        }
        let mut out = Self::zeros(
            self.size,
            self.lower.max(other.lower),
            self.upper.max(other.upper),
        );
        for i in 0..self.size {
            for j in out.row_span(i) {
                out.set(i, j, alpha * self.get(i, j) + beta * other.get(i, j));
            }
        }
        Ok(out)
    }

    /// Overwrite row `i` from `(column, value)` pairs; columns must be in band.
    pub fn set_row(&mut self, i: usize, entries: impl IntoIterator<Item = (usize, f64)>) {
        for j in self.row_span(i) {
            self.set(i, j, 0.0);
        }
        for (j, v) in entries {
            let cur = self.get(i, j);
            self.set(i, j, cur + v);
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.size)
            .map(|i| (0..self.size).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.size)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl Mul<&[f64]> for &BandedOperator {
    type Output = Vec<f64>;

    fn mul(self, v: &[f64]) -> Vec<f64> {
        self.apply(v).expect("dimension mismatch")
    }
}
