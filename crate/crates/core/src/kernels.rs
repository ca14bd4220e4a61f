//! Discrete convolution kernels of the nonuniform L1 formula.
//!
//! On a mesh `t_0 < ... < t_N` the L1 approximation of the Caputo derivative
//! of order `α` at `t_n` is
//!
//! ```text
//! D^α v^n = Σ_{k=1}^{n} a_{n-k}^{(n)} (v^k - v^{k-1}),
//! a_{n-k}^{(n)} = [ω_{2-α}(t_n - t_{k-1}) - ω_{2-α}(t_n - t_k)] / τ_k.
//! ```
//!
//! The complementary kernels `p_{n-j}^{(n)}` invert the convolution in the
//! sense `Σ_{j=k}^{n} p_{n-j}^{(n)} a_{j-k}^{(j)} = 1`. They are only needed
//! for diagnostics; the time stepper uses `a` alone.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::TimeMesh;
use crate::specfun::{gamma, power_difference_with_gap};

pub(crate) fn check_order(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("fractional order must lie in (0, 1), got {alpha}")))
    }
}

fn check_step(mesh: &TimeMesh, n: usize) -> Result<()> {
    if n == 0 || n > mesh.steps() {
        return Err(Error::invalid(format!(
            "step index {n} out of range 1..={}",
            mesh.steps()
        )));
    }
    Ok(())
}

/// The L1 weights `a_0^{(n)}, ..., a_{n-1}^{(n)}` for one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Weights {
    n: usize,
    alpha: f64,
    /// Indexed by lag `j = n - k`.
    a: Vec<f64>,
}

impl L1Weights {
    pub fn step(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `a_lag^{(n)}`.
    pub fn get(&self, lag: usize) -> f64 {
        self.a[lag]
    }

    /// Weights ordered by lag.
    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }

    /// Weight multiplying the increment `v^k - v^{k-1}`.
    pub fn for_increment(&self, k: usize) -> f64 {
        self.a[self.n - k]
    }
}

pub fn l1_weights(mesh: &TimeMesh, alpha: f64, n: usize) -> Result<L1Weights> {
    check_order(alpha)?;
    check_step(mesh, n)?;
    let scale = 1.0 / gamma(2.0 - alpha)?;
    let p = 1.0 - alpha;
    let t = mesh.nodes();
    let tn = t[n];
    let mut a = vec![0.0; n];
    for k in 1..=n {
        let tau = t[k] - t[k - 1];
        let far = tn - t[k - 1];
        let diff = if k == n {
            tau.powf(p)
        } else {
            power_difference_with_gap(far, tau, p)?
        };
        a[n - k] = scale * diff / tau;
    }
    Ok(L1Weights { n, alpha, a })
}

/// `Σ_{k=1}^{n} a_{n-k}^{(n)} (v_k - v_{k-1})` for samples `v_0..v_n`.
pub fn l1_caputo(series: &[f64], weights: &L1Weights) -> Result<f64> {
    if series.len() != weights.n + 1 {
        return Err(Error::invalid(format!(
            "series has {} samples but the weights are for step {}",
            series.len(),
            weights.n
        )));
    }
    Ok(series
        .windows(2)
        .enumerate()
        .map(|(k, w)| weights.for_increment(k + 1) * (w[1] - w[0]))
        .sum())
}

/// Complementary kernels `p_0^{(n)}, ..., p_{n-1}^{(n)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplementaryWeights {
    n: usize,
    /// Indexed by lag `n - j`.
    p: Vec<f64>,
}

impl ComplementaryWeights {
    pub fn step(&self) -> usize {
        self.n
    }

    pub fn get(&self, lag: usize) -> f64 {
        self.p[lag]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    /// `p_{n-j}^{(n)}` for `1 <= j <= n`.
    pub fn for_level(&self, j: usize) -> f64 {
        self.p[self.n - j]
    }
}

/// All L1 weights of a mesh up to some level, kept for diagnostics that need
/// the whole triangle (complementary kernels, identity checks).
#[derive(Debug, Clone)]
pub struct KernelTable {
    alpha: f64,
    levels: Vec<L1Weights>,
}

impl KernelTable {
    /// Weights for every level `1..=mesh.steps()`.
    pub fn new(mesh: &TimeMesh, alpha: f64) -> Result<Self> {
        Self::up_to(mesh, alpha, mesh.steps())
    }

    pub fn up_to(mesh: &TimeMesh, alpha: f64, n_max: usize) -> Result<Self> {
        check_order(alpha)?;
        check_step(mesh, n_max)?;
        let levels = (1..=n_max)
            .map(|n| l1_weights(mesh, alpha, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(KernelTable { alpha, levels })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn max_step(&self) -> usize {
        self.levels.len()
    }

    pub fn weights(&self, n: usize) -> &L1Weights {
        &self.levels[n - 1]
    }

    pub fn complementary(&self, n: usize) -> Result<ComplementaryWeights> {
        if n == 0 || n > self.levels.len() {
            return Err(Error::invalid(format!(
                "step index {n} out of range 1..={}",
                self.levels.len()
            )));
        }
        let mut p = vec![0.0; n];
        p[0] = 1.0 / self.weights(n).get(0);
        for j in (1..n).rev() {
            let mut acc = 0.0;
            for k in j + 1..=n {
                let a = self.weights(k);
                acc += (a.get(k - j - 1) - a.get(k - j)) * p[n - k];
            }
            p[n - j] = acc / self.weights(j).get(0);
        }
        Ok(ComplementaryWeights { n, p })
    }

    /// Largest `|Σ_{j=k}^{n} p_{n-j}^{(n)} a_{j-k}^{(j)} - 1|` over `1 <= k <= n`.
    pub fn identity_residual(&self, p: &ComplementaryWeights) -> f64 {
        let n = p.step();
        (1..=n)
            .map(|k| {
                let s: f64 = (k..=n).map(|j| p.for_level(j) * self.weights(j).get(j - k)).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Complementary kernels at level `n`, built from the L1 weights of every
/// level `1..=n`.
pub fn complementary_weights(mesh: &TimeMesh, alpha: f64, n: usize) -> Result<ComplementaryWeights> {
    KernelTable::up_to(mesh, alpha, n)?.complementary(n)
}

/// Local consistency error `∂_t^α v(t_n) - D^α v^n` of the L1 formula.
///
/// `series` holds at least the samples `v(t_0)..v(t_n)`; extra trailing
/// samples are ignored.
pub fn consistency_error<F>(exact_caputo: F, series: &[f64], mesh: &TimeMesh, alpha: f64, n: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if series.len() <= n {
        return Err(Error::invalid(format!(
            "need {} samples for step {n}, got {}",
            n + 1,
            series.len()
        )));
    }
    let weights = l1_weights(mesh, alpha, n)?;
    Ok(exact_caputo(mesh.node(n)) - l1_caputo(&series[..=n], &weights)?)
}

/// Right-hand side of the error convolution structure,
/// `a_0^{(n)} G^n + Σ_{k=1}^{n-1} (a_{n-k-1}^{(n)} - a_{n-k}^{(n)}) G^k`,
/// with `curvature[k-1] = G^k`.
pub fn error_convolution_bound(weights: &L1Weights, curvature: &[f64]) -> Result<f64> {
    let n = weights.step();
    if curvature.len() < n {
        return Err(Error::invalid(format!(
            "need {n} curvature integrals, got {}",
            curvature.len()
        )));
    }
    let mut bound = weights.get(0) * curvature[n - 1];
    for k in 1..n {
        bound += (weights.get(n - k - 1) - weights.get(n - k)) * curvature[k - 1];
    }
    Ok(bound)
}

/// `Σ_{j=1}^{n} p_{n-j}^{(n)} |Υ^j|` with `local[j-1] = Υ^j`.
pub fn global_consistency_error(p: &ComplementaryWeights, local: &[f64]) -> Result<f64> {
    let n = p.step();
    if local.len() < n {
        return Err(Error::invalid(format!("need {n} local errors, got {}", local.len())));
    }
    Ok((1..=n).map(|j| p.for_level(j) * local[j - 1].abs()).sum())
}

/// Ratios `p_{n-j}^{(n)} / ∫_{t_{j-1}}^{t_j} ω_α(t_n - s) ds`.
///
/// It is open whether these stay below one on general meshes; this report
/// only records them.
#[derive(Debug, Clone, Serialize)]
pub struct ConjectureReport {
    pub n: usize,
    pub alpha: f64,
    /// Indexed by `j - 1`.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Level `j` attaining the maximum.
    pub argmax: usize,
}

pub fn conjecture_probe(mesh: &TimeMesh, alpha: f64, n: usize) -> Result<ConjectureReport> {
    let p = complementary_weights(mesh, alpha, n)?;
    conjecture_ratios(mesh, alpha, &p)
}

pub(crate) fn conjecture_ratios(mesh: &TimeMesh, alpha: f64, p: &ComplementaryWeights) -> Result<ConjectureReport> {
    let n = p.step();
    let g = gamma(1.0 + alpha)?;
    let tn = mesh.node(n);
    let mut ratios = Vec::with_capacity(n);
    for j in 1..=n {
        let far = tn - mesh.node(j - 1);
        let tau = mesh.step(j);
        let integral = if j == n {
            tau.powf(alpha) / g
        } else {
            power_difference_with_gap(far, tau, alpha)? / g
        };
        ratios.push(p.for_level(j) / integral);
    }
    let (argmax, max_ratio) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, r)| if r > best.1 { (i, r) } else { best });
    Ok(ConjectureReport {
        n,
        alpha,
        ratios,
        max_ratio,
        argmax: argmax + 1,
    })
}
