//! Kernel identities on random meshes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::KernelTable;
use crate::mesh::TimeMesh;
use crate::specfun::omega;

use super::parallel_map;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshKind {
    Uniform,
    Graded,
    /// Uniform nodes moved by up to 40% of a step.
    Jittered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelCheckConfig {
    pub meshes: usize,
    pub max_steps: usize,
    pub seed: u64,
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for KernelCheckConfig {
    fn default() -> Self {
        KernelCheckConfig {
            meshes: 100,
            max_steps: 200,
            seed: 2024,
            jobs: 1,
        }
    }
}

/// Violation counts over every level of every mesh.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct KernelCheckReport {
    pub meshes: usize,
    pub levels: usize,
    pub uniform: usize,
    pub graded: usize,
    pub jittered: usize,
    /// Largest `|Σ_{j=k}^n p_{n-j}^{(n)} a_{j-k}^{(j)} - 1|`.
    pub max_identity_residual: f64,
    /// Some `a_j^{(n)} <= 0`.
    pub positivity_violations: usize,
    /// Some `a_j^{(n)} <= a_{j+1}^{(n)}`.
    pub monotonicity_violations: usize,
    /// Some `a_{n-k-1}^{(n)} > ω_{1-α}(t_n - t_k) > a_{n-k}^{(n)}` fails.
    pub sandwich_violations: usize,
    /// Some `p_j^{(n)} < 0`.
    pub complementary_sign_violations: usize,
    /// `Σ_j p_{n-j}^{(n)} ω_{1+mα-α}(t_j) <= ω_{1+mα}(t_n)` fails for `m = 0` or `1`.
    pub bound_violations: usize,
}

impl KernelCheckReport {
    pub fn violations(&self) -> usize {
        self.positivity_violations
            + self.monotonicity_violations
            + self.sandwich_violations
            + self.complementary_sign_violations
            + self.bound_violations
    }

    pub fn passed(&self, identity_tolerance: f64) -> bool {
        self.violations() == 0 && self.max_identity_residual <= identity_tolerance
    }

    fn merge(&mut self, other: &KernelCheckReport) {
        self.meshes += other.meshes;
        self.levels += other.levels;
        self.uniform += other.uniform;
        self.graded += other.graded;
        self.jittered += other.jittered;
        self.max_identity_residual = self.max_identity_residual.max(other.max_identity_residual);
        self.positivity_violations += other.positivity_violations;
        self.monotonicity_violations += other.monotonicity_violations;
        self.sandwich_violations += other.sandwich_violations;
        self.complementary_sign_violations += other.complementary_sign_violations;
        self.bound_violations += other.bound_violations;
    }
}

/// A random mesh on `[0, 1]` with its kind and a random order `α`.
pub(crate) fn random_mesh(rng: &mut ChaCha8Rng, max_steps: usize) -> Result<(MeshKind, TimeMesh, f64)> {
    let steps = rng.gen_range(1..=max_steps);
    let alpha = rng.gen_range(0.05..0.95);
    let (kind, mesh) = match rng.gen_range(0..3) {
        0 => (MeshKind::Uniform, TimeMesh::uniform(steps, 1.0)?),
        1 => (MeshKind::Graded, TimeMesh::graded(steps, 1.0, rng.gen_range(1.0..5.0))?),
        _ => {
            let h = 1.0 / steps as f64;
            let mut nodes: Vec<f64> = (0..=steps)
                .map(|k| {
                    if k == 0 || k == steps {
                        k as f64 * h
                    } else {
                        (k as f64 + rng.gen_range(-0.4..0.4)) * h
                    }
                })
                .collect();
            nodes[steps] = 1.0;
            (MeshKind::Jittered, TimeMesh::from_nodes(nodes)?)
        }
    };
    Ok((kind, mesh, alpha))
}

fn check_mesh(kind: MeshKind, mesh: &TimeMesh, alpha: f64) -> Result<KernelCheckReport> {
    let mut r = KernelCheckReport {
        meshes: 1,
        levels: mesh.steps(),
        ..Default::default()
    };
    match kind {
        MeshKind::Uniform => r.uniform = 1,
        MeshKind::Graded => r.graded = 1,
        MeshKind::Jittered => r.jittered = 1,
    }
    let table = KernelTable::new(mesh, alpha)?;
    let t = mesh.nodes();
    for n in 1..=mesh.steps() {
        let a = table.weights(n).as_slice();
        if a.iter().any(|&x| !(x > 0.0)) {
            r.positivity_violations += 1;
        }
        if a.windows(2).any(|w| !(w[0] > w[1])) {
            r.monotonicity_violations += 1;
        }
        for k in 1..n {
            let mid = omega(1.0 - alpha, t[n] - t[k])?;
            if !(a[n - k - 1] > mid && mid > a[n - k]) {
                r.sandwich_violations += 1;
            }
        }
        let p = table.complementary(n)?;
        if p.as_slice().iter().any(|&x| !(x >= 0.0)) {
            r.complementary_sign_violations += 1;
        }
        r.max_identity_residual = r.max_identity_residual.max(table.identity_residual(&p));
        for m in [0.0, 1.0] {
            let lhs: f64 = (1..=n)
                .map(|j| Ok(p.for_level(j) * omega(1.0 + m * alpha - alpha, t[j])?))
                .sum::<Result<f64>>()?;
            if lhs > omega(1.0 + m * alpha, t[n])? * (1.0 + 1e-10) {
                r.bound_violations += 1;
            }
        }
    }
    Ok(r)
}

/// Check every kernel property on `config.meshes` random meshes with at most
/// `config.max_steps` steps each.
pub fn kernels_check(config: &KernelCheckConfig) -> Result<KernelCheckReport> {
    if config.meshes == 0 || config.max_steps == 0 {
        return Err(Error::invalid("kernel check needs at least one mesh and one step"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cases = (0..config.meshes)
        .map(|_| random_mesh(&mut rng, config.max_steps))
        .collect::<Result<Vec<_>>>()?;
    let reports = parallel_map(config.jobs, &cases, |(kind, mesh, alpha)| check_mesh(*kind, mesh, *alpha))?;
    let mut total = KernelCheckReport::default();
    for r in &reports {
        total.merge(r);
    }
    Ok(total)
}
