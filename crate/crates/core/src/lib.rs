//! A fourth-order compact finite-difference solver for the time-fractional
//! equation
//!
//! ```text
//! ∂_t^α u + ∂_x⁴ u = q u + f(x, t),   0 < x < L,  0 < t <= T,
//! u = b0, u_x = b1 at x = 0 and x = L,
//! ```
//!
//! with a Caputo derivative of order `0 < α < 1`. Time is discretized by the
//! L1 formula on arbitrary (typically graded) meshes, space by an averaged
//! compact operator that needs only two nodes at each boundary.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: Gamma function, the kernel `ω_β`, cancellation-safe power
//!   differences.
//! * [`mesh`]: time meshes and the spatial grid.
//! * [`kernels`]: L1 and complementary convolution kernels and consistency
//!   diagnostics.
//! * [`grid`]: grid functions, norms and the compact difference operators.
//! * [`problem`]: problem data, including a manufactured test problem.
//! * [`solver`]: assembly and time stepping.
//! * [`experiments`]: convergence tables, stability probes and reporting.

pub mod error;
pub mod experiments;
pub mod grid;
pub mod kernels;
pub mod mesh;
pub mod problem;
pub mod solver;
pub mod specfun;

pub use error::{Error, Result};
pub use grid::{BandedOperator, GridFunction};
pub use kernels::{ComplementaryWeights, KernelTable, L1Weights};
pub use mesh::{MeshFamily, SpatialGrid, TimeMesh};
pub use problem::{manufactured_problem, HatBoundary, ProblemFile, ProblemSpec};
pub use solver::{run, run_with, BoundaryClosure, SolveResult, Solver, SolverOptions};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/scheme.md")]
    mod scheme {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/reproduction.md")]
    mod reproduction {}
}
