use std::str::FromStr;

use serde::Serialize;

use crate::error::Error;

/// Grid sizes for each study. `Paper` uses the full reference sizes, `Desk`
/// trims the finest level so a laptop finishes in minutes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Desk,
    Paper,
}

impl Preset {
    /// `(α, σ, γ)` of the spatial tables.
    pub const SPATIAL_PARAMS: (f64, f64, f64) = (0.3, 1.3, 2.0);
    /// `(α, σ, γ)` of the graded temporal tables.
    pub const TEMPORAL_PARAMS: (f64, f64, f64) = (0.5, 0.3, 5.0);
    pub const STABILITY_PARAMS: (f64, f64, f64) = (0.5, 0.3, 2.0);
    pub const STABILITY_DELTA: f64 = 1e-6;
    pub const STABILITY_INTERVALS: usize = 32;

    /// `(N, M list)`.
    pub fn spatial(self) -> (usize, Vec<usize>) {
        match self {
            Preset::Desk => (5000, vec![8, 16, 32]),
            Preset::Paper => (10000, vec![8, 16, 32, 64]),
        }
    }

    /// `(M, N list)`.
    pub fn temporal(self) -> (usize, Vec<usize>) {
        match self {
            Preset::Desk => (100, vec![1024, 2048, 4096]),
            Preset::Paper => (600, vec![1024, 2048, 4096, 8192]),
        }
    }

    /// `(M, N list)`.
    pub fn stability(self) -> (usize, Vec<usize>) {
        match self {
            Preset::Desk => (Self::STABILITY_INTERVALS, vec![64, 128, 256]),
            Preset::Paper => (Self::STABILITY_INTERVALS, vec![64, 128, 256, 512, 1024]),
        }
    }

    /// `(mesh count, max steps)`.
    pub fn kernels(self) -> (usize, usize) {
        match self {
            Preset::Desk => (100, 200),
            Preset::Paper => (1000, 400),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::invalid(format!("unknown preset '{other}' (expected desk or paper)"))),
        }
    }
}
