//! Rectangular Kohonen maps.
//!
//! Units are numbered row-major on a `rows x cols` lattice. Lattice distance is the
//! Chebyshev distance, so the 8-neighborhood of a unit is its distance-1 ball.

mod init;
mod io;
mod quality;
mod train;

pub use init::{init_map, InitStrategy};
pub use io::{read_map, write_map, MAP_FORMAT};
pub use quality::{assign, bmu, quantization_error, second_bmu, topographic_error, Assignment};
pub use train::{
    batch_epoch, extended_distortion, online_epoch, train, train_with, Decay, EpochInfo, TrainingMode,
    TrainingSchedule, WinnerRule,
};

use crate::matrix::Matrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SomError {
    #[error("dimension mismatch: map has {expected} components, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty data")]
    EmptyData,
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("topographic error needs at least two units")]
    TooFewUnits,
    #[error("malformed map file: {0}")]
    Malformed(String),
}

/// Rectangular lattice of units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridTopology {
    pub rows: usize,
    pub cols: usize,
}

impl Default for GridTopology {
    fn default() -> Self {
        Self { rows: 10, cols: 10 }
    }
}

impl GridTopology {
    pub fn new(rows: usize, cols: usize) -> Result<Self, SomError> {
        if rows == 0 || cols == 0 {
            return Err(SomError::InvalidTopology(format!("{rows}x{cols} grid has no units")));
        }
        Ok(Self { rows, cols })
    }

    pub fn units(&self) -> usize {
        self.rows * self.cols
    }

    pub fn coords(&self, unit: usize) -> (usize, usize) {
        (unit / self.cols, unit % self.cols)
    }

    pub fn unit(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Chebyshev distance between two units.
    pub fn grid_distance(&self, u: usize, v: usize) -> usize {
        let (ur, uc) = self.coords(u);
        let (vr, vc) = self.coords(v);
        ur.abs_diff(vr).max(uc.abs_diff(vc))
    }

    pub fn are_neighbors(&self, u: usize, v: usize) -> bool {
        self.grid_distance(u, v) == 1
    }

    /// The 8-neighborhood of `unit`, in increasing unit order.
    pub fn neighbors(&self, unit: usize) -> Vec<usize> {
        let (r, c) = self.coords(unit);
        let mut out = Vec::with_capacity(8);
        for nr in r.saturating_sub(1)..=(r + 1).min(self.rows - 1) {
            for nc in c.saturating_sub(1)..=(c + 1).min(self.cols - 1) {
                if (nr, nc) != (r, c) {
                    out.push(self.unit(nr, nc));
                }
            }
        }
        out
    }
}

/// Kernel weights below this value are treated as zero.
pub const KERNEL_CUTOFF: f64 = 1e-12;

/// Gaussian neighborhood weight `exp(-d^2 / (2 sigma^2))` on lattice distance `d`.
///
/// A nonpositive `sigma` is the zero-width limit: weight 1 on the unit itself and 0
/// elsewhere. Weights below [`KERNEL_CUTOFF`] are returned as 0.
pub fn neighborhood_weight(topology: &GridTopology, u: usize, v: usize, sigma: f64) -> f64 {
    let d = topology.grid_distance(u, v) as f64;
    kernel(d, sigma)
}

pub(crate) fn kernel(d: f64, sigma: f64) -> f64 {
    if d == 0.0 {
        return 1.0;
    }
    if sigma <= 0.0 {
        return 0.0;
    }
    let w = (-d * d / (2.0 * sigma * sigma)).exp();
    if w < KERNEL_CUTOFF {
        0.0
    } else {
        w
    }
}

/// Dense unit-by-unit kernel matrix, row-major.
pub(crate) fn kernel_matrix(topology: &GridTopology, sigma: f64) -> Vec<f64> {
    let n = topology.units();
    let mut h = vec![0.0; n * n];
    for u in 0..n {
        for v in 0..n {
            h[u * n + v] = neighborhood_weight(topology, u, v, sigma);
        }
    }
    h
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub epoch: usize,
    pub radius: f64,
    pub quantization_error: f64,
}

/// A grid of code vectors plus how it was trained.
#[derive(Debug, Clone, PartialEq)]
pub struct SomMap {
    pub topology: GridTopology,
    /// One code vector per unit (units x dim).
    pub codes: Matrix,
    pub trace: Vec<TraceEntry>,
    pub schedule: Option<TrainingSchedule>,
    pub seed: u64,
}

impl SomMap {
    pub fn from_codes(topology: GridTopology, codes: Matrix) -> Result<Self, SomError> {
        if codes.nrows() != topology.units() {
            return Err(SomError::InvalidTopology(format!(
                "{} code vectors for {} units",
                codes.nrows(),
                topology.units()
            )));
        }
        Ok(Self {
            topology,
            codes,
            trace: Vec::new(),
            schedule: None,
            seed: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.codes.ncols()
    }

    pub fn units(&self) -> usize {
        self.topology.units()
    }

    pub fn code(&self, unit: usize) -> &[f64] {
        self.codes.row(unit)
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<(), SomError> {
        if found != self.dim() {
            return Err(SomError::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}
