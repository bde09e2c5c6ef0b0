//! Dual-carrier coefficient sweeps and the statistics used to summarize them.

mod cdf;
mod sweep;

pub use cdf::EmpiricalCdf;
pub use sweep::{
    coefficient_sweep, relative_difference, write_sweep_csv, CoefficientKind, DiffSample,
    SkippedPoint, SweepGrid, SweepResult, WedgeGrid,
};
