//! Nonparametric monitoring of spatial dependence in streams of
//! rectangular lattice data.
//!
//! Each frame is summarized by the types of its 2x2 spatial ordinal
//! patterns (or, as a parametric competitor, by its spatial
//! autocorrelation). EWMA charts track these summaries over time, and the
//! calibration engine designs their limits for a target in-control average
//! run length by parallel, reproducible simulation.
//!
//! ```
//! use sopchart_core::{type_frequencies, validate_grid, Delay};
//!
//! let g = validate_grid(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
//! assert_eq!(type_frequencies(&g, Delay::UNIT).unwrap().p(), [1.0, 0.0, 0.0]);
//! ```

pub mod calibration;
pub mod charts;
pub mod dgp;
pub mod error;
pub mod lattice;
pub mod rng;
pub mod sop;

pub use calibration::{
    bootstrap_calibrate, calibrate_limit, calibrate_with, default_rel_tol, estimate_arl,
    estimate_arl_with, run_length, ArlEstimate, BootstrapMonitor, BootstrapPool,
    CalibrationOptions, CalibrationResult, ChartMonitor, Monitor, RunLength, Scenario,
    SearchStep, SimOptions, DEFAULT_BUDGET, DEFAULT_CAP,
};
pub use charts::{
    bp_acf_stat, bp_sop_stat, ewma_step, ewma_step_vec, init_chart, update_chart, ChartConfig,
    ChartInit, ChartKind, ChartPoint, ChartState,
};
pub use dgp::{
    contaminate, ContaminationModel, ContaminationSpec, DgpModel, DgpSpec, MarginalSpec,
    PreparedDgp,
};
pub use error::{Error, Result};
pub use lattice::{jitter, validate_grid, CountGrid, Frame, FrameStream, RealGrid};
pub use rng::{derive_seed, stream_rng, SimRng};
pub use sop::{
    dependence_stats, sop_of_square, sops, spatial_acf, type_counts, type_frequencies,
    type_of_sop, AcfFrame, Delay, DependenceStats, Sop, SopType, SpatialLag, TypeCounts,
    TypeFrequencies,
};
