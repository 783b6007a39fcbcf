//! Functional data depths and empirical deepest points for curves observed
//! on a common grid.
//!
//! - [`grid`]: grids, quadrature weights for the index measure, curves,
//!   datasets and L2 geometry.
//! - [`depths`]: band, half-region, modified band, modified half-region,
//!   integrated and spatial depths.
//! - [`medians`]: coordinatewise and spatial medians.
//! - [`simulate`]: Brownian motion, fractional Brownian motion and Brownian
//!   bridge paths.
//! - [`io`]: dataset CSV and report CSV/JSON formats.
//! - [`experiment`]: degeneracy, maximizer, breakdown and consistency runs.

pub mod depths;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod io;
pub mod medians;
pub mod simulate;

pub use depths::{
    band_depth, band_depth_with, half_region_depth, integrated_data_depth, modified_band_depth,
    modified_half_region_depth, spatial_depth, BandDepthMethod, DepthContext, DepthFamily,
    DepthResult, SpatialConvention, UnivariateDepth,
};
pub use error::{Error, Result};
pub use grid::{
    integrate, l2_distance, make_grid, quadrature_weights, resample_to_grid, Curve,
    FunctionalDataset, Grid, MarginalCounts, MeasureWeights, QuadratureScheme,
};
pub use medians::{
    coordinatewise_median, spatial_median, spatial_objective, SolverConfig, SolverReport,
};
pub use simulate::{build_kernel, sample_paths, GpSpec, KernelMatrix, ProcessKind};
