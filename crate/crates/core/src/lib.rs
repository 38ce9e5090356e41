//! Fast bilateral filtering with an optimized Fourier approximation of the
//! range kernel.
//!
//! The range kernel `φ` is sampled on the integer lattice `{-R, …, R}` and
//! replaced by a truncated cosine series
//!
//! ```text
//! φ̂(t) = Σ_{k=0}^{K-1} c_k cos(2πkt / (2T+1))
//! ```
//!
//! whose order `K`, half-period `T` and coefficients `c_k` are chosen jointly
//! to bring the discrete squared error below a tolerance. With `φ̂` in place of
//! `φ`, the numerator and denominator of the bilateral filter become sums of
//! `4K - 2` Gaussian convolutions of modulated images.
//!
//! Modules:
//! - [`kernels`]: spatial and range kernels and their samples.
//! - [`approx`]: least-squares fitting, period scan, order search.
//! - [`lut`]: offline table of optimal `(K, T)` with bilinear lookup.
//! - [`filter`]: brute-force oracle and the fast convolution pipeline.
//! - [`metrics`]: MSE, PSNR, kernel error and the pixelwise error bound.
//! - [`imageio`]: binary PGM reading and writing.
//! - [`cli`]: the `fbilateral` command-line tool.

pub mod approx;
pub mod cli;
mod error;
pub mod filter;
pub mod imageio;
pub mod kernels;
pub mod lstsq;
pub mod lut;
pub mod metrics;
pub mod synth;

pub use approx::{
    design_matrix, fit_coefficients, fit_fixed_period, min_error_over_period, optimize_parameters,
    ErrorSurfacePoint, FourierApproximation, OptimizationReport, DEFAULT_T_MAX_FACTOR,
};
pub use error::{Error, Result};
pub use filter::{brute_bilateral, convolve_separable, fast_bilateral, BorderPolicy, GrayImage};
pub use kernels::{
    build_spatial_kernel, sample_range_kernel, RangeKernel, RangeKernelSamples, RangeKernelSpec, SpatialKernel,
};
pub use lut::LookupTable;
pub use metrics::{compare_images, kernel_error, prop1_bound, ComparisonResult};
