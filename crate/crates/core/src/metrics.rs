//! Image comparison and kernel-error metrics.

use std::fmt;

use crate::approx::FourierApproximation;
use crate::filter::GrayImage;
use crate::kernels::RangeKernelSamples;
use crate::{Error, Result};

/// Peak value used in the PSNR formula.
pub const PSNR_PEAK: f64 = 255.0;

/// Header of the CSV record written by [`ComparisonResult`].
pub const COMPARISON_CSV_HEADER: &str = "mse,psnr_db,max_abs_err,prop1_bound,bound_satisfied";

/// PSNR in dB; identical images give `Infinite` rather than a float infinity.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Psnr {
    Finite(f64),
    Infinite,
}

impl Psnr {
    pub fn from_mse(mse: f64) -> Psnr {
        if mse > 0.0 {
            Psnr::Finite(10.0 * (PSNR_PEAK * PSNR_PEAK / mse).log10())
        } else {
            Psnr::Infinite
        }
    }

    pub fn db(self) -> f64 {
        match self {
            Psnr::Finite(v) => v,
            Psnr::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v}"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageDifference {
    pub mse: f64,
    pub psnr: Psnr,
    pub max_abs_err: f64,
}

pub fn compare_images(a: &GrayImage, b: &GrayImage) -> Result<ImageDifference> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::validation(format!(
            "image sizes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let mut sum = 0.0;
    let mut max_abs_err: f64 = 0.0;
    for (p, q) in a.pixels().iter().zip(b.pixels()) {
        let d = p - q;
        sum += d * d;
        max_abs_err = max_abs_err.max(d.abs());
    }
    let mse = sum / a.pixels().len() as f64;
    Ok(ImageDifference {
        mse,
        psnr: Psnr::from_mse(mse),
        max_abs_err,
    })
}

/// Pixelwise bound `2Rε / (ω0 - ε)` on the filtering error caused by a range
/// kernel approximation whose discrete squared error is at most `ε`.
pub fn prop1_bound(eps: f64, range: u32, omega0: f64) -> Result<f64> {
    if !(eps >= 0.0 && eps < omega0) {
        return Err(Error::Range(format!(
            "bound requires 0 <= eps < omega(0), got eps = {eps}, omega(0) = {omega0}"
        )));
    }
    Ok(2.0 * range as f64 * eps / (omega0 - eps))
}

/// `Σ_{t ∈ Λ} (φ(t) - φ̂(t))²`.
pub fn kernel_error(b: &RangeKernelSamples, approx: &FourierApproximation) -> Result<f64> {
    if b.range() != approx.range() {
        return Err(Error::validation(format!(
            "kernel sampled for R = {} but approximation fitted for R = {}",
            b.range(),
            approx.range()
        )));
    }
    Ok(b.values()
        .iter()
        .zip(approx.samples())
        .map(|(p, q)| (p - q) * (p - q))
        .sum())
}

/// Fast-versus-brute comparison together with the pixelwise bound check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonResult {
    pub mse: f64,
    pub psnr: Psnr,
    pub max_abs_err: f64,
    pub prop1_bound: f64,
    pub bound_satisfied: bool,
}

impl ComparisonResult {
    /// `kernel_error` is the achieved residual of the approximation used.
    pub fn new(diff: ImageDifference, kernel_error: f64, range: u32, omega0: f64) -> Result<Self> {
        let bound = prop1_bound(kernel_error, range, omega0)?;
        Ok(Self {
            mse: diff.mse,
            psnr: diff.psnr,
            max_abs_err: diff.max_abs_err,
            prop1_bound: bound,
            bound_satisfied: diff.max_abs_err <= bound,
        })
    }

    pub fn csv_record(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.mse, self.psnr, self.max_abs_err, self.prop1_bound, self.bound_satisfied
        )
    }
}
