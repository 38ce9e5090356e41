//! Cosine-series approximation of a sampled range kernel.
//!
//! For order `K` and half-period `T` the kernel samples `b` are fitted by
//! `φ̂(t) = Σ_{k<K} c_k cos(νkt)` with `ν = 2π/(2T+1)`, minimizing the
//! discrete squared error over `{-R, …, R}`:
//!
//! ```text
//! E(K, T) = min_c ‖A c - b‖²,   A(i, j) = cos(ν (i - R) j)   (0-based)
//! ```
//!
//! `e(K) = min_T E(K, T)` is found by an exhaustive scan over `T = 1..=T_max`,
//! and [`optimize_parameters`] returns the smallest `K` with `e(K) ≤ ε`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::kernels::RangeKernelSamples;
use crate::lstsq::{self, Matrix};
use crate::{Error, Result};

/// Default `T_max` is this multiple of the dynamic range `R`.
pub const DEFAULT_T_MAX_FACTOR: u32 = 10;

pub fn default_t_max(range: u32) -> u32 {
    DEFAULT_T_MAX_FACTOR * range
}

/// `2R + 1`: the order at which the approximation becomes exact.
pub fn default_k_max(range: u32) -> usize {
    2 * range as usize + 1
}

/// A fitted `K`-term cosine series with half-period `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierApproximation {
    range: u32,
    period: u32,
    nu: f64,
    coefficients: Vec<f64>,
}

impl FourierApproximation {
    pub fn new(range: u32, period: u32, coefficients: Vec<f64>) -> Result<Self> {
        if range == 0 || period == 0 {
            return Err(Error::validation("R and T must be positive"));
        }
        if coefficients.is_empty() {
            return Err(Error::validation("approximation needs at least one coefficient"));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numeric("non-finite coefficient".into()));
        }
        Ok(Self {
            range,
            period,
            nu: frequency(period),
            coefficients,
        })
    }

    /// Number of cosine terms `K`.
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    /// Half-period `T`.
    pub fn period(&self) -> u32 {
        self.period
    }

    /// `ν = 2π / (2T+1)`.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `φ̂(t) = Σ_k c_k cos(νkt)`.
    pub fn evaluate(&self, t: i64) -> f64 {
        let n = 2 * self.period as i64 + 1;
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| c * lattice_cos(k as i64 * t, n))
            .sum()
    }

    /// `φ̂` on `{-R, …, R}`.
    pub fn samples(&self) -> Vec<f64> {
        let r = self.range as i64;
        (-r..=r).map(|t| self.evaluate(t)).collect()
    }
}

/// Evaluates [`FourierApproximation::evaluate`].
pub fn evaluate_approximation(approx: &FourierApproximation, t: i64) -> f64 {
    approx.evaluate(t)
}

fn frequency(period: u32) -> f64 {
    2.0 * PI / (2.0 * period as f64 + 1.0)
}

/// `cos(2π m / n)` with the integer argument reduced modulo `n` and folded
/// onto `[0, n/2]`, so `m` and `-m` give bit-identical values.
fn lattice_cos(m: i64, n: i64) -> f64 {
    let m = m.rem_euclid(n);
    let m = m.min(n - m);
    (2.0 * PI * m as f64 / n as f64).cos()
}

/// The `(2R+1) × K` matrix of sampled cosines, `A(i, j) = cos(ν (i-R) j)`
/// for 0-based `i, j`.
pub fn design_matrix(order: usize, period: u32, range: u32) -> Result<Matrix> {
    if order == 0 || period == 0 || range == 0 {
        return Err(Error::validation("K, T and R must all be at least 1"));
    }
    if order > default_k_max(range) {
        return Err(Error::validation(format!(
            "K = {order} exceeds 2R+1 = {}",
            default_k_max(range)
        )));
    }
    let n = 2 * period as i64 + 1;
    let table: Vec<f64> = (0..n).map(|m| lattice_cos(m, n)).collect();
    let r = range as i64;
    Ok(Matrix::from_fn(2 * range as usize + 1, order, |i, j| {
        table[((i as i64 - r) * j as i64).rem_euclid(n) as usize]
    }))
}

/// Least-squares coefficients and the residual `E = ‖Ac - b‖²`.
///
/// Rank-deficient `A` yields the minimum-norm minimizer.
pub fn fit_coefficients(a: &Matrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let ls = lstsq::solve(a, b)?;
    Ok((ls.solution, ls.residual))
}

fn fit(b: &RangeKernelSamples, order: usize, period: u32) -> Result<(FourierApproximation, f64)> {
    let a = design_matrix(order, period, b.range())?;
    let (c, e) = fit_coefficients(&a, b.values())?;
    Ok((FourierApproximation::new(b.range(), period, c)?, e))
}

/// Fits at a given `(K, T)`. With `T = R` this is the fixed-period baseline.
pub fn fit_fixed_period(b: &RangeKernelSamples, order: usize, period: u32) -> Result<FourierApproximation> {
    fit(b, order, period).map(|(a, _)| a)
}

/// Like [`fit_fixed_period`] but also returns the residual `E(K, T)`.
pub fn fit_with_error(b: &RangeKernelSamples, order: usize, period: u32) -> Result<(FourierApproximation, f64)> {
    fit(b, order, period)
}

/// `E(K, T)` for `T = 1..=t_max`, in order. Evaluated in parallel.
pub fn period_scan(order: usize, b: &RangeKernelSamples, t_max: u32) -> Result<Vec<f64>> {
    if t_max == 0 {
        return Err(Error::validation("T_max must be at least 1"));
    }
    (1..=t_max)
        .into_par_iter()
        .map(|t| {
            let a = design_matrix(order, t, b.range())?;
            fit_coefficients(&a, b.values()).map(|(_, e)| e)
        })
        .collect()
}

/// Index of the minimum, first occurrence on ties.
fn argmin(errors: &[f64]) -> usize {
    let mut best = 0;
    for (i, &e) in errors.iter().enumerate() {
        if e < errors[best] {
            best = i;
        }
    }
    best
}

/// `(T_best, e(K))` by exhaustive scan; ties go to the smaller `T`.
pub fn min_error_over_period(order: usize, b: &RangeKernelSamples, t_max: u32) -> Result<(u32, f64)> {
    let scan = period_scan(order, b, t_max)?;
    let i = argmin(&scan);
    Ok((i as u32 + 1, scan[i]))
}

/// Strict local minima of `E` along `T`, endpoints included.
pub fn count_local_minima(errors: &[f64]) -> usize {
    let n = errors.len();
    (0..n)
        .filter(|&i| {
            let left = i == 0 || errors[i] < errors[i - 1];
            let right = i + 1 == n || errors[i] < errors[i + 1];
            left && right && n > 1
        })
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSurfacePoint {
    pub order: usize,
    pub period: u32,
    pub error: f64,
}

/// Best period for one order of the search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderMinimum {
    pub order: usize,
    pub period: u32,
    pub error: f64,
    /// Number of strict local minima along `T`; more than one means the
    /// error was not unimodal in `T` for this order.
    pub local_minima: usize,
}

/// Outcome of the order/period search.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport {
    pub range: u32,
    pub k_star: usize,
    pub t_star: u32,
    pub coefficients: Vec<f64>,
    pub achieved_error: f64,
    pub tolerance: f64,
    pub t_max: u32,
    pub per_order: Vec<OrderMinimum>,
    pub surface: Vec<ErrorSurfacePoint>,
}

impl OptimizationReport {
    pub fn approximation(&self) -> FourierApproximation {
        FourierApproximation {
            range: self.range,
            period: self.t_star,
            nu: frequency(self.t_star),
            coefficients: self.coefficients.clone(),
        }
    }

    /// Orders whose error curve over `T` had more than one local minimum.
    pub fn non_unimodal_orders(&self) -> Vec<usize> {
        self.per_order
            .iter()
            .filter(|m| m.local_minima > 1)
            .map(|m| m.order)
            .collect()
    }

    /// Writes the `(K, T, E)` surface as CSV with header `K,T,E`.
    pub fn write_surface_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "K,T,E")?;
        for p in &self.surface {
            writeln!(out, "{},{},{:e}", p.order, p.period, p.error)?;
        }
        Ok(())
    }
}

impl fmt::Display for OptimizationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "K* = {}", self.k_star)?;
        writeln!(f, "T* = {}", self.t_star)?;
        writeln!(f, "achieved error = {:e}", self.achieved_error)?;
        writeln!(f, "tolerance = {:e}", self.tolerance)?;
        writeln!(f, "T_max = {}", self.t_max)?;
        write!(f, "coefficients =")?;
        for c in &self.coefficients {
            write!(f, " {c:e}")?;
        }
        writeln!(f)?;
        writeln!(f, "per-order minima (K T e(K) local_minima):")?;
        for m in &self.per_order {
            writeln!(f, "  {} {} {:e} {}", m.order, m.period, m.error, m.local_minima)?;
        }
        let multi = self.non_unimodal_orders();
        if !multi.is_empty() {
            writeln!(f, "note: E(K, T) not unimodal in T for K = {multi:?}")?;
        }
        Ok(())
    }
}

/// Best fit seen when the tolerance could not be met.
#[derive(Debug, Clone, PartialEq)]
pub struct BestFound {
    pub order: usize,
    pub period: u32,
    pub error: f64,
    pub coefficients: Vec<f64>,
}

impl fmt::Display for BestFound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K = {}, T = {}, E = {:e}", self.order, self.period, self.error)
    }
}

/// Smallest order `K ≤ k_max` whose best period brings the error to `ε`.
///
/// For each `K`, every `T` in `1..=t_max` is scanned in ascending order and a
/// candidate is recorded when its error is within both the tolerance and the
/// best error recorded so far (strictly below the latter, so the smaller `T`
/// wins ties). The search stops at the first order with a recorded candidate.
pub fn optimize_parameters(
    b: &RangeKernelSamples,
    tolerance: f64,
    t_max: u32,
    k_max: usize,
) -> Result<OptimizationReport> {
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::validation(format!("tolerance must be positive, got {tolerance}")));
    }
    if t_max == 0 {
        return Err(Error::validation("T_max must be at least 1"));
    }
    let limit = default_k_max(b.range());
    if k_max == 0 || k_max > limit {
        return Err(Error::validation(format!("K_max must lie in 1..={limit}, got {k_max}")));
    }

    let mut best_error = f64::INFINITY;
    let mut best: Option<(usize, u32)> = None;
    let mut per_order = Vec::new();
    let mut surface = Vec::new();
    let mut fallback = (1usize, 1u32, f64::INFINITY);

    for order in 1..=k_max {
        let scan = period_scan(order, b, t_max)?;
        for (i, &e) in scan.iter().enumerate() {
            let period = i as u32 + 1;
            if e <= tolerance && e < best_error {
                best_error = e;
                best = Some((order, period));
            }
            surface.push(ErrorSurfacePoint { order, period, error: e });
        }
        let i = argmin(&scan);
        per_order.push(OrderMinimum {
            order,
            period: i as u32 + 1,
            error: scan[i],
            local_minima: count_local_minima(&scan),
        });
        if scan[i] < fallback.2 {
            fallback = (order, i as u32 + 1, scan[i]);
        }
        if best.is_some() {
            break;
        }
    }

    match best {
        Some((k_star, t_star)) => {
            let (approx, achieved_error) = fit(b, k_star, t_star)?;
            Ok(OptimizationReport {
                range: b.range(),
                k_star,
                t_star,
                coefficients: approx.coefficients,
                achieved_error,
                tolerance,
                t_max,
                per_order,
                surface,
            })
        }
        None => {
            let (order, period, _) = fallback;
            let (approx, error) = fit(b, order, period)?;
            Err(Error::ToleranceUnreachable {
                tolerance,
                k_max,
                best: Box::new(BestFound {
                    order,
                    period,
                    error,
                    coefficients: approx.coefficients,
                }),
            })
        }
    }
}

/// Smallest `K` whose fit at a fixed period `T` meets the tolerance.
pub fn optimize_order_fixed_period(
    b: &RangeKernelSamples,
    tolerance: f64,
    period: u32,
    k_max: usize,
) -> Result<(FourierApproximation, f64)> {
    let mut last = None;
    for order in 1..=k_max.min(default_k_max(b.range())) {
        let (approx, e) = fit(b, order, period)?;
        if e <= tolerance {
            return Ok((approx, e));
        }
        last = Some((approx, e));
    }
    let (approx, error) = last.ok_or_else(|| Error::validation("K_max must be at least 1"))?;
    Err(Error::ToleranceUnreachable {
        tolerance,
        k_max,
        best: Box::new(BestFound {
            order: approx.order(),
            period,
            error,
            coefficients: approx.coefficients,
        }),
    })
}
