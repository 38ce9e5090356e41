//! Spatial and range kernels.
//!
//! The range kernel acts on intensity differences, which for an image with
//! values in `[0, R]` live on the lattice `Λ = {-R, …, R}`. Only those `2R+1`
//! samples ever enter the filter, so a range kernel is represented by its
//! sample vector ([`RangeKernelSamples`]) rather than as a function.

use std::path::Path;

use crate::{Error, Result};

/// Symmetry tolerance applied to tabulated kernels.
pub const TABLE_SYMMETRY_TOL: f64 = 1e-12;

/// Shape of a range kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum RangeKernel {
    /// `exp(-t² / 2σ²)`
    Gaussian { sigma: f64 },
    /// `exp(-|t| / σ)`
    Exponential { sigma: f64 },
    /// `1 / (1 + t²/σ²)`
    Cauchy { sigma: f64 },
    /// Explicit samples on `{-R, …, R}`, center entry is `φ(0)`.
    Tabulated(Vec<f64>),
}

impl RangeKernel {
    fn eval(&self, t: f64) -> f64 {
        match *self {
            RangeKernel::Gaussian { sigma } => (-(t * t) / (2.0 * sigma * sigma)).exp(),
            RangeKernel::Exponential { sigma } => (-t.abs() / sigma).exp(),
            RangeKernel::Cauchy { sigma } => 1.0 / (1.0 + (t * t) / (sigma * sigma)),
            RangeKernel::Tabulated(_) => unreachable!("tabulated kernels are not evaluated"),
        }
    }

    /// Reads a tabulated kernel: one real value per line, blank lines ignored.
    pub fn read_table(path: impl AsRef<Path>) -> Result<RangeKernel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut values = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|_| Error::parse(n + 1, format!("expected a real number, got {line:?}")))?;
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::parse(1, "kernel table is empty"));
        }
        Ok(RangeKernel::Tabulated(values))
    }
}

/// A range kernel together with the dynamic range `R` it is sampled over.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeKernelSpec {
    pub kind: RangeKernel,
    pub range: u32,
}

impl RangeKernelSpec {
    pub fn new(kind: RangeKernel, range: u32) -> Self {
        Self { kind, range }
    }

    pub fn gaussian(sigma: f64, range: u32) -> Self {
        Self::new(RangeKernel::Gaussian { sigma }, range)
    }
}

/// Samples `b(i) = φ(i - R - 1)`, `i = 1, …, 2R+1`, of a symmetric range kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeKernelSamples {
    range: u32,
    values: Vec<f64>,
}

impl RangeKernelSamples {
    /// Validates explicit samples: length `2R+1`, finite, symmetric to
    /// [`TABLE_SYMMETRY_TOL`], positive maximum at the center.
    pub fn from_values(range: u32, values: Vec<f64>) -> Result<Self> {
        if range == 0 {
            return Err(Error::validation("dynamic range R must be positive"));
        }
        let n = 2 * range as usize + 1;
        if values.len() != n {
            return Err(Error::validation(format!(
                "kernel table has {} entries, expected 2R+1 = {n}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!("kernel entry {i} is not finite")));
        }
        let c = range as usize;
        for k in 1..=c {
            let (lo, hi) = (values[c - k], values[c + k]);
            if (lo - hi).abs() > TABLE_SYMMETRY_TOL {
                return Err(Error::validation(format!(
                    "kernel is not symmetric at offset {k}: {lo} vs {hi}"
                )));
            }
        }
        let center = values[c];
        if center <= 0.0 {
            return Err(Error::validation("kernel value at 0 must be positive"));
        }
        if values.iter().any(|&v| v > center) {
            return Err(Error::validation("kernel maximum must be at the center"));
        }
        Ok(Self { range, values })
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    /// The vector `b`, ordered from `t = -R` to `t = R`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `φ(t)` for `t ∈ {-R, …, R}`.
    pub fn at(&self, t: i64) -> f64 {
        self.values[(t + self.range as i64) as usize]
    }

    pub fn center(&self) -> f64 {
        self.values[self.range as usize]
    }
}

/// Samples a range kernel on `{-R, …, R}`.
///
/// Parametric kernels are evaluated for `t = 0, …, R` and mirrored, so the
/// result is exactly symmetric. Tabulated kernels are validated and returned
/// unchanged.
pub fn sample_range_kernel(spec: &RangeKernelSpec) -> Result<RangeKernelSamples> {
    if spec.range == 0 {
        return Err(Error::validation("dynamic range R must be positive"));
    }
    let r = spec.range as usize;
    match &spec.kind {
        RangeKernel::Tabulated(values) => RangeKernelSamples::from_values(spec.range, values.clone()),
        RangeKernel::Gaussian { sigma }
        | RangeKernel::Exponential { sigma }
        | RangeKernel::Cauchy { sigma } => {
            if !(sigma.is_finite() && *sigma > 0.0) {
                return Err(Error::validation(format!("sigma must be positive, got {sigma}")));
            }
            let half: Vec<f64> = (0..=r).map(|t| spec.kind.eval(t as f64)).collect();
            let mut values = Vec::with_capacity(2 * r + 1);
            values.extend(half[1..].iter().rev());
            values.extend_from_slice(&half);
            Ok(RangeKernelSamples {
                range: spec.range,
                values,
            })
        }
    }
}

/// Truncated separable Gaussian `ω(j) = exp(-j² / 2θ²)`, `|j| ≤ ceil(3θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialKernel {
    theta: f64,
    radius: usize,
    taps: Vec<f64>,
}

impl SpatialKernel {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// 1-D taps for offsets `-radius..=radius`. Unnormalized, center tap is 1.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// `ω(0)`, the center weight of the 2-D kernel.
    pub fn center(&self) -> f64 {
        self.taps[self.radius] * self.taps[self.radius]
    }

    /// 2-D weight at offset `(dx, dy)`, the outer product of the taps.
    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius as isize;
        self.taps[(dx + r) as usize] * self.taps[(dy + r) as usize]
    }
}

pub fn build_spatial_kernel(theta: f64) -> Result<SpatialKernel> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::validation(format!("theta must be positive, got {theta}")));
    }
    let radius = (3.0 * theta).ceil() as usize;
    let half: Vec<f64> = (0..=radius)
        .map(|j| {
            let j = j as f64;
            (-(j * j) / (2.0 * theta * theta)).exp()
        })
        .collect();
    let mut taps = Vec::with_capacity(2 * radius + 1);
    taps.extend(half[1..].iter().rev());
    taps.extend_from_slice(&half);
    Ok(SpatialKernel { theta, radius, taps })
}
