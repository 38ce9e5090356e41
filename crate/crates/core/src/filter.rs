//! Bilateral filtering: the direct windowed sum and the convolution pipeline.
//!
//! With a cosine-series range kernel `φ̂(t) = Σ c_k cos(νkt)`, the identity
//! `cos(νk(a - b)) = cos(νka)cos(νkb) + sin(νka)sin(νkb)` splits each range
//! weight into a product of a term depending only on the neighbor and a term
//! depending only on the center pixel. Numerator and denominator of the
//! filter then reduce to Gaussian convolutions of the modulated images
//! `cos(νk f)`, `sin(νk f)`, `f cos(νk f)` and `f sin(νk f)`.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::approx::FourierApproximation;
use crate::kernels::{RangeKernelSamples, SpatialKernel};
use crate::{Error, Result};

/// Denominators at or below this value fall back to the input pixel.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Row-major grayscale image of finite real intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation("image dimensions must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::validation(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|p| !p.is_finite()) {
            return Err(Error::validation(format!("pixel {i} is not finite")));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    /// Checks that every pixel lies in `[0, R]`.
    pub fn check_range(&self, range: u32) -> Result<()> {
        let r = range as f64;
        match self.pixels.iter().position(|&p| !(0.0..=r).contains(&p)) {
            Some(i) => Err(Error::Range(format!(
                "pixel ({}, {}) = {} outside [0, {range}]",
                i % self.width,
                i / self.width,
                self.pixels[i]
            ))),
            None => Ok(()),
        }
    }

    /// Largest pixel value; the smallest dynamic range that covers the image.
    pub fn max_value(&self) -> f64 {
        self.pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn same_shape(&self, pixels: Vec<f64>) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

/// How samples outside the frame are produced.
///
/// `Zero` treats outside samples as absent: they carry no weight in either
/// the numerator or the denominator, for both filter paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BorderPolicy {
    /// Mirror reflection including the edge sample (`cba|abc|cba`).
    #[default]
    Symmetric,
    Replicate,
    Zero,
}

impl BorderPolicy {
    /// Maps a possibly out-of-range index onto `0..n`.
    pub fn resolve(self, i: isize, n: usize) -> Option<usize> {
        let n = n as isize;
        if (0..n).contains(&i) {
            return Some(i as usize);
        }
        match self {
            BorderPolicy::Symmetric => {
                let m = i.rem_euclid(2 * n);
                Some(if m < n { m } else { 2 * n - 1 - m } as usize)
            }
            BorderPolicy::Replicate => Some(i.clamp(0, n - 1) as usize),
            BorderPolicy::Zero => None,
        }
    }

    fn index_map(self, n: usize, radius: usize) -> Vec<Option<usize>> {
        let r = radius as isize;
        (-r..n as isize + r).map(|i| self.resolve(i, n)).collect()
    }
}

impl fmt::Display for BorderPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BorderPolicy::Symmetric => "symmetric",
            BorderPolicy::Replicate => "replicate",
            BorderPolicy::Zero => "zero",
        })
    }
}

impl FromStr for BorderPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(BorderPolicy::Symmetric),
            "replicate" => Ok(BorderPolicy::Replicate),
            "zero" => Ok(BorderPolicy::Zero),
            other => Err(Error::validation(format!("unknown border policy {other:?}"))),
        }
    }
}

/// `out(i) = Σ_j ω(j) f(i - j)` over the truncated window, row pass then
/// column pass.
pub fn convolve_separable(img: &GrayImage, kernel: &SpatialKernel, border: BorderPolicy) -> GrayImage {
    let (w, h) = (img.width, img.height);
    let r = kernel.radius();
    let taps = kernel.taps();

    let cols = border.index_map(w, r);
    let mut horiz = vec![0.0; w * h];
    horiz
        .par_chunks_mut(w)
        .zip(img.pixels.par_chunks(w))
        .for_each_init(
            || vec![0.0; w + 2 * r],
            |padded, (out, src)| {
                for (p, m) in padded.iter_mut().zip(&cols) {
                    *p = m.map_or(0.0, |x| src[x]);
                }
                for (x, o) in out.iter_mut().enumerate() {
                    *o = taps.iter().zip(&padded[x..x + 2 * r + 1]).map(|(t, v)| t * v).sum();
                }
            },
        );

    let rows = border.index_map(h, r);
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, dst)| {
        for (t, m) in taps.iter().zip(&rows[y..y + 2 * r + 1]) {
            if let Some(sy) = *m {
                let src = &horiz[sy * w..(sy + 1) * w];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += t * s;
                }
            }
        }
    });
    img.same_shape(out)
}

/// Wall-clock time spent in each stage of [`fast_bilateral`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub auxiliary: Duration,
    pub convolution: Duration,
    pub combination: Duration,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterDiagnostics {
    /// Pixels whose denominator was not positive; they keep the input value.
    pub fallback_pixels: usize,
    pub convolutions: usize,
    pub timings: Option<StageTimings>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub image: GrayImage,
    pub diagnostics: FilterDiagnostics,
}

/// Direct evaluation of the bilateral filter with range weights read from
/// `range` at the rounded intensity difference.
pub fn brute_bilateral(
    img: &GrayImage,
    spatial: &SpatialKernel,
    range: &RangeKernelSamples,
    border: BorderPolicy,
) -> Result<Filtered> {
    img.check_range(range.range())?;
    Ok(brute_with_table(img, spatial, range.values(), range.range(), border))
}

/// [`brute_bilateral`] with the range kernel replaced by the cosine series.
/// This is the exact target of [`fast_bilateral`].
pub fn brute_bilateral_approx(
    img: &GrayImage,
    spatial: &SpatialKernel,
    approx: &FourierApproximation,
    border: BorderPolicy,
) -> Result<Filtered> {
    img.check_range(approx.range())?;
    Ok(brute_with_table(img, spatial, &approx.samples(), approx.range(), border))
}

fn brute_with_table(
    img: &GrayImage,
    spatial: &SpatialKernel,
    table: &[f64],
    range: u32,
    border: BorderPolicy,
) -> Filtered {
    let (w, h) = (img.width, img.height);
    let r = spatial.radius();
    let taps = spatial.taps();
    let cols = border.index_map(w, r);
    let rows = border.index_map(h, r);
    let offset = range as i64;
    let f = &img.pixels;

    let mut out = vec![0.0; w * h];
    let fallback: usize = out
        .par_chunks_mut(w)
        .enumerate()
        .map(|(y, dst)| {
            let mut count = 0;
            for (x, o) in dst.iter_mut().enumerate() {
                let center = f[y * w + x];
                let (mut num, mut den) = (0.0, 0.0);
                for (wy, my) in taps.iter().zip(&rows[y..y + 2 * r + 1]) {
                    let Some(sy) = *my else { continue };
                    for (wx, mx) in taps.iter().zip(&cols[x..x + 2 * r + 1]) {
                        let Some(sx) = *mx else { continue };
                        let v = f[sy * w + sx];
                        let d = (v - center).round() as i64;
                        let weight = wy * wx * table[(d + offset) as usize];
                        num += weight * v;
                        den += weight;
                    }
                }
                if den > 0.0 {
                    *o = num / den;
                } else {
                    *o = center;
                    count += 1;
                }
            }
            count
        })
        .sum();

    Filtered {
        image: img.same_shape(out),
        diagnostics: FilterDiagnostics {
            fallback_pixels: fallback,
            convolutions: 0,
            timings: None,
        },
    }
}

/// Bilateral filter with the range kernel `φ̂` evaluated through `4K - 2`
/// separable convolutions.
///
/// ```text
/// num = Σ_k c_k [ C_k · G(C_k f) + S_k · G(S_k f) ]
/// den = Σ_k c_k [ C_k · G(C_k)   + S_k · G(S_k)   ]
/// ```
///
/// with `C_k = cos(νk f)`, `S_k = sin(νk f)`. Terms are accumulated in
/// ascending `k` so the result does not depend on the thread count.
pub fn fast_bilateral(
    img: &GrayImage,
    spatial: &SpatialKernel,
    approx: &FourierApproximation,
    border: BorderPolicy,
) -> Result<Filtered> {
    img.check_range(approx.range())?;
    let f = &img.pixels;
    let nu = approx.nu();
    let coeffs = approx.coefficients();

    let start = Instant::now();
    // Modulation images for k ≥ 1: (cos, sin).
    let modulations: Vec<(Vec<f64>, Vec<f64>)> = (1..coeffs.len())
        .into_par_iter()
        .map(|k| {
            let kf = k as f64 * nu;
            f.iter().map(|&v| (kf * v).sin_cos()).map(|(s, c)| (c, s)).unzip()
        })
        .collect();
    // Convolution inputs in fixed order: f, 1, then per k: C f, S f, C, S.
    let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(4 * coeffs.len() - 2);
    inputs.push(f.clone());
    inputs.push(vec![1.0; f.len()]);
    for (c, s) in &modulations {
        inputs.push(c.iter().zip(f).map(|(a, b)| a * b).collect());
        inputs.push(s.iter().zip(f).map(|(a, b)| a * b).collect());
        inputs.push(c.clone());
        inputs.push(s.clone());
    }
    let auxiliary = start.elapsed();

    let start = Instant::now();
    let blurred: Vec<Vec<f64>> = inputs
        .into_par_iter()
        .map(|p| convolve_separable(&img.same_shape(p), spatial, border).pixels)
        .collect();
    let convolution = start.elapsed();

    let start = Instant::now();
    let n = f.len();
    let mut num: Vec<f64> = blurred[0].iter().map(|v| coeffs[0] * v).collect();
    let mut den: Vec<f64> = blurred[1].iter().map(|v| coeffs[0] * v).collect();
    for (k, (c, s)) in modulations.iter().enumerate() {
        let ck = coeffs[k + 1];
        let base = 2 + 4 * k;
        let (gcf, gsf, gc, gs) = (&blurred[base], &blurred[base + 1], &blurred[base + 2], &blurred[base + 3]);
        for i in 0..n {
            num[i] += ck * (c[i] * gcf[i] + s[i] * gsf[i]);
            den[i] += ck * (c[i] * gc[i] + s[i] * gs[i]);
        }
    }
    let mut fallback = 0;
    let out: Vec<f64> = (0..n)
        .map(|i| {
            if den[i] > DENOMINATOR_FLOOR {
                num[i] / den[i]
            } else {
                fallback += 1;
                f[i]
            }
        })
        .collect();
    let combination = start.elapsed();

    Ok(Filtered {
        image: img.same_shape(out),
        diagnostics: FilterDiagnostics {
            fallback_pixels: fallback,
            convolutions: blurred.len(),
            timings: Some(StageTimings {
                auxiliary,
                convolution,
                combination,
            }),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::fit_fixed_period;
    use crate::kernels::{build_spatial_kernel, sample_range_kernel, RangeKernelSpec};

    fn ramp(w: usize, h: usize) -> GrayImage {
        GrayImage::new(w, h, (0..w * h).map(|i| ((i * 37) % 256) as f64).collect()).unwrap()
    }

    #[test]
    fn image_validation() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
        let img = GrayImage::new(2, 1, vec![0.0, 300.0]).unwrap();
        assert!(matches!(img.check_range(255), Err(Error::Range(_))));
    }

    #[test]
    fn border_resolution() {
        use BorderPolicy::*;
        assert_eq!(Symmetric.resolve(-1, 4), Some(0));
        assert_eq!(Symmetric.resolve(-2, 4), Some(1));
        assert_eq!(Symmetric.resolve(4, 4), Some(3));
        assert_eq!(Symmetric.resolve(5, 4), Some(2));
        assert_eq!(Symmetric.resolve(-5, 4), Some(3));
        assert_eq!(Symmetric.resolve(-7, 2), Some(1));
        assert_eq!(Replicate.resolve(-3, 4), Some(0));
        assert_eq!(Replicate.resolve(9, 4), Some(3));
        assert_eq!(Zero.resolve(-1, 4), None);
        assert_eq!(Zero.resolve(2, 4), Some(2));
        for p in [Symmetric, Replicate, Zero] {
            assert_eq!(p.to_string().parse::<BorderPolicy>().unwrap(), p);
        }
        assert!("mirror".parse::<BorderPolicy>().is_err());
    }

    #[test]
    fn convolution_of_constant() {
        let k = build_spatial_kernel(2.0).unwrap();
        let s: f64 = k.taps().iter().sum();
        let img = GrayImage::filled(7, 5, 3.0).unwrap();
        for border in [BorderPolicy::Symmetric, BorderPolicy::Replicate] {
            let out = convolve_separable(&img, &k, border);
            for &v in out.pixels() {
                assert!((v - 3.0 * s * s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn impulse_response_is_the_kernel() {
        let k = build_spatial_kernel(1.5).unwrap();
        let mut px = vec![0.0; 21 * 21];
        px[10 * 21 + 10] = 1.0;
        let img = GrayImage::new(21, 21, px).unwrap();
        let out = convolve_separable(&img, &k, BorderPolicy::Zero);
        let r = k.radius() as isize;
        for y in 0..21isize {
            for x in 0..21isize {
                let (dx, dy) = (x - 10, y - 10);
                let expect = if dx.abs() <= r && dy.abs() <= r { k.weight(dx, dy) } else { 0.0 };
                assert!((out.get(x as usize, y as usize) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constant_image_is_fixed_by_both_paths() {
        let img = GrayImage::filled(9, 6, 77.0).unwrap();
        let k = build_spatial_kernel(2.0).unwrap();
        let b = sample_range_kernel(&RangeKernelSpec::gaussian(30.0, 255)).unwrap();
        let approx = fit_fixed_period(&b, 5, 300).unwrap();
        for border in [BorderPolicy::Symmetric, BorderPolicy::Replicate, BorderPolicy::Zero] {
            let brute = brute_bilateral(&img, &k, &b, border).unwrap();
            let fast = fast_bilateral(&img, &k, &approx, border).unwrap();
            for (&p, &q) in brute.image.pixels().iter().zip(fast.image.pixels()) {
                assert!((p - 77.0).abs() < 1e-12);
                assert!((q - 77.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn single_pixel_image() {
        let img = GrayImage::new(1, 1, vec![42.0]).unwrap();
        let k = build_spatial_kernel(3.0).unwrap();
        let b = sample_range_kernel(&RangeKernelSpec::gaussian(10.0, 255)).unwrap();
        let out = brute_bilateral(&img, &k, &b, BorderPolicy::Zero).unwrap();
        assert_eq!(out.image.pixels(), &[42.0]);
    }

    #[test]
    fn single_term_is_normalized_gaussian_smoothing() {
        let img = ramp(12, 10);
        let k = build_spatial_kernel(1.0).unwrap();
        let approx = FourierApproximation::new(255, 10, vec![0.4]).unwrap();
        let out = fast_bilateral(&img, &k, &approx, BorderPolicy::Replicate).unwrap();
        let smooth = convolve_separable(&img, &k, BorderPolicy::Replicate);
        let norm = convolve_separable(&GrayImage::filled(12, 10, 1.0).unwrap(), &k, BorderPolicy::Replicate);
        for i in 0..img.pixels().len() {
            let expect = smooth.pixels()[i] / norm.pixels()[i];
            assert!((out.image.pixels()[i] - expect).abs() < 1e-10);
        }
        assert_eq!(out.diagnostics.convolutions, 2);
    }

    #[test]
    fn convolution_count_is_4k_minus_2() {
        let img = ramp(8, 8);
        let k = build_spatial_kernel(1.0).unwrap();
        let approx = FourierApproximation::new(255, 200, vec![0.5, 0.3, 0.1, 0.05, 0.01]).unwrap();
        let out = fast_bilateral(&img, &k, &approx, BorderPolicy::Symmetric).unwrap();
        assert_eq!(out.diagnostics.convolutions, 18);
    }

    #[test]
    fn nonpositive_denominator_falls_back() {
        let img = ramp(6, 6);
        let k = build_spatial_kernel(1.0).unwrap();
        let approx = FourierApproximation::new(255, 10, vec![-1.0]).unwrap();
        let out = fast_bilateral(&img, &k, &approx, BorderPolicy::Symmetric).unwrap();
        assert_eq!(out.diagnostics.fallback_pixels, 36);
        assert_eq!(out.image, img);
        let brute = brute_bilateral_approx(&img, &k, &approx, BorderPolicy::Symmetric).unwrap();
        assert_eq!(brute.diagnostics.fallback_pixels, 36);
    }

    #[test]
    fn out_of_range_input_rejected() {
        let img = GrayImage::new(2, 1, vec![0.0, 256.0]).unwrap();
        let k = build_spatial_kernel(1.0).unwrap();
        let b = sample_range_kernel(&RangeKernelSpec::gaussian(10.0, 255)).unwrap();
        assert!(brute_bilateral(&img, &k, &b, BorderPolicy::Symmetric).is_err());
    }
}
