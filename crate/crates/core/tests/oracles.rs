//! Checks against independent reference computations.
//!
//! Each oracle here is written from the defining formula with plain loops
//! and shares no code path with the implementation it checks.

use std::f64::consts::PI;

use fourier_bilateral::approx::{
    design_matrix, fit_coefficients, fit_fixed_period, fit_with_error, min_error_over_period, optimize_parameters,
};
use fourier_bilateral::filter::{brute_bilateral, brute_bilateral_approx, convolve_separable, fast_bilateral};
use fourier_bilateral::kernels::{build_spatial_kernel, sample_range_kernel, RangeKernelSpec};
use fourier_bilateral::metrics::kernel_error;
use fourier_bilateral::{synth, BorderPolicy, GrayImage};

fn gaussian(sigma: f64, range: u32) -> fourier_bilateral::RangeKernelSamples {
    sample_range_kernel(&RangeKernelSpec::gaussian(sigma, range)).unwrap()
}

/// `E(K, T)` via normal equations `AᵀA c = Aᵀb` solved by Gaussian
/// elimination with full pivoting; the matrix is built from `cos` directly.
fn normal_equation_error(sigma: f64, range: i64, order: usize, period: i64) -> f64 {
    let nu = 2.0 * PI / (2 * period + 1) as f64;
    let ts: Vec<i64> = (-range..=range).collect();
    let phi = |t: i64| (-((t * t) as f64) / (2.0 * sigma * sigma)).exp();
    let col = |k: usize, t: i64| (nu * k as f64 * t as f64).cos();

    let mut g = vec![vec![0.0; order + 1]; order];
    for i in 0..order {
        for j in 0..order {
            g[i][j] = ts.iter().map(|&t| col(i, t) * col(j, t)).sum();
        }
        g[i][order] = ts.iter().map(|&t| col(i, t) * phi(t)).sum();
    }
    let mut perm: Vec<usize> = (0..order).collect();
    for p in 0..order {
        let (mut bi, mut bj, mut best) = (p, p, -1.0);
        for i in p..order {
            for j in p..order {
                if g[i][j].abs() > best {
                    best = g[i][j].abs();
                    bi = i;
                    bj = j;
                }
            }
        }
        g.swap(p, bi);
        for row in g.iter_mut() {
            row.swap(p, bj);
        }
        perm.swap(p, bj);
        for i in p + 1..order {
            let f = g[i][p] / g[p][p];
            for j in p..=order {
                g[i][j] -= f * g[p][j];
            }
        }
    }
    let mut y = vec![0.0; order];
    for i in (0..order).rev() {
        let s: f64 = (i + 1..order).map(|j| g[i][j] * y[j]).sum();
        y[i] = (g[i][order] - s) / g[i][i];
    }
    let mut c = vec![0.0; order];
    for (i, &p) in perm.iter().enumerate() {
        c[p] = y[i];
    }
    ts.iter()
        .map(|&t| {
            let approx: f64 = (0..order).map(|k| c[k] * col(k, t)).sum();
            (approx - phi(t)).powi(2)
        })
        .sum()
}

#[test]
fn least_squares_matches_normal_equation_oracle() {
    let b = gaussian(50.0, 255);
    let a = design_matrix(4, 203, 255).unwrap();
    let (_, e) = fit_coefficients(&a, b.values()).unwrap();
    let oracle = normal_equation_error(50.0, 255, 4, 203);
    assert!(((e - oracle) / oracle).abs() < 1e-8, "E = {e}, oracle = {oracle}");

    for (sigma, k, t) in [(15.0, 6, 150), (30.0, 5, 175), (40.0, 4, 255), (70.0, 3, 221)] {
        let b = gaussian(sigma, 255);
        let (_, e) = fit_with_error(&b, k, t).unwrap();
        let oracle = normal_equation_error(sigma, 255, k, t as i64);
        assert!(((e - oracle) / oracle).abs() < 1e-8, "sigma {sigma}: {e} vs {oracle}");
    }
}

#[test]
fn normal_equation_residual_is_small() {
    let b = gaussian(50.0, 255);
    let norm_b = b.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    for (k, t) in [(4, 203), (6, 30), (9, 3), (12, 5)] {
        let a = design_matrix(k, t, 255).unwrap();
        let (c, _) = fit_coefficients(&a, b.values()).unwrap();
        let r: Vec<f64> = a.mul_vec(&c).iter().zip(b.values()).map(|(p, q)| p - q).collect();
        let g = a.tr_mul_vec(&r);
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(gmax <= 1e-8 * norm_b, "K={k} T={t}: {gmax}");
    }
}

#[test]
fn coefficients_are_locally_optimal() {
    let b = gaussian(30.0, 255);
    let a = design_matrix(5, 180, 255).unwrap();
    let (c, e) = fit_coefficients(&a, b.values()).unwrap();
    let sse = |c: &[f64]| -> f64 { a.mul_vec(c).iter().zip(b.values()).map(|(p, q)| (p - q).powi(2)).sum() };
    for i in 0..c.len() {
        for d in [-1e-3, 1e-3] {
            let mut p = c.clone();
            p[i] += d;
            assert!(sse(&p) >= e);
        }
    }
}

#[test]
fn fig1_fit_is_pointwise_within_sqrt_eps() {
    let b = gaussian(50.0, 255);
    let approx = fit_fixed_period(&b, 4, 203).unwrap();
    let worst = (-255..=255)
        .map(|t| (approx.evaluate(t) - b.at(t)).abs())
        .fold(0.0f64, f64::max);
    assert!(worst <= 0.1f64.sqrt(), "max deviation {worst}");
}

#[test]
fn optimized_period_beats_fixed_period_at_sigma_40() {
    let b = gaussian(40.0, 255);
    let fbf = fit_fixed_period(&b, 4, 255).unwrap();
    let e_fbf = kernel_error(&b, &fbf).unwrap();
    let (t, e_opt) = min_error_over_period(4, &b, 2550).unwrap();
    assert!(e_opt < e_fbf, "optimized {e_opt} (T = {t}) vs fixed {e_fbf}");
}

#[test]
fn full_order_vanishes_by_exhaustive_scan() {
    // R = 7: every T in 1..=70 at K = 15; the minimum must vanish.
    let b = gaussian(1.0, 7);
    let mut best = f64::INFINITY;
    for t in 1..=70 {
        let (_, e) = fit_with_error(&b, 15, t).unwrap();
        best = best.min(e);
    }
    assert!(best <= 1e-10);
    let report = optimize_parameters(&b, 1e-12, 70, 15).unwrap();
    assert!(report.k_star <= 15);
    assert!(report.achieved_error <= 1e-12);
}

/// Direct 2-D windowed sum with its own border mapping.
fn direct_convolution(img: &GrayImage, theta: f64, border: BorderPolicy) -> Vec<f64> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let r = (3.0 * theta).ceil() as i64;
    let map = |i: i64, n: i64| -> Option<i64> {
        match border {
            BorderPolicy::Zero => (0..n).contains(&i).then_some(i),
            BorderPolicy::Replicate => Some(i.max(0).min(n - 1)),
            BorderPolicy::Symmetric => {
                let mut i = i;
                while !(0..n).contains(&i) {
                    i = if i < 0 { -i - 1 } else { 2 * n - 1 - i };
                }
                Some(i)
            }
        }
    };
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    if let (Some(sx), Some(sy)) = (map(x - dx, w), map(y - dy, h)) {
                        let wgt = (-((dx * dx + dy * dy) as f64) / (2.0 * theta * theta)).exp();
                        s += wgt * img.get(sx as usize, sy as usize);
                    }
                }
            }
            out.push(s);
        }
    }
    out
}

#[test]
fn separable_convolution_matches_direct_sum() {
    let img = synth::noise(9, 9, 11);
    for theta in [1.0, 2.0, 4.0] {
        let k = build_spatial_kernel(theta).unwrap();
        for border in [BorderPolicy::Symmetric, BorderPolicy::Replicate, BorderPolicy::Zero] {
            let fast = convolve_separable(&img, &k, border);
            let slow = direct_convolution(&img, theta, border);
            for (p, q) in fast.pixels().iter().zip(&slow) {
                assert!((p - q).abs() < 1e-10, "theta {theta} {border}: {p} vs {q}");
            }
        }
    }
}

/// Nested-loop bilateral filter written straight from its definition.
fn nested_loop_bilateral(img: &GrayImage, theta: f64, sigma: f64, border: BorderPolicy) -> Vec<f64> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let r = (3.0 * theta).ceil() as i64;
    let reflect = |mut i: i64, n: i64| {
        while !(0..n).contains(&i) {
            i = if i < 0 { -i - 1 } else { 2 * n - 1 - i };
        }
        i
    };
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let fc = img.get(x as usize, y as usize);
            let (mut num, mut den) = (0.0, 0.0);
            for dy in -r..=r {
                for dx in -r..=r {
                    let (sx, sy) = match border {
                        BorderPolicy::Symmetric => (reflect(x - dx, w), reflect(y - dy, h)),
                        BorderPolicy::Replicate => ((x - dx).clamp(0, w - 1), (y - dy).clamp(0, h - 1)),
                        BorderPolicy::Zero => {
                            if !(0..w).contains(&(x - dx)) || !(0..h).contains(&(y - dy)) {
                                continue;
                            }
                            (x - dx, y - dy)
                        }
                    };
                    let fv = img.get(sx as usize, sy as usize);
                    let spatial = (-((dx * dx + dy * dy) as f64) / (2.0 * theta * theta)).exp();
                    let range = (-((fv - fc) * (fv - fc)) / (2.0 * sigma * sigma)).exp();
                    num += spatial * range * fv;
                    den += spatial * range;
                }
            }
            out.push(num / den);
        }
    }
    out
}

#[test]
fn brute_force_matches_nested_loop_oracle() {
    let img = synth::noise(16, 16, 5);
    let k = build_spatial_kernel(2.0).unwrap();
    let b = gaussian(30.0, 255);
    for border in [BorderPolicy::Symmetric, BorderPolicy::Replicate, BorderPolicy::Zero] {
        let ours = brute_bilateral(&img, &k, &b, border).unwrap();
        let oracle = nested_loop_bilateral(&img, 2.0, 30.0, border);
        for (p, q) in ours.image.pixels().iter().zip(&oracle) {
            assert!((p - q).abs() < 1e-10, "{border}: {p} vs {q}");
        }
    }
}

#[test]
fn fast_filter_equals_substituted_brute_force() {
    let img = synth::noise(32, 32, 3);
    let k = build_spatial_kernel(3.0).unwrap();
    let b = gaussian(50.0, 255);
    let report = optimize_parameters(&b, 0.1, 2550, 511).unwrap();
    let approx = report.approximation();
    for border in [BorderPolicy::Symmetric, BorderPolicy::Replicate, BorderPolicy::Zero] {
        let fast = fast_bilateral(&img, &k, &approx, border).unwrap();
        let oracle = brute_bilateral_approx(&img, &k, &approx, border).unwrap();
        let worst = fast
            .image
            .pixels()
            .iter()
            .zip(oracle.image.pixels())
            .map(|(p, q)| (p - q).abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= 1e-6, "{border}: {worst}");
    }
}

#[test]
fn impulse_response_on_large_image() {
    let n = 41;
    let mut px = vec![0.0; n * n];
    px[20 * n + 20] = 1.0;
    let img = GrayImage::new(n, n, px).unwrap();
    let k = build_spatial_kernel(3.0).unwrap();
    let out = convolve_separable(&img, &k, BorderPolicy::Symmetric);
    for dy in -9isize..=9 {
        for dx in -9isize..=9 {
            let v = out.get((20 + dx) as usize, (20 + dy) as usize);
            assert!((v - k.weight(dx, dy)).abs() < 1e-15);
        }
    }
}
