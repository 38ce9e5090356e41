//! Seeded synthetic test images.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::filter::GrayImage;

/// Independent uniform integer intensities in `[0, 255]`.
pub fn noise(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let px = (0..width * height).map(|_| rng.random_range(0..=255u32) as f64).collect();
    GrayImage::new(width, height, px).expect("valid dimensions")
}

/// Random axis-aligned rectangles of constant intensity over a flat
/// background, plus mild integer noise. Produces sharp edges.
pub fn blocks(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut px = vec![rng.random_range(0..=255u32) as f64; width * height];
    for _ in 0..8 {
        let (x0, y0) = (rng.random_range(0..width), rng.random_range(0..height));
        let (x1, y1) = (rng.random_range(x0..width) + 1, rng.random_range(y0..height) + 1);
        let v = rng.random_range(0..=255u32) as f64;
        for y in y0..y1 {
            px[y * width + x0..y * width + x1].fill(v);
        }
    }
    for p in &mut px {
        *p = (*p + rng.random_range(-4..=4i32) as f64).clamp(0.0, 255.0);
    }
    GrayImage::new(width, height, px).expect("valid dimensions")
}
