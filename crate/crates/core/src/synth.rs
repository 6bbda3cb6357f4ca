//! Seeded synthetic data used by the test and benchmark suites: a 7-feature
//! table in `[0, 1]` whose last four features are fixed affine functions of
//! the first three plus small Gaussian noise, so a well-trained autoencoder
//! can recover any coordinate from the others.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::seed;

/// Number of features produced by [`correlated_dataset`].
pub const N_FEATURES: usize = 7;

/// Generates `n` records: features 0-2 uniform in `[0, 1]`, features 3-6
/// affine in them with noise of the given standard deviation, everything
/// clamped to `[0, 1]`. Deterministic per seed.
pub fn correlated_dataset(n: usize, noise_sd: f64, seed_value: u64) -> Vec<Vec<f64>> {
    let mut rng = seed::rng(seed::mix(seed_value, 0xDA7A));
    let normal = Normal::new(0.0, noise_sd).expect("valid noise level");
    (0..n)
        .map(|_| {
            let a = rng.gen::<f64>();
            let b = rng.gen::<f64>();
            let c = rng.gen::<f64>();
            let mut row = vec![
                a,
                b,
                c,
                0.10 + 0.20 * a + 0.30 * b + 0.30 * c,
                0.90 - 0.30 * a - 0.20 * b - 0.20 * c,
                0.50 + 0.35 * a - 0.25 * b,
                0.15 + 0.20 * a + 0.20 * b + 0.40 * c,
            ];
            for v in row.iter_mut().skip(3) {
                *v = (*v + normal.sample(&mut rng)).clamp(0.0, 1.0);
            }
            row
        })
        .collect()
}
