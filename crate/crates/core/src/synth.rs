//! Seeded synthetic datasets for tests and offline runs.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detector::Label;
use crate::eval::LabeledDataset;
use crate::float::{cast, Float};
use crate::kernel::DataMatrix;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller, one draw per call.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// n standard-normal points in d dimensions.
pub fn gaussian<F: Float>(n: usize, d: usize, seed: u64) -> DataMatrix<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| (0..d).map(|_| cast::<F>(normal(&mut rng))).collect())
        .collect();
    DataMatrix::new(rows).expect("generated data is valid")
}

/// Ring of `n` points at `radius` with Gaussian radial noise.
fn ring(n: usize, radius: f64, noise: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let theta = rng.gen_range(0.0..2.0 * PI);
            let r = radius + noise * normal(rng);
            vec![r * theta.cos(), r * theta.sin()]
        })
        .collect()
}

/// Two concentric rings: inliers on the unit ring, outliers on an inner
/// ring at half the radius. The standard offline stand-in for the one-class
/// image protocols.
pub fn two_rings<F: Float>(n_inliers: usize, n_outliers: usize, seed: u64) -> LabeledDataset<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = ring(n_inliers, 1.0, 0.08, &mut rng);
    rows.extend(ring(n_outliers, 0.5, 0.08, &mut rng));
    let labels: Vec<Label> = std::iter::repeat(Label::Inlier)
        .take(n_inliers)
        .chain(std::iter::repeat(Label::Outlier).take(n_outliers))
        .collect();
    let rows_f: Vec<Vec<F>> = rows
        .into_iter()
        .map(|r| r.into_iter().map(cast::<F>).collect())
        .collect();
    LabeledDataset::new(DataMatrix::new(rows_f).expect("generated data is valid"), labels)
        .expect("labels align")
}
