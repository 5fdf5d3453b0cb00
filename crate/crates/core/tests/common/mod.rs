#![allow(dead_code)]

use novikov::grid::{PeriodicGrid, RealField};
use proptest::prelude::*;

/// `mean + Σ_k (a_k cos kωx + b_k sin kωx)` with `k = 1, 2, ...`.
pub fn band_limited(grid: &PeriodicGrid, mean: f64, modes: &[(f64, f64)]) -> RealField {
    let w = 2.0 * std::f64::consts::PI / grid.length();
    grid.sample(|x| {
        mean + modes
            .iter()
            .enumerate()
            .map(|(j, (a, b))| {
                let kx = (j + 1) as f64 * w * x;
                a * kx.cos() + b * kx.sin()
            })
            .sum::<f64>()
    })
}

/// Mean and up to 12 Fourier modes with coefficients in `[-1, 1]`.
pub fn spectrum() -> impl Strategy<Value = (f64, Vec<(f64, f64)>)> {
    (
        -1.0..1.0f64,
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..12),
    )
}

/// Largest absolute entry of `a - b`.
pub fn sup_gap(a: &RealField, b: &RealField) -> f64 {
    a.samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
