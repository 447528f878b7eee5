#![allow(dead_code)]

use meshstyle_core::{CameraPose, Mesh};
use rand::Rng;

/// Three triangles, not coplanar, inside the unit box.
pub fn three_triangles() -> Mesh {
    Mesh::new(
        vec![
            [-0.5, -0.4, 0.1],
            [0.5, -0.45, -0.1],
            [0.05, 0.5, 0.0],
            [0.6, 0.45, 0.2],
            [-0.55, 0.35, -0.15],
        ],
        vec![[0, 1, 2], [1, 3, 2], [0, 2, 4]],
    )
    .unwrap()
}

pub fn pose(azimuth: f64, elevation: f64) -> CameraPose {
    CameraPose::new(azimuth, elevation, 2.0, std::f64::consts::FRAC_PI_3, [0.0; 3])
}

pub fn uniform(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = meshstyle_core::rng_from_seed(seed);
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Relative error with a floor on the denominator.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
