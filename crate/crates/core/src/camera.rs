//! Camera poses, the anchor-view search over a Fibonacci sphere lattice and
//! Gaussian view sampling around the anchor.

use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::embedding::{Embedder, PreparedTarget};
use crate::error::{Error, Result};
use crate::math::{add, atan2, cos, cross, norm, scale, sin, sqrt, V3};
use crate::mesh::Mesh;
use crate::render::RenderConfig;

/// Elevations are kept this far from the poles.
pub const POLE_MARGIN: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub azimuth: f64,
    pub elevation: f64,
    pub distance: f64,
    pub fov_y: f64,
    pub look_at: V3,
}

impl CameraPose {
    pub fn new(azimuth: f64, elevation: f64, distance: f64, fov_y: f64, look_at: V3) -> Self {
        Self { azimuth, elevation, distance, fov_y, look_at }
    }

    /// Unit vector from the target towards the eye.
    pub fn direction(&self) -> V3 {
        let ce = cos(self.elevation);
        [ce * sin(self.azimuth), sin(self.elevation), ce * cos(self.azimuth)]
    }

    pub fn eye(&self) -> V3 {
        add(self.look_at, scale(self.direction(), self.distance))
    }

    /// Orthonormal `(right, up, forward)` with forward pointing at the target.
    pub fn basis(&self) -> (V3, V3, V3) {
        let forward = scale(self.direction(), -1.0);
        let r = cross(forward, [0.0, 1.0, 0.0]);
        let right = scale(r, 1.0 / norm(r));
        let up = cross(right, forward);
        (right, up, forward)
    }

    /// Same camera, rotated around the target.
    pub fn offset(&self, d_azimuth: f64, d_elevation: f64) -> Self {
        Self {
            azimuth: self.azimuth + d_azimuth,
            elevation: clamp_elevation(self.elevation + d_elevation),
            ..*self
        }
    }
}

pub(crate) fn clamp_elevation(e: f64) -> f64 {
    let lim = core::f64::consts::FRAC_PI_2 - POLE_MARGIN;
    e.clamp(-lim, lim)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSamplerConfig {
    pub n_theta: usize,
    /// Standard deviation of the azimuth and elevation jitter, radians.
    pub jitter_sd: f64,
    pub anchor_grid_count: usize,
    pub seed: u64,
    /// Camera distance as a multiple of the unit-box diagonal.
    pub distance_factor: f64,
    pub fov_y: f64,
}

impl Default for ViewSamplerConfig {
    fn default() -> Self {
        Self {
            n_theta: 5,
            jitter_sd: core::f64::consts::FRAC_PI_4,
            anchor_grid_count: 100,
            seed: 0,
            distance_factor: 1.1,
            fov_y: core::f64::consts::FRAC_PI_3,
        }
    }
}

impl ViewSamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_theta == 0 || self.anchor_grid_count == 0 {
            return Err(Error::InvalidArgument("view counts must be at least 1".into()));
        }
        if !(self.jitter_sd >= 0.0) {
            return Err(Error::InvalidArgument("jitter_sd must be non-negative".into()));
        }
        Ok(())
    }

    /// Distance used for a mesh normalized to the unit box.
    pub fn camera_distance(&self) -> f64 {
        self.distance_factor * sqrt(3.0)
    }

    pub fn pose(&self, mesh: &Mesh, azimuth: f64, elevation: f64) -> CameraPose {
        CameraPose::new(azimuth, clamp_elevation(elevation), self.camera_distance(), self.fov_y, mesh.centroid())
    }
}

/// `count` near-uniform directions as `(azimuth, elevation)` pairs.
pub fn fibonacci_directions(count: usize) -> Vec<(f64, f64)> {
    let golden = core::f64::consts::PI * (3.0 - sqrt(5.0));
    (0..count)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = sqrt((1.0 - y * y).max(0.0));
            let phi = golden * i as f64;
            let (x, z) = (r * cos(phi), r * sin(phi));
            (atan2(x, z), libm::asin(y))
        })
        .collect()
}

pub fn anchor_grid(mesh: &Mesh, cfg: &ViewSamplerConfig) -> Vec<CameraPose> {
    fibonacci_directions(cfg.anchor_grid_count)
        .into_iter()
        .map(|(az, el)| cfg.pose(mesh, az, el))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSelection {
    pub pose: CameraPose,
    pub index: usize,
    pub score: f64,
    /// Score of every grid pose, in grid order.
    pub grid: Vec<(CameraPose, f64)>,
}

/// Renders the unstylized mesh from every grid pose, scores each render
/// against the target and returns the best pose (lowest index on ties).
pub fn select_anchor<E: Embedder + ?Sized>(
    mesh: &Mesh,
    target: &PreparedTarget,
    embedder: &E,
    render_cfg: &RenderConfig,
    cfg: &ViewSamplerConfig,
) -> Result<AnchorSelection> {
    cfg.validate()?;
    let mut rng = crate::rng_from_seed(crate::derive_seed(cfg.seed, 0xA2C4));
    let colors = mesh.colors_or_gray();
    let mut grid = Vec::with_capacity(cfg.anchor_grid_count);
    let mut best: Option<(usize, f64)> = None;
    for (i, pose) in anchor_grid(mesh, cfg).into_iter().enumerate() {
        let bg = render_cfg.background.draw(&mut rng);
        let scene = crate::render::Scene::new(mesh.vertices(), &colors, mesh.faces())?;
        let img = crate::render::render(&scene, &pose, render_cfg, bg).image;
        let emb = embedder.embed_image(&crate::augment::clip_normalize(&img))?;
        let targets = target.embeddings(core::slice::from_ref(&pose), embedder, render_cfg)?;
        let mut score = 0.0;
        for t in &targets {
            score += crate::embedding::cosine_sim(&emb, t)?;
        }
        if best.map_or(true, |(_, s)| score > s) {
            best = Some((i, score));
        }
        grid.push((pose, score));
    }
    let (index, score) = best.expect("grid is non-empty");
    Ok(AnchorSelection { pose: grid[index].0, index, score, grid })
}

/// Draws `n_theta` poses with azimuth and elevation jittered independently
/// by `N(0, jitter_sd^2)` around the anchor.
pub fn sample_views(anchor: &CameraPose, cfg: &ViewSamplerConfig, rng: &mut crate::Rng) -> Vec<CameraPose> {
    let normal = Normal::new(0.0, cfg.jitter_sd).expect("finite, non-negative jitter");
    (0..cfg.n_theta)
        .map(|_| {
            let da: f64 = normal.sample(rng);
            let de: f64 = normal.sample(rng);
            anchor.offset(da, de)
        })
        .collect()
}

/// Preset offsets around the anchor used for final snapshots.
pub fn snapshot_poses(anchor: &CameraPose) -> Vec<(&'static str, CameraPose)> {
    use core::f64::consts::{FRAC_PI_2, PI};
    alloc::vec![
        ("front", *anchor),
        ("left", anchor.offset(FRAC_PI_2, 0.0)),
        ("back", anchor.offset(PI, 0.0)),
        ("right", anchor.offset(-FRAC_PI_2, 0.0)),
        ("above", anchor.offset(0.0, 0.6)),
    ]
}

/// Angle between a pose's viewing direction and a unit vector, radians.
pub fn angle_to(pose: &CameraPose, dir: V3) -> f64 {
    let d = pose.direction();
    let c = crate::math::dot(d, dir) / (norm(d) * norm(dir));
    libm::acos(c.clamp(-1.0, 1.0))
}
