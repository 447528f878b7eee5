//! 2D augmentations applied to renders before embedding, and the per-channel
//! normalization expected by the embedder.
//!
//! Both augmentation families are linear in the input pixels: each output
//! pixel is a bilinear combination of at most four input pixels. They are
//! stored as explicit resampling tables so the backward pass is the exact
//! adjoint.

use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::math::{floor, sqrt};

pub const CLIP_MEAN: [f64; 3] = [0.48145466, 0.4578275, 0.40821073];
pub const CLIP_STD: [f64; 3] = [0.26862954, 0.26130258, 0.27577711];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Augmentation redraws per iteration.
    pub n_aug: usize,
    /// Area of the local crop relative to the image.
    pub crop_area_fraction: f64,
    /// Maximum corner displacement as a fraction of the half side.
    pub perspective_distortion: f64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { n_aug: 1, crop_area_fraction: 0.10, perspective_distortion: 0.5, seed: 0 }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_aug == 0 {
            return Err(Error::InvalidArgument("n_aug must be at least 1".into()));
        }
        if !(self.crop_area_fraction > 0.0 && self.crop_area_fraction <= 1.0) {
            return Err(Error::InvalidArgument("crop_area_fraction must be in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.perspective_distortion) {
            return Err(Error::InvalidArgument("perspective_distortion must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Side length of a crop covering `fraction` of the area of a `size` side.
pub fn crop_side(size: usize, fraction: f64) -> usize {
    (floor(sqrt(fraction) * size as f64) as usize).clamp(1, size)
}

/// An axis-aligned crop window in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropWindow {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl CropWindow {
    pub fn contains(&self, px: usize, py: usize) -> bool {
        px >= self.x && px < self.x + self.width && py >= self.y && py < self.y + self.height
    }
}

/// Draws a crop whose center is uniform over the image; windows that would
/// leave the image are shifted inside it.
pub fn draw_crop(width: usize, height: usize, fraction: f64, rng: &mut crate::Rng) -> CropWindow {
    let cw = crop_side(width, fraction);
    let ch = crop_side(height, fraction);
    let place = |size: usize, side: usize, center: f64| -> usize {
        let start = libm::round(center - side as f64 / 2.0).max(0.0) as usize;
        start.min(size - side)
    };
    let cx: f64 = rng.random_range(0.0..width as f64);
    let cy: f64 = rng.random_range(0.0..height as f64);
    CropWindow { x: place(width, cw, cx), y: place(height, ch, cy), width: cw, height: ch }
}

/// A linear resampling table: output pixel `i` is `sum_k w_k * input[idx_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Resample {
    in_size: (usize, usize),
    out_size: (usize, usize),
    taps: Vec<[(u32, f64); 4]>,
}

impl Resample {
    /// Builds a table by mapping every output pixel center to a continuous
    /// source position, sampled bilinearly with edge replication inside
    /// `clip` (inclusive pixel bounds `x0, x1, y0, y1`).
    fn from_map(
        in_size: (usize, usize),
        out_size: (usize, usize),
        clip: (usize, usize, usize, usize),
        map: impl Fn(f64, f64) -> (f64, f64),
    ) -> Self {
        let (iw, _) = in_size;
        let (x_lo, x_hi, y_lo, y_hi) = clip;
        let mut taps = Vec::with_capacity(out_size.0 * out_size.1);
        for oy in 0..out_size.1 {
            for ox in 0..out_size.0 {
                let (sx, sy) = map(ox as f64 + 0.5, oy as f64 + 0.5);
                let fx = sx - 0.5;
                let fy = sy - 0.5;
                let (x0f, y0f) = (floor(fx), floor(fy));
                let (ax, ay) = if fx.is_finite() && fy.is_finite() { (fx - x0f, fy - y0f) } else { (0.0, 0.0) };
                let cx = |v: f64| (v.max(x_lo as f64).min(x_hi as f64)) as usize;
                let cy = |v: f64| (v.max(y_lo as f64).min(y_hi as f64)) as usize;
                let (xa, xb) = (cx(x0f), cx(x0f + 1.0));
                let (ya, yb) = (cy(y0f), cy(y0f + 1.0));
                let idx = |x: usize, y: usize| (y * iw + x) as u32;
                taps.push([
                    (idx(xa, ya), (1.0 - ax) * (1.0 - ay)),
                    (idx(xb, ya), ax * (1.0 - ay)),
                    (idx(xa, yb), (1.0 - ax) * ay),
                    (idx(xb, yb), ax * ay),
                ]);
            }
        }
        Self { in_size, out_size, taps }
    }

    pub fn apply(&self, img: &Image) -> Image {
        assert_eq!((img.width(), img.height()), self.in_size, "resample input size");
        let src = img.data();
        let mut out = Image::new(self.out_size.0, self.out_size.1);
        for (o, taps) in out.data_mut().chunks_exact_mut(3).zip(&self.taps) {
            for &(i, w) in taps {
                if w != 0.0 {
                    let i = i as usize * 3;
                    o[0] += w * src[i];
                    o[1] += w * src[i + 1];
                    o[2] += w * src[i + 2];
                }
            }
        }
        out
    }

    /// Adjoint of [`Resample::apply`].
    pub fn adjoint(&self, grad: &Image) -> Image {
        assert_eq!((grad.width(), grad.height()), self.out_size, "resample gradient size");
        let g = grad.data();
        let mut out = Image::new(self.in_size.0, self.in_size.1);
        let d = out.data_mut();
        for (o, taps) in g.chunks_exact(3).zip(&self.taps) {
            for &(i, w) in taps {
                if w != 0.0 {
                    let i = i as usize * 3;
                    d[i] += w * o[0];
                    d[i + 1] += w * o[1];
                    d[i + 2] += w * o[2];
                }
            }
        }
        out
    }
}

/// Random four-corner perspective warp. Each corner moves inwards by up to
/// `distortion` times the half side along each axis; the output pixel at a
/// moved corner samples the original corner.
pub fn perspective(width: usize, height: usize, distortion: f64, rng: &mut crate::Rng) -> Resample {
    let (w, h) = (width as f64, height as f64);
    let (dx, dy) = (distortion * w / 2.0, distortion * h / 2.0);
    let mut jitter = |m: f64| if m > 0.0 { rng.random_range(0.0..m) } else { 0.0 };
    let start = [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)];
    let end = [
        (jitter(dx), jitter(dy)),
        (w - jitter(dx), jitter(dy)),
        (w - jitter(dx), h - jitter(dy)),
        (jitter(dx), h - jitter(dy)),
    ];
    let hm = homography(&end, &start);
    Resample::from_map((width, height), (width, height), (0, width - 1, 0, height - 1), |x, y| {
        let z = hm[6] * x + hm[7] * y + 1.0;
        ((hm[0] * x + hm[1] * y + hm[2]) / z, (hm[3] * x + hm[4] * y + hm[5]) / z)
    })
}

/// Crops `window` and resizes it bilinearly back to the full image size.
pub fn crop_resize(width: usize, height: usize, window: CropWindow) -> Resample {
    let sx = window.width as f64 / width as f64;
    let sy = window.height as f64 / height as f64;
    let clip = (window.x, window.x + window.width - 1, window.y, window.y + window.height - 1);
    Resample::from_map((width, height), (width, height), clip, |x, y| {
        (window.x as f64 + x * sx, window.y as f64 + y * sy)
    })
}

/// Solves for the projective map (with `h33 = 1`) taking `from[i]` to `to[i]`.
fn homography(from: &[(f64, f64); 4], to: &[(f64, f64); 4]) -> [f64; 8] {
    let mut a = [[0.0f64; 9]; 8];
    for i in 0..4 {
        let (x, y) = from[i];
        let (u, v) = to[i];
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -x * u, -y * u, u];
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -x * v, -y * v, v];
    }
    for col in 0..8 {
        let pivot = (col..8)
            .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        for r in 0..8 {
            if r != col {
                let f = a[r][col] / p;
                if f != 0.0 {
                    for c in col..9 {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    core::array::from_fn(|i| a[i][8] / a[i][i])
}

/// A drawn augmentation: a chain of resampling stages.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Augmentation {
    stages: Vec<Resample>,
}

impl Augmentation {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn is_identity(&self) -> bool {
        self.stages.is_empty()
    }

    /// Global family: a random perspective warp.
    pub fn global(width: usize, height: usize, cfg: &AugmentConfig, rng: &mut crate::Rng) -> Self {
        Self { stages: alloc::vec![perspective(width, height, cfg.perspective_distortion, rng)] }
    }

    /// Local family: a random crop resized to full resolution, then a random
    /// perspective warp. Without `crop` only the warp is applied.
    pub fn local(width: usize, height: usize, cfg: &AugmentConfig, crop: bool, rng: &mut crate::Rng) -> Self {
        let mut stages = Vec::with_capacity(2);
        if crop {
            let window = draw_crop(width, height, cfg.crop_area_fraction, rng);
            stages.push(crop_resize(width, height, window));
        }
        stages.push(perspective(width, height, cfg.perspective_distortion, rng));
        Self { stages }
    }

    pub fn apply(&self, img: &Image) -> Image {
        let mut cur = img.clone();
        for s in &self.stages {
            cur = s.apply(&cur);
        }
        cur
    }

    pub fn backward(&self, grad: &Image) -> Image {
        let mut cur = grad.clone();
        for s in self.stages.iter().rev() {
            cur = s.adjoint(&cur);
        }
        cur
    }
}

/// Global augmentation of a square image.
pub fn psi_global(img: &Image, cfg: &AugmentConfig, rng: &mut crate::Rng) -> (Image, Augmentation) {
    let aug = Augmentation::global(img.width(), img.height(), cfg, rng);
    (aug.apply(img), aug)
}

/// Local augmentation of a square image.
pub fn psi_local(img: &Image, cfg: &AugmentConfig, rng: &mut crate::Rng) -> (Image, Augmentation) {
    let aug = Augmentation::local(img.width(), img.height(), cfg, true, rng);
    (aug.apply(img), aug)
}

/// `(pixel - mean) / std` per channel.
pub fn clip_normalize(img: &Image) -> Image {
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        for c in 0..3 {
            px[c] = (px[c] - CLIP_MEAN[c]) / CLIP_STD[c];
        }
    }
    out
}

pub fn clip_denormalize(img: &Image) -> Image {
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        for c in 0..3 {
            px[c] = px[c] * CLIP_STD[c] + CLIP_MEAN[c];
        }
    }
    out
}

/// Adjoint of [`clip_normalize`] (its Jacobian is diagonal).
pub fn clip_normalize_backward(grad: &Image) -> Image {
    let mut out = grad.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        for c in 0..3 {
            px[c] /= CLIP_STD[c];
        }
    }
    out
}
