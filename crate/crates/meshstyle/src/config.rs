//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment. Unknown keys are errors.
//! Command-line flags are applied as further `key = value` pairs after the
//! file, so they win.

use std::fs;
use std::path::{Path, PathBuf};

use meshstyle_core::{Architecture, Axis, Background, StyleMode, TrainConfig};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderChoice {
    Mock,
    Real,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub train: TrainConfig,
    pub architecture: Architecture,
    /// Optimize per-vertex values instead of a network.
    pub direct: bool,
    pub subdivide: usize,
    pub embedder: EmbedderChoice,
    pub embedder_seed: u64,
    /// Pretrained image/text encoder variant for the real embedder.
    pub clip_model: String,
    pub clip_weights: Option<PathBuf>,
    pub snapshot_width: usize,
    pub snapshot_height: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            train: TrainConfig::default(),
            architecture: Architecture::default(),
            direct: false,
            subdivide: 0,
            embedder: EmbedderChoice::Mock,
            embedder_seed: 0,
            clip_model: "ViT-B/32".into(),
            clip_weights: None,
            snapshot_width: 512,
            snapshot_height: 512,
        }
    }
}

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "seed",
    "iterations",
    "lr",
    "lr_decay",
    "lr_decay_every",
    "n_theta",
    "n_aug",
    "jitter_sd",
    "anchor_grid_count",
    "distance_factor",
    "fov_y_deg",
    "sigma",
    "num_frequencies",
    "fourier",
    "symmetry",
    "width",
    "trunk_depth",
    "branch_depth",
    "resolution",
    "background",
    "ambient",
    "coverage_sharpness",
    "depth_softness",
    "crop_area_fraction",
    "perspective_distortion",
    "augment",
    "crop",
    "displ_term",
    "mode",
    "direct",
    "checkpoint_every",
    "snapshot_every",
    "embedder",
    "embedder_seed",
    "clip_model",
    "clip_weights",
    "subdivide",
    "snapshot_width",
    "snapshot_height",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got '{v}'"))),
    }
}

pub fn parse_symmetry(v: &str) -> Result<Vec<Axis>> {
    let mut axes = Vec::new();
    for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let axis = match part.to_ascii_lowercase().as_str() {
            "x" => Axis::X,
            "y" => Axis::Y,
            "z" => Axis::Z,
            "none" => continue,
            other => return Err(Error::Config(format!("symmetry: unknown axis '{other}'"))),
        };
        if !axes.contains(&axis) {
            axes.push(axis);
        }
    }
    Ok(axes)
}

fn parse_background(v: &str) -> Result<Background> {
    let bad = || Error::Config(format!("background: expected 'random:LOW:HIGH', a gray level or 'R,G,B', got '{v}'"));
    if let Some(rest) = v.strip_prefix("random:") {
        let (lo, hi) = rest.split_once(':').ok_or_else(bad)?;
        let (low, high): (f64, f64) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
        if !(0.0..=1.0).contains(&low) || !(low..=1.0).contains(&high) {
            return Err(bad());
        }
        return Ok(Background::RandomGray { low, high });
    }
    let parts: Vec<f64> = v.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
    match parts.as_slice() {
        [g] => Ok(Background::Constant([*g; 3])),
        [r, g, b] => Ok(Background::Constant([*r, *g, *b])),
        _ => Err(bad()),
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let t = &mut self.train;
        match key {
            "seed" => self.seed = num(key, v)?,
            "iterations" => t.iterations = num(key, v)?,
            "lr" => t.schedule.initial = num(key, v)?,
            "lr_decay" => t.schedule.factor = num(key, v)?,
            "lr_decay_every" => t.schedule.every = num(key, v)?,
            "n_theta" => t.views.n_theta = num(key, v)?,
            "n_aug" => t.augment.n_aug = num(key, v)?,
            "jitter_sd" => t.views.jitter_sd = num(key, v)?,
            "anchor_grid_count" => t.views.anchor_grid_count = num(key, v)?,
            "distance_factor" => t.views.distance_factor = num(key, v)?,
            "fov_y_deg" => t.views.fov_y = num::<f64>(key, v)?.to_radians(),
            "sigma" => t.encoding.sigma = num(key, v)?,
            "num_frequencies" => t.encoding.num_frequencies = num(key, v)?,
            "fourier" => t.encoding.fourier = flag(key, v)?,
            "symmetry" => t.encoding.symmetry = parse_symmetry(v)?,
            "width" => self.architecture.width = num(key, v)?,
            "trunk_depth" => self.architecture.trunk_depth = num(key, v)?,
            "branch_depth" => self.architecture.branch_depth = num(key, v)?,
            "resolution" => {
                let r = num(key, v)?;
                t.render.width = r;
                t.render.height = r;
            }
            "background" => t.render.background = parse_background(v)?,
            "ambient" => t.render.lighting.ambient = num(key, v)?,
            "coverage_sharpness" => t.render.coverage_sharpness = num(key, v)?,
            "depth_softness" => t.render.depth_softness = num(key, v)?,
            "crop_area_fraction" => t.augment.crop_area_fraction = num(key, v)?,
            "perspective_distortion" => t.augment.perspective_distortion = num(key, v)?,
            "augment" => t.options.augment = flag(key, v)?,
            "crop" => t.options.crop = flag(key, v)?,
            "displ_term" => t.options.displ_term = flag(key, v)?,
            "mode" => {
                t.options.mode = match v.to_ascii_lowercase().as_str() {
                    "full" => StyleMode::Full,
                    "geometry" => StyleMode::GeometryOnly,
                    "color" => StyleMode::ColorOnly,
                    _ => return Err(Error::Config(format!("mode: expected full, geometry or color, got '{v}'"))),
                }
            }
            "direct" => self.direct = flag(key, v)?,
            "checkpoint_every" => t.checkpoint_every = num(key, v)?,
            "snapshot_every" => t.snapshot_every = num(key, v)?,
            "embedder" => {
                self.embedder = match v.to_ascii_lowercase().as_str() {
                    "mock" => EmbedderChoice::Mock,
                    "real" | "clip" => EmbedderChoice::Real,
                    _ => return Err(Error::Config(format!("embedder: expected mock or real, got '{v}'"))),
                }
            }
            "embedder_seed" => self.embedder_seed = num(key, v)?,
            "clip_model" => self.clip_model = v.to_string(),
            "clip_weights" => self.clip_weights = (!v.is_empty()).then(|| PathBuf::from(v)),
            "subdivide" => self.subdivide = num(key, v)?,
            "snapshot_width" => self.snapshot_width = num(key, v)?,
            "snapshot_height" => self.snapshot_height = num(key, v)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines.
    pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }

    pub fn apply(&mut self, pairs: &[(String, String)]) -> Result<()> {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Defaults, then the file (if any), then the overrides.
    pub fn resolve(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            cfg.apply(&Self::parse_pairs(&text)?)?;
        }
        cfg.apply(overrides)?;
        cfg.finish()?;
        Ok(cfg)
    }

    /// Derives stream seeds and validates.
    pub fn finish(&mut self) -> Result<()> {
        self.train = self.train.clone().with_seed(self.seed);
        self.train.validate()?;
        if self.architecture.width == 0 || self.architecture.trunk_depth == 0 || self.architecture.branch_depth == 0 {
            return Err(Error::Config("network sizes must be at least 1".into()));
        }
        if self.snapshot_width < 32 || self.snapshot_height < 32 {
            return Err(Error::Config("snapshot size must be at least 32 pixels".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_key_is_accepted() {
        let samples = |k: &str| match k {
            "fourier" | "augment" | "crop" | "displ_term" | "direct" => "true",
            "symmetry" => "x,z",
            "background" => "random:0.4:0.8",
            "mode" => "geometry",
            "embedder" => "mock",
            "clip_model" => "ViT-B/16",
            "clip_weights" => "/tmp/w",
            "lr" | "lr_decay" | "jitter_sd" | "distance_factor" | "sigma" | "ambient" | "coverage_sharpness" | "depth_softness" | "crop_area_fraction" | "perspective_distortion" => "0.5",
            "fov_y_deg" => "60",
            _ => "64",
        };
        let mut cfg = RunConfig::default();
        for k in KEYS {
            cfg.set(k, samples(k)).unwrap_or_else(|e| panic!("{k}: {e}"));
        }
    }

    #[test]
    fn unknown_keys_fail() {
        assert!(matches!(RunConfig::default().set("learning_rate", "1"), Err(Error::Config(_))));
    }

    #[test]
    fn overrides_win() {
        let pairs = RunConfig::parse_pairs("# comment\niterations = 10\nsymmetry = z\n\nlr=0.01 # trailing\n").unwrap();
        let mut cfg = RunConfig::default();
        cfg.apply(&pairs).unwrap();
        cfg.apply(&[("iterations".into(), "3".into())]).unwrap();
        assert_eq!(cfg.train.iterations, 3);
        assert_eq!(cfg.train.schedule.initial, 0.01);
        assert_eq!(cfg.train.encoding.symmetry, vec![Axis::Z]);
    }

    #[test]
    fn backgrounds_parse() {
        assert_eq!(parse_background("0.5").unwrap(), Background::Constant([0.5; 3]));
        assert_eq!(parse_background("1,0,0").unwrap(), Background::Constant([1.0, 0.0, 0.0]));
        assert!(parse_background("random:0.9:0.1").is_err());
    }
}
