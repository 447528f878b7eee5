//! The optimization loop.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::augment::AugmentConfig;
use crate::camera::{sample_views, select_anchor, AnchorSelection, ViewSamplerConfig};
use crate::embedding::{Embedder, PreparedTarget};
use crate::error::{Error, Result};
use crate::field::{EncodingConfig, StyleModel};
use crate::mesh::Mesh;
use crate::objective::{LossBreakdown, LossOptions, Objective};
use crate::optim::{Adam, StepDecay};
use crate::render::RenderConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub schedule: StepDecay,
    pub iterations: usize,
    pub views: ViewSamplerConfig,
    pub augment: AugmentConfig,
    pub render: RenderConfig,
    pub encoding: EncodingConfig,
    pub options: LossOptions,
    /// Checkpoint cadence in iterations; 0 disables periodic checkpoints.
    pub checkpoint_every: usize,
    /// Snapshot cadence in iterations; 0 disables periodic snapshots.
    pub snapshot_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            schedule: StepDecay::default(),
            iterations: 1500,
            views: ViewSamplerConfig::default(),
            augment: AugmentConfig::default(),
            render: RenderConfig::default(),
            encoding: EncodingConfig::default(),
            options: LossOptions::default(),
            checkpoint_every: 100,
            snapshot_every: 0,
        }
    }
}

impl TrainConfig {
    /// Derives the seeds of every random stream from one run seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.encoding.seed = crate::derive_seed(seed, 1);
        self.views.seed = crate::derive_seed(seed, 2);
        self.augment.seed = crate::derive_seed(seed, 3);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.views.validate()?;
        self.augment.validate()?;
        self.render.validate()?;
        self.encoding.validate()
    }
}

/// Loss record of one optimization step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lr: f64,
    pub loss: LossBreakdown,
}

/// Hooks called by [`Trainer::run`]. Errors abort the run.
pub trait TrainObserver<M> {
    fn on_start(&mut self, _anchor: &AnchorSelection) -> Result<()> {
        Ok(())
    }

    fn on_iteration(&mut self, _record: &IterationRecord, _model: &M) -> Result<()> {
        Ok(())
    }

    /// `diagnostic` is set for the checkpoint written before a non-finite abort.
    fn on_checkpoint(&mut self, _iteration: usize, _model: &M, _diagnostic: bool) -> Result<()> {
        Ok(())
    }

    fn on_snapshot(&mut self, _iteration: usize, _model: &M, _anchor: &AnchorSelection) -> Result<()> {
        Ok(())
    }
}

impl<M> TrainObserver<M> for () {}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub anchor: AnchorSelection,
    pub history: Vec<IterationRecord>,
}

/// Optimizes a style model over a fixed content mesh.
pub struct Trainer<'a, E: Embedder + ?Sized> {
    pub mesh: &'a Mesh,
    pub target: &'a PreparedTarget,
    pub embedder: &'a E,
    pub config: &'a TrainConfig,
}

impl<'a, E: Embedder + ?Sized> Trainer<'a, E> {
    pub fn new(mesh: &'a Mesh, target: &'a PreparedTarget, embedder: &'a E, config: &'a TrainConfig) -> Self {
        Self { mesh, target, embedder, config }
    }

    /// Picks the anchor view once, then runs `iterations` steps of
    /// view sampling, objective evaluation and an Adam step.
    pub fn run<M: StyleModel>(&self, model: &mut M, observer: &mut dyn TrainObserver<M>) -> Result<TrainReport> {
        let cfg = self.config;
        cfg.validate()?;
        if self.target.is_empty() {
            return Err(Error::InvalidArgument("style target has no parts".into()));
        }
        let anchor = select_anchor(self.mesh, self.target, self.embedder, &cfg.render, &cfg.views)?;
        observer.on_start(&anchor)?;

        let objective = Objective { embedder: self.embedder, render: &cfg.render, augment: &cfg.augment, options: cfg.options };
        let mut view_rng = crate::rng_from_seed(crate::derive_seed(cfg.views.seed, 0x51E));
        let mut aug_rng = crate::rng_from_seed(cfg.augment.seed);
        let mut adam = Adam::new(model.params().len());
        let mut history = Vec::with_capacity(cfg.iterations);

        for i in 0..cfg.iterations {
            let views = sample_views(&anchor.pose, &cfg.views, &mut view_rng);
            let targets = self.target.embeddings(&views, self.embedder, &cfg.render)?;
            let eval = objective.evaluate(model, self.mesh, &targets, &views, &mut aug_rng)?;
            if !eval.breakdown.total.is_finite() || eval.gradient.iter().any(|g| !g.is_finite()) {
                observer.on_checkpoint(i, model, true)?;
                return Err(Error::NonFinite { iteration: i });
            }
            let lr = cfg.schedule.lr(i);
            let descent: Vec<f64> = eval.gradient.iter().map(|g| -g).collect();
            adam.step(model.params_mut(), &descent, lr)?;
            let record = IterationRecord { iteration: i, lr, loss: eval.breakdown };
            observer.on_iteration(&record, model)?;
            history.push(record);
            let done = i + 1;
            if cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0 {
                observer.on_checkpoint(done, model, false)?;
            }
            if cfg.snapshot_every > 0 && done % cfg.snapshot_every == 0 {
                observer.on_snapshot(done, model, &anchor)?;
            }
        }
        Ok(TrainReport { anchor, history })
    }
}
