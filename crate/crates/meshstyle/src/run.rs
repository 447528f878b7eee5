//! Run orchestration: content preparation, training with on-disk logging,
//! and result export.
//!
//! Layout of an output directory:
//!
//! ```text
//! manifest.json
//! loss.log            tab-separated, one line per iteration
//! checkpoints/        iter_NNNNN.ckpt, final.ckpt, diagnostic_NNNNN.ckpt
//! snapshots/          PNG renders
//! meshes/             stylized.obj/.ply, displaced_only.obj/.ply, content.obj
//! ```

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use meshstyle_core::camera::{sample_views, select_anchor, snapshot_poses};
use meshstyle_core::mesh::Normalized;
use meshstyle_core::render::render_mesh;
use meshstyle_core::{
    derive_seed, rng_from_seed, AnchorSelection, CameraPose, DirectStyle, Embedder, Embedding, IterationRecord, Mesh,
    MockEmbedder, Model, Objective, PreparedTarget, RenderConfig, StyleField, StyleMode, StyleModel, StyleTarget,
    TargetPart, TrainObserver, Trainer,
};
use serde_json::{json, Value};

use crate::checkpoint::{file_hash, mesh_hash, Checkpoint, CheckpointMeta};
use crate::config::{EmbedderChoice, RunConfig};
use crate::error::{Error, Result};
use crate::{clip, imageio, meshio};

/// The content mesh in the frame the model sees, plus the way back.
#[derive(Debug, Clone)]
pub struct Content {
    pub normalized: Normalized,
    /// Normalized and subdivided.
    pub mesh: Mesh,
    pub subdivisions: usize,
    pub hash: String,
}

impl Content {
    pub fn prepare(source: &Mesh, subdivisions: usize) -> Self {
        let normalized = source.normalize_to_unit_box();
        let mut mesh = normalized.mesh.clone();
        for _ in 0..subdivisions {
            mesh = mesh.subdivide_barycentric();
        }
        let hash = mesh_hash(&mesh);
        Self { normalized, mesh, subdivisions, hash }
    }

    /// Moves a mesh in the normalized frame back to source coordinates.
    pub fn restore(&self, mesh: &Mesh) -> Result<Mesh> {
        let out = Mesh::new(self.normalized.restore(mesh.vertices()), mesh.faces().to_vec())?;
        Ok(match mesh.colors() {
            Some(c) => out.with_colors(c.to_vec())?,
            None => out,
        })
    }
}

/// Target sources as given on the command line.
#[derive(Debug, Clone, Default)]
pub struct TargetSources {
    pub prompts: Vec<String>,
    pub images: Vec<PathBuf>,
    pub meshes: Vec<PathBuf>,
}

impl TargetSources {
    pub fn is_empty(&self) -> bool {
        self.prompts.is_empty() && self.images.is_empty() && self.meshes.is_empty()
    }

    pub fn load(&self) -> Result<StyleTarget> {
        if self.is_empty() {
            return Err(Error::Usage("at least one of --prompt, --target-image or --target-mesh is required".into()));
        }
        let mut parts = Vec::new();
        for p in &self.prompts {
            if p.trim().is_empty() {
                return Err(Error::Usage("empty prompt".into()));
            }
            parts.push(TargetPart::Text(p.clone()));
        }
        for path in &self.images {
            parts.push(TargetPart::Image(imageio::load_target_image(path)?));
        }
        for path in &self.meshes {
            parts.push(TargetPart::Mesh(meshio::load_mesh(path)?));
        }
        Ok(StyleTarget::new(parts)?)
    }

    fn describe(&self) -> Result<Value> {
        let hashed = |paths: &[PathBuf]| -> Result<Vec<Value>> {
            paths.iter().map(|p| Ok(json!({ "path": p, "sha256": file_hash(p)? }))).collect()
        };
        Ok(json!({
            "prompts": self.prompts,
            "images": hashed(&self.images)?,
            "meshes": hashed(&self.meshes)?,
        }))
    }
}

/// Builds the configured embedder; the real one goes through capability
/// discovery.
pub fn make_embedder(cfg: &RunConfig) -> Result<Box<dyn Embedder>> {
    match cfg.embedder {
        EmbedderChoice::Mock => Ok(Box::new(MockEmbedder::new(cfg.embedder_seed))),
        EmbedderChoice::Real => clip::discover(&cfg.clip_model, cfg.clip_weights.as_deref()),
    }
}

/// A freshly initialized model for the content mesh.
pub fn fresh_model(cfg: &RunConfig, content: &Content) -> Result<Model> {
    Ok(if cfg.direct {
        Model::Direct(DirectStyle::new(content.mesh.vertex_count()))
    } else {
        Model::Field(StyleField::with_architecture(cfg.train.encoding.clone(), cfg.architecture)?)
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Subdirectories of a run.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
    pub checkpoints: PathBuf,
    pub snapshots: PathBuf,
    pub meshes: PathBuf,
}

impl Layout {
    pub fn create(root: &Path) -> Result<Self> {
        let layout = Self {
            root: root.to_path_buf(),
            checkpoints: root.join("checkpoints"),
            snapshots: root.join("snapshots"),
            meshes: root.join("meshes"),
        };
        for d in [&layout.root, &layout.checkpoints, &layout.snapshots, &layout.meshes] {
            create_dir(d)?;
        }
        Ok(layout)
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn loss_log(&self) -> PathBuf {
        self.root.join("loss.log")
    }
}

/// Everything [`export_results`] needs besides the model.
#[derive(Debug, Clone)]
pub struct ExportSettings {
    pub mode: StyleMode,
    pub anchor: CameraPose,
    /// Render settings for snapshots; the size is taken from here.
    pub render: RenderConfig,
    pub iteration: usize,
}

/// Writes the stylized mesh (with colors), the displacement-only mesh
/// (gray), the content mesh, a final checkpoint and snapshots from preset
/// offsets around the anchor. Meshes are written in source coordinates.
/// Returns the written paths.
pub fn export_results(model: &Model, content: &Content, settings: &ExportSettings, layout: &Layout) -> Result<Vec<PathBuf>> {
    let style = settings.mode.restrict(&content.mesh, model.evaluate(content.mesh.vertices())?);
    let stylized = content.mesh.apply_style(&style, true)?;
    let displaced = content.mesh.apply_style(&style, false)?;
    let mut written = Vec::new();

    let out = content.restore(&stylized)?;
    let p = layout.meshes.join("stylized.obj");
    meshio::write_obj(&out, &p)?;
    written.push(p);
    let p = layout.meshes.join("stylized.ply");
    meshio::write_ply(&out, &p)?;
    written.push(p);
    let out = content.restore(&displaced)?;
    let p = layout.meshes.join("displaced_only.obj");
    meshio::write_obj(&out, &p)?;
    written.push(p);
    let p = layout.meshes.join("displaced_only.ply");
    meshio::write_ply(&out, &p)?;
    written.push(p);
    let p = layout.meshes.join("content.obj");
    meshio::write_obj(&content.restore(&content.mesh)?, &p)?;
    written.push(p);

    let ckpt = Checkpoint::new(model.clone(), meta(content, settings.mode, settings.iteration, false, Some(settings.anchor)));
    let p = layout.checkpoints.join("final.ckpt");
    ckpt.save(&p)?;
    written.push(p);

    written.extend(write_snapshots(&stylized, &displaced, &settings.anchor, &settings.render, &layout.snapshots, "final")?);
    Ok(written)
}

/// Renders `stylized` from every preset pose and `displaced` from the anchor.
pub fn write_snapshots(
    stylized: &Mesh,
    displaced: &Mesh,
    anchor: &CameraPose,
    render: &RenderConfig,
    dir: &Path,
    prefix: &str,
) -> Result<Vec<PathBuf>> {
    let bg = render.background.neutral();
    let mut written = Vec::new();
    for (name, pose) in snapshot_poses(anchor) {
        let p = dir.join(format!("{prefix}_{name}.png"));
        imageio::write_png(&render_mesh(stylized, &pose, render, bg).image, &p)?;
        written.push(p);
    }
    let p = dir.join(format!("{prefix}_displaced_front.png"));
    imageio::write_png(&render_mesh(displaced, anchor, render, bg).image, &p)?;
    written.push(p);
    Ok(written)
}

fn meta(content: &Content, mode: StyleMode, iteration: usize, diagnostic: bool, anchor: Option<CameraPose>) -> CheckpointMeta {
    CheckpointMeta {
        mesh_hash: content.hash.clone(),
        vertex_count: content.mesh.vertex_count(),
        subdivisions: content.subdivisions,
        mode,
        iteration,
        diagnostic,
        anchor,
    }
}

pub fn snapshot_render(cfg: &RunConfig) -> RenderConfig {
    let mut r = cfg.train.render;
    r.width = cfg.snapshot_width;
    r.height = cfg.snapshot_height;
    r
}

/// Views at which final scores are reported; independent of training draws.
pub fn evaluation_views(cfg: &RunConfig, anchor: &CameraPose) -> Vec<CameraPose> {
    let mut rng = rng_from_seed(derive_seed(cfg.seed, 4));
    sample_views(anchor, &cfg.train.views, &mut rng)
}

pub fn score_model<E: Embedder + ?Sized>(
    cfg: &RunConfig,
    embedder: &E,
    content: &Content,
    target: &PreparedTarget,
    model: &Model,
    anchor: &CameraPose,
) -> Result<f64> {
    let views = evaluation_views(cfg, anchor);
    let targets: Vec<Embedding> = target.embeddings(&views, embedder, &cfg.train.render)?;
    let objective =
        Objective { embedder, render: &cfg.train.render, augment: &cfg.train.augment, options: cfg.train.options };
    Ok(objective.score(model, &content.mesh, &targets, &views)?)
}

pub fn anchor_json(a: &AnchorSelection) -> Value {
    json!({
        "pose": a.pose,
        "index": a.index,
        "score": a.score,
        "grid": a.grid.iter().map(|(p, s)| json!([p.azimuth, p.elevation, s])).collect::<Vec<_>>(),
    })
}

pub const LOSS_LOG_HEADER: &str = "iteration\tlr\ttotal\tsim_full\tsim_local\tsim_displ";

fn loss_line(r: &IterationRecord) -> String {
    let displ = r.loss.sim_displ().map_or_else(|| "-".to_string(), |d| d.to_string());
    format!("{}\t{}\t{}\t{}\t{}\t{}", r.iteration, r.lr, r.loss.total, r.loss.sim_full(), r.loss.sim_local(), displ)
}

struct RunObserver<'a> {
    log: BufWriter<File>,
    log_path: PathBuf,
    layout: &'a Layout,
    content: &'a Content,
    mode: StyleMode,
    snapshot: RenderConfig,
    anchor: Option<CameraPose>,
    written: Vec<PathBuf>,
}

impl RunObserver<'_> {
    fn core_err(e: Error) -> meshstyle_core::Error {
        meshstyle_core::Error::Observer(e.to_string())
    }
}

impl TrainObserver<Model> for RunObserver<'_> {
    fn on_start(&mut self, anchor: &AnchorSelection) -> meshstyle_core::Result<()> {
        self.anchor = Some(anchor.pose);
        eprintln!(
            "anchor: grid point {} (azimuth {:.4}, elevation {:.4}), score {:.6}",
            anchor.index, anchor.pose.azimuth, anchor.pose.elevation, anchor.score
        );
        Ok(())
    }

    fn on_iteration(&mut self, record: &IterationRecord, _model: &Model) -> meshstyle_core::Result<()> {
        writeln!(self.log, "{}", loss_line(record))
            .map_err(|e| Self::core_err(Error::io(&self.log_path, e)))?;
        if record.iteration % 10 == 0 {
            eprintln!("iter {:5}  lr {:.3e}  total {:.6}", record.iteration, record.lr, record.loss.total);
        }
        Ok(())
    }

    fn on_checkpoint(&mut self, iteration: usize, model: &Model, diagnostic: bool) -> meshstyle_core::Result<()> {
        let name = if diagnostic { format!("diagnostic_{iteration:05}.ckpt") } else { format!("iter_{iteration:05}.ckpt") };
        let path = self.layout.checkpoints.join(name);
        Checkpoint::new(model.clone(), meta(self.content, self.mode, iteration, diagnostic, self.anchor))
            .save(&path)
            .map_err(Self::core_err)?;
        self.log.flush().map_err(|e| Self::core_err(Error::io(&self.log_path, e)))?;
        self.written.push(path);
        Ok(())
    }

    fn on_snapshot(&mut self, iteration: usize, model: &Model, anchor: &AnchorSelection) -> meshstyle_core::Result<()> {
        let run = || -> Result<PathBuf> {
            let style = self.mode.restrict(&self.content.mesh, model.evaluate(self.content.mesh.vertices())?);
            let stylized = self.content.mesh.apply_style(&style, true)?;
            let path = self.layout.snapshots.join(format!("iter_{iteration:05}_front.png"));
            let bg = self.snapshot.background.neutral();
            imageio::write_png(&render_mesh(&stylized, &anchor.pose, &self.snapshot, bg).image, &path)?;
            Ok(path)
        };
        let path = run().map_err(Self::core_err)?;
        self.written.push(path);
        Ok(())
    }
}

/// A full stylization request.
#[derive(Debug, Clone)]
pub struct StylizeRequest {
    pub mesh: PathBuf,
    pub targets: TargetSources,
    pub out: PathBuf,
    pub config: RunConfig,
}

#[derive(Debug, Clone)]
pub struct StylizeOutcome {
    pub artifacts: Vec<PathBuf>,
    pub anchor: AnchorSelection,
    pub final_score: f64,
}

struct Manifest {
    path: PathBuf,
    value: Value,
}

impl Manifest {
    fn write(&self) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.value).expect("manifest serializes");
        fs::write(&self.path, text + "\n").map_err(|e| Error::io(&self.path, e))
    }

    fn set(&mut self, key: &str, v: Value) {
        self.value[key] = v;
    }

    fn fail(&mut self, err: &Error) -> Result<()> {
        self.set("status", json!("failed"));
        self.set("error", json!(err.to_string()));
        self.write()
    }
}

/// Normalize, optionally subdivide, train and export. The manifest is
/// written before the embedder is constructed and updated on failure.
pub fn stylize(req: &StylizeRequest) -> Result<StylizeOutcome> {
    let started = Instant::now();
    let cfg = &req.config;
    if req.targets.is_empty() {
        return Err(Error::Usage("at least one of --prompt, --target-image or --target-mesh is required".into()));
    }
    let source = meshio::load_mesh(&req.mesh)?;
    let layout = Layout::create(&req.out)?;
    let content = Content::prepare(&source, cfg.subdivide);

    let mut manifest = Manifest {
        path: layout.manifest(),
        value: json!({
            "status": "started",
            "version": env!("CARGO_PKG_VERSION"),
            "config": cfg,
            "inputs": {
                "mesh": { "path": req.mesh, "sha256": file_hash(&req.mesh)? },
                "targets": req.targets.describe()?,
            },
            "content": {
                "mesh_hash": content.hash,
                "vertices": content.mesh.vertex_count(),
                "faces": content.mesh.face_count(),
                "subdivisions": content.subdivisions,
                "center": content.normalized.center,
                "scale": content.normalized.scale,
            },
            "embedder": { "requested": cfg.embedder, "clip_model": cfg.clip_model, "seed": cfg.embedder_seed },
            "loss_log": "loss.log",
        }),
    };
    manifest.write()?;
    let mut artifacts = vec![manifest.path.clone()];

    let result = (|| -> Result<StylizeOutcome> {
        let embedder = make_embedder(cfg)?;
        manifest.value["embedder"]["identity"] = json!(embedder.identity());
        manifest.write()?;
        let target = PreparedTarget::new(&req.targets.load()?, embedder.as_ref())?;
        let mut model = fresh_model(cfg, &content)?;

        let log_path = layout.loss_log();
        let file = File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
        let mut log = BufWriter::new(file);
        writeln!(log, "{LOSS_LOG_HEADER}").map_err(|e| Error::io(&log_path, e))?;
        let mut observer = RunObserver {
            log,
            log_path: log_path.clone(),
            layout: &layout,
            content: &content,
            mode: cfg.train.options.mode,
            snapshot: snapshot_render(cfg),
            anchor: None,
            written: Vec::new(),
        };
        let trainer = Trainer::new(&content.mesh, &target, embedder.as_ref(), &cfg.train);
        let report = trainer.run(&mut model, &mut observer);
        observer.log.flush().map_err(|e| Error::io(&log_path, e))?;
        artifacts.push(log_path);
        artifacts.append(&mut observer.written);
        let report = report?;

        let settings = ExportSettings {
            mode: cfg.train.options.mode,
            anchor: report.anchor.pose,
            render: snapshot_render(cfg),
            iteration: cfg.train.iterations,
        };
        artifacts.extend(export_results(&model, &content, &settings, &layout)?);
        let final_score = score_model(cfg, embedder.as_ref(), &content, &target, &model, &report.anchor.pose)?;
        manifest.set("anchor", anchor_json(&report.anchor));
        manifest.set(
            "result",
            json!({
                "iterations": report.history.len(),
                "final_total": report.history.last().map(|r| r.loss.total),
                "score": final_score,
                "stylized_mesh_hash": file_hash(&layout.meshes.join("stylized.obj"))?,
            }),
        );
        Ok(StylizeOutcome { artifacts: Vec::new(), anchor: report.anchor, final_score })
    })();

    match result {
        Ok(mut outcome) => {
            manifest.set("status", json!("complete"));
            manifest.set("wall_clock_seconds", json!(started.elapsed().as_secs_f64()));
            manifest.set(
                "artifacts",
                json!(artifacts.iter().map(|p| p.strip_prefix(&layout.root).unwrap_or(p)).collect::<Vec<_>>()),
            );
            manifest.write()?;
            outcome.artifacts = artifacts;
            Ok(outcome)
        }
        Err(e) => {
            manifest.set("wall_clock_seconds", json!(started.elapsed().as_secs_f64()));
            manifest.fail(&e)?;
            Err(e)
        }
    }
}

/// Anchor selection alone.
pub fn anchor_for<E: Embedder + ?Sized>(
    cfg: &RunConfig,
    embedder: &E,
    content: &Content,
    target: &PreparedTarget,
) -> Result<AnchorSelection> {
    Ok(select_anchor(&content.mesh, target, embedder, &cfg.train.render, &cfg.train.views)?)
}

/// Stylized meshes (in source coordinates) interpolated between two
/// checkpoints at `alpha = k / (frames - 1)`.
pub fn morph(a: &Checkpoint, b: &Checkpoint, content: &Content, frames: usize) -> Result<Vec<Mesh>> {
    if frames < 2 {
        return Err(Error::Usage("--frames must be at least 2".into()));
    }
    for c in [a, b] {
        if c.header.mesh_hash != content.hash {
            return Err(Error::Consistency(format!(
                "checkpoint mesh hash {} does not match the content mesh {}",
                c.header.mesh_hash, content.hash
            )));
        }
    }
    let sa = a.header.mode.restrict(&content.mesh, a.model.evaluate(content.mesh.vertices())?);
    let sb = b.header.mode.restrict(&content.mesh, b.model.evaluate(content.mesh.vertices())?);
    (0..frames)
        .map(|k| {
            let alpha = if k + 1 == frames { 1.0 } else { k as f64 / (frames - 1) as f64 };
            let style = meshstyle_core::mesh::morph_styles(&sa, &sb, alpha)?;
            content.restore(&content.mesh.apply_style(&style, true)?)
        })
        .collect()
}
