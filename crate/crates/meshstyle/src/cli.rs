//! Command-line interface. Artifact paths go to stdout, progress to stderr.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use meshstyle_core::{CameraPose, PreparedTarget};
use serde_json::json;

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::error::{Error, Result, EXIT_OK};
use crate::meshio;
use crate::run::{self, Content, ExportSettings, Layout, StylizeRequest, TargetSources};

#[derive(Debug, Parser)]
#[command(name = "meshstyle", version, about = "Stylize a mesh with colors and normal displacements from a text, image or mesh target")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a style for a mesh and export the results.
    Stylize(StylizeArgs),
    /// Print the anchor view chosen for a mesh and target.
    SelectAnchor(AnchorArgs),
    /// Interpolate between two styles of the same mesh.
    Morph(MorphArgs),
    /// Apply barycentric subdivision.
    Subdivide(SubdivideArgs),
    /// Similarity of a (possibly fresh) style to a target.
    Score(ScoreArgs),
    /// Render snapshots of a checkpoint.
    ExportSnapshots(SnapshotArgs),
}

#[derive(Debug, Args, Default)]
pub struct TargetArgs {
    /// Text prompt (repeatable).
    #[arg(long = "prompt")]
    pub prompts: Vec<String>,
    /// Target image, PNG or JPEG (repeatable).
    #[arg(long = "target-image")]
    pub images: Vec<PathBuf>,
    /// Target mesh (repeatable).
    #[arg(long = "target-mesh")]
    pub meshes: Vec<PathBuf>,
}

impl TargetArgs {
    fn sources(&self) -> TargetSources {
        TargetSources { prompts: self.prompts.clone(), images: self.images.clone(), meshes: self.meshes.clone() }
    }
}

/// Settings shared by commands that build a run configuration.
#[derive(Debug, Args, Default)]
pub struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. `--set sigma=8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// `mock` or `real`.
    #[arg(long)]
    pub embedder: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub subdivide: Option<usize>,
    /// Comma-separated axes folded to their absolute value, e.g. `z`.
    #[arg(long)]
    pub symmetry: Option<String>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub clip_model: Option<String>,
    #[arg(long)]
    pub clip_weights: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StylizeArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[command(flatten)]
    pub targets: TargetArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub n_views: Option<usize>,
    #[arg(long)]
    pub n_aug: Option<usize>,
    /// `full`, `geometry` or `color`.
    #[arg(long)]
    pub mode: Option<String>,
    /// Feed raw coordinates to the network.
    #[arg(long)]
    pub no_ffn: bool,
    /// Skip the perspective and crop augmentations.
    #[arg(long)]
    pub no_aug: bool,
    /// Use whole-image views for the local terms.
    #[arg(long)]
    pub no_crop: bool,
    /// Drop the displacement-only term.
    #[arg(long)]
    pub no_displ_term: bool,
    /// Optimize per-vertex values directly instead of a network.
    #[arg(long)]
    pub direct_optim: bool,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnchorArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[command(flatten)]
    pub targets: TargetArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Write the result as JSON here instead of printing it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MorphArgs {
    /// Source mesh both checkpoints were trained on.
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub frames: usize,
    /// Output directory for frame_NNN.obj/.ply.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SubdivideArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub times: usize,
    /// `.obj` or `.ply`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[command(flatten)]
    pub targets: TargetArgs,
    /// Style to score; a fresh model when absent.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct SnapshotArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

fn kv(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}

impl ConfigArgs {
    fn pairs(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for s in &self.set {
            let (k, v) = s.split_once('=').ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got '{s}'")))?;
            out.push(kv(k.trim(), v.trim()));
        }
        if let Some(v) = &self.embedder {
            out.push(kv("embedder", v));
        }
        if let Some(v) = self.seed {
            out.push(kv("seed", v));
        }
        if let Some(v) = self.subdivide {
            out.push(kv("subdivide", v));
        }
        if let Some(v) = &self.symmetry {
            out.push(kv("symmetry", v));
        }
        if let Some(v) = self.resolution {
            out.push(kv("resolution", v));
        }
        if let Some(v) = &self.clip_model {
            out.push(kv("clip_model", v));
        }
        if let Some(v) = &self.clip_weights {
            out.push(kv("clip_weights", v.display()));
        }
        Ok(out)
    }

    fn resolve(&self, extra: Vec<(String, String)>) -> Result<RunConfig> {
        let mut pairs = self.pairs()?;
        pairs.extend(extra);
        RunConfig::resolve(self.config.as_deref(), &pairs)
    }
}

impl StylizeArgs {
    fn pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let opt = |out: &mut Vec<_>, k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push(kv(k, v));
            }
        };
        opt(&mut out, "iterations", self.iters.map(|v| v.to_string()));
        opt(&mut out, "lr", self.lr.map(|v| v.to_string()));
        opt(&mut out, "sigma", self.sigma.map(|v| v.to_string()));
        opt(&mut out, "n_theta", self.n_views.map(|v| v.to_string()));
        opt(&mut out, "n_aug", self.n_aug.map(|v| v.to_string()));
        opt(&mut out, "mode", self.mode.clone());
        opt(&mut out, "checkpoint_every", self.checkpoint_every.map(|v| v.to_string()));
        opt(&mut out, "snapshot_every", self.snapshot_every.map(|v| v.to_string()));
        for (flag, key) in [
            (self.no_ffn, "fourier"),
            (self.no_aug, "augment"),
            (self.no_crop, "crop"),
            (self.no_displ_term, "displ_term"),
        ] {
            if flag {
                out.push(kv(key, false));
            }
        }
        if self.direct_optim {
            out.push(kv("direct", true));
        }
        out
    }
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

/// Loads a mesh and rebuilds the content frame recorded in a checkpoint.
fn content_for(mesh: &Path, ckpt: &Checkpoint) -> Result<Content> {
    let content = Content::prepare(&meshio::load_mesh(mesh)?, ckpt.header.subdivisions);
    if content.hash != ckpt.header.mesh_hash {
        return Err(Error::Consistency(format!(
            "{} was trained on a different mesh (hash {} vs {})",
            mesh.display(),
            ckpt.header.mesh_hash,
            content.hash
        )));
    }
    Ok(content)
}

fn stylize(args: &StylizeArgs) -> Result<()> {
    let config = args.config.resolve(args.pairs())?;
    let req = StylizeRequest { mesh: args.mesh.clone(), targets: args.targets.sources(), out: args.out.clone(), config };
    let outcome = run::stylize(&req)?;
    eprintln!("final score {:.6}", outcome.final_score);
    print_paths(&outcome.artifacts);
    Ok(())
}

fn select_anchor(args: &AnchorArgs) -> Result<()> {
    let cfg = args.config.resolve(Vec::new())?;
    let sources = args.targets.sources();
    let target = sources.load()?;
    let content = Content::prepare(&meshio::load_mesh(&args.mesh)?, cfg.subdivide);
    let embedder = run::make_embedder(&cfg)?;
    let prepared = PreparedTarget::new(&target, embedder.as_ref())?;
    let anchor = run::anchor_for(&cfg, embedder.as_ref(), &content, &prepared)?;
    let text = serde_json::to_string_pretty(&run::anchor_json(&anchor)).expect("serializes");
    match &args.out {
        Some(p) => {
            std::fs::write(p, text + "\n").map_err(|e| Error::io(p, e))?;
            println!("{}", p.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn morph(args: &MorphArgs) -> Result<()> {
    if args.frames < 2 {
        return Err(Error::Usage("--frames must be at least 2".into()));
    }
    let a = Checkpoint::load(&args.a)?;
    let b = Checkpoint::load(&args.b)?;
    if a.header.mesh_hash != b.header.mesh_hash {
        return Err(Error::Consistency(format!(
            "checkpoints were trained on different meshes ({} vs {})",
            a.header.mesh_hash, b.header.mesh_hash
        )));
    }
    let content = content_for(&args.mesh, &a)?;
    let frames = run::morph(&a, &b, &content, args.frames)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut written = Vec::new();
    for (k, mesh) in frames.iter().enumerate() {
        let obj = args.out.join(format!("frame_{k:03}.obj"));
        meshio::write_obj(mesh, &obj)?;
        let ply = args.out.join(format!("frame_{k:03}.ply"));
        meshio::write_ply(mesh, &ply)?;
        written.extend([obj, ply]);
    }
    print_paths(&written);
    Ok(())
}

fn subdivide(args: &SubdivideArgs) -> Result<()> {
    let mut mesh = meshio::load_mesh(&args.mesh)?;
    for _ in 0..args.times {
        mesh = mesh.subdivide_barycentric();
    }
    let is_ply = args.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("ply"));
    if is_ply {
        meshio::write_ply(&mesh, &args.out)?;
    } else {
        meshio::write_obj(&mesh, &args.out)?;
    }
    eprintln!("{} vertices, {} faces", mesh.vertex_count(), mesh.face_count());
    println!("{}", args.out.display());
    Ok(())
}

fn score(args: &ScoreArgs) -> Result<()> {
    let mut cfg = args.config.resolve(Vec::new())?;
    let target = args.targets.sources().load()?;
    let (content, model, anchor) = match &args.checkpoint {
        Some(p) => {
            let ckpt = Checkpoint::load(p)?;
            cfg.train.options.mode = ckpt.header.mode;
            (content_for(&args.mesh, &ckpt)?, ckpt.model, ckpt.header.anchor)
        }
        None => {
            let content = Content::prepare(&meshio::load_mesh(&args.mesh)?, cfg.subdivide);
            let model = run::fresh_model(&cfg, &content)?;
            (content, model, None)
        }
    };
    let embedder = run::make_embedder(&cfg)?;
    let prepared = PreparedTarget::new(&target, embedder.as_ref())?;
    let anchor: CameraPose = match anchor {
        Some(a) => a,
        None => run::anchor_for(&cfg, embedder.as_ref(), &content, &prepared)?.pose,
    };
    let s = run::score_model(&cfg, embedder.as_ref(), &content, &prepared, &model, &anchor)?;
    println!("{}", json!({ "score": s, "embedder": embedder.identity() }));
    Ok(())
}

fn export_snapshots(args: &SnapshotArgs) -> Result<()> {
    let cfg = args.config.resolve(Vec::new())?;
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let content = content_for(&args.mesh, &ckpt)?;
    let anchor = ckpt.header.anchor.unwrap_or_else(|| cfg.train.views.pose(&content.mesh, 0.0, 0.0));
    let settings = ExportSettings { mode: ckpt.header.mode, anchor, render: run::snapshot_render(&cfg), iteration: ckpt.header.iteration };
    let layout = Layout::create(&args.out)?;
    let style = settings.mode.restrict(&content.mesh, meshstyle_core::StyleModel::evaluate(&ckpt.model, content.mesh.vertices())?);
    let stylized = content.mesh.apply_style(&style, true)?;
    let displaced = content.mesh.apply_style(&style, false)?;
    let written = run::write_snapshots(&stylized, &displaced, &anchor, &settings.render, &layout.snapshots, "snapshot")?;
    print_paths(&written);
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Stylize(a) => stylize(a),
        Command::SelectAnchor(a) => select_anchor(a),
        Command::Morph(a) => morph(a),
        Command::Subdivide(a) => subdivide(a),
        Command::Score(a) => score(a),
        Command::ExportSnapshots(a) => export_snapshots(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { crate::error::EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
