//! The similarity objective: render view pairs, augment, embed, average
//! over views and compare against every target part.
//!
//! Three view-averaged embeddings are formed per evaluation:
//! `full` (global augmentation of the colored render), `local` (local
//! augmentation of the colored render) and `displ` (the same local
//! augmentation of the gray render of the displaced geometry). The `displ`
//! term never reaches the color branch.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::augment::{clip_normalize, clip_normalize_backward, AugmentConfig, Augmentation};
use crate::camera::CameraPose;
use crate::embedding::{cosine_with_grad, Embedder, Embedding};
use crate::error::{check_len, Error, Result};
use crate::field::{StyleModel, StyleOutput};
use crate::image::Image;
use crate::math::{dot, V3};
use crate::mesh::{Mesh, GRAY};
use crate::render::{render, render_backward, RenderConfig, Rendered, Scene};

/// Which style channels are optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StyleMode {
    #[default]
    Full,
    /// Displacements only; the mesh keeps its own colors (gray if none).
    GeometryOnly,
    /// Colors only; vertices stay in place.
    ColorOnly,
}

impl StyleMode {
    /// Masks a field output according to the mode.
    pub fn restrict(self, mesh: &Mesh, mut style: StyleOutput) -> StyleOutput {
        match self {
            StyleMode::Full => {}
            StyleMode::GeometryOnly => style.colors = mesh.colors_or_gray(),
            StyleMode::ColorOnly => style.displacements.iter_mut().for_each(|d| *d = 0.0),
        }
        style
    }

    fn colors(self) -> bool {
        self != StyleMode::GeometryOnly
    }

    fn geometry(self) -> bool {
        self != StyleMode::ColorOnly
    }
}

/// Switches for the objective and its ablations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossOptions {
    /// Apply the 2D augmentations (otherwise every augmentation is the identity).
    pub augment: bool,
    /// Include the random crop in the local augmentation.
    pub crop: bool,
    /// Include the gray displacement-only term.
    pub displ_term: bool,
    pub mode: StyleMode,
    /// Also return the gradient of each term separately.
    pub term_gradients: bool,
}

impl Default for LossOptions {
    fn default() -> Self {
        Self { augment: true, crop: true, displ_term: true, mode: StyleMode::Full, term_gradients: false }
    }
}

/// Similarities of one target part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermSims {
    pub full: f64,
    pub local: f64,
    /// `None` when the displacement term is disabled.
    pub displ: Option<f64>,
}

impl TermSims {
    pub fn total(&self) -> f64 {
        self.full + self.local + self.displ.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    /// One entry per target part.
    pub parts: Vec<TermSims>,
    /// Sum over parts and terms; the optimizer minimizes its negation.
    pub total: f64,
}

impl LossBreakdown {
    fn mean_of(&self, f: impl Fn(&TermSims) -> f64) -> f64 {
        self.parts.iter().map(f).sum::<f64>() / self.parts.len() as f64
    }

    /// Mean over parts.
    pub fn sim_full(&self) -> f64 {
        self.mean_of(|t| t.full)
    }

    pub fn sim_local(&self) -> f64 {
        self.mean_of(|t| t.local)
    }

    pub fn sim_displ(&self) -> Option<f64> {
        if self.parts.iter().all(|t| t.displ.is_some()) {
            Some(self.mean_of(|t| t.displ.unwrap_or(0.0)))
        } else {
            None
        }
    }
}

/// Gradients of each term (summed over parts) with respect to the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TermGradients {
    pub full: Vec<f64>,
    pub local: Vec<f64>,
    pub displ: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub breakdown: LossBreakdown,
    /// Gradient of `breakdown.total` with respect to the model parameters.
    pub gradient: Vec<f64>,
    pub terms: Option<TermGradients>,
}

/// Everything the objective needs besides the model, mesh, targets and views.
pub struct Objective<'a, E: Embedder + ?Sized> {
    pub embedder: &'a E,
    pub render: &'a RenderConfig,
    pub augment: &'a AugmentConfig,
    pub options: LossOptions,
}

struct ViewLeg {
    full: Rendered,
    displ: Option<Rendered>,
    global: Augmentation,
    local: Augmentation,
    inputs: [Option<Image>; 3],
}

const FULL: usize = 0;
const LOCAL: usize = 1;
const DISPL: usize = 2;

impl<'a, E: Embedder + ?Sized> Objective<'a, E> {
    /// Evaluates the objective and its gradient. Repeated `n_aug` times with
    /// fresh augmentations and backgrounds; similarities and gradients are
    /// averaged over repetitions.
    pub fn evaluate<M: StyleModel>(
        &self,
        model: &M,
        mesh: &Mesh,
        targets: &[Embedding],
        views: &[CameraPose],
        rng: &mut crate::Rng,
    ) -> Result<Evaluation> {
        self.check(targets, views)?;
        let (raw, cache) = model.forward(mesh.vertices())?;
        check_len("style entries", mesh.vertex_count(), raw.len())?;
        let style = self.options.mode.restrict(mesh, raw);
        let positions = mesh.displaced_positions(&style.displacements);
        let gray = vec![GRAY; positions.len()];
        let full_scene = Scene::new(&positions, &style.colors, mesh.faces())?;
        let displ_scene = Scene::new(&positions, &gray, mesh.faces())?;

        let n_params = model.params().len();
        let reps = self.augment.n_aug;
        let mut parts = vec![TermSims { full: 0.0, local: 0.0, displ: None }; targets.len()];
        let mut gradient = vec![0.0; n_params];
        let mut terms = self.options.term_gradients.then(|| TermGradients {
            full: vec![0.0; n_params],
            local: vec![0.0; n_params],
            displ: vec![0.0; n_params],
        });

        for _ in 0..reps {
            let legs = views
                .iter()
                .map(|v| self.forward_leg(&full_scene, &displ_scene, v, rng))
                .collect::<Result<Vec<_>>>()?;
            let mut d_mean: [Option<Vec<f64>>; 3] = [None, None, None];
            for term in [FULL, LOCAL, DISPL] {
                if term == DISPL && !self.options.displ_term {
                    continue;
                }
                let embs = legs
                    .iter()
                    .map(|l| self.embedder.embed_image(l.inputs[term].as_ref().expect("input rendered")))
                    .collect::<Result<Vec<_>>>()?;
                let mean = Embedding::mean(&embs)?;
                let mut d = vec![0.0; mean.as_slice().len()];
                for (p, target) in targets.iter().enumerate() {
                    let (sim, g) = cosine_with_grad(mean.as_slice(), target.as_slice())?;
                    let s = sim / reps as f64;
                    match term {
                        FULL => parts[p].full += s,
                        LOCAL => parts[p].local += s,
                        _ => *parts[p].displ.get_or_insert(0.0) += s,
                    }
                    d.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
                }
                // mean over views, then over repetitions
                let k = 1.0 / (views.len() * reps) as f64;
                d.iter_mut().for_each(|v| *v *= k);
                d_mean[term] = Some(d);
            }
            self.backward(model, &cache, mesh, &full_scene, &displ_scene, views, &legs, &d_mean, &mut gradient, terms.as_mut())?;
        }

        let total = parts.iter().map(TermSims::total).sum();
        Ok(Evaluation { breakdown: LossBreakdown { parts, total }, gradient, terms })
    }

    /// Similarity of the un-augmented view-averaged colored renders to each
    /// target part, averaged over parts. Uses the neutral background, so it
    /// is deterministic.
    pub fn score<M: StyleModel>(&self, model: &M, mesh: &Mesh, targets: &[Embedding], views: &[CameraPose]) -> Result<f64> {
        self.check(targets, views)?;
        let style = self.options.mode.restrict(mesh, model.evaluate(mesh.vertices())?);
        let positions = mesh.displaced_positions(&style.displacements);
        let scene = Scene::new(&positions, &style.colors, mesh.faces())?;
        let bg = self.render.background.neutral();
        let embs = views
            .iter()
            .map(|v| self.embedder.embed_image(&clip_normalize(&render(&scene, v, self.render, bg).image)))
            .collect::<Result<Vec<_>>>()?;
        let mean = Embedding::mean(&embs)?;
        let mut s = 0.0;
        for t in targets {
            s += cosine_with_grad(mean.as_slice(), t.as_slice())?.0;
        }
        Ok(s / targets.len() as f64)
    }

    fn check(&self, targets: &[Embedding], views: &[CameraPose]) -> Result<()> {
        if views.is_empty() {
            return Err(Error::InvalidArgument("objective needs at least one view".into()));
        }
        if targets.is_empty() {
            return Err(Error::InvalidArgument("objective needs at least one target".into()));
        }
        self.render.validate()?;
        self.augment.validate()
    }

    fn forward_leg(&self, full_scene: &Scene<'_>, displ_scene: &Scene<'_>, view: &CameraPose, rng: &mut crate::Rng) -> Result<ViewLeg> {
        let (w, h) = (self.render.width, self.render.height);
        let bg = self.render.background.draw(rng);
        let full = render(full_scene, view, self.render, bg);
        let displ = self.options.displ_term.then(|| render(displ_scene, view, self.render, bg));
        let (global, local) = if self.options.augment {
            let g = Augmentation::global(w, h, self.augment, rng);
            let l = Augmentation::local(w, h, self.augment, self.options.crop, rng);
            (g, l)
        } else {
            (Augmentation::identity(), Augmentation::identity())
        };
        let inputs = [
            Some(clip_normalize(&global.apply(&full.image))),
            Some(clip_normalize(&local.apply(&full.image))),
            displ.as_ref().map(|d| clip_normalize(&local.apply(&d.image))),
        ];
        Ok(ViewLeg { full, displ, global, local, inputs })
    }

    /// Gradient of the render-space image for one term of one view.
    fn image_grad(&self, leg: &ViewLeg, term: usize, d_emb: &[f64]) -> Result<Image> {
        let x = leg.inputs[term].as_ref().expect("input rendered");
        let d = clip_normalize_backward(&self.embedder.embed_image_vjp(x, d_emb)?);
        Ok(if term == FULL { leg.global.backward(&d) } else { leg.local.backward(&d) })
    }

    #[allow(clippy::too_many_arguments)]
    fn backward<M: StyleModel>(
        &self,
        model: &M,
        cache: &M::Cache,
        mesh: &Mesh,
        full_scene: &Scene<'_>,
        displ_scene: &Scene<'_>,
        views: &[CameraPose],
        legs: &[ViewLeg],
        d_mean: &[Option<Vec<f64>>; 3],
        gradient: &mut [f64],
        terms: Option<&mut TermGradients>,
    ) -> Result<()> {
        let mode = self.options.mode;
        let n = mesh.vertex_count();
        let split = terms.is_some();
        // vertex-space accumulators: [full, local, displ]
        let mut d_pos = [vec![[0.0; 3]; n], vec![[0.0; 3]; n], vec![[0.0; 3]; n]];
        let mut d_col = [vec![[0.0; 3]; n], vec![[0.0; 3]; n]];
        for (view, leg) in views.iter().zip(legs) {
            let mut colored: Vec<(usize, Image)> = Vec::new();
            for term in [FULL, LOCAL] {
                let g = self.image_grad(leg, term, d_mean[term].as_ref().expect("term evaluated"))?;
                match colored.last_mut() {
                    Some((_, acc)) if !split => acc.accumulate(&g),
                    _ => colored.push((term, g)),
                }
            }
            for (slot, d_img) in colored {
                let sg = render_backward(full_scene, view, self.render, &leg.full, &d_img, mode.colors());
                add_v3(&mut d_pos[slot], &sg.positions);
                if let Some(c) = sg.colors {
                    add_v3(&mut d_col[slot], &c);
                }
            }
            if let (Some(r), Some(d)) = (&leg.displ, &d_mean[DISPL]) {
                let d_img = self.image_grad(leg, DISPL, d)?;
                let sg = render_backward(displ_scene, view, self.render, r, &d_img, false);
                add_v3(&mut d_pos[DISPL], &sg.positions);
            }
        }
        let normals = mesh.normals();
        let to_disp = |dp: &[V3]| -> Vec<f64> { dp.iter().zip(normals).map(|(g, nrm)| dot(*g, *nrm)).collect() };
        let geometry = mode.geometry();
        let param_grad = |slot: usize, colors: bool| -> Vec<f64> {
            let dd = geometry.then(|| to_disp(&d_pos[slot]));
            let dc = (colors && mode.colors()).then(|| &d_col[slot][..]);
            model.backward(cache, dc, dd.as_deref())
        };
        let g_displ = if self.options.displ_term { Some(param_grad(DISPL, false)) } else { None };
        if let Some(t) = terms {
            let g_full = param_grad(FULL, true);
            let g_local = param_grad(LOCAL, true);
            add(&mut t.full, &g_full);
            add(&mut t.local, &g_local);
            add(gradient, &g_full);
            add(gradient, &g_local);
            if let Some(g) = &g_displ {
                add(&mut t.displ, g);
            }
        } else {
            add(gradient, &param_grad(FULL, true));
        }
        if let Some(g) = &g_displ {
            add(gradient, g);
        }
        Ok(())
    }
}

fn add(acc: &mut [f64], g: &[f64]) {
    acc.iter_mut().zip(g).for_each(|(a, b)| *a += b);
}

fn add_v3(acc: &mut [V3], g: &[V3]) {
    for (a, b) in acc.iter_mut().zip(g) {
        for k in 0..3 {
            a[k] += b[k];
        }
    }
}
