//! Embedders (image or text to a 512-vector), cosine similarity and style
//! targets.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::augment::clip_normalize;
use crate::camera::CameraPose;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::linalg::{gemm, MatRef};
use crate::math::sqrt;
use crate::mesh::Mesh;
use crate::render::{render_mesh, RenderConfig};

pub const EMBEDDING_DIM: usize = 512;

/// A point in the joint image/text embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(vector: Vec<f64>) -> Result<Self> {
        if vector.len() != EMBEDDING_DIM {
            return Err(Error::Dimension { what: "embedding", expected: EMBEDDING_DIM, got: vector.len() });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("embedding has non-finite components".into()));
        }
        Ok(Self(vector))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.0.iter().map(|v| v * v).sum())
    }

    /// Component-wise mean of a nonempty list.
    pub fn mean(items: &[Embedding]) -> Result<Embedding> {
        if items.is_empty() {
            return Err(Error::InvalidArgument("mean of zero embeddings".into()));
        }
        let mut acc = vec![0.0; EMBEDDING_DIM];
        for e in items {
            for (a, v) in acc.iter_mut().zip(&e.0) {
                *a += v;
            }
        }
        let n = items.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        Ok(Embedding(acc))
    }
}

/// `a . b / (|a| |b|)`.
pub fn cosine_sim(a: &Embedding, b: &Embedding) -> Result<f64> {
    Ok(cosine_with_grad(&a.0, &b.0)?.0)
}

/// Cosine similarity and its gradient with respect to `a`.
pub fn cosine_with_grad(a: &[f64], b: &[f64]) -> Result<(f64, Vec<f64>)> {
    let na = sqrt(a.iter().map(|v| v * v).sum());
    let nb = sqrt(b.iter().map(|v| v * v).sum());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let sim = (dot / (na * nb)).clamp(-1.0, 1.0);
    let grad = a.iter().zip(b).map(|(&x, &y)| y / (na * nb) - sim * x / (na * na)).collect();
    Ok((sim, grad))
}

/// Image and text encoder into a shared space.
///
/// Images passed in are already normalized with
/// [`clip_normalize`](crate::augment::clip_normalize).
pub trait Embedder {
    /// Human-readable identity recorded with runs.
    fn identity(&self) -> String;

    fn embed_image(&self, image: &Image) -> Result<Embedding>;

    /// Gradient of `d_embedding . embed_image(image)` with respect to the
    /// pixels.
    fn embed_image_vjp(&self, image: &Image, d_embedding: &[f64]) -> Result<Image>;

    fn embed_text(&self, text: &str) -> Result<Embedding>;
}

impl<T: Embedder + ?Sized> Embedder for &T {
    fn identity(&self) -> String {
        (**self).identity()
    }
    fn embed_image(&self, image: &Image) -> Result<Embedding> {
        (**self).embed_image(image)
    }
    fn embed_image_vjp(&self, image: &Image, d_embedding: &[f64]) -> Result<Image> {
        (**self).embed_image_vjp(image, d_embedding)
    }
    fn embed_text(&self, text: &str) -> Result<Embedding> {
        (**self).embed_text(text)
    }
}

/// Pooling grid side of the mock embedder.
pub const MOCK_GRID: usize = 16;
const MOCK_FEATURES: usize = MOCK_GRID * MOCK_GRID * 3;

/// Deterministic differentiable stand-in embedder.
///
/// Images are average-pooled to a 16x16x3 grid and text becomes a hashed
/// bag of words with the same 768 bins; both go through one fixed Gaussian
/// projection to 512 dimensions and are L2-normalized.
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    seed: u64,
    /// Row-major `512 x 768`.
    projection: Vec<f64>,
}

impl MockEmbedder {
    pub fn new(seed: u64) -> Self {
        let mut rng = crate::rng_from_seed(crate::derive_seed(seed, 0xE3B));
        let projection = (0..EMBEDDING_DIM * MOCK_FEATURES).map(|_| StandardNormal.sample(&mut rng)).collect();
        Self { seed, projection }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn cells(width: usize, height: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if width < MOCK_GRID || height < MOCK_GRID {
            return Err(Error::InvalidArgument(alloc::format!(
                "mock embedder needs at least {MOCK_GRID}x{MOCK_GRID} pixels, got {width}x{height}"
            )));
        }
        let xs = (0..width).map(|x| x * MOCK_GRID / width).collect();
        let ys = (0..height).map(|y| y * MOCK_GRID / height).collect();
        Ok((xs, ys))
    }

    fn pool(image: &Image) -> Result<Vec<f64>> {
        let (xs, ys) = Self::cells(image.width(), image.height())?;
        let mut sums = vec![0.0; MOCK_FEATURES];
        let mut counts = vec![0usize; MOCK_GRID * MOCK_GRID];
        let data = image.data();
        for (y, &cy) in ys.iter().enumerate() {
            for (x, &cx) in xs.iter().enumerate() {
                let cell = cy * MOCK_GRID + cx;
                counts[cell] += 1;
                let p = (y * image.width() + x) * 3;
                for c in 0..3 {
                    sums[cell * 3 + c] += data[p + c];
                }
            }
        }
        for (cell, &n) in counts.iter().enumerate() {
            for c in 0..3 {
                sums[cell * 3 + c] /= n as f64;
            }
        }
        Ok(sums)
    }

    fn project(&self, features: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; EMBEDDING_DIM];
        gemm(
            1.0,
            MatRef::new(&self.projection, EMBEDDING_DIM, MOCK_FEATURES),
            MatRef::new(features, MOCK_FEATURES, 1),
            0.0,
            &mut out,
        );
        out
    }

    fn normalized(raw: Vec<f64>) -> Result<Embedding> {
        let n = sqrt(raw.iter().map(|v| v * v).sum());
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        Embedding::new(raw.into_iter().map(|v| v / n).collect())
    }

    /// Token bins of the bag-of-words text path.
    pub fn text_features(text: &str) -> Result<Vec<f64>> {
        let mut bins = vec![0.0; MOCK_FEATURES];
        let mut any = false;
        for token in text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            let mut h: u64 = 0xcbf2_9ce4_8422_2325;
            for ch in token.chars().flat_map(char::to_lowercase) {
                let mut buf = [0u8; 4];
                for &b in ch.encode_utf8(&mut buf).as_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
            bins[(h % MOCK_FEATURES as u64) as usize] += 1.0;
            any = true;
        }
        if !any {
            return Err(Error::InvalidArgument("text prompt has no words".into()));
        }
        Ok(bins)
    }
}

impl Embedder for MockEmbedder {
    fn identity(&self) -> String {
        alloc::format!("mock(seed={})", self.seed)
    }

    fn embed_image(&self, image: &Image) -> Result<Embedding> {
        Self::normalized(self.project(&Self::pool(image)?))
    }

    fn embed_image_vjp(&self, image: &Image, d_embedding: &[f64]) -> Result<Image> {
        crate::error::check_len("embedding gradient", EMBEDDING_DIM, d_embedding.len())?;
        let raw = self.project(&Self::pool(image)?);
        let n = sqrt(raw.iter().map(|v| v * v).sum());
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        // e = y / |y|  =>  dy = (de - e (e . de)) / |y|
        let e_dot: f64 = raw.iter().zip(d_embedding).map(|(y, d)| y * d).sum::<f64>() / n;
        let d_raw: Vec<f64> = raw.iter().zip(d_embedding).map(|(y, d)| (d - y / n * e_dot) / n).collect();
        let mut d_feat = vec![0.0; MOCK_FEATURES];
        gemm(
            1.0,
            MatRef::t(&self.projection, EMBEDDING_DIM, MOCK_FEATURES),
            MatRef::new(&d_raw, EMBEDDING_DIM, 1),
            0.0,
            &mut d_feat,
        );
        let (xs, ys) = Self::cells(image.width(), image.height())?;
        let mut counts = vec![0usize; MOCK_GRID * MOCK_GRID];
        for &cy in &ys {
            for &cx in &xs {
                counts[cy * MOCK_GRID + cx] += 1;
            }
        }
        let mut out = Image::new(image.width(), image.height());
        let w = image.width();
        let d = out.data_mut();
        for (y, &cy) in ys.iter().enumerate() {
            for (x, &cx) in xs.iter().enumerate() {
                let cell = cy * MOCK_GRID + cx;
                let inv = 1.0 / counts[cell] as f64;
                let p = (y * w + x) * 3;
                for c in 0..3 {
                    d[p + c] = d_feat[cell * 3 + c] * inv;
                }
            }
        }
        Ok(out)
    }

    fn embed_text(&self, text: &str) -> Result<Embedding> {
        if text.trim().is_empty() {
            return Err(Error::InvalidArgument("empty text prompt".into()));
        }
        Self::normalized(self.project(&Self::text_features(text)?))
    }
}

/// One component of a style target.
#[derive(Debug, Clone)]
pub enum TargetPart {
    Text(String),
    /// An RGB image with values in `[0, 1]`.
    Image(Image),
    /// A mesh, embedded as the mean of its renders from the current views.
    Mesh(Mesh),
}

/// A nonempty list of target parts; the objective sums over parts.
#[derive(Debug, Clone)]
pub struct StyleTarget {
    parts: Vec<TargetPart>,
}

impl StyleTarget {
    pub fn new(parts: Vec<TargetPart>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("style target has no parts".into()));
        }
        Ok(Self { parts })
    }

    pub fn text(prompt: &str) -> Self {
        Self { parts: vec![TargetPart::Text(prompt.into())] }
    }

    pub fn parts(&self) -> &[TargetPart] {
        &self.parts
    }
}

#[derive(Debug, Clone)]
enum PreparedPart {
    Fixed(Embedding),
    Mesh(Mesh),
}

/// A target with its view-independent parts already embedded.
#[derive(Debug, Clone)]
pub struct PreparedTarget {
    parts: Vec<PreparedPart>,
}

impl PreparedTarget {
    /// Embeds text and image parts. Mesh parts are normalized to the unit
    /// box so they share framing with the (normalized) source mesh.
    pub fn new<E: Embedder + ?Sized>(target: &StyleTarget, embedder: &E) -> Result<Self> {
        let parts = target
            .parts
            .iter()
            .map(|p| {
                Ok(match p {
                    TargetPart::Text(t) => PreparedPart::Fixed(embedder.embed_text(t)?),
                    TargetPart::Image(img) => PreparedPart::Fixed(embedder.embed_image(&clip_normalize(img))?),
                    TargetPart::Mesh(m) => PreparedPart::Mesh(m.normalize_to_unit_box().mesh),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { parts })
    }

    /// Wraps precomputed embeddings.
    pub fn from_embeddings(embeddings: Vec<Embedding>) -> Result<Self> {
        if embeddings.is_empty() {
            return Err(Error::InvalidArgument("style target has no parts".into()));
        }
        Ok(Self { parts: embeddings.into_iter().map(PreparedPart::Fixed).collect() })
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn depends_on_views(&self) -> bool {
        self.parts.iter().any(|p| matches!(p, PreparedPart::Mesh(_)))
    }

    /// One embedding per part for the given views. Mesh parts are rendered
    /// over the neutral background, without augmentation.
    pub fn embeddings<E: Embedder + ?Sized>(&self, views: &[CameraPose], embedder: &E, render_cfg: &RenderConfig) -> Result<Vec<Embedding>> {
        self.parts
            .iter()
            .map(|p| match p {
                PreparedPart::Fixed(e) => Ok(e.clone()),
                PreparedPart::Mesh(m) => {
                    if views.is_empty() {
                        return Err(Error::InvalidArgument("mesh target needs at least one view".into()));
                    }
                    let bg = render_cfg.background.neutral();
                    let embs = views
                        .iter()
                        .map(|v| embedder.embed_image(&clip_normalize(&render_mesh(m, v, render_cfg, bg).image)))
                        .collect::<Result<Vec<_>>>()?;
                    Embedding::mean(&embs)
                }
            })
            .collect()
    }
}

/// Resolves every part of a target to an embedding for the given views.
pub fn resolve_target<E: Embedder + ?Sized>(
    target: &StyleTarget,
    embedder: &E,
    views: &[CameraPose],
    render_cfg: &RenderConfig,
) -> Result<Vec<Embedding>> {
    PreparedTarget::new(target, embedder)?.embeddings(views, embedder, render_cfg)
}
