//! The neural style field: Fourier-feature encoding of vertex coordinates
//! feeding a shared ReLU trunk that branches into a displacement head and a
//! color head. Gradients are computed by explicit backpropagation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{gemm, MatRef};
use crate::math::{cos, sin, sqrt, tanh, V3};
use crate::{derive_seed, rng_from_seed};

/// Largest displacement magnitude; outputs lie strictly inside `(-0.1, 0.1)`.
pub const DISPLACEMENT_SCALE: f64 = 0.1;

// |tanh(x)| rounds to 1.0 past ~19; clamping keeps the output bounds strict.
const MAX_PREACTIVATION: f64 = 18.0;

const STREAM_FREQUENCIES: u64 = 0xB;
const STREAM_WEIGHTS: u64 = 0x3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingConfig {
    /// Rows of the frequency matrix; the feature has twice this many entries.
    pub num_frequencies: usize,
    /// Standard deviation of the frequency matrix entries.
    pub sigma: f64,
    /// Coordinates replaced by their absolute value before encoding.
    pub symmetry: Vec<Axis>,
    pub seed: u64,
    /// When false the raw (folded) coordinates are fed to the trunk.
    pub fourier: bool,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        Self { num_frequencies: 128, sigma: 5.0, symmetry: Vec::new(), seed: 0, fourier: true }
    }
}

impl EncodingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_frequencies == 0 {
            return Err(Error::InvalidArgument("num_frequencies must be at least 1".into()));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// Random Fourier feature map `p -> [cos(2 pi B p), sin(2 pi B p)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierFeatures {
    frequencies: Vec<V3>,
    fold: [bool; 3],
    enabled: bool,
}

impl FourierFeatures {
    /// Draws the frequency matrix with i.i.d. `N(0, sigma^2)` entries.
    pub fn sample(cfg: &EncodingConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng_from_seed(derive_seed(cfg.seed, STREAM_FREQUENCIES));
        let frequencies = (0..cfg.num_frequencies)
            .map(|_| {
                let mut row = [0.0; 3];
                for v in &mut row {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v = cfg.sigma * z;
                }
                row
            })
            .collect();
        Ok(Self::from_matrix(frequencies, &cfg.symmetry, cfg.fourier))
    }

    pub fn from_matrix(frequencies: Vec<V3>, symmetry: &[Axis], enabled: bool) -> Self {
        let mut fold = [false; 3];
        for a in symmetry {
            fold[a.index()] = true;
        }
        Self { frequencies, fold, enabled }
    }

    pub fn matrix(&self) -> &[V3] {
        &self.frequencies
    }

    pub fn output_dim(&self) -> usize {
        if self.enabled {
            2 * self.frequencies.len()
        } else {
            3
        }
    }

    /// Applies the symmetry map (absolute value on folded axes).
    pub fn fold(&self, p: V3) -> V3 {
        let mut q = p;
        for k in 0..3 {
            if self.fold[k] {
                q[k] = q[k].abs();
            }
        }
        q
    }

    /// Jacobian of the encoding at `p`, one row (gradient over x, y, z) per
    /// output feature.
    pub fn jacobian(&self, p: V3) -> Vec<V3> {
        let q = self.fold(p);
        let mut sign = [1.0; 3];
        for k in 0..3 {
            if self.fold[k] && p[k] < 0.0 {
                sign[k] = -1.0;
            }
        }
        if !self.enabled {
            return (0..3).map(|k| {
                let mut row = [0.0; 3];
                row[k] = sign[k];
                row
            }).collect();
        }
        let k = self.frequencies.len();
        let two_pi = 2.0 * core::f64::consts::PI;
        let mut rows = vec![[0.0; 3]; 2 * k];
        for (j, b) in self.frequencies.iter().enumerate() {
            let phase = two_pi * (b[0] * q[0] + b[1] * q[1] + b[2] * q[2]);
            let (s, c) = (sin(phase), cos(phase));
            for a in 0..3 {
                rows[j][a] = -two_pi * b[a] * s * sign[a];
                rows[k + j][a] = two_pi * b[a] * c * sign[a];
            }
        }
        rows
    }

    /// Mean absolute Jacobian entry over a set of points.
    pub fn mean_abs_jacobian(&self, points: &[V3]) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for &p in points {
            for row in self.jacobian(p) {
                sum += row.iter().map(|v| v.abs()).sum::<f64>();
                count += 3;
            }
        }
        if count == 0 { 0.0 } else { sum / count as f64 }
    }

    /// Encodes `n` points into an `n x output_dim` row-major matrix.
    pub fn encode(&self, points: &[V3]) -> Vec<f64> {
        let dim = self.output_dim();
        let k = self.frequencies.len();
        let mut out = vec![0.0; points.len() * dim];
        for (row, &p) in out.chunks_exact_mut(dim).zip(points) {
            let q = self.fold(p);
            if !self.enabled {
                row.copy_from_slice(&q);
                continue;
            }
            for (j, b) in self.frequencies.iter().enumerate() {
                let phase = 2.0 * core::f64::consts::PI * (b[0] * q[0] + b[1] * q[1] + b[2] * q[2]);
                row[j] = cos(phase);
                row[k + j] = sin(phase);
            }
        }
        out
    }
}

/// Per-vertex style values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleOutput {
    pub colors: Vec<V3>,
    pub displacements: Vec<f64>,
}

impl StyleOutput {
    /// Uniform gray, zero displacement: the style that leaves a mesh unaltered.
    pub fn identity(n: usize) -> Self {
        Self { colors: vec![[0.5; 3]; n], displacements: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.displacements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacements.is_empty()
    }

    pub fn within_bounds(&self) -> bool {
        self.displacements.iter().all(|d| d.abs() < DISPLACEMENT_SCALE)
            && self.colors.iter().flatten().all(|&c| c > 0.0 && c < 1.0)
    }
}

/// Disjoint index ranges into a model's flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterPartition {
    /// Trunk and displacement branch.
    pub geometry: Vec<Range<usize>>,
    /// Color branch.
    pub color: Vec<Range<usize>>,
}

impl ParameterPartition {
    pub fn is_color(&self, index: usize) -> bool {
        self.color.iter().any(|r| r.contains(&index))
    }

    pub fn is_geometry(&self, index: usize) -> bool {
        self.geometry.iter().any(|r| r.contains(&index))
    }

    pub fn color_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.color.iter().flat_map(|r| r.clone())
    }

    pub fn geometry_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.geometry.iter().flat_map(|r| r.clone())
    }
}

/// A differentiable map from vertex positions to per-vertex style.
pub trait StyleModel {
    type Cache;

    fn forward(&self, points: &[V3]) -> Result<(StyleOutput, Self::Cache)>;

    /// Gradient of a scalar with respect to the flat parameters, given its
    /// gradient with respect to the outputs. A `None` output gradient means
    /// that output does not feed the scalar; the corresponding branch is
    /// skipped entirely and its parameters receive exactly zero.
    fn backward(&self, cache: &Self::Cache, d_colors: Option<&[V3]>, d_displacements: Option<&[f64]>) -> Vec<f64>;

    fn params(&self) -> &[f64];

    fn params_mut(&mut self) -> &mut [f64];

    fn partition(&self) -> ParameterPartition;

    fn evaluate(&self, points: &[V3]) -> Result<StyleOutput> {
        Ok(self.forward(points)?.0)
    }
}

/// Layer sizes of the field network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub width: usize,
    pub trunk_depth: usize,
    pub branch_depth: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self { width: 256, trunk_depth: 4, branch_depth: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LayerSpec {
    input: usize,
    output: usize,
    /// Weights `[input][output]` start here, followed by `output` biases.
    offset: usize,
}

impl LayerSpec {
    fn weights(&self) -> Range<usize> {
        self.offset..self.offset + self.input * self.output
    }

    fn bias(&self) -> Range<usize> {
        let start = self.offset + self.input * self.output;
        start..start + self.output
    }

    fn end(&self) -> usize {
        self.offset + (self.input + 1) * self.output
    }
}

/// The style field network.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleField {
    encoding: EncodingConfig,
    features: FourierFeatures,
    arch: Architecture,
    layers: Vec<LayerSpec>,
    params: Vec<f64>,
}

/// Activations kept from [`StyleField::forward`] for backpropagation.
#[derive(Debug, Clone)]
pub struct FieldCache {
    n: usize,
    input: Vec<f64>,
    /// Post-ReLU outputs of every hidden layer, in layer order.
    hidden: Vec<Vec<f64>>,
    disp_raw: Vec<f64>,
    color_raw: Vec<f64>,
}

impl StyleField {
    /// Freshly initialized field with the default architecture.
    pub fn new(encoding: EncodingConfig) -> Result<Self> {
        Self::with_architecture(encoding, Architecture::default())
    }

    /// Hidden layers use fan-in uniform initialization; both output layers
    /// start at exactly zero so the content mesh is unaltered.
    pub fn with_architecture(encoding: EncodingConfig, arch: Architecture) -> Result<Self> {
        let features = FourierFeatures::sample(&encoding)?;
        let layers = layer_layout(features.output_dim(), arch)?;
        let mut params = vec![0.0; layers.last().map_or(0, LayerSpec::end)];
        let mut rng = rng_from_seed(derive_seed(encoding.seed, STREAM_WEIGHTS));
        let (disp_out, color_out) = output_layers(arch);
        for (li, l) in layers.iter().enumerate() {
            if li == disp_out || li == color_out {
                continue;
            }
            let bound = 1.0 / sqrt(l.input as f64);
            for w in &mut params[l.offset..l.end()] {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(Self { encoding, features, arch, layers, params })
    }

    /// Reassembles a field from stored parts (checkpoint loading).
    pub fn from_parts(
        encoding: EncodingConfig,
        frequencies: Vec<V3>,
        arch: Architecture,
        params: Vec<f64>,
    ) -> Result<Self> {
        encoding.validate()?;
        check_len("frequency rows", encoding.num_frequencies, frequencies.len())?;
        let features = FourierFeatures::from_matrix(frequencies, &encoding.symmetry, encoding.fourier);
        let layers = layer_layout(features.output_dim(), arch)?;
        check_len("field parameters", layers.last().map_or(0, LayerSpec::end), params.len())?;
        Ok(Self { encoding, features, arch, layers, params })
    }

    pub fn encoding(&self) -> &EncodingConfig {
        &self.encoding
    }

    pub fn features(&self) -> &FourierFeatures {
        &self.features
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    /// Parameter ranges of the displacement and color output layers.
    pub fn output_layer_params(&self) -> (Range<usize>, Range<usize>) {
        let (d, c) = output_layers(self.arch);
        (self.layers[d].offset..self.layers[d].end(), self.layers[c].offset..self.layers[c].end())
    }

    /// Encodes points with the field's (fixed) frequency matrix.
    pub fn encode(&self, points: &[V3]) -> Vec<f64> {
        self.features.encode(points)
    }

    fn linear_forward(&self, l: LayerSpec, x: &[f64], n: usize, relu: bool) -> Vec<f64> {
        let mut y = Vec::with_capacity(n * l.output);
        let bias = &self.params[l.bias()];
        for _ in 0..n {
            y.extend_from_slice(bias);
        }
        gemm(
            1.0,
            MatRef::new(x, n, l.input),
            MatRef::new(&self.params[l.weights()], l.input, l.output),
            1.0,
            &mut y,
        );
        if relu {
            for v in &mut y {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        y
    }

    /// Accumulates weight/bias gradients into `grads` and returns the
    /// gradient with respect to the layer input when requested.
    fn linear_backward(
        &self,
        l: LayerSpec,
        x: &[f64],
        dy: &[f64],
        n: usize,
        grads: &mut [f64],
        want_dx: bool,
    ) -> Option<Vec<f64>> {
        gemm(1.0, MatRef::t(x, n, l.input), MatRef::new(dy, n, l.output), 1.0, &mut grads[l.weights()]);
        let db = &mut grads[l.bias()];
        for row in dy.chunks_exact(l.output) {
            for (b, d) in db.iter_mut().zip(row) {
                *b += d;
            }
        }
        want_dx.then(|| {
            let mut dx = vec![0.0; n * l.input];
            gemm(
                1.0,
                MatRef::new(dy, n, l.output),
                MatRef::t(&self.params[l.weights()], l.input, l.output),
                0.0,
                &mut dx,
            );
            dx
        })
    }
}

fn output_layers(arch: Architecture) -> (usize, usize) {
    let disp_out = arch.trunk_depth + arch.branch_depth;
    (disp_out, disp_out + arch.branch_depth + 1)
}

fn layer_layout(input_dim: usize, arch: Architecture) -> Result<Vec<LayerSpec>> {
    if arch.width == 0 || arch.trunk_depth == 0 {
        return Err(Error::InvalidArgument("field needs a non-empty trunk".into()));
    }
    let mut layers = Vec::new();
    let mut offset = 0;
    let mut push = |input: usize, output: usize| {
        let l = LayerSpec { input, output, offset };
        offset = l.end();
        layers.push(l);
    };
    push(input_dim, arch.width);
    for _ in 1..arch.trunk_depth {
        push(arch.width, arch.width);
    }
    for head_out in [1, 3] {
        for _ in 0..arch.branch_depth {
            push(arch.width, arch.width);
        }
        push(arch.width, head_out);
    }
    Ok(layers)
}

#[inline]
fn squash(raw: f64) -> (f64, f64) {
    // returns (tanh, d tanh / d raw)
    if raw.abs() > MAX_PREACTIVATION {
        (tanh(raw.clamp(-MAX_PREACTIVATION, MAX_PREACTIVATION)), 0.0)
    } else {
        let t = tanh(raw);
        (t, 1.0 - t * t)
    }
}

fn relu_mask(d: &mut [f64], activation: &[f64]) {
    for (g, a) in d.iter_mut().zip(activation) {
        if *a <= 0.0 {
            *g = 0.0;
        }
    }
}

impl StyleModel for StyleField {
    type Cache = FieldCache;

    fn forward(&self, points: &[V3]) -> Result<(StyleOutput, FieldCache)> {
        let n = points.len();
        let input = self.features.encode(points);
        let (disp_out, color_out) = output_layers(self.arch);
        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() - 2);

        let mut x: &[f64] = &input;
        for l in &self.layers[..self.arch.trunk_depth] {
            let y = self.linear_forward(*l, x, n, true);
            hidden.push(y);
            x = hidden.last().unwrap();
        }
        let trunk_out = self.arch.trunk_depth - 1;

        let branch = |first: usize, out: usize, hidden: &mut Vec<Vec<f64>>| {
            let mut x: &[f64] = &hidden[trunk_out];
            let mut acts = Vec::with_capacity(out - first);
            for l in &self.layers[first..out] {
                let y = self.linear_forward(*l, x, n, true);
                acts.push(y);
                x = acts.last().unwrap();
            }
            let raw = self.linear_forward(self.layers[out], x, n, false);
            hidden.extend(acts);
            raw
        };
        let disp_raw = branch(self.arch.trunk_depth, disp_out, &mut hidden);
        let color_raw = branch(disp_out + 1, color_out, &mut hidden);

        let displacements = disp_raw.iter().map(|&r| DISPLACEMENT_SCALE * squash(r).0).collect();
        let colors = color_raw
            .chunks_exact(3)
            .map(|c| [0.5 + 0.5 * squash(c[0]).0, 0.5 + 0.5 * squash(c[1]).0, 0.5 + 0.5 * squash(c[2]).0])
            .collect();
        Ok((StyleOutput { colors, displacements }, FieldCache { n, input, hidden, disp_raw, color_raw }))
    }

    fn backward(&self, cache: &FieldCache, d_colors: Option<&[V3]>, d_displacements: Option<&[f64]>) -> Vec<f64> {
        let n = cache.n;
        let mut grads = vec![0.0; self.params.len()];
        if d_colors.is_none() && d_displacements.is_none() {
            return grads;
        }
        let (disp_out, color_out) = output_layers(self.arch);
        let td = self.arch.trunk_depth;
        let bd = self.arch.branch_depth;
        let trunk_act = &cache.hidden[td - 1];
        let mut d_trunk = vec![0.0; n * self.arch.width];

        // hidden[] layout: trunk (td), displacement branch (bd), color branch (bd)
        let mut run_branch = |d_raw: Vec<f64>, out_layer: usize, first_hidden: usize, grads: &mut Vec<f64>| {
            let last_act = if bd == 0 { trunk_act } else { &cache.hidden[first_hidden + bd - 1] };
            let mut d = self.linear_backward(self.layers[out_layer], last_act, &d_raw, n, grads, true).unwrap();
            for j in (0..bd).rev() {
                relu_mask(&mut d, &cache.hidden[first_hidden + j]);
                let input = if j == 0 { trunk_act } else { &cache.hidden[first_hidden + j - 1] };
                d = self.linear_backward(self.layers[out_layer - bd + j], input, &d, n, grads, true).unwrap();
            }
            for (t, v) in d_trunk.iter_mut().zip(&d) {
                *t += v;
            }
        };

        if let Some(dd) = d_displacements {
            let d_raw = cache
                .disp_raw
                .iter()
                .zip(dd)
                .map(|(&r, &g)| g * DISPLACEMENT_SCALE * squash(r).1)
                .collect();
            run_branch(d_raw, disp_out, td, &mut grads);
        }
        if let Some(dc) = d_colors {
            let d_raw = cache
                .color_raw
                .iter()
                .zip(dc.iter().flatten())
                .map(|(&r, &g)| g * 0.5 * squash(r).1)
                .collect();
            run_branch(d_raw, color_out, td + bd, &mut grads);
        }

        let mut d = d_trunk;
        for j in (0..td).rev() {
            relu_mask(&mut d, &cache.hidden[j]);
            let input = if j == 0 { &cache.input } else { &cache.hidden[j - 1] };
            match self.linear_backward(self.layers[j], input, &d, n, &mut grads, j > 0) {
                Some(dx) => d = dx,
                None => break,
            }
        }
        grads
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn partition(&self) -> ParameterPartition {
        let (disp_out, color_out) = output_layers(self.arch);
        let start_color = self.layers[disp_out + 1].offset;
        ParameterPartition {
            geometry: vec![0..self.layers[disp_out].end()],
            color: vec![start_color..self.layers[color_out].end()],
        }
    }
}

/// Per-vertex style values optimized directly, without a network.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectStyle {
    n: usize,
    /// Raw colors (`n x 3`) followed by raw displacements (`n`).
    params: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DirectCache {
    n: usize,
}

impl DirectStyle {
    pub fn new(vertex_count: usize) -> Self {
        Self { n: vertex_count, params: vec![0.0; vertex_count * 4] }
    }

    pub fn from_params(vertex_count: usize, params: Vec<f64>) -> Result<Self> {
        check_len("direct style parameters", vertex_count * 4, params.len())?;
        Ok(Self { n: vertex_count, params })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }
}

impl StyleModel for DirectStyle {
    type Cache = DirectCache;

    fn forward(&self, points: &[V3]) -> Result<(StyleOutput, DirectCache)> {
        check_len("points", self.n, points.len())?;
        let (c, d) = self.params.split_at(self.n * 3);
        let colors = c
            .chunks_exact(3)
            .map(|r| [0.5 + 0.5 * squash(r[0]).0, 0.5 + 0.5 * squash(r[1]).0, 0.5 + 0.5 * squash(r[2]).0])
            .collect();
        let displacements = d.iter().map(|&r| DISPLACEMENT_SCALE * squash(r).0).collect();
        Ok((StyleOutput { colors, displacements }, DirectCache { n: self.n }))
    }

    fn backward(&self, cache: &DirectCache, d_colors: Option<&[V3]>, d_displacements: Option<&[f64]>) -> Vec<f64> {
        let mut grads = vec![0.0; cache.n * 4];
        let (gc, gd) = grads.split_at_mut(cache.n * 3);
        let (c, d) = self.params.split_at(cache.n * 3);
        if let Some(dc) = d_colors {
            for ((g, &r), &up) in gc.iter_mut().zip(c).zip(dc.iter().flatten()) {
                *g = up * 0.5 * squash(r).1;
            }
        }
        if let Some(dd) = d_displacements {
            for ((g, &r), &up) in gd.iter_mut().zip(d).zip(dd) {
                *g = up * DISPLACEMENT_SCALE * squash(r).1;
            }
        }
        grads
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn partition(&self) -> ParameterPartition {
        ParameterPartition { geometry: vec![self.n * 3..self.n * 4], color: vec![0..self.n * 3] }
    }
}

/// Either kind of style model, for code that picks one at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Field(StyleField),
    Direct(DirectStyle),
}

#[derive(Debug, Clone)]
pub enum ModelCache {
    Field(FieldCache),
    Direct(DirectCache),
}

impl StyleModel for Model {
    type Cache = ModelCache;

    fn forward(&self, points: &[V3]) -> Result<(StyleOutput, ModelCache)> {
        Ok(match self {
            Model::Field(m) => {
                let (o, c) = m.forward(points)?;
                (o, ModelCache::Field(c))
            }
            Model::Direct(m) => {
                let (o, c) = m.forward(points)?;
                (o, ModelCache::Direct(c))
            }
        })
    }

    fn backward(&self, cache: &ModelCache, d_colors: Option<&[V3]>, d_displacements: Option<&[f64]>) -> Vec<f64> {
        match (self, cache) {
            (Model::Field(m), ModelCache::Field(c)) => m.backward(c, d_colors, d_displacements),
            (Model::Direct(m), ModelCache::Direct(c)) => m.backward(c, d_colors, d_displacements),
            _ => panic!("cache from a different model kind"),
        }
    }

    fn params(&self) -> &[f64] {
        match self {
            Model::Field(m) => m.params(),
            Model::Direct(m) => m.params(),
        }
    }

    fn params_mut(&mut self) -> &mut [f64] {
        match self {
            Model::Field(m) => m.params_mut(),
            Model::Direct(m) => m.params_mut(),
        }
    }

    fn partition(&self) -> ParameterPartition {
        match self {
            Model::Field(m) => m.partition(),
            Model::Direct(m) => m.partition(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Architecture {
        Architecture { width: 16, trunk_depth: 4, branch_depth: 2 }
    }

    fn points(n: usize, seed: u64) -> Vec<V3> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]).collect()
    }

    #[test]
    fn origin_encodes_to_cos_one_sin_zero() {
        let f = FourierFeatures::sample(&EncodingConfig::default()).unwrap();
        let e = f.encode(&[[0.0; 3]]);
        assert_eq!(e.len(), 256);
        assert!(e[..128].iter().all(|&v| v == 1.0));
        assert!(e[128..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hand_evaluated_encoding() {
        let f = FourierFeatures::from_matrix(vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], &[], true);
        let e = f.encode(&[[0.25, 0.0, 0.0]]);
        let want = [0.0, 1.0, 1.0, 0.0];
        for (a, b) in e.iter().zip(want) {
            assert!((a - b).abs() < 1e-15, "{e:?}");
        }
    }

    #[test]
    fn symmetry_fold_is_bit_exact() {
        let cfg = EncodingConfig { symmetry: vec![Axis::Z], ..Default::default() };
        let f = FourierFeatures::sample(&cfg).unwrap();
        assert_eq!(f.encode(&[[0.1, -0.2, 0.3]]), f.encode(&[[0.1, -0.2, -0.3]]));
    }

    #[test]
    fn invalid_encoding_rejected() {
        assert!(EncodingConfig { num_frequencies: 0, ..Default::default() }.validate().is_err());
        assert!(EncodingConfig { sigma: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn fresh_field_is_identity_style() {
        let field = StyleField::new(EncodingConfig::default()).unwrap();
        let out = field.evaluate(&points(50, 1)).unwrap();
        assert!(out.colors.iter().all(|c| *c == [0.5; 3]));
        assert!(out.displacements.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn partition_is_disjoint_and_exhaustive() {
        let field = StyleField::with_architecture(EncodingConfig::default(), small()).unwrap();
        let p = field.partition();
        for i in 0..field.params().len() {
            assert!(p.is_color(i) ^ p.is_geometry(i), "index {i}");
        }
        let total = p.color_indices().count() + p.geometry_indices().count();
        assert_eq!(total, field.params().len());
    }

    #[test]
    fn outputs_stay_strictly_bounded_for_huge_weights() {
        let mut field = StyleField::with_architecture(EncodingConfig::default(), small()).unwrap();
        for (i, w) in field.params_mut().iter_mut().enumerate() {
            *w = if i % 2 == 0 { 1e3 } else { -1e3 };
        }
        let out = field.evaluate(&points(64, 2)).unwrap();
        assert!(out.within_bounds());
    }

    #[test]
    fn color_gradient_skipped_when_absent() {
        let mut field = StyleField::with_architecture(EncodingConfig::default(), small()).unwrap();
        let mut rng = rng_from_seed(9);
        for w in field.params_mut() {
            *w += rng.random_range(-0.1..0.1);
        }
        let pts = points(8, 3);
        let (_, cache) = field.forward(&pts).unwrap();
        let g = field.backward(&cache, None, Some(&[1.0; 8]));
        let part = field.partition();
        assert!(part.color_indices().all(|i| g[i] == 0.0));
        assert!(part.geometry_indices().any(|i| g[i] != 0.0));
    }

    #[test]
    fn direct_style_starts_at_identity() {
        let d = DirectStyle::new(5);
        let out = d.evaluate(&[[0.0; 3]; 5]).unwrap();
        assert_eq!(out, StyleOutput::identity(5));
        assert!(d.evaluate(&[[0.0; 3]; 4]).is_err());
    }
}
