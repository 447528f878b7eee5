//! Soft differentiable rasterizer.
//!
//! Every face contributes a fragment to each pixel near its screen-space
//! footprint. Coverage is a sigmoid of the signed squared distance to the
//! projected triangle, fragment colors are barycentric interpolations of
//! vertex colors under Lambertian shading, fragments are blended with a
//! depth softmax, and the result is alpha-composited over the background.
//! The map from vertex positions and colors to pixels is piecewise smooth,
//! and [`render_backward`] returns its exact vector-Jacobian product.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::camera::CameraPose;
use crate::error::{check_len, Error, Result};
use crate::field::StyleOutput;
use crate::image::Image;
use crate::math::{add, cross, dot, exp, norm, scale, sigmoid, sqrt, sub, V3};
use crate::mesh::{Mesh, GRAY};

/// Fragments further than `sqrt(COVERAGE_CUTOFF * sharpness)` pixels outside
/// a triangle are dropped; their coverage is below `exp(-40)`.
const COVERAGE_CUTOFF: f64 = 40.0;

/// Faces with a vertex closer than this to the eye are not rasterized.
const NEAR_PLANE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lighting {
    /// Unit direction towards the light in camera coordinates
    /// (x right, y up, z forward).
    pub direction: V3,
    /// Fraction of shading that is view-independent.
    pub ambient: f64,
}

impl Default for Lighting {
    /// Light 45 degrees above the viewing direction, 0.4 ambient.
    fn default() -> Self {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        Self { direction: [0.0, h, -h], ambient: 0.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Background {
    Constant([f64; 3]),
    /// Uniform gray level drawn per render.
    RandomGray { low: f64, high: f64 },
}

impl Background {
    pub fn draw(&self, rng: &mut crate::Rng) -> [f64; 3] {
        match *self {
            Background::Constant(c) => c,
            Background::RandomGray { low, high } => {
                let g = if high > low { rng.random_range(low..high) } else { low };
                [g; 3]
            }
        }
    }

    /// Deterministic stand-in: the constant, or the middle of the gray range.
    pub fn neutral(&self) -> [f64; 3] {
        match *self {
            Background::Constant(c) => c,
            Background::RandomGray { low, high } => [0.5 * (low + high); 3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    pub background: Background,
    pub lighting: Lighting,
    /// Coverage transition width, in squared pixels.
    pub coverage_sharpness: f64,
    /// Depth softmax temperature, in model units.
    pub depth_softness: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self::square(224)
    }
}

impl RenderConfig {
    pub const MIN_RESOLUTION: usize = 32;

    pub fn square(resolution: usize) -> Self {
        Self {
            width: resolution,
            height: resolution,
            background: Background::RandomGray { low: 0.4, high: 0.8 },
            lighting: Lighting::default(),
            coverage_sharpness: 0.5,
            depth_softness: 0.02,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < Self::MIN_RESOLUTION || self.height < Self::MIN_RESOLUTION {
            return Err(Error::InvalidArgument(alloc::format!(
                "render resolution {}x{} below the minimum of {}",
                self.width,
                self.height,
                Self::MIN_RESOLUTION
            )));
        }
        if !(self.coverage_sharpness > 0.0) || !(self.depth_softness > 0.0) {
            return Err(Error::InvalidArgument("render softness parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Geometry and colors to rasterize.
#[derive(Debug, Clone, Copy)]
pub struct Scene<'a> {
    pub positions: &'a [V3],
    pub colors: &'a [V3],
    pub faces: &'a [[u32; 3]],
}

impl<'a> Scene<'a> {
    pub fn new(positions: &'a [V3], colors: &'a [V3], faces: &'a [[u32; 3]]) -> Result<Self> {
        check_len("scene colors", positions.len(), colors.len())?;
        Ok(Self { positions, colors, faces })
    }
}

#[derive(Debug, Clone, Copy)]
struct Fragment {
    face: u32,
    coverage: f64,
    depth: f64,
    color: V3,
}

/// Output of [`render`], including what [`render_backward`] needs.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub image: Image,
    /// Soft silhouette `1 - prod(1 - coverage)` per pixel.
    pub alpha: Vec<f64>,
    pub background: [f64; 3],
    fragments: Vec<Fragment>,
    /// CSR offsets of each pixel's fragments.
    pixel_start: Vec<u32>,
}

impl Rendered {
    pub fn fragment_count(&self) -> usize {
        self.fragments.len()
    }
}

/// Gradients with respect to the scene inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneGrad {
    pub positions: Vec<V3>,
    pub colors: Option<Vec<V3>>,
}

struct Projector {
    eye: V3,
    right: V3,
    up: V3,
    forward: V3,
    focal: f64,
    cx: f64,
    cy: f64,
}

impl Projector {
    fn new(pose: &CameraPose, width: usize, height: usize) -> Self {
        let (right, up, forward) = pose.basis();
        let focal = height as f64 / (2.0 * crate::math::tan(0.5 * pose.fov_y));
        Self { eye: pose.eye(), right, up, forward, focal, cx: 0.5 * width as f64, cy: 0.5 * height as f64 }
    }

    fn to_camera(&self, p: V3) -> V3 {
        let d = sub(p, self.eye);
        [dot(d, self.right), dot(d, self.up), dot(d, self.forward)]
    }

    fn to_screen(&self, c: V3) -> [f64; 2] {
        [self.cx + self.focal * c[0] / c[2], self.cy - self.focal * c[1] / c[2]]
    }

    /// Pulls a screen-space gradient back to camera coordinates.
    fn screen_vjp(&self, c: V3, g: [f64; 2]) -> V3 {
        let iz = 1.0 / c[2];
        [
            g[0] * self.focal * iz,
            -g[1] * self.focal * iz,
            -g[0] * self.focal * c[0] * iz * iz + g[1] * self.focal * c[1] * iz * iz,
        ]
    }

    fn camera_vjp(&self, g: V3) -> V3 {
        add(add(scale(self.right, g[0]), scale(self.up, g[1])), scale(self.forward, g[2]))
    }
}

/// Per-face data shared by the forward and backward passes.
struct FaceProj {
    verts: [usize; 3],
    cam: [V3; 3],
    screen: [[f64; 2]; 3],
    area2: f64,
    shade: f64,
    /// Oriented (towards the camera) unnormalized normal and its sign.
    normal: V3,
    orient: f64,
}

fn project_faces(scene: &Scene<'_>, proj: &Projector, light: &Lighting) -> Vec<Option<FaceProj>> {
    let cam: Vec<V3> = scene.positions.iter().map(|&p| proj.to_camera(p)).collect();
    scene
        .faces
        .iter()
        .map(|f| {
            let verts = f.map(|i| i as usize);
            let c = verts.map(|i| cam[i]);
            if c.iter().any(|v| !(v[2] > NEAR_PLANE)) {
                return None;
            }
            let screen = c.map(|v| proj.to_screen(v));
            let area2 = cross2(sub2(screen[1], screen[0]), sub2(screen[2], screen[0]));
            if !(area2.abs() > 1e-12) {
                return None;
            }
            let raw = cross(sub(c[1], c[0]), sub(c[2], c[0]));
            let centroid = scale(add(add(c[0], c[1]), c[2]), 1.0 / 3.0);
            let orient = if dot(raw, centroid) > 0.0 { -1.0 } else { 1.0 };
            let normal = scale(raw, orient);
            let len = norm(normal);
            let lambert = if len > 0.0 { (dot(normal, light.direction) / len).max(0.0) } else { 0.0 };
            let shade = light.ambient + (1.0 - light.ambient) * lambert;
            Some(FaceProj { verts, cam: c, screen, area2, shade, normal, orient })
        })
        .collect()
}

#[inline]
fn sub2(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Everything about a pixel-face pair that depends on geometry.
struct Sample {
    w: [f64; 3],
    wn: [f64; 3],
    wsum: f64,
    inside: bool,
    d2: f64,
    edge: usize,
    t: f64,
    q: [f64; 2],
}

fn sample(face: &FaceProj, p: [f64; 2]) -> Sample {
    let s = &face.screen;
    let n0 = cross2(sub2(s[1], p), sub2(s[2], p));
    let n1 = cross2(sub2(s[2], p), sub2(s[0], p));
    let n2 = cross2(sub2(s[0], p), sub2(s[1], p));
    let w = [n0 / face.area2, n1 / face.area2, n2 / face.area2];
    let inside = w.iter().all(|&v| v >= 0.0);
    let m = w.map(|v| v.max(0.0));
    let wsum = m[0] + m[1] + m[2];
    let wn = m.map(|v| v / wsum);

    let mut best = (f64::INFINITY, 0, 0.0, [0.0; 2]);
    for e in 0..3 {
        let a = s[e];
        let b = s[(e + 1) % 3];
        let ab = sub2(b, a);
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let t = if len2 > 0.0 {
            (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
        let d = sub2(p, q);
        let d2 = d[0] * d[0] + d[1] * d[1];
        if d2 < best.0 {
            best = (d2, e, t, q);
        }
    }
    Sample { w, wn, wsum, inside, d2: best.0, edge: best.1, t: best.2, q: best.3 }
}

/// Rasterizes a scene from a camera pose over a given background color.
pub fn render(scene: &Scene<'_>, pose: &CameraPose, cfg: &RenderConfig, background: [f64; 3]) -> Rendered {
    let (w, h) = (cfg.width, cfg.height);
    let proj = Projector::new(pose, w, h);
    let faces = project_faces(scene, &proj, &cfg.lighting);
    let sigma = cfg.coverage_sharpness;
    let margin = sqrt(COVERAGE_CUTOFF * sigma);

    let mut raw: Vec<(u32, Fragment)> = Vec::new();
    for (fi, face) in faces.iter().enumerate() {
        let Some(face) = face else { continue };
        let (x0, x1, y0, y1) = match pixel_window(face, margin, w, h) {
            Some(win) => win,
            None => continue,
        };
        for py in y0..=y1 {
            for px in x0..=x1 {
                let p = [px as f64 + 0.5, py as f64 + 0.5];
                let s = sample(face, p);
                let x = if s.inside { s.d2 / sigma } else { -s.d2 / sigma };
                if x < -COVERAGE_CUTOFF {
                    continue;
                }
                let mut base = [0.0; 3];
                let mut depth = 0.0;
                for k in 0..3 {
                    let c = scene.colors[face.verts[k]];
                    base = add(base, scale(c, s.wn[k]));
                    depth += s.wn[k] * face.cam[k][2];
                }
                raw.push((
                    (py * w + px) as u32,
                    Fragment { face: fi as u32, coverage: sigmoid(x), depth, color: scale(base, face.shade) },
                ));
            }
        }
    }

    // Group fragments by pixel, keeping face order within each pixel.
    let mut pixel_start = vec![0u32; w * h + 1];
    for (p, _) in &raw {
        pixel_start[*p as usize + 1] += 1;
    }
    for i in 0..w * h {
        pixel_start[i + 1] += pixel_start[i];
    }
    let mut cursor = pixel_start.clone();
    let mut fragments = vec![Fragment { face: 0, coverage: 0.0, depth: 0.0, color: [0.0; 3] }; raw.len()];
    for (p, f) in raw {
        let slot = &mut cursor[p as usize];
        fragments[*slot as usize] = f;
        *slot += 1;
    }

    let mut image = Image::filled(w, h, background);
    let mut alpha = vec![0.0; w * h];
    let data = image.data_mut();
    for pix in 0..w * h {
        let frags = &fragments[pixel_start[pix] as usize..pixel_start[pix + 1] as usize];
        if frags.is_empty() {
            continue;
        }
        let agg = aggregate(frags, cfg.depth_softness);
        alpha[pix] = agg.alpha;
        for c in 0..3 {
            data[pix * 3 + c] = agg.alpha * agg.color[c] + (1.0 - agg.alpha) * background[c];
        }
    }
    Rendered { image, alpha, background, fragments, pixel_start }
}

struct Aggregate {
    zmin: f64,
    weight_sum: f64,
    color: V3,
    alpha: f64,
}

fn aggregate(frags: &[Fragment], gamma: f64) -> Aggregate {
    let zmin = frags.iter().map(|f| f.depth).fold(f64::INFINITY, f64::min);
    let mut weight_sum = 0.0;
    let mut color = [0.0; 3];
    let mut transmit = 1.0;
    for f in frags {
        let wgt = f.coverage * exp(-(f.depth - zmin) / gamma);
        weight_sum += wgt;
        color = add(color, scale(f.color, wgt));
        transmit *= 1.0 - f.coverage;
    }
    Aggregate { zmin, weight_sum, color: scale(color, 1.0 / weight_sum), alpha: 1.0 - transmit }
}

fn pixel_window(face: &FaceProj, margin: f64, w: usize, h: usize) -> Option<(usize, usize, usize, usize)> {
    let xs = face.screen.map(|s| s[0]);
    let ys = face.screen.map(|s| s[1]);
    let lo_x = xs.iter().copied().fold(f64::INFINITY, f64::min) - margin - 0.5;
    let hi_x = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + margin - 0.5;
    let lo_y = ys.iter().copied().fold(f64::INFINITY, f64::min) - margin - 0.5;
    let hi_y = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max) + margin - 0.5;
    if hi_x < 0.0 || hi_y < 0.0 || lo_x > (w - 1) as f64 || lo_y > (h - 1) as f64 {
        return None;
    }
    let x0 = libm::ceil(lo_x.max(0.0)) as usize;
    let y0 = libm::ceil(lo_y.max(0.0)) as usize;
    let x1 = (libm::floor(hi_x) as usize).min(w - 1);
    let y1 = (libm::floor(hi_y) as usize).min(h - 1);
    (x0 <= x1 && y0 <= y1).then_some((x0, x1, y0, y1))
}

/// Vector-Jacobian product of [`render`]: gradients of `sum(d_image * image)`
/// with respect to vertex positions and (optionally) vertex colors.
pub fn render_backward(
    scene: &Scene<'_>,
    pose: &CameraPose,
    cfg: &RenderConfig,
    rendered: &Rendered,
    d_image: &Image,
    want_colors: bool,
) -> SceneGrad {
    let (w, h) = (cfg.width, cfg.height);
    assert_eq!((d_image.width(), d_image.height()), (w, h), "gradient image size");
    let proj = Projector::new(pose, w, h);
    let faces = project_faces(scene, &proj, &cfg.lighting);
    let sigma = cfg.coverage_sharpness;
    let gamma = cfg.depth_softness;
    let n = scene.positions.len();

    let mut d_screen = vec![[0.0f64; 2]; n];
    let mut d_cam = vec![[0.0f64; 3]; n];
    let mut d_colors = want_colors.then(|| vec![[0.0f64; 3]; n]);
    let mut d_shade = vec![0.0f64; faces.len()];
    let bg = rendered.background;
    let g_all = d_image.data();

    let mut excl = Vec::new();
    for pix in 0..w * h {
        let frags = &rendered.fragments[rendered.pixel_start[pix] as usize..rendered.pixel_start[pix + 1] as usize];
        let g = [g_all[pix * 3], g_all[pix * 3 + 1], g_all[pix * 3 + 2]];
        if frags.is_empty() || g == [0.0; 3] {
            continue;
        }
        let agg = aggregate(frags, gamma);
        let d_alpha = dot(g, sub(agg.color, bg));
        let d_color = scale(g, agg.alpha);

        // prod_{k != j} (1 - D_k) via prefix/suffix products
        excl.clear();
        let mut prefix = 1.0;
        for f in frags {
            excl.push(prefix);
            prefix *= 1.0 - f.coverage;
        }
        let mut suffix = 1.0;
        for (j, f) in frags.iter().enumerate().rev() {
            excl[j] *= suffix;
            suffix *= 1.0 - f.coverage;
        }

        let px = (pix % w) as f64 + 0.5;
        let py = (pix / w) as f64 + 0.5;
        for (j, f) in frags.iter().enumerate() {
            let e = exp(-(f.depth - agg.zmin) / gamma);
            let wgt = f.coverage * e;
            let d_wgt = dot(d_color, sub(f.color, agg.color)) / agg.weight_sum;
            let d_cov = d_alpha * excl[j] + d_wgt * e;
            let d_depth = -d_wgt * wgt / gamma;
            let d_frag_color = scale(d_color, wgt / agg.weight_sum);

            let face = faces[f.face as usize].as_ref().expect("fragment from a projected face");
            let s = sample(face, [px, py]);
            let cols = face.verts.map(|v| scene.colors[v]);
            let base = add(add(scale(cols[0], s.wn[0]), scale(cols[1], s.wn[1])), scale(cols[2], s.wn[2]));
            d_shade[f.face as usize] += dot(d_frag_color, base);
            let d_base = scale(d_frag_color, face.shade);

            let mut d_wn = [0.0; 3];
            for k in 0..3 {
                d_wn[k] = dot(d_base, cols[k]) + d_depth * face.cam[k][2];
                d_cam[face.verts[k]][2] += d_depth * s.wn[k];
                if let Some(dc) = d_colors.as_mut() {
                    dc[face.verts[k]] = add(dc[face.verts[k]], scale(d_base, s.wn[k]));
                }
            }
            // normalized clamped barycentrics -> raw barycentrics
            let mean = d_wn[0] * s.wn[0] + d_wn[1] * s.wn[1] + d_wn[2] * s.wn[2];
            let mut d_w = [0.0; 3];
            for k in 0..3 {
                if s.w[k] > 0.0 {
                    d_w[k] = (d_wn[k] - mean) / s.wsum;
                }
            }
            // raw barycentrics -> screen vertices
            let gbar = d_w[0] * s.w[0] + d_w[1] * s.w[1] + d_w[2] * s.w[2];
            let coef = d_w.map(|v| (v - gbar) / face.area2);
            let p = [px, py];
            let sc = face.screen;
            for (k, &c) in coef.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                // n_k = cross2(s_{k+1} - p, s_{k+2} - p)
                let (i1, i2) = ((k + 1) % 3, (k + 2) % 3);
                let u = sub2(sc[i1], p);
                let v = sub2(sc[i2], p);
                let a = &mut d_screen[face.verts[i1]];
                a[0] += c * v[1];
                a[1] -= c * v[0];
                let b = &mut d_screen[face.verts[i2]];
                b[0] -= c * u[1];
                b[1] += c * u[0];
            }
            // coverage -> squared distance -> closest edge endpoints
            let dx = d_cov * f.coverage * (1.0 - f.coverage);
            let d_d2 = if s.inside { dx / sigma } else { -dx / sigma };
            if d_d2 != 0.0 {
                let diff = sub2(p, s.q);
                let (ia, ib) = (face.verts[s.edge], face.verts[(s.edge + 1) % 3]);
                let ga = -2.0 * (1.0 - s.t) * d_d2;
                let gb = -2.0 * s.t * d_d2;
                d_screen[ia][0] += ga * diff[0];
                d_screen[ia][1] += ga * diff[1];
                d_screen[ib][0] += gb * diff[0];
                d_screen[ib][1] += gb * diff[1];
            }
        }
    }

    // shading -> camera-space vertex positions
    for (fi, face) in faces.iter().enumerate() {
        let (Some(face), ds) = (face, d_shade[fi]) else { continue };
        if ds == 0.0 {
            continue;
        }
        let light = &cfg.lighting;
        let len = norm(face.normal);
        let nhat = scale(face.normal, 1.0 / len);
        let lambert = dot(nhat, light.direction);
        if !(lambert > 0.0) {
            continue;
        }
        let coeff = ds * (1.0 - light.ambient) / len;
        let gn = scale(sub(light.direction, scale(nhat, lambert)), coeff * face.orient);
        let e1 = sub(face.cam[1], face.cam[0]);
        let e2 = sub(face.cam[2], face.cam[0]);
        let de1 = cross(e2, gn);
        let de2 = cross(gn, e1);
        let [a, b, c] = face.verts;
        d_cam[a] = sub(d_cam[a], add(de1, de2));
        d_cam[b] = add(d_cam[b], de1);
        d_cam[c] = add(d_cam[c], de2);
    }

    let positions = (0..n)
        .map(|i| {
            let c = proj.to_camera(scene.positions[i]);
            let g = add(d_cam[i], proj.screen_vjp(c, d_screen[i]));
            proj.camera_vjp(g)
        })
        .collect();
    SceneGrad { positions, colors: d_colors }
}

/// Renders a mesh with its own colors (gray when it has none).
pub fn render_mesh(mesh: &Mesh, pose: &CameraPose, cfg: &RenderConfig, background: [f64; 3]) -> Rendered {
    let colors = mesh.colors_or_gray();
    let scene = Scene { positions: mesh.vertices(), colors: &colors, faces: mesh.faces() };
    render(&scene, pose, cfg, background)
}

/// Renders the stylized mesh with colors and the same geometry in gray,
/// from one pose over one background.
pub fn render_pair(
    content: &Mesh,
    style: &StyleOutput,
    pose: &CameraPose,
    cfg: &RenderConfig,
    background: [f64; 3],
) -> Result<(Rendered, Rendered)> {
    check_len("style entries", content.vertex_count(), style.len())?;
    let positions = content.displaced_positions(&style.displacements);
    let gray = vec![GRAY; positions.len()];
    let full = render(&Scene { positions: &positions, colors: &style.colors, faces: content.faces() }, pose, cfg, background);
    let displ = render(&Scene { positions: &positions, colors: &gray, faces: content.faces() }, pose, cfg, background);
    Ok((full, displ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn front_pose() -> CameraPose {
        CameraPose::new(0.0, 0.0, 2.0, core::f64::consts::FRAC_PI_3, [0.0; 3])
    }

    fn quad() -> (Vec<V3>, Vec<V3>, Vec<[u32; 3]>) {
        (
            vec![[-0.4, -0.4, 0.0], [0.4, -0.4, 0.0], [0.4, 0.4, 0.0], [-0.4, 0.4, 0.0]],
            vec![[0.9, 0.1, 0.1], [0.1, 0.9, 0.1], [0.1, 0.1, 0.9], [0.7, 0.7, 0.2]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
    }

    #[test]
    fn empty_coverage_is_background() {
        let (p, c, f) = quad();
        let scene = Scene::new(&p, &c, &f).unwrap();
        // camera on the far side looking away from the quad
        let pose = CameraPose::new(core::f64::consts::PI, 0.0, 2.0, 0.3, [0.0, 0.0, 3.0]);
        let r = render(&scene, &pose, &RenderConfig::square(32), [0.2, 0.3, 0.4]);
        assert_eq!(r.image, Image::filled(32, 32, [0.2, 0.3, 0.4]));
        assert!(r.alpha.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn ambient_only_gray_has_exact_interior_color() {
        let (p, _, f) = quad();
        let gray = vec![GRAY; 4];
        let scene = Scene::new(&p, &gray, &f).unwrap();
        let mut cfg = RenderConfig::square(128);
        cfg.lighting.ambient = 1.0;
        let r = render(&scene, &front_pose(), &cfg, [0.0; 3]);
        let covered: Vec<usize> = (0..128 * 128).filter(|&i| r.alpha[i] == 1.0).collect();
        assert!(covered.len() > 100);
        for i in covered {
            for c in 0..3 {
                assert!((r.image.data()[i * 3 + c] - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(RenderConfig::square(31).validate().is_err());
        assert!(RenderConfig::square(32).validate().is_ok());
    }
}
