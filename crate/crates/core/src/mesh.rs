//! Triangle meshes: validation, normals, normalization, subdivision,
//! application of style outputs and topology statistics.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::field::StyleOutput;
use crate::math::{add, cross, norm, scale, sub, V3};

/// Gray used for uncolored meshes and for the displacement-only mesh.
pub const GRAY: [f64; 3] = [0.5, 0.5, 0.5];

/// Fixed content mesh. Immutable after construction; normals are derived.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<V3>,
    faces: Vec<[u32; 3]>,
    normals: Vec<V3>,
    colors: Option<Vec<V3>>,
}

impl Mesh {
    /// Builds a triangle mesh, validating indices and computing
    /// area-weighted vertex normals.
    pub fn new(vertices: Vec<V3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &i in f {
                if i as usize >= n {
                    return Err(Error::IndexOutOfRange { face: fi, index: i as usize, count: n });
                }
            }
        }
        let normals = vertex_normals(&vertices, &faces);
        Ok(Self { vertices, faces, normals, colors: None })
    }

    /// Builds a mesh from polygons, fan-triangulating faces with more than
    /// three corners around their first vertex.
    pub fn from_polygons(vertices: Vec<V3>, polygons: &[Vec<usize>]) -> Result<Self> {
        let n = vertices.len();
        let mut faces = Vec::with_capacity(polygons.len());
        for (pi, poly) in polygons.iter().enumerate() {
            if poly.len() < 3 {
                return Err(Error::ShortFace { face: pi, len: poly.len() });
            }
            if let Some(&bad) = poly.iter().find(|&&i| i >= n) {
                return Err(Error::IndexOutOfRange { face: pi, index: bad, count: n });
            }
            for k in 1..poly.len() - 1 {
                faces.push([poly[0] as u32, poly[k] as u32, poly[k + 1] as u32]);
            }
        }
        Self::new(vertices, faces)
    }

    pub fn with_colors(mut self, colors: Vec<V3>) -> Result<Self> {
        check_len("vertex colors", self.vertices.len(), colors.len())?;
        self.colors = Some(colors);
        Ok(self)
    }

    pub fn without_colors(mut self) -> Self {
        self.colors = None;
        self
    }

    pub fn vertices(&self) -> &[V3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn normals(&self) -> &[V3] {
        &self.normals
    }

    pub fn colors(&self) -> Option<&[V3]> {
        self.colors.as_deref()
    }

    /// Vertex colors, or uniform gray when the mesh carries none.
    pub fn colors_or_gray(&self) -> Vec<V3> {
        match &self.colors {
            Some(c) => c.clone(),
            None => vec![GRAY; self.vertices.len()],
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Axis-aligned bounds `(min, max)`.
    pub fn bounding_box(&self) -> (V3, V3) {
        bounds(&self.vertices)
    }

    /// Center of the bounding box; the camera target for every view.
    pub fn centroid(&self) -> V3 {
        let (lo, hi) = self.bounding_box();
        scale(add(lo, hi), 0.5)
    }

    pub fn surface_area(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i as usize]);
                0.5 * norm(cross(sub(b, a), sub(c, a)))
            })
            .sum()
    }

    /// Centers the mesh at the origin and scales it uniformly so that its
    /// longest bounding-box side is 1.
    pub fn normalize_to_unit_box(&self) -> Normalized {
        let (lo, hi) = self.bounding_box();
        let center = scale(add(lo, hi), 0.5);
        let extent = (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
        let degenerate = !(extent > 0.0) || !extent.is_finite();
        let s = if degenerate { 1.0 } else { 1.0 / extent };
        let vertices: Vec<V3> = self.vertices.iter().map(|&v| scale(sub(v, center), s)).collect();
        let mesh = Mesh {
            normals: vertex_normals(&vertices, &self.faces),
            vertices,
            faces: self.faces.clone(),
            colors: self.colors.clone(),
        };
        Normalized { mesh, center, scale: s, degenerate }
    }

    /// Inserts one vertex at the barycenter of every face and splits the face
    /// into three children with the parent's orientation.
    pub fn subdivide_barycentric(&self) -> Mesh {
        let n = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.reserve(self.faces.len());
        let mut colors = self.colors.clone();
        let mut faces = Vec::with_capacity(self.faces.len() * 3);
        for (fi, f) in self.faces.iter().enumerate() {
            let [a, b, c] = *f;
            let [pa, pb, pc] = f.map(|i| self.vertices[i as usize]);
            vertices.push(barycenter(pa, pb, pc));
            if let Some(cols) = colors.as_mut() {
                let [ca, cb, cc] = f.map(|i| cols[i as usize]);
                cols.push(barycenter(ca, cb, cc));
            }
            let m = (n + fi) as u32;
            faces.push([a, b, m]);
            faces.push([b, c, m]);
            faces.push([c, a, m]);
        }
        Mesh { normals: vertex_normals(&vertices, &faces), vertices, faces, colors }
    }

    /// Displaced vertex positions `v + d * n` for a displacement per vertex.
    pub fn displaced_positions(&self, displacements: &[f64]) -> Vec<V3> {
        self.vertices
            .iter()
            .zip(&self.normals)
            .zip(displacements)
            .map(|((&v, &n), &d)| add(v, scale(n, d)))
            .collect()
    }

    /// Applies a style: every vertex moves by `d_p` along its normal and is
    /// colored by `c_p` (or gray when `colored` is false).
    pub fn apply_style(&self, style: &StyleOutput, colored: bool) -> Result<Mesh> {
        check_len("style entries", self.vertices.len(), style.len())?;
        let vertices = self.displaced_positions(&style.displacements);
        let colors = if colored {
            style.colors.clone()
        } else {
            vec![GRAY; vertices.len()]
        };
        Ok(Mesh {
            normals: vertex_normals(&vertices, &self.faces),
            vertices,
            faces: self.faces.clone(),
            colors: Some(colors),
        })
    }

    /// Edge and vertex manifoldness statistics.
    pub fn compute_stats(&self) -> MeshStats {
        let mut edge_faces: BTreeMap<(u32, u32), usize> = BTreeMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if a == b {
                    continue;
                }
                *edge_faces.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let edges = edge_faces.len();
        let nonmanifold_edges = edge_faces.values().filter(|&&c| c > 2).count();
        let boundary_edges = edge_faces.values().filter(|&&c| c == 1).count();

        // Link of each vertex: the edges opposite it in its incident faces.
        let n = self.vertices.len();
        let mut links: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
        for f in &self.faces {
            for k in 0..3 {
                let v = f[k];
                let (a, b) = (f[(k + 1) % 3], f[(k + 2) % 3]);
                if a == v || b == v || a == b {
                    continue;
                }
                links[v as usize].push((a, b));
            }
        }
        let nonmanifold_vertices = links.iter().filter(|l| !l.is_empty() && !is_disk_link(l)).count();

        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        MeshStats {
            face_count: self.faces.len(),
            vertex_count: n,
            edge_count: edges,
            nonmanifold_edge_fraction: ratio(nonmanifold_edges, edges),
            nonmanifold_vertex_fraction: ratio(nonmanifold_vertices, n),
            boundary_edge_fraction: ratio(boundary_edges, edges),
        }
    }
}

/// Result of [`Mesh::normalize_to_unit_box`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub mesh: Mesh,
    pub center: V3,
    pub scale: f64,
    /// Set when all vertices coincide; the mesh is only centered.
    pub degenerate: bool,
}

impl Normalized {
    /// Maps points from the normalized frame back to the source frame.
    pub fn restore(&self, points: &[V3]) -> Vec<V3> {
        points.iter().map(|&p| add(scale(p, 1.0 / self.scale), self.center)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub face_count: usize,
    pub vertex_count: usize,
    pub edge_count: usize,
    pub nonmanifold_edge_fraction: f64,
    pub nonmanifold_vertex_fraction: f64,
    pub boundary_edge_fraction: f64,
}

/// Linear interpolation `(1 - alpha) * a + alpha * b` of colors and
/// displacements.
fn barycenter(a: V3, b: V3, c: V3) -> V3 {
    [0, 1, 2].map(|k| (a[k] + b[k] + c[k]) / 3.0)
}

/// Latitude-longitude sphere with `2 * slices * (stacks - 1)` faces.
pub fn uv_sphere(radius: f64, slices: usize, stacks: usize) -> Result<Mesh> {
    if slices < 3 || stacks < 2 {
        return Err(Error::InvalidArgument("uv sphere needs slices >= 3 and stacks >= 2".into()));
    }
    use core::f64::consts::PI;
    let mut vertices = vec![[0.0, radius, 0.0]];
    for i in 1..stacks {
        let theta = PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let phi = 2.0 * PI * j as f64 / slices as f64;
            let (st, ct) = (libm::sin(theta), libm::cos(theta));
            vertices.push([radius * st * libm::cos(phi), radius * ct, radius * st * libm::sin(phi)]);
        }
    }
    vertices.push([0.0, -radius, 0.0]);
    let bottom = (vertices.len() - 1) as u32;
    let ring = |i: usize, j: usize| (1 + (i - 1) * slices + j % slices) as u32;
    let mut faces = Vec::with_capacity(2 * slices * (stacks - 1));
    for j in 0..slices {
        faces.push([0, ring(1, j + 1), ring(1, j)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j + 1), ring(i + 1, j));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    for j in 0..slices {
        faces.push([ring(stacks - 1, j), ring(stacks - 1, j + 1), bottom]);
    }
    Mesh::new(vertices, faces)
}

pub fn morph_styles(a: &StyleOutput, b: &StyleOutput, alpha: f64) -> Result<StyleOutput> {
    check_len("morph inputs", a.len(), b.len())?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(alloc::format!("alpha {alpha} outside [0, 1]")));
    }
    let lerp = |x: f64, y: f64| {
        if alpha == 0.0 {
            x
        } else if alpha == 1.0 {
            y
        } else {
            (1.0 - alpha) * x + alpha * y
        }
    };
    let colors = a
        .colors
        .iter()
        .zip(&b.colors)
        .map(|(ca, cb)| [lerp(ca[0], cb[0]), lerp(ca[1], cb[1]), lerp(ca[2], cb[2])])
        .collect();
    let displacements = a.displacements.iter().zip(&b.displacements).map(|(&x, &y)| lerp(x, y)).collect();
    Ok(StyleOutput { colors, displacements })
}

pub(crate) fn bounds(points: &[V3]) -> (V3, V3) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

/// Area-weighted vertex normals. Zero-area faces contribute nothing;
/// vertices whose weighted sum vanishes fall back to +Z.
pub fn vertex_normals(vertices: &[V3], faces: &[[u32; 3]]) -> Vec<V3> {
    let mut acc = vec![[0.0; 3]; vertices.len()];
    for f in faces {
        let [a, b, c] = f.map(|i| vertices[i as usize]);
        // |cross| is twice the area, so the raw cross product is area-weighted
        let n = cross(sub(b, a), sub(c, a));
        for &i in f {
            acc[i as usize] = add(acc[i as usize], n);
        }
    }
    acc.into_iter()
        .map(|n| {
            let len = norm(n);
            if len > 1e-300 && len.is_finite() {
                scale(n, 1.0 / len)
            } else {
                [0.0, 0.0, 1.0]
            }
        })
        .collect()
}

/// A vertex link is a disk (cycle) or half-disk (path) when it is connected
/// and every link vertex has degree at most two.
fn is_disk_link(link: &[(u32, u32)]) -> bool {
    let mut adj: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &(a, b) in link {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    if adj.values().any(|nb| nb.len() > 2) {
        return false;
    }
    // connectivity
    let start = *adj.keys().next().expect("non-empty link");
    let mut seen = alloc::collections::BTreeSet::new();
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        if seen.insert(v) {
            stack.extend(adj[&v].iter().copied());
        }
    }
    seen.len() == adj.len()
}
