//! Binary checkpoints: a JSON header followed by little-endian `f64` data.
//!
//! Layout: 8-byte magic, `u64` header length, the header, then the frequency
//! matrix (rows x 3) and the flat parameter vector. Values are stored bit for
//! bit, so a reloaded model evaluates identically.

use std::fs;
use std::path::Path;

use meshstyle_core::{Architecture, CameraPose, DirectStyle, EncodingConfig, Mesh, Model, StyleField, StyleMode, StyleModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"MSTYCKP1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Field,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub kind: ModelKind,
    pub encoding: Option<EncodingConfig>,
    pub architecture: Option<Architecture>,
    pub vertex_count: usize,
    /// Hash of the prepared (normalized, subdivided) content mesh.
    pub mesh_hash: String,
    pub subdivisions: usize,
    pub mode: StyleMode,
    pub iteration: usize,
    /// Written just before a non-finite abort.
    pub diagnostic: bool,
    pub anchor: Option<CameraPose>,
    pub frequency_rows: usize,
    pub param_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub model: Model,
}

/// Context recorded alongside the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointMeta {
    pub mesh_hash: String,
    pub vertex_count: usize,
    pub subdivisions: usize,
    pub mode: StyleMode,
    pub iteration: usize,
    pub diagnostic: bool,
    pub anchor: Option<CameraPose>,
}

impl Checkpoint {
    pub fn new(model: Model, meta: CheckpointMeta) -> Self {
        let (kind, encoding, architecture, frequency_rows) = match &model {
            Model::Field(f) => (ModelKind::Field, Some(f.encoding().clone()), Some(f.architecture()), f.features().matrix().len()),
            Model::Direct(_) => (ModelKind::Direct, None, None, 0),
        };
        let header = CheckpointHeader {
            kind,
            encoding,
            architecture,
            vertex_count: meta.vertex_count,
            mesh_hash: meta.mesh_hash,
            subdivisions: meta.subdivisions,
            mode: meta.mode,
            iteration: meta.iteration,
            diagnostic: meta.diagnostic,
            anchor: meta.anchor,
            frequency_rows,
            param_count: model.params().len(),
        };
        Self { header, model }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header).expect("header serializes");
        let mut out = Vec::with_capacity(16 + header.len() + 8 * (self.header.frequency_rows * 3 + self.header.param_count));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        if let Model::Field(f) = &self.model {
            for row in f.features().matrix() {
                for v in row {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        for v in self.model.params() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |m: &str| Error::Format { path: path.to_path_buf(), line: 0, message: m.to_string() };
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(16..16 + hlen).ok_or_else(|| bad("truncated header"))?;
        let header: CheckpointHeader = serde_json::from_slice(body).map_err(|e| bad(&format!("header: {e}")))?;
        let data = &bytes[16 + hlen..];
        let expected = 8 * (header.frequency_rows * 3 + header.param_count);
        if data.len() != expected {
            return Err(bad(&format!("payload has {} bytes, expected {expected}", data.len())));
        }
        let mut values = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let frequencies: Vec<[f64; 3]> = (0..header.frequency_rows)
            .map(|_| [values.next().unwrap(), values.next().unwrap(), values.next().unwrap()])
            .collect();
        let params: Vec<f64> = values.collect();
        let model = match header.kind {
            ModelKind::Field => {
                let encoding = header.encoding.clone().ok_or_else(|| bad("field checkpoint without encoding"))?;
                let arch = header.architecture.ok_or_else(|| bad("field checkpoint without architecture"))?;
                Model::Field(StyleField::from_parts(encoding, frequencies, arch, params)?)
            }
            ModelKind::Direct => Model::Direct(DirectStyle::from_params(header.vertex_count, params)?),
        };
        Ok(Self { header, model })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

/// SHA-256 over the vertex positions (quantized to a 1e-9 grid) and faces.
pub fn mesh_hash(mesh: &Mesh) -> String {
    let mut h = Sha256::new();
    h.update((mesh.vertex_count() as u64).to_le_bytes());
    h.update((mesh.face_count() as u64).to_le_bytes());
    for v in mesh.vertices() {
        for c in v {
            h.update(((c * 1e9).round() as i64).to_le_bytes());
        }
    }
    for f in mesh.faces() {
        for i in f {
            h.update(i.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// SHA-256 of a file's bytes.
pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
