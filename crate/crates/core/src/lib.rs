//! Neural style fields over fixed triangle meshes.
//!
//! A style field maps every vertex of a content mesh to an RGB color and a
//! bounded displacement along the vertex normal. The field is optimized so
//! that differentiably rendered, augmented views of the stylized mesh move
//! towards a target embedding (text, image or another mesh).
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. Everything here is pure computation; file formats, checkpoints and
//! the command line live in the `meshstyle` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod augment;
pub mod camera;
pub mod embedding;
pub mod error;
pub mod field;
pub mod image;
mod linalg;
mod math;
pub mod mesh;
pub mod objective;
pub mod optim;
pub mod render;
pub mod train;

pub use augment::{AugmentConfig, Augmentation};
pub use camera::{AnchorSelection, CameraPose, ViewSamplerConfig};
pub use embedding::{cosine_sim, resolve_target, Embedder, Embedding, MockEmbedder, PreparedTarget, StyleTarget, TargetPart};
pub use error::{Error, Result};
pub use field::{
    Architecture, Axis, DirectStyle, EncodingConfig, Model, ParameterPartition, StyleField, StyleModel, StyleOutput,
};
pub use image::Image;
pub use mesh::{Mesh, MeshStats};
pub use objective::{Evaluation, LossBreakdown, LossOptions, Objective, StyleMode, TermSims};
pub use optim::{Adam, StepDecay};
pub use render::{Background, Lighting, RenderConfig};
pub use train::{IterationRecord, TrainConfig, TrainObserver, TrainReport, Trainer};

/// Seeds a deterministic stream from a base seed and a stream label.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic random generator used throughout the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the crate RNG from a seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
