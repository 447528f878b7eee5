//! Discovery of the pretrained image/text encoder.
//!
//! This build links no inference backend, so discovery always ends in a
//! capability error naming what was asked for. It never falls back to the
//! mock.

use std::path::Path;

use meshstyle_core::Embedder;

use crate::error::{Error, Result};

/// Which backends were compiled in.
pub fn available_backends() -> &'static [&'static str] {
    &[]
}

/// Returns a ready embedder for `model` with weights at `weights`, or a
/// capability error explaining why none is available.
pub fn discover(model: &str, weights: Option<&Path>) -> Result<Box<dyn Embedder>> {
    let reason = match weights {
        None => format!("pretrained encoder '{model}' requested but no weights path was configured (set clip_weights)"),
        Some(p) if !p.exists() => format!("pretrained encoder '{model}': weights not found at {}", p.display()),
        Some(p) => format!(
            "pretrained encoder '{model}': weights at {} but this build has no inference backend; use --embedder mock",
            p.display()
        ),
    };
    Err(Error::Core(meshstyle_core::Error::Capability(reason)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::EXIT_CAPABILITY;

    #[test]
    fn discovery_reports_capability() {
        for w in [None, Some(Path::new("/nonexistent/weights.bin")), Some(Path::new("."))] {
            let err = discover("ViT-B/32", w).err().expect("no backend");
            assert_eq!(err.exit_code(), EXIT_CAPABILITY);
        }
        assert!(available_backends().is_empty());
    }
}
