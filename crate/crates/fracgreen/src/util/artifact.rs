//! Deterministic artifact output: atomic temp-then-rename writes, canonical
//! float formatting, and the config digest embedded in every file.

use crate::error::Result;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

/// Write `bytes` to `path` atomically: write a sibling temp file, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Hex SHA-256 of the canonical JSON encoding of a config value.
pub fn config_digest<T: serde::Serialize>(config: &T) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Canonical float formatting used in all CSV bodies; fixed width keeps
/// reruns byte-identical.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        // normalize -0.0
        return "0".to_string();
    }
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable() {
        #[derive(serde::Serialize)]
        struct C {
            a: u32,
            b: String,
        }
        let c = C {
            a: 3,
            b: "x".into(),
        };
        assert_eq!(config_digest(&c), config_digest(&c));
    }

    #[test]
    fn float_format_canonical() {
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(1.0), fmt_f64(1.0));
    }
}
