//! Artifact writing: JSON with 17-significant-digit floats (round-trip
//! exact), flat CSV views, and the run manifest. The manifest captures the
//! config hash and every resolved default so artifacts are self-describing;
//! the wall-clock stamp lives in a separate file so repeated runs stay
//! byte-identical.

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W: std::io::Write + ?Sized>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: std::io::Write + ?Sized>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize with every float at 17 significant digits.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf)?)
}

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)
            .with_context(|| format!("creating output dir {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write_text(name, &to_json_string(value)?)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.root.join(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Write `manifest.json` (config hash, version, resolved config, file
    /// list) plus the isolated timestamp file.
    pub fn finalize(mut self, config_text: &str, resolved: &serde_json::Value) -> Result<()> {
        let mut hasher = Sha256::new();
        hasher.update(config_text.as_bytes());
        let digest = hasher.finalize();
        let hash = digest.iter().map(|b| format!("{b:02x}")).collect::<String>();
        let mut outputs = self.written.clone();
        outputs.sort();
        let manifest = serde_json::json!({
            "config_sha256": hash,
            "engine_version": env!("CARGO_PKG_VERSION"),
            "resolved_config": resolved,
            "outputs": outputs,
        });
        self.write_text("manifest.json", &to_json_string(&manifest)?)?;
        let stamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs().to_string())
            .unwrap_or_default();
        // Not tracked in the manifest: keeps artifact bytes reproducible.
        std::fs::write(self.root.join("run_stamp.txt"), stamp)?;
        Ok(())
    }
}

/// Angles of every run and snapshot as little-endian f64, run-major.
pub fn snapshots_to_bytes(runs: &[clmf::particle::RunRecord]) -> Vec<u8> {
    let mut bytes = Vec::new();
    for run in runs {
        for snapshot in &run.snapshots {
            for &angle in snapshot {
                bytes.extend_from_slice(&angle.to_le_bytes());
            }
        }
    }
    bytes
}

/// CSV of empirical estimates: `n_1,…,n_k,t,mean_re,mean_im,stderr,n_samples`.
pub fn estimates_csv(estimates: &[clmf::particle::EmpiricalEstimate], k: usize) -> String {
    let mut out = String::new();
    for i in 1..=k {
        out.push_str(&format!("n_{i},"));
    }
    out.push_str("t,mean_re,mean_im,stderr,n_samples\n");
    for est in estimates {
        for n in est.index.entries() {
            out.push_str(&format!("{n},"));
        }
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            clmf::spectral::fmt_float(est.t),
            clmf::spectral::fmt_float(est.mean_re),
            clmf::spectral::fmt_float(est.mean_im),
            clmf::spectral::fmt_float(est.std_error),
            est.samples
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        let json = to_json_string(&serde_json::json!({"x": 0.1})).unwrap();
        assert_eq!(json, "{\"x\":1.0000000000000001e-1}");
        let back: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), 0.1);
    }
}
