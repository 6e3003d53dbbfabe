//! Atomic artifact writing and the run manifest.
//!
//! Every file is written to a temporary sibling and renamed into place; the
//! manifest lists each produced file with its SHA-256 and embeds the resolved
//! configuration, so a run can be replayed from the manifest alone.  Nothing
//! volatile (timestamps, hostnames) is recorded: identical configurations
//! produce byte-identical artifacts.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// One pass/fail row of a command's claim checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClaimRow {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    /// Lower/upper bounds where applicable (nulls when open).
    pub bound_lo: Option<f64>,
    pub bound_hi: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    pub files: Vec<FileEntry>,
    pub claims: Vec<ClaimRow>,
    pub pass: bool,
}

pub struct ArtifactWriter {
    out_dir: PathBuf,
    files: Vec<FileEntry>,
}

impl ArtifactWriter {
    pub fn new(out_dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(out_dir)?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Write bytes atomically (temp file + rename) and record the hash.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
        let path = self.out_dir.join(name);
        let tmp = self.out_dir.join(format!("{name}.tmp-{}", std::process::id()));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, &path)?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Finish the run: write the manifest itself (also atomically).
    pub fn finish(
        mut self,
        command: &str,
        config: serde_json::Value,
        claims: Vec<ClaimRow>,
    ) -> std::io::Result<(Manifest, PathBuf)> {
        let pass = claims.iter().all(|c| c.passed);
        let manifest = Manifest {
            command: command.to_string(),
            config,
            files: std::mem::take(&mut self.files),
            claims,
            pass,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable");
        text.push('\n');
        let path = self.out_dir.join("manifest.json");
        let tmp = self
            .out_dir
            .join(format!("manifest.json.tmp-{}", std::process::id()));
        fs::write(&tmp, text.as_bytes())?;
        fs::rename(&tmp, &path)?;
        Ok((manifest, path))
    }
}

/// Fixed-width claim table for the `report` command.
pub fn render_claims_table(manifest: &Manifest) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "command: {}    overall: {}\n",
        manifest.command,
        if manifest.pass { "PASS" } else { "FAIL" }
    ));
    out.push_str(&format!(
        "{:<44} {:>14} {:>14} {:>14}  {}\n",
        "claim", "observed", "lower", "upper", "verdict"
    ));
    let fmt = |v: Option<f64>| -> String {
        match v {
            Some(x) if x.is_finite() => format!("{x:.6e}"),
            Some(x) if x == f64::INFINITY => "+inf".into(),
            Some(x) if x == f64::NEG_INFINITY => "-inf".into(),
            _ => "-".into(),
        }
    };
    for claim in &manifest.claims {
        out.push_str(&format!(
            "{:<44} {:>14} {:>14} {:>14}  {}\n",
            claim.name,
            format!("{:.6e}", claim.observed),
            fmt(claim.bound_lo),
            fmt(claim.bound_hi),
            if claim.passed { "PASS" } else { "FAIL" }
        ));
    }
    let total = manifest.claims.len();
    let passed = manifest.claims.iter().filter(|c| c.passed).count();
    out.push_str(&format!("{passed}/{total} claims pass\n"));
    out
}
