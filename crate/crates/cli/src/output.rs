//! CSV serialisation and run manifests.
//!
//! Every CSV starts with a comment line
//! `# ramsq <version> <command> params-sha256=<hex>` followed by a header row.
//! Floats use the shortest decimal that round-trips to the same `f64` (the
//! `csv` crate's `ryu` formatting), so identical parameters give identical
//! bytes. Missing values are empty fields.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const TOOL: &str = "ramsq";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Checksum of the command name and its fully resolved parameters.
pub fn params_digest<P: Serialize>(command: &str, params: &P) -> Result<String, CliError> {
    let canonical = serde_json::to_vec(&serde_json::json!({
        "command": command,
        "params": params,
    }))?;
    Ok(sha256_hex(&canonical))
}

pub fn render_csv<R: Serialize>(command: &str, digest: &str, rows: &[R]) -> Result<Vec<u8>, CliError> {
    let mut buf = format!("# {TOOL} {VERSION} {command} params-sha256={digest}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    Ok(buf)
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<'a, P: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    /// Arguments after the program name; replaying them reproduces the output.
    pub argv: &'a [String],
    pub params: &'a P,
    pub seed: Option<u64>,
    pub params_sha256: &'a str,
    pub outputs: Vec<OutputRecord>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Where a command's bytes go.
pub struct Sink<'a> {
    pub out: Option<&'a Path>,
    pub argv: &'a [String],
}

impl Sink<'_> {
    /// Writes `bytes` to stdout, or to the output path plus its manifest.
    pub fn emit<P: Serialize>(
        &self,
        command: &str,
        params: &P,
        seed: Option<u64>,
        digest: &str,
        bytes: &[u8],
    ) -> Result<(), CliError> {
        let Some(path) = self.out else {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            return Ok(());
        };
        fs::write(path, bytes)?;
        let manifest = RunManifest {
            tool: TOOL,
            version: VERSION,
            command,
            argv: self.argv,
            params,
            seed,
            params_sha256: digest,
            outputs: vec![OutputRecord {
                path: path.display().to_string(),
                sha256: sha256_hex(bytes),
                bytes: bytes.len(),
            }],
        };
        let mut json = serde_json::to_vec_pretty(&manifest)?;
        json.push(b'\n');
        fs::write(manifest_path(path), json)?;
        Ok(())
    }
}
