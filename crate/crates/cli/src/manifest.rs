//! Sidecar `<out>.manifest.json` holding everything that varies between
//! identical runs (timestamps) plus provenance of inputs and outputs.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command_line: Vec<String>,
    command: &'a str,
    config: &'a C,
    seed: Option<u64>,
    tool_version: &'static str,
    started_at: String,
    finished_at: String,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

pub struct Run {
    started_at: String,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn digest(path: &Path) -> Result<FileDigest, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::io(e, path))?;
    Ok(FileDigest { path: path.display().to_string(), sha256: format!("{:x}", Sha256::digest(&bytes)) })
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

impl Run {
    pub fn start() -> Self {
        Run { started_at: now() }
    }

    /// Writes `body` to `out` (or stdout) and, for files, the manifest beside it.
    pub fn finish<C: Serialize>(
        self,
        command: &str,
        config: &C,
        seed: Option<u64>,
        inputs: &[&Path],
        out: Option<&Path>,
        body: &str,
    ) -> Result<(), Failure> {
        let Some(out) = out else {
            print!("{body}");
            return Ok(());
        };
        fs::write(out, body).map_err(|e| Failure::io(e, out))?;
        let m = Manifest {
            command_line: std::env::args().collect(),
            command,
            config,
            seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            started_at: self.started_at,
            finished_at: now(),
            inputs: inputs.iter().map(|p| digest(p)).collect::<Result<_, _>>()?,
            outputs: vec![digest(out)?],
        };
        let path = manifest_path(out);
        let json = serde_json::to_string_pretty(&m).map_err(|e| Failure::usage(e.to_string()))?;
        fs::write(&path, json + "\n").map_err(|e| Failure::io(e, &path))
    }
}
