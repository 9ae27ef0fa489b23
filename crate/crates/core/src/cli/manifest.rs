//! Run manifests: a header record followed by file-hash and counter records,
//! one JSON object per line.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const MANIFEST_FORMAT: &str = "synboot-manifest";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub tool_version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    /// Labels of the random streams the command drew from.
    pub streams: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileHash {
    /// Relative to the manifest's directory when the file lies below it.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counter {
    pub stage: String,
    pub name: String,
    pub value: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record {
    Header(Header),
    Input(FileHash),
    Output(FileHash),
    Counter(Counter),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub header: Header,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub counters: Vec<Counter>,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Hex SHA-256 and length of a file.
pub fn hash_file(path: &Path) -> Result<(String, u64)> {
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        bytes += n as u64;
        h.update(&buf[..n]);
    }
    Ok((hex::encode(h.finalize()), bytes))
}

fn base_dir(manifest: &Path) -> PathBuf {
    let dir = manifest
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    dir.canonicalize().unwrap_or_else(|_| dir.to_path_buf())
}

impl FileHash {
    pub fn of(file: &Path, manifest: &Path) -> Result<Self> {
        let (sha256, bytes) = hash_file(file)?;
        let abs = file.canonicalize().map_err(|e| Error::io(file, e))?;
        let path = match abs.strip_prefix(base_dir(manifest)) {
            Ok(rel) => rel.to_string_lossy().into_owned(),
            Err(_) => abs.to_string_lossy().into_owned(),
        };
        Ok(FileHash { path, sha256, bytes })
    }

    pub fn resolve(&self, manifest: &Path) -> PathBuf {
        let p = Path::new(&self.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base_dir(manifest).join(p)
        }
    }
}

impl RunManifest {
    pub fn new(command: &str, config: BTreeMap<String, String>, seed: u64) -> Self {
        let now = unix_now();
        RunManifest {
            header: Header {
                format: MANIFEST_FORMAT.into(),
                version: MANIFEST_VERSION,
                tool_version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                config,
                seed,
                streams: Vec::new(),
                started_unix: now,
                finished_unix: now,
            },
            inputs: Vec::new(),
            outputs: Vec::new(),
            counters: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        let mut line = |r: Record| -> Result<()> {
            let s = serde_json::to_string(&r).map_err(|e| Error::invalid(e.to_string()))?;
            writeln!(w, "{s}").map_err(|e| Error::io(path, e))
        };
        line(Record::Header(self.header.clone()))?;
        for f in &self.inputs {
            line(Record::Input(f.clone()))?;
        }
        for f in &self.outputs {
            line(Record::Output(f.clone()))?;
        }
        for c in &self.counters {
            line(Record::Counter(c.clone()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut header = None;
        let (mut inputs, mut outputs, mut counters) = (Vec::new(), Vec::new(), Vec::new());
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record =
                serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, format!("manifest record: {e}")))?;
            match rec {
                Record::Header(h) if i == 0 => {
                    if h.format != MANIFEST_FORMAT || h.version != MANIFEST_VERSION {
                        return Err(Error::parse(1, "unsupported manifest format"));
                    }
                    header = Some(h);
                }
                Record::Header(_) => return Err(Error::parse(i + 1, "header must be the first record")),
                _ if header.is_none() => return Err(Error::parse(i + 1, "manifest lacks a header record")),
                Record::Input(f) => inputs.push(f),
                Record::Output(f) => outputs.push(f),
                Record::Counter(c) => counters.push(c),
            }
        }
        let header = header.ok_or_else(|| Error::parse(1, "empty manifest"))?;
        if outputs.is_empty() {
            return Err(Error::parse(1, "manifest lists no output hashes"));
        }
        Ok(RunManifest {
            header,
            inputs,
            outputs,
            counters,
        })
    }

    pub fn counter(&self, name: &str) -> Option<&serde_json::Value> {
        self.counters.iter().find(|c| c.name == name).map(|c| &c.value)
    }
}

/// Recompute every listed hash. Fails on the first missing or changed file.
pub fn verify_manifest(path: &Path) -> Result<usize> {
    let m = RunManifest::read(path)?;
    let mut checked = 0;
    for f in m.inputs.iter().chain(&m.outputs) {
        let file = f.resolve(path);
        if !file.exists() {
            return Err(Error::Verification(format!("{}: missing", file.display())));
        }
        let (sha, bytes) = hash_file(&file)?;
        if sha != f.sha256 || bytes != f.bytes {
            return Err(Error::Verification(format!("{}: sha256 mismatch", file.display())));
        }
        checked += 1;
    }
    Ok(checked)
}
