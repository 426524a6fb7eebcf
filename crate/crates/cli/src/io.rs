use std::fs;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tasksets_core::telemetry::{parse_trajectory, serialize_trajectory, Trajectory};

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads a whole file and records its digest.
pub fn read_input(path: &Path) -> anyhow::Result<(Vec<u8>, FileDigest)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let digest = FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    };
    Ok((bytes, digest))
}

/// Parses telemetry bytes, gunzipping first when they start with the gzip
/// magic number.
pub fn decode_trajectory(bytes: &[u8]) -> anyhow::Result<Trajectory> {
    let t = if bytes.starts_with(&GZIP_MAGIC) {
        parse_trajectory(BufReader::new(GzDecoder::new(bytes)))?
    } else {
        parse_trajectory(bytes)?
    };
    Ok(t)
}

pub fn load_trajectory(path: &Path) -> anyhow::Result<(Trajectory, FileDigest)> {
    let (bytes, digest) = read_input(path)?;
    let t = decode_trajectory(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    Ok((t, digest))
}

pub fn encode_trajectory(t: &Trajectory, gzip: bool) -> anyhow::Result<Vec<u8>> {
    if gzip {
        let mut enc = GzEncoder::new(Vec::new(), Compression::fast());
        serialize_trajectory(t, &mut enc)?;
        Ok(enc.finish()?)
    } else {
        let mut out = Vec::new();
        serialize_trajectory(t, &mut out)?;
        Ok(out)
    }
}

fn is_telemetry(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    name.ends_with(".jsonl") || name.ends_with(".jsonl.gz")
}

/// Telemetry files (`*.jsonl`, `*.jsonl.gz`) directly inside `dir`, sorted.
pub fn telemetry_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))?;
    let mut files = Vec::new();
    for e in entries {
        let path = e?.path();
        if path.is_file() && is_telemetry(&path) {
            files.push(path);
        }
    }
    if files.is_empty() {
        bail!("no telemetry files (*.jsonl, *.jsonl.gz) in {}", dir.display());
    }
    files.sort();
    Ok(files)
}

/// Keeps game ids usable as file names.
pub fn file_stem(game_id: &str) -> String {
    game_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

/// An output directory; files are written whole through a temporary name.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> anyhow::Result<PathBuf> {
        let path = self.path(name);
        let tmp = self.path(&format!(".{name}.tmp"));
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all().ok();
        fs::rename(&tmp, &path).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Renders with `f` into memory, then writes.
    pub fn write_with(
        &self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> anyhow::Result<PathBuf> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }
}

pub fn read_to_string(path: &Path) -> anyhow::Result<(String, FileDigest)> {
    let (bytes, digest) = read_input(path)?;
    let mut s = String::new();
    bytes.as_slice().read_to_string(&mut s).with_context(|| format!("{} is not UTF-8", path.display()))?;
    Ok((s, digest))
}
