//! Embedding files: a raw little-endian f32 payload, row-major `n x d`, with a
//! `<file>.meta` sidecar of `key=value` lines giving `n`, `d` and `sha256`
//! (hex digest of the payload).

use std::fs;
use std::path::{Path, PathBuf};

use bias_audit_core::fidelity::EmbeddingSet;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingMeta {
    pub n: usize,
    pub d: usize,
    pub sha256: String,
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_meta(path: &Path) -> Result<EmbeddingMeta> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (mut n, mut d, mut sha) = (None, None, None);
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(path, i as u64 + 1, "expected key=value"))?;
        let num = |v: &str| v.trim().parse::<usize>().map_err(|e| Error::parse(path, i as u64 + 1, e));
        match k.trim() {
            "n" => n = Some(num(v)?),
            "d" => d = Some(num(v)?),
            "sha256" => sha = Some(v.trim().to_ascii_lowercase()),
            other => log::warn!("{}: ignoring key `{other}`", path.display()),
        }
    }
    let missing = |k: &str| Error::format(path, format!("missing `{k}`"));
    Ok(EmbeddingMeta { n: n.ok_or_else(|| missing("n"))?, d: d.ok_or_else(|| missing("d"))?, sha256: sha.ok_or_else(|| missing("sha256"))? })
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingSet> {
    let meta = read_meta(&meta_path(path))?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = meta.n.checked_mul(meta.d).and_then(|x| x.checked_mul(4)).ok_or_else(|| Error::format(path, "n*d overflows"))?;
    if bytes.len() != expected {
        return Err(Error::format(path, format!("payload is {} bytes, meta says n={} d={} ({expected} bytes)", bytes.len(), meta.n, meta.d)));
    }
    let digest = sha256_hex(&bytes);
    if digest != meta.sha256 {
        return Err(Error::format(path, format!("checksum mismatch: payload {digest}, meta {}", meta.sha256)));
    }
    let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    EmbeddingSet::new(meta.n, meta.d, data).map_err(|e| Error::format(path, e))
}

pub fn write_embeddings(path: &Path, set: &EmbeddingSet) -> Result<()> {
    let bytes: Vec<u8> = set.data().iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    let meta = format!("n={}\nd={}\nsha256={}\n", set.n(), set.d(), sha256_hex(&bytes));
    let mp = meta_path(path);
    fs::write(&mp, meta).map_err(|e| Error::io(&mp, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmbeddingSet {
        EmbeddingSet::from_rows(&[[1.0f32, -2.5, 3.25], [0.0, 1e-7, -0.0]]).unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("real.f32");
        write_embeddings(&p, &sample()).unwrap();
        assert_eq!(load_embeddings(&p).unwrap(), sample());
    }

    #[test]
    fn truncated_payload_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("real.f32");
        write_embeddings(&p, &sample()).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 4]).unwrap();
        let err = load_embeddings(&p).unwrap_err().to_string();
        assert!(err.contains("bytes"), "{err}");
    }

    #[test]
    fn corrupted_payload_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("real.f32");
        write_embeddings(&p, &sample()).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes[0] ^= 1;
        fs::write(&p, &bytes).unwrap();
        assert!(load_embeddings(&p).unwrap_err().to_string().contains("checksum"));
    }
}
