//! Checkpoint directories: `manifest.json` plus a backend-defined `params.bin`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Vocab;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PARAMS_FILE: &str = "params.bin";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendManifest {
    pub kind: String,
    pub vocab_hash: String,
    pub param_count: usize,
    pub checkpoint: String,
    pub params_sha256: String,
}

/// A backend that can be written to and restored from a checkpoint directory.
pub trait Checkpoint: Sized {
    const KIND: &'static str;

    fn param_count(&self) -> usize;

    fn encode_params(&self, out: &mut ParamWriter);

    fn decode_params(input: &mut ParamReader<'_>, vocab: &Vocab) -> Result<Self>;
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn save_checkpoint<T: Checkpoint>(dir: &Path, model: &T, vocab: &Vocab) -> Result<BackendManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut writer = ParamWriter::default();
    model.encode_params(&mut writer);
    let bytes = writer.into_bytes();
    let manifest = BackendManifest {
        kind: T::KIND.to_string(),
        vocab_hash: vocab.hash(),
        param_count: model.param_count(),
        checkpoint: PARAMS_FILE.to_string(),
        params_sha256: sha256_hex(&bytes),
    };
    let params_path = dir.join(PARAMS_FILE);
    std::fs::write(&params_path, &bytes).map_err(|e| Error::io(&params_path, e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)
        .map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<BackendManifest> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Err(Error::MissingArtifact(path.display().to_string()));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load_checkpoint<T: Checkpoint>(dir: &Path, vocab: &Vocab) -> Result<T> {
    let manifest = read_manifest(dir)?;
    if manifest.kind != T::KIND {
        return Err(Error::Checkpoint(format!(
            "{} holds a {} backend, expected {}",
            dir.display(),
            manifest.kind,
            T::KIND
        )));
    }
    if manifest.vocab_hash != vocab.hash() {
        return Err(Error::Checkpoint(format!(
            "{} was saved with a different vocabulary",
            dir.display()
        )));
    }
    let path = dir.join(&manifest.checkpoint);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    if sha256_hex(&bytes) != manifest.params_sha256 {
        return Err(Error::Checkpoint(format!(
            "{} does not match its manifest hash",
            path.display()
        )));
    }
    let mut reader = ParamReader::new(&bytes);
    let model = T::decode_params(&mut reader, vocab)?;
    if !reader.is_exhausted() {
        return Err(Error::Checkpoint(format!("{} has trailing bytes", path.display())));
    }
    if model.param_count() != manifest.param_count {
        return Err(Error::Checkpoint(format!(
            "{}: parameter count {} does not match manifest {}",
            path.display(),
            model.param_count(),
            manifest.param_count
        )));
    }
    Ok(model)
}

/// Little-endian encoder for parameter blobs.
#[derive(Debug, Default)]
pub struct ParamWriter {
    buf: Vec<u8>,
}

impl ParamWriter {
    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, vs: &[f64]) {
        self.u64(vs.len() as u64);
        for &v in vs {
            self.f64(v);
        }
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

pub struct ParamReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ParamReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        ParamReader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("parameter blob is truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("length overflows usize".into()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.usize()?;
        if n > (self.bytes.len() - self.pos) / 8 {
            return Err(Error::Checkpoint("parameter blob is truncated".into()));
        }
        (0..n).map(|_| self.f64()).collect()
    }

    /// Reads a length-prefixed vector and checks its length.
    pub fn f64s_exact(&mut self, expected: usize, what: &str) -> Result<Vec<f64>> {
        let v = self.f64s()?;
        if v.len() != expected {
            return Err(Error::Checkpoint(format!(
                "{what}: expected {expected} values, found {}",
                v.len()
            )));
        }
        Ok(v)
    }

    pub fn is_exhausted(&self) -> bool {
        self.pos == self.bytes.len()
    }
}
