//! Binary checkpoint container.
//!
//! Layout: 8-byte magic, u32 format version, u64 header length, a JSON header
//! (dims, flags, vocabulary, tensor table) and the raw little-endian f64
//! tensor data in header order.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::model::{Architecture, Model, ModelDims, ModelFlags};
use crate::numerics::{Matrix, ParamKind};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"EMOCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    kind: ParamKind,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    dims: ModelDims,
    flags: ModelFlags,
    vocab: Vocabulary,
    tensors: Vec<TensorEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub vocab: Vocabulary,
}

pub fn checkpoint_bytes(model: &Model, vocab: &Vocabulary) -> Result<Vec<u8>> {
    if vocab.len() != model.dims().vocab_size {
        return Err(Error::Compatibility(format!(
            "vocabulary has {} entries but the model expects {}",
            vocab.len(),
            model.dims().vocab_size
        )));
    }
    let store = &model.store;
    let header = Header {
        dims: *model.dims(),
        flags: *model.flags(),
        vocab: vocab.clone(),
        tensors: store
            .ids()
            .map(|id| {
                let v = store.value(id);
                TensorEntry { name: store.name(id).to_string(), kind: store.kind(id), rows: v.rows(), cols: v.cols() }
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(20 + json.len() + 8 * store.parameter_count());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for m in store.values() {
        for v in m.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Checkpoint(format!("truncated while reading {what}")));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

pub fn checkpoint_from_bytes(mut bytes: &[u8]) -> Result<Checkpoint> {
    if take(&mut bytes, 8, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(take(&mut bytes, 4, "version")?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let len = u64::from_le_bytes(take(&mut bytes, 8, "header length")?.try_into().unwrap());
    let len = usize::try_from(len).map_err(|_| Error::Checkpoint("header too large".into()))?;
    let header: Header = serde_json::from_slice(take(&mut bytes, len, "header")?)?;
    if header.vocab.len() != header.dims.vocab_size {
        return Err(Error::Checkpoint("vocabulary size disagrees with dims".into()));
    }

    let (arch, mut store) = Architecture::build(header.dims, header.flags)?;
    if store.len() != header.tensors.len() {
        return Err(Error::Checkpoint(format!(
            "expected {} tensors, header lists {}",
            store.len(),
            header.tensors.len()
        )));
    }
    let ids: Vec<_> = store.ids().collect();
    for (id, entry) in ids.into_iter().zip(&header.tensors) {
        let expected = store.value(id);
        if store.name(id) != entry.name
            || store.kind(id) != entry.kind
            || expected.shape() != (entry.rows, entry.cols)
        {
            return Err(Error::Checkpoint(format!(
                "tensor `{}` {}x{} does not match architecture tensor `{}` {:?}",
                entry.name,
                entry.rows,
                entry.cols,
                store.name(id),
                expected.shape()
            )));
        }
        let raw = take(&mut bytes, 8 * entry.rows * entry.cols, &entry.name)?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        *store.value_mut(id) = Matrix::from_vec(entry.rows, entry.cols, data)
            .map_err(|e| Error::Checkpoint(format!("tensor `{}`: {e}", entry.name)))?;
    }
    if !bytes.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len())));
    }
    Ok(Checkpoint { model: Model { arch, store }, vocab: header.vocab })
}

pub fn save_checkpoint(path: &Path, model: &Model, vocab: &Vocabulary) -> Result<()> {
    let bytes = checkpoint_bytes(model, vocab)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    f.sync_all()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    checkpoint_from_bytes(&fs::read(path)?)
}
