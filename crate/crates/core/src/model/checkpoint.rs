//! Binary checkpoints: `EQKCKPT1`, a little-endian `u64` manifest length, a
//! JSON manifest, then every tensor as little-endian `f64` in manifest order.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::Model;
use crate::error::{Error, Result};
use crate::nn::Params;

pub const MAGIC: &[u8; 8] = b"EQKCKPT1";
pub const LAYOUT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset into the data section.
    pub offset: usize,
    pub nbytes: usize,
    pub dtype: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub layout_version: u32,
    pub config: ModelConfig,
    pub tensors: Vec<TensorEntry>,
}

fn ckpt(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn write_checkpoint<W: Write>(model: &Model, mut out: W) -> Result<()> {
    let mut tensors = Vec::new();
    let mut data: Vec<u8> = Vec::new();
    let mut copy = model.clone();
    copy.visit_params("", &mut |name, _, shape, values| {
        tensors.push(TensorEntry {
            name: name.to_string(),
            shape: shape.to_vec(),
            offset: data.len(),
            nbytes: values.len() * 8,
            dtype: "f64".into(),
        });
        for v in values.iter() {
            data.extend_from_slice(&v.to_le_bytes());
        }
    });
    let manifest = Manifest {
        layout_version: LAYOUT_VERSION,
        config: model.config().clone(),
        tensors,
    };
    let json = serde_json::to_vec(&manifest)?;
    out.write_all(MAGIC)?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    out.write_all(&data)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Model> {
    let mut magic = [0u8; 8];
    input
        .read_exact(&mut magic)
        .map_err(|_| ckpt("file too short for a checkpoint header"))?;
    if &magic != MAGIC {
        return Err(ckpt("bad magic bytes"));
    }
    let mut len = [0u8; 8];
    input
        .read_exact(&mut len)
        .map_err(|_| ckpt("missing manifest length"))?;
    let len = u64::from_le_bytes(len) as usize;
    let mut json = vec![0u8; len];
    input
        .read_exact(&mut json)
        .map_err(|_| ckpt("truncated manifest"))?;
    let manifest: Manifest =
        serde_json::from_slice(&json).map_err(|e| ckpt(format!("invalid manifest: {e}")))?;
    if manifest.layout_version != LAYOUT_VERSION {
        return Err(ckpt(format!(
            "unsupported layout version {}",
            manifest.layout_version
        )));
    }
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;

    let mut entries: HashMap<&str, &TensorEntry> = HashMap::new();
    for t in &manifest.tensors {
        if t.dtype != "f64" {
            return Err(ckpt(format!("tensor {} has dtype {}", t.name, t.dtype)));
        }
        if entries.insert(t.name.as_str(), t).is_some() {
            return Err(ckpt(format!("duplicate tensor {}", t.name)));
        }
    }

    let mut model = Model::new(&manifest.config)?;
    let mut err: Option<Error> = None;
    let mut seen = 0usize;
    model.visit_params("", &mut |name, _, shape, values| {
        if err.is_some() {
            return;
        }
        let Some(t) = entries.get(name) else {
            err = Some(ckpt(format!("missing tensor {name}")));
            return;
        };
        if t.shape != shape || t.nbytes != values.len() * 8 {
            err = Some(ckpt(format!(
                "tensor {name} has shape {:?}, expected {:?}",
                t.shape, shape
            )));
            return;
        }
        let Some(bytes) = data.get(t.offset..t.offset + t.nbytes) else {
            err = Some(ckpt(format!("tensor {name} runs past the end of the file")));
            return;
        };
        for (v, b) in values.iter_mut().zip(bytes.chunks_exact(8)) {
            *v = f64::from_le_bytes(b.try_into().expect("8-byte chunk"));
        }
        seen += 1;
    });
    if let Some(e) = err {
        return Err(e);
    }
    if seen != entries.len() {
        return Err(ckpt(format!(
            "{} tensors in the file do not belong to the model",
            entries.len() - seen
        )));
    }
    Ok(model)
}

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_checkpoint(model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model> {
    let file = std::fs::File::open(path)?;
    read_checkpoint(std::io::BufReader::new(file))
}
