//! Checkpoint directories: `manifest.json` plus `params.bin`, the
//! concatenation of every named tensor as little-endian f32 in manifest
//! order. Offsets in the manifest count f32 elements, not bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{Architecture, Network};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PARAMS_FILE: &str = "params.bin";
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub name: String,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub trainable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub architecture: Architecture,
    pub layers: Vec<LayerEntry>,
    pub tensors: Vec<TensorEntry>,
    pub seed: u64,
    pub epoch: Option<usize>,
    #[serde(default)]
    pub metrics: serde_json::Value,
}

pub fn save_checkpoint(
    dir: &Path,
    net: &Network<f32>,
    seed: u64,
    epoch: Option<usize>,
    metrics: serde_json::Value,
) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut tensors = Vec::new();
    let mut bytes = Vec::new();
    let mut offset = 0;
    for t in net.named_tensors() {
        tensors.push(TensorEntry {
            name: t.name,
            shape: t.tensor.shape().to_vec(),
            offset,
            trainable: t.trainable,
        });
        offset += t.tensor.len();
        for v in t.tensor.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let manifest = Manifest {
        format_version: CHECKPOINT_FORMAT_VERSION,
        architecture: net.architecture(),
        layers: net
            .layers()
            .map(|(name, l)| LayerEntry {
                name: name.to_string(),
                kind: l.kind(),
            })
            .collect(),
        tensors,
        seed,
        epoch,
        metrics,
    };
    fs::write(dir.join(PARAMS_FILE), bytes)?;
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn load_checkpoint(dir: &Path) -> Result<(Network<f32>, Manifest)> {
    let bad = |reason: String| Error::Checkpoint {
        path: dir.to_path_buf(),
        reason,
    };
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
    if manifest.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(bad(format!("unsupported format version {}", manifest.format_version)));
    }
    let bytes = fs::read(dir.join(PARAMS_FILE))?;
    if bytes.len() % 4 != 0 {
        return Err(bad("params.bin length is not a multiple of 4".into()));
    }
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();

    let mut net = Network::<f32>::build(manifest.architecture, manifest.seed);
    let expected: Vec<(String, Vec<usize>)> = net
        .named_tensors()
        .into_iter()
        .map(|t| (t.name, t.tensor.shape().to_vec()))
        .collect();
    if expected.len() != manifest.tensors.len() {
        return Err(bad(format!(
            "expected {} tensors for a {} network, manifest lists {}",
            expected.len(),
            manifest.architecture.id(),
            manifest.tensors.len()
        )));
    }
    for ((name, shape), entry) in expected.iter().zip(&manifest.tensors) {
        if *name != entry.name || *shape != entry.shape {
            return Err(bad(format!(
                "tensor {} {:?} does not match expected {name} {shape:?}",
                entry.name, entry.shape
            )));
        }
        let len: usize = shape.iter().product();
        let src = values
            .get(entry.offset..entry.offset + len)
            .ok_or_else(|| bad(format!("tensor {name} runs past the end of params.bin")))?;
        net.tensor_mut(name)
            .expect("tensor names come from the network")
            .data_mut()
            .copy_from_slice(src);
    }
    Ok((net, manifest))
}
