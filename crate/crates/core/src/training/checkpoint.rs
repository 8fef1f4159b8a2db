use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::{Model, ModelConfig, ParamGroup, ParamSet};
use crate::error::{Error, Result};
use crate::scalar::{Precision, Scalar};
use crate::seqmodel::Vocabulary;
use crate::tasks::TaskKind;

pub const MAGIC: &[u8; 5] = b"NDSQ1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupManifest {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

/// Everything but the parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config: ModelConfig,
    pub vocabulary: Vocabulary,
    pub task: Option<TaskKind>,
    pub batches: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    precision: Precision,
    #[serde(flatten)]
    meta: CheckpointMeta,
    groups: Vec<GroupManifest>,
}

fn precision_of<T: Scalar>() -> Precision {
    if T::BYTES == 4 {
        Precision::F32
    } else {
        Precision::F64
    }
}

/// Magic, little-endian `u64` header length, JSON header, then every
/// parameter group as raw little-endian scalars in manifest order.
pub fn save_checkpoint<T: Scalar>(path: &Path, model: &Model<T>, meta: &CheckpointMeta) -> Result<()> {
    if meta.config != *model.config() {
        return Err(Error::Checkpoint("metadata config differs from the model".into()));
    }
    let header = Header {
        precision: precision_of::<T>(),
        meta: meta.clone(),
        groups: model
            .params()
            .groups
            .iter()
            .map(|g| GroupManifest {
                name: g.name.clone(),
                rows: g.rows,
                cols: g.cols,
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut buf = Vec::with_capacity(MAGIC.len() + 8 + json.len() + model.params().len() * T::BYTES);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    for x in model.params().iter() {
        x.write_le(&mut buf);
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

/// Loads a checkpoint written at either precision into a `Model<T>`.
pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(Model<T>, CheckpointMeta)> {
    let bytes = fs::read(path)?;
    let bad = |m: &str| Error::Checkpoint(format!("{}: {m}", path.display()));
    if bytes.len() < MAGIC.len() + 8 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(bad("not a checkpoint"));
    }
    let mut len = [0u8; 8];
    len.copy_from_slice(&bytes[MAGIC.len()..MAGIC.len() + 8]);
    let start = MAGIC.len() + 8;
    let hlen = usize::try_from(u64::from_le_bytes(len)).map_err(|_| bad("header too long"))?;
    let body = start.checked_add(hlen).filter(|&e| e <= bytes.len()).ok_or_else(|| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(&bytes[start..body])?;
    let width = match header.precision {
        Precision::F32 => 4,
        Precision::F64 => 8,
    };
    let total: usize = header.groups.iter().map(|g| g.rows * g.cols).sum();
    if bytes.len() - body != total * width {
        return Err(bad("parameter payload size does not match the manifest"));
    }
    let mut at = body;
    let mut read = || {
        let x = match header.precision {
            Precision::F32 => f32::read_le(&bytes[at..at + 4]).to_f64(),
            Precision::F64 => f64::read_le(&bytes[at..at + 8]),
        };
        at += width;
        T::lit(x)
    };
    let groups = header
        .groups
        .iter()
        .map(|g| ParamGroup {
            name: g.name.clone(),
            rows: g.rows,
            cols: g.cols,
            data: (0..g.rows * g.cols).map(|_| read()).collect(),
        })
        .collect();
    let model = Model::with_params(header.meta.config.clone(), ParamSet { groups })
        .map_err(|e| bad(&e.to_string()))?;
    Ok((model, header.meta))
}
