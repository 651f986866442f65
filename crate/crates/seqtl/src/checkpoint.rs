//! Self-contained model container.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic    8 bytes  "SEQTLCK1"
//! version  u32
//! header   u32 length + JSON (labels, vocabulary, configs, lineage)
//! tensors  u32 count, then per tensor:
//!          u16 name length + UTF-8 name, u8 rank, rank x u32 extents,
//!          f32 payload
//! crc32    u32 over every preceding byte
//! ```
//!
//! Tensors of an embedded source model are prefixed with `source/`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use seqtl_core::crf::zero_transitions;
use seqtl_core::data::Vocab;
use seqtl_core::numerics::{Blstm, Linear, Tensor2};
use seqtl_core::tagger::{Decoder, LabelSet, ModelConfig, TaggerModel, TaggerParams, TrainConfig};
use seqtl_core::transfer::{AdapterCombine, AdapterParams, TransferLayout};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SEQTLCK1";
pub const VERSION: u32 = 1;
const SOURCE_PREFIX: &str = "source/";

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("format version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checksum mismatch; file is corrupt")]
    CorruptFile,
    #[error("file ends early")]
    Truncated,
    #[error("header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("missing tensor {0}")]
    MissingTensor(String),
    #[error("unexpected tensor {0}")]
    UnexpectedTensor(String),
    #[error("tensor {name}: shape {found:?}, expected {expected:?}")]
    TensorShape {
        name: String,
        expected: (usize, usize),
        found: Vec<usize>,
    },
    #[error("tensor name is not UTF-8")]
    BadName,
    #[error(transparent)]
    Model(#[from] seqtl_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// A model plus the training metadata stored beside it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: TaggerModel,
    pub train: Option<TrainConfig>,
    pub best_f1: Option<f64>,
}

impl Checkpoint {
    pub fn new(model: TaggerModel) -> Self {
        Checkpoint {
            model,
            train: None,
            best_f1: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct AdapterShape {
    hidden: usize,
    combine: AdapterCombine,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    config: ModelConfig,
    labels: LabelSet,
    vocab: Vocab,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lineage: Option<TransferLayout>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    adapter: Option<AdapterShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<Box<ModelHeader>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    model: ModelHeader,
    #[serde(default)]
    train: Option<TrainConfig>,
    #[serde(default)]
    best_f1: Option<f64>,
}

fn model_header(m: &TaggerModel) -> ModelHeader {
    ModelHeader {
        config: m.config,
        labels: m.labels.clone(),
        vocab: m.vocab.clone(),
        lineage: m.lineage.clone(),
        adapter: m.params.adapter.as_ref().map(|a| AdapterShape {
            hidden: a.hidden(),
            combine: a.combine(),
        }),
        source: m.source.as_deref().map(|s| Box::new(model_header(s))),
    }
}

/// A zero-valued model with the topology described by `h`.
fn template(h: &ModelHeader) -> TaggerModel {
    let c = &h.config;
    let l = h.labels.len();
    let source = h.source.as_deref().map(|s| Box::new(template(s)));
    let adapter = match (h.adapter, &source) {
        (Some(a), Some(s)) => Some(AdapterParams::zeros(s.num_labels(), l, a.hidden, a.combine)),
        _ => None,
    };
    TaggerModel {
        config: *c,
        labels: h.labels.clone(),
        vocab: h.vocab.clone(),
        params: TaggerParams {
            word_embeddings: Tensor2::zeros(h.vocab.word_count(), c.word_dim),
            char_embeddings: Tensor2::zeros(h.vocab.char_count(), c.char_dim),
            char_blstm: Blstm::zeros(c.char_dim, c.char_hidden),
            word_blstm: Blstm::zeros(c.word_input_dim(), c.word_hidden),
            emission: Linear::zeros(2 * c.word_hidden, l),
            transitions: (c.decoder == Decoder::Crf).then(|| zero_transitions(l)),
            adapter,
        },
        source,
        lineage: h.lineage.clone(),
    }
}

fn collect_tensors<'a>(m: &'a TaggerModel, prefix: &str, out: &mut Vec<(String, &'a Tensor2)>) {
    for (name, _, t) in m.params.named() {
        out.push((format!("{prefix}{name}"), t));
    }
    if let Some(s) = &m.source {
        collect_tensors(s, &format!("{prefix}{SOURCE_PREFIX}"), out);
    }
}

fn fill_tensors(
    m: &mut TaggerModel,
    prefix: &str,
    tensors: &mut BTreeMap<String, (Vec<usize>, Vec<f32>)>,
) -> Result<(), CheckpointError> {
    for (name, _, t) in m.params.named_mut() {
        let full = format!("{prefix}{name}");
        let (shape, data) = tensors.remove(&full).ok_or(CheckpointError::MissingTensor(full.clone()))?;
        if shape != [t.rows(), t.cols()] {
            return Err(CheckpointError::TensorShape {
                name: full,
                expected: t.shape(),
                found: shape,
            });
        }
        for (dst, src) in t.as_mut_slice().iter_mut().zip(&data) {
            *dst = f64::from(*src);
        }
    }
    if let Some(s) = m.source.as_mut() {
        fill_tensors(s, &format!("{prefix}{SOURCE_PREFIX}"), tensors)?;
    }
    Ok(())
}

/// Serializes a checkpoint. Parameters are stored in single precision.
pub fn encode(ckpt: &Checkpoint) -> Vec<u8> {
    let header = Header {
        model: model_header(&ckpt.model),
        train: ckpt.train,
        best_f1: ckpt.best_f1,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut tensors = Vec::new();
    collect_tensors(&ckpt.model, "", &mut tensors);

    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.push(2);
        buf.extend_from_slice(&(t.rows() as u32).to_le_bytes());
        buf.extend_from_slice(&(t.cols() as u32).to_le_bytes());
        for &v in t.as_slice() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(CheckpointError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    if bytes.len() < MAGIC.len() + 8 {
        return Err(CheckpointError::Truncated);
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(CheckpointError::CorruptFile);
    }
    let mut r = Reader { bytes: body, pos: MAGIC.len() };
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    let hlen = r.u32()? as usize;
    let header: Header = serde_json::from_slice(r.take(hlen)?)?;
    let count = r.u32()?;
    let mut tensors = BTreeMap::new();
    for _ in 0..count {
        let nlen = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(nlen)?)
            .map_err(|_| CheckpointError::BadName)?
            .to_string();
        let rank = r.u8()? as usize;
        let shape = (0..rank).map(|_| r.u32().map(|x| x as usize)).collect::<Result<Vec<_>, _>>()?;
        let n: usize = shape.iter().product();
        let data = r
            .take(n.checked_mul(4).ok_or(CheckpointError::Truncated)?)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if tensors.insert(name.clone(), (shape, data)).is_some() {
            return Err(CheckpointError::UnexpectedTensor(name));
        }
    }
    if r.pos != body.len() {
        return Err(CheckpointError::Truncated);
    }
    let mut model = template(&header.model);
    fill_tensors(&mut model, "", &mut tensors)?;
    if let Some(extra) = tensors.into_keys().next() {
        return Err(CheckpointError::UnexpectedTensor(extra));
    }
    model.validate()?;
    Ok(Checkpoint {
        model,
        train: header.train,
        best_f1: header.best_f1,
    })
}

/// Writes via a temporary file in the same directory and an atomic rename,
/// so an interrupted save never clobbers an existing checkpoint.
pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    crate::records::write_atomic(path, &encode(ckpt))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|source| Error::Checkpoint {
        path: path.to_path_buf(),
        source,
    })
}
