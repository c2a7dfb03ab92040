//! Binary checkpoint container.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "COAE"            4-byte magic
//! version           u32
//! n                 u64   block length N
//! hidden_layers     u32
//! hidden_width      u64   H
//! normalization     u8    0 = batch, 1 = block
//! digest            u64   FNV-1a of the architecture description
//! linewidth_hz      f64
//! symbol_period_s   f64
//! seed              u64
//! epochs_run        u64
//! final_loss        f64
//! best_loss         f64
//! array_count       u32
//! arrays            repeated: ndim u32, dims u64 × ndim, values f64 × Π dims
//! checksum          u64   FNV-1a of every preceding byte
//! ```
//!
//! Arrays are stored encoder first, then decoder. Per stack: for each hidden
//! layer `dense.weights [in,H]`, `dense.bias [H]`, `bn.gamma`, `bn.beta`,
//! `bn.running_mean`, `bn.running_var` (each `[H]`) and `bn.hyper [2]`
//! (epsilon, momentum); then `output.weights [H,2N]` and `output.bias [2N]`.
//! `in` is `2N` for the first hidden layer and `H` afterwards.

use std::fs;
use std::path::Path;

use super::model::{AeModel, Stack, TrainingMetadata, HIDDEN_LAYERS};
use crate::nn::{BatchNormLayer, DenseLayer};
use crate::signal::NormalizationMode;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"COAE";
pub const CHECKPOINT_VERSION: u32 = 1;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn architecture_digest(n: usize, hidden_layers: usize, hidden_width: usize) -> u64 {
    let desc = format!(
        "v{CHECKPOINT_VERSION};n={n};io={};hidden={hidden_layers}x{hidden_width}(dense,relu,batchnorm);output=dense-linear;mirrored",
        2 * n
    );
    fnv1a(desc.as_bytes())
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend(v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend(v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend(v.to_le_bytes());
    }
    fn array(&mut self, dims: &[usize], values: &[f64]) {
        debug_assert_eq!(dims.iter().product::<usize>(), values.len());
        self.u32(dims.len() as u32);
        for &d in dims {
            self.u64(d as u64);
        }
        for &v in values {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::CorruptCheckpoint(format!("truncated at byte {} (wanted {len} more)", self.pos))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn array(&mut self, expected: &[usize]) -> Result<Vec<f64>> {
        let ndim = self.u32()? as usize;
        let mut dims = Vec::with_capacity(ndim.min(8));
        for _ in 0..ndim {
            dims.push(self.u64()? as usize);
        }
        if dims != expected {
            return Err(Error::CorruptCheckpoint(format!(
                "array shape {dims:?}, expected {expected:?}"
            )));
        }
        let count: usize = dims.iter().product();
        let raw = self.take(count * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn write_stack(w: &mut Writer, stack: &Stack) {
    let (io, h) = (stack.width(), stack.hidden_width());
    for (dense, bn) in &stack.hidden {
        w.array(&[dense.in_dim(), h], dense.weights());
        w.array(&[h], dense.bias());
        w.array(&[h], &bn.gamma);
        w.array(&[h], &bn.beta);
        w.array(&[h], &bn.running_mean);
        w.array(&[h], &bn.running_var);
        w.array(&[2], &[bn.epsilon, bn.momentum]);
    }
    w.array(&[h, io], stack.output.weights());
    w.array(&[io], stack.output.bias());
}

fn read_stack(r: &mut Reader, io: usize, h: usize, hidden_layers: usize) -> Result<Stack> {
    let corrupt = |e: Error| Error::CorruptCheckpoint(e.to_string());
    let mut hidden = Vec::with_capacity(hidden_layers);
    for i in 0..hidden_layers {
        let fan_in = if i == 0 { io } else { h };
        let weights = r.array(&[fan_in, h])?;
        let bias = r.array(&[h])?;
        let dense = DenseLayer::new(fan_in, h, weights, bias).map_err(corrupt)?;
        let gamma = r.array(&[h])?;
        let beta = r.array(&[h])?;
        let running_mean = r.array(&[h])?;
        let running_var = r.array(&[h])?;
        let hyper = r.array(&[2])?;
        hidden.push((
            dense,
            BatchNormLayer {
                gamma,
                beta,
                running_mean,
                running_var,
                epsilon: hyper[0],
                momentum: hyper[1],
            },
        ));
    }
    let weights = r.array(&[h, io])?;
    let bias = r.array(&[io])?;
    let output = DenseLayer::new(h, io, weights, bias).map_err(corrupt)?;
    Ok(Stack { hidden, output })
}

pub fn encode_model(model: &AeModel) -> Vec<u8> {
    let n = model.block_len();
    let mut w = Writer(Vec::new());
    w.0.extend(CHECKPOINT_MAGIC);
    w.u32(CHECKPOINT_VERSION);
    w.u64(n as u64);
    w.u32(HIDDEN_LAYERS as u32);
    w.u64(model.hidden_width() as u64);
    w.u8(match model.normalization {
        NormalizationMode::Batch => 0,
        NormalizationMode::Block => 1,
    });
    w.u64(architecture_digest(n, HIDDEN_LAYERS, model.hidden_width()));
    let m = &model.metadata;
    w.f64(m.linewidth_hz);
    w.f64(m.symbol_period_s);
    w.u64(m.seed);
    w.u64(m.epochs_run);
    w.f64(m.final_loss);
    w.f64(m.best_loss);
    w.u32((2 * (7 * HIDDEN_LAYERS + 2)) as u32);
    write_stack(&mut w, &model.encoder);
    write_stack(&mut w, &model.decoder);
    let checksum = fnv1a(&w.0);
    w.u64(checksum);
    w.0
}

pub fn decode_model(bytes: &[u8]) -> Result<AeModel> {
    if bytes.len() < 4 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::CorruptCheckpoint("missing COAE magic".into()));
    }
    let mut r = Reader { bytes, pos: 4 };
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    if bytes.len() < 8 + 8 {
        return Err(Error::CorruptCheckpoint("truncated header".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    if fnv1a(body) != u64::from_le_bytes(tail.try_into().unwrap()) {
        return Err(Error::CorruptCheckpoint(
            "checksum mismatch (truncated or modified file)".into(),
        ));
    }
    let mut r = Reader { bytes: body, pos: 8 };

    let n = r.u64()? as usize;
    if n < 2 || !n.is_power_of_two() || n > (1 << 24) {
        return Err(Error::CorruptCheckpoint(format!("block length {n}")));
    }
    let hidden_layers = r.u32()? as usize;
    if hidden_layers != HIDDEN_LAYERS {
        return Err(Error::CorruptCheckpoint(format!(
            "{hidden_layers} hidden layers, this build supports {HIDDEN_LAYERS}"
        )));
    }
    let hidden_width = r.u64()? as usize;
    if hidden_width == 0 || hidden_width > (1 << 26) {
        return Err(Error::CorruptCheckpoint(format!("hidden width {hidden_width}")));
    }
    let normalization = match r.u8()? {
        0 => NormalizationMode::Batch,
        1 => NormalizationMode::Block,
        other => return Err(Error::CorruptCheckpoint(format!("normalization tag {other}"))),
    };
    if r.u64()? != architecture_digest(n, hidden_layers, hidden_width) {
        return Err(Error::CorruptCheckpoint("architecture digest mismatch".into()));
    }
    let metadata = TrainingMetadata {
        linewidth_hz: r.f64()?,
        symbol_period_s: r.f64()?,
        seed: r.u64()?,
        epochs_run: r.u64()?,
        final_loss: r.f64()?,
        best_loss: r.f64()?,
    };
    let arrays = r.u32()? as usize;
    if arrays != 2 * (7 * HIDDEN_LAYERS + 2) {
        return Err(Error::CorruptCheckpoint(format!("{arrays} arrays")));
    }
    let encoder = read_stack(&mut r, 2 * n, hidden_width, hidden_layers)?;
    let decoder = read_stack(&mut r, 2 * n, hidden_width, hidden_layers)?;
    if r.pos != body.len() {
        return Err(Error::CorruptCheckpoint(format!(
            "{} trailing bytes",
            body.len() - r.pos
        )));
    }
    AeModel::from_parts(n, encoder, decoder, normalization, metadata)
        .map_err(|e| Error::CorruptCheckpoint(e.to_string()))
}

pub fn save_model(model: &AeModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<AeModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
