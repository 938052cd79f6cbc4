//! Checkpoint layout (all integers little-endian):
//!
//! ```text
//! magic        4 bytes   "DRLQ"
//! version      u16       1
//! layer count  u32
//! per layer    u32 inputs, u32 outputs, u8 activation (0 identity, 1 tanh)
//! payload      f64 × params, layer order, weights row-major then bias
//! checksum     u32       CRC-32 (IEEE) of every preceding byte
//! ```

use std::path::Path;

use super::{Activation, DenseNet, Layer, NnError};

pub const MAGIC: [u8; 4] = *b"DRLQ";
pub const VERSION: u16 = 1;
pub const CHECKPOINT_EXTENSION: &str = "dqn";

pub fn save_net(net: &DenseNet) -> Vec<u8> {
    let mut out = Vec::with_capacity(10 + 9 * net.layers.len() + 8 * net.param_count() + 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(net.layers.len() as u32).to_le_bytes());
    for l in &net.layers {
        out.extend_from_slice(&(l.inputs as u32).to_le_bytes());
        out.extend_from_slice(&(l.outputs as u32).to_le_bytes());
        out.push(l.activation.tag());
    }
    for p in net.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(NnError::Truncated {
            needed: self.pos.saturating_add(n),
            have: self.buf.len(),
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, NnError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, NnError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn load_net(bytes: &[u8]) -> Result<DenseNet, NnError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(NnError::BadMagic);
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(NnError::UnsupportedVersion(version));
    }
    let count = r.u32()? as usize;
    if count == 0 {
        return Err(NnError::Empty);
    }
    let mut shapes = Vec::with_capacity(count.min(1024));
    for i in 0..count {
        let inputs = r.u32()? as usize;
        let outputs = r.u32()? as usize;
        let tag = r.u8()?;
        let activation = Activation::from_tag(tag).ok_or(NnError::BadActivation(tag))?;
        if inputs == 0 || outputs == 0 {
            return Err(NnError::Empty);
        }
        if let Some(&(_, prev_out, _)) = shapes.last() {
            if prev_out != inputs {
                return Err(NnError::LayerChain { layer: i, expected: prev_out, got: inputs });
            }
        }
        shapes.push((inputs, outputs, activation));
    }

    let total: usize = shapes
        .iter()
        .try_fold(0usize, |acc, &(i, o, _)| i.checked_mul(o).and_then(|w| w.checked_add(o)).and_then(|n| acc.checked_add(n)))
        .ok_or(NnError::Truncated { needed: usize::MAX, have: bytes.len() })?;
    let payload_len = total.checked_mul(8).ok_or(NnError::Truncated { needed: usize::MAX, have: bytes.len() })?;
    let payload = r.take(payload_len)?;
    let covered = r.pos;
    let stored = r.u32()?;
    if r.pos != bytes.len() {
        return Err(NnError::TrailingBytes(bytes.len() - r.pos));
    }
    let computed = crc32fast::hash(&bytes[..covered]);
    if stored != computed {
        return Err(NnError::Checksum { stored, computed });
    }

    let mut values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let mut layers = Vec::with_capacity(shapes.len());
    for (inputs, outputs, activation) in shapes {
        let weights: Vec<f64> = values.by_ref().take(inputs * outputs).collect();
        let bias: Vec<f64> = values.by_ref().take(outputs).collect();
        layers.push(Layer { inputs, outputs, weights, bias, activation });
    }
    let net = DenseNet::from_layers(layers)?;
    if !net.is_finite() {
        return Err(NnError::NonFinite);
    }
    Ok(net)
}

pub fn save_net_file(net: &DenseNet, path: impl AsRef<Path>) -> Result<(), NnError> {
    std::fs::write(path.as_ref(), save_net(net)).map_err(|e| NnError::Io(format!("{}: {e}", path.as_ref().display())))
}

pub fn load_net_file(path: impl AsRef<Path>) -> Result<DenseNet, NnError> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| NnError::Io(format!("{}: {e}", path.as_ref().display())))?;
    load_net(&bytes)
}
