//! Small dense-network kernel: forward/backward passes, Adam, and a
//! checksummed binary checkpoint format.

mod adam;
mod checkpoint;
mod dense;

pub use adam::{adam_update, AdamState};
pub use checkpoint::{load_net, load_net_file, save_net, save_net_file, CHECKPOINT_EXTENSION, MAGIC, VERSION};
pub use dense::{Activation, DenseNet, ForwardCache, Gradients, Layer};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("input dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("layer {layer} expects {got} inputs but the previous layer emits {expected}")]
    LayerChain { layer: usize, expected: usize, got: usize },
    #[error("layer {layer} parameter arrays do not match its declared size")]
    Shape { layer: usize },
    #[error("network has no layers or a zero-width layer")]
    Empty,
    #[error("forward cache or gradient buffer does not match the network")]
    CacheMismatch,
    #[error("checkpoint: bad magic bytes")]
    BadMagic,
    #[error("checkpoint: unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("checkpoint: unknown activation tag {0}")]
    BadActivation(u8),
    #[error("checkpoint: stream truncated, needed {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("checkpoint: {0} trailing bytes after checksum")]
    TrailingBytes(usize),
    #[error("checkpoint: checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum { stored: u32, computed: u32 },
    #[error("checkpoint: non-finite parameter")]
    NonFinite,
    #[error("checkpoint i/o: {0}")]
    Io(String),
}
