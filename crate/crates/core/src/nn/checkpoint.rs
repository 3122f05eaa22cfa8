//! Binary network checkpoints.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "M2HNET\0\0"
//! 8       4     u32 format version (1)
//! 12      1     u8 scalar width in bytes (4 = f32, 8 = f64)
//! 13      4     u32 layer count L
//! then L layer records:
//!         4     u32 input dimension  I
//!         4     u32 output dimension O
//!         1     u8 activation (0 identity, 1 tanh, 2 sigmoid, 3 softmax)
//!         1     u8 layer norm flag (0 absent, 1 present)
//!         O*I   weights, row-major (one row per output unit)
//!         O     bias
//!         O     layer-norm gain   (only when flag = 1)
//!         O     layer-norm shift  (only when flag = 1)
//! ```

use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Activation, DenseLayer, LayerNorm, Network};
use crate::{Error, Result, Scalar};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"M2HNET\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn network_to_bytes<F: Scalar>(net: &Network<F>) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + net.num_params() * F::WIDTH as usize);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.push(F::WIDTH);
    out.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
    for layer in net.layers() {
        out.extend_from_slice(&(layer.in_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(layer.out_dim() as u32).to_le_bytes());
        out.push(layer.activation.code());
        out.push(u8::from(layer.layer_norm.is_some()));
        let mut put = |values: &mut dyn Iterator<Item = &F>| values.for_each(|x| x.write_le(&mut out));
        put(&mut layer.weights.iter());
        put(&mut layer.bias.iter());
        if let Some(ln) = &layer.layer_norm {
            put(&mut ln.gain.iter());
            put(&mut ln.shift.iter());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Format(format!("checkpoint truncated at byte {}", self.pos))
        })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn scalars<F: Scalar>(&mut self, n: usize) -> Result<Vec<F>> {
        let w = F::WIDTH as usize;
        let raw = self.take(n.checked_mul(w).ok_or_else(|| Error::Format("layer too large".into()))?)?;
        Ok(raw.chunks_exact(w).map(F::read_le).collect())
    }
}

pub fn network_from_bytes<F: Scalar>(bytes: &[u8]) -> Result<Network<F>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Format("not a network checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let width = r.u8()?;
    if width != F::WIDTH {
        return Err(Error::Format(format!(
            "checkpoint stores {width}-byte scalars, expected {}",
            F::WIDTH
        )));
    }
    let n_layers = r.u32()? as usize;
    let mut layers = Vec::with_capacity(n_layers.min(1024));
    for _ in 0..n_layers {
        let inputs = r.u32()? as usize;
        let outputs = r.u32()? as usize;
        let code = r.u8()?;
        let activation = Activation::from_code(code)
            .ok_or_else(|| Error::Format(format!("unknown activation code {code}")))?;
        let has_ln = match r.u8()? {
            0 => false,
            1 => true,
            other => return Err(Error::Format(format!("bad layer-norm flag {other}"))),
        };
        let weights = Array2::from_shape_vec((outputs, inputs), r.scalars(outputs * inputs)?)
            .map_err(|e| Error::Format(e.to_string()))?;
        let bias = Array1::from(r.scalars::<F>(outputs)?);
        let layer_norm = if has_ln {
            Some(LayerNorm {
                gain: Array1::from(r.scalars::<F>(outputs)?),
                shift: Array1::from(r.scalars::<F>(outputs)?),
            })
        } else {
            None
        };
        layers.push(DenseLayer::new(weights, bias, activation, layer_norm)?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after checkpoint",
            bytes.len() - r.pos
        )));
    }
    Network::new(layers)
}

pub fn save_network<F: Scalar>(net: &Network<F>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, network_to_bytes(net)).map_err(|e| Error::io(path, e))
}

pub fn load_network<F: Scalar>(path: impl AsRef<Path>) -> Result<Network<F>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    network_from_bytes(&bytes)
}
