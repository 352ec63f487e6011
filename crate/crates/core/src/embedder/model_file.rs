//! Binary model format.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "AEMB"
//! 4       4           format version, u32 LE (currently 1)
//! 8       4           layer count L, u32 LE
//! 12      9 × L       per layer: in_dim u32 LE, out_dim u32 LE, activation u8 (0 relu, 1 linear)
//! ...     8 × Σ(...)  per layer in order: out×in weights (row-major) then out biases, f64 LE
//! ```
//!
//! The payload must end exactly after the last bias.

use std::path::Path;

use super::EmbedderNet;
use crate::error::{Error, Result};
use crate::numeric::{Activation, DenseLayer, Matrix};

pub const MAGIC: [u8; 4] = *b"AEMB";
pub const FORMAT_VERSION: u32 = 1;

pub fn save_model(net: &EmbedderNet) -> Vec<u8> {
    let layers = net.layers();
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    for l in layers {
        out.extend_from_slice(&(l.in_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(l.out_dim() as u32).to_le_bytes());
        out.push(match l.activation() {
            Activation::Relu => 0,
            Activation::Linear => 1,
        });
    }
    for l in layers {
        for v in l.weights().as_slice().iter().chain(l.biases()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Format(format!(
                "truncated payload reading {what} at byte {}",
                self.pos
            ))),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

pub fn load_model(bytes: &[u8]) -> Result<EmbedderNet> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {magic:02x?}, expected \"AEMB\""
        )));
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported model format version {version} (this build reads version {FORMAT_VERSION})"
        )));
    }
    let count = r.u32("layer count")? as usize;
    if count == 0 {
        return Err(Error::Format("model has no layers".into()));
    }
    let mut shapes = Vec::with_capacity(count.min(1024));
    for i in 0..count {
        let in_dim = r.u32("layer header")? as usize;
        let out_dim = r.u32("layer header")? as usize;
        let activation = match r.take(1, "activation")?[0] {
            0 => Activation::Relu,
            1 => Activation::Linear,
            other => {
                return Err(Error::Format(format!(
                    "layer {i}: unknown activation tag {other}"
                )))
            }
        };
        shapes.push((in_dim, out_dim, activation));
    }
    let mut layers = Vec::with_capacity(count);
    for (in_dim, out_dim, activation) in shapes {
        let n = in_dim
            .checked_mul(out_dim)
            .ok_or_else(|| Error::Format("layer size overflows".into()))?;
        if n.saturating_mul(8) > bytes.len() {
            return Err(Error::Format("truncated payload reading weights".into()));
        }
        let weights = (0..n)
            .map(|_| r.f64("weights"))
            .collect::<Result<Vec<_>>>()?;
        let biases = (0..out_dim)
            .map(|_| r.f64("biases"))
            .collect::<Result<Vec<_>>>()?;
        let layer = DenseLayer::new(
            Matrix::from_vec(out_dim, in_dim, weights)?,
            biases,
            activation,
        )
        .map_err(|e| Error::Format(e.to_string()))?;
        layers.push(layer);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after model payload",
            bytes.len() - r.pos
        )));
    }
    EmbedderNet::from_layers(layers).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_model(net: &EmbedderNet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, save_model(net)).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<EmbedderNet> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    load_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedder::EmbedderConfig;
    use proptest::prelude::*;

    fn bits(net: &EmbedderNet) -> Vec<u64> {
        net.layers()
            .iter()
            .flat_map(|l| {
                l.weights()
                    .as_slice()
                    .iter()
                    .chain(l.biases())
                    .map(|v| v.to_bits())
            })
            .collect()
    }

    fn sample_net() -> EmbedderNet {
        EmbedderNet::init(
            7,
            &EmbedderConfig {
                hidden: vec![5, 3],
                embedding_dim: 2,
                seed: 17,
            },
        )
        .unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = save_model(&sample_net());
        assert_eq!(&bytes[..4], b"AEMB");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &7u32.to_le_bytes());
        assert_eq!(&bytes[16..20], &5u32.to_le_bytes());
        assert_eq!(bytes[20], 0);
        let params = 7 * 5 + 5 + 5 * 3 + 3 + 3 * 2 + 2;
        assert_eq!(bytes.len(), 12 + 9 * 3 + 8 * params);
    }

    #[test]
    fn corrupted_magic() {
        let mut bytes = save_model(&sample_net());
        bytes[0] = b'X';
        assert!(matches!(load_model(&bytes), Err(Error::Format(m)) if m.contains("magic")));
    }

    #[test]
    fn newer_version_is_rejected_explicitly() {
        let mut bytes = save_model(&sample_net());
        bytes[4..8].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
        assert!(matches!(load_model(&bytes), Err(Error::Format(m)) if m.contains("version 2")));
    }

    #[test]
    fn truncation_and_trailing_bytes() {
        let bytes = save_model(&sample_net());
        for cut in [0, 3, 7, 11, 20, bytes.len() - 1] {
            assert!(load_model(&bytes[..cut]).is_err(), "cut at {cut}");
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(load_model(&extra).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.aemb");
        let net = sample_net();
        write_model(&net, &path).unwrap();
        assert_eq!(bits(&read_model(&path).unwrap()), bits(&net));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn round_trip_is_bitwise(
            input in 1usize..10,
            hidden in proptest::collection::vec(1usize..12, 0..4),
            k in 1usize..5,
            seed in any::<u64>(),
        ) {
            let net = EmbedderNet::init(input, &EmbedderConfig { hidden, embedding_dim: k, seed }).unwrap();
            let back = load_model(&save_model(&net)).unwrap();
            prop_assert_eq!(bits(&back), bits(&net));
            prop_assert_eq!(back, net);
        }
    }
}
