//! Network checkpoint format.
//!
//! `CNNW`, version (u32), then the config block: patch size, bands, classes,
//! conv block count and `(filters, kernel)` pairs, hidden layer count and
//! widths (all u32), dropout rate (f64), init scheme (u8). Next the dropout
//! generator state: 32-byte seed, stream (u64), word position (u128). Then
//! every layer's weights followed by its bias, conv blocks first, as f64.
//! All integers and reals are little-endian.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ConvSpec, InitScheme, NetworkConfig};
use super::network::{Layer, Network};
use crate::error::{Error, Result};

pub const NETWORK_MAGIC: &[u8; 4] = b"CNNW";
const VERSION: u32 = 1;

pub fn encode_network(net: &Network) -> Vec<u8> {
    let cfg = net.config();
    let mut out = Vec::new();
    out.extend_from_slice(NETWORK_MAGIC);
    let put_u32 = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
    put_u32(&mut out, VERSION as usize);
    put_u32(&mut out, cfg.patch_size);
    put_u32(&mut out, cfg.bands);
    put_u32(&mut out, cfg.classes);
    put_u32(&mut out, cfg.conv.len());
    for spec in &cfg.conv {
        put_u32(&mut out, spec.filters);
        put_u32(&mut out, spec.kernel);
    }
    put_u32(&mut out, cfg.dense.len());
    for &n in &cfg.dense {
        put_u32(&mut out, n);
    }
    out.extend_from_slice(&cfg.dropout.to_le_bytes());
    out.push(match cfg.init {
        InitScheme::Scaled => 0,
        InitScheme::Raw => 1,
    });
    let rng = &net.dropout_rng;
    out.extend_from_slice(&rng.get_seed());
    out.extend_from_slice(&rng.get_stream().to_le_bytes());
    out.extend_from_slice(&rng.get_word_pos().to_le_bytes());
    for layer in net.layers() {
        for v in layer.weights.iter().chain(&layer.bias) {
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
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::format(self.bytes.len() as u64, format!("truncated, needed {n} more bytes at {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_network(bytes: &[u8]) -> Result<Network> {
    if bytes.len() < 4 || &bytes[..4] != NETWORK_MAGIC {
        return Err(Error::format(0, "missing CNNW magic"));
    }
    let mut r = Reader { bytes, pos: 4 };
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(Error::format(4, format!("unsupported checkpoint version {version}")));
    }
    let patch_size = r.u32()?;
    let bands = r.u32()?;
    let classes = r.u32()?;
    let n_conv = r.u32()?;
    if n_conv > 64 {
        return Err(Error::format(r.pos as u64 - 4, format!("implausible conv block count {n_conv}")));
    }
    let mut conv = Vec::with_capacity(n_conv);
    for _ in 0..n_conv {
        let filters = r.u32()?;
        let kernel = r.u32()?;
        conv.push(ConvSpec { filters, kernel });
    }
    let n_dense = r.u32()?;
    if n_dense > 64 {
        return Err(Error::format(r.pos as u64 - 4, format!("implausible dense layer count {n_dense}")));
    }
    let mut dense = Vec::with_capacity(n_dense);
    for _ in 0..n_dense {
        dense.push(r.u32()?);
    }
    let dropout = r.f64()?;
    let init_at = r.pos;
    let init = match r.take(1)?[0] {
        0 => InitScheme::Scaled,
        1 => InitScheme::Raw,
        other => return Err(Error::format(init_at as u64, format!("unknown init scheme {other}"))),
    };
    let config = NetworkConfig {
        patch_size,
        bands,
        classes,
        conv,
        dense,
        dropout,
        init,
    };
    config
        .validate()
        .map_err(|e| Error::format(4, format!("invalid config block: {e}")))?;

    let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
    let stream = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
    let word_pos = u128::from_le_bytes(r.take(16)?.try_into().unwrap());
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(stream);
    rng.set_word_pos(word_pos);

    let template = Network::init(config.clone(), 0)?;
    let mut read_layer = |shape: &Layer| -> Result<Layer> {
        let mut weights = Vec::with_capacity(shape.weights.len());
        for _ in 0..shape.weights.len() {
            weights.push(r.f64()?);
        }
        let mut bias = Vec::with_capacity(shape.bias.len());
        for _ in 0..shape.bias.len() {
            bias.push(r.f64()?);
        }
        Ok(Layer { weights, bias })
    };
    let conv_layers = template.conv_layers().iter().map(&mut read_layer).collect::<Result<Vec<_>>>()?;
    let dense_layers = template.dense_layers().iter().map(&mut read_layer).collect::<Result<Vec<_>>>()?;
    if r.pos != bytes.len() {
        return Err(Error::format(r.pos as u64, format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Network::from_parts(config, conv_layers, dense_layers, rng)
}

pub fn write_network(path: impl AsRef<Path>, net: &Network) -> Result<()> {
    fs::write(path, encode_network(net))?;
    Ok(())
}

pub fn read_network(path: impl AsRef<Path>) -> Result<Network> {
    decode_network(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> NetworkConfig {
        NetworkConfig {
            patch_size: 5,
            bands: 2,
            classes: 3,
            conv: vec![ConvSpec { filters: 3, kernel: 3 }, ConvSpec { filters: 2, kernel: 2 }],
            dense: vec![4],
            dropout: 0.5,
            init: InitScheme::Raw,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut net = Network::init(small(), 4).unwrap();
        // advance the dropout stream so its position matters
        let x = vec![0.3; 2 * 50];
        net.forward_train(&x, 2, true).unwrap();
        let bytes = encode_network(&net);
        let back = decode_network(&bytes).unwrap();
        assert_eq!(back, net);
        assert_eq!(encode_network(&back), bytes);
    }

    #[test]
    fn corrupt_inputs() {
        let net = Network::init(small(), 4).unwrap();
        let bytes = encode_network(&net);
        assert!(matches!(decode_network(b"XXXX"), Err(Error::Format { offset: 0, .. })));
        assert!(matches!(decode_network(&bytes[..bytes.len() - 1]), Err(Error::Format { .. })));
        let mut long = bytes.clone();
        long.push(1);
        assert!(matches!(decode_network(&long), Err(Error::Format { .. })));
    }
}
