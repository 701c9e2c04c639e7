//! WRXC checkpoints: run configuration plus every parameter tensor.
//!
//! Layout (little-endian): `"WRXC"`, u32 version, u32 n_layers,
//! u32 n_features, u32 config byte length, config TOML, u32 tensor count,
//! then per tensor a u32 name length, the name, a u32 value count and the
//! values as f32. The prune mask follows the trainable tensors, then the
//! input normalizer's mean and scale (each L×F).

use std::fs;
use std::path::Path;

use crate::encoders::FeatureNorm;
use crate::error::{Error, Result};
use crate::io::config::RunConfig;
use crate::model::{Model, ModelParams};

pub const WRXC_MAGIC: &[u8; 4] = b"WRXC";
pub const WRXC_VERSION: u32 = 1;
const MASK_NAME: &str = "prune_mask";
const NORM_MEAN: &str = "feature_mean";
const NORM_SCALE: &str = "feature_scale";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub model: Model,
    /// Applied to every representation before the model sees it.
    pub norm: FeatureNorm,
}

impl Checkpoint {
    pub fn new(config: RunConfig, model: Model, norm: FeatureNorm) -> Result<Self> {
        let mc = &model.config;
        if norm.mean.dim() != (mc.n_layers, mc.n_features) || norm.scale.dim() != norm.mean.dim() {
            return Err(Error::invalid("normalizer shape does not match the model input"));
        }
        Ok(Self { config, model, norm })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mc = &self.model.config;
        let mut out = Vec::new();
        out.extend_from_slice(WRXC_MAGIC);
        for v in [WRXC_VERSION, mc.n_layers as u32, mc.n_features as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let text = self.config.to_toml();
        put_bytes(&mut out, text.as_bytes());
        let p = &self.model.params;
        let tensors = p.tensors();
        out.extend_from_slice(&(tensors.len() as u32 + 3).to_le_bytes());
        let extra = [
            (MASK_NAME, p.prune_mask.as_slice().expect("contiguous")),
            (NORM_MEAN, self.norm.mean.as_slice().expect("contiguous")),
            (NORM_SCALE, self.norm.scale.as_slice().expect("contiguous")),
        ];
        for (name, values) in tensors.iter().copied().chain(extra) {
            put_bytes(&mut out, name.as_bytes());
            out.extend_from_slice(&(values.len() as u32).to_le_bytes());
            for &v in values {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != WRXC_MAGIC {
            return Err(Error::format("not a WRXC checkpoint (bad magic)"));
        }
        let version = r.u32()?;
        if version != WRXC_VERSION {
            return Err(Error::format(format!("unsupported checkpoint version {version}")));
        }
        let n_layers = r.u32()? as usize;
        let n_features = r.u32()? as usize;
        let text = std::str::from_utf8(r.block()?).map_err(|_| Error::format("checkpoint config is not UTF-8"))?;
        let config = RunConfig::from_toml(text)?;
        let model_cfg = config.model_config(n_layers, n_features);
        model_cfg.validate()?;
        let mut params = ModelParams::zeros(&model_cfg);
        let count = r.u32()? as usize;
        if count != params.tensors().len() + 3 {
            return Err(Error::format(format!("checkpoint holds {count} tensors")));
        }
        for (name, dst) in params.tensors_mut() {
            read_tensor(&mut r, name, dst)?;
        }
        let mask = params.prune_mask.as_slice_mut().expect("contiguous");
        read_tensor(&mut r, MASK_NAME, mask)?;
        let mut norm = FeatureNorm::identity(n_layers, n_features);
        read_tensor(&mut r, NORM_MEAN, norm.mean.as_slice_mut().expect("contiguous"))?;
        read_tensor(&mut r, NORM_SCALE, norm.scale.as_slice_mut().expect("contiguous"))?;
        if r.pos != bytes.len() {
            return Err(Error::format(format!(
                "{} trailing bytes in checkpoint",
                bytes.len() - r.pos
            )));
        }
        Self::new(config, Model::from_parts(model_cfg, params)?, norm)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    out.extend_from_slice(&(b.len() as u32).to_le_bytes());
    out.extend_from_slice(b);
}

fn read_tensor(r: &mut Reader<'_>, name: &str, dst: &mut [f64]) -> Result<()> {
    let found = r.block()?;
    if found != name.as_bytes() {
        return Err(Error::format(format!(
            "expected tensor '{name}', found '{}'",
            String::from_utf8_lossy(found)
        )));
    }
    let n = r.u32()? as usize;
    if n != dst.len() {
        return Err(Error::format(format!(
            "tensor '{name}' has {n} values, expected {}",
            dst.len()
        )));
    }
    let raw = r.take(4 * n)?;
    for (d, c) in dst.iter_mut().zip(raw.chunks_exact(4)) {
        *d = f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes")));
    }
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(format!("checkpoint truncated at byte {} (needed {n} more)", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn block(&mut self) -> Result<&'a [u8]> {
        let n = self.u32()? as usize;
        self.take(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let config = RunConfig {
            embed_dim: 6,
            attn_hidden: 3,
            prune_pct: 0.5,
            ..Default::default()
        };
        let model = Model::new(config.model_config(2, 4)).unwrap();
        let mut norm = FeatureNorm::identity(2, 4);
        norm.mean[(1, 2)] = -0.5;
        norm.scale[(0, 3)] = 3.0;
        Checkpoint::new(config, model, norm).unwrap()
    }

    #[test]
    fn round_trip_through_f32() {
        let ck = sample();
        let bytes = ck.to_bytes();
        assert_eq!(&bytes[..4], b"WRXC");
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.config, ck.config);
        for ((_, a), (_, b)) in back.model.params.tensors().iter().zip(ck.model.params.tensors().iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(*x, *y as f32 as f64);
            }
        }
        assert_eq!(back.model.params.prune_mask, ck.model.params.prune_mask);
        assert_eq!(back.norm, ck.norm);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn corrupt_input() {
        let bytes = sample().to_bytes();
        assert!(matches!(
            Checkpoint::from_bytes(&bytes[..bytes.len() - 3]),
            Err(Error::Format(_))
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(Error::Format(_))));
        let mut extra = bytes;
        extra.push(0);
        assert!(matches!(Checkpoint::from_bytes(&extra), Err(Error::Format(_))));
    }
}
