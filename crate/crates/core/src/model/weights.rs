//! Binary weights file.
//!
//! ```text
//! "BCNW" | u32 version | u32 parametric layer count
//! per layer: u16 name length | name | weights entry | bias entry
//! entry: u8 dtype (0 = f32) | u8 rank | rank x u32 dims | f32 payload
//! u32 CRC32 of every preceding byte
//! ```
//! All integers and floats are little-endian.

use std::path::Path;

use super::{ModelError, ModelGraph};
use crate::nn::{LayerParams, Tensor};

pub const WEIGHTS_MAGIC: &[u8; 4] = b"BCNW";
pub const WEIGHTS_VERSION: u32 = 1;

fn put_tensor(out: &mut Vec<u8>, t: &Tensor) {
    out.push(0);
    out.push(t.shape().len() as u8);
    for &d in t.shape() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn write_weights(model: &ModelGraph) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    let layers: Vec<_> = model
        .layers()
        .iter()
        .zip(model.params())
        .filter_map(|(spec, p)| p.as_ref().map(|p| (spec, p)))
        .collect();
    out.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    for (spec, p) in layers {
        out.extend_from_slice(&(spec.name.len() as u16).to_le_bytes());
        out.extend_from_slice(spec.name.as_bytes());
        put_tensor(&mut out, &p.weights);
        put_tensor(&mut out, &p.bias);
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            ModelError::FormatError(format!("truncated at byte {} (wanted {n} more)", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ModelError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, ModelError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn tensor(&mut self, layer: &str, expected: &[usize]) -> Result<Tensor, ModelError> {
        let dtype = self.u8()?;
        if dtype != 0 {
            return Err(ModelError::FormatError(format!("unsupported dtype {dtype} in {layer}")));
        }
        let rank = self.u8()? as usize;
        let dims = (0..rank).map(|_| self.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        if dims != expected {
            return Err(ModelError::ArchitectureMismatch(format!(
                "{layer}: file has shape {dims:?}, model expects {expected:?}"
            )));
        }
        let n: usize = dims.iter().product();
        let data = self
            .take(n * 4)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Tensor::new(&dims, data)?)
    }
}

/// Replaces every parametric layer's weights from `bytes`. Optimizer state is reset.
pub fn read_weights(model: &mut ModelGraph, bytes: &[u8]) -> Result<(), ModelError> {
    if bytes.len() < 16 {
        return Err(ModelError::FormatError(format!("{} bytes is too short", bytes.len())));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(ModelError::ChecksumMismatch { stored, computed });
    }
    let mut r = Reader { bytes: body, pos: 0 };
    if r.take(4)? != WEIGHTS_MAGIC {
        return Err(ModelError::FormatError("bad magic".into()));
    }
    let version = r.u32()?;
    if version != WEIGHTS_VERSION {
        return Err(ModelError::FormatError(format!("unsupported version {version}")));
    }
    let count = r.u32()? as usize;
    let slots: Vec<usize> = model.params().iter().enumerate().filter(|(_, p)| p.is_some()).map(|(i, _)| i).collect();
    if count != slots.len() {
        return Err(ModelError::ArchitectureMismatch(format!(
            "file has {count} parametric layers, model has {}",
            slots.len()
        )));
    }
    let mut loaded = Vec::with_capacity(count);
    for &i in &slots {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| ModelError::FormatError("layer name is not UTF-8".into()))?
            .to_string();
        let spec = &model.layers()[i];
        if name != spec.name {
            return Err(ModelError::ArchitectureMismatch(format!("expected layer {}, found {name}", spec.name)));
        }
        let p = model.params()[i].as_ref().expect("parametric slot");
        let w = r.tensor(&name, p.weights.shape())?;
        let b = r.tensor(&name, p.bias.shape())?;
        loaded.push((i, LayerParams::new(w, b)));
    }
    if r.pos != body.len() {
        return Err(ModelError::FormatError(format!("{} trailing bytes", body.len() - r.pos)));
    }
    let params = model.params_mut();
    for (i, p) in loaded {
        params[i] = Some(p);
    }
    Ok(())
}

pub fn save_weights(model: &ModelGraph, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, write_weights(model)).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_weights(model: &mut ModelGraph, path: &Path) -> Result<(), ModelError> {
    let bytes = std::fs::read(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_weights(model, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_lwcnn, build_unet_sized};

    #[test]
    fn roundtrip_is_bitwise() {
        let a = build_lwcnn(9).unwrap();
        let mut b = build_lwcnn(9).unwrap();
        b.reinitialize(99);
        assert_ne!(a, b);
        let bytes = write_weights(&a);
        assert_eq!(&bytes[..4], b"BCNW");
        read_weights(&mut b, &bytes).unwrap();
        for (pa, pb) in a.params().iter().zip(b.params()) {
            if let (Some(pa), Some(pb)) = (pa, pb) {
                let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
                assert_eq!(bits(&pa.weights), bits(&pb.weights));
                assert_eq!(bits(&pa.bias), bits(&pb.bias));
            }
        }
        assert_eq!(write_weights(&b), bytes);
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let a = build_unet_sized(0.125, 32).unwrap();
        save_weights(&a, &path).unwrap();
        let mut b = build_unet_sized(0.125, 32).unwrap();
        b.reinitialize(5);
        load_weights(&mut b, &path).unwrap();
        assert_eq!(write_weights(&a), write_weights(&b));
        assert!(matches!(
            load_weights(&mut b, &dir.path().join("missing")),
            Err(ModelError::Io { .. })
        ));
    }

    #[test]
    fn architecture_mismatch() {
        let bytes = write_weights(&build_lwcnn(9).unwrap());
        let mut other = build_lwcnn(4).unwrap();
        assert!(matches!(read_weights(&mut other, &bytes), Err(ModelError::ArchitectureMismatch(_))));
        let mut unet = build_unet_sized(0.125, 32).unwrap();
        assert!(matches!(read_weights(&mut unet, &bytes), Err(ModelError::ArchitectureMismatch(_))));
    }

    #[test]
    fn any_flipped_byte_is_caught() {
        let model = build_lwcnn(2).unwrap();
        let bytes = write_weights(&model);
        for pos in [0, 5, 9, 20, bytes.len() / 2, bytes.len() - 5, bytes.len() - 1] {
            let mut bad = bytes.clone();
            bad[pos] ^= 0x10;
            let mut m = model.clone();
            assert!(
                matches!(read_weights(&mut m, &bad), Err(ModelError::ChecksumMismatch { .. })),
                "byte {pos}"
            );
        }
        let mut m = model.clone();
        assert!(matches!(read_weights(&mut m, &bytes[..10]), Err(ModelError::FormatError(_))));
    }
}
