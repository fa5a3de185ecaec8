use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{Network, Param};
use super::spec::ModelSpec;
use super::train::{Model, Provenance};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ABSK";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    spec: ModelSpec,
    provenance: Provenance,
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let header = serde_json::to_vec(&Header {
        spec: model.net.spec.clone(),
        provenance: model.provenance.clone(),
    })
    .map_err(|e| Error::Format(e.to_string()))?;
    let mut buf = Vec::with_capacity(model.net.n_params() * 4 + header.len() + 64);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header);
    buf.extend_from_slice(&(model.net.params.len() as u32).to_le_bytes());
    for p in &model.net.params {
        buf.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        buf.extend_from_slice(p.name.as_bytes());
        buf.extend_from_slice(&(p.shape.len() as u32).to_le_bytes());
        for &d in &p.shape {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &p.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))?;
    f.sync_all().map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn corrupt(&self, reason: impl Into<String>) -> Error {
        Error::Corrupt {
            path: self.path.to_path_buf(),
            offset: self.pos as u64,
            reason: reason.into(),
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.corrupt(format!("truncated while reading {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn load_model(path: &Path) -> Result<Model> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut c = Cursor {
        bytes: &bytes,
        pos: 0,
        path,
    };
    if c.take(4, "magic")? != MAGIC {
        c.pos = 0;
        return Err(c.corrupt("bad magic bytes"));
    }
    let version = c.u32("version")?;
    if version != VERSION {
        return Err(c.corrupt(format!("unsupported format version {version}")));
    }
    let len = c.u32("header length")? as usize;
    let header: Header = serde_json::from_slice(c.take(len, "header")?)
        .map_err(|e| c.corrupt(format!("header: {e}")))?;
    let count = c.u32("tensor count")? as usize;
    let mut params = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let n = c.u32("tensor name length")? as usize;
        let name = std::str::from_utf8(c.take(n, "tensor name")?)
            .map_err(|_| c.corrupt("tensor name is not UTF-8"))?
            .to_string();
        let ndim = c.u32("tensor rank")? as usize;
        let mut shape = Vec::with_capacity(ndim.min(8));
        for _ in 0..ndim {
            shape.push(c.u32("tensor shape")? as usize);
        }
        let numel: usize = shape.iter().product();
        let raw = c.take(numel * 4, "tensor data")?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        params.push(Param { name, shape, data });
    }
    if c.pos != bytes.len() {
        return Err(c.corrupt("trailing bytes after last tensor"));
    }
    let net = Network::from_params(&header.spec, params)?;
    Ok(Model {
        net,
        provenance: header.provenance,
    })
}

/// Loads a model and checks that it accepts `input_dim`-sample vectors.
pub fn load_model_expecting(path: &Path, input_dim: usize) -> Result<Model> {
    let model = load_model(path)?;
    if model.net.input_dim() != input_dim {
        return Err(Error::Shape(format!(
            "model expects {}-sample inputs, not {input_dim}",
            model.net.input_dim()
        )));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::super::spec::OutputHead;
    use super::super::train::TrainConfig;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(input_dim: usize) -> Model {
        let mut spec = ModelSpec::mlp(OutputHead::AlphaAndScattering);
        spec.input_dim = input_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        Model {
            net: Network::new(&spec, &mut rng).unwrap(),
            provenance: Provenance {
                train_config: TrainConfig::default(),
                dataset_fingerprint: "abc".into(),
                best_epoch: 3,
                dev_loss: 0.25,
            },
        }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.absk");
        let m = model(100);
        save_model(&m, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back.net.spec, m.net.spec);
        assert_eq!(back.provenance, m.provenance);
        for (a, b) in back.net.params.iter().zip(&m.net.params) {
            assert_eq!(a.name, b.name);
            assert!(a.data.iter().zip(&b.data).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.absk");
        save_model(&model(50), &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        for cut in [2, 10, bytes.len() / 2, bytes.len() - 1] {
            fs::write(&path, &bytes[..cut]).unwrap();
            match load_model(&path) {
                Err(Error::Corrupt { offset, .. }) => assert!(offset as usize <= cut),
                other => panic!("cut {cut}: {other:?}"),
            }
        }
    }

    #[test]
    fn input_dim_mismatch_is_shape_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.absk");
        save_model(&model(50), &path).unwrap();
        assert!(matches!(load_model_expecting(&path, 8000), Err(Error::Shape(_))));
        assert!(load_model_expecting(&path, 50).is_ok());

        // Header claims a different input size than the stored tensors.
        let bytes = fs::read(&path).unwrap();
        let mut patched = bytes.clone();
        let at = bytes.windows(14).position(|w| w == b"\"input_dim\":50").unwrap();
        patched[at..at + 14].copy_from_slice(b"\"input_dim\":70");
        fs::write(&path, &patched).unwrap();
        assert!(matches!(load_model(&path), Err(Error::Shape(_))));
    }
}
