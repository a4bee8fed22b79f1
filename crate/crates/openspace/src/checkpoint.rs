//! Parameter checkpoints.
//!
//! ```text
//! file   := "RSCK" u16:version u32:meta_len meta u32:n_params param*
//! meta   := key=value text (UTF-8)
//! param  := u16:name_len name u8:trainable u8:ndim u32:dims[ndim]
//!           f32:value[] f32:acc[] f32:mom[]
//! ```
//!
//! Values and both RMSProp buffers are stored, so resuming is exact.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use openspace_core::nn::ParamStore;
use openspace_core::Tensor;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"RSCK";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub store: ParamStore<f32>,
}

fn f32_bytes(t: &Tensor<f32>, out: &mut Vec<u8>) {
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn write_checkpoint<W: Write>(mut w: W, ck: &Checkpoint) -> Result<()> {
    let mut meta = String::new();
    for (k, v) in &ck.meta {
        if k.contains(['=', '\n']) || v.contains('\n') {
            return Err(Error::InvalidRecord(format!("metadata entry `{k}` is not key=value safe")));
        }
        meta.push_str(k);
        meta.push('=');
        meta.push_str(v);
        meta.push('\n');
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    buf.extend_from_slice(meta.as_bytes());
    buf.extend_from_slice(&(ck.store.len() as u32).to_le_bytes());
    for p in ck.store.iter() {
        let shape = p.value.shape();
        buf.extend_from_slice(&(p.name.len() as u16).to_le_bytes());
        buf.extend_from_slice(p.name.as_bytes());
        buf.push(p.trainable as u8);
        buf.push(shape.len() as u8);
        for &d in shape {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        f32_bytes(&p.value, &mut buf);
        f32_bytes(&p.acc, &mut buf);
        f32_bytes(&p.mom, &mut buf);
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

struct Cursor<R> {
    r: R,
}

impl<R: Read> Cursor<R> {
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut b = vec![0u8; n];
        self.r.read_exact(&mut b).map_err(|e| match e.kind() {
            ErrorKind::UnexpectedEof => Error::Truncated("checkpoint"),
            _ => Error::Stream(e),
        })?;
        Ok(b)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().expect("4 bytes")))
    }

    fn tensor(&mut self, shape: &[usize]) -> Result<Tensor<f32>> {
        let n: usize = shape.iter().product();
        let raw = self.bytes(n * 4)?;
        let vals = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        Tensor::new(shape, vals).map_err(|e| Error::InvalidRecord(e.to_string()))
    }
}

pub fn read_checkpoint<R: Read>(r: R) -> Result<Checkpoint> {
    let mut c = Cursor { r };
    let magic: [u8; 4] = c.bytes(4)?.try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(Error::BadMagic { expected: MAGIC, found: magic });
    }
    let version = c.u16()?;
    if version != VERSION {
        return Err(Error::VersionMismatch { expected: VERSION, found: version });
    }
    let meta_len = c.u32()? as usize;
    let meta_text = String::from_utf8(c.bytes(meta_len)?).map_err(|_| Error::InvalidRecord("metadata is not UTF-8".into()))?;
    let meta = meta_text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let n = c.u32()? as usize;
    let mut store = ParamStore::new();
    for _ in 0..n {
        let name_len = c.u16()? as usize;
        let name = String::from_utf8(c.bytes(name_len)?).map_err(|_| Error::InvalidRecord("parameter name is not UTF-8".into()))?;
        let trainable = c.u8()? != 0;
        let ndim = c.u8()? as usize;
        let shape: Vec<usize> = (0..ndim).map(|_| c.u32().map(|d| d as usize)).collect::<Result<_>>()?;
        let value = c.tensor(&shape)?;
        let acc = c.tensor(&shape)?;
        let mom = c.tensor(&shape)?;
        let id = store.add(name, value, trainable);
        let p = store.get_mut(id);
        p.acc = acc;
        p.mom = mom;
    }
    Ok(Checkpoint { meta, store })
}

pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    let f = File::create(path).map_err(Error::io(path))?;
    write_checkpoint(BufWriter::new(f), ck)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let f = File::open(path).map_err(Error::io(path))?;
    read_checkpoint(BufReader::new(f))
}

/// Copies values and optimizer buffers into `target`, which must hold the
/// same names and shapes in the same order.
pub fn restore_into(src: &ParamStore<f32>, target: &mut ParamStore<f32>) -> Result<()> {
    if src.len() != target.len() {
        return Err(Error::CheckpointMismatch(format!(
            "{} parameters stored, model has {}",
            src.len(),
            target.len()
        )));
    }
    for (s, t) in src.iter().zip(target.iter_mut()) {
        if s.name != t.name || s.value.shape() != t.value.shape() {
            return Err(Error::CheckpointMismatch(format!(
                "`{}` {:?} vs `{}` {:?}",
                s.name,
                s.value.shape(),
                t.name,
                t.value.shape()
            )));
        }
        t.value = s.value.clone();
        t.acc = s.acc.clone();
        t.mom = s.mom.clone();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut store = ParamStore::new();
        let a = store.add("a.weight", Tensor::from_fn(&[2, 3], |i| i as f32 * 0.1 - 0.2), true);
        store.add("a.running_mean", Tensor::full(&[3], f32::MIN_POSITIVE), false);
        store.get_mut(a).acc = Tensor::full(&[2, 3], 1e-30);
        store.get_mut(a).mom = Tensor::full(&[2, 3], -0.0);
        let ck = Checkpoint {
            meta: [("arch".to_string(), "fcn_tiny".to_string())].into(),
            store,
        };
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &ck).unwrap();
        let back = read_checkpoint(&buf[..]).unwrap();
        assert_eq!(back.meta, ck.meta);
        for (x, y) in back.store.iter().zip(ck.store.iter()) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.trainable, y.trainable);
            for (u, v) in [(&x.value, &y.value), (&x.acc, &y.acc), (&x.mom, &y.mom)] {
                let ub: Vec<u32> = u.data().iter().map(|f| f.to_bits()).collect();
                let vb: Vec<u32> = v.data().iter().map(|f| f.to_bits()).collect();
                assert_eq!(ub, vb);
            }
        }
        assert!(matches!(read_checkpoint(&buf[..buf.len() - 2]), Err(Error::Truncated(_))));
        let mut other = ParamStore::new();
        other.add("b", Tensor::zeros(&[2, 3]), true);
        other.add("a.running_mean", Tensor::zeros(&[3]), false);
        assert!(restore_into(&back.store, &mut other).is_err());
    }
}
