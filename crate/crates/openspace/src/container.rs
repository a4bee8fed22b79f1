//! RSEG: a little-endian frame container.
//!
//! ```text
//! file    := "RSEG" u16:version record*
//! record  := u32:frame_id u16:sequence_id u8:n_payloads payload{n_payloads}
//! payload := u8:kind u8:dtype u8:ndim u32:dims[ndim] bytes
//! ```
//!
//! Payload bytes are the row-major elements (`f32` little-endian or `u8`).

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use openspace_core::Tensor;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"RSEG";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PayloadKind {
    Rad = 0,
    Ra = 1,
    Doa = 2,
    MaskPolar = 3,
    MaskCart = 4,
}

impl PayloadKind {
    pub const ALL: [PayloadKind; 5] = [
        PayloadKind::Rad,
        PayloadKind::Ra,
        PayloadKind::Doa,
        PayloadKind::MaskPolar,
        PayloadKind::MaskCart,
    ];

    pub fn is_mask(self) -> bool {
        matches!(self, PayloadKind::MaskPolar | PayloadKind::MaskCart)
    }

    fn from_u8(v: u8) -> Result<Self> {
        Self::ALL
            .get(v as usize)
            .copied()
            .ok_or_else(|| Error::InvalidRecord(format!("unknown payload kind {v}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PayloadData {
    F32(Tensor<f32>),
    U8(Tensor<u8>),
}

impl PayloadData {
    pub fn shape(&self) -> &[usize] {
        match self {
            PayloadData::F32(t) => t.shape(),
            PayloadData::U8(t) => t.shape(),
        }
    }

    fn dtype(&self) -> u8 {
        match self {
            PayloadData::F32(_) => 0,
            PayloadData::U8(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Payload {
    pub kind: PayloadKind,
    pub data: PayloadData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_id: u32,
    pub sequence_id: u16,
    pub payloads: Vec<Payload>,
}

impl FrameRecord {
    pub fn payload(&self, kind: PayloadKind) -> Option<&PayloadData> {
        self.payloads.iter().find(|p| p.kind == kind).map(|p| &p.data)
    }

    /// At least one input and one mask, no kind repeated.
    pub fn validate(&self) -> Result<()> {
        if !self.payloads.iter().any(|p| !p.kind.is_mask()) || !self.payloads.iter().any(|p| p.kind.is_mask()) {
            return Err(Error::InvalidRecord(format!(
                "frame {} needs at least one input and one mask payload",
                self.frame_id
            )));
        }
        for (i, p) in self.payloads.iter().enumerate() {
            if self.payloads[..i].iter().any(|q| q.kind == p.kind) {
                return Err(Error::InvalidRecord(format!("frame {} repeats {:?}", self.frame_id, p.kind)));
            }
        }
        if self.payloads.len() > u8::MAX as usize {
            return Err(Error::InvalidRecord("too many payloads".into()));
        }
        Ok(())
    }
}

pub fn write_records<W: Write>(mut w: W, records: &[FrameRecord]) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for r in records {
        r.validate()?;
        w.write_all(&r.frame_id.to_le_bytes())?;
        w.write_all(&r.sequence_id.to_le_bytes())?;
        w.write_all(&[r.payloads.len() as u8])?;
        for p in &r.payloads {
            let shape = p.data.shape();
            if shape.len() > u8::MAX as usize || shape.iter().any(|&d| d > u32::MAX as usize) {
                return Err(Error::InvalidRecord("payload shape does not fit the header".into()));
            }
            w.write_all(&[p.kind as u8, p.data.dtype(), shape.len() as u8])?;
            for &d in shape {
                w.write_all(&(d as u32).to_le_bytes())?;
            }
            match &p.data {
                PayloadData::F32(t) => {
                    let mut buf = Vec::with_capacity(t.len() * 4);
                    for v in t.data() {
                        buf.extend_from_slice(&v.to_le_bytes());
                    }
                    w.write_all(&buf)?;
                }
                PayloadData::U8(t) => w.write_all(t.data())?,
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Fills `buf` completely; a short read is reported as truncation of `what`.
fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], what: &'static str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => Error::Truncated(what),
        _ => Error::Stream(e),
    })
}

/// Reads one byte, or `None` at a clean end of stream.
fn read_first<R: Read>(r: &mut R) -> Result<Option<u8>> {
    let mut b = [0u8; 1];
    loop {
        match r.read(&mut b) {
            Ok(0) => return Ok(None),
            Ok(_) => return Ok(Some(b[0])),
            Err(e) if e.kind() == ErrorKind::Interrupted => continue,
            Err(e) => return Err(e.into()),
        }
    }
}

pub fn read_records<R: Read>(mut r: R) -> Result<Vec<FrameRecord>> {
    let mut magic = [0u8; 4];
    read_exact_or(&mut r, &mut magic, "header")?;
    if magic != MAGIC {
        return Err(Error::BadMagic {
            expected: MAGIC,
            found: magic,
        });
    }
    let mut v = [0u8; 2];
    read_exact_or(&mut r, &mut v, "header")?;
    let version = u16::from_le_bytes(v);
    if version != VERSION {
        return Err(Error::VersionMismatch {
            expected: VERSION,
            found: version,
        });
    }
    let mut records = Vec::new();
    while let Some(first) = read_first(&mut r)? {
        let mut head = [0u8; 7];
        head[0] = first;
        read_exact_or(&mut r, &mut head[1..], "record header")?;
        let frame_id = u32::from_le_bytes(head[0..4].try_into().expect("4 bytes"));
        let sequence_id = u16::from_le_bytes(head[4..6].try_into().expect("2 bytes"));
        let n = head[6] as usize;
        let mut payloads = Vec::with_capacity(n);
        for _ in 0..n {
            let mut ph = [0u8; 3];
            read_exact_or(&mut r, &mut ph, "payload header")?;
            let kind = PayloadKind::from_u8(ph[0])?;
            let mut dims = vec![0usize; ph[2] as usize];
            for d in &mut dims {
                let mut b = [0u8; 4];
                read_exact_or(&mut r, &mut b, "payload header")?;
                *d = u32::from_le_bytes(b) as usize;
            }
            let count: usize = dims.iter().product();
            let data = match ph[1] {
                0 => {
                    let mut raw = vec![0u8; count * 4];
                    read_exact_or(&mut r, &mut raw, "payload")?;
                    let vals = raw
                        .chunks_exact(4)
                        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                        .collect();
                    PayloadData::F32(Tensor::new(&dims, vals).map_err(|e| Error::InvalidRecord(e.to_string()))?)
                }
                1 => {
                    let mut raw = vec![0u8; count];
                    read_exact_or(&mut r, &mut raw, "payload")?;
                    PayloadData::U8(Tensor::new(&dims, raw).map_err(|e| Error::InvalidRecord(e.to_string()))?)
                }
                other => return Err(Error::InvalidRecord(format!("unknown dtype {other}"))),
            };
            payloads.push(Payload { kind, data });
        }
        records.push(FrameRecord {
            frame_id,
            sequence_id,
            payloads,
        });
    }
    Ok(records)
}

pub fn write_container(records: &[FrameRecord], path: &Path) -> Result<()> {
    let f = File::create(path).map_err(Error::io(path))?;
    write_records(BufWriter::new(f), records)
}

pub fn read_container(path: &Path) -> Result<Vec<FrameRecord>> {
    let f = File::open(path).map_err(Error::io(path))?;
    read_records(BufReader::new(f))
}
