//! The `.kfrg` container.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic  "KFRG"
//! u32    version
//! u8     record kind
//! u32    array count N
//! N ×  { u32×4 dims, dims product × (f32 re, f32 im), u32 CRC32 of the payload }
//! u32    metadata length L
//! L      UTF-8 JSON metadata
//! u32    CRC32 of the metadata
//! ```
//!
//! Real-valued arrays are stored with a zero imaginary part. Arrays with
//! fewer than four axes are padded with leading ones.

use std::path::Path;

use num_complex::Complex;
use serde_json::Value;

use crate::error::{Error, Result};

pub const KFRG_MAGIC: [u8; 4] = *b"KFRG";
pub const KFRG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
#[repr(u8)]
pub enum RecordKind {
    /// Fully sampled multi-coil k-space from the simulator.
    FullKspace = 0,
    /// Masked Cartesian k-space, line mask, sensitivities, initializer, target.
    CartesianKspace = 1,
    /// Gridded complex multi-coil images and target.
    GriddedComplex = 2,
    /// Magnitude frames and target.
    MagnitudeFrames = 3,
    /// A reconstructed magnitude series.
    Reconstruction = 4,
}

impl RecordKind {
    pub fn from_u8(v: u8) -> Result<Self> {
        Ok(match v {
            0 => Self::FullKspace,
            1 => Self::CartesianKspace,
            2 => Self::GriddedComplex,
            3 => Self::MagnitudeFrames,
            4 => Self::Reconstruction,
            _ => return Err(Error::Format(format!("unknown record kind {v}"))),
        })
    }
}

/// One complex64 array with up to four axes.
#[derive(Debug, Clone, PartialEq)]
pub struct KfrgArray {
    pub dims: [u32; 4],
    pub data: Vec<Complex<f32>>,
}

impl KfrgArray {
    pub fn new(dims: [usize; 4], data: Vec<Complex<f32>>) -> Result<Self> {
        let mut d = [0u32; 4];
        for (o, &v) in d.iter_mut().zip(&dims) {
            *o = u32::try_from(v).map_err(|_| Error::invalid(format!("axis length {v} does not fit in u32")))?;
        }
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::shape(format!(
                "dims {dims:?} hold {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims: d, data })
    }

    pub fn from_real(dims: [usize; 4], data: impl IntoIterator<Item = f32>) -> Result<Self> {
        Self::new(dims, data.into_iter().map(|v| Complex::new(v, 0.0)).collect())
    }

    pub fn shape(&self) -> [usize; 4] {
        self.dims.map(|d| d as usize)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn real_parts(&self) -> Vec<f32> {
        self.data.iter().map(|v| v.re).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KfrgFile {
    pub kind: RecordKind,
    pub arrays: Vec<KfrgArray>,
    pub metadata: Value,
}

pub fn encode_kfrg(file: &KfrgFile) -> Result<Vec<u8>> {
    let meta = serde_json::to_vec(&file.metadata).map_err(|e| Error::Format(format!("metadata: {e}")))?;
    let payload: usize = file.arrays.iter().map(|a| 20 + 8 * a.data.len()).sum();
    let mut out = Vec::with_capacity(13 + payload + 8 + meta.len());
    out.extend_from_slice(&KFRG_MAGIC);
    out.extend_from_slice(&KFRG_VERSION.to_le_bytes());
    out.push(file.kind as u8);
    let count = u32::try_from(file.arrays.len()).map_err(|_| Error::invalid("too many arrays"))?;
    out.extend_from_slice(&count.to_le_bytes());
    for a in &file.arrays {
        let n: u64 = a.dims.iter().map(|&d| d as u64).product();
        if n != a.data.len() as u64 {
            return Err(Error::shape(format!(
                "dims {:?} do not match {} values",
                a.dims,
                a.data.len()
            )));
        }
        for d in a.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        let start = out.len();
        for v in &a.data {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_le_bytes());
    }
    let len = u32::try_from(meta.len()).map_err(|_| Error::invalid("metadata too large"))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&meta);
    out.extend_from_slice(&crc32fast::hash(&meta).to_le_bytes());
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let remaining = self.buf.len() - self.pos;
        if n > remaining {
            return Err(Error::Format(format!(
                "truncated file: {what} needs {n} bytes at offset {}, {remaining} left",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

fn check_crc(section: String, bytes: &[u8], stored: u32) -> Result<()> {
    let computed = crc32fast::hash(bytes);
    if computed != stored {
        return Err(Error::Checksum {
            section,
            stored,
            computed,
        });
    }
    Ok(())
}

/// Parse a `.kfrg` image. Declared sizes are checked against the bytes
/// actually present before anything is allocated.
pub fn decode_kfrg(buf: &[u8]) -> Result<KfrgFile> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4, "magic")? != KFRG_MAGIC {
        return Err(Error::Format("not a kfrg file (bad magic)".into()));
    }
    let version = c.u32("version")?;
    if version != KFRG_VERSION {
        return Err(Error::Version {
            found: version,
            expected: KFRG_VERSION,
        });
    }
    let kind = RecordKind::from_u8(c.take(1, "kind")?[0])?;
    let count = c.u32("array count")? as usize;
    // Every array needs at least its dims and checksum.
    if count > (buf.len() - c.pos) / 20 {
        return Err(Error::Format(format!("array count {count} exceeds file size")));
    }
    let mut arrays = Vec::with_capacity(count);
    for i in 0..count {
        let mut dims = [0u32; 4];
        for d in dims.iter_mut() {
            *d = c.u32("dims")?;
        }
        let n = dims
            .iter()
            .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64))
            .and_then(|n| n.checked_mul(8))
            .filter(|&b| b <= (buf.len() - c.pos) as u64)
            .ok_or_else(|| Error::Format(format!("array {i} with dims {dims:?} exceeds file size")))?
            as usize;
        let bytes = c.take(n, "array payload")?;
        let stored = c.u32("array checksum")?;
        check_crc(format!("array {i}"), bytes, stored)?;
        let data = bytes
            .chunks_exact(8)
            .map(|b| {
                Complex::new(
                    f32::from_le_bytes(b[..4].try_into().unwrap()),
                    f32::from_le_bytes(b[4..].try_into().unwrap()),
                )
            })
            .collect();
        arrays.push(KfrgArray { dims, data });
    }
    let len = c.u32("metadata length")? as usize;
    let meta = c.take(len, "metadata")?;
    let stored = c.u32("metadata checksum")?;
    check_crc("metadata".into(), meta, stored)?;
    if c.pos != buf.len() {
        return Err(Error::Format(format!("{} trailing bytes", buf.len() - c.pos)));
    }
    let metadata = serde_json::from_slice(meta).map_err(|e| Error::Format(format!("metadata: {e}")))?;
    Ok(KfrgFile { kind, arrays, metadata })
}

pub fn write_kfrg(path: &Path, file: &KfrgFile) -> Result<()> {
    let bytes = encode_kfrg(file)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_kfrg(path: &Path) -> Result<KfrgFile> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Missing(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    decode_kfrg(&bytes)
}
