//! Little-endian binary files for trajectories (`KTRJ`) and line masks (`KMSK`).
//!
//! Both share a 16-byte header `{magic, version u32, T u32, S u32}` followed
//! by the payload and an 8-byte trailer with the readout structure
//! (`per_frame, samples`) or the line counts (`n_center, n_random`).
//! Coordinates and weights are stored as `f32`.

use std::fs;
use std::path::Path;

use ndarray::{Array2, Array3};

use super::{CartesianMask, Readout, Trajectory};
use crate::error::{Error, Result};
use crate::scalar::Real;

const TRAJ_MAGIC: &[u8; 4] = b"KTRJ";
const MASK_MAGIC: &[u8; 4] = b"KMSK";
const VERSION: u32 = 1;
const HEADER: usize = 16;
const TRAILER: usize = 8;

fn header(magic: &[u8; 4], t: usize, s: usize) -> Result<Vec<u8>> {
    let (t, s) = (
        u32::try_from(t).map_err(|_| Error::invalid("too many frames"))?,
        u32::try_from(s).map_err(|_| Error::invalid("too many samples"))?,
    );
    let mut out = Vec::with_capacity(HEADER);
    out.extend_from_slice(magic);
    for v in [VERSION, t, s] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn f32_at(b: &[u8], at: usize) -> f32 {
    f32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

/// Validate the header and return `(T, S)` after checking the payload size.
fn parse_header(bytes: &[u8], magic: &[u8; 4], payload: impl Fn(u64, u64) -> u64) -> Result<(usize, usize)> {
    if bytes.len() < HEADER {
        return Err(Error::Format(format!(
            "file is {} bytes, shorter than the header",
            bytes.len()
        )));
    }
    if &bytes[..4] != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&bytes[..4]),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(Error::Version {
            found: version,
            expected: VERSION,
        });
    }
    let (t, s) = (u32_at(bytes, 8) as u64, u32_at(bytes, 12) as u64);
    let expected = HEADER as u64 + payload(t, s) + TRAILER as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::Format(format!(
            "file is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    Ok((t as usize, s as usize))
}

pub fn encode_trajectory<T: Real>(traj: &Trajectory<T>) -> Result<Vec<u8>> {
    let (t, s) = (traj.frames(), traj.samples_per_frame());
    let mut out = header(TRAJ_MAGIC, t, s)?;
    out.reserve(t * s * 12 + TRAILER);
    for &v in traj.coords.iter().chain(traj.dcf.iter()) {
        out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    for v in [traj.readout.per_frame, traj.readout.samples] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_trajectory<T: Real>(bytes: &[u8]) -> Result<Trajectory<T>> {
    let (t, s) = parse_header(bytes, TRAJ_MAGIC, |t, s| t * s * 12)?;
    let n = t * s;
    let value = |i: usize| T::of(f32_at(bytes, HEADER + 4 * i) as f64);
    let coords = Array3::from_shape_fn((t, s, 2), |(a, b, c)| value((a * s + b) * 2 + c));
    let dcf = Array2::from_shape_fn((t, s), |(a, b)| value(2 * n + a * s + b));
    let tail = HEADER + 12 * n;
    let readout = Readout {
        per_frame: u32_at(bytes, tail) as usize,
        samples: u32_at(bytes, tail + 4) as usize,
    };
    Trajectory::new(coords, dcf, readout)
}

pub fn encode_mask(mask: &CartesianMask) -> Result<Vec<u8>> {
    let (t, h) = mask.mask.dim();
    let mut out = header(MASK_MAGIC, t, h)?;
    let mut packed = vec![0u8; (t * h).div_ceil(8)];
    for (i, &on) in mask.mask.iter().enumerate() {
        if on {
            packed[i / 8] |= 1 << (i % 8);
        }
    }
    out.extend_from_slice(&packed);
    for v in [mask.n_center, mask.n_random] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_mask(bytes: &[u8]) -> Result<CartesianMask> {
    let (t, h) = parse_header(bytes, MASK_MAGIC, |t, h| (t * h).div_ceil(8))?;
    let bits = &bytes[HEADER..];
    let mask = Array2::from_shape_fn((t, h), |(a, b)| {
        let i = a * h + b;
        bits[i / 8] >> (i % 8) & 1 == 1
    });
    let tail = HEADER + (t * h).div_ceil(8);
    Ok(CartesianMask {
        mask,
        n_center: u32_at(bytes, tail) as usize,
        n_random: u32_at(bytes, tail + 4) as usize,
    })
}

fn read(path: &Path) -> Result<Vec<u8>> {
    if !path.exists() {
        return Err(Error::Missing(path.to_path_buf()));
    }
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_trajectory<T: Real>(path: &Path, traj: &Trajectory<T>) -> Result<()> {
    fs::write(path, encode_trajectory(traj)?).map_err(|e| Error::io(path, e))
}

pub fn read_trajectory<T: Real>(path: &Path) -> Result<Trajectory<T>> {
    decode_trajectory(&read(path)?)
}

pub fn write_mask(path: &Path, mask: &CartesianMask) -> Result<()> {
    fs::write(path, encode_mask(mask)?).map_err(|e| Error::io(path, e))
}

pub fn read_mask(path: &Path) -> Result<CartesianMask> {
    decode_mask(&read(path)?)
}
