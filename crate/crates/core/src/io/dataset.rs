//! Binary channel dataset format.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "FDDC" | u16 version | u16 flags | f64 carrier_hz | f64 bandwidth_hz
//! u32 n_tti | u32 n_ant | u32 n_taps | f64 tap_spacing_s
//! n_tti * n_ant * n_taps pairs of f32 (re, im), tti-major, tap-minor
//! ```

use std::path::Path;

use ndarray::Array3;
use num_complex::Complex32;

use super::write_atomic;
use crate::channel::ChannelDataset;
use crate::error::{Error, Result};

const MAGIC: [u8; 4] = *b"FDDC";
pub const DATASET_VERSION: u16 = 1;
const SUPPORTED: &[u16] = &[DATASET_VERSION];
const HEADER_LEN: usize = 44;
const FLAG_INTERPOLATED_GRID: u16 = 1;

pub fn encode_dataset(ds: &ChannelDataset) -> Vec<u8> {
    let (t, m, k) = ds.samples.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * ds.samples.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    let flags = if ds.interpolated_grid {
        FLAG_INTERPOLATED_GRID
    } else {
        0
    };
    out.extend_from_slice(&flags.to_le_bytes());
    out.extend_from_slice(&ds.carrier_hz.to_le_bytes());
    out.extend_from_slice(&ds.bandwidth_hz.to_le_bytes());
    for d in [t, m, k] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&ds.tap_spacing_s.to_le_bytes());
    // standard layout iteration is t-major, tap-minor
    for z in ds.samples.iter() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let b: [u8; N] = self.buf[self.pos..self.pos + N].try_into().unwrap();
        self.pos += N;
        b
    }
    fn u16(&mut self) -> u16 {
        u16::from_le_bytes(self.take())
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn f32(&mut self) -> f32 {
        f32::from_le_bytes(self.take())
    }
    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

pub fn decode_dataset(bytes: &[u8]) -> Result<ChannelDataset> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(Error::BadMagic(bytes[..4].try_into().unwrap()));
        }
        return Err(Error::Truncated {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic: [u8; 4] = r.take();
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let version = r.u16();
    if !SUPPORTED.contains(&version) {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: SUPPORTED,
        });
    }
    let flags = r.u16();
    if flags & !FLAG_INTERPOLATED_GRID != 0 {
        return Err(Error::Validation(format!("unknown dataset flags {flags:#06x}")));
    }
    let carrier_hz = r.f64();
    let bandwidth_hz = r.f64();
    let (t, m, k) = (r.u32() as usize, r.u32() as usize, r.u32() as usize);
    let tap_spacing_s = r.f64();

    let expected = HEADER_LEN as u64 + 8 * t as u64 * m as u64 * k as u64;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(Error::Truncated { expected, found });
    }
    if found > expected {
        return Err(Error::Validation(format!(
            "dataset has {} trailing bytes after {expected}",
            found - expected
        )));
    }

    let mut samples = Vec::with_capacity(t * m * k);
    for _ in 0..t * m * k {
        let re = r.f32();
        let im = r.f32();
        samples.push(Complex32::new(re, im));
    }
    let samples = Array3::from_shape_vec((t, m, k), samples)
        .map_err(|e| Error::Validation(e.to_string()))?;
    let ds = ChannelDataset {
        carrier_hz,
        bandwidth_hz,
        tap_spacing_s,
        interpolated_grid: flags & FLAG_INTERPOLATED_GRID != 0,
        samples,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn write_dataset(ds: &ChannelDataset, path: &Path) -> Result<()> {
    write_atomic(path, &encode_dataset(ds))
}

pub fn read_dataset(path: &Path) -> Result<ChannelDataset> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&bytes)
}
