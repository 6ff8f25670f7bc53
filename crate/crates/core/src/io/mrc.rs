//! MRC2014 reading (modes 0, 1, 2, 6) and writing (modes 0 and 2) for
//! single-section 2D images.
//!
//! Data is stored with x (columns) varying fastest, so a section maps onto a
//! row-major `rows = ny, cols = nx` array without reordering.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian, WriteBytesExt};
use log::warn;
use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const HEADER_BYTES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrcMode {
    Int8,
    Int16,
    Float32,
    Uint16,
}

impl MrcMode {
    pub fn from_code(code: i32) -> Result<Self> {
        match code {
            0 => Ok(Self::Int8),
            1 => Ok(Self::Int16),
            2 => Ok(Self::Float32),
            6 => Ok(Self::Uint16),
            other => Err(Error::UnsupportedMrcMode(other)),
        }
    }

    pub fn code(self) -> i32 {
        match self {
            Self::Int8 => 0,
            Self::Int16 => 1,
            Self::Float32 => 2,
            Self::Uint16 => 6,
        }
    }

    fn bytes_per_value(self) -> usize {
        match self {
            Self::Int8 => 1,
            Self::Int16 | Self::Uint16 => 2,
            Self::Float32 => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrcHeader {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub mode: MrcMode,
    pub cell_angstrom: [f32; 3],
    pub sampling: [i32; 3],
    pub extended_bytes: usize,
    pub little_endian: bool,
}

impl MrcHeader {
    /// Pixel size along x from the cell dimensions, when recorded.
    pub fn pixel_size_angstrom(&self) -> Option<f64> {
        let (len, mx) = (self.cell_angstrom[0] as f64, self.sampling[0]);
        (mx > 0 && len > 0.0 && len.is_finite()).then(|| len / mx as f64)
    }

    fn parse(buf: &[u8]) -> Result<Self> {
        // Machine stamp at byte 212: 0x44 0x4? little endian, 0x11 0x11 big endian.
        // Old writers leave it zero; fall back to the plausibility of nx.
        let little = match buf[212] {
            0x44 => true,
            0x11 => false,
            _ => {
                let le = LittleEndian::read_i32(&buf[0..4]);
                (1..=1 << 24).contains(&le)
            }
        };
        let rd = |off: usize| -> i32 {
            if little {
                LittleEndian::read_i32(&buf[off..off + 4])
            } else {
                BigEndian::read_i32(&buf[off..off + 4])
            }
        };
        let rf = |off: usize| -> f32 {
            if little {
                LittleEndian::read_f32(&buf[off..off + 4])
            } else {
                BigEndian::read_f32(&buf[off..off + 4])
            }
        };
        let (nx, ny, nz) = (rd(0), rd(4), rd(8));
        if nx <= 0 || ny <= 0 || nz <= 0 {
            return Err(Error::InvalidMrc(format!(
                "nonpositive dimensions {nx}x{ny}x{nz}"
            )));
        }
        let mode = MrcMode::from_code(rd(12))?;
        let nsymbt = rd(92);
        if nsymbt < 0 {
            return Err(Error::InvalidMrc(format!("negative extended header size {nsymbt}")));
        }
        Ok(Self {
            nx: nx as usize,
            ny: ny as usize,
            nz: nz as usize,
            mode,
            cell_angstrom: [rf(40), rf(44), rf(48)],
            sampling: [rd(28), rd(32), rd(36)],
            extended_bytes: nsymbt as usize,
            little_endian: little,
        })
    }
}

/// First section of an MRC file as `f64` values plus its header.
#[derive(Debug, Clone)]
pub struct MrcImage {
    pub header: MrcHeader,
    pub data: Array2<f64>,
}

pub fn read_mrc(path: &Path) -> Result<MrcImage> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut head = [0u8; HEADER_BYTES];
    reader
        .read_exact(&mut head)
        .map_err(|e| Error::io(path, e))?;
    let header = MrcHeader::parse(&head)?;
    if header.nz > 1 {
        warn!(
            "{}: {} sections present, using the first",
            path.display(),
            header.nz
        );
    }
    if header.extended_bytes > 0 {
        std::io::copy(
            &mut (&mut reader).take(header.extended_bytes as u64),
            &mut std::io::sink(),
        )
        .map_err(|e| Error::io(path, e))?;
    }
    let count = header.nx * header.ny;
    let mut raw = vec![0u8; count * header.mode.bytes_per_value()];
    reader
        .read_exact(&mut raw)
        .map_err(|e| Error::io(path, e))?;

    let le = header.little_endian;
    let values: Vec<f64> = match header.mode {
        MrcMode::Int8 => raw.iter().map(|&b| b as i8 as f64).collect(),
        MrcMode::Int16 => raw
            .chunks_exact(2)
            .map(|c| if le { LittleEndian::read_i16(c) } else { BigEndian::read_i16(c) } as f64)
            .collect(),
        MrcMode::Uint16 => raw
            .chunks_exact(2)
            .map(|c| if le { LittleEndian::read_u16(c) } else { BigEndian::read_u16(c) } as f64)
            .collect(),
        MrcMode::Float32 => raw
            .chunks_exact(4)
            .map(|c| if le { LittleEndian::read_f32(c) } else { BigEndian::read_f32(c) } as f64)
            .collect(),
    };
    let data = Array2::from_shape_vec((header.ny, header.nx), values)
        .map_err(|e| Error::InvalidMrc(e.to_string()))?;
    Ok(MrcImage { header, data })
}

/// Writes a single-section little-endian MRC2014 file.
///
/// Values are converted to the storage type of `mode`; integer modes round
/// to nearest and saturate.
pub fn write_mrc<T: Real>(
    path: &Path,
    data: ArrayView2<'_, T>,
    mode: MrcMode,
    pixel_size_angstrom: Option<f64>,
) -> Result<()> {
    let (ny, nx) = data.dim();
    let values: Vec<f64> = data.iter().map(|v| v.as_f64()).collect();
    let (mut dmin, mut dmax, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &v in &values {
        dmin = dmin.min(v);
        dmax = dmax.max(v);
        sum += v;
    }
    let dmean = sum / values.len().max(1) as f64;
    let rms = (values.iter().map(|v| (v - dmean).powi(2)).sum::<f64>()
        / values.len().max(1) as f64)
        .sqrt();
    let apix = pixel_size_angstrom.unwrap_or(1.0) as f32;

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let mut header = Vec::with_capacity(HEADER_BYTES);
    for v in [nx as i32, ny as i32, 1, mode.code(), 0, 0, 0, nx as i32, ny as i32, 1] {
        header.write_i32::<LittleEndian>(v).map_err(io)?;
    }
    for v in [apix * nx as f32, apix * ny as f32, apix, 90.0, 90.0, 90.0] {
        header.write_f32::<LittleEndian>(v).map_err(io)?;
    }
    for v in [1, 2, 3] {
        header.write_i32::<LittleEndian>(v).map_err(io)?;
    }
    for v in [dmin as f32, dmax as f32, dmean as f32] {
        header.write_f32::<LittleEndian>(v).map_err(io)?;
    }
    // ispg, nsymbt
    header.write_i32::<LittleEndian>(0).map_err(io)?;
    header.write_i32::<LittleEndian>(0).map_err(io)?;
    // extra: 100 bytes, with exttyp at 104 and nversion at 108
    header.resize(96 + 8, 0);
    header.extend_from_slice(b"MRCO");
    header.write_i32::<LittleEndian>(20140).map_err(io)?;
    header.resize(196, 0);
    // origin
    for _ in 0..3 {
        header.write_f32::<LittleEndian>(0.0).map_err(io)?;
    }
    header.extend_from_slice(b"MAP ");
    header.extend_from_slice(&[0x44, 0x44, 0x00, 0x00]);
    header.write_f32::<LittleEndian>(rms as f32).map_err(io)?;
    header.write_i32::<LittleEndian>(1).map_err(io)?;
    let mut label = [b' '; 80];
    let text = b"asocem";
    label[..text.len()].copy_from_slice(text);
    header.extend_from_slice(&label);
    header.resize(HEADER_BYTES, 0);
    w.write_all(&header).map_err(io)?;

    match mode {
        MrcMode::Int8 => {
            for v in values {
                w.write_i8(v.round().clamp(-128.0, 127.0) as i8).map_err(io)?;
            }
        }
        MrcMode::Int16 => {
            for v in values {
                w.write_i16::<LittleEndian>(v.round().clamp(-32768.0, 32767.0) as i16)
                    .map_err(io)?;
            }
        }
        MrcMode::Uint16 => {
            for v in values {
                w.write_u16::<LittleEndian>(v.round().clamp(0.0, 65535.0) as u16)
                    .map_err(io)?;
            }
        }
        MrcMode::Float32 => {
            for v in values {
                w.write_f32::<LittleEndian>(v as f32).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}
