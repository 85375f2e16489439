use std::fs;
use std::path::Path;

use num_complex::Complex32;

use super::bitpack::{pack_bits, packed_len, unpack_bits};
use super::{checked_bytes, ByteReader};
use crate::error::{Error, Result};

pub const FALQ_MAGIC: [u8; 4] = *b"FALQ";
pub const FALQ_VERSION: u16 = 1;
/// Fixed header size in bytes, up to and including `r_max`.
pub const FALQ_HEADER_LEN: usize = 48;

/// Serialized form of a decomposition: float32 complex factors plus the
/// polar-quantized residual indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedContainer {
    /// Original spatial rows.
    pub rows: usize,
    /// Original spatial columns (before any zero padding).
    pub cols: usize,
    /// Stored half-spectrum columns.
    pub half_cols: usize,
    pub rank: usize,
    pub amp_bits: u8,
    pub phase_bits: u8,
    pub r_max: f64,
    /// `rows × rank`, row-major.
    pub l1: Vec<Complex32>,
    /// `rank × half_cols`, row-major.
    pub l2: Vec<Complex32>,
    /// `rows × half_cols` amplitude indices, row-major.
    pub amp_indices: Vec<u32>,
    /// `rows × half_cols` phase indices, row-major.
    pub phase_indices: Vec<u32>,
    /// Free-form JSON text; not used when decoding numbers.
    pub metadata: Option<String>,
}

/// Half-spectrum width the container expects for a spatial width, counting
/// the zero-pad column added for odd widths.
pub(crate) fn expected_half_cols(cols: usize) -> usize {
    let padded = cols + cols % 2;
    padded / 2 + 1
}

impl CompressedContainer {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Malformed(msg));
        if self.rows == 0 || self.cols == 0 {
            return bad("zero dimension".into());
        }
        if self.half_cols != expected_half_cols(self.cols) {
            return bad(format!(
                "half-spectrum width {} inconsistent with {} columns",
                self.half_cols, self.cols
            ));
        }
        if self.rank > self.rows.min(self.half_cols) {
            return bad(format!("rank {} exceeds matrix dims", self.rank));
        }
        for bits in [self.amp_bits, self.phase_bits] {
            if !(1..=16).contains(&bits) {
                return bad(format!("bit width {bits} outside 1..=16"));
            }
        }
        if !self.r_max.is_finite() || self.r_max < 0.0 {
            return bad(format!("invalid r_max {}", self.r_max));
        }
        let n = self.rows * self.half_cols;
        if self.l1.len() != self.rows * self.rank
            || self.l2.len() != self.rank * self.half_cols
            || self.amp_indices.len() != n
            || self.phase_indices.len() != n
        {
            return bad("payload lengths inconsistent with header".into());
        }
        Ok(())
    }

    /// Serialized size without the metadata block.
    pub fn numeric_len(&self) -> usize {
        let n = self.rows * self.half_cols;
        FALQ_HEADER_LEN
            + 8 * (self.l1.len() + self.l2.len())
            + packed_len(n, self.amp_bits as u32)
            + packed_len(n, self.phase_bits as u32)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.numeric_len());
        out.extend_from_slice(&FALQ_MAGIC);
        out.extend_from_slice(&FALQ_VERSION.to_le_bytes());
        out.push(self.amp_bits);
        out.push(self.phase_bits);
        for v in [self.rows, self.cols, self.half_cols, self.rank] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        out.extend_from_slice(&self.r_max.to_le_bytes());
        debug_assert_eq!(out.len(), FALQ_HEADER_LEN);
        for z in self.l1.iter().chain(self.l2.iter()) {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out.extend_from_slice(&pack_bits(&self.amp_indices, self.amp_bits as u32)?);
        out.extend_from_slice(&pack_bits(&self.phase_indices, self.phase_bits as u32)?);
        if let Some(meta) = &self.metadata {
            let len = u32::try_from(meta.len())
                .map_err(|_| Error::InvalidParam("metadata block too large".into()))?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(meta.as_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = ByteReader::new(bytes);
        let magic: [u8; 4] = rd.array()?;
        if magic != FALQ_MAGIC {
            return Err(Error::BadMagic {
                expected: FALQ_MAGIC,
                found: magic,
            });
        }
        let version = rd.u16()?;
        if version != FALQ_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let amp_bits = rd.u8()?;
        let phase_bits = rd.u8()?;
        let mut dims = [0u64; 4];
        for d in dims.iter_mut() {
            *d = rd.u64()?;
        }
        let to_usize = |v: u64| usize::try_from(v).map_err(|_| Error::DimensionOverflow(dims.to_vec()));
        let (rows, cols, half_cols, rank) = (
            to_usize(dims[0])?,
            to_usize(dims[1])?,
            to_usize(dims[2])?,
            to_usize(dims[3])?,
        );
        let r_max = rd.f64()?;
        if !(1..=16).contains(&amp_bits) || !(1..=16).contains(&phase_bits) {
            return Err(Error::Malformed(format!(
                "bit widths {amp_bits}/{phase_bits} outside 1..=16"
            )));
        }
        if rows == 0 || cols == 0 || half_cols != expected_half_cols(cols) {
            return Err(Error::Malformed(format!(
                "inconsistent dims {rows}x{cols}, half width {half_cols}"
            )));
        }
        if rank > rows.min(half_cols) {
            return Err(Error::Malformed(format!("rank {rank} exceeds matrix dims")));
        }
        let l1_bytes = checked_bytes(&[dims[0], dims[3]], 8)?;
        let l2_bytes = checked_bytes(&[dims[3], dims[2]], 8)?;
        let n = checked_bytes(&[dims[0], dims[2]], 1)?;

        let mut read_factor = |nbytes: usize| -> Result<Vec<Complex32>> {
            let mut p = ByteReader::new(rd.take(nbytes)?);
            (0..nbytes / 8)
                .map(|_| Ok(Complex32::new(p.f32()?, p.f32()?)))
                .collect()
        };
        let l1 = read_factor(l1_bytes)?;
        let l2 = read_factor(l2_bytes)?;
        let amp_indices = unpack_bits(
            rd.take(packed_len(n, amp_bits as u32))?,
            amp_bits as u32,
            n,
        )?;
        let phase_indices = unpack_bits(
            rd.take(packed_len(n, phase_bits as u32))?,
            phase_bits as u32,
            n,
        )?;
        let metadata = if rd.remaining() == 0 {
            None
        } else {
            let len = rd.u32()? as usize;
            let text = rd.take(len)?;
            if rd.remaining() != 0 {
                return Err(Error::Malformed(format!(
                    "{} trailing bytes after metadata",
                    rd.remaining()
                )));
            }
            Some(
                String::from_utf8(text.to_vec())
                    .map_err(|_| Error::Malformed("metadata is not UTF-8".into()))?,
            )
        };
        let c = CompressedContainer {
            rows,
            cols,
            half_cols,
            rank,
            amp_bits,
            phase_bits,
            r_max,
            l1,
            l2,
            amp_indices,
            phase_indices,
            metadata,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Parsed metadata block, if present and valid JSON.
    pub fn metadata_json(&self) -> Option<serde_json::Value> {
        self.metadata
            .as_deref()
            .and_then(|m| serde_json::from_str(m).ok())
    }
}
