//! On-disk formats: the FATF tensor file and the FALQ compressed container.
//!
//! Both formats are little-endian throughout. Byte-offset tables live in
//! `docs/formats.md`.

mod bitpack;
mod container;
mod fatf;

pub use bitpack::{pack_bits, packed_len, unpack_bits};
pub use container::{CompressedContainer, FALQ_HEADER_LEN, FALQ_MAGIC, FALQ_VERSION};
pub use fatf::{
    decode_tensor, encode_tensor, read_tensor, write_tensor, DType, Tensor, TensorData,
    FATF_MAGIC, FATF_VERSION,
};

use crate::error::{Error, Result};

/// Forward-only cursor over a byte slice.
pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Truncated {
                needed: n,
                available: self.remaining(),
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub(crate) fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array()?))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

/// Checked product of dimensions times an element size.
pub(crate) fn checked_bytes(dims: &[u64], elem_size: usize) -> Result<usize> {
    dims.iter()
        .try_fold(elem_size as u64, |acc, &d| acc.checked_mul(d))
        .and_then(|b| usize::try_from(b).ok())
        .ok_or_else(|| Error::DimensionOverflow(dims.to_vec()))
}
