use crate::error::{Error, Result};

/// Number of bytes needed to hold `count` indices of `bitwidth` bits.
pub fn packed_len(count: usize, bitwidth: u32) -> usize {
    (count * bitwidth as usize).div_ceil(8)
}

fn check_width(bitwidth: u32) -> Result<()> {
    if !(1..=16).contains(&bitwidth) {
        return Err(Error::InvalidParam(format!(
            "bit width {bitwidth} outside 1..=16"
        )));
    }
    Ok(())
}

/// Packs indices into a little-endian, LSB-first bitstream.
///
/// Index `k` occupies stream bits `k*bitwidth .. (k+1)*bitwidth`, where stream
/// bit `n` is bit `n % 8` of byte `n / 8`. Unused high bits of the final byte
/// are zero.
pub fn pack_bits(indices: &[u32], bitwidth: u32) -> Result<Vec<u8>> {
    check_width(bitwidth)?;
    let limit = 1u32 << bitwidth;
    let mut out = vec![0u8; packed_len(indices.len(), bitwidth)];
    let mut acc: u32 = 0;
    let mut filled = 0u32;
    let mut pos = 0usize;
    for &index in indices {
        if index >= limit {
            return Err(Error::IndexOutOfRange { index, bitwidth });
        }
        acc |= index << filled;
        filled += bitwidth;
        while filled >= 8 {
            out[pos] = acc as u8;
            pos += 1;
            acc >>= 8;
            filled -= 8;
        }
    }
    if filled > 0 {
        out[pos] = acc as u8;
    }
    Ok(out)
}

/// Inverse of [`pack_bits`].
///
/// Fails if `bytes` is not exactly `packed_len(count, bitwidth)` long or if the
/// padding bits of the final byte are not zero.
pub fn unpack_bits(bytes: &[u8], bitwidth: u32, count: usize) -> Result<Vec<u32>> {
    check_width(bitwidth)?;
    let expected = packed_len(count, bitwidth);
    if bytes.len() < expected {
        return Err(Error::Truncated {
            needed: expected,
            available: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Malformed(format!(
            "bitstream has {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let mask = (1u32 << bitwidth) - 1;
    let mut out = Vec::with_capacity(count);
    let mut acc: u32 = 0;
    let mut filled = 0u32;
    let mut bytes_iter = bytes.iter();
    for _ in 0..count {
        while filled < bitwidth {
            // length was checked above
            let b = *bytes_iter.next().expect("bitstream length checked");
            acc |= (b as u32) << filled;
            filled += 8;
        }
        out.push(acc & mask);
        acc >>= bitwidth;
        filled -= bitwidth;
    }
    if acc != 0 {
        return Err(Error::Malformed("nonzero padding bits".into()));
    }
    Ok(out)
}
