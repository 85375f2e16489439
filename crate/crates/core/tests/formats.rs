//! Byte-level contract of the tensor and container formats, built from raw
//! little-endian bytes the way an external writer would produce them.

use falq::tensorio::*;
use falq::Error;
use num_complex::{Complex32, Complex64};
use tempfile::TempDir;

fn header(dtype: u8, dims: &[u64]) -> Vec<u8> {
    let mut b = b"FATF".to_vec();
    b.extend_from_slice(&1u16.to_le_bytes());
    b.push(dtype);
    b.push(dims.len() as u8);
    for d in dims {
        b.extend_from_slice(&d.to_le_bytes());
    }
    b
}

#[test]
fn externally_written_f32_matrix() {
    let values: Vec<f32> = vec![0.5, -1.25, 3.0e-8, 65504.0, f32::MIN_POSITIVE, -0.0];
    let mut bytes = header(1, &[2, 3]);
    values.iter().for_each(|v| bytes.extend_from_slice(&v.to_le_bytes()));
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("x.fatf");
    std::fs::write(&path, &bytes).unwrap();
    let t = read_tensor(&path).unwrap();
    assert_eq!(t.dims, vec![2, 3]);
    assert_eq!(t.dtype(), DType::F32);
    match &t.data {
        TensorData::F32(v) => assert!(v.iter().zip(&values).all(|(a, b)| a.to_bits() == b.to_bits())),
        other => panic!("unexpected {other:?}"),
    }
    let m = t.to_real_matrix().unwrap();
    assert_eq!(m[[1, 0]], 65504.0);
    assert_eq!(encode_tensor(&t), bytes);
}

#[test]
fn every_dtype_round_trips_bit_exact() {
    let cases = [
        Tensor::new(vec![3], TensorData::F64(vec![1.0, f64::MAX, -2.5e-300])).unwrap(),
        Tensor::new(vec![1, 2], TensorData::F32(vec![1.5, -0.0])).unwrap(),
        Tensor::new(vec![2, 1], TensorData::Complex64(vec![Complex32::new(1.0, -2.0), Complex32::new(0.0, 3.5)])).unwrap(),
        Tensor::new(vec![1, 1], TensorData::Complex128(vec![Complex64::new(-1e-200, 7.0)])).unwrap(),
    ];
    for t in cases {
        let bytes = encode_tensor(&t);
        assert_eq!(bytes.len(), 8 + 8 * t.dims.len() + t.data.len() * t.dtype().size());
        assert_eq!(decode_tensor(&bytes).unwrap(), t);
    }
}

#[test]
fn one_dimensional_reads_as_row() {
    let mut bytes = header(0, &[4]);
    (0..4).for_each(|k| bytes.extend_from_slice(&(k as f64).to_le_bytes()));
    let t = decode_tensor(&bytes).unwrap();
    assert_eq!(t.shape2(), (1, 4));
    assert_eq!(t.to_real_matrix().unwrap()[[0, 3]], 3.0);
}

#[test]
fn malformed_tensor_files() {
    let mut ok = header(0, &[1, 1]);
    ok.extend_from_slice(&2.0f64.to_le_bytes());
    assert!(decode_tensor(&ok).is_ok());

    let mut bad_magic = ok.clone();
    bad_magic[..4].copy_from_slice(b"FALQ");
    assert!(matches!(decode_tensor(&bad_magic), Err(Error::BadMagic { .. })));
    let mut version = ok.clone();
    version[4] = 2;
    assert!(matches!(decode_tensor(&version), Err(Error::UnsupportedVersion(2))));
    let mut dtype = ok.clone();
    dtype[6] = 9;
    assert!(matches!(decode_tensor(&dtype), Err(Error::UnsupportedDtype(9))));
    assert!(matches!(decode_tensor(&ok[..ok.len() - 1]), Err(Error::Truncated { .. })));
    assert!(matches!(decode_tensor(&ok[..3]), Err(Error::Truncated { .. })));
    let mut trailing = ok.clone();
    trailing.push(0);
    assert!(matches!(decode_tensor(&trailing), Err(Error::Malformed(_))));
    let mut ndim = ok.clone();
    ndim[7] = 3;
    assert!(decode_tensor(&ndim).is_err());
    let overflow = header(3, &[u64::MAX / 2, 4]);
    assert!(matches!(decode_tensor(&overflow), Err(Error::DimensionOverflow(_))));
    for e in [
        decode_tensor(&bad_magic).unwrap_err(),
        decode_tensor(&ok[..5]).unwrap_err(),
        decode_tensor(&overflow).unwrap_err(),
    ] {
        assert_eq!(e.kind(), falq::ErrorKind::Format);
    }
}

#[test]
fn container_layout_offsets() {
    let c = CompressedContainer {
        rows: 2,
        cols: 2,
        half_cols: 2,
        rank: 1,
        amp_bits: 3,
        phase_bits: 5,
        r_max: 1.5,
        l1: vec![Complex32::new(1.0, 2.0), Complex32::new(3.0, 4.0)],
        l2: vec![Complex32::new(-1.0, 0.5), Complex32::new(0.25, 0.0)],
        amp_indices: vec![7, 0, 1, 2],
        phase_indices: vec![31, 0, 16, 1],
        metadata: Some("{}".into()),
    };
    let b = c.to_bytes().unwrap();
    assert_eq!(&b[0..4], b"FALQ");
    assert_eq!(u16::from_le_bytes([b[4], b[5]]), 1);
    assert_eq!((b[6], b[7]), (3, 5));
    let u64_at = |o: usize| u64::from_le_bytes(b[o..o + 8].try_into().unwrap());
    assert_eq!((u64_at(8), u64_at(16), u64_at(24), u64_at(32)), (2, 2, 2, 1));
    assert_eq!(f64::from_le_bytes(b[40..48].try_into().unwrap()), 1.5);
    let f32_at = |o: usize| f32::from_le_bytes(b[o..o + 4].try_into().unwrap());
    assert_eq!((f32_at(48), f32_at(52), f32_at(56), f32_at(60)), (1.0, 2.0, 3.0, 4.0));
    assert_eq!((f32_at(64), f32_at(68)), (-1.0, 0.5));
    // amplitude stream at 80: 3-bit LSB-first [7,0,1,2] -> 0b0_010_001_000_111 -> bytes 0x47 0x04
    assert_eq!(&b[80..82], &[0x47, 0x04]);
    // phase stream at 82: 5-bit [31,0,16,1] sets bits 0..=4, 14, 15 -> 3 bytes
    assert_eq!(&b[82..85], &[0x1f, 0xc0, 0x00]);
    assert_eq!(u32::from_le_bytes(b[85..89].try_into().unwrap()), 2);
    assert_eq!(&b[89..], b"{}");
    assert_eq!(c.numeric_len(), 85);
    assert_eq!(CompressedContainer::from_bytes(&b).unwrap(), c);
}

#[test]
fn container_corruptions() {
    let c = CompressedContainer {
        rows: 2,
        cols: 3,
        half_cols: 3,
        rank: 0,
        amp_bits: 2,
        phase_bits: 2,
        r_max: 0.0,
        l1: vec![],
        l2: vec![],
        amp_indices: vec![0; 6],
        phase_indices: vec![2; 6],
        metadata: None,
    };
    let b = c.to_bytes().unwrap();
    assert_eq!(CompressedContainer::from_bytes(&b).unwrap(), c);
    for cut in [0, 10, 47, b.len() - 1] {
        assert_eq!(CompressedContainer::from_bytes(&b[..cut]).unwrap_err().kind(), falq::ErrorKind::Format);
    }
    let mut half = b.clone();
    half[24] = 5;
    assert!(matches!(CompressedContainer::from_bytes(&half), Err(Error::Malformed(_))));
    let mut bits = b.clone();
    bits[6] = 0;
    assert!(matches!(CompressedContainer::from_bytes(&bits), Err(Error::Malformed(_))));
    let mut padding = b.clone();
    let last = padding.len() - 1;
    padding[last] |= 0x80;
    assert!(CompressedContainer::from_bytes(&padding).is_err());
}
