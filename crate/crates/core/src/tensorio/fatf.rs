use std::fs;
use std::path::Path;

use ndarray::Array2;
use num_complex::{Complex32, Complex64};

use super::{checked_bytes, ByteReader};
use crate::error::{Error, Result};

pub const FATF_MAGIC: [u8; 4] = *b"FATF";
pub const FATF_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F64,
    F32,
    Complex64,
    Complex128,
}

impl DType {
    pub fn code(self) -> u8 {
        match self {
            DType::F64 => 0,
            DType::F32 => 1,
            DType::Complex64 => 2,
            DType::Complex128 => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(DType::F64),
            1 => Ok(DType::F32),
            2 => Ok(DType::Complex64),
            3 => Ok(DType::Complex128),
            other => Err(Error::UnsupportedDtype(other)),
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 | DType::Complex64 => 8,
            DType::Complex128 => 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F64(Vec<f64>),
    F32(Vec<f32>),
    Complex64(Vec<Complex32>),
    Complex128(Vec<Complex64>),
}

impl TensorData {
    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F64(_) => DType::F64,
            TensorData::F32(_) => DType::F32,
            TensorData::Complex64(_) => DType::Complex64,
            TensorData::Complex128(_) => DType::Complex128,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::F64(v) => v.len(),
            TensorData::F32(v) => v.len(),
            TensorData::Complex64(v) => v.len(),
            TensorData::Complex128(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A 1-D or 2-D tensor with row-major payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: TensorData,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: TensorData) -> Result<Self> {
        if dims.is_empty() || dims.len() > 2 {
            return Err(Error::InvalidParam(format!(
                "tensor must be 1-D or 2-D, got {} dims",
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidParam("tensor dims must be nonzero".into()));
        }
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::DimensionOverflow(dims.iter().map(|&d| d as u64).collect()))?;
        if count != data.len() {
            return Err(Error::InvalidParam(format!(
                "payload has {} elements, dims {dims:?} need {count}",
                data.len()
            )));
        }
        Ok(Tensor { dims, data })
    }

    pub fn from_matrix(m: &Array2<f64>) -> Self {
        Tensor {
            dims: vec![m.nrows(), m.ncols()],
            data: TensorData::F64(m.iter().copied().collect()),
        }
    }

    pub fn from_matrix_f32(m: &Array2<f32>) -> Self {
        Tensor {
            dims: vec![m.nrows(), m.ncols()],
            data: TensorData::F32(m.iter().copied().collect()),
        }
    }

    pub fn from_complex(m: &Array2<Complex64>) -> Self {
        Tensor {
            dims: vec![m.nrows(), m.ncols()],
            data: TensorData::Complex128(m.iter().copied().collect()),
        }
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    /// Rows and columns; a 1-D tensor of length n is a 1×n row.
    pub fn shape2(&self) -> (usize, usize) {
        match self.dims.as_slice() {
            [n] => (1, *n),
            [r, c] => (*r, *c),
            _ => unreachable!("dims validated on construction"),
        }
    }

    /// Real matrix view of the tensor, widening float32 to float64.
    pub fn to_real_matrix(&self) -> Result<Array2<f64>> {
        let shape = self.shape2();
        let values: Vec<f64> = match &self.data {
            TensorData::F64(v) => v.clone(),
            TensorData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            _ => {
                return Err(Error::Malformed(
                    "expected a real tensor, found complex dtype".into(),
                ))
            }
        };
        Ok(Array2::from_shape_vec(shape, values).expect("dims validated on construction"))
    }

    pub fn to_complex_matrix(&self) -> Result<Array2<Complex64>> {
        let shape = self.shape2();
        let values: Vec<Complex64> = match &self.data {
            TensorData::F64(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            TensorData::F32(v) => v.iter().map(|&x| Complex64::new(x as f64, 0.0)).collect(),
            TensorData::Complex64(v) => v
                .iter()
                .map(|z| Complex64::new(z.re as f64, z.im as f64))
                .collect(),
            TensorData::Complex128(v) => v.clone(),
        };
        Ok(Array2::from_shape_vec(shape, values).expect("dims validated on construction"))
    }
}

pub fn encode_tensor(t: &Tensor) -> Vec<u8> {
    let dtype = t.dtype();
    let mut out = Vec::with_capacity(8 + 8 * t.dims.len() + t.data.len() * dtype.size());
    out.extend_from_slice(&FATF_MAGIC);
    out.extend_from_slice(&FATF_VERSION.to_le_bytes());
    out.push(dtype.code());
    out.push(t.dims.len() as u8);
    for &d in &t.dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    match &t.data {
        TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::Complex64(v) => v.iter().for_each(|z| {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }),
        TensorData::Complex128(v) => v.iter().for_each(|z| {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }),
    }
    out
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor> {
    let mut rd = ByteReader::new(bytes);
    let magic: [u8; 4] = rd.array()?;
    if magic != FATF_MAGIC {
        return Err(Error::BadMagic {
            expected: FATF_MAGIC,
            found: magic,
        });
    }
    let version = rd.u16()?;
    if version != FATF_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let dtype = DType::from_code(rd.u8()?)?;
    let ndim = rd.u8()?;
    if !(1..=2).contains(&ndim) {
        return Err(Error::Malformed(format!("ndim {ndim} not in 1..=2")));
    }
    let dims: Vec<u64> = (0..ndim).map(|_| rd.u64()).collect::<Result<_>>()?;
    if dims.contains(&0) {
        return Err(Error::Malformed("zero dimension".into()));
    }
    let nbytes = checked_bytes(&dims, dtype.size())?;
    let count = nbytes / dtype.size();
    let payload = rd.take(nbytes)?;
    if rd.remaining() != 0 {
        return Err(Error::Malformed(format!(
            "{} trailing bytes after payload",
            rd.remaining()
        )));
    }
    let mut p = ByteReader::new(payload);
    let data = match dtype {
        DType::F64 => TensorData::F64((0..count).map(|_| p.f64()).collect::<Result<_>>()?),
        DType::F32 => TensorData::F32((0..count).map(|_| p.f32()).collect::<Result<_>>()?),
        DType::Complex64 => TensorData::Complex64(
            (0..count)
                .map(|_| Ok(Complex32::new(p.f32()?, p.f32()?)))
                .collect::<Result<_>>()?,
        ),
        DType::Complex128 => TensorData::Complex128(
            (0..count)
                .map(|_| Ok(Complex64::new(p.f64()?, p.f64()?)))
                .collect::<Result<_>>()?,
        ),
    };
    let dims = dims
        .iter()
        .map(|&d| usize::try_from(d).map_err(|_| Error::DimensionOverflow(dims.clone())))
        .collect::<Result<Vec<_>>>()?;
    Tensor::new(dims, data)
}

pub fn write_tensor(path: impl AsRef<Path>, tensor: &Tensor) -> Result<()> {
    fs::write(path, encode_tensor(tensor))?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    decode_tensor(&fs::read(path)?)
}
