//! JSON wire formats.
//!
//! Matrices are `{"dim": d, "re": [...], "im": [...]}` with row-major real and
//! imaginary parts; rectangular matrices (Kraus operators) carry `"rows"` and
//! `"cols"` instead of `"dim"`. Floats are written with full round-trip
//! precision.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::channel::KrausChannel;
use crate::linalg::{CMatrix, ComplexVector, HermitianMatrix, C64};
use crate::state::{DensityOperator, SubPovm};
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let (r, c) = m.shape();
        let mut re = Vec::with_capacity(r * c);
        let mut im = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        let square = r == c;
        MatrixJson {
            dim: square.then_some(r),
            rows: (!square).then_some(r),
            cols: (!square).then_some(c),
            re,
            im,
        }
    }
}

impl TryFrom<MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<CMatrix> {
        let (rows, cols) = match (m.dim, m.rows, m.cols) {
            (Some(d), None, None) => (d, d),
            (None, Some(r), Some(c)) => (r, c),
            (Some(d), Some(r), Some(c)) if r == d && c == d => (d, d),
            _ => {
                return Err(Error::Config(
                    "matrix needs either \"dim\" or both \"rows\" and \"cols\"".into(),
                ))
            }
        };
        if m.re.len() != rows * cols || m.im.len() != rows * cols {
            return Err(Error::DimMismatch {
                expected: rows * cols,
                found: m.re.len().min(m.im.len()),
            });
        }
        let data: Vec<C64> = m.re.iter().zip(&m.im).map(|(&a, &b)| C64::new(a, b)).collect();
        Ok(CMatrix::from_row_slice(rows, cols, &data))
    }
}

impl From<HermitianMatrix> for MatrixJson {
    fn from(h: HermitianMatrix) -> Self {
        MatrixJson::from(h.as_matrix())
    }
}

impl TryFrom<MatrixJson> for HermitianMatrix {
    type Error = Error;
    fn try_from(m: MatrixJson) -> Result<Self> {
        HermitianMatrix::new(CMatrix::try_from(m)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VectorJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&ComplexVector> for VectorJson {
    fn from(v: &ComplexVector) -> Self {
        VectorJson {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }
}

impl TryFrom<VectorJson> for ComplexVector {
    type Error = Error;
    fn try_from(v: VectorJson) -> Result<Self> {
        if v.re.len() != v.im.len() {
            return Err(Error::DimMismatch {
                expected: v.re.len(),
                found: v.im.len(),
            });
        }
        Ok(ComplexVector::from_iterator(
            v.re.len(),
            v.re.iter().zip(&v.im).map(|(&a, &b)| C64::new(a, b)),
        ))
    }
}

/// `{"kind": "density", "mat": ...}`; `{"kind": "pure", "vec": ...}` is accepted on input.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StateJson {
    Density { mat: MatrixJson },
    Pure { vec: VectorJson },
}

impl From<DensityOperator> for StateJson {
    fn from(s: DensityOperator) -> Self {
        StateJson::Density {
            mat: MatrixJson::from(s.mat().as_matrix()),
        }
    }
}

impl TryFrom<StateJson> for DensityOperator {
    type Error = Error;
    fn try_from(s: StateJson) -> Result<Self> {
        match s {
            StateJson::Density { mat } => DensityOperator::new(HermitianMatrix::try_from(mat)?),
            StateJson::Pure { vec } => DensityOperator::pure(&ComplexVector::try_from(vec)?),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PovmJson {
    pub effects: Vec<MatrixJson>,
    pub complete: bool,
}

impl From<SubPovm> for PovmJson {
    fn from(p: SubPovm) -> Self {
        PovmJson {
            effects: p.effects().iter().map(|e| MatrixJson::from(e.as_matrix())).collect(),
            complete: p.is_complete(),
        }
    }
}

impl TryFrom<PovmJson> for SubPovm {
    type Error = Error;
    fn try_from(p: PovmJson) -> Result<Self> {
        let effects = p
            .effects
            .into_iter()
            .map(HermitianMatrix::try_from)
            .collect::<Result<Vec<_>>>()?;
        SubPovm::new(effects, p.complete)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelJson {
    pub in_dim: usize,
    pub out_dim: usize,
    pub kraus: Vec<MatrixJson>,
}

impl From<KrausChannel> for ChannelJson {
    fn from(c: KrausChannel) -> Self {
        ChannelJson {
            in_dim: c.in_dim(),
            out_dim: c.out_dim(),
            kraus: c.kraus().iter().map(MatrixJson::from).collect(),
        }
    }
}

impl TryFrom<ChannelJson> for KrausChannel {
    type Error = Error;
    fn try_from(c: ChannelJson) -> Result<Self> {
        let kraus = c
            .kraus
            .into_iter()
            .map(CMatrix::try_from)
            .collect::<Result<Vec<_>>>()?;
        KrausChannel::new(c.in_dim, c.out_dim, kraus)
    }
}

macro_rules! json_via {
    ($ty:ty, $mirror:ty) => {
        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                <$mirror>::from(self.clone()).serialize(s)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let raw = <$mirror>::deserialize(d)?;
                <$ty>::try_from(raw).map_err(serde::de::Error::custom)
            }
        }
    };
}

json_via!(HermitianMatrix, MatrixJson);
json_via!(DensityOperator, StateJson);
json_via!(SubPovm, PovmJson);
json_via!(KrausChannel, ChannelJson);

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let f = File::open(path.as_ref())?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    if let Some(parent) = path.as_ref().parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    w.write_all(to_json_string(value)?.as_bytes())?;
    w.flush()?;
    Ok(())
}
