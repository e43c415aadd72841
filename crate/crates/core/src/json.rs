//! Matrix JSON format shared by every report and input file:
//! `{"rows": n, "cols": n, "data": [[re, im], ...]}` in row-major order.
//! Tuples are JSON arrays of matrices.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, OperatorTuple};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl TryFrom<&MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(j: &MatrixJson) -> Result<CMatrix> {
        if j.rows == 0 || j.cols == 0 || j.data.len() != j.rows * j.cols {
            return Err(Error::Dimension(format!(
                "matrix JSON declares {}x{} but carries {} entries",
                j.rows,
                j.cols,
                j.data.len()
            )));
        }
        if j.data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite matrix entry".into()));
        }
        Ok(CMatrix::from_fn(j.rows, j.cols, |r, col| {
            let [re, im] = j.data[r * j.cols + col];
            c(re, im)
        }))
    }
}

pub fn tuple_to_json(t: &OperatorTuple) -> Vec<MatrixJson> {
    t.items().iter().map(MatrixJson::from).collect()
}

pub fn tuple_from_json(items: &[MatrixJson]) -> Result<OperatorTuple> {
    let mats = items
        .iter()
        .map(CMatrix::try_from)
        .collect::<Result<Vec<_>>>()?;
    OperatorTuple::new(mats)
}

impl Serialize for OperatorTuple {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        tuple_to_json(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for OperatorTuple {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let items = Vec::<MatrixJson>::deserialize(d)?;
        tuple_from_json(&items).map_err(serde::de::Error::custom)
    }
}

pub fn parse_matrix(s: &str) -> Result<CMatrix> {
    let j: MatrixJson = serde_json::from_str(s)?;
    CMatrix::try_from(&j)
}

pub fn parse_tuple(s: &str) -> Result<OperatorTuple> {
    let j: Vec<MatrixJson> = serde_json::from_str(s)?;
    tuple_from_json(&j)
}

/// `#[serde(with = "crate::json::matrix")]` adapter for [`CMatrix`] fields.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        CMatrix::try_from(&j).map_err(serde::de::Error::custom)
    }
}

/// Adapter for `Vec<CMatrix>` fields.
pub mod matrices {
    use super::*;

    pub fn serialize<S: Serializer>(
        ms: &[CMatrix],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        ms.iter().map(MatrixJson::from).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<CMatrix>, D::Error> {
        let js = Vec::<MatrixJson>::deserialize(d)?;
        js.iter()
            .map(|j| CMatrix::try_from(j).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Complex vectors as `[[re, im], ...]`.
pub mod cvec {
    use super::*;
    use crate::linalg::C64;

    pub fn serialize<S: Serializer>(
        v: &Option<Vec<C64>>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        v.as_ref()
            .map(|v| v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Vec<C64>>, D::Error> {
        let v = Option::<Vec<[f64; 2]>>::deserialize(d)?;
        Ok(v.map(|v| v.into_iter().map(|[re, im]| c(re, im)).collect()))
    }
}
