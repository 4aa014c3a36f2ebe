//! Instance files (`"schema": "pair-v1"`) and the JSON encoding of complex matrices: row-major
//! nested arrays with every entry written as `[re, im]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, CMat};
use crate::pairs::{validate_pair, CommutingPair, Scheme, CONTRACTION_TOL};

pub const SCHEMA: &str = "pair-v1";

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn to_json_matrix(m: &CMat) -> JsonMatrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

/// `cols` is needed only for matrices without rows.
pub fn from_json_matrix(rows: &JsonMatrix, cols: Option<usize>) -> Result<CMat> {
    let ncols = rows.first().map(Vec::len).or(cols).unwrap_or(0);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::ShapeMismatch("matrix rows have different lengths".into()));
    }
    Ok(CMat::from_fn(rows.len(), ncols, |i, j| c64(rows[i][j][0], rows[i][j][1])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema: String,
    pub dim: usize,
    pub t1: JsonMatrix,
    pub t2: JsonMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<InstanceMeta>,
}

impl InstanceFile {
    pub fn from_pair(pair: &CommutingPair, meta: Option<InstanceMeta>) -> Self {
        Self {
            schema: SCHEMA.into(),
            dim: pair.dim(),
            t1: to_json_matrix(pair.t1()),
            t2: to_json_matrix(pair.t2()),
            meta,
        }
    }

    /// Parse and validate. Fails on a wrong schema tag or shape, or an invalid pair.
    pub fn to_pair(&self) -> Result<CommutingPair> {
        if self.schema != SCHEMA {
            return Err(Error::InvalidConfig(format!("unsupported schema {:?} (expected {SCHEMA})", self.schema)));
        }
        let t1 = from_json_matrix(&self.t1, Some(self.dim))?;
        let t2 = from_json_matrix(&self.t2, Some(self.dim))?;
        if t1.shape() != (self.dim, self.dim) || t2.shape() != (self.dim, self.dim) {
            return Err(Error::ShapeMismatch(format!("t1 and t2 must be {0}x{0}", self.dim)));
        }
        validate_pair(&t1, &t2, CONTRACTION_TOL)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("malformed instance file: {e}")))
    }
}

pub fn read_pair(path: &std::path::Path) -> Result<CommutingPair> {
    InstanceFile::parse(&std::fs::read_to_string(path)?)?.to_pair()
}
