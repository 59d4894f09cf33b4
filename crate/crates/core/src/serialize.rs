//! JSON documents shared by tensors, programs and results.
//!
//! Matrices are stored row-major as `[re, im]` pairs. Floats are written with
//! shortest round-trip formatting, so a save/load cycle is bit-exact.

use serde::{Deserialize, Serialize};

use crate::algebra::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Schema identifier written into every document.
pub const SCHEMA: &str = "spt-mbqc";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixDoc {
    fn from(m: &ComplexMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                data.push([z.re, z.im]);
            }
        }
        MatrixDoc { rows: m.nrows(), cols: m.ncols(), data }
    }
}

impl MatrixDoc {
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Schema(format!(
                "matrix declares {}x{} but carries {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        if self.data.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Schema("non-finite matrix entry".into()));
        }
        Ok(ComplexMatrix::from_row_iterator(self.rows, self.cols, self.data.iter().map(|&[re, im]| C64::new(re, im))))
    }
}

pub fn matrices_to_docs(ms: &[ComplexMatrix]) -> Vec<MatrixDoc> {
    ms.iter().map(MatrixDoc::from).collect()
}

pub fn docs_to_matrices(ds: &[MatrixDoc]) -> Result<Vec<ComplexMatrix>> {
    ds.iter().map(MatrixDoc::to_matrix).collect()
}

/// Header carried by every top-level document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub schema: String,
    pub version: u32,
    pub kind: String,
}

impl Header {
    pub fn new(kind: &str) -> Self {
        Header { schema: SCHEMA.into(), version: SCHEMA_VERSION, kind: kind.into() }
    }

    pub fn check(&self, kind: &str) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::Schema(format!("unknown schema '{}'", self.schema)));
        }
        if self.version > SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "document version {} is newer than supported version {SCHEMA_VERSION}",
                self.version
            )));
        }
        if self.kind != kind {
            return Err(Error::Schema(format!("expected a '{kind}' document, found '{}'", self.kind)));
        }
        Ok(())
    }
}
