//! JSON formats: matrices, problem files, angular-pair files and reports.
//!
//! Matrices are `{"rows": r, "cols": c, "data": [[re, im], ...]}` with
//! entries in row-major order. Floats are written in shortest round-trip
//! form, so serializing and parsing reproduces every bit.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::angular::{form_pair, AngularPair};
use crate::block::{BlockMatrix, DenseMatrix};
use crate::error::{Error, Result};

pub const PROBLEM_SCHEMA: &str = "blockdiag/1";
pub const PAIR_SCHEMA: &str = "blockdiag-pair/1";
pub const REPORT_SCHEMA: &str = "blockdiag-report/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DenseMatrix) -> Self {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        Self { rows, cols, data }
    }

    pub fn to_matrix(&self) -> Result<DenseMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Parse(format!(
                "matrix declares {}x{} but has {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        if self.data.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        Ok(DenseMatrix::from_row_iterator(
            self.rows,
            self.cols,
            self.data.iter().map(|&[re, im]| Complex64::new(re, im)),
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub schema: String,
    pub n0: usize,
    pub n1: usize,
    #[serde(rename = "A0")]
    pub a0: MatrixJson,
    #[serde(rename = "A1")]
    pub a1: MatrixJson,
    #[serde(rename = "W0")]
    pub w0: MatrixJson,
    #[serde(rename = "W1")]
    pub w1: MatrixJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl ProblemFile {
    pub fn from_block(b: &BlockMatrix, mu: Option<f64>, metadata: BTreeMap<String, String>) -> Self {
        Self {
            schema: PROBLEM_SCHEMA.into(),
            n0: b.n0(),
            n1: b.n1(),
            a0: MatrixJson::from_matrix(b.a0()),
            a1: MatrixJson::from_matrix(b.a1()),
            w0: MatrixJson::from_matrix(b.w0()),
            w1: MatrixJson::from_matrix(b.w1()),
            mu,
            metadata,
        }
    }

    pub fn to_block(&self) -> Result<BlockMatrix> {
        if self.schema != PROBLEM_SCHEMA {
            return Err(Error::Parse(format!("unsupported schema {:?}, expected {PROBLEM_SCHEMA:?}", self.schema)));
        }
        if let Some(mu) = self.mu {
            if !mu.is_finite() {
                return Err(Error::NonFinite("mu".into()));
            }
        }
        let b = BlockMatrix::new(self.a0.to_matrix()?, self.a1.to_matrix()?, self.w0.to_matrix()?, self.w1.to_matrix()?)?;
        if (b.n0(), b.n1()) != (self.n0, self.n1) {
            return Err(Error::Shape(format!(
                "blocks are ({}, {}) but the file declares n0 = {}, n1 = {}",
                b.n0(),
                b.n1(),
                self.n0,
                self.n1
            )));
        }
        Ok(b)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairFile {
    pub schema: String,
    #[serde(rename = "X0")]
    pub x0: MatrixJson,
    #[serde(rename = "X1")]
    pub x1: MatrixJson,
}

impl PairFile {
    pub fn from_pair(p: &AngularPair) -> Self {
        Self {
            schema: PAIR_SCHEMA.into(),
            x0: MatrixJson::from_matrix(p.x0()),
            x1: MatrixJson::from_matrix(p.x1()),
        }
    }

    pub fn to_pair(&self) -> Result<AngularPair> {
        if self.schema != PAIR_SCHEMA {
            return Err(Error::Parse(format!("unsupported schema {:?}, expected {PAIR_SCHEMA:?}", self.schema)));
        }
        form_pair(self.x0.to_matrix()?, self.x1.to_matrix()?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pair files serialize")
    }
}

/// Structured outcome of a command.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    /// SHA-256 of the canonical inputs, hex encoded.
    pub inputs_digest: String,
    pub residuals: BTreeMap<String, f64>,
    pub spectra: BTreeMap<String, Vec<[f64; 2]>>,
    pub flags: BTreeMap<String, bool>,
    pub scalars: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificates: Option<serde_json::Value>,
    /// Milliseconds per stage.
    pub timings: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub exit_code: i32,
}

impl Report {
    pub fn new(command: &str, inputs_digest: String) -> Self {
        Self {
            schema: REPORT_SCHEMA.into(),
            command: command.into(),
            inputs_digest,
            ..Self::default()
        }
    }

    pub fn residual(&mut self, name: &str, value: f64) {
        self.residuals.insert(name.into(), value);
    }

    pub fn flag(&mut self, name: &str, value: bool) {
        self.flags.insert(name.into(), value);
    }

    pub fn scalar(&mut self, name: &str, value: f64) {
        self.scalars.insert(name.into(), value);
    }

    pub fn spectrum(&mut self, name: &str, values: &[Complex64]) {
        self.spectra.insert(name.into(), values.iter().map(|z| [z.re, z.im]).collect());
    }

    /// Largest residual, or zero when there are none.
    pub fn max_residual(&self) -> f64 {
        self.residuals.values().copied().fold(0.0, f64::max)
    }

    /// Replaces every non-finite number by `f64::MAX` and records a
    /// `nonfinite:<field>` flag, so the report stays valid JSON. Returns
    /// whether anything was replaced.
    pub fn sanitize(&mut self) -> bool {
        let mut bad = Vec::new();
        for (kind, map) in [("residual", &mut self.residuals), ("scalar", &mut self.scalars), ("timing", &mut self.timings)] {
            for (k, v) in map.iter_mut() {
                if !v.is_finite() {
                    *v = f64::MAX;
                    bad.push(format!("nonfinite:{kind}:{k}"));
                }
            }
        }
        for (k, list) in self.spectra.iter_mut() {
            if list.iter().flatten().any(|x| !x.is_finite()) {
                for z in list.iter_mut() {
                    for x in z.iter_mut() {
                        if !x.is_finite() {
                            *x = f64::MAX;
                        }
                    }
                }
                bad.push(format!("nonfinite:spectrum:{k}"));
            }
        }
        let any = !bad.is_empty();
        for name in bad {
            self.flags.insert(name, true);
        }
        any
    }

    /// Fails if any numeric field is non-finite.
    pub fn validate(&self) -> Result<()> {
        let finite = self.residuals.values().chain(self.scalars.values()).chain(self.timings.values()).all(|x| x.is_finite())
            && self.spectra.values().flatten().flatten().all(|x| x.is_finite());
        if finite {
            Ok(())
        } else {
            Err(Error::NonFinite("report".into()))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Hex SHA-256 of the concatenated parts, each prefixed by its length so
/// that different splits of the same bytes hash differently.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}
