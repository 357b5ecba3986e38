//! JSON interchange for states and operators.
//!
//! Every document carries `schema_version`, `kind` and `dims`; complex
//! numbers are `[re, im]` pairs and matrices are flattened row-major.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{DensityOperator, SparseOperator, StateVector};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Document {
    State {
        schema_version: u32,
        dims: Vec<usize>,
        amplitudes: Vec<[f64; 2]>,
    },
    Density {
        schema_version: u32,
        dims: Vec<usize>,
        matrix: Vec<[f64; 2]>,
    },
    Operator {
        schema_version: u32,
        dims: Vec<usize>,
        /// (row, col, re, im) in row-major order.
        entries: Vec<(usize, usize, f64, f64)>,
    },
}

fn pair(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

fn cpx(p: &[f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::Serialization(format!(
            "unsupported schema_version {v} (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

pub fn state_to_json(s: &StateVector) -> Result<String> {
    Ok(serde_json::to_string(&Document::State {
        schema_version: SCHEMA_VERSION,
        dims: s.dims().to_vec(),
        amplitudes: s.amplitudes().iter().map(pair).collect(),
    })?)
}

pub fn state_from_json(text: &str) -> Result<StateVector> {
    match serde_json::from_str::<Document>(text)? {
        Document::State {
            schema_version,
            dims,
            amplitudes,
        } => {
            check_version(schema_version)?;
            StateVector::new(&dims, amplitudes.iter().map(cpx).collect())
        }
        _ => Err(Error::Serialization("expected a `state` document".into())),
    }
}

pub fn density_to_json(rho: &DensityOperator) -> Result<String> {
    let m = rho.matrix();
    let n = m.nrows();
    let mut flat = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            flat.push(pair(&m[(r, c)]));
        }
    }
    Ok(serde_json::to_string(&Document::Density {
        schema_version: SCHEMA_VERSION,
        dims: super::state::QuantumState::dims(rho).to_vec(),
        matrix: flat,
    })?)
}

pub fn density_from_json(text: &str) -> Result<DensityOperator> {
    match serde_json::from_str::<Document>(text)? {
        Document::Density {
            schema_version,
            dims,
            matrix,
        } => {
            check_version(schema_version)?;
            let n: usize = dims.iter().product();
            if matrix.len() != n * n {
                return Err(Error::DimensionMismatch {
                    expected: vec![n * n],
                    found: vec![matrix.len()],
                });
            }
            let m = DMatrix::from_row_iterator(n, n, matrix.iter().map(cpx));
            DensityOperator::from_matrix(&dims, m)
        }
        _ => Err(Error::Serialization("expected a `density` document".into())),
    }
}

pub fn operator_to_json(op: &SparseOperator) -> Result<String> {
    Ok(serde_json::to_string(&Document::Operator {
        schema_version: SCHEMA_VERSION,
        dims: op.dims().to_vec(),
        entries: op.iter().map(|(r, c, v)| (r, c, v.re, v.im)).collect(),
    })?)
}

pub fn operator_from_json(text: &str) -> Result<SparseOperator> {
    match serde_json::from_str::<Document>(text)? {
        Document::Operator {
            schema_version,
            dims,
            entries,
        } => {
            check_version(schema_version)?;
            SparseOperator::from_triplets(&dims, entries.into_iter().map(|(r, c, re, im)| (r, c, C64::new(re, im))))
        }
        _ => Err(Error::Serialization("expected an `operator` document".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockSpace;

    #[test]
    fn round_trips_are_exact() {
        let s = FockSpace::new(7).unwrap();
        let psi = StateVector::coherent(s, C64::new(0.7, -1.3));
        let back = state_from_json(&state_to_json(&psi).unwrap()).unwrap();
        assert_eq!(back, psi);

        let op = s.squeeze_generator(C64::new(0.2, 0.1));
        let back = operator_from_json(&operator_to_json(&op).unwrap()).unwrap();
        assert_eq!(back.max_abs_diff(&op).unwrap(), 0.0);

        let rho = DensityOperator::from_pure(&psi);
        let back = density_from_json(&density_to_json(&rho).unwrap()).unwrap();
        assert_eq!(back, rho);
    }

    #[test]
    fn rejects_wrong_kind_and_version() {
        let s = FockSpace::new(3).unwrap();
        let text = state_to_json(&StateVector::vacuum(s)).unwrap();
        assert!(operator_from_json(&text).is_err());
        let bumped = text.replace("\"schema_version\":1", "\"schema_version\":9");
        assert!(state_from_json(&bumped).is_err());
    }
}
