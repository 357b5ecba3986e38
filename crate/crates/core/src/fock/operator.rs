use num_complex::Complex64 as C64;

use super::sparse::SparseOperator;
use crate::error::{Error, Result};

/// Matrix-free linear map on a (multi-mode) truncated Fock space.
pub trait LinearOperator: Sync {
    fn dims(&self) -> &[usize];

    fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    /// y = A x, overwriting `y`.
    fn apply_into(&self, x: &[C64], y: &mut [C64]);

    /// Upper bound on the spectral norm.
    fn norm_bound(&self) -> f64;

    /// |A + A†| relative to the operator scale; zero for an exactly anti-Hermitian map.
    fn anti_hermitian_defect(&self) -> f64;
}

impl LinearOperator for SparseOperator {
    fn dims(&self) -> &[usize] {
        SparseOperator::dims(self)
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        self.matvec_into(x, y);
    }

    /// ‖A‖∞, which bounds ‖A‖₂ for the normal operators used here.
    fn norm_bound(&self) -> f64 {
        self.inf_norm()
    }

    fn anti_hermitian_defect(&self) -> f64 {
        self.anti_hermiticity_deviation() / self.max_abs().max(1.0)
    }
}

pub(crate) fn check_dims_match(expected: &[usize], found: &[usize]) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            expected: expected.to_vec(),
            found: found.to_vec(),
        });
    }
    Ok(())
}
