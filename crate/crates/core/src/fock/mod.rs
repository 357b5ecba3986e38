//! Truncated Fock spaces, sparse operators, states and the Krylov exponential.

mod expm;
mod operator;
pub mod serial;
mod sparse;
mod state;

pub use expm::{expm_apply, ExpmOptions, ExpmOutcome, ANTI_HERMITIAN_TOL};
pub use operator::LinearOperator;
pub use sparse::SparseOperator;
pub use state::{DensityOperator, QuadratureMoments, QuantumState, StateVector};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-mode Fock space truncated at `n_max` photons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FockSpaceRepr", into = "FockSpaceRepr")]
pub struct FockSpace {
    n_max: usize,
}

#[derive(Serialize, Deserialize)]
struct FockSpaceRepr {
    n_max: usize,
}

impl TryFrom<FockSpaceRepr> for FockSpace {
    type Error = Error;
    fn try_from(r: FockSpaceRepr) -> Result<Self> {
        FockSpace::new(r.n_max)
    }
}

impl From<FockSpace> for FockSpaceRepr {
    fn from(s: FockSpace) -> Self {
        FockSpaceRepr { n_max: s.n_max }
    }
}

impl FockSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidTruncation(format!(
                "n_max must be at least 1 (got {n_max})"
            )));
        }
        Ok(FockSpace { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn annihilation(&self) -> SparseOperator {
        let d = self.dim();
        SparseOperator::from_triplets(
            &[d],
            (1..d).map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0))),
        )
        .expect("ladder entries are in range")
    }

    pub fn creation(&self) -> SparseOperator {
        self.annihilation().adjoint()
    }

    pub fn number(&self) -> SparseOperator {
        let d = self.dim();
        let diag: Vec<C64> = (0..d).map(|n| C64::new(n as f64, 0.0)).collect();
        SparseOperator::diagonal(&[d], &diag)
    }

    pub fn identity(&self) -> SparseOperator {
        SparseOperator::identity(&[self.dim()])
    }

    /// x = (a + a†)/√2.
    pub fn quadrature_x(&self) -> SparseOperator {
        let a = self.annihilation();
        a.combine(
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            &a.adjoint(),
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        )
        .expect("same space")
    }

    /// p = (a − a†)/(i√2).
    pub fn quadrature_p(&self) -> SparseOperator {
        let a = self.annihilation();
        let c = C64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2);
        a.combine(c, &a.adjoint(), -c).expect("same space")
    }

    /// Standard displacement generator α a† − α* a, so exp(G) = D(α).
    pub fn displacement_generator(&self, alpha: C64) -> SparseOperator {
        let a = self.annihilation();
        a.adjoint().combine(alpha, &a, -alpha.conj()).expect("same space")
    }

    /// Squeezing generator (z* a² − z a†²)/2, so exp(G) = S(z).
    pub fn squeeze_generator(&self, z: C64) -> SparseOperator {
        let a = self.annihilation();
        let a2 = a.matmul(&a).expect("same space");
        a2.combine(z.conj() * 0.5, &a2.adjoint(), -z * 0.5).expect("same space")
    }
}

/// Total dimension for a list of mode spaces.
pub fn dims_of(spaces: &[FockSpace]) -> Vec<usize> {
    spaces.iter().map(|s| s.dim()).collect()
}

/// Lifts a single-mode operator onto `mode` of a multi-mode space.
pub fn embed(op: &SparseOperator, dims: &[usize], mode: usize) -> Result<SparseOperator> {
    if mode >= dims.len() {
        return Err(Error::IndexOutOfRange {
            index: mode,
            dim: dims.len(),
        });
    }
    op.check_same_dims(&dims[mode..=mode])?;
    let mut out: Option<SparseOperator> = None;
    for (k, &d) in dims.iter().enumerate() {
        let factor = if k == mode {
            op.clone()
        } else {
            SparseOperator::identity(&[d])
        };
        out = Some(match out {
            None => factor,
            Some(acc) => acc.kron(&factor),
        });
    }
    Ok(out.expect("dims is non-empty"))
}
