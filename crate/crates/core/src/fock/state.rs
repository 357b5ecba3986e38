use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::expm::{expm_apply, ExpmOptions};
use super::operator::{check_dims_match, LinearOperator};
use super::sparse::SparseOperator;
use super::FockSpace;
use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Shared interface of pure and mixed states.
pub trait QuantumState {
    fn dims(&self) -> &[usize];
    fn expectation(&self, op: &SparseOperator) -> Result<C64>;
    /// Photon-number distribution of one mode (the marginal for multi-mode states).
    fn photon_distribution(&self, mode: usize) -> Result<Vec<f64>>;
    /// Reduced density operator of one mode.
    fn reduced(&self, mode: usize) -> Result<DensityOperator>;

    /// Population in the top `tail_width` Fock levels, summed over modes.
    fn leakage(&self, tail_width: usize) -> Result<f64> {
        let mut total = 0.0;
        for mode in 0..self.dims().len() {
            let p = self.photon_distribution(mode)?;
            if tail_width == 0 || tail_width > p.len() {
                return Err(Error::param(
                    "tail_width",
                    format!("must lie in 1..={} (got {tail_width})", p.len()),
                ));
            }
            total += p[p.len() - tail_width..].iter().sum::<f64>();
        }
        Ok(total)
    }
}

fn check_mode(dims: &[usize], mode: usize) -> Result<()> {
    if mode >= dims.len() {
        return Err(Error::IndexOutOfRange {
            index: mode,
            dim: dims.len(),
        });
    }
    Ok(())
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.len() > 2 {
        return Err(Error::InvalidTruncation(format!(
            "only one- and two-mode spaces are supported (got {} modes)",
            dims.len()
        )));
    }
    if dims.iter().any(|&d| d < 2) {
        return Err(Error::InvalidTruncation(format!("mode dimensions must be at least 2, got {dims:?}")));
    }
    Ok(())
}

/// Pure state in a one- or two-mode truncated Fock space (mode 0 slowest).
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(dims: &[usize], amps: Vec<C64>) -> Result<Self> {
        check_dims(dims)?;
        let n: usize = dims.iter().product();
        if amps.len() != n {
            return Err(Error::DimensionMismatch {
                expected: vec![n],
                found: vec![amps.len()],
            });
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::param("amplitudes", "must be finite"));
        }
        Ok(StateVector {
            dims: dims.to_vec(),
            amps,
        })
    }

    pub fn basis(space: FockSpace, n: usize) -> Result<Self> {
        Self::basis_multi(&[space.dim()], &[n])
    }

    pub fn basis_multi(dims: &[usize], levels: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        if levels.len() != dims.len() {
            return Err(Error::DimensionMismatch {
                expected: dims.to_vec(),
                found: levels.to_vec(),
            });
        }
        let mut idx = 0;
        for (&l, &d) in levels.iter().zip(dims) {
            if l >= d {
                return Err(Error::IndexOutOfRange { index: l, dim: d });
            }
            idx = idx * d + l;
        }
        let mut amps = vec![ZERO; dims.iter().product()];
        amps[idx] = C64::new(1.0, 0.0);
        Ok(StateVector {
            dims: dims.to_vec(),
            amps,
        })
    }

    pub fn vacuum(space: FockSpace) -> Self {
        Self::basis(space, 0).expect("vacuum is in range")
    }

    /// Coherent state from its Fock series, renormalized on the truncated space.
    pub fn coherent(space: FockSpace, alpha: C64) -> Self {
        let d = space.dim();
        let mut amps = vec![ZERO; d];
        amps[0] = C64::new(1.0, 0.0);
        for k in 1..d {
            amps[k] = amps[k - 1] * alpha / (k as f64).sqrt();
        }
        let mut s = StateVector { dims: vec![d], amps };
        s.normalize();
        s
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|z| *z /= n);
        }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                found: other.dims.clone(),
            });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// |self⟩ ⊗ |other⟩ for two single-mode states.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.dims.len() != 1 || other.dims.len() != 1 {
            return Err(Error::InvalidTruncation("product expects two single-mode states".into()));
        }
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector {
            dims: vec![self.dim(), other.dim()],
            amps,
        })
    }

    pub fn apply(&self, op: &SparseOperator) -> Result<Self> {
        op.check_same_dims(&self.dims)?;
        Ok(StateVector {
            dims: self.dims.clone(),
            amps: op.apply(&self.amps)?,
        })
    }

    /// exp(scale · G)|ψ⟩ by Krylov projection.
    pub fn evolve<G: LinearOperator + ?Sized>(&self, generator: &G, scale: f64, opts: &ExpmOptions) -> Result<Self> {
        check_dims_match(&self.dims, generator.dims())?;
        let out = expm_apply(generator, &self.amps, scale, opts)?;
        Ok(StateVector {
            dims: self.dims.clone(),
            amps: out.vector,
        })
    }

    fn as_matrix(&self) -> DMatrix<C64> {
        let (d1, d2) = (self.dims[0], self.dims[1]);
        DMatrix::from_row_slice(d1, d2, &self.amps)
    }
}

impl QuantumState for StateVector {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn expectation(&self, op: &SparseOperator) -> Result<C64> {
        op.check_same_dims(&self.dims)?;
        let mut acc = ZERO;
        for r in 0..op.dim() {
            let mut row = ZERO;
            for (c, v) in op.row(r) {
                row += v * self.amps[c];
            }
            acc += self.amps[r].conj() * row;
        }
        Ok(acc)
    }

    fn photon_distribution(&self, mode: usize) -> Result<Vec<f64>> {
        check_mode(&self.dims, mode)?;
        if self.dims.len() == 1 {
            return Ok(self.amps.iter().map(|z| z.norm_sqr()).collect());
        }
        let (d1, d2) = (self.dims[0], self.dims[1]);
        let mut p = vec![0.0; self.dims[mode]];
        for i in 0..d1 {
            for j in 0..d2 {
                let w = self.amps[i * d2 + j].norm_sqr();
                if mode == 0 {
                    p[i] += w;
                } else {
                    p[j] += w;
                }
            }
        }
        Ok(p)
    }

    fn reduced(&self, mode: usize) -> Result<DensityOperator> {
        check_mode(&self.dims, mode)?;
        if self.dims.len() == 1 {
            return Ok(DensityOperator::from_pure(self));
        }
        let m = self.as_matrix();
        let rho = if mode == 0 {
            &m * m.adjoint()
        } else {
            (m.adjoint() * &m).transpose()
        };
        Ok(DensityOperator {
            dims: vec![self.dims[mode]],
            mat: rho,
        })
    }
}

/// Mixed state. Validated constructors enforce Hermiticity, unit trace and
/// positivity within the tolerances below.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    dims: Vec<usize>,
    mat: DMatrix<C64>,
}

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-10;

impl DensityOperator {
    pub fn from_pure(psi: &StateVector) -> Self {
        let v = DVector::from_column_slice(&psi.amps);
        DensityOperator {
            dims: psi.dims.clone(),
            mat: &v * v.adjoint(),
        }
    }

    pub fn from_matrix(dims: &[usize], mat: DMatrix<C64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(dims, mat)?;
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(dims: &[usize], mat: DMatrix<C64>) -> Result<Self> {
        check_dims(dims)?;
        let n: usize = dims.iter().product();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: vec![n, n],
                found: vec![mat.nrows(), mat.ncols()],
            });
        }
        Ok(DensityOperator {
            dims: dims.to_vec(),
            mat,
        })
    }

    pub fn maximally_mixed(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        let n: usize = dims.iter().product();
        Ok(DensityOperator {
            dims: dims.to_vec(),
            mat: DMatrix::identity(n, n).map(|z: C64| z / n as f64),
        })
    }

    /// Convex mixture Σ w_k |ψ_k⟩⟨ψ_k| with weights normalized to one.
    pub fn mixture(states: &[(f64, StateVector)]) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::param("states", "mixture needs at least one state"))?;
        let wsum: f64 = states.iter().map(|(w, _)| *w).sum();
        if states.iter().any(|(w, _)| *w < 0.0) || wsum <= 0.0 {
            return Err(Error::param("weights", "must be non-negative with positive sum"));
        }
        let n = first.1.dim();
        let mut mat = DMatrix::zeros(n, n);
        for (w, s) in states {
            if s.dims != first.1.dims {
                return Err(Error::DimensionMismatch {
                    expected: first.1.dims.clone(),
                    found: s.dims.clone(),
                });
            }
            let v = DVector::from_column_slice(&s.amps);
            mat += (&v * v.adjoint()).map(|z| z * (*w / wsum));
        }
        Ok(DensityOperator {
            dims: first.1.dims.clone(),
            mat,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let herm = (&self.mat - self.mat.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian (max deviation {herm:.3e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
        }
        let lmin = self.min_eigenvalue();
        if lmin < -POSITIVITY_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {lmin:.3e}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn purity(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    fn hermitian_part(&self) -> DMatrix<C64> {
        (&self.mat + self.mat.adjoint()).map(|z| z * 0.5)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.hermitian_part().symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().cloned().unwrap_or(0.0)
    }

    /// Spectral decomposition (weight, eigenvector), dropping weights below `cutoff` in magnitude.
    pub fn spectral(&self, cutoff: f64) -> Vec<(f64, StateVector)> {
        let eig = self.hermitian_part().symmetric_eigen();
        let mut out = Vec::new();
        for (k, &w) in eig.eigenvalues.iter().enumerate() {
            if w.abs() > cutoff {
                let col: Vec<C64> = eig.eigenvectors.column(k).iter().cloned().collect();
                out.push((
                    w,
                    StateVector {
                        dims: self.dims.clone(),
                        amps: col,
                    },
                ));
            }
        }
        out
    }

    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                found: other.dims.clone(),
            });
        }
        let d = &self.mat - &other.mat;
        let d = (&d + d.adjoint()).map(|z| z * 0.5);
        Ok(0.5 * d.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>())
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn fidelity_with_pure(&self, psi: &StateVector) -> Result<f64> {
        if self.dims != psi.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                found: psi.dims.clone(),
            });
        }
        let v = DVector::from_column_slice(&psi.amps);
        Ok((v.adjoint() * &self.mat * &v)[(0, 0)].re)
    }

    /// Uhlmann fidelity (Tr √(√ρ σ √ρ))².
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                found: other.dims.clone(),
            });
        }
        let sqrt_rho = psd_sqrt(&self.hermitian_part());
        let inner = &sqrt_rho * &other.mat * &sqrt_rho;
        let inner = (&inner + inner.adjoint()).map(|z| z * 0.5);
        let s: f64 = inner.symmetric_eigenvalues().iter().map(|x| x.max(0.0).sqrt()).sum();
        Ok(s * s)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.dims.len() != 1 || other.dims.len() != 1 {
            return Err(Error::InvalidTruncation("tensor expects two single-mode densities".into()));
        }
        Ok(DensityOperator {
            dims: vec![self.dim(), other.dim()],
            mat: self.mat.kronecker(&other.mat),
        })
    }

    /// Partial trace keeping `keep` of a two-mode density.
    pub fn partial_trace(&self, keep: usize) -> Result<Self> {
        check_mode(&self.dims, keep)?;
        if self.dims.len() == 1 {
            return Ok(self.clone());
        }
        let (d1, d2) = (self.dims[0], self.dims[1]);
        let dk = self.dims[keep];
        let mut out = DMatrix::zeros(dk, dk);
        if keep == 0 {
            for i in 0..d1 {
                for k in 0..d1 {
                    out[(i, k)] = (0..d2).map(|j| self.mat[(i * d2 + j, k * d2 + j)]).sum();
                }
            }
        } else {
            for j in 0..d2 {
                for l in 0..d2 {
                    out[(j, l)] = (0..d1).map(|i| self.mat[(i * d2 + j, i * d2 + l)]).sum();
                }
            }
        }
        Ok(DensityOperator {
            dims: vec![dk],
            mat: out,
        })
    }

    /// U ρ U† with U = exp(scale · G), propagating each retained eigenvector.
    pub fn evolve<G: LinearOperator + ?Sized>(&self, generator: &G, scale: f64, opts: &ExpmOptions) -> Result<Self> {
        check_dims_match(&self.dims, generator.dims())?;
        let n = self.dim();
        let mut mat = DMatrix::zeros(n, n);
        for (w, v) in self.spectral(1e-18) {
            let u = v.evolve(generator, scale, opts)?;
            let col = DVector::from_column_slice(&u.amps);
            mat += (&col * col.adjoint()).map(|z| z * w);
        }
        Ok(DensityOperator {
            dims: self.dims.clone(),
            mat,
        })
    }

    /// A ρ A† for an arbitrary operator A (no normalization).
    pub fn sandwich(&self, op: &SparseOperator) -> Result<Self> {
        op.check_same_dims(&self.dims)?;
        let a = op.to_dense();
        Ok(DensityOperator {
            dims: self.dims.clone(),
            mat: &a * &self.mat * a.adjoint(),
        })
    }
}

fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        let w = eig.eigenvalues[k].max(0.0).sqrt();
        if w > 0.0 {
            let v = eig.eigenvectors.column(k);
            out += (v * v.adjoint()).map(|z| z * w);
        }
    }
    out
}

impl QuantumState for DensityOperator {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn expectation(&self, op: &SparseOperator) -> Result<C64> {
        op.check_same_dims(&self.dims)?;
        Ok(op.iter().map(|(r, c, v)| v * self.mat[(c, r)]).sum())
    }

    fn photon_distribution(&self, mode: usize) -> Result<Vec<f64>> {
        check_mode(&self.dims, mode)?;
        if self.dims.len() == 1 {
            return Ok(self.mat.diagonal().iter().map(|z| z.re).collect());
        }
        let (d1, d2) = (self.dims[0], self.dims[1]);
        let mut p = vec![0.0; self.dims[mode]];
        for i in 0..d1 {
            for j in 0..d2 {
                let w = self.mat[(i * d2 + j, i * d2 + j)].re;
                if mode == 0 {
                    p[i] += w;
                } else {
                    p[j] += w;
                }
            }
        }
        Ok(p)
    }

    fn reduced(&self, mode: usize) -> Result<DensityOperator> {
        self.partial_trace(mode)
    }
}

/// First and second quadrature moments of one mode, with x = (a + a†)/√2, p = (a − a†)/(i√2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureMoments {
    pub mean_a: C64,
    pub var_x: f64,
    pub var_p: f64,
    pub cov_xp: f64,
}

impl QuadratureMoments {
    pub fn of<S: QuantumState>(state: &S, mode: usize) -> Result<Self> {
        let rho = state.reduced(mode)?;
        let space = FockSpace::new(rho.dim() - 1)?;
        let a = space.annihilation();
        let a2 = a.matmul(&a)?;
        let mean_a = rho.expectation(&a)?;
        let e_a2 = rho.expectation(&a2)?;
        let n = rho.expectation(&space.number())?.re;
        let x = std::f64::consts::SQRT_2 * mean_a.re;
        let p = std::f64::consts::SQRT_2 * mean_a.im;
        Ok(QuadratureMoments {
            mean_a,
            var_x: e_a2.re + n + 0.5 - x * x,
            var_p: -e_a2.re + n + 0.5 - p * p,
            cov_xp: e_a2.im - x * p,
        })
    }

    /// Minimum variance over all rotated quadratures.
    pub fn min_variance(&self) -> f64 {
        let mean = 0.5 * (self.var_x + self.var_p);
        let half = 0.5 * (self.var_x - self.var_p);
        mean - (half * half + self.cov_xp * self.cov_xp).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn space(n: usize) -> FockSpace {
        FockSpace::new(n).unwrap()
    }

    fn random_state(dims: &[usize], seed: &[f64]) -> StateVector {
        let n: usize = dims.iter().product();
        let amps = (0..n)
            .map(|k| C64::new(seed[k % seed.len()], seed[(3 * k + 1) % seed.len()]))
            .collect();
        let mut s = StateVector::new(dims, amps).unwrap();
        s.normalize();
        s
    }

    #[test]
    fn coherent_mean_and_leakage() {
        let s = StateVector::coherent(space(60), C64::new(3.0, 0.0));
        let n = s.expectation(&space(60).number()).unwrap().re;
        assert_relative_eq!(n, 9.0, epsilon = 1e-10);
        assert!(s.leakage(5).unwrap() < 1e-12);
        let top = StateVector::basis(space(8), 8).unwrap();
        assert_relative_eq!(top.leakage(1).unwrap(), 1.0);
        assert!(top.leakage(0).is_err());
    }

    #[test]
    fn reduced_states_of_product_are_factors() {
        let a = StateVector::coherent(space(6), C64::new(0.5, 0.2));
        let b = StateVector::coherent(space(4), C64::new(-0.3, 0.1));
        let ab = a.product(&b).unwrap();
        let ra = ab.reduced(0).unwrap();
        let rb = ab.reduced(1).unwrap();
        assert!(ra.trace_distance(&DensityOperator::from_pure(&a)).unwrap() < 1e-14);
        assert!(rb.trace_distance(&DensityOperator::from_pure(&b)).unwrap() < 1e-14);
        let full = DensityOperator::from_pure(&ab);
        assert!(full.partial_trace(1).unwrap().trace_distance(&rb).unwrap() < 1e-14);
        assert!(full.partial_trace(0).unwrap().trace_distance(&ra).unwrap() < 1e-14);
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let mut m = DMatrix::<C64>::identity(3, 3).map(|z| z / 3.0);
        assert!(DensityOperator::from_matrix(&[3], m.clone()).is_ok());
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityOperator::from_matrix(&[3], m.clone()).is_err());
        let m2 = DMatrix::<C64>::identity(3, 3).map(|z| z * 0.5);
        assert!(DensityOperator::from_matrix(&[3], m2).is_err());
        let mut m3 = DMatrix::<C64>::zeros(2, 2);
        m3[(0, 0)] = C64::new(1.5, 0.0);
        m3[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(DensityOperator::from_matrix(&[2], m3).is_err());
    }

    #[test]
    fn vacuum_quadratures_are_half() {
        let q = QuadratureMoments::of(&StateVector::vacuum(space(10)), 0).unwrap();
        assert_relative_eq!(q.var_x, 0.5, epsilon = 1e-14);
        assert_relative_eq!(q.var_p, 0.5, epsilon = 1e-14);
        assert_relative_eq!(q.min_variance(), 0.5, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn density_of_random_pure_state_is_valid(seed in proptest::collection::vec(-1.0f64..1.0, 5..30)) {
            let s = random_state(&[4, 3], &seed);
            let rho = DensityOperator::from_pure(&s);
            prop_assert!(rho.validate().is_ok());
            prop_assert!((rho.purity() - 1.0).abs() < 1e-12);
            let r1 = s.reduced(0).unwrap();
            let r2 = s.reduced(1).unwrap();
            prop_assert!(r1.validate().is_ok() && r2.validate().is_ok());
            // both marginals of a pure bipartite state share their spectrum
            prop_assert!((r1.purity() - r2.purity()).abs() < 1e-12);
            prop_assert!(rho.partial_trace(0).unwrap().trace_distance(&r1).unwrap() < 1e-12);
        }

        #[test]
        fn expectation_agrees_between_pure_and_density(seed in proptest::collection::vec(-1.0f64..1.0, 5..30)) {
            let sp = space(5);
            let s = random_state(&[6], &seed);
            let rho = DensityOperator::from_pure(&s);
            for op in [sp.number(), sp.annihilation(), sp.quadrature_x()] {
                let a = s.expectation(&op).unwrap();
                let b = rho.expectation(&op).unwrap();
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
