//! Hermitian eigendecomposition, matrix exponential, and evolution kernels.
//!
//! Free-segment propagators for a fixed Hamiltonian are reused across
//! thousands of cycles, so `exp(-iHt)` goes through a one-time full
//! eigendecomposition rather than scaling-and-squaring; `FreeEvolution`
//! caches one unitary per distinct interval.

use std::collections::HashMap;

use ndarray_linalg::{Eigh, UPLO};

use crate::error::{Error, Result};
use crate::{adjoint, hermiticity_defect, max_abs, C64, CMatrix, CVector};

/// Tolerance for accepting an input matrix as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Spectral decomposition `H = V diag(values) V†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: ndarray::Array1<f64>,
    /// Unitary matrix of eigenvectors, one per column.
    pub vectors: CMatrix,
}

impl EigenDecomposition {
    /// The propagator `exp(-iHt) = V diag(e^{-i lambda t}) V†`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (mut col, lambda) in scaled.columns_mut().into_iter().zip(self.values.iter()) {
            let phase = C64::from_polar(1.0, -lambda * t);
            col.mapv_inplace(|z| z * phase);
        }
        scaled.dot(&adjoint(&self.vectors))
    }

    /// Evolve a state: `exp(-iHt) psi`, `O(D^2)` per call.
    pub fn evolve_state(&self, psi: &CVector, t: f64) -> CVector {
        let mut coeffs = adjoint(&self.vectors).dot(psi);
        for (c, lambda) in coeffs.iter_mut().zip(self.values.iter()) {
            *c *= C64::from_polar(1.0, -lambda * t);
        }
        self.vectors.dot(&coeffs)
    }

    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (mut col, lambda) in scaled.columns_mut().into_iter().zip(self.values.iter()) {
            let w = C64::new(*lambda, 0.0);
            col.mapv_inplace(|z| z * w);
        }
        scaled.dot(&adjoint(&self.vectors))
    }
}

/// Full Hermitian eigendecomposition with ascending eigenvalues.
pub fn eigh(h: &CMatrix) -> Result<EigenDecomposition> {
    let (r, c) = h.dim();
    if r != c {
        return Err(Error::DimensionMismatch { left: r, right: c });
    }
    let defect = hermiticity_defect(h);
    if defect > HERMITICITY_TOL * max_abs(h).max(1.0) {
        return Err(Error::NonHermitian { defect });
    }
    let (values, vectors) = h
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Eigensolver(e.to_string()))?;
    // Depending on how the backend maps row-major storage onto LAPACK's
    // column-major convention, the eigenvectors can come back conjugated
    // (i.e. belonging to H^T). Pick the orientation with the smaller
    // eigen-residual on the first eigenvector; for real matrices both
    // agree.
    let residual = |v: &CMatrix| -> f64 {
        let v0 = v.column(0).to_owned();
        let hv = h.dot(&v0);
        hv.iter()
            .zip(v0.iter())
            .map(|(a, b)| (a - b * C64::new(values[0], 0.0)).norm())
            .fold(0.0, f64::max)
    };
    let conjugated = vectors.mapv(|z| z.conj());
    let vectors = if residual(&conjugated) < residual(&vectors) {
        conjugated
    } else {
        vectors
    };
    Ok(EigenDecomposition { values, vectors })
}

/// The unitary `exp(-iHt)` for Hermitian `H`, `t` in units of `1/J`.
pub fn expm_i(h: &CMatrix, t: f64) -> Result<CMatrix> {
    Ok(eigh(h)?.propagator(t))
}

/// Apply a unitary to a state.
pub fn apply(u: &CMatrix, psi: &CVector) -> Result<CVector> {
    if u.ncols() != psi.len() {
        return Err(Error::DimensionMismatch {
            left: u.ncols(),
            right: psi.len(),
        });
    }
    Ok(u.dot(psi))
}

/// Free evolution under a fixed Hamiltonian, caching one segment propagator
/// per distinct interval.
#[derive(Debug)]
pub struct FreeEvolution {
    eig: EigenDecomposition,
    cache: HashMap<u64, CMatrix>,
}

impl FreeEvolution {
    pub fn new(h: &CMatrix) -> Result<Self> {
        Ok(Self {
            eig: eigh(h)?,
            cache: HashMap::new(),
        })
    }

    pub fn decomposition(&self) -> &EigenDecomposition {
        &self.eig
    }

    pub fn segment(&mut self, tau: f64) -> &CMatrix {
        self.cache
            .entry(tau.to_bits())
            .or_insert_with(|| self.eig.propagator(tau))
    }
}
