//! Exact simulator for bang-bang dynamical decoupling of one-dimensional
//! spin-1/2 chains.
//!
//! The library builds XXZ-type chain Hamiltonians with on-site disorder and
//! next-nearest-neighbor frustration as dense matrices, evolves them exactly
//! through dense Hermitian eigendecomposition, and applies cyclic sequences of
//! instantaneous pi-pulses. The zeroth-order average Hamiltonian of any
//! schedule can be computed both numerically (toggled-frame conjugation) and
//! symbolically (sign bookkeeping of the coupling terms), and local
//! magnetization and propagator fidelity track how close the pulsed dynamics
//! comes to a desired effective evolution.
//!
//! Basis convention: computational basis index `i` is read as the bitstring
//! `b_L ... b_1` with site 1 in the least significant bit, and `b_n = 0`
//! meaning spin-up at site `n`.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

pub mod control;
pub mod error;
pub mod evolve;
pub mod model;
pub mod observables;
pub mod scenarios;

pub use error::{Error, Result};

pub type C64 = Complex64;
/// Dense complex matrix, row-major.
pub type CMatrix = Array2<C64>;
/// Dense complex vector (state amplitudes).
pub type CVector = Array1<C64>;

pub fn identity(d: usize) -> CMatrix {
    Array2::eye(d)
}

pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

/// Max-norm (largest entrywise modulus).
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Deviation of `h` from its own adjoint, in max-norm.
pub fn hermiticity_defect(h: &CMatrix) -> f64 {
    let (r, c) = h.dim();
    debug_assert_eq!(r, c);
    let mut dev: f64 = 0.0;
    for i in 0..r {
        for j in i..c {
            dev = dev.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Deviation of `u` from unitarity, `max |U†U - I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let prod = adjoint(u).dot(u);
    max_abs_diff(&prod, &identity(prod.nrows()))
}
