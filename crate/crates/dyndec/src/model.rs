//! Spin operators and the chain Hamiltonian `H_0 = H_z + H_NN + alpha H_NNN`.
//!
//! Everything is built as a dense `2^L x 2^L` matrix. Site 1 lives in the
//! least significant bit of the basis index; bit value 0 is spin-up.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::{C64, CMatrix};

/// Spin rotation / coupling axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// The Pauli matrix for this axis, `sigma[row][col]`, in the (up, down)
    /// spinor basis.
    pub fn pauli(self) -> [[C64; 2]; 2] {
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Axis::X => [[zero, one], [one, zero]],
            Axis::Y => [[zero, -i], [i, zero]],
            Axis::Z => [[one, zero], [zero, -one]],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// Parameters of the spin-1/2 chain.
///
/// `l` sites, coupling strength `j` (sets the timescale `1/J`), anisotropy
/// `delta`, NNN/NN ratio `alpha`, and one Zeeman splitting per site.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    pub l: usize,
    pub j: f64,
    pub delta: f64,
    pub alpha: f64,
    pub epsilon: Vec<f64>,
}

impl ChainParams {
    pub fn new(l: usize, j: f64, delta: f64, alpha: f64, epsilon: Vec<f64>) -> Result<Self> {
        if l < 2 {
            return Err(Error::InvalidParams(format!("L must be >= 2, got {l}")));
        }
        if !(j > 0.0) || !j.is_finite() {
            return Err(Error::InvalidParams(format!("J must be positive, got {j}")));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParams(format!(
                "Delta must be >= 0, got {delta}"
            )));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParams(format!(
                "alpha must be >= 0, got {alpha}"
            )));
        }
        if epsilon.len() != l {
            return Err(Error::InvalidParams(format!(
                "epsilon must have exactly L = {l} entries, got {}",
                epsilon.len()
            )));
        }
        if epsilon.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParams("epsilon entries must be finite".into()));
        }
        Ok(Self {
            l,
            j,
            delta,
            alpha,
            epsilon,
        })
    }

    /// Clean chain: all Zeeman splittings zero.
    pub fn clean(l: usize, j: f64, delta: f64, alpha: f64) -> Result<Self> {
        Self::new(l, j, delta, alpha, vec![0.0; l])
    }

    /// Hilbert-space dimension `2^L`.
    pub fn dim(&self) -> usize {
        1 << self.l
    }

    pub fn is_disordered(&self) -> bool {
        self.epsilon.windows(2).any(|w| w[0] != w[1])
    }
}

/// Reproducible on-site disorder: `L` splittings uniform in
/// `[center - spread, center + spread]`.
pub fn random_epsilon(l: usize, center: f64, spread: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..l)
        .map(|_| center + spread * (2.0 * rng.random::<f64>() - 1.0))
        .collect()
}

/// The spin operator `S^a_n = sigma^a_n / 2` embedded in the full chain.
pub fn spin_operator(axis: Axis, site: usize, l: usize) -> Result<CMatrix> {
    if site == 0 || site > l {
        return Err(Error::SiteOutOfRange { site, l });
    }
    let d = 1usize << l;
    let sigma = axis.pauli();
    let shift = site - 1;
    let mask = 1usize << shift;
    let half = C64::new(0.5, 0.0);
    let mut m = Array2::zeros((d, d));
    for col in 0..d {
        let b = (col >> shift) & 1;
        for (rb, sig_row) in sigma.iter().enumerate() {
            let v = sig_row[b];
            if v != Complex64::ZERO {
                let row = (col & !mask) | (rb << shift);
                m[(row, col)] = half * v;
            }
        }
    }
    Ok(m)
}

/// Sum of two-site couplings `sum_n S^a_n S^a_{n+range}` over the open chain.
pub fn bond_sum(axis: Axis, range: usize, l: usize) -> CMatrix {
    let d = 1usize << l;
    let sigma = axis.pauli();
    let quarter = C64::new(0.25, 0.0);
    let mut m = Array2::zeros((d, d));
    // Each Pauli column has a single nonzero entry, so every coupling term
    // contributes one element per basis column.
    for n in 0..l.saturating_sub(range) {
        let (sn, sm) = (n, n + range);
        let (mask_n, mask_m) = (1usize << sn, 1usize << sm);
        for col in 0..d {
            let bn = (col >> sn) & 1;
            let bm = (col >> sm) & 1;
            let (rn, vn) = pauli_column(&sigma, bn);
            let (rm, vm) = pauli_column(&sigma, bm);
            let row = (col & !mask_n & !mask_m) | (rn << sn) | (rm << sm);
            m[(row, col)] += quarter * vn * vm;
        }
    }
    m
}

fn pauli_column(sigma: &[[C64; 2]; 2], b: usize) -> (usize, C64) {
    if sigma[0][b] != Complex64::ZERO {
        (0, sigma[0][b])
    } else {
        (1, sigma[1][b])
    }
}

/// Zeeman term `H_z = sum_n epsilon_n S^z_n` (diagonal).
pub fn h_z(p: &ChainParams) -> CMatrix {
    let d = p.dim();
    let mut m = Array2::zeros((d, d));
    for i in 0..d {
        let mut e = 0.0;
        for (n, eps) in p.epsilon.iter().enumerate() {
            let s = if (i >> n) & 1 == 0 { 0.5 } else { -0.5 };
            e += eps * s;
        }
        m[(i, i)] = C64::new(e, 0.0);
    }
    m
}

/// XXZ coupling at the given bond range: `J [ (XX + YY) + Delta ZZ ]`.
fn xxz_sum(p: &ChainParams, range: usize) -> CMatrix {
    let mut m = bond_sum(Axis::X, range, p.l) + bond_sum(Axis::Y, range, p.l);
    m = m + bond_sum(Axis::Z, range, p.l) * C64::new(p.delta, 0.0);
    m * C64::new(p.j, 0.0)
}

/// Nearest-neighbor exchange `H_NN`.
pub fn h_nn(p: &ChainParams) -> CMatrix {
    xxz_sum(p, 1)
}

/// Next-nearest-neighbor exchange `H_NNN` (without the `alpha` prefactor).
pub fn h_nnn(p: &ChainParams) -> CMatrix {
    xxz_sum(p, 2)
}

/// Full chain Hamiltonian `H_z + H_NN + alpha H_NNN`.
pub fn build_hamiltonian(p: &ChainParams) -> CMatrix {
    let mut h = h_z(p) + h_nn(p);
    if p.alpha != 0.0 {
        h = h + h_nnn(p) * C64::new(p.alpha, 0.0);
    }
    h
}

/// Total-magnetization operator `sum_n S^z_n` (diagonal).
pub fn total_sz(l: usize) -> CMatrix {
    let d = 1usize << l;
    let mut m = Array2::zeros((d, d));
    for i in 0..d {
        let up = l - (i & (d - 1)).count_ones() as usize;
        let val = 0.5 * up as f64 - 0.5 * (l - up) as f64;
        m[(i, i)] = C64::new(val, 0.0);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{hermiticity_defect, max_abs, max_abs_diff};
    use ndarray::linalg::kron;

    fn pauli_matrix(axis: Axis) -> CMatrix {
        let s = axis.pauli();
        ndarray::arr2(&[[s[0][0], s[0][1]], [s[1][0], s[1][1]]])
    }

    /// Independent route: embed sigma/2 by explicit Kronecker products,
    /// site 1 least significant.
    fn spin_operator_kron(axis: Axis, site: usize, l: usize) -> CMatrix {
        let half_sigma = pauli_matrix(axis) * C64::new(0.5, 0.0);
        let mut m = ndarray::arr2(&[[C64::new(1.0, 0.0)]]);
        for n in (1..=l).rev() {
            let factor = if n == site {
                half_sigma.clone()
            } else {
                Array2::eye(2)
            };
            m = kron(&m, &factor);
        }
        m
    }

    #[test]
    fn sz_on_single_site() {
        let m = spin_operator(Axis::Z, 1, 1).unwrap();
        assert_eq!(m[(0, 0)], C64::new(0.5, 0.0));
        assert_eq!(m[(1, 1)], C64::new(-0.5, 0.0));
        assert_eq!(m[(0, 1)], C64::new(0.0, 0.0));
    }

    #[test]
    fn pauli_commutator() {
        // [S^x_1, S^y_1] = i S^z_1, embedded at L = 3.
        let sx = spin_operator(Axis::X, 1, 3).unwrap();
        let sy = spin_operator(Axis::Y, 1, 3).unwrap();
        let sz = spin_operator(Axis::Z, 1, 3).unwrap();
        let comm = sx.dot(&sy) - sy.dot(&sx);
        assert!(max_abs_diff(&comm, &(sz * C64::new(0.0, 1.0))) < 1e-15);
    }

    #[test]
    fn embedding_matches_kron_oracle() {
        for l in 1..=6 {
            for site in 1..=l {
                for axis in [Axis::X, Axis::Y, Axis::Z] {
                    let direct = spin_operator(axis, site, l).unwrap();
                    let oracle = spin_operator_kron(axis, site, l);
                    assert!(
                        max_abs_diff(&direct, &oracle) < 1e-15,
                        "axis {axis:?} site {site} L {l}"
                    );
                }
            }
        }
    }

    #[test]
    fn sx_second_qubit() {
        let m = spin_operator(Axis::X, 2, 2).unwrap();
        let half = C64::new(0.5, 0.0);
        for (i, j) in [(0, 2), (2, 0), (1, 3), (3, 1)] {
            assert_eq!(m[(i, j)], half);
        }
        assert_eq!(m.iter().filter(|z| **z != Complex64::ZERO).count(), 4);
    }

    #[test]
    fn site_out_of_range() {
        assert!(matches!(
            spin_operator(Axis::X, 3, 2),
            Err(Error::SiteOutOfRange { site: 3, l: 2 })
        ));
        assert!(spin_operator(Axis::X, 0, 2).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ChainParams::new(1, 1.0, 1.0, 0.0, vec![0.0]).is_err());
        assert!(ChainParams::new(2, 0.0, 1.0, 0.0, vec![0.0; 2]).is_err());
        assert!(ChainParams::new(2, 1.0, 1.0, 0.0, vec![0.0; 3]).is_err());
        assert!(ChainParams::new(2, 1.0, -0.5, 0.0, vec![0.0; 2]).is_err());
        assert!(ChainParams::clean(4, 1.0, 0.5, 0.2).is_ok());
    }

    #[test]
    fn heisenberg_two_spins() {
        // Analytic spectrum of the two-spin Heisenberg chain: singlet -3/4,
        // triplet +1/4.
        let p = ChainParams::clean(2, 1.0, 1.0, 0.0).unwrap();
        let h = build_hamiltonian(&p);
        let eig = crate::evolve::eigh(&h).unwrap();
        let expect = [-0.75, 0.25, 0.25, 0.25];
        for (got, want) in eig.values.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn xy_two_spins() {
        let p = ChainParams::clean(2, 1.0, 0.0, 0.0).unwrap();
        let h = build_hamiltonian(&p);
        let eig = crate::evolve::eigh(&h).unwrap();
        let expect = [-0.5, 0.0, 0.0, 0.5];
        for (got, want) in eig.values.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_zero_kills_nnn() {
        let p = ChainParams::clean(4, 1.0, 0.7, 0.0).unwrap();
        let h = build_hamiltonian(&p);
        let d = p.dim();
        // No matrix element may connect basis states differing exactly at
        // sites n and n+2.
        for i in 0..d {
            for j in 0..d {
                let diff = i ^ j;
                let connects_nnn = (0..p.l - 2).any(|n| diff == (1 << n) | (1 << (n + 2)));
                if connects_nnn {
                    assert_eq!(h[(i, j)], Complex64::ZERO);
                }
            }
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_and_conserves_sz() {
        let eps = random_epsilon(6, 0.3, 0.2, 42);
        let p = ChainParams::new(6, 1.0, 0.5, 0.4, eps).unwrap();
        let h = build_hamiltonian(&p);
        assert!(hermiticity_defect(&h) <= 1e-14);
        let sz = total_sz(p.l);
        let comm = h.dot(&sz) - sz.dot(&h);
        assert!(max_abs(&comm) <= 1e-12);
    }

    #[test]
    fn hamiltonian_matches_operator_product_oracle() {
        // Rebuild H from explicit spin_operator products and compare
        // entrywise on a random disordered chain.
        let eps = random_epsilon(5, 0.2, 0.3, 7);
        let p = ChainParams::new(5, 1.3, 0.7, 0.35, eps.clone()).unwrap();
        let h = build_hamiltonian(&p);
        let d = p.dim();
        let mut oracle: CMatrix = Array2::zeros((d, d));
        for (n, e) in eps.iter().enumerate() {
            oracle = oracle + spin_operator(Axis::Z, n + 1, p.l).unwrap() * C64::new(*e, 0.0);
        }
        for range in [1usize, 2] {
            let weight = if range == 1 { p.j } else { p.j * p.alpha };
            for n in 1..=(p.l - range) {
                for axis in [Axis::X, Axis::Y, Axis::Z] {
                    let a = spin_operator(axis, n, p.l).unwrap();
                    let b = spin_operator(axis, n + range, p.l).unwrap();
                    let aniso = if axis == Axis::Z { p.delta } else { 1.0 };
                    oracle = oracle + a.dot(&b) * C64::new(weight * aniso, 0.0);
                }
            }
        }
        assert!(max_abs_diff(&h, &oracle) < 1e-13);
    }

    #[test]
    fn uniform_epsilon_is_dynamically_irrelevant() {
        // H_z with uniform splitting commutes with the couplings and with
        // M, so magnetization dynamics cannot depend on it.
        use crate::evolve::expm_i;
        use crate::observables::{domain_wall_state, local_magnetization};
        let l = 6;
        let clean = ChainParams::clean(l, 1.0, 0.5, 0.0).unwrap();
        let shifted = ChainParams::new(l, 1.0, 0.5, 0.0, vec![0.7; l]).unwrap();
        let psi0 = domain_wall_state(l).unwrap();
        for t in [0.5, 2.0, 7.0] {
            let u_clean = expm_i(&build_hamiltonian(&clean), t).unwrap();
            let u_shift = expm_i(&build_hamiltonian(&shifted), t).unwrap();
            let m_clean = local_magnetization(&u_clean.dot(&psi0), l).unwrap();
            let m_shift = local_magnetization(&u_shift.dot(&psi0), l).unwrap();
            assert!((m_clean - m_shift).abs() < 1e-10);
        }
    }

    #[test]
    fn random_epsilon_is_reproducible_and_bounded() {
        let a = random_epsilon(8, 0.5, 0.25, 123);
        let b = random_epsilon(8, 0.5, 0.25, 123);
        assert_eq!(a, b);
        assert!(a.iter().all(|e| (*e - 0.5).abs() <= 0.25));
        assert_ne!(a, random_epsilon(8, 0.5, 0.25, 124));
    }
}
