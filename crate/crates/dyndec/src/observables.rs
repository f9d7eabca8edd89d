//! Initial states, local magnetization, and propagator fidelity.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::{C64, CMatrix, CVector};

/// Sampled observable values with strictly increasing times (in units of
/// `1/J`).
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub label: String,
    samples: Vec<(f64, f64)>,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, value: f64) -> Result<()> {
        if let Some((last, _)) = self.samples.last() {
            if t <= *last {
                return Err(Error::InvalidConfig(format!(
                    "time series `{}` times must be strictly increasing ({t} after {last})",
                    self.label
                )));
            }
        }
        self.samples.push((t, value));
        Ok(())
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }
}

/// The domain-wall product state: spins up on sites `1..L/2`, down on the
/// rest. Requires even `L`.
pub fn domain_wall_state(l: usize) -> Result<CVector> {
    if l < 2 || l % 2 != 0 {
        return Err(Error::InvalidParams(format!(
            "domain wall needs even L >= 2, got {l}"
        )));
    }
    let d = 1usize << l;
    // Down-spins (bit = 1) occupy sites L/2+1 ..= L.
    let index = (d - 1) & !((1usize << (l / 2)) - 1);
    let mut psi: CVector = Array1::zeros(d);
    psi[index] = C64::new(1.0, 0.0);
    Ok(psi)
}

fn norm(psi: &CVector) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Local magnetization `M = <psi| sum_{n=1}^{L/2} S^z_n |psi>`, computed in
/// `O(D)` from the amplitudes.
pub fn local_magnetization(psi: &CVector, l: usize) -> Result<f64> {
    if l % 2 != 0 {
        return Err(Error::InvalidParams(format!(
            "local magnetization needs even L, got {l}"
        )));
    }
    if psi.len() != 1 << l {
        return Err(Error::DimensionMismatch {
            left: psi.len(),
            right: 1 << l,
        });
    }
    let defect = (norm(psi) - 1.0).abs();
    if defect > 1e-8 {
        return Err(Error::Unnormalized { defect });
    }
    let half_mask = (1usize << (l / 2)) - 1;
    let mut m = 0.0;
    for (i, amp) in psi.iter().enumerate() {
        let w = amp.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let down = (i & half_mask).count_ones() as f64;
        let up = (l / 2) as f64 - down;
        m += w * 0.5 * (up - down);
    }
    Ok(m)
}

/// Total magnetization `<psi| sum_{n=1}^{L} S^z_n |psi>`.
pub fn total_magnetization(psi: &CVector, l: usize) -> Result<f64> {
    if psi.len() != 1 << l {
        return Err(Error::DimensionMismatch {
            left: psi.len(),
            right: 1 << l,
        });
    }
    let mask = (1usize << l) - 1;
    let mut m = 0.0;
    for (i, amp) in psi.iter().enumerate() {
        let w = amp.norm_sqr();
        let down = (i & mask).count_ones() as f64;
        m += w * 0.5 * (l as f64 - 2.0 * down);
    }
    Ok(m)
}

/// Propagator fidelity `F_u = |Tr(U_w† U)| / D`: phase-insensitive closeness
/// of the achieved propagator to the desired one.
pub fn propagator_fidelity(u_wanted: &CMatrix, u: &CMatrix) -> Result<f64> {
    if u_wanted.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            left: u_wanted.nrows(),
            right: u.nrows(),
        });
    }
    let d = u.nrows();
    let trace: C64 = u_wanted
        .iter()
        .zip(u.iter())
        .map(|(w, z)| w.conj() * z)
        .sum();
    Ok(trace.norm() / d as f64)
}
