//! Bang-bang control: pulses, cyclic schedules, toggled-frame Hamiltonians,
//! the zeroth-order average Hamiltonian, and the named pulse sequences.
//!
//! A schedule is an ordered list of (free interval, pulse) pairs forming one
//! cycle. The cycle propagator is
//! `U(T_c) = P_m e^{-iH_0 tau_m} ... P_1 e^{-iH_0 tau_1}`, and cyclicity
//! means `P_m ... P_1` is proportional to the identity, so that
//! `U(nT_c) = U(T_c)^n`.

use ndarray::linalg::kron;

use crate::error::{Error, Result};
use crate::evolve::FreeEvolution;
use crate::model::Axis;
use crate::{adjoint, identity, max_abs_diff, C64, CMatrix, CVector};

/// Critical NNN/NN ratio separating the spin-fluid and dimer phases of the
/// closed isotropic chain.
pub const ALPHA_CRITICAL: f64 = 0.241;

const CYCLICITY_TOL: f64 = 1e-10;

/// An instantaneous rotation of a set of sites about one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    pub axis: Axis,
    /// Rotation angle in radians; the named sequences use pi throughout.
    pub angle: f64,
    /// Target sites, 1-based, sorted, deduplicated.
    pub sites: Vec<usize>,
}

impl Pulse {
    pub fn new(axis: Axis, angle: f64, mut sites: Vec<usize>) -> Result<Self> {
        sites.sort_unstable();
        sites.dedup();
        if sites.is_empty() {
            return Err(Error::InvalidPulse("empty target site set".into()));
        }
        if sites[0] == 0 {
            return Err(Error::InvalidPulse("sites are 1-based".into()));
        }
        if !angle.is_finite() {
            return Err(Error::InvalidPulse(format!("non-finite angle {angle}")));
        }
        Ok(Self { axis, angle, sites })
    }

    /// A pi-rotation of the given sites.
    pub fn pi(axis: Axis, sites: Vec<usize>) -> Result<Self> {
        Self::new(axis, std::f64::consts::PI, sites)
    }

    pub fn is_pi(&self) -> bool {
        (self.angle - std::f64::consts::PI).abs() <= 1e-12
    }

    pub fn targets(&self, site: usize) -> bool {
        self.sites.binary_search(&site).is_ok()
    }
}

/// The unitary `prod_{n in sites} exp(-i angle S^a_n)`.
pub fn pulse_unitary(pulse: &Pulse, l: usize) -> Result<CMatrix> {
    let max = *pulse.sites.last().unwrap();
    if max > l {
        return Err(Error::SiteOutOfRange { site: max, l });
    }
    let half = pulse.angle / 2.0;
    let (c, s) = (half.cos(), half.sin());
    let sigma = pulse.axis.pauli();
    // Single-site rotation exp(-i angle sigma/2) = cos I - i sin sigma.
    let mut rot = [[C64::ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { C64::new(c, 0.0) } else { C64::ZERO };
            rot[i][j] = id - C64::new(0.0, s) * sigma[i][j];
        }
    }
    let rot = ndarray::arr2(&rot);
    let eye2: CMatrix = identity(2);
    let mut u = ndarray::arr2(&[[C64::new(1.0, 0.0)]]);
    // Site 1 is the least significant bit, so it is the last Kronecker factor.
    for site in (1..=l).rev() {
        let factor = if pulse.targets(site) { &rot } else { &eye2 };
        u = kron(&u, factor);
    }
    Ok(u)
}

/// One free-evolution interval followed by one pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub tau: f64,
    pub pulse: Pulse,
}

/// One cycle of a periodic bang-bang sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    segments: Vec<Segment>,
}

impl PulseSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidSchedule("no segments".into()));
        }
        for seg in &segments {
            if !(seg.tau > 0.0) || !seg.tau.is_finite() {
                return Err(Error::InvalidSchedule(format!(
                    "interval must be positive, got {}",
                    seg.tau
                )));
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Number of pulses `m` in one cycle.
    pub fn num_pulses(&self) -> usize {
        self.segments.len()
    }

    pub fn cycle_time(&self) -> f64 {
        self.segments.iter().map(|s| s.tau).sum()
    }
}

/// Named preset sequences. Intervals are in units of `1/J`.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceSpec {
    /// Two global pi-pulses about x, equally separated; averages out on-site
    /// disorder.
    GlobalPiX { tau: f64 },
    /// Eight equally separated pi-pulses on mod-4 site patterns; removes NNN
    /// couplings and halves the NN couplings.
    EightPulse { tau: f64 },
    /// Four equally separated pulses alternating y on odd sites and x on even
    /// sites; removes NN couplings, leaving the NNN exchange.
    FourPulse { tau: f64 },
    /// Two z pi-pulses on even sites with unequal intervals; rescales the
    /// flip-flop term by `(tau1 - tau2)/T_c`.
    ZTwoPulse { tau1: f64, tau2: f64 },
    /// The four-pulse sequence with intervals `tau1, tau2, tau3, tau2`;
    /// reshapes the XXZ couplings toward the gapless side.
    FourPulseGapless { tau1: f64, tau2: f64, tau3: f64 },
    /// The four-pulse sequence with intervals `tau1, tau_a, tau_a, tau_a`;
    /// reduces NN relative to NNN exchange.
    FluidToDimer { tau1: f64, tau_a: f64 },
    /// Two z pi-pulses on sites congruent to 1 or 2 mod 4, equally separated;
    /// averages out the NNN flip-flop term.
    ZNnnFlipFlop { tau: f64 },
}

impl SequenceSpec {
    /// Interval for the spin-fluid-to-dimer sequence that makes the reshaped
    /// frustration ratio `alpha T_c / (tau1 - tau_a)` equal `alpha_w`.
    pub fn fluid_to_dimer(tau1: f64, alpha: f64, alpha_w: f64) -> Result<Self> {
        if !(tau1 > 0.0) || !(alpha > 0.0) || !(alpha_w > 0.0) {
            return Err(Error::InvalidSchedule(
                "fluid-to-dimer parameters must be positive".into(),
            ));
        }
        let tau_a = tau1 * (alpha_w - alpha) / (alpha_w + 3.0 * alpha);
        if !(tau_a > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "target ratio {alpha_w} not reachable from alpha {alpha} (tau_a = {tau_a})"
            )));
        }
        Ok(SequenceSpec::FluidToDimer { tau1, tau_a })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SequenceSpec::GlobalPiX { .. } => "global-pi-x",
            SequenceSpec::EightPulse { .. } => "eight-pulse",
            SequenceSpec::FourPulse { .. } => "four-pulse",
            SequenceSpec::ZTwoPulse { .. } => "z-two-pulse",
            SequenceSpec::FourPulseGapless { .. } => "four-pulse-gapless",
            SequenceSpec::FluidToDimer { .. } => "fluid-to-dimer",
            SequenceSpec::ZNnnFlipFlop { .. } => "z-nnn-flip-flop",
        }
    }

    pub fn intervals(&self) -> Vec<f64> {
        match *self {
            SequenceSpec::GlobalPiX { tau } | SequenceSpec::ZNnnFlipFlop { tau } => vec![tau; 2],
            SequenceSpec::EightPulse { tau } => vec![tau; 8],
            SequenceSpec::FourPulse { tau } => vec![tau; 4],
            SequenceSpec::ZTwoPulse { tau1, tau2 } => vec![tau1, tau2],
            SequenceSpec::FourPulseGapless { tau1, tau2, tau3 } => vec![tau1, tau2, tau3, tau2],
            SequenceSpec::FluidToDimer { tau1, tau_a } => vec![tau1, tau_a, tau_a, tau_a],
        }
    }

    /// Rescale every interval by the same factor (shrinks or stretches the
    /// cycle without changing its structure).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut spec = self.clone();
        match &mut spec {
            SequenceSpec::GlobalPiX { tau }
            | SequenceSpec::ZNnnFlipFlop { tau }
            | SequenceSpec::EightPulse { tau }
            | SequenceSpec::FourPulse { tau } => *tau *= factor,
            SequenceSpec::ZTwoPulse { tau1, tau2 } => {
                *tau1 *= factor;
                *tau2 *= factor;
            }
            SequenceSpec::FourPulseGapless { tau1, tau2, tau3 } => {
                *tau1 *= factor;
                *tau2 *= factor;
                *tau3 *= factor;
            }
            SequenceSpec::FluidToDimer { tau1, tau_a } => {
                *tau1 *= factor;
                *tau_a *= factor;
            }
        }
        spec
    }
}

/// Sites `start, start + step, ...` up to `l`.
fn sites_by_step(start: usize, step: usize, l: usize) -> Vec<usize> {
    (start..=l).step_by(step).collect()
}

/// Union of two mod-4 residue classes.
fn sites_mod4(r1: usize, r2: usize, l: usize) -> Vec<usize> {
    let mut v = sites_by_step(r1, 4, l);
    v.extend(sites_by_step(r2, 4, l));
    v
}

/// Build the pulse schedule for a named sequence at chain length `l`.
pub fn make_sequence(spec: &SequenceSpec, l: usize) -> Result<PulseSchedule> {
    let intervals = spec.intervals();
    for tau in &intervals {
        if !(*tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "interval must be positive, got {tau}"
            )));
        }
    }
    let pulses: Vec<Pulse> = match spec {
        SequenceSpec::GlobalPiX { .. } => {
            let p = Pulse::pi(Axis::X, (1..=l).collect())?;
            vec![p.clone(), p]
        }
        SequenceSpec::EightPulse { .. } => {
            if l < 4 {
                return Err(Error::InvalidSchedule(format!(
                    "eight-pulse sequence needs L >= 4, got {l}"
                )));
            }
            let p13 = Pulse::pi(Axis::X, sites_mod4(1, 2, l))?;
            let p24 = Pulse::pi(Axis::Y, sites_mod4(3, 4, l))?;
            let p57 = Pulse::pi(Axis::X, sites_mod4(2, 3, l))?;
            let p68 = Pulse::pi(Axis::Y, sites_mod4(1, 4, l))?;
            vec![
                p13.clone(),
                p24.clone(),
                p13,
                p24,
                p57.clone(),
                p68.clone(),
                p57,
                p68,
            ]
        }
        SequenceSpec::FourPulse { .. }
        | SequenceSpec::FourPulseGapless { .. }
        | SequenceSpec::FluidToDimer { .. } => {
            let p_odd = Pulse::pi(Axis::Y, sites_by_step(1, 2, l))?;
            let p_even = Pulse::pi(Axis::X, sites_by_step(2, 2, l))?;
            vec![p_odd.clone(), p_even.clone(), p_odd, p_even]
        }
        SequenceSpec::ZTwoPulse { tau1, tau2 } => {
            if tau1 < tau2 {
                return Err(Error::InvalidSchedule(format!(
                    "z-two-pulse needs tau1 >= tau2, got {tau1} < {tau2}"
                )));
            }
            let p = Pulse::pi(Axis::Z, sites_by_step(2, 2, l))?;
            vec![p.clone(), p]
        }
        SequenceSpec::ZNnnFlipFlop { .. } => {
            if l < 4 {
                return Err(Error::InvalidSchedule(format!(
                    "z-nnn-flip-flop sequence needs L >= 4, got {l}"
                )));
            }
            let p = Pulse::pi(Axis::Z, sites_mod4(1, 2, l))?;
            vec![p.clone(), p]
        }
    };
    let segments = intervals
        .into_iter()
        .zip(pulses)
        .map(|(tau, pulse)| Segment { tau, pulse })
        .collect();
    PulseSchedule::new(segments)
}

/// Toggled-frame Hamiltonian for segment `k`:
/// `H_k = (P_k ... P_1)† H_0 (P_k ... P_1)`, with `H_0` itself at `k = 0`.
pub fn toggled_hamiltonian(
    h0: &CMatrix,
    schedule: &PulseSchedule,
    k: usize,
    l: usize,
) -> Result<CMatrix> {
    let m = schedule.num_pulses();
    if k >= m {
        return Err(Error::SegmentOutOfRange {
            index: k,
            segments: m,
        });
    }
    let mut q = identity(h0.nrows());
    for seg in &schedule.segments()[..k] {
        q = pulse_unitary(&seg.pulse, l)?.dot(&q);
    }
    Ok(adjoint(&q).dot(h0).dot(&q))
}

/// Zeroth-order average Hamiltonian
/// `sum_k (tau_{k+1} / T_c) H_k`.
pub fn average_hamiltonian_0(h0: &CMatrix, schedule: &PulseSchedule, l: usize) -> Result<CMatrix> {
    let t_c = schedule.cycle_time();
    let mut q = identity(h0.nrows());
    let mut avg: CMatrix = h0 * C64::new(schedule.segments()[0].tau / t_c, 0.0);
    for (k, seg) in schedule.segments().iter().enumerate().skip(1) {
        let prev = &schedule.segments()[k - 1];
        q = pulse_unitary(&prev.pulse, l)?.dot(&q);
        let toggled = adjoint(&q).dot(h0).dot(&q);
        avg = avg + toggled * C64::new(seg.tau / t_c, 0.0);
    }
    Ok(avg)
}

/// Parity class of a two-site coupling term's first site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondClass {
    /// Terms `S^a_{2k+1} S^a_{2k+1+r}`.
    OddFirst,
    /// Terms `S^a_{2k+2} S^a_{2k+2+r}`.
    EvenFirst,
    /// Both parity classes carry the same signs.
    All,
}

impl BondClass {
    pub fn label(&self, axis: Axis, range: usize) -> String {
        let a = axis.label();
        match (self, range) {
            (BondClass::OddFirst, 1) => format!("S^{a}_(2k+1) S^{a}_(2k+2)"),
            (BondClass::EvenFirst, 1) => format!("S^{a}_(2k+2) S^{a}_(2k+3)"),
            (BondClass::All, 1) => format!("S^{a}_(k+1) S^{a}_(k+2)"),
            (BondClass::OddFirst, _) => format!("S^{a}_(2k+1) S^{a}_(2k+3)"),
            (BondClass::EvenFirst, _) => format!("S^{a}_(2k+2) S^{a}_(2k+4)"),
            (BondClass::All, _) => format!("S^{a}_(k+1) S^{a}_(k+3)"),
        }
    }
}

/// Per-segment sign of one class of coupling terms.
#[derive(Debug, Clone, PartialEq)]
pub struct SignRow {
    pub axis: Axis,
    /// Bond range: 1 for NN, 2 for NNN.
    pub range: usize,
    pub class: BondClass,
    /// One sign per free-evolution segment.
    pub signs: Vec<i8>,
}

/// Sign table of all two-site coupling classes under a pi-pulse schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct SignProfile {
    pub rows: Vec<SignRow>,
}

impl SignProfile {
    pub fn row(&self, axis: Axis, range: usize, class: BondClass) -> Option<&SignRow> {
        self.rows
            .iter()
            .find(|r| r.axis == axis && r.range == range && r.class == class)
    }

    /// Interval-weighted average sign per row: the coefficient each coupling
    /// class keeps in the zeroth-order average Hamiltonian.
    pub fn average_weights(&self, schedule: &PulseSchedule) -> Vec<(SignRow, f64)> {
        let t_c = schedule.cycle_time();
        self.rows
            .iter()
            .map(|row| {
                let w: f64 = row
                    .signs
                    .iter()
                    .zip(schedule.segments())
                    .map(|(s, seg)| f64::from(*s) * seg.tau / t_c)
                    .sum();
                (row.clone(), w)
            })
            .collect()
    }
}

/// Sign of the coupling terms in every free-evolution segment, obtained by
/// symbolic conjugation of Pauli strings: a pi-rotation about axis `b` maps
/// `sigma^a -> sigma^a` for `a = b` and `sigma^a -> -sigma^a` otherwise, on
/// the targeted sites.
pub fn coupling_sign_profile(schedule: &PulseSchedule, l: usize) -> Result<SignProfile> {
    for seg in schedule.segments() {
        if !seg.pulse.is_pi() {
            return Err(Error::UnsupportedPulseAngle {
                angle: seg.pulse.angle,
            });
        }
        if *seg.pulse.sites.last().unwrap() > l {
            return Err(Error::SiteOutOfRange {
                site: *seg.pulse.sites.last().unwrap(),
                l,
            });
        }
    }
    let m = schedule.num_pulses();
    // site_sign[k][n][axis]: accumulated sign of sigma^axis at site n+1
    // during segment k.
    let axes = [Axis::X, Axis::Y, Axis::Z];
    let mut site_sign = vec![vec![[1i8; 3]; l]; m];
    for k in 1..m {
        let prev_pulse = &schedule.segments()[k - 1].pulse;
        for n in 0..l {
            let mut signs = site_sign[k - 1][n];
            if prev_pulse.targets(n + 1) {
                for (a, axis) in axes.iter().enumerate() {
                    if *axis != prev_pulse.axis {
                        signs[a] = -signs[a];
                    }
                }
            }
            site_sign[k][n] = signs;
        }
    }

    let mut rows = Vec::new();
    for range in [1usize, 2] {
        if l <= range {
            continue;
        }
        for (a, axis) in axes.iter().enumerate() {
            let mut per_class: [Option<Vec<i8>>; 2] = [None, None];
            for first in 1..=(l - range) {
                let parity = (first + 1) % 2; // 0 = odd first site
                let signs: Vec<i8> = (0..m)
                    .map(|k| site_sign[k][first - 1][a] * site_sign[k][first - 1 + range][a])
                    .collect();
                match &per_class[parity] {
                    None => per_class[parity] = Some(signs),
                    Some(existing) => {
                        if *existing != signs {
                            return Err(Error::InvalidSchedule(format!(
                                "coupling signs not uniform within the {} bond class",
                                BondClass::OddFirst.label(*axis, range)
                            )));
                        }
                    }
                }
            }
            match (per_class[0].take(), per_class[1].take()) {
                (Some(odd), Some(even)) if odd == even => rows.push(SignRow {
                    axis: *axis,
                    range,
                    class: BondClass::All,
                    signs: odd,
                }),
                (odd, even) => {
                    if let Some(signs) = odd {
                        rows.push(SignRow {
                            axis: *axis,
                            range,
                            class: BondClass::OddFirst,
                            signs,
                        });
                    }
                    if let Some(signs) = even {
                        rows.push(SignRow {
                            axis: *axis,
                            range,
                            class: BondClass::EvenFirst,
                            signs,
                        });
                    }
                }
            }
        }
    }
    Ok(SignProfile { rows })
}

/// Observable sampling policy for pulsed evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Record at every cycle completion `t = n T_c`.
    PerCycle,
    /// Record after every free segment plus pulse, `t = t_k` within cycles.
    PerPulse,
}

/// A chain under a cyclic pulse schedule, with cached segment propagators and
/// cycle-power ladder for evaluating `U(t)` at arbitrary times.
pub struct PulsedSystem {
    l: usize,
    schedule: PulseSchedule,
    free: FreeEvolution,
    pulses: Vec<CMatrix>,
    /// Cumulative segment end times within one cycle.
    segment_ends: Vec<f64>,
    u_cycle: Option<CMatrix>,
    /// `W_k = P_k F_k ... P_1 F_1` for k = 1..m (index 0 is identity).
    prefixes: Option<Vec<CMatrix>>,
    /// `U(T_c)^(2^j)` for binary powering.
    ladder: Vec<CMatrix>,
}

impl PulsedSystem {
    /// Build from a Hamiltonian and a schedule; fails if the schedule is not
    /// cyclic (pulse product not proportional to the identity).
    pub fn new(h0: &CMatrix, schedule: PulseSchedule, l: usize) -> Result<Self> {
        let d = 1usize << l;
        if h0.nrows() != d {
            return Err(Error::DimensionMismatch {
                left: h0.nrows(),
                right: d,
            });
        }
        let pulses: Vec<CMatrix> = schedule
            .segments()
            .iter()
            .map(|seg| pulse_unitary(&seg.pulse, l))
            .collect::<Result<_>>()?;
        // Cyclicity: P_m ... P_1 must be a global phase times the identity.
        let mut prod = identity(d);
        for p in &pulses {
            prod = p.dot(&prod);
        }
        let phase = prod[(0, 0)];
        let defect = if (phase.norm() - 1.0).abs() > CYCLICITY_TOL {
            f64::INFINITY
        } else {
            max_abs_diff(&prod, &(identity(d) * phase))
        };
        if defect > CYCLICITY_TOL {
            return Err(Error::NonCyclic { defect });
        }
        let mut ends = Vec::with_capacity(schedule.num_pulses());
        let mut acc = 0.0;
        for seg in schedule.segments() {
            acc += seg.tau;
            ends.push(acc);
        }
        Ok(Self {
            l,
            schedule,
            free: FreeEvolution::new(h0)?,
            pulses,
            segment_ends: ends,
            u_cycle: None,
            prefixes: None,
            ladder: Vec::new(),
        })
    }

    pub fn schedule(&self) -> &PulseSchedule {
        &self.schedule
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn cycle_time(&self) -> f64 {
        self.schedule.cycle_time()
    }

    fn ensure_prefixes(&mut self) {
        if self.prefixes.is_some() {
            return;
        }
        let d = 1usize << self.l;
        let mut w = identity(d);
        let mut prefixes = Vec::with_capacity(self.schedule.num_pulses() + 1);
        prefixes.push(w.clone());
        for k in 0..self.schedule.num_pulses() {
            let tau = self.schedule.segments()[k].tau;
            let f = self.free.segment(tau).clone();
            w = self.pulses[k].dot(&f).dot(&w);
            prefixes.push(w.clone());
        }
        self.u_cycle = Some(prefixes.last().unwrap().clone());
        self.prefixes = Some(prefixes);
    }

    /// The one-cycle propagator `U(T_c)`.
    pub fn cycle_propagator(&mut self) -> &CMatrix {
        self.ensure_prefixes();
        self.u_cycle.as_ref().unwrap()
    }

    /// The step for segment `k`: `P_k exp(-iH_0 tau_k)`.
    pub fn segment_step(&mut self, k: usize) -> Result<CMatrix> {
        let m = self.schedule.num_pulses();
        if k >= m {
            return Err(Error::SegmentOutOfRange {
                index: k,
                segments: m,
            });
        }
        let tau = self.schedule.segments()[k].tau;
        let f = self.free.segment(tau).clone();
        Ok(self.pulses[k].dot(&f))
    }

    /// `U(T_c)^n` via binary powering with a cached ladder.
    pub fn cycle_power(&mut self, n: u64) -> CMatrix {
        self.ensure_prefixes();
        let d = 1usize << self.l;
        if self.ladder.is_empty() {
            self.ladder.push(self.u_cycle.as_ref().unwrap().clone());
        }
        let mut result = identity(d);
        let mut remaining = n;
        let mut bit = 0usize;
        while remaining > 0 {
            while bit >= self.ladder.len() {
                let last = self.ladder.last().unwrap();
                let next = last.dot(last);
                self.ladder.push(next);
            }
            if remaining & 1 == 1 {
                result = self.ladder[bit].dot(&result);
            }
            remaining >>= 1;
            bit += 1;
        }
        result
    }

    /// Exact propagator `U(t)` at an arbitrary time, allowing partial cycles
    /// and partial segments. Pulses at exactly time `t` are included.
    pub fn propagator_at(&mut self, t: f64) -> Result<CMatrix> {
        if t < 0.0 {
            return Err(Error::InvalidSchedule(format!("negative time {t}")));
        }
        self.ensure_prefixes();
        let t_c = self.cycle_time();
        let snap = 1e-9 * t_c;
        let mut n = (t / t_c).floor() as u64;
        let mut rem = t - n as f64 * t_c;
        if rem > t_c - snap {
            n += 1;
            rem = 0.0;
        }
        let mut u = self.cycle_power(n);
        if rem > snap {
            // Full segments completed within the partial cycle.
            let k = self
                .segment_ends
                .iter()
                .take_while(|end| **end <= rem + snap)
                .count();
            let prefixes = self.prefixes.as_ref().unwrap();
            if k > 0 {
                u = prefixes[k].dot(&u);
            }
            let start = if k == 0 { 0.0 } else { self.segment_ends[k - 1] };
            let delta = rem - start;
            if delta > snap && k < self.schedule.num_pulses() {
                let f = self.free.decomposition().propagator(delta);
                u = f.dot(&u);
            }
        }
        Ok(u)
    }

    /// Evolve a state through `n_cycles` cycles, sampling per the policy.
    /// The initial state at `t = 0` is always the first sample.
    pub fn evolve_state(
        &mut self,
        psi0: &CVector,
        n_cycles: usize,
        sampling: Sampling,
    ) -> Result<Vec<(f64, CVector)>> {
        let d = 1usize << self.l;
        if psi0.len() != d {
            return Err(Error::DimensionMismatch {
                left: psi0.len(),
                right: d,
            });
        }
        let t_c = self.cycle_time();
        let mut samples = vec![(0.0, psi0.clone())];
        let mut psi = psi0.clone();
        for cycle in 0..n_cycles {
            let t0 = cycle as f64 * t_c;
            for k in 0..self.schedule.num_pulses() {
                let tau = self.schedule.segments()[k].tau;
                let f = self.free.segment(tau);
                psi = f.dot(&psi);
                psi = self.pulses[k].dot(&psi);
                if sampling == Sampling::PerPulse {
                    samples.push((t0 + self.segment_ends[k], psi.clone()));
                }
            }
            if sampling == Sampling::PerCycle {
                samples.push(((cycle + 1) as f64 * t_c, psi.clone()));
            }
        }
        Ok(samples)
    }
}

/// Convenience wrapper: the one-cycle propagator for a schedule.
pub fn cycle_propagator(h0: &CMatrix, schedule: &PulseSchedule, l: usize) -> Result<CMatrix> {
    let mut sys = PulsedSystem::new(h0, schedule.clone(), l)?;
    Ok(sys.cycle_propagator().clone())
}

/// Convenience wrapper: pulsed state evolution with sampling.
pub fn evolve_pulsed(
    h0: &CMatrix,
    schedule: &PulseSchedule,
    psi0: &CVector,
    n_cycles: usize,
    sampling: Sampling,
) -> Result<Vec<(f64, CVector)>> {
    let mut sys = PulsedSystem::new(h0, schedule.clone(), l_from_dim(psi0.len())?)?;
    sys.evolve_state(psi0, n_cycles, sampling)
}

fn l_from_dim(d: usize) -> Result<usize> {
    if !d.is_power_of_two() || d < 2 {
        return Err(Error::DimensionMismatch { left: d, right: 0 });
    }
    Ok(d.trailing_zeros() as usize)
}
