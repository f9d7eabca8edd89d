//! Scenario configuration, figure presets, and the batch runner.
//!
//! A scenario pairs a chain with an optional pulse sequence and an optional
//! desired ("wanted") Hamiltonian, runs the dynamics, and writes one CSV per
//! requested observable plus a plain-text manifest. All times are in units
//! of `1/J`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::control::{
    average_hamiltonian_0, coupling_sign_profile, make_sequence, PulsedSystem, Sampling,
    SequenceSpec,
};
use crate::error::{Error, Result};
use crate::evolve::{eigh, EigenDecomposition};
use crate::model::{build_hamiltonian, random_epsilon, ChainParams};
use crate::observables::{domain_wall_state, local_magnetization};
use crate::{adjoint, max_abs_diff, C64, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Magnetization,
    Fidelity,
}

/// The desired Hamiltonian: `scale * H(chain)`.
#[derive(Debug, Clone)]
pub struct TargetSpec {
    pub chain: ChainParams,
    pub scale: f64,
    pub description: String,
}

impl TargetSpec {
    pub fn matrix(&self) -> CMatrix {
        build_hamiltonian(&self.chain) * C64::new(self.scale, 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub label: String,
    pub chain: ChainParams,
    pub sequence: Option<SequenceSpec>,
    pub target: Option<TargetSpec>,
    pub total_time: f64,
    pub sampling: Sampling,
    pub observables: Vec<Observable>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.total_time > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "total_time must be positive, got {}",
                self.total_time
            )));
        }
        if self.observables.is_empty() {
            return Err(Error::InvalidConfig("no observables requested".into()));
        }
        if self.observables.contains(&Observable::Fidelity) && self.target.is_none() {
            return Err(Error::InvalidConfig(
                "fidelity requires a target Hamiltonian".into(),
            ));
        }
        if self.observables.contains(&Observable::Magnetization) && self.chain.l % 2 != 0 {
            return Err(Error::InvalidConfig(
                "magnetization uses the domain-wall state and needs even L".into(),
            ));
        }
        if let Some(t) = &self.target {
            if t.chain.l != self.chain.l {
                return Err(Error::InvalidConfig(
                    "target chain length must match the system".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A named preset: one or more scenario configurations.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub configs: Vec<ScenarioConfig>,
}

pub const PRESET_NAMES: [&str; 8] = [
    "fig1",
    "fig2-left",
    "fig2-right",
    "fig3-left",
    "fig3-middle",
    "fig3-right",
    "gapped-to-gapless",
    "xy-recovery",
];

const DEFAULT_L: usize = 10;

fn half_nn_target(l: usize, delta: f64) -> TargetSpec {
    TargetSpec {
        chain: ChainParams::clean(l, 1.0, delta, 0.0).unwrap(),
        scale: 0.5,
        description: "H_NN/2".into(),
    }
}

fn quarter_nn_target(l: usize) -> TargetSpec {
    TargetSpec {
        chain: ChainParams::clean(l, 1.0, 2.0, 0.0).unwrap(),
        scale: 0.25,
        description: "H_NN/4 with Delta_w = 2".into(),
    }
}

fn dimer_target(l: usize) -> TargetSpec {
    TargetSpec {
        chain: ChainParams::clean(l, 1.0, 1.0, 0.64).unwrap(),
        scale: 1.0 / 6.4,
        description: "(H_NN + 0.64 H_NNN)/6.4".into(),
    }
}

/// Build a preset by name.
pub fn build_preset(name: &str) -> Result<Preset> {
    let l = DEFAULT_L;
    let preset = match name {
        "fig1" => Preset {
            name: "fig1",
            description: "Chaotic H_NN+H_NNN chain under the eight-pulse sequence vs the \
                          integrable H_NN/2 chain; local magnetization from the domain wall \
                          (Delta = 1/2, L = 10, tau = 0.025/J)",
            configs: vec![ScenarioConfig {
                label: "fig1".into(),
                chain: ChainParams::clean(l, 1.0, 0.5, 1.0)?,
                sequence: Some(SequenceSpec::EightPulse { tau: 0.025 }),
                target: Some(half_nn_target(l, 0.5)),
                total_time: 15.0,
                sampling: Sampling::PerCycle,
                observables: vec![Observable::Magnetization],
            }],
        },
        "fig2-left" => Preset {
            name: "fig2-left",
            description: "Gapless H_NN chain (Delta = 1/2) under the two z-pulse sequence \
                          (tau1 = 0.1, tau2 = 0.06) vs the gapped H_NN/4 chain with Delta_w = 2",
            configs: vec![ScenarioConfig {
                label: "fig2-left".into(),
                chain: ChainParams::clean(l, 1.0, 0.5, 0.0)?,
                sequence: Some(SequenceSpec::ZTwoPulse {
                    tau1: 0.1,
                    tau2: 0.06,
                }),
                target: Some(quarter_nn_target(l)),
                total_time: 15.0,
                sampling: Sampling::PerCycle,
                observables: vec![Observable::Magnetization],
            }],
        },
        "fig2-right" => Preset {
            name: "fig2-right",
            description: "Weakly frustrated chain (alpha = 0.1, Delta = 1) under the four-pulse \
                          sequence with tau1 = 0.05 vs the dimerized (H_NN + 0.64 H_NNN)/6.4",
            configs: vec![ScenarioConfig {
                label: "fig2-right".into(),
                chain: ChainParams::clean(l, 1.0, 1.0, 0.1)?,
                sequence: Some(SequenceSpec::fluid_to_dimer(0.05, 0.1, 0.64)?),
                target: Some(dimer_target(l)),
                total_time: 15.0,
                sampling: Sampling::PerCycle,
                observables: vec![Observable::Magnetization],
            }],
        },
        "fig3-left" => Preset {
            name: "fig3-left",
            description: "Propagator fidelity of the eight-pulse sequence vs H_NN/2 for \
                          tau = 0.025, 0.05, 0.075, 0.1 (1/J)",
            configs: [0.025, 0.05, 0.075, 0.1]
                .iter()
                .map(|&tau| ScenarioConfig {
                    label: format!("fig3-left-tau{tau}"),
                    chain: ChainParams::clean(l, 1.0, 0.5, 1.0).unwrap(),
                    sequence: Some(SequenceSpec::EightPulse { tau }),
                    target: Some(half_nn_target(l, 0.5)),
                    total_time: 10.0,
                    sampling: Sampling::PerCycle,
                    observables: vec![Observable::Fidelity],
                })
                .collect(),
        },
        "fig3-middle" => Preset {
            name: "fig3-middle",
            description: "Propagator fidelity of the two z-pulse sequence vs H_NN/4 with \
                          Delta_w = 2 for (tau1, tau2) = (0.1, 0.06) ... (0.4, 0.24)",
            configs: [(0.1, 0.06), (0.2, 0.12), (0.3, 0.18), (0.4, 0.24)]
                .iter()
                .map(|&(tau1, tau2)| ScenarioConfig {
                    label: format!("fig3-middle-tau1_{tau1}"),
                    chain: ChainParams::clean(l, 1.0, 0.5, 0.0).unwrap(),
                    sequence: Some(SequenceSpec::ZTwoPulse { tau1, tau2 }),
                    target: Some(quarter_nn_target(l)),
                    total_time: 10.0,
                    sampling: Sampling::PerCycle,
                    observables: vec![Observable::Fidelity],
                })
                .collect(),
        },
        "fig3-right" => Preset {
            name: "fig3-right",
            description: "Propagator fidelity of the four-pulse sequence vs \
                          (H_NN + 0.64 H_NNN)/6.4 for tau1 = 0.025, 0.05, 0.075, 0.1",
            configs: [0.025, 0.05, 0.075, 0.1]
                .iter()
                .map(|&tau1| ScenarioConfig {
                    label: format!("fig3-right-tau1_{tau1}"),
                    chain: ChainParams::clean(l, 1.0, 1.0, 0.1).unwrap(),
                    sequence: Some(SequenceSpec::fluid_to_dimer(tau1, 0.1, 0.64).unwrap()),
                    target: Some(dimer_target(l)),
                    total_time: 10.0,
                    sampling: Sampling::PerCycle,
                    observables: vec![Observable::Fidelity],
                })
                .collect(),
        },
        "gapped-to-gapless" => {
            // Delta (tau1 + tau3 - 2 tau2) < (tau1 - tau3): the reshaped
            // chain sits in the gapless phase.
            let (tau1, tau2, tau3) = (0.1, 0.05, 0.02);
            let t_c = tau1 + 2.0 * tau2 + tau3;
            let ff = (tau1 - tau3) / t_c;
            let delta_eff = 2.0 * (tau1 + tau3 - 2.0 * tau2) / (tau1 - tau3);
            Preset {
                name: "gapped-to-gapless",
                description: "Gapped H_NN chain (Delta = 2) under the four-pulse sequence with \
                              unequal intervals, reshaped into an effective gapless chain",
                configs: vec![ScenarioConfig {
                    label: "gapped-to-gapless".into(),
                    chain: ChainParams::clean(l, 1.0, 2.0, 0.0)?,
                    sequence: Some(SequenceSpec::FourPulseGapless { tau1, tau2, tau3 }),
                    target: Some(TargetSpec {
                        chain: ChainParams::clean(l, 1.0, delta_eff, 0.0)?,
                        scale: ff,
                        description: format!(
                            "{ff:.6} * H_NN with effective Delta = {delta_eff:.6}"
                        ),
                    }),
                    total_time: 15.0,
                    sampling: Sampling::PerCycle,
                    observables: vec![Observable::Magnetization, Observable::Fidelity],
                }],
            }
        }
        "xy-recovery" => {
            // tau1 + tau3 = 2 tau2 cancels the Ising weight: the gapped
            // chain evolves as a rescaled XY model.
            let (tau1, tau3) = (0.025, 0.0125);
            let tau2 = 0.5 * (tau1 + tau3);
            let t_c = tau1 + 2.0 * tau2 + tau3;
            let ff = (tau1 - tau3) / t_c;
            Preset {
                name: "xy-recovery",
                description: "Gapped H_NN chain (Delta = 2) under the four-pulse sequence with \
                              tau1 + tau3 = 2 tau2: the Ising weight vanishes and the dynamics \
                              follows a rescaled XY chain",
                configs: vec![ScenarioConfig {
                    label: "xy-recovery".into(),
                    chain: ChainParams::clean(l, 1.0, 2.0, 0.0)?,
                    sequence: Some(SequenceSpec::FourPulseGapless { tau1, tau2, tau3 }),
                    target: Some(TargetSpec {
                        chain: ChainParams::clean(l, 1.0, 0.0, 0.0)?,
                        scale: ff,
                        description: format!("{ff:.6} * H_XY"),
                    }),
                    total_time: 10.0,
                    sampling: Sampling::PerCycle,
                    observables: vec![Observable::Magnetization, Observable::Fidelity],
                }],
            }
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(preset)
}

/// The full preset catalog.
pub fn list_presets() -> Vec<Preset> {
    PRESET_NAMES
        .iter()
        .map(|name| build_preset(name).expect("preset catalog is static"))
        .collect()
}

/// Optional overrides applied on top of a preset.
#[derive(Debug, Clone, Default)]
pub struct PresetOverrides {
    /// Rescales every interval so the first one equals `tau` (interval
    /// ratios are preserved).
    pub tau: Option<f64>,
    pub l: Option<usize>,
    pub total_time: Option<f64>,
    pub sampling: Option<Sampling>,
}

pub fn apply_overrides(preset: &mut Preset, ov: &PresetOverrides) -> Result<()> {
    for config in &mut preset.configs {
        if let Some(l) = ov.l {
            config.chain = ChainParams::new(
                l,
                config.chain.j,
                config.chain.delta,
                config.chain.alpha,
                vec![0.0; l],
            )?;
            if let Some(target) = &mut config.target {
                target.chain = ChainParams::new(
                    l,
                    target.chain.j,
                    target.chain.delta,
                    target.chain.alpha,
                    vec![0.0; l],
                )?;
            }
        }
        if let Some(tau) = ov.tau {
            if let Some(seq) = &mut config.sequence {
                let first = seq.intervals()[0];
                if !(tau > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "tau override must be positive, got {tau}"
                    )));
                }
                *seq = seq.scaled(tau / first);
                config.label = format!("{}-tau{tau}", preset.name);
            }
        }
        if let Some(t) = ov.total_time {
            config.total_time = t;
        }
        if let Some(s) = ov.sampling {
            config.sampling = s;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Runner

/// Output of one scenario run.
#[derive(Debug)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
}

fn fmt15(x: f64) -> String {
    format!("{x:.14e}")
}

/// Sampling instants for a pulsed run, `t = 0` included.
fn sample_times(sys: &PulsedSystem, total_time: f64, sampling: Sampling) -> Vec<f64> {
    let t_c = sys.cycle_time();
    let n_cycles = ((total_time / t_c) + 1e-9).floor() as usize;
    let mut times = vec![0.0];
    match sampling {
        Sampling::PerCycle => {
            for n in 1..=n_cycles {
                times.push(n as f64 * t_c);
            }
        }
        Sampling::PerPulse => {
            let ends: Vec<f64> = {
                let mut acc = 0.0;
                sys.schedule()
                    .segments()
                    .iter()
                    .map(|s| {
                        acc += s.tau;
                        acc
                    })
                    .collect()
            };
            for n in 0..n_cycles {
                for e in &ends {
                    times.push(n as f64 * t_c + e);
                }
            }
        }
    }
    times
}

/// Free-evolution magnetization curve at the given times.
fn free_magnetization(eig: &EigenDecomposition, l: usize, times: &[f64]) -> Result<Vec<f64>> {
    let psi0 = domain_wall_state(l)?;
    times
        .iter()
        .map(|t| local_magnetization(&eig.evolve_state(&psi0, *t), l))
        .collect()
}

/// Fidelity of the pulsed propagator against the target, evaluated in the
/// target eigenbasis so each sample costs one matrix product.
fn pulsed_fidelity_series(
    sys: &mut PulsedSystem,
    target_eig: &EigenDecomposition,
    total_time: f64,
    sampling: Sampling,
) -> Result<Vec<(f64, f64)>> {
    let d = target_eig.vectors.nrows();
    let v = &target_eig.vectors;
    let vh = adjoint(v);
    let times = sample_times(sys, total_time, sampling);
    let fidelity_at = |t: f64, u_tilde: &CMatrix| -> f64 {
        let trace: C64 = (0..d)
            .map(|k| C64::from_polar(1.0, target_eig.values[k] * t) * u_tilde[(k, k)])
            .sum();
        trace.norm() / d as f64
    };
    let mut out = Vec::with_capacity(times.len());
    match sampling {
        Sampling::PerCycle => {
            let g = vh.dot(sys.cycle_propagator()).dot(v);
            let mut u_tilde = crate::identity(d);
            for (n, t) in times.iter().enumerate() {
                if n > 0 {
                    u_tilde = g.dot(&u_tilde);
                }
                out.push((*t, fidelity_at(*t, &u_tilde)));
            }
        }
        Sampling::PerPulse => {
            // One transformed step matrix per segment: G_k = V† P_k F_k V.
            let m = sys.schedule().num_pulses();
            let mut steps = Vec::with_capacity(m);
            for k in 0..m {
                let seg = sys.segment_step(k)?;
                steps.push(vh.dot(&seg).dot(v));
            }
            let mut u_tilde = crate::identity(d);
            let mut k = 0usize;
            for (n, t) in times.iter().enumerate() {
                if n > 0 {
                    u_tilde = steps[k % m].dot(&u_tilde);
                    k += 1;
                }
                out.push((*t, fidelity_at(*t, &u_tilde)));
            }
        }
    }
    Ok(out)
}

/// Fidelity of the free (unpulsed) propagator against the target.
fn free_fidelity_series(
    target_eig: &EigenDecomposition,
    free_eig: &EigenDecomposition,
    times: &[f64],
) -> Vec<f64> {
    let d = target_eig.vectors.nrows();
    let b = adjoint(&target_eig.vectors).dot(&free_eig.vectors);
    let w = b.mapv(|z| z.norm_sqr());
    times
        .iter()
        .map(|t| {
            // |sum_{k,j} W_kj e^{i(lambda_w_k - lambda_0_j) t}| / D
            let col_phases: Vec<C64> = free_eig
                .values
                .iter()
                .map(|lam| C64::from_polar(1.0, -lam * t))
                .collect();
            let mut trace = C64::ZERO;
            for k in 0..d {
                let mut row_sum = C64::ZERO;
                for j in 0..d {
                    row_sum += col_phases[j] * w[(k, j)];
                }
                trace += C64::from_polar(1.0, target_eig.values[k] * t) * row_sum;
            }
            trace.norm() / d as f64
        })
        .collect()
}

/// Run one scenario and write its CSVs and manifest under `out_dir`.
pub fn run(config: &ScenarioConfig, out_dir: &Path) -> Result<RunOutput> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();

    let h0 = build_hamiltonian(&config.chain);
    let l = config.chain.l;
    let free_eig = eigh(&h0)?;
    let target_eig = config
        .target
        .as_ref()
        .map(|t| eigh(&t.matrix()))
        .transpose()?;

    let mut sys = config
        .sequence
        .as_ref()
        .map(|spec| {
            let schedule = make_sequence(spec, l)?;
            PulsedSystem::new(&h0, schedule, l)
        })
        .transpose()?;

    for obs in &config.observables {
        match obs {
            Observable::Magnetization => {
                let path = out_dir.join(format!("{}_magnetization.csv", config.label));
                let mut csv = String::new();
                match &mut sys {
                    Some(sys) => {
                        let t_c = sys.cycle_time();
                        let n_cycles = ((config.total_time / t_c) + 1e-9).floor() as usize;
                        let psi0 = domain_wall_state(l)?;
                        let samples = sys.evolve_state(&psi0, n_cycles, config.sampling)?;
                        let times: Vec<f64> = samples.iter().map(|(t, _)| *t).collect();
                        let ideal = target_eig
                            .as_ref()
                            .map(|eig| free_magnetization(eig, l, &times))
                            .transpose()?;
                        let free = free_magnetization(&free_eig, l, &times)?;
                        match &ideal {
                            Some(_) => csv.push_str("t,pulsed,ideal,free\n"),
                            None => csv.push_str("t,pulsed,free\n"),
                        }
                        for (n, (t, psi)) in samples.iter().enumerate() {
                            let m = local_magnetization(psi, l)?;
                            let mut line = format!("{},{}", fmt15(*t), fmt15(m));
                            if let Some(ideal) = &ideal {
                                let _ = write!(line, ",{}", fmt15(ideal[n]));
                            }
                            let _ = write!(line, ",{}", fmt15(free[n]));
                            csv.push_str(&line);
                            csv.push('\n');
                        }
                    }
                    None => {
                        // Unpulsed run: a single free-evolution curve on a
                        // uniform grid.
                        let steps = 300usize;
                        let times: Vec<f64> = (0..=steps)
                            .map(|n| config.total_time * n as f64 / steps as f64)
                            .collect();
                        let free = free_magnetization(&free_eig, l, &times)?;
                        csv.push_str("t,value\n");
                        for (t, m) in times.iter().zip(free.iter()) {
                            csv.push_str(&format!("{},{}\n", fmt15(*t), fmt15(*m)));
                        }
                    }
                }
                fs::write(&path, csv)?;
                files.push(path);
            }
            Observable::Fidelity => {
                let target_eig = target_eig.as_ref().expect("validated");
                let path = out_dir.join(format!("{}_fidelity.csv", config.label));
                let mut csv = String::new();
                match &mut sys {
                    Some(sys) => {
                        let pulsed = pulsed_fidelity_series(
                            sys,
                            target_eig,
                            config.total_time,
                            config.sampling,
                        )?;
                        let times: Vec<f64> = pulsed.iter().map(|(t, _)| *t).collect();
                        let free = free_fidelity_series(target_eig, &free_eig, &times);
                        csv.push_str("t,pulsed,free\n");
                        for ((t, f), fr) in pulsed.iter().zip(free.iter()) {
                            csv.push_str(&format!("{},{},{}\n", fmt15(*t), fmt15(*f), fmt15(*fr)));
                        }
                    }
                    None => {
                        let steps = 300usize;
                        let times: Vec<f64> = (0..=steps)
                            .map(|n| config.total_time * n as f64 / steps as f64)
                            .collect();
                        let free = free_fidelity_series(target_eig, &free_eig, &times);
                        csv.push_str("t,value\n");
                        for (t, f) in times.iter().zip(free.iter()) {
                            csv.push_str(&format!("{},{}\n", fmt15(*t), fmt15(*f)));
                        }
                    }
                }
                fs::write(&path, csv)?;
                files.push(path);
            }
        }
    }

    let manifest_path = out_dir.join(format!("{}_manifest.txt", config.label));
    fs::write(&manifest_path, manifest_text(config)?)?;
    files.push(manifest_path);
    Ok(RunOutput { files })
}

/// Run every configuration of a preset.
pub fn run_preset(preset: &Preset, out_dir: &Path) -> Result<Vec<RunOutput>> {
    preset.configs.iter().map(|c| run(c, out_dir)).collect()
}

/// Human-readable run manifest echoing all parameters and the zeroth-order
/// average-Hamiltonian coupling weights.
pub fn manifest_text(config: &ScenarioConfig) -> Result<String> {
    let mut out = String::new();
    let c = &config.chain;
    let _ = writeln!(out, "label = {}", config.label);
    let _ = writeln!(out, "L = {}", c.l);
    let _ = writeln!(out, "J = {}", fmt15(c.j));
    let _ = writeln!(out, "delta = {}", fmt15(c.delta));
    let _ = writeln!(out, "alpha = {}", fmt15(c.alpha));
    let eps: Vec<String> = c.epsilon.iter().map(|e| fmt15(*e)).collect();
    let _ = writeln!(out, "epsilon = [{}]", eps.join(", "));
    let _ = writeln!(out, "total_time = {}", fmt15(config.total_time));
    let _ = writeln!(
        out,
        "sampling = {}",
        match config.sampling {
            Sampling::PerCycle => "per_cycle",
            Sampling::PerPulse => "per_pulse",
        }
    );
    let obs: Vec<&str> = config
        .observables
        .iter()
        .map(|o| match o {
            Observable::Magnetization => "magnetization",
            Observable::Fidelity => "fidelity",
        })
        .collect();
    let _ = writeln!(out, "observables = [{}]", obs.join(", "));
    match &config.sequence {
        Some(spec) => {
            let schedule = make_sequence(spec, c.l)?;
            let _ = writeln!(out, "sequence = {}", spec.name());
            let ivals: Vec<String> = spec.intervals().iter().map(|t| fmt15(*t)).collect();
            let _ = writeln!(out, "intervals = [{}]", ivals.join(", "));
            let _ = writeln!(out, "cycle_time = {}", fmt15(schedule.cycle_time()));
            let _ = writeln!(out, "pulses_per_cycle = {}", schedule.num_pulses());
            let profile = coupling_sign_profile(&schedule, c.l)?;
            let _ = writeln!(out, "average_hamiltonian_0 coupling weights:");
            for (row, weight) in profile.average_weights(&schedule) {
                let _ = writeln!(
                    out,
                    "  {} = {}",
                    row.class.label(row.axis, row.range),
                    fmt15(weight)
                );
            }
        }
        None => {
            let _ = writeln!(out, "sequence = none");
        }
    }
    if let Some(t) = &config.target {
        let _ = writeln!(out, "target = {}", t.description);
        let _ = writeln!(
            out,
            "target_params: L = {}, delta = {}, alpha = {}, scale = {}",
            t.chain.l,
            fmt15(t.chain.delta),
            fmt15(t.chain.alpha),
            fmt15(t.scale)
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Config files

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    label: Option<String>,
    tau: Option<f64>,
    l: Option<usize>,
    total_time: Option<f64>,
    sampling: Option<String>,
    observables: Option<Vec<String>>,
    chain: Option<RawChain>,
    sequence: Option<RawSequence>,
    target: Option<RawTarget>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChain {
    l: usize,
    #[serde(default = "default_j")]
    j: f64,
    #[serde(default)]
    delta: f64,
    #[serde(default)]
    alpha: f64,
    epsilon: Option<EpsilonSpec>,
    disorder: Option<RawDisorder>,
}

fn default_j() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum EpsilonSpec {
    Uniform(f64),
    PerSite(Vec<f64>),
}

/// Seeded uniform disorder in `[center - spread, center + spread]`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDisorder {
    center: f64,
    spread: f64,
    seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSequence {
    kind: String,
    tau: Option<f64>,
    tau1: Option<f64>,
    tau2: Option<f64>,
    tau3: Option<f64>,
    tau_a: Option<f64>,
    /// For `fluid-to-dimer`: derive `tau_a` from the target frustration
    /// ratio instead of giving it directly.
    alpha_w: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    #[serde(default = "default_scale")]
    scale: f64,
    label: Option<String>,
    chain: RawChain,
}

fn default_scale() -> f64 {
    1.0
}

fn chain_from_raw(raw: &RawChain) -> Result<ChainParams> {
    let epsilon = match (&raw.epsilon, &raw.disorder) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidConfig(
                "give either `epsilon` or `disorder`, not both".into(),
            ))
        }
        (Some(EpsilonSpec::Uniform(e)), None) => vec![*e; raw.l],
        (Some(EpsilonSpec::PerSite(v)), None) => v.clone(),
        (None, Some(d)) => random_epsilon(raw.l, d.center, d.spread, d.seed),
        (None, None) => vec![0.0; raw.l],
    };
    ChainParams::new(raw.l, raw.j, raw.delta, raw.alpha, epsilon)
}

fn require(value: Option<f64>, kind: &str, key: &str) -> Result<f64> {
    value.ok_or_else(|| Error::InvalidConfig(format!("sequence `{kind}` needs `{key}`")))
}

fn sequence_from_raw(raw: &RawSequence, chain: &ChainParams) -> Result<SequenceSpec> {
    let kind = raw.kind.as_str();
    let spec = match kind {
        "global-pi-x" => SequenceSpec::GlobalPiX {
            tau: require(raw.tau, kind, "tau")?,
        },
        "eight-pulse" => SequenceSpec::EightPulse {
            tau: require(raw.tau, kind, "tau")?,
        },
        "four-pulse" => SequenceSpec::FourPulse {
            tau: require(raw.tau, kind, "tau")?,
        },
        "z-two-pulse" => SequenceSpec::ZTwoPulse {
            tau1: require(raw.tau1, kind, "tau1")?,
            tau2: require(raw.tau2, kind, "tau2")?,
        },
        "four-pulse-gapless" => SequenceSpec::FourPulseGapless {
            tau1: require(raw.tau1, kind, "tau1")?,
            tau2: require(raw.tau2, kind, "tau2")?,
            tau3: require(raw.tau3, kind, "tau3")?,
        },
        "fluid-to-dimer" => {
            let tau1 = require(raw.tau1, kind, "tau1")?;
            match (raw.tau_a, raw.alpha_w) {
                (Some(tau_a), None) => SequenceSpec::FluidToDimer { tau1, tau_a },
                (None, Some(alpha_w)) => {
                    SequenceSpec::fluid_to_dimer(tau1, chain.alpha, alpha_w)?
                }
                _ => {
                    return Err(Error::InvalidConfig(
                        "fluid-to-dimer needs exactly one of `tau_a` or `alpha_w`".into(),
                    ))
                }
            }
        }
        "z-nnn-flip-flop" => SequenceSpec::ZNnnFlipFlop {
            tau: require(raw.tau, kind, "tau")?,
        },
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown sequence kind `{other}`"
            )))
        }
    };
    Ok(spec)
}

fn sampling_from_str(s: &str) -> Result<Sampling> {
    match s {
        "per_cycle" => Ok(Sampling::PerCycle),
        "per_pulse" => Ok(Sampling::PerPulse),
        other => Err(Error::InvalidConfig(format!(
            "sampling must be per_cycle or per_pulse, got `{other}`"
        ))),
    }
}

fn observables_from_strs(v: &[String]) -> Result<Vec<Observable>> {
    v.iter()
        .map(|s| match s.as_str() {
            "magnetization" => Ok(Observable::Magnetization),
            "fidelity" => Ok(Observable::Fidelity),
            other => Err(Error::InvalidConfig(format!(
                "unknown observable `{other}`"
            ))),
        })
        .collect()
}

/// Parse a TOML scenario file into runnable configurations.
///
/// The file either names a `preset` (with optional `tau`, `l`, `total_time`,
/// `sampling` overrides) or gives a full `[chain]` / `[sequence]` /
/// `[target]` description.
pub fn parse_config(text: &str) -> Result<Vec<ScenarioConfig>> {
    let raw: RawConfig = toml::from_str(text)
        .map_err(|e| Error::InvalidConfig(format!("TOML parse error: {e}")))?;
    if let Some(name) = &raw.preset {
        if raw.chain.is_some() || raw.sequence.is_some() || raw.target.is_some() {
            return Err(Error::InvalidConfig(
                "a preset cannot be combined with chain/sequence/target sections".into(),
            ));
        }
        let mut preset = build_preset(name)?;
        let ov = PresetOverrides {
            tau: raw.tau,
            l: raw.l,
            total_time: raw.total_time,
            sampling: raw.sampling.as_deref().map(sampling_from_str).transpose()?,
        };
        apply_overrides(&mut preset, &ov)?;
        if let Some(label) = raw.label {
            let single = preset.configs.len() == 1;
            for (n, config) in preset.configs.iter_mut().enumerate() {
                config.label = if single {
                    label.clone()
                } else {
                    format!("{label}-{n}")
                };
            }
        }
        return Ok(preset.configs);
    }

    let chain_raw = raw
        .chain
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("missing [chain] section".into()))?;
    let chain = chain_from_raw(chain_raw)?;
    let sequence = raw
        .sequence
        .as_ref()
        .map(|s| sequence_from_raw(s, &chain))
        .transpose()?;
    let target = raw
        .target
        .as_ref()
        .map(|t| -> Result<TargetSpec> {
            let tchain = chain_from_raw(&t.chain)?;
            Ok(TargetSpec {
                description: t
                    .label
                    .clone()
                    .unwrap_or_else(|| format!("{} * H(target chain)", t.scale)),
                chain: tchain,
                scale: t.scale,
            })
        })
        .transpose()?;
    let config = ScenarioConfig {
        label: raw.label.unwrap_or_else(|| "run".into()),
        chain,
        sequence,
        target,
        total_time: raw
            .total_time
            .ok_or_else(|| Error::InvalidConfig("missing total_time".into()))?,
        sampling: raw
            .sampling
            .as_deref()
            .map(sampling_from_str)
            .transpose()?
            .unwrap_or(Sampling::PerCycle),
        observables: raw
            .observables
            .as_deref()
            .map(observables_from_strs)
            .transpose()?
            .unwrap_or_else(|| vec![Observable::Magnetization]),
    };
    config.validate()?;
    Ok(vec![config])
}

// ---------------------------------------------------------------------------
// Verification gate

/// Run the sign-table and average-Hamiltonian identity checks, printing one
/// line per check. Returns false if any check fails.
pub fn verify() -> bool {
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool| {
        println!("{}: {}", name, if ok { "PASS" } else { "FAIL" });
        all_ok &= ok;
    };

    check(
        "eight-pulse sign table",
        verify_eight_pulse_table().unwrap_or(false),
    );
    check(
        "four-pulse sign table",
        verify_four_pulse_table().unwrap_or(false),
    );

    let identities = [
        "global-pi-x removes disorder",
        "eight-pulse halves H_NN",
        "four-pulse isolates H_NNN",
        "z-two-pulse rescales flip-flop",
        "four-pulse-gapless reshapes XXZ",
        "fluid-to-dimer rescales H_NN",
    ];
    let results = verify_average_identities(6).unwrap_or([false; 6]);
    for (name, ok) in identities.iter().zip(results) {
        check(name, ok);
    }
    all_ok
}

/// The eight-pulse sign table: NN rows (x/y/z, odd- then even-first bonds)
/// followed by NNN rows (x/y/z), eight segments each.
pub const EIGHT_PULSE_SIGN_TABLE: [(crate::model::Axis, usize, [i8; 8]); 9] = {
    use crate::model::Axis::*;
    [
        (X, 1, [1, 1, 1, 1, 1, 1, -1, -1]), // odd-first NN
        (X, 1, [1, 1, -1, -1, 1, 1, 1, 1]), // even-first NN
        (Y, 1, [1, 1, 1, 1, 1, -1, -1, 1]),
        (Y, 1, [1, -1, -1, 1, 1, 1, 1, 1]),
        (Z, 1, [1, 1, 1, 1, 1, -1, 1, -1]),
        (Z, 1, [1, -1, 1, -1, 1, 1, 1, 1]),
        (X, 2, [1, 1, -1, -1, 1, 1, -1, -1]),
        (Y, 2, [1, -1, -1, 1, 1, -1, -1, 1]),
        (Z, 2, [1, -1, 1, -1, 1, -1, 1, -1]),
    ]
};

/// The four-pulse sign table: NN rows carry alternating signs, NNN rows are
/// untouched.
pub const FOUR_PULSE_SIGN_TABLE: [(crate::model::Axis, usize, [i8; 4]); 6] = {
    use crate::model::Axis::*;
    [
        (X, 1, [1, -1, -1, 1]),
        (Y, 1, [1, 1, -1, -1]),
        (Z, 1, [1, -1, 1, -1]),
        (X, 2, [1, 1, 1, 1]),
        (Y, 2, [1, 1, 1, 1]),
        (Z, 2, [1, 1, 1, 1]),
    ]
};

fn verify_eight_pulse_table() -> Result<bool> {
    use crate::control::BondClass;
    let l = 10;
    let sched = make_sequence(&SequenceSpec::EightPulse { tau: 0.05 }, l)?;
    let profile = coupling_sign_profile(&sched, l)?;
    // NN rows alternate odd/even per axis; NNN rows hold for all bonds.
    for (n, (axis, range, signs)) in EIGHT_PULSE_SIGN_TABLE.iter().enumerate() {
        let class = if *range == 1 {
            if n % 2 == 0 {
                BondClass::OddFirst
            } else {
                BondClass::EvenFirst
            }
        } else {
            BondClass::All
        };
        let Some(row) = profile.row(*axis, *range, class) else {
            return Ok(false);
        };
        if row.signs != signs.to_vec() {
            return Ok(false);
        }
    }
    Ok(true)
}

fn verify_four_pulse_table() -> Result<bool> {
    use crate::control::BondClass;
    let l = 10;
    let sched = make_sequence(&SequenceSpec::FourPulse { tau: 0.05 }, l)?;
    let profile = coupling_sign_profile(&sched, l)?;
    for (axis, range, signs) in FOUR_PULSE_SIGN_TABLE.iter() {
        let Some(row) = profile.row(*axis, *range, BondClass::All) else {
            return Ok(false);
        };
        if row.signs != signs.to_vec() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Check the six zeroth-order average-Hamiltonian identities at chain
/// length `l`, each as a matrix equality within 1e-12.
pub fn verify_average_identities(l: usize) -> Result<[bool; 6]> {
    use crate::model::{bond_sum, h_nn, h_nnn, Axis};
    let tol = 1e-12;
    let mut results = [false; 6];

    // Global pi-x on a disordered chain: Hbar = H_NN.
    {
        let eps = random_epsilon(l, 0.5, 0.3, 17);
        let p = ChainParams::new(l, 1.0, 0.5, 0.0, eps)?;
        let h0 = build_hamiltonian(&p);
        let sched = make_sequence(&SequenceSpec::GlobalPiX { tau: 0.1 }, l)?;
        let hbar = average_hamiltonian_0(&h0, &sched, l)?;
        results[0] = max_abs_diff(&hbar, &h_nn(&p)) <= tol;
    }
    // Eight-pulse on H_NN + H_NNN: Hbar = H_NN / 2.
    {
        let p = ChainParams::clean(l, 1.0, 0.5, 1.0)?;
        let h0 = build_hamiltonian(&p);
        let sched = make_sequence(&SequenceSpec::EightPulse { tau: 0.05 }, l)?;
        let hbar = average_hamiltonian_0(&h0, &sched, l)?;
        results[1] = max_abs_diff(&hbar, &(h_nn(&p) * C64::new(0.5, 0.0))) <= tol;
    }
    // Four-pulse on H_NN + H_NNN: Hbar = H_NNN.
    {
        let p = ChainParams::clean(l, 1.0, 0.5, 1.0)?;
        let h0 = build_hamiltonian(&p);
        let sched = make_sequence(&SequenceSpec::FourPulse { tau: 0.05 }, l)?;
        let hbar = average_hamiltonian_0(&h0, &sched, l)?;
        results[2] = max_abs_diff(&hbar, &h_nnn(&p)) <= tol;
    }
    // Z two-pulse on H_NN: flip-flop rescaled by (tau1 - tau2)/T_c.
    {
        let (tau1, tau2) = (0.1, 0.06);
        let p = ChainParams::clean(l, 1.0, 0.5, 0.0)?;
        let h0 = build_hamiltonian(&p);
        let sched = make_sequence(&SequenceSpec::ZTwoPulse { tau1, tau2 }, l)?;
        let hbar = average_hamiltonian_0(&h0, &sched, l)?;
        let w = (tau1 - tau2) / (tau1 + tau2);
        let want = (bond_sum(Axis::X, 1, l) + bond_sum(Axis::Y, 1, l)) * C64::new(w, 0.0)
            + bond_sum(Axis::Z, 1, l) * C64::new(p.delta, 0.0);
        results[3] = max_abs_diff(&hbar, &want) <= tol;
    }
    // Four-pulse-gapless on H_NN.
    {
        let (tau1, tau2, tau3) = (0.1, 0.05, 0.02);
        let t_c = tau1 + 2.0 * tau2 + tau3;
        let p = ChainParams::clean(l, 1.0, 2.0, 0.0)?;
        let h0 = build_hamiltonian(&p);
        let sched = make_sequence(&SequenceSpec::FourPulseGapless { tau1, tau2, tau3 }, l)?;
        let hbar = average_hamiltonian_0(&h0, &sched, l)?;
        let ff = (tau1 - tau3) / t_c;
        let ising = p.delta * (tau1 + tau3 - 2.0 * tau2) / t_c;
        let want = (bond_sum(Axis::X, 1, l) + bond_sum(Axis::Y, 1, l)) * C64::new(ff, 0.0)
            + bond_sum(Axis::Z, 1, l) * C64::new(ising, 0.0);
        results[4] = max_abs_diff(&hbar, &want) <= tol;
    }
    // Fluid-to-dimer on H_NN + alpha H_NNN.
    {
        let (tau1, alpha) = (0.05, 0.1);
        let spec = SequenceSpec::fluid_to_dimer(tau1, alpha, 0.64)?;
        let SequenceSpec::FluidToDimer { tau_a, .. } = spec else {
            unreachable!()
        };
        let t_c = tau1 + 3.0 * tau_a;
        let p = ChainParams::clean(l, 1.0, 1.0, alpha)?;
        let h0 = build_hamiltonian(&p);
        let sched = make_sequence(&spec, l)?;
        let hbar = average_hamiltonian_0(&h0, &sched, l)?;
        let want = h_nn(&p) * C64::new((tau1 - tau_a) / t_c, 0.0)
            + h_nnn(&p) * C64::new(alpha, 0.0);
        results[5] = max_abs_diff(&hbar, &want) <= tol;
    }
    Ok(results)
}
