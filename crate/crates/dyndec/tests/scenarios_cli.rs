//! Integration tests for the scenario runner, config parsing, and the CLI.

use std::fs;
use std::process::Command;

use dyndec::control::{average_hamiltonian_0, coupling_sign_profile, make_sequence, Sampling};
use dyndec::model::{build_hamiltonian, spin_operator, ChainParams};
use dyndec::scenarios::{
    build_preset, list_presets, parse_config, run, Observable, ScenarioConfig, PRESET_NAMES,
};
use dyndec::{max_abs_diff, C64, CMatrix};

fn small_fig1_config() -> ScenarioConfig {
    let mut preset = build_preset("fig1").unwrap();
    let ov = dyndec::scenarios::PresetOverrides {
        l: Some(6),
        total_time: Some(2.0),
        ..Default::default()
    };
    dyndec::scenarios::apply_overrides(&mut preset, &ov).unwrap();
    preset.configs.remove(0)
}

#[test]
fn preset_catalog_is_complete() {
    let presets = list_presets();
    assert_eq!(presets.len(), 8);
    assert_eq!(presets.len(), PRESET_NAMES.len());
    for preset in &presets {
        assert!(!preset.configs.is_empty());
        for config in &preset.configs {
            config.validate().unwrap();
        }
    }
    assert!(build_preset("nope").is_err());
}

#[test]
fn fig1_preset_parameters() {
    let preset = build_preset("fig1").unwrap();
    let config = &preset.configs[0];
    assert_eq!(config.chain.l, 10);
    assert_eq!(config.chain.delta, 0.5);
    assert_eq!(config.chain.alpha, 1.0);
    assert_eq!(config.total_time, 15.0);
    assert_eq!(config.sampling, Sampling::PerCycle);
    assert_eq!(config.observables, vec![Observable::Magnetization]);
    let seq = config.sequence.as_ref().unwrap();
    assert_eq!(seq.intervals(), vec![0.025; 8]);
    let target = config.target.as_ref().unwrap();
    assert_eq!(target.scale, 0.5);
    assert_eq!(target.chain.alpha, 0.0);
}

#[test]
fn runs_are_deterministic() {
    let config = small_fig1_config();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let out_a = run(&config, dir_a.path()).unwrap();
    let out_b = run(&config, dir_b.path()).unwrap();
    assert_eq!(out_a.files.len(), out_b.files.len());
    for (a, b) in out_a.files.iter().zip(out_b.files.iter()) {
        assert_eq!(
            fs::read(a).unwrap(),
            fs::read(b).unwrap(),
            "{} differs between runs",
            a.file_name().unwrap().to_string_lossy()
        );
    }
}

#[test]
fn csv_columns_and_initial_row() {
    let config = small_fig1_config();
    let dir = tempfile::tempdir().unwrap();
    run(&config, dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("fig1_magnetization.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,pulsed,ideal,free");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 4);
    assert_eq!(first[0].parse::<f64>().unwrap(), 0.0);
    // All three curves start at M(0) = L/4 = 1.5.
    for v in &first[1..] {
        assert_eq!(v.parse::<f64>().unwrap(), 1.5);
    }
}

/// The coupling weights echoed in the manifest rebuild the matrix that
/// `average_hamiltonian_0` computes.
#[test]
fn manifest_weights_match_average_hamiltonian() {
    use dyndec::control::BondClass;
    let l = 6;
    let p = ChainParams::clean(l, 1.0, 0.5, 1.0).unwrap();
    let h0 = build_hamiltonian(&p);
    let spec = dyndec::control::SequenceSpec::EightPulse { tau: 0.05 };
    let sched = make_sequence(&spec, l).unwrap();
    let hbar = average_hamiltonian_0(&h0, &sched, l).unwrap();

    let profile = coupling_sign_profile(&sched, l).unwrap();
    let d = 1usize << l;
    let mut rebuilt: CMatrix = ndarray::Array2::zeros((d, d));
    for (row, weight) in profile.average_weights(&sched) {
        let aniso = if row.axis == dyndec::model::Axis::Z {
            p.delta
        } else {
            1.0
        };
        let strength = if row.range == 2 { p.alpha } else { 1.0 };
        for first in 1..=(l - row.range) {
            let in_class = match row.class {
                BondClass::All => true,
                BondClass::OddFirst => first % 2 == 1,
                BondClass::EvenFirst => first % 2 == 0,
            };
            if !in_class {
                continue;
            }
            let a = spin_operator(row.axis, first, l).unwrap();
            let b = spin_operator(row.axis, first + row.range, l).unwrap();
            rebuilt = rebuilt + a.dot(&b) * C64::new(weight * p.j * aniso * strength, 0.0);
        }
    }
    assert!(max_abs_diff(&hbar, &rebuilt) <= 1e-12);
}

#[test]
fn manifest_lists_weights_and_target() {
    let config = small_fig1_config();
    let dir = tempfile::tempdir().unwrap();
    run(&config, dir.path()).unwrap();
    let manifest = fs::read_to_string(dir.path().join("fig1_manifest.txt")).unwrap();
    assert!(manifest.contains("sequence = eight-pulse"));
    assert!(manifest.contains("average_hamiltonian_0 coupling weights:"));
    assert!(manifest.contains("S^x_(2k+1) S^x_(2k+2) = 5.00000000000000e-1"));
    assert!(manifest.contains("S^z_(k+1) S^z_(k+3) = 0.00000000000000e0"));
    assert!(manifest.contains("target = H_NN/2"));
}

#[test]
fn config_file_full_scenario() {
    let text = r#"
label = "custom"
total_time = 1.0
sampling = "per_pulse"
observables = ["magnetization", "fidelity"]

[chain]
l = 4
delta = 0.5
alpha = 1.0

[sequence]
kind = "eight-pulse"
tau = 0.05

[target]
scale = 0.5
label = "half NN"

[target.chain]
l = 4
delta = 0.5
"#;
    let configs = parse_config(text).unwrap();
    assert_eq!(configs.len(), 1);
    let c = &configs[0];
    assert_eq!(c.label, "custom");
    assert_eq!(c.sampling, Sampling::PerPulse);
    assert_eq!(c.observables.len(), 2);
    assert_eq!(c.target.as_ref().unwrap().description, "half NN");
    let dir = tempfile::tempdir().unwrap();
    let out = run(c, dir.path()).unwrap();
    assert_eq!(out.files.len(), 3);
}

#[test]
fn config_file_preset_with_overrides() {
    let text = "preset = \"xy-recovery\"\nl = 6\ntotal_time = 1.0\n";
    let configs = parse_config(text).unwrap();
    assert_eq!(configs.len(), 1);
    assert_eq!(configs[0].chain.l, 6);
    assert_eq!(configs[0].total_time, 1.0);
}

#[test]
fn config_file_rejects_bad_input() {
    assert!(parse_config("nonsense = ").is_err());
    assert!(parse_config("preset = \"unknown\"").is_err());
    // Preset plus explicit sections is ambiguous.
    assert!(parse_config("preset = \"fig1\"\n[chain]\nl = 4\n").is_err());
    // Missing total_time.
    assert!(parse_config("[chain]\nl = 4\n").is_err());
    // Fidelity without a target.
    let text = "total_time = 1.0\nobservables = [\"fidelity\"]\n[chain]\nl = 4\n";
    assert!(parse_config(text).is_err());
    // Disorder and explicit epsilon together.
    let text = r#"
total_time = 1.0
[chain]
l = 4
epsilon = 0.5
[chain.disorder]
center = 0.5
spread = 0.2
seed = 1
"#;
    assert!(parse_config(text).is_err());
}

#[test]
fn disorder_config_is_seeded() {
    let text = r#"
total_time = 1.0
[chain]
l = 4
delta = 0.5
[chain.disorder]
center = 0.5
spread = 0.2
seed = 7
"#;
    let a = parse_config(text).unwrap();
    let b = parse_config(text).unwrap();
    assert_eq!(a[0].chain.epsilon, b[0].chain.epsilon);
    assert!(a[0].chain.is_disordered());
}

// ---------------------------------------------------------------------------
// CLI

fn dyndec_cmd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dyndec"))
}

#[test]
fn cli_verify_passes() {
    let out = dyndec_cmd().arg("verify").output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("all checks passed"));
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn cli_list_names_all_presets() {
    let out = dyndec_cmd().arg("list").output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    for name in PRESET_NAMES {
        assert!(stdout.contains(name), "missing {name}");
    }
}

#[test]
fn cli_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    fs::write(
        &config_path,
        "preset = \"fig1\"\nl = 4\ntotal_time = 1.0\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = dyndec_cmd()
        .arg("run")
        .arg(&config_path)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("fig1_magnetization.csv").exists());
    assert!(out_dir.join("fig1_manifest.txt").exists());
}

#[test]
fn cli_rejects_unknown_preset() {
    let out = dyndec_cmd().args(["preset", "nope"]).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("error"));
}
