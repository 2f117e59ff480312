use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use talbot_lau::cli::parse_csv;
use talbot_lau::config::Config;
use talbot_lau::model::Regime;
use talbot_lau::talbot::sample_series;

const BIN: &str = env!("CARGO_BIN_EXE_talbot-lau");

fn desk_config(extra: &str) -> String {
    format!(
        r#"
[particle]
mass_amu = 1000
static_polarizability_nm3 = 0.1
valence_electrons = 240

[beam]
talbot_ratio = 0.9

[setup]
separation_m = 0.2

[gratings.1]
period_um = 1
open_fraction = 0.4

[gratings.2]
period_um = 1
open_fraction = 0.4

[gratings.3]
period_um = 1
open_fraction = 0.4
{extra}"#
    )
}

const GAS: &str = r#"
[gas]
mass_amu = 40
temperature_k = 300
pressure_mbar = 1e-7
polarizability_nm3 = 1.64
valence_electrons = 8
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn column(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name} in {header:?}"))
}

#[test]
fn pattern_csv_round_trips_library_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "desk.toml", &desk_config(""));
    let csv = dir.path().join("pattern.csv");
    let out = run(&[
        "pattern",
        "--config",
        cfg.to_str().unwrap(),
        "--plane",
        "signal",
        "--points",
        "256",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# talbot-lau "));
    assert!(text.contains("# config_sha256: "));
    assert!(text.contains("# seed: 0"));
    assert!(text.contains("# units: "));
    let (header, rows) = parse_csv(&text).unwrap();
    assert_eq!(rows.len(), 256);

    let config = Config::load(&cfg).unwrap();
    let ifm = config.interferometer().unwrap();
    let fringe = ifm.fringe(config.velocity(), Regime::Quantum).unwrap();
    let pattern = sample_series(&fringe.signal_coeffs, ifm.setup.d1(), 256).unwrap();
    let (xc, sc) = (column(&header, "x"), column(&header, "signal"));
    for (row, (x, s)) in rows.iter().zip(pattern.x.iter().zip(&pattern.values)) {
        let s = s / pattern.mean_level;
        assert!((row[xc] - x).abs() <= 1e-12 * x.abs().max(1e-12));
        assert!(
            (row[sc] - s).abs() <= 1e-12 * s.abs().max(1e-12),
            "{} vs {s}",
            row[sc]
        );
    }
}

#[test]
fn scans_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "gas.toml", &desk_config(GAS));
    let args = [
        "decoherence-scan",
        "--config",
        cfg.to_str().unwrap(),
        "--scan",
        "pressure=0:2e-7:5",
        "--seed",
        "7",
    ];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn decoherence_scan_is_monotone_in_pressure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "gas.toml", &desk_config(GAS));
    let out = run(&[
        "decoherence-scan",
        "--config",
        cfg.to_str().unwrap(),
        "--scan",
        "pressure=0:5e-7:16",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let v = column(&header, "decohered_visibility");
    assert_eq!(rows.len(), 16);
    assert_eq!(rows[0][v], rows[0][column(&header, "quantum_visibility")]);
    for w in rows.windows(2) {
        assert!(w[1][v] <= w[0][v], "{} after {}", w[1][v], w[0][v]);
    }
    assert!(rows[15][v] < 0.5 * rows[0][v]);
}

#[test]
fn resonant_pattern_matches_classical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "res.toml",
        &desk_config("").replace("talbot_ratio = 0.9", "talbot_ratio = 1.0"),
    );
    let get = |regime: &str| {
        let out = run(&[
            "pattern",
            "--config",
            cfg.to_str().unwrap(),
            "--plane",
            "signal",
            "--regime",
            regime,
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        parse_csv(&String::from_utf8(out.stdout).unwrap())
            .unwrap()
            .1
    };
    let (q, c) = (get("quantum"), get("classical"));
    for (a, b) in q.iter().zip(&c) {
        assert!((a[1] - b[1]).abs() < 1e-9, "{} vs {}", a[1], b[1]);
    }
}

#[test]
fn bad_configs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let out = run(&["pattern", "--config", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 2);

    let bad = write(
        dir.path(),
        "bad.toml",
        &desk_config("").replacen("open_fraction = 0.4", "open_fraction = 1.4", 1),
    );
    let out = run(&["pattern", "--config", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("gratings.1"));

    let typo = write(
        dir.path(),
        "typo.toml",
        &desk_config("").replace("separation_m", "separaton_m"),
    );
    assert_eq!(
        code(&run(&["pattern", "--config", typo.to_str().unwrap()])),
        2
    );

    let cfg = write(dir.path(), "ok.toml", &desk_config(""));
    let out = run(&[
        "decoherence-scan",
        "--config",
        cfg.to_str().unwrap(),
        "--scan",
        "pressure=0:1e-7:3",
    ]);
    assert_eq!(code(&out), 2, "decoherence scan without a gas section");
    assert_eq!(code(&run(&["figure-repro"])), 2);
}

#[test]
fn unconverged_oracle_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "tiny.toml",
        &desk_config("\n[oracle]\nslit_window = 4\n"),
    );
    let out = run(&["oracle-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oracle_mismatch_exits_with_code_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "desk.toml", &desk_config(""));
    let path = cfg.to_str().unwrap();
    let ok = run(&[
        "visibility-scan",
        "--config",
        path,
        "--scan",
        "L_over_Ltalbot=0.8:0.9:2",
        "--oracle",
        "--assert-oracle",
        "1e-2",
    ]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let tight = run(&[
        "visibility-scan",
        "--config",
        path,
        "--scan",
        "L_over_Ltalbot=0.8:0.9:2",
        "--oracle",
        "--assert-oracle",
        "1e-12",
    ]);
    assert_eq!(code(&tight), 4);
}

#[test]
fn monte_carlo_oracle_check_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "gas.toml",
        &desk_config(&format!("{GAS}\n[oracle]\nmc_trajectories = 2000\n")),
    );
    let path = cfg.to_str().unwrap();
    let a = run(&["oracle-check", "--config", path, "--seed", "3"]);
    let b = run(&["oracle-check", "--config", path, "--seed", "3"]);
    let c = run(&["oracle-check", "--config", path, "--seed", "4"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}
