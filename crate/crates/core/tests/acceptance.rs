//! One PASS/FAIL line per headline criterion. Runs without the libtest
//! harness so the lines always reach the terminal.
//!
//! The process fails only if a criterion outside `KNOWN_MISSES` fails. Each
//! known miss is a reproduced target we do not reach; the reasons are in the
//! README.

use std::f64::consts::LN_2;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use talbot_lau::cli::{figure_config, figure_repro, parse_csv, Figure, ScanParam, FIGURE_RATIOS};
use talbot_lau::config::Config;
use talbot_lau::decoherence::{
    apply_decoherence, cooling_profile, gas_c6, sigma_eff, sigma_eff_numeric,
    thermal_spectral_rate, AbsorptionModel, AmplitudeModel, CustomMechanism, DecoherenceContext,
    DecoherenceScenario, GasSpec, RateProfile, ThermalSpec,
};
use talbot_lau::gratings::dielectric_reduction;
use talbot_lau::model::{
    validate_setup, velocity_for_talbot_ratio, GratingKind, ParticleSpec, Regime, SetupSpec,
};
use talbot_lau::oracle::{coherent_pattern_oracle, mc_decohered_pattern, OracleConfig};
use talbot_lau::talbot::{wall_cutoff_sensitivity, Interferometer};
use talbot_lau::units::{amu, mbar, mev_nm6, nm3, um, BOLTZMANN, HBAR, SPEED_OF_LIGHT};

const KNOWN_MISSES: [&str; 7] = [
    "fig4 quantum L/L_T=0.9",
    "fig4 quantum L/L_T=0.8",
    "fig4 nm^6 reading quantum L/L_T=0.9",
    "fig4 nm^6 reading quantum L/L_T=0.8",
    "fig4 nm^6 reading classical",
    "fig4 at least one C3 reading",
    "dielectric eps=1e6",
];

#[derive(Default)]
struct Report {
    failed: Vec<String>,
    total: usize,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String) -> bool {
        self.total += 1;
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(name.to_string());
        }
        pass
    }

    fn info(&self, name: &str, detail: String) {
        println!("INFO {name}: {detail}");
    }
}

fn speed(ifm: &Interferometer, s: f64) -> f64 {
    velocity_for_talbot_ratio(ifm.particle.mass, ifm.setup.d(), ifm.setup.separation(), s)
}

fn figure(fig: Figure) -> Config {
    Config::parse(figure_config(fig), Path::new(".")).expect("built-in config parses")
}

fn at(base: &Config, f: f64, s: f64) -> (Interferometer, f64) {
    let c = ScanParam::OpenFraction.apply(base, f).unwrap();
    let c = ScanParam::TalbotRatio.apply(&c, s).unwrap();
    (c.interferometer().unwrap(), c.velocity())
}

fn fig2(r: &mut Report) {
    let start = Instant::now();
    let out = figure_repro(Figure::Fig2, 0).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (header, rows) = parse_csv(&out.csv).unwrap();
    let col = |n: &str| header.iter().position(|h| h == n).unwrap();
    let (sc, fc, qc, cc) = (
        col("L_over_Ltalbot"),
        col("open_fraction"),
        col("quantum_visibility"),
        col("classical_visibility"),
    );
    let half = |s: f64| {
        rows.iter()
            .find(|row| row[sc] == s && (row[fc] - 0.5).abs() < 1e-9)
            .unwrap()
    };

    for (s, target) in [(0.9, 0.147), (0.8, 0.254)] {
        let v = half(s)[qc];
        r.check(
            &format!("fig2 quantum L/L_T={s}"),
            (v - target).abs() <= 0.003,
            format!("V = {v:.5} (target {target} +- 0.003)"),
        );
    }
    let worst = FIGURE_RATIOS
        .iter()
        .map(|s| half(*s)[cc])
        .fold(0.0, f64::max);
    r.check(
        "fig2 classical f=0.5",
        worst < 1e-10,
        format!("max V = {worst:.3e} over three L (bound 1e-10)"),
    );
    r.check(
        "fig2 19x3 scan time",
        secs < 5.0 && rows.len() == 57,
        format!("{} points in {secs:.2} s (bound 5 s)", rows.len()),
    );
}

fn resonance(r: &mut Report) {
    let base = figure(Figure::Fig2);
    let mut worst = 0.0f64;
    for s in [1.0, 2.0] {
        for i in 1..=19 {
            let (ifm, v) = at(&base, 0.05 * i as f64, s);
            let q = ifm.fringe(v, Regime::Quantum).unwrap().visibility;
            let c = ifm.fringe(v, Regime::Classical).unwrap().visibility;
            worst = worst.max((q - c).abs());
        }
    }
    r.check(
        "resonance identity",
        worst < 1e-9,
        format!("max |V_q - V_c| = {worst:.2e} over 19 f at L/L_T in {{1, 2}} (bound 1e-9)"),
    );
}

fn fig4(r: &mut Report) {
    let base = figure(Figure::Fig4);
    let mut literal = base.clone();
    if let GratingKind::Material(m) = &mut literal.setup.gratings[1].kind {
        m.c3 = mev_nm6(10.0);
    }
    let mut any = false;
    for (label, cfg) in [("fig4", &base), ("fig4 nm^6 reading", &literal)] {
        let mut ok = true;
        for (s, target) in [(0.9, 0.329), (0.8, 0.35)] {
            let (ifm, v) = at(cfg, 0.5, s);
            let q = ifm.fringe(v, Regime::Quantum).unwrap().visibility;
            ok &= r.check(
                &format!("{label} quantum L/L_T={s}"),
                (q - target).abs() <= 0.01,
                format!("V = {q:.4} (target {target} +- 0.01)"),
            );
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for s in FIGURE_RATIOS {
            let (ifm, v) = at(cfg, 0.5, s);
            let c = ifm.fringe(v, Regime::Classical).unwrap().visibility;
            lo = lo.min(c);
            hi = hi.max(c);
        }
        ok &= r.check(
            &format!("{label} classical"),
            lo >= 0.114 && hi <= 0.139,
            format!("V in [{lo:.4}, {hi:.4}] over three L (band [0.114, 0.139])"),
        );
        any |= ok;
    }
    r.check(
        "fig4 at least one C3 reading",
        any,
        format!(
            "{}",
            if any {
                "a reading passes"
            } else {
                "neither reading passes"
            }
        ),
    );

    let (ifm, _) = at(&base, 0.5, 0.9);
    for s in [0.9, 0.8] {
        let (v0, v1) = wall_cutoff_sensitivity(&ifm, speed(&ifm, s), Regime::Quantum).unwrap();
        r.info(
            &format!("fig4 wall cutoff halved L/L_T={s}"),
            format!(
                "V {v0:.6} -> {v1:.6}, change {:.1e} (convergence target 1e-4)",
                (v1 - v0).abs()
            ),
        );
    }
}

fn dielectric(r: &mut Report) {
    let one = dielectric_reduction(1.0).unwrap();
    r.check(
        "dielectric eps=1",
        one == 0.0,
        format!("{one:e} (exactly 0)"),
    );
    let big = dielectric_reduction(1e6).unwrap();
    r.check(
        "dielectric eps=1e6",
        (1.0 - big).abs() <= 1e-3,
        format!("{big:.6} (1 within 1e-3)"),
    );
    let four = dielectric_reduction(4.0).unwrap();
    r.check("dielectric eps=4", four < 0.5, format!("{four:.4} (< 0.5)"));
    let vals: Vec<f64> = (0..=990)
        .map(|i| dielectric_reduction(1.0 + 0.1 * i as f64).unwrap())
        .collect();
    let mono = vals.windows(2).all(|w| w[1] >= w[0]);
    r.check(
        "dielectric monotone on [1, 100]",
        mono,
        format!("{} points, step 0.1", vals.len()),
    );
}

fn desk(f: f64) -> Interferometer {
    let mut particle = ParticleSpec::with_mass(amu(1000.0));
    particle.static_polarizability = nm3(0.1);
    particle.valence_electrons = Some(240.0);
    Interferometer::new(
        validate_setup(SetupSpec::ideal(um(1.0), f, 0.2)).unwrap(),
        particle,
    )
}

fn argon(pressure_mbar: f64) -> GasSpec {
    GasSpec {
        mass: amu(40.0),
        temperature: 300.0,
        pressure: mbar(pressure_mbar),
        polarizability: nm3(1.64),
        valence_electrons: 8.0,
        c6: None,
    }
}

fn thermal(sigma: f64, cv_over_k: f64) -> ThermalSpec {
    ThermalSpec {
        temperature: 1500.0,
        heat_capacity: cv_over_k * BOLTZMANN,
        absorption: AbsorptionModel::Constant(sigma),
        enable_cooling: true,
    }
}

fn context(ifm: &Interferometer, v: f64) -> DecoherenceContext {
    ifm.decoherence_context(ifm.kinematics(v).unwrap())
}

fn full_localization(ifm: &Interferometer, rate: f64) -> DecoherenceScenario {
    let gas = argon(1e-7);
    let c6 = gas_c6(&gas, &ifm.particle).unwrap();
    DecoherenceScenario::collisional(gas, c6, AmplitudeModel::FullLocalization)
        .with_profile(RateProfile::Constant(rate))
}

fn isotropic(ifm: &Interferometer, pressure_mbar: f64) -> DecoherenceScenario {
    let gas = argon(pressure_mbar);
    let c6 = gas_c6(&gas, &ifm.particle).unwrap();
    DecoherenceScenario::collisional(gas, c6, AmplitudeModel::Isotropic)
}

fn decoherence(r: &mut Report) {
    let ifm = desk(0.5);
    let v = speed(&ifm, 0.9);
    let ctx = context(&ifm, v);
    let gas = argon(1e-7);
    let c6 = gas_c6(&gas, &ifm.particle).unwrap();
    let tabulated = AmplitudeModel::Tabulated {
        cos_theta: vec![-1.0, 0.0, 0.9, 1.0],
        weight: vec![0.2, 0.5, 3.0, 8.0],
    };
    let lorentz = CustomMechanism {
        label: "lorentzian".into(),
        eta: Arc::new(|dx: f64| Complex64::new(1.0 / (1.0 + (dx / 1e-8).powi(2)), 0.0)),
        kick: None,
    };
    let mechanisms = [
        DecoherenceScenario::collisional(gas.clone(), c6, AmplitudeModel::Isotropic),
        DecoherenceScenario::collisional(gas.clone(), c6, AmplitudeModel::FullLocalization),
        DecoherenceScenario::collisional(gas.clone(), c6, tabulated),
        DecoherenceScenario::thermal(thermal(1e-21, 200.0)),
        DecoherenceScenario::custom(lorentz, RateProfile::Constant(1.0)),
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut at_zero = 0.0f64;
    for m in &mechanisms {
        at_zero = at_zero.max((m.eta(0.0).unwrap() - 1.0).norm());
        for _ in 0..1000 {
            let dx =
                10f64.powf(rng.gen_range(-12.0..-4.0)) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            worst = worst.max(m.eta(dx).unwrap().norm());
        }
    }
    r.check(
        "eta(0) = 1 and |eta| <= 1",
        at_zero == 0.0 && worst <= 1.0 + 1e-12,
        format!(
            "{} mechanisms x 1000 points: |eta(0) - 1| = {at_zero:e}, max |eta| = {worst:.15}",
            mechanisms.len()
        ),
    );

    let coherent = ifm.coherent_fringe(v, Regime::Quantum).unwrap();
    let decohered = apply_decoherence(&coherent.signal_coeffs, &mechanisms, &ctx).unwrap();
    let (b0, bh0) = (coherent.signal_coeffs.value(0), decohered.value(0));
    r.check("order zero untouched", b0 == bh0, format!("{b0} vs {bh0}"));

    let two_l = 2.0 * ctx.separation;
    let mut edge = 0.0f64;
    for m in &mechanisms[..3] {
        let sc = m
            .clone()
            .with_profile(RateProfile::Events(vec![(0.0, 2.5), (two_l, 1.5)]));
        for order in -6..=6 {
            edge = edge.max(sc.exponent(order, &ctx).unwrap().norm());
        }
    }
    r.check(
        "events at z = 0 and 2L",
        edge == 0.0,
        format!("max |exponent| = {edge:e}"),
    );

    let pressures: Vec<f64> = (0..16).map(|i| 1e-7 * i as f64 / 3.0).collect();
    let vis: Vec<f64> = pressures
        .iter()
        .map(|p| {
            ifm.fringe_with(v, Regime::Quantum, &[isotropic(&ifm, *p)])
                .unwrap()
                .visibility
        })
        .collect();
    let mono = vis.windows(2).all(|w| w[1] <= w[0]);
    r.check(
        "visibility monotone in pressure",
        mono,
        format!(
            "16 points to {:.1e} mbar: V {:.4} -> {:.4}",
            pressures[15], vis[0], vis[15]
        ),
    );

    let rate = 1.7;
    let fl = ifm
        .fringe_with(v, Regime::Quantum, &[full_localization(&ifm, rate)])
        .unwrap()
        .visibility;
    let closed = coherent.visibility * (-two_l * rate).exp();
    r.check(
        "full localization closed form",
        (fl - closed).abs() <= 1e-10,
        format!("{fl:.12} vs V0 exp(-2LR) = {closed:.12} (bound 1e-10)"),
    );
}

fn oracle(r: &mut Report) {
    let config = OracleConfig::default();
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    for f in [0.3, 0.5, 0.7] {
        let ifm = desk(f);
        for s in [0.8, 0.9, 1.0] {
            let v = speed(&ifm, s);
            let fast = ifm.coherent_fringe(v, Regime::Quantum).unwrap().visibility;
            let start = Instant::now();
            let o = coherent_pattern_oracle(&ifm, v, &config).unwrap();
            slowest = slowest.max(start.elapsed().as_secs_f64());
            worst = worst.max((fast - o.visibility).abs());
        }
    }
    r.check(
        "oracle 3x3 grid",
        worst < 1e-2 && slowest < 60.0,
        format!("max |V_fast - V_oracle| = {worst:.2e} (bound 1e-2), slowest run {slowest:.1} s (bound 60 s)"),
    );

    let ifm = desk(0.5);
    let v = speed(&ifm, 0.9);
    let base = coherent_pattern_oracle(&ifm, v, &config).unwrap();
    let mc = OracleConfig {
        mc_trajectories: 10_000,
        seed: 17,
        ..config
    };
    let cases = [
        (
            "full localization",
            full_localization(&ifm, LN_2 / (2.0 * ifm.setup.separation())),
        ),
        ("isotropic collisions", isotropic(&ifm, 2e-7)),
    ];
    for (label, sc) in cases {
        let fast = ifm
            .fringe_with(v, Regime::Quantum, std::slice::from_ref(&sc))
            .unwrap()
            .visibility;
        let res = mc_decohered_pattern(&ifm, v, &[sc], &base, &mc).unwrap();
        let z = (res.visibility - fast).abs() / res.standard_error;
        r.check(
            &format!("monte carlo {label}"),
            z <= 3.0,
            format!(
                "V_mc = {:.5} +- {:.5}, V_fast = {fast:.5}, {z:.2} SE (bound 3)",
                res.visibility, res.standard_error
            ),
        );
    }
}

fn cross_section(r: &mut Report) {
    let gas = argon(1e-7);
    let c6 = 1e-76;
    let vg = gas.thermal_speed();
    let asym = sigma_eff(0.2 * vg, &gas, c6).value;
    let brute = sigma_eff_numeric(0.2 * vg, &gas, c6).unwrap();
    let rel = (asym / brute - 1.0).abs();
    r.check(
        "sigma_eff asymptotic vs thermal average",
        rel < 1e-3,
        format!("relative {rel:.2e} at v_p = 0.2 v_g (bound 1e-3)"),
    );

    let lead: Vec<f64> = (0..=40)
        .map(|i| {
            let x = 0.01 + 0.001 * i as f64;
            sigma_eff(x * vg, &gas, c6).value * x * vg / (1.0 + 0.2 * x * x)
        })
        .collect();
    let spread = lead
        .iter()
        .map(|l| (l / lead[0] - 1.0).abs())
        .fold(0.0, f64::max);
    r.check(
        "sigma_eff v_p leading order",
        spread < 1e-6,
        format!("relative spread {spread:.1e} over v_p in [0.01, 0.05] v_g (bound 1e-6)"),
    );
}

fn thermal_checks(r: &mut Report) {
    let t = thermal(1e-21, 1e9);
    let mut worst = 0.0f64;
    for i in 1..=400 {
        let x = 0.1 * i as f64;
        let w = x * BOLTZMANN * t.temperature / HBAR;
        let boltz =
            w * w / (std::f64::consts::PI.powi(2) * SPEED_OF_LIGHT.powi(2)) * 1e-21 * (-x).exp();
        worst = worst.max((thermal_spectral_rate(w, &t, t.temperature) / boltz - 1.0).abs());
    }
    r.check("thermal canonical limit", worst < 1e-6, format!("max relative deviation {worst:.1e} for hbar w / kT in [0.1, 40] at C_V' = 1e9 (bound 1e-6)"));

    let dark = cooling_profile(&thermal(0.0, 200.0), 100.0, 0.4).unwrap();
    let drift = dark
        .temperature
        .iter()
        .map(|x| (x - 1500.0).abs())
        .fold(0.0, f64::max);
    r.check(
        "dark particle keeps its temperature",
        drift == 0.0,
        format!("max |T - T0| = {drift:e} K"),
    );

    let ifm = desk(0.5);
    let v = speed(&ifm, 0.9);
    let sc = DecoherenceScenario::thermal(thermal(1e-26, 200.0));
    let mut ctx = context(&ifm, v);
    let mut exps = Vec::new();
    for _ in 0..4 {
        exps.push(sc.exponent(1, &ctx).unwrap().re);
        ctx.period *= 0.1;
    }
    let falls = exps.windows(2).all(|w| w[1] < w[0]) && exps[3] < 1e-5 * exps[0];
    r.check(
        "thermal exponent vanishes for d << lambda",
        falls,
        format!(
            "exponent {:.2e}, {:.2e}, {:.2e}, {:.2e} for d / 10^k, k = 0..3",
            exps[0], exps[1], exps[2], exps[3]
        ),
    );
}

fn main() -> ExitCode {
    let mut r = Report::default();
    fig2(&mut r);
    resonance(&mut r);
    fig4(&mut r);
    dielectric(&mut r);
    decoherence(&mut r);
    oracle(&mut r);
    cross_section(&mut r);
    thermal_checks(&mut r);

    let unexpected: Vec<&String> = r
        .failed
        .iter()
        .filter(|f| !KNOWN_MISSES.contains(&f.as_str()))
        .collect();
    println!("{} of {} criteria pass", r.total - r.failed.len(), r.total);
    for k in KNOWN_MISSES {
        if !r.failed.iter().any(|f| f == k) {
            println!("NOTE {k} is listed as a known miss but passed");
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
