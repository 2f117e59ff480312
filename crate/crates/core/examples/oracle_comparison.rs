//! Cross-checks the coefficient fast path against direct Fresnel
//! propagation of point sources, then checks the decohered visibility
//! against a Monte-Carlo unraveling with random momentum kicks.

use talbot_lau::decoherence::{gas_c6, AmplitudeModel, DecoherenceScenario, GasSpec};
use talbot_lau::model::{
    validate_setup, velocity_for_talbot_ratio, ParticleSpec, Regime, SetupSpec,
};
use talbot_lau::oracle::{coherent_pattern_oracle, compare, mc_decohered_pattern, OracleConfig};
use talbot_lau::talbot::Interferometer;
use talbot_lau::units::{amu, mbar, nm3, um};

fn main() -> talbot_lau::error::Result<()> {
    let mut particle = ParticleSpec::with_mass(amu(1000.0));
    particle.static_polarizability = nm3(0.1);
    particle.valence_electrons = Some(240.0);
    let ifm = Interferometer::new(
        validate_setup(SetupSpec::ideal(um(1.0), 0.35, 0.2))?,
        particle.clone(),
    );
    let v = velocity_for_talbot_ratio(particle.mass, um(1.0), 0.2, 0.9);
    let config = OracleConfig::default();

    let fast = ifm.coherent_fringe(v, Regime::Quantum)?;
    let oracle = coherent_pattern_oracle(&ifm, v, &config)?;
    let cmp = compare(&fast.signal, &oracle.signal);
    println!(
        "coherent: fast V = {:.5}, oracle V = {:.5}",
        fast.visibility, oracle.visibility
    );
    println!(
        "  relative L2 {:.2e}, window doubling {:.2e}, sampling doubling {:.2e}",
        cmp.relative_l2,
        oracle.window_change.unwrap_or(f64::NAN),
        oracle.sampling_change.unwrap_or(f64::NAN)
    );

    let gas = GasSpec {
        mass: amu(40.0),
        temperature: 300.0,
        pressure: mbar(1e-7),
        polarizability: nm3(1.64),
        valence_electrons: 8.0,
        c6: None,
    };
    let c6 = gas_c6(&gas, &particle)?;
    let scenarios = [DecoherenceScenario::collisional(
        gas,
        c6,
        AmplitudeModel::Isotropic,
    )];
    let decohered = ifm.fringe_with(v, Regime::Quantum, &scenarios)?.visibility;
    let mc = mc_decohered_pattern(&ifm, v, &scenarios, &oracle, &config)?;
    println!(
        "decohered: fast V = {decohered:.5}, MC V = {:.5} +- {:.5} ({} trajectories)",
        mc.visibility, mc.standard_error, mc.trajectories
    );
    println!(
        "  deviation {:.2} standard errors",
        (mc.visibility - decohered).abs() / mc.standard_error
    );
    Ok(())
}
