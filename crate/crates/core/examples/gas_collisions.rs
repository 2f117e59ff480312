//! Collisional decoherence from a room-temperature background gas: the
//! effective cross section, the collision rate, and visibility versus
//! pressure.

use talbot_lau::decoherence::{gas_c6, sigma_eff, AmplitudeModel, DecoherenceScenario, GasSpec};
use talbot_lau::model::{
    validate_setup, velocity_for_talbot_ratio, ParticleSpec, Regime, SetupSpec,
};
use talbot_lau::talbot::Interferometer;
use talbot_lau::units::{amu, mbar, nm3, um};

fn main() -> talbot_lau::error::Result<()> {
    let mut particle = ParticleSpec::with_mass(amu(1000.0));
    particle.static_polarizability = nm3(0.1);
    particle.valence_electrons = Some(240.0);
    let setup = validate_setup(SetupSpec::ideal(um(1.0), 0.3, 0.2))?;
    let ifm = Interferometer::new(setup, particle.clone());
    let v = velocity_for_talbot_ratio(particle.mass, um(1.0), 0.2, 0.8);

    let mut gas = GasSpec {
        mass: amu(40.0),
        temperature: 300.0,
        pressure: 0.0,
        polarizability: nm3(1.64),
        valence_electrons: 8.0,
        c6: None,
    };
    let c6 = gas_c6(&gas, &particle)?;
    let sigma = sigma_eff(v, &gas, c6);
    println!("v_z = {v:.2} m/s, sigma_eff = {:.3e} m^2", sigma.value);

    let v0 = ifm.coherent_fringe(v, Regime::Quantum)?.visibility;
    println!(
        "{:>12} {:>14} {:>10} {:>10}",
        "p [mbar]", "rate [1/m]", "V", "V/V0"
    );
    for p in [1e-8, 1e-7, 3e-7, 1e-6, 3e-6, 1e-5] {
        gas.pressure = mbar(p);
        let rate = gas.number_density() * sigma.value;
        let sc = DecoherenceScenario::collisional(gas.clone(), c6, AmplitudeModel::Isotropic);
        let vis = ifm.fringe_with(v, Regime::Quantum, &[sc])?.visibility;
        println!("{p:>12.1e} {rate:>14.4e} {vis:>10.4} {:>10.4}", vis / v0);
    }
    Ok(())
}
