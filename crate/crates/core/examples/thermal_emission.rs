//! Heat radiation from a hot particle: emission rate and power, radiative
//! cooling along the interferometer, and visibility versus the initial
//! microcanonical temperature.

use talbot_lau::decoherence::{
    cooling_profile, thermal_power, thermal_total_rate, AbsorptionModel, DecoherenceScenario,
    ThermalSpec,
};
use talbot_lau::model::{
    validate_setup, velocity_for_talbot_ratio, ParticleSpec, Regime, SetupSpec,
};
use talbot_lau::talbot::Interferometer;
use talbot_lau::units::{amu, um, BOLTZMANN, NM};

fn main() -> talbot_lau::error::Result<()> {
    let particle = ParticleSpec::with_mass(amu(1000.0));
    let setup = validate_setup(SetupSpec::ideal(um(1.0), 0.3, 0.2))?;
    let ifm = Interferometer::new(setup, particle.clone());
    let v = velocity_for_talbot_ratio(particle.mass, um(1.0), 0.2, 0.8);

    let mut thermal = ThermalSpec {
        temperature: 2000.0,
        heat_capacity: 200.0 * BOLTZMANN,
        absorption: AbsorptionModel::Constant(1e-3 * NM * NM),
        enable_cooling: true,
    };

    let cooling = cooling_profile(&thermal, v, 0.4)?;
    println!("v_z = {v:.2} m/s; T* along the path:");
    for z in [0.0, 0.1, 0.2, 0.3, 0.4] {
        println!("  z = {z:.1} m: {:.1} K", cooling.at(z));
    }

    let v0 = ifm.coherent_fringe(v, Regime::Quantum)?.visibility;
    println!(
        "{:>8} {:>12} {:>12} {:>8}",
        "T* [K]", "rate [1/s]", "power [W]", "V/V0"
    );
    for t in [1000.0, 1500.0, 2000.0, 2500.0, 3000.0, 3500.0] {
        thermal.temperature = t;
        let rate = thermal_total_rate(&thermal, t)?;
        let power = thermal_power(&thermal, t)?;
        let sc = DecoherenceScenario::thermal(thermal.clone());
        let vis = ifm.fringe_with(v, Regime::Quantum, &[sc])?.visibility;
        println!("{t:>8.0} {rate:>12.4e} {power:>12.4e} {:>8.4}", vis / v0);
    }
    Ok(())
}
