//! A standing light wave as the second grating: a pure phase grating whose
//! strength is set by the laser power. Material gratings of the same period
//! prepare and probe the beam.

use talbot_lau::model::{
    validate_setup, velocity_for_talbot_ratio, GratingSpec, LightGratingSpec, ParticleSpec, Regime,
    SetupSpec,
};
use talbot_lau::talbot::Interferometer;
use talbot_lau::units::{amu, nm, nm3, um};

fn main() -> talbot_lau::error::Result<()> {
    let mut particle = ParticleSpec::with_mass(amu(1000.0));
    particle.static_polarizability = nm3(0.1);
    particle.dynamic_polarizability = Some(nm3(0.12));

    let light = LightGratingSpec {
        laser_power: 1.0,
        waist: um(20.0),
        laser_wavelength: nm(532.0),
    };
    let d = 0.5 * light.laser_wavelength;
    let separation = 0.1;
    let v = velocity_for_talbot_ratio(particle.mass, d, separation, 0.5);

    println!("d = {:.0} nm, v_z = {v:.1} m/s", d / nm(1.0));
    println!("{:>10} {:>10} {:>10}", "P [W]", "quantum", "classical");
    for p in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        let g2 = GratingSpec::light(LightGratingSpec {
            laser_power: p,
            ..light.clone()
        });
        let setup = SetupSpec {
            gratings: [GratingSpec::binary(d, 0.3), g2, GratingSpec::binary(d, 0.3)],
            separation,
            period_ratio: 2,
            interaction_at_all_gratings: false,
        };
        let ifm = Interferometer::new(validate_setup(setup)?, particle.clone());
        let q = ifm.fringe(v, Regime::Quantum)?.visibility;
        let c = ifm.fringe(v, Regime::Classical)?.visibility;
        println!("{p:>10.1} {q:>10.4} {c:>10.4}");
    }
    Ok(())
}
