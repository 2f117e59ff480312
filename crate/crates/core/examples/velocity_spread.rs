//! Averaging over a Gaussian velocity distribution washes out the Talbot
//! resonance; the visibility is read off the averaged signal.

use talbot_lau::model::{
    validate_setup, velocity_for_talbot_ratio, BeamSpec, ParticleSpec, Regime, SetupSpec,
    VelocityDistribution,
};
use talbot_lau::talbot::Interferometer;
use talbot_lau::units::{amu, um};

fn main() -> talbot_lau::error::Result<()> {
    let particle = ParticleSpec::with_mass(amu(1000.0));
    let setup = validate_setup(SetupSpec::ideal(um(1.0), 0.3, 0.2))?;
    let ifm = Interferometer::new(setup, particle.clone());
    let v0 = velocity_for_talbot_ratio(particle.mass, um(1.0), 0.2, 1.0);

    println!("{:>14} {:>10} {:>10}", "rel. width", "quantum", "classical");
    for rel in [0.0, 0.01, 0.03, 0.1, 0.3] {
        let beam = if rel == 0.0 {
            BeamSpec::monochromatic(v0)
        } else {
            BeamSpec {
                distribution: VelocityDistribution::Gaussian {
                    mean: v0,
                    width: rel * v0,
                },
                flux_weighted: true,
            }
        };
        let q = ifm.velocity_average(&beam, Regime::Quantum)?.visibility;
        let c = ifm.velocity_average(&beam, Regime::Classical)?.visibility;
        println!("{rel:>14.2} {q:>10.4} {c:>10.4}");
    }
    Ok(())
}
