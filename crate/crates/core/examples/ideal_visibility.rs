//! Quantum and classical visibility of three identical binary gratings as a
//! function of the open fraction, at and near the Talbot resonance.

use talbot_lau::model::{
    validate_setup, velocity_for_talbot_ratio, ParticleSpec, Regime, SetupSpec,
};
use talbot_lau::talbot::Interferometer;
use talbot_lau::units::{amu, um};

fn main() -> talbot_lau::error::Result<()> {
    let particle = ParticleSpec::with_mass(amu(1000.0));
    let (d, separation) = (um(1.0), 0.2);
    let ratios = [1.0, 0.9, 0.8];

    println!(
        "{:>6} {:>22} {:>22} {:>22}",
        "f", "L/L_T = 1.0 (q / c)", "0.9 (q / c)", "0.8 (q / c)"
    );
    for i in 1..20 {
        let f = 0.05 * i as f64;
        let ifm = Interferometer::new(
            validate_setup(SetupSpec::ideal(d, f, separation))?,
            particle.clone(),
        );
        let mut line = format!("{f:>6.2}");
        for s in ratios {
            let v = velocity_for_talbot_ratio(particle.mass, d, separation, s);
            let q = ifm.fringe(v, Regime::Quantum)?.visibility;
            let c = ifm.fringe(v, Regime::Classical)?.visibility;
            line += &format!(" {:>10.4} / {:>9.4}", q, c);
        }
        println!("{line}");
    }
    Ok(())
}
