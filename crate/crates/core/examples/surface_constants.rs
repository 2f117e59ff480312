//! Wall-interaction constants: the retarded C4 of a perfect conductor, its
//! reduction for dielectric walls, and a Lifshitz C3 from single-resonance
//! response functions.

use talbot_lau::gratings::{casimir_c4, dielectric_reduction, lifshitz_c3_drude, DrudeModel};
use talbot_lau::units::{ev_to_angular_frequency, nm3, MEV, NM};

fn main() -> talbot_lau::error::Result<()> {
    let alpha = nm3(0.1);
    let c4 = casimir_c4(alpha);
    println!(
        "C4 (perfect conductor, alpha = 0.1 nm^3): {:.4} meV nm^4",
        c4 / (MEV * NM.powi(4))
    );

    for eps in [1.5, 2.0, 4.0, 10.0, 100.0, 1e4] {
        println!(
            "  eps = {eps:>8}: C4 reduction {:.5}",
            dielectric_reduction(eps)?
        );
    }

    let particle = DrudeModel {
        static_value: alpha,
        resonance: ev_to_angular_frequency(6.0),
    };
    let wall = DrudeModel {
        static_value: 3.0,
        resonance: ev_to_angular_frequency(12.0),
    };
    let c3 = lifshitz_c3_drude(particle, wall)?;
    println!(
        "C3 (Lifshitz, eps(0) = 3): {:.4} meV nm^3",
        c3 / (MEV * NM.powi(3))
    );
    Ok(())
}
