//! Coefficient algebra of the symmetric Talbot-Lau setup.
//!
//! The density behind the second grating is
//! w(x) = sum_l conj(A_l) B_{l r} exp(2 pi i l x / d1) and the detector
//! signal with the third grating is S(x_s) = sum_l conj(A_l) conj(A3_l) B_{l r}
//! exp(2 pi i l x_s / d1). A_l are the Fourier coefficients of |t1|^2 and
//! B_m carries the propagation through the second grating.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::decoherence::{DecoherenceContext, DecoherenceScenario};
use crate::error::{Error, Result};
use crate::gratings::{binary_coeff, PhaseProfile};
use crate::model::{
    derive_kinematics, BeamSpec, CheckedSetup, CoeffSet, CoeffTag, Kinematics, ParticleSpec,
    Pattern, Regime, Stage, VelocityDistribution,
};
use crate::quadrature::{gauss_legendre, QuadOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct FringeOptions {
    /// Samples per period of the signal grid.
    pub grid_points: usize,
    /// First truncation order tried for the signal series.
    pub initial_order: usize,
    /// Largest truncation order before giving up.
    pub max_order: usize,
    /// Accept the truncation order K once the upper half-band
    /// (K/2, K] of signal terms is below this fraction of the l = 0 term.
    pub tail_tolerance: f64,
    pub quadrature: QuadOptions,
    pub velocity_nodes: usize,
    pub velocity_tolerance: f64,
}

impl Default for FringeOptions {
    fn default() -> Self {
        FringeOptions {
            grid_points: 512,
            initial_order: 16,
            max_order: 4096,
            tail_tolerance: 1e-6,
            quadrature: QuadOptions::default(),
            velocity_nodes: 64,
            velocity_tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeResult {
    pub regime: Regime,
    /// Terms conj(A_l) conj(A3_l) B_{l r} of the detector signal.
    pub signal_coeffs: CoeffSet,
    /// Terms conj(A_l) B_{l r} of the density at the third grating.
    pub density_coeffs: CoeffSet,
    /// One period of the detector signal over the grating-3 offset x_s.
    pub signal: Pattern,
    pub visibility: f64,
}

/// A_l of |t|^2 for a slit transmitting the fraction f of the period.
pub fn intensity_coeffs(open_fraction: f64, max_order: usize) -> CoeffSet {
    let tag = CoeffTag {
        regime: Regime::Quantum,
        stage: Stage::Ideal,
    };
    CoeffSet::from_fn(max_order, tag, |l| {
        Complex64::new(binary_coeff(open_fraction, l), 0.0)
    })
}

/// A_l = sum_j a_j conj(a_{j-l}) over the stored range of a.
pub fn intensity_coeffs_from_amplitudes(a: &CoeffSet) -> CoeffSet {
    let m = a.max_order();
    CoeffSet::from_fn(m, a.tag, |l| {
        a.iter().map(|(j, aj)| aj * a.value(j - l).conj()).sum()
    })
}

/// B_m from the lattice sum sum_j b_j conj(b_{j-m}) exp(i pi (m^2 - 2 j m) s / 2)
/// over the stored orders of b.
#[allow(non_snake_case)]
pub fn quantum_B(m: i64, btilde: &CoeffSet, s: f64) -> Complex64 {
    btilde
        .iter()
        .map(|(j, bj)| {
            let turns = (0.25 * ((m * m - 2 * j * m) as f64) * s).rem_euclid(1.0);
            bj * btilde.value(j - m).conj() * Complex64::new(0.0, 2.0 * PI * turns).exp()
        })
        .sum()
}

/// Classical B_m^(0) = sum_j b_j conj(b_{j-m}), the autocorrelation of b.
#[allow(non_snake_case)]
pub fn classical_B(m: i64, b: &CoeffSet) -> Complex64 {
    b.iter().map(|(j, bj)| bj * b.value(j - m).conj()).sum()
}

/// Evaluates sum_l c_l exp(2 pi i l x / period) on `n` points over one period
/// for a hermitian coefficient set.
pub fn sample_series(c: &CoeffSet, period: f64, n: usize) -> Result<Pattern> {
    sample_series_with_floor(c, period, n, 1e-9)
}

/// As [`sample_series`], rejecting dips below `-floor * mean`.
pub fn sample_series_with_floor(
    c: &CoeffSet,
    period: f64,
    n: usize,
    floor: f64,
) -> Result<Pattern> {
    let table: Vec<Complex64> = (0..n)
        .map(|j| Complex64::new(0.0, 2.0 * PI * j as f64 / n as f64).exp())
        .collect();
    let c0 = c.value(0).re;
    let k = c.max_order() as i64;
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let mut s = 0.0;
            for l in 1..=k {
                let idx = ((l as usize % n) * i) % n;
                s += (c.value(l) * table[idx]).re;
            }
            c0 + 2.0 * s
        })
        .collect();
    let x = (0..n).map(|i| period * i as f64 / n as f64).collect();
    let mean = c0;
    if let Some(&min) = values.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < -floor * mean.abs() {
            return Err(Error::numeric(
                "sample_series",
                format!("pattern dips to {min:e} below zero (mean {mean:e}); truncation too short"),
            ));
        }
    }
    // dips within the floor are truncation ripple around a true zero
    let values = values.into_iter().map(|v| v.max(0.0)).collect();
    Pattern::from_samples(x, values)
}

/// Visibility from the two candidate extrema S(0) and S(d1/2), the form
/// valid when the signal is symmetric about x_s = 0.
pub fn closed_form_visibility(signal_coeffs: &CoeffSet) -> f64 {
    let (mut odd, mut even) = (0.0, 0.0);
    for (l, c) in signal_coeffs.iter().filter(|(l, _)| *l >= 1) {
        if l % 2 == 1 {
            odd += c.re;
        } else {
            even += c.re;
        }
    }
    odd.abs() / (0.5 * signal_coeffs.value(0).re + even)
}

/// Visibility of a sampled signal. Alias of the pattern field, kept as a free
/// function for symmetry with [`closed_form_visibility`].
pub fn visibility(result: &FringeResult) -> f64 {
    result.signal.visibility
}

/// Source of B_m for one velocity.
struct BSource {
    profile: PhaseProfile,
    regime: Regime,
    s: f64,
    quad: QuadOptions,
}

impl BSource {
    fn coeff(&self, m: i64) -> Result<Complex64> {
        match self.regime {
            Regime::Quantum => self.profile.talbot_coeff(m, self.s, &self.quad),
            Regime::Classical => self.profile.classical_coeff(m, self.s, &self.quad),
        }
    }
}

/// A validated setup together with the particle and decoherence scenarios.
#[derive(Debug, Clone)]
pub struct Interferometer {
    pub setup: CheckedSetup,
    pub particle: ParticleSpec,
    pub scenarios: Vec<DecoherenceScenario>,
    pub options: FringeOptions,
}

impl Interferometer {
    pub fn new(setup: CheckedSetup, particle: ParticleSpec) -> Self {
        Interferometer {
            setup,
            particle,
            scenarios: Vec::new(),
            options: FringeOptions::default(),
        }
    }

    pub fn with_scenarios(mut self, scenarios: Vec<DecoherenceScenario>) -> Self {
        self.scenarios = scenarios;
        self
    }

    pub fn with_options(mut self, options: FringeOptions) -> Self {
        self.options = options;
        self
    }

    pub fn kinematics(&self, v_z: f64) -> Result<Kinematics> {
        derive_kinematics(&self.particle, v_z, self.setup.d())
    }

    /// L / L_lambda at velocity v_z.
    pub fn talbot_ratio(&self, v_z: f64) -> Result<f64> {
        Ok(self.setup.separation() / self.kinematics(v_z)?.talbot_length)
    }

    /// Transmitted fraction |t|^2 of grating i (0-based) at velocity v_z.
    pub fn intensity_fraction(&self, i: usize, v_z: f64) -> f64 {
        let g = self.setup.grating(i);
        if self.setup.spec().interaction_at_all_gratings {
            PhaseProfile::new(g, &self.particle, v_z).open_fraction()
        } else {
            g.open_fraction
        }
    }

    /// Second-grating transmission profile at velocity v_z.
    pub fn profile(&self, v_z: f64) -> PhaseProfile {
        PhaseProfile::new(self.setup.grating(1), &self.particle, v_z)
    }

    pub fn decoherence_context(&self, kin: Kinematics) -> DecoherenceContext {
        DecoherenceContext {
            separation: self.setup.separation(),
            period: self.setup.d(),
            kinematics: kin,
        }
    }

    /// Coherent fringes (scenarios ignored).
    pub fn coherent_fringe(&self, v_z: f64, regime: Regime) -> Result<FringeResult> {
        self.fringe_with(v_z, regime, &[])
    }

    /// Fringes including every configured decoherence scenario.
    pub fn fringe(&self, v_z: f64, regime: Regime) -> Result<FringeResult> {
        self.fringe_with(v_z, regime, &self.scenarios)
    }

    pub fn fringe_with(
        &self,
        v_z: f64,
        regime: Regime,
        scenarios: &[DecoherenceScenario],
    ) -> Result<FringeResult> {
        let kin = self.kinematics(v_z)?;
        let s = self.setup.separation() / kin.talbot_length;
        let source = BSource {
            profile: self.profile(v_z),
            regime,
            s,
            quad: self.options.quadrature,
        };
        let f1 = self.intensity_fraction(0, v_z);
        let f3 = self.intensity_fraction(2, v_z);
        let r = self.setup.r() as i64;
        let ctx = self.decoherence_context(kin);
        let prepared = scenarios
            .iter()
            .map(|sc| sc.prepare(&ctx))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| at_velocity(e, v_z))?;

        let term = |l: i64| -> Result<(Complex64, Complex64)> {
            let m = l * r;
            let mut b = source.coeff(m)?;
            if m != 0 {
                for p in &prepared {
                    b *= (-p.exponent(m)?).exp();
                }
            }
            let a1 = binary_coeff(f1, l);
            let a3 = binary_coeff(f3, l);
            Ok((b * a1, b * a1 * a3))
        };

        let opts = &self.options;
        let mut density: Vec<Complex64> = Vec::new();
        let mut signal: Vec<Complex64> = Vec::new();
        let mut k = opts.initial_order.max(2);
        loop {
            let start = density.len() as i64;
            let fresh: Vec<(Complex64, Complex64)> = (start..=k as i64)
                .into_par_iter()
                .map(term)
                .collect::<Result<Vec<_>>>()?;
            for (w, c) in fresh {
                density.push(w);
                signal.push(c);
            }
            let c0 = signal[0].norm();
            let tail = signal[k / 2 + 1..=k]
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            if tail <= opts.tail_tolerance * c0 {
                break;
            }
            if 2 * k > opts.max_order {
                return Err(Error::numeric(
                    "signal series",
                    format!("terms still at {:.3e} of the mean at order {k}", tail / c0),
                ));
            }
            k *= 2;
        }
        let stage = if scenarios.is_empty() {
            if source.profile.is_flat() {
                Stage::Ideal
            } else {
                Stage::Interacting
            }
        } else {
            Stage::Decohered
        };
        let tag = CoeffTag { regime, stage };
        let density_coeffs = CoeffSet::hermitian(&density, tag);
        let signal_coeffs = CoeffSet::hermitian(&signal, tag);
        // A pattern touching zero with kinked features picks up Gibbs dips of
        // roughly K |c_K| from the truncation alone.
        let floor = (2.0 * signal_coeffs.max_order() as f64 * opts.tail_tolerance).max(1e-9);
        let pattern =
            sample_series_with_floor(&signal_coeffs, self.setup.d1(), opts.grid_points, floor)
                .map_err(|e| at_velocity(e, v_z))?;
        Ok(FringeResult {
            regime,
            visibility: pattern.visibility,
            signal: pattern,
            signal_coeffs,
            density_coeffs,
        })
    }

    /// Density w(x) at the third grating over one period, mean A_0 B_0.
    pub fn density_pattern(&self, result: &FringeResult, points: usize) -> Result<Pattern> {
        sample_series(&result.density_coeffs, self.setup.d1(), points)
    }

    /// Signal averaged over the beam's velocity distribution; the visibility
    /// is read off the averaged signal.
    pub fn velocity_average(&self, beam: &BeamSpec, regime: Regime) -> Result<FringeResult> {
        let mut bad = Vec::new();
        beam.validate("beam", &mut bad);
        if !bad.is_empty() {
            return Err(Error::Validation(bad));
        }
        if let VelocityDistribution::Delta(v) = beam.distribution {
            return self.fringe(v, regime);
        }
        let mut n = self.options.velocity_nodes.max(2);
        let mut prev = self.average_on_nodes(beam, regime, n)?;
        loop {
            let next = self.average_on_nodes(beam, regime, 2 * n)?;
            if (next.visibility - prev.visibility).abs() < self.options.velocity_tolerance {
                return Ok(next);
            }
            if 2 * n >= 1024 {
                return Err(Error::numeric(
                    "velocity_average",
                    format!(
                        "visibility changes by {:.3e} between {} and {} nodes",
                        (next.visibility - prev.visibility).abs(),
                        n,
                        2 * n
                    ),
                ));
            }
            n *= 2;
            prev = next;
        }
    }

    fn average_on_nodes(&self, beam: &BeamSpec, regime: Regime, n: usize) -> Result<FringeResult> {
        let (v, w) = velocity_nodes(beam, n)?;
        let results: Vec<FringeResult> = v
            .par_iter()
            .map(|&v| self.fringe(v, regime))
            .collect::<Result<Vec<_>>>()?;
        let k = results
            .iter()
            .map(|r| r.signal_coeffs.max_order())
            .max()
            .unwrap_or(0);
        let np = self.options.grid_points;
        let mut samples = vec![0.0; np];
        let mut sig = vec![Complex64::default(); k + 1];
        let mut den = vec![Complex64::default(); k + 1];
        for (r, wi) in results.iter().zip(&w) {
            for (acc, s) in samples.iter_mut().zip(&r.signal.values) {
                *acc += wi * s;
            }
            for l in 0..=k as i64 {
                sig[l as usize] += r.signal_coeffs.value(l) * wi;
                den[l as usize] += r.density_coeffs.value(l) * wi;
            }
        }
        let tag = results[0].signal_coeffs.tag;
        let signal = Pattern::from_samples(results[0].signal.x.clone(), samples)?;
        Ok(FringeResult {
            regime,
            visibility: signal.visibility,
            signal,
            signal_coeffs: CoeffSet::hermitian(&sig, tag),
            density_coeffs: CoeffSet::hermitian(&den, tag),
        })
    }
}

fn at_velocity(e: Error, v: f64) -> Error {
    match e {
        Error::Numeric { context, detail } => Error::Numeric {
            context: format!("{context} at v_z = {v} m/s"),
            detail,
        },
        other => other,
    }
}

/// Gauss-Legendre velocity nodes with normalized weights (flux weighting
/// multiplies the density by v).
pub fn velocity_nodes(beam: &BeamSpec, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi, density): (f64, f64, Box<dyn Fn(f64) -> f64>) = match &beam.distribution {
        VelocityDistribution::Delta(v) => return Ok((vec![*v], vec![1.0])),
        VelocityDistribution::Gaussian { mean, width } => {
            let (m, s) = (*mean, *width);
            let lo = (m - 4.0 * s).max(1e-6 * m);
            (
                lo,
                m + 4.0 * s,
                Box::new(move |v: f64| (-0.5 * ((v - m) / s).powi(2)).exp()),
            )
        }
        VelocityDistribution::Tabulated {
            velocities,
            weights,
        } => {
            let (vs, ws) = (velocities.clone(), weights.clone());
            (
                vs[0],
                vs[vs.len() - 1],
                Box::new(move |v: f64| crate::decoherence::interpolate(&vs, &ws, v)),
            )
        }
    };
    let (x, gw) = gauss_legendre(n);
    let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let v: Vec<f64> = x.iter().map(|x| c + h * x).collect();
    let mut w: Vec<f64> = v
        .iter()
        .zip(&gw)
        .map(|(v, g)| g * density(*v) * if beam.flux_weighted { *v } else { 1.0 })
        .collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::numeric(
            "velocity_nodes",
            "distribution has no weight on its grid",
        ));
    }
    w.iter_mut().for_each(|x| *x /= total);
    Ok((v, w))
}

/// Visibility with the wall cutoff as configured and halved, for the
/// convergence check of the opaque wall zone.
pub fn wall_cutoff_sensitivity(
    ifm: &Interferometer,
    v_z: f64,
    regime: Regime,
) -> Result<(f64, f64)> {
    let base = ifm.fringe(v_z, regime)?.visibility;
    let mut spec = ifm.setup.spec().clone();
    let cut = spec.gratings[1].wall_cutoff();
    if let crate::model::GratingKind::Material(m) = &mut spec.gratings[1].kind {
        m.wall_cutoff = Some(0.5 * cut);
    }
    let halved = Interferometer {
        setup: crate::model::validate_setup(spec)?,
        ..ifm.clone()
    };
    Ok((base, halved.fringe(v_z, regime)?.visibility))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_setup, velocity_for_talbot_ratio, SetupSpec};
    use crate::units::{amu, um};

    fn ideal(f: f64) -> Interferometer {
        let setup = validate_setup(SetupSpec::ideal(um(1.0), f, 0.2)).unwrap();
        Interferometer::new(setup, ParticleSpec::with_mass(amu(1000.0)))
    }

    fn v_at(ifm: &Interferometer, s: f64) -> f64 {
        velocity_for_talbot_ratio(ifm.particle.mass, ifm.setup.d(), ifm.setup.separation(), s)
    }

    #[test]
    fn intensity_coefficients_of_binary_slit() {
        let a = intensity_coeffs(0.5, 8);
        assert_eq!(a.value(0).re, 0.5);
        for l in 1..=8 {
            assert_eq!(a.value(-l), a.value(l).conj());
            assert_eq!(a.value(l).im, 0.0);
        }
    }

    #[test]
    fn amplitude_convolution_matches_closed_form_for_binary() {
        // |t|^2 = t for a binary mask, so the truncated self-convolution
        // approaches the amplitude coefficients themselves.
        let amp = intensity_coeffs(0.3, 4000);
        let conv = intensity_coeffs_from_amplitudes(&amp);
        for l in 0..4 {
            assert!((conv.value(l) - amp.value(l)).norm() < 2e-4, "l={l}");
        }
    }

    #[test]
    fn lattice_sum_zero_order_is_norm() {
        let b = intensity_coeffs(0.4, 20);
        let v = quantum_B(0, &b, 0.7);
        let n: f64 = b.iter().map(|(_, c)| c.norm_sqr()).sum();
        assert!((v.re - n).abs() < 1e-14 && v.im.abs() < 1e-14);
    }

    #[test]
    fn lattice_sum_short_wave_limit_is_autocorrelation() {
        let b = intensity_coeffs(0.4, 40);
        for m in [1, 2, 3] {
            let q = quantum_B(m, &b, 1e-9);
            let c = classical_B(m, &b);
            assert!((q - c).norm() < 1e-7);
        }
    }

    #[test]
    fn lattice_sum_converges_to_overlap_form() {
        let pr = PhaseProfile::binary(0.5);
        let b = intensity_coeffs(0.5, 2048);
        for m in [1, 2, 3, 4] {
            let overlap = pr.talbot_coeff(m, 0.9, &QuadOptions::default()).unwrap();
            let lattice = quantum_B(m, &b, 0.9);
            assert!(
                (overlap - lattice).norm() < 1e-3,
                "m={m}: {overlap} vs {lattice}"
            );
        }
    }

    #[test]
    fn talbot_resonance_equality_of_coefficients() {
        let pr = PhaseProfile::binary(0.5);
        let q = pr.talbot_coeff(2, 1.0, &QuadOptions::default()).unwrap();
        let c = pr.classical_coeff(2, 1.0, &QuadOptions::default()).unwrap();
        assert!((q - c).norm() < 1e-15);
    }

    #[test]
    fn classical_ideal_independent_of_separation() {
        let pr = PhaseProfile::binary(0.37);
        for m in 0..5 {
            let a = pr.classical_coeff(m, 0.3, &QuadOptions::default()).unwrap();
            let b = pr.classical_coeff(m, 1.7, &QuadOptions::default()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn reference_visibilities_at_half_open_fraction() {
        let ifm = ideal(0.5);
        let v09 = ifm
            .fringe(v_at(&ifm, 0.9), Regime::Quantum)
            .unwrap()
            .visibility;
        let v08 = ifm
            .fringe(v_at(&ifm, 0.8), Regime::Quantum)
            .unwrap()
            .visibility;
        assert!((v09 - 0.147).abs() < 0.003, "{v09}");
        assert!((v08 - 0.254).abs() < 0.003, "{v08}");
        for s in [1.0, 0.9, 0.8] {
            let c = ifm
                .fringe(v_at(&ifm, s), Regime::Classical)
                .unwrap()
                .visibility;
            assert!(c < 1e-10, "{c}");
        }
    }

    #[test]
    fn grid_visibility_matches_closed_form() {
        // The closed form needs the extrema at 0 and d1/2. At L = L_lambda and
        // f < 1/2 the minimum is a flat zero where the truncated series ripples.
        for (f, ss) in [
            (0.2, &[0.8, 0.9][..]),
            (0.35, &[0.8, 0.9]),
            (0.5, &[0.8, 0.9, 1.0]),
        ] {
            let ifm = ideal(f);
            for &s in ss {
                let r = ifm.fringe(v_at(&ifm, s), Regime::Quantum).unwrap();
                let c = closed_form_visibility(&r.signal_coeffs);
                assert!(
                    (r.visibility - c).abs() < 1e-9,
                    "f {f} s {s}: {} vs {c}",
                    r.visibility
                );
            }
        }
    }

    #[test]
    fn flat_first_grating_coefficients_give_constant_signal() {
        let tag = CoeffTag {
            regime: Regime::Quantum,
            stage: Stage::Ideal,
        };
        let c = CoeffSet::hermitian(&[Complex64::new(0.25, 0.0)], tag);
        let p = sample_series(&c, 1.0, 64).unwrap();
        assert_eq!(p.visibility, 0.0);
    }

    #[test]
    fn density_mean_is_a0_b0() {
        let ifm = ideal(0.4);
        let r = ifm.fringe(v_at(&ifm, 0.85), Regime::Quantum).unwrap();
        let w = ifm.density_pattern(&r, 256).unwrap();
        assert!((w.mean_level - 0.4 * 0.4).abs() < 1e-14);
        assert!(w.min() >= -1e-9 * w.mean_level);
    }

    #[test]
    fn monochromatic_beam_is_single_velocity() {
        let ifm = ideal(0.3);
        let v = v_at(&ifm, 0.9);
        let a = ifm
            .velocity_average(&BeamSpec::monochromatic(v), Regime::Quantum)
            .unwrap();
        let b = ifm.fringe(v, Regime::Quantum).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn velocity_spread_washes_out_resonance() {
        let ifm = ideal(0.3);
        let v = v_at(&ifm, 1.0);
        let mono = ifm.fringe(v, Regime::Quantum).unwrap().visibility;
        let beam = BeamSpec {
            distribution: VelocityDistribution::Gaussian {
                mean: v,
                width: 0.2 * v,
            },
            flux_weighted: false,
        };
        let avg = ifm.velocity_average(&beam, Regime::Quantum).unwrap();
        assert!(avg.visibility < mono);
        // averaging coefficients then sampling equals sampling then averaging
        let resampled =
            sample_series(&avg.signal_coeffs, ifm.setup.d1(), ifm.options.grid_points).unwrap();
        for (a, b) in resampled.values.iter().zip(&avg.signal.values) {
            assert!((a - b).abs() < 1e-12 * avg.signal.mean_level);
        }
    }
}
