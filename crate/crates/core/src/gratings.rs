//! Grating transmission functions: binary masks, eikonal phases of material
//! slits and standing light waves, classical kicks, and dispersion constants.
//!
//! Inside this module positions are measured in units of the grating period
//! (xi = x/d, slit centred at 0) so the quadratures are scale free.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    GratingKind, GratingSpec, Kinematics, LightGratingSpec, MaterialInteraction, ParticleSpec,
};
use crate::quadrature::{integrate_half_line, integrate_unit_phase, PhaseJet, QuadOptions, Walls};
use crate::units::{HBAR, SPEED_OF_LIGHT};

/// Fourier coefficient a_m of a centred binary slit of open fraction f.
pub fn binary_coeff(f: f64, m: i64) -> f64 {
    if m == 0 {
        f
    } else {
        let x = PI * m as f64;
        (x * f).sin() / x
    }
}

/// Two-wall slit potential V(x) in J for a slit of half-width `halfwidth`.
pub fn slit_potential(
    x: f64,
    halfwidth: f64,
    interaction: &MaterialInteraction,
    wall_cutoff: f64,
) -> Result<f64> {
    if x.abs() >= halfwidth - wall_cutoff {
        return Err(Error::OpaquePoint(x));
    }
    Ok(match interaction.power_law() {
        None => 0.0,
        Some((p, c)) => -c * ((halfwidth - x).powi(-p) + (halfwidth + x).powi(-p)),
    })
}

/// Eikonal phase of a material grating, phi = -(b / v_z) V(x) / hbar.
pub fn eikonal_phase(x: f64, grating: &GratingSpec, kin: &Kinematics) -> Result<f64> {
    let interaction = grating
        .interaction()
        .ok_or_else(|| Error::numeric("eikonal_phase", "light grating has no slit potential"))?;
    let v = slit_potential(
        x,
        0.5 * grating.open_fraction * grating.period,
        interaction,
        grating.wall_cutoff(),
    )?;
    Ok(-grating.thickness / kin.v_z * v / HBAR)
}

/// Peak phase of a standing-wave light grating, attained at the antinodes.
pub fn light_phase_amplitude(light: &LightGratingSpec, particle: &ParticleSpec, v_z: f64) -> f64 {
    let alpha = particle
        .dynamic_polarizability
        .unwrap_or(particle.static_polarizability);
    (2.0 * PI).sqrt() * 8.0 * light.laser_power * alpha
        / (HBAR * SPEED_OF_LIGHT * v_z * light.waist)
}

pub fn light_phase(x: f64, light: &LightGratingSpec, particle: &ParticleSpec, v_z: f64) -> f64 {
    let k = 2.0 * PI / light.laser_wavelength;
    light_phase_amplitude(light, particle, v_z) * (k * x).cos().powi(2)
}

/// Transverse momentum kick Q(x) = hbar d(phi)/dx, in kg m/s.
pub fn classical_kick(
    x: f64,
    grating: &GratingSpec,
    particle: &ParticleSpec,
    kin: &Kinematics,
) -> Result<f64> {
    match &grating.kind {
        GratingKind::Light(light) => {
            let k = 2.0 * PI / light.laser_wavelength;
            Ok(-HBAR * light_phase_amplitude(light, particle, kin.v_z) * k * (2.0 * k * x).sin())
        }
        GratingKind::Material(m) => {
            let a = 0.5 * grating.open_fraction * grating.period;
            if x.abs() >= a - grating.wall_cutoff() {
                return Err(Error::OpaquePoint(x));
            }
            // -dV/dx * b / v_z
            let dv = match m.power_law() {
                None => 0.0,
                Some((p, c)) => -c * p as f64 * ((a - x).powi(-p - 1) - (a + x).powi(-p - 1)),
            };
            Ok(-dv * grating.thickness / kin.v_z)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PhaseShape {
    Flat,
    /// phi = kappa ((h0 - xi)^-p + (h0 + xi)^-p)
    Walls {
        p: i32,
        kappa: f64,
    },
    /// phi = amplitude cos^2(pi xi)
    Standing {
        amplitude: f64,
    },
}

/// A grating's transmission over one period in units of the period: an open
/// interval (-h, h) carrying the phase phi(xi), zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseProfile {
    half_open: f64,
    wall: f64,
    shape: PhaseShape,
}

impl PhaseProfile {
    pub fn new(grating: &GratingSpec, particle: &ParticleSpec, v_z: f64) -> Self {
        match &grating.kind {
            GratingKind::Light(light) => PhaseProfile {
                half_open: 0.5,
                wall: 0.5,
                shape: PhaseShape::Standing {
                    amplitude: light_phase_amplitude(light, particle, v_z),
                },
            },
            GratingKind::Material(m) => {
                let h0 = 0.5 * grating.open_fraction;
                let shape = match m.power_law() {
                    Some((p, c)) if c > 0.0 && grating.thickness > 0.0 => PhaseShape::Walls {
                        p,
                        kappa: grating.thickness * c / (v_z * HBAR * grating.period.powi(p)),
                    },
                    _ => PhaseShape::Flat,
                };
                let cut = if matches!(shape, PhaseShape::Flat) {
                    0.0
                } else {
                    grating.wall_cutoff() / grating.period
                };
                PhaseProfile {
                    half_open: h0 - cut,
                    wall: h0,
                    shape,
                }
            }
        }
    }

    /// Binary slit of open fraction f with no phase.
    pub fn binary(f: f64) -> Self {
        PhaseProfile {
            half_open: 0.5 * f,
            wall: 0.5 * f,
            shape: PhaseShape::Flat,
        }
    }

    /// Slit of open fraction f carrying a smooth cos^2 phase; mainly useful
    /// for exercising the coefficient identities with a resolvable phase.
    pub fn smooth_slit(f: f64, amplitude: f64) -> Self {
        PhaseProfile {
            half_open: 0.5 * f,
            wall: 0.5 * f,
            shape: PhaseShape::Standing { amplitude },
        }
    }

    pub fn half_open(&self) -> f64 {
        self.half_open
    }

    /// Transmitted fraction of the period, |t|^2 averaged.
    pub fn open_fraction(&self) -> f64 {
        2.0 * self.half_open
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.shape, PhaseShape::Flat)
    }

    /// True if the whole period transmits (standing light wave).
    pub fn is_fully_open(&self) -> bool {
        self.half_open >= 0.5
    }

    /// Whether the phase diverges at the slit edges.
    pub fn has_walls(&self) -> bool {
        matches!(self.shape, PhaseShape::Walls { .. })
    }

    pub fn wall(&self) -> f64 {
        self.wall
    }

    /// k-th derivative of phi with respect to xi, k <= 4.
    pub fn phase_derivative(&self, xi: f64, k: u32) -> f64 {
        match self.shape {
            PhaseShape::Flat => 0.0,
            PhaseShape::Walls { p, kappa } => {
                let mut rising = 1.0;
                for j in 0..k {
                    rising *= (p + j as i32) as f64;
                }
                let e = -p - k as i32;
                let right = (self.wall - xi).powi(e);
                let left = (self.wall + xi).powi(e);
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                kappa * rising * (right + sign * left)
            }
            PhaseShape::Standing { amplitude } => {
                // amplitude (1 + cos(2 pi xi)) / 2
                let w = 2.0 * PI;
                let t = w * xi;
                let base = if k == 0 { 0.5 * amplitude } else { 0.0 };
                let c = 0.5 * amplitude * w.powi(k as i32);
                base + c * match k % 4 {
                    0 => t.cos(),
                    1 => -t.sin(),
                    2 => -t.cos(),
                    _ => t.sin(),
                }
            }
        }
    }

    pub fn phase(&self, xi: f64) -> f64 {
        self.phase_derivative(xi, 0)
    }

    /// Transmission amplitude at xi (any real xi; periodic).
    pub fn transmission(&self, xi: f64) -> Complex64 {
        let u = xi - xi.round();
        if u.abs() >= self.half_open && !self.is_fully_open() {
            return Complex64::default();
        }
        let p = self.phase(u);
        Complex64::new(p.cos(), p.sin())
    }

    fn walls(&self) -> Walls {
        if self.has_walls() {
            Walls {
                lower: Some(-self.wall),
                upper: Some(self.wall),
            }
        } else {
            Walls::default()
        }
    }

    fn limits(&self) -> (f64, f64) {
        if self.is_fully_open() {
            (-0.5, 0.5)
        } else {
            (-self.half_open, self.half_open)
        }
    }

    /// int t~(xi) dxi over [a, b], a sub-interval of [-1/2, 1/2].
    pub fn integrate_transmission(&self, a: f64, b: f64, opts: &QuadOptions) -> Result<Complex64> {
        let (lo, hi) = self.limits();
        let (a, b) = (a.max(lo), b.min(hi));
        if !(b > a) {
            return Ok(Complex64::default());
        }
        if self.is_flat() {
            return Ok(Complex64::new(b - a, 0.0));
        }
        let jet = |x: f64| PhaseJet {
            psi: self.phase(x),
            d1: self.phase_derivative(x, 1),
            d2: self.phase_derivative(x, 2),
            d3: self.phase_derivative(x, 3),
        };
        integrate_unit_phase(&jet, a, b, self.walls(), opts, "transmission cell")
    }

    /// b~_m = int exp(-2 pi i m xi) t~(xi) dxi over one period.
    pub fn quantum_coeff(&self, m: i64, opts: &QuadOptions) -> Result<Complex64> {
        let (a, b) = self.limits();
        let w = 2.0 * PI * m as f64;
        if self.is_flat() {
            return Ok(Complex64::new(binary_coeff(b - a, m), 0.0));
        }
        let jet = |x: f64| PhaseJet {
            psi: self.phase(x) - w * x,
            d1: self.phase_derivative(x, 1) - w,
            d2: self.phase_derivative(x, 2),
            d3: self.phase_derivative(x, 3),
        };
        integrate_unit_phase(
            &jet,
            a,
            b,
            self.walls(),
            opts,
            &format!("quantum coefficient m={m}"),
        )
    }

    /// B~_n^(0) = int exp(-2 pi i n xi) exp(-i n s phi'(xi) / 2) dxi, the
    /// kick-modified classical coefficient at separation s = L / L_lambda.
    pub fn classical_coeff(&self, n: i64, s: f64, opts: &QuadOptions) -> Result<Complex64> {
        let (a, b) = self.limits();
        if n == 0 {
            return Ok(Complex64::new(b - a, 0.0));
        }
        let w = 2.0 * PI * n as f64;
        if self.is_flat() {
            return Ok(Complex64::new(binary_coeff(b - a, n), 0.0));
        }
        let g = 0.5 * n as f64 * s;
        let jet = |x: f64| PhaseJet {
            psi: -w * x - g * self.phase_derivative(x, 1),
            d1: -w - g * self.phase_derivative(x, 2),
            d2: -g * self.phase_derivative(x, 3),
            d3: -g * self.phase_derivative(x, 4),
        };
        integrate_unit_phase(
            &jet,
            a,
            b,
            self.walls(),
            opts,
            &format!("classical coefficient n={n}"),
        )
    }

    /// Quantum Talbot coefficient at separation s = L / L_lambda from the
    /// position-space overlap int t~(xi - a) conj t~(xi + a) exp(-2 pi i m xi)
    /// with a = m s / 4. This is the closed form of the lattice sum
    /// sum_j b~_j conj(b~_{j-m}) exp(i pi (m^2 - 2 j m) s / 2).
    pub fn talbot_coeff(&self, m: i64, s: f64, opts: &QuadOptions) -> Result<Complex64> {
        let mf = m as f64;
        let a = 0.25 * mf * s;
        // exp(-2 pi i m a) with the argument reduced modulo one turn
        let turns = (mf * a).rem_euclid(1.0);
        let global = Complex64::new(0.0, -2.0 * PI * turns).exp();
        let w = 2.0 * PI * mf;
        if self.is_fully_open() {
            // No support restriction: integrate the smooth product over one period.
            let jet = |u: f64| {
                let (x1, x2) = (u - a, u + a);
                PhaseJet {
                    psi: self.phase(x1) - self.phase(x2) - w * u,
                    d1: self.phase_derivative(x1, 1) - self.phase_derivative(x2, 1) - w,
                    d2: self.phase_derivative(x1, 2) - self.phase_derivative(x2, 2),
                    d3: self.phase_derivative(x1, 3) - self.phase_derivative(x2, 3),
                }
            };
            let v = integrate_unit_phase(
                &jet,
                -0.5,
                0.5,
                Walls::default(),
                opts,
                &format!("talbot coefficient m={m}"),
            )?;
            return Ok(v);
        }
        // Substituting u = xi - a puts the first factor on its own slit; the
        // second factor sits on the slit k periods away, shifted by
        // delta = 2a - k.
        let h = self.half_open;
        let kmin = (2.0 * a - 2.0 * h).floor() as i64;
        let kmax = (2.0 * a + 2.0 * h).ceil() as i64;
        let mut total = Complex64::default();
        for k in kmin..=kmax {
            let delta = 2.0 * a - k as f64;
            let lo = (-h).max(-h - delta);
            let hi = h.min(h - delta);
            if !(hi > lo) {
                continue;
            }
            if self.is_flat() || delta == 0.0 {
                // |t|^2 on the overlap: a pure Fourier exponential
                let e = |x: f64| Complex64::new(0.0, -w * x).exp();
                let v = if m == 0 {
                    Complex64::new(hi - lo, 0.0)
                } else {
                    (e(hi) - e(lo)) / Complex64::new(0.0, -w)
                };
                total += v;
                continue;
            }
            let jet = |u: f64| {
                let x2 = u + delta;
                PhaseJet {
                    psi: self.phase(u) - self.phase(x2) - w * u,
                    d1: self.phase_derivative(u, 1) - self.phase_derivative(x2, 1) - w,
                    d2: self.phase_derivative(u, 2) - self.phase_derivative(x2, 2),
                    d3: self.phase_derivative(u, 3) - self.phase_derivative(x2, 3),
                }
            };
            // The singular wall at each end belongs to whichever factor's slit edge bounds it.
            let walls = Walls {
                lower: Some(if delta >= 0.0 {
                    -self.wall
                } else {
                    -self.wall - delta
                }),
                upper: Some(if delta >= 0.0 {
                    self.wall - delta
                } else {
                    self.wall
                }),
            };
            total += integrate_unit_phase(
                &jet,
                lo,
                hi,
                walls,
                opts,
                &format!("talbot coefficient m={m}"),
            )?;
        }
        Ok(total * global)
    }
}

/// b~_m of a grating for the given kinematics.
pub fn modified_coeff_quantum(
    grating: &GratingSpec,
    particle: &ParticleSpec,
    kin: &Kinematics,
    m: i64,
    opts: &QuadOptions,
) -> Result<Complex64> {
    PhaseProfile::new(grating, particle, kin.v_z).quantum_coeff(m, opts)
}

/// B~_n^(0) of a grating for separation L.
pub fn classical_product_coeff(
    grating: &GratingSpec,
    particle: &ParticleSpec,
    kin: &Kinematics,
    separation: f64,
    n: i64,
    opts: &QuadOptions,
) -> Result<Complex64> {
    PhaseProfile::new(grating, particle, kin.v_z).classical_coeff(
        n,
        separation / kin.talbot_length,
        opts,
    )
}

/// Reduction C4^eps / C4 of the retarded constant for a dielectric wall with
/// static permittivity eps.
pub fn dielectric_reduction(eps: f64) -> Result<f64> {
    if !(eps >= 1.0) {
        return Err(Error::invalid(
            "dielectric_reduction.epsilon",
            "must be at least 1",
        ));
    }
    if eps == 1.0 {
        return Ok(0.0);
    }
    let f = |u: f64| {
        if !u.is_finite() {
            return 0.0;
        }
        let s1 = (1.0 + u * u).sqrt();
        let se = (eps + u * u).sqrt();
        let rp = (eps * s1 - se) / (eps * s1 + se);
        let rs = (s1 - se) / (s1 + se);
        ((1.0 + 2.0 * u * u) * rp - rs) / (1.0 + u * u).powf(2.5) * 0.5 * u
    };
    integrate_half_line(
        &f,
        &QuadOptions::with_abs_tol(1e-13),
        "dielectric_reduction",
    )
}

/// C4 = 3 hbar c alpha(0) / (8 pi) for a polarizability volume in m^3.
pub fn casimir_c4(static_polarizability: f64) -> f64 {
    3.0 * HBAR * SPEED_OF_LIGHT * static_polarizability / (8.0 * PI)
}

/// Single-resonance response f(i omega) = f0 / (1 + omega^2 / omega0^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrudeModel {
    pub static_value: f64,
    pub resonance: f64,
}

impl DrudeModel {
    pub fn at_imaginary(&self, omega: f64) -> f64 {
        self.static_value / (1.0 + (omega / self.resonance).powi(2))
    }
}

/// Lifshitz C3 = hbar/(4 pi) int alpha(i w) (eps(i w) - 1)/(eps(i w) + 1) dw.
/// `polarizability` returns a volume (m^3) at imaginary frequency.
pub fn lifshitz_c3<A: Fn(f64) -> f64, E: Fn(f64) -> f64>(
    polarizability: A,
    permittivity: E,
) -> Result<f64> {
    let g = |w: f64| {
        if !w.is_finite() {
            return 0.0;
        }
        let e = permittivity(w);
        let ratio = if e.is_infinite() {
            1.0
        } else {
            (e - 1.0) / (e + 1.0)
        };
        polarizability(w) * ratio
    };
    // Integrate in units of a scale read off the polarizability: the
    // frequency where it has dropped to half.
    let a0 = polarizability(0.0);
    if a0 == 0.0 {
        return Ok(0.0);
    }
    let mut scale = 1.0;
    for _ in 0..200 {
        if polarizability(scale) < 0.5 * a0 {
            break;
        }
        scale *= 2.0;
    }
    let h = |t: f64| g(t * scale) / a0;
    let opts = QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-12,
        max_intervals: 1 << 16,
    };
    let v = integrate_half_line(&h, &opts, "lifshitz_c3")?;
    if !v.is_finite() {
        return Err(Error::numeric("lifshitz_c3", "integral does not converge"));
    }
    Ok(HBAR / (4.0 * PI) * v * a0 * scale)
}

/// C3 from single-resonance models of the particle and the wall.
pub fn lifshitz_c3_drude(particle: DrudeModel, wall: DrudeModel) -> Result<f64> {
    lifshitz_c3(
        |w| particle.at_imaginary(w),
        |w| 1.0 + (wall.static_value - 1.0) / (1.0 + (w / wall.resonance).powi(2)),
    )
}
