//! Decoherence functions, event rates and the suppression of the Talbot
//! coefficients: B^_m = B~_m exp(-int R(z) [1 - eta(-m (d/2) l(z) / L_lambda)] dz)
//! with l(z) = L - |z - L| on the path z in [0, 2L].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{CoeffSet, CoeffTag, Kinematics, ParticleSpec, Stage};
use crate::quadrature::{integrate, integrate_complex, QuadOptions};
use crate::units::{BOLTZMANN, ELECTRON_MASS, ELEMENTARY_CHARGE, HBAR, SPEED_OF_LIGHT};

const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Geometry and kinematics a scenario is evaluated against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceContext {
    /// Grating separation L.
    pub separation: f64,
    /// Period d of the second grating.
    pub period: f64,
    pub kinematics: Kinematics,
}

impl DecoherenceContext {
    /// Lever arm l(z) = L - |z - L|.
    pub fn lever(&self, z: f64) -> f64 {
        self.separation - (z - self.separation).abs()
    }

    /// Path separation probed by order m at z: m (d/2) l(z) / L_lambda.
    pub fn separation_for_order(&self, m: i64, z: f64) -> f64 {
        m as f64 * 0.5 * self.period * self.lever(z) / self.kinematics.talbot_length
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GasSpec {
    /// kg
    pub mass: f64,
    /// K
    pub temperature: f64,
    /// Pa
    pub pressure: f64,
    /// Polarizability volume, m^3.
    pub polarizability: f64,
    pub valence_electrons: f64,
    /// Explicit C6 in J m^6, overriding the Slater-Kirkwood estimate.
    pub c6: Option<f64>,
}

impl GasSpec {
    pub fn number_density(&self) -> f64 {
        self.pressure / (BOLTZMANN * self.temperature)
    }

    /// Most probable gas speed sqrt(2 k T / m).
    pub fn thermal_speed(&self) -> f64 {
        (2.0 * BOLTZMANN * self.temperature / self.mass).sqrt()
    }

    /// Width sqrt(m k T) of each Cartesian momentum component.
    pub fn momentum_width(&self) -> f64 {
        (self.mass * BOLTZMANN * self.temperature).sqrt()
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        let mut bad = Vec::new();
        for (name, v) in [
            ("mass", self.mass),
            ("temperature", self.temperature),
            ("polarizability", self.polarizability),
            ("valence_electrons", self.valence_electrons),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(crate::error::Violation {
                    path: format!("{path}.{name}"),
                    message: "must be strictly positive".into(),
                });
            }
        }
        if !(self.pressure >= 0.0 && self.pressure.is_finite()) {
            bad.push(crate::error::Violation {
                path: format!("{path}.pressure"),
                message: "must be non-negative".into(),
            });
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }

    /// Warnings about the regime of validity; empty when none apply.
    pub fn warnings(&self, particle: &ParticleSpec) -> Vec<String> {
        let mut w = Vec::new();
        if self.mass > particle.mass / 10.0 {
            w.push("gas particles are not much lighter than the interfering particle".to_string());
        }
        w
    }
}

/// Total van der Waals scattering cross section at relative speed v.
pub fn sigma_total_vdw(c6: f64, v: f64) -> f64 {
    PI * PI / (libm::tgamma(0.4) * (PI / 5.0).sin()) * (3.0 * PI * c6 / (8.0 * HBAR * v)).powf(0.4)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaEff {
    /// m^2
    pub value: f64,
    /// Set when v_p is not small against the gas thermal speed.
    pub out_of_regime: bool,
}

/// Effective cross section for a slow particle in a thermal vdW gas:
/// leading term in v_p / v_g plus the quadratic correction.
pub fn sigma_eff(v_p: f64, gas: &GasSpec, c6: f64) -> SigmaEff {
    let vg = gas.thermal_speed();
    let x = v_p / vg;
    let pref = 4.0 * PI * libm::tgamma(0.9) / (5.0 * (PI / 5.0).sin());
    let value =
        pref * (3.0 * PI * c6 / (2.0 * HBAR)).powf(0.4) * vg.powf(0.6) / v_p * (1.0 + 0.2 * x * x);
    SigmaEff {
        value,
        out_of_regime: x >= 1.0,
    }
}

/// sigma_eff from its defining thermal average (1/v_p) <|v_p - v_g| sigma(|v_p - v_g|)>
/// over a Maxwell-Boltzmann gas, with the angle integral done in closed form.
pub fn sigma_eff_numeric(v_p: f64, gas: &GasSpec, c6: f64) -> Result<f64> {
    let vg = gas.thermal_speed();
    // u sigma(u) = K u^{3/5}
    let k = sigma_total_vdw(c6, 1.0);
    // speed density of the gas in units of vg: (4/sqrt(pi)) g^2 exp(-g^2)
    let x = v_p / vg;
    let f = |g: f64| {
        let ang = if g == 0.0 {
            x.powf(0.6)
        } else {
            ((x + g).powf(2.6) - (x - g).abs().powf(2.6)) / (5.2 * x * g)
        };
        4.0 / PI.sqrt() * g * g * (-g * g).exp() * ang
    };
    let opts = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_intervals: 1 << 16,
    };
    let brk = [0.0, 0.5 * x, x, 2.0 * x, 1.0, 2.0, 4.0, 8.0];
    let mut b: Vec<f64> = brk.to_vec();
    b.sort_by(|a, c| a.total_cmp(c));
    b.dedup();
    let mean = integrate(&f, &b, &opts, "sigma_eff_numeric")?;
    Ok(k * mean * vg.powf(0.6) / v_p)
}

/// Slater-Kirkwood estimate of C6 between a gas atom and the particle.
pub fn c6_slater_kirkwood(gas: &GasSpec, particle: &ParticleSpec) -> Result<f64> {
    let np = particle.valence_electrons.ok_or_else(|| {
        Error::invalid(
            "particle.valence_electrons",
            "required for the Slater-Kirkwood estimate",
        )
    })?;
    if !(np > 0.0) || !(gas.valence_electrons > 0.0) {
        return Err(Error::invalid(
            "valence_electrons",
            "must be strictly positive",
        ));
    }
    let (ag, ap) = (gas.polarizability, particle.static_polarizability);
    let pref = ELEMENTARY_CHARGE * HBAR / (4.0 * PI * EPSILON_0 * ELECTRON_MASS).sqrt();
    Ok(1.5 * pref * ag * ap / ((ag / gas.valence_electrons).sqrt() + (ap / np).sqrt()))
}

/// C6 for a gas: the explicit value if given, else Slater-Kirkwood.
pub fn gas_c6(gas: &GasSpec, particle: &ParticleSpec) -> Result<f64> {
    match gas.c6 {
        Some(c) => Ok(c),
        None => c6_slater_kirkwood(gas, particle),
    }
}

/// Events per unit length along the beam.
#[derive(Debug, Clone, PartialEq)]
pub enum RateProfile {
    Constant(f64),
    /// Piecewise linear in z over [0, 2L].
    Tabulated {
        z: Vec<f64>,
        rate: Vec<f64>,
    },
    /// Localized events: (position z, expected number of events).
    Events(Vec<(f64, f64)>),
}

impl RateProfile {
    pub fn at(&self, z: f64) -> f64 {
        match self {
            RateProfile::Constant(r) => *r,
            RateProfile::Tabulated { z: zs, rate } => interpolate(zs, rate, z),
            RateProfile::Events(_) => 0.0,
        }
    }

    fn max(&self) -> f64 {
        match self {
            RateProfile::Constant(r) => *r,
            RateProfile::Tabulated { rate, .. } => rate.iter().copied().fold(0.0, f64::max),
            RateProfile::Events(_) => 0.0,
        }
    }
}

/// R = n sigma_eff, constant over the path.
pub fn collision_rate_profile(gas: &GasSpec, sigma_eff: f64) -> RateProfile {
    RateProfile::Constant(gas.number_density() * sigma_eff)
}

/// Angular model of the gas scattering amplitude.
#[derive(Debug, Clone, PartialEq)]
pub enum AmplitudeModel {
    /// |f|^2 independent of angle.
    Isotropic,
    /// Any event fully localizes: eta is 1 at zero separation and 0 elsewhere.
    FullLocalization,
    /// |f(cos theta)|^2 up to normalization, piecewise linear in cos theta.
    Tabulated {
        cos_theta: Vec<f64>,
        weight: Vec<f64>,
    },
}

/// sinc(x) = sin(x) / x with the removable point handled.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// 1 - sinc(x) without cancellation at small x.
fn one_minus_sinc(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // Taylor series; at the switch the omitted term is 1e-19 relative,
        // below the cancellation error of the direct form there
        let x2 = x * x;
        let (mut term, mut sum) = (1.0, 0.0);
        for k in 1..=6 {
            term *= -x2 / ((2 * k) * (2 * k + 1)) as f64;
            sum -= term;
        }
        sum
    } else {
        1.0 - x.sin() / x
    }
}

/// Collisional decoherence function for a gas with Maxwell-Boltzmann momenta.
pub fn eta_collisional(dx: f64, gas: &GasSpec, amplitude: &AmplitudeModel) -> Result<Complex64> {
    let sp = gas.momentum_width();
    Ok(Complex64::new(eta_gas(dx, sp, amplitude)?, 0.0))
}

fn eta_gas(dx: f64, sp: f64, amplitude: &AmplitudeModel) -> Result<f64> {
    match amplitude {
        AmplitudeModel::FullLocalization => Ok(if dx == 0.0 { 1.0 } else { 0.0 }),
        AmplitudeModel::Isotropic => {
            // int dP nu(P) sinc^2(P dx / hbar) with the Maxwell-Boltzmann
            // magnitude density integrates to (1 - exp(-2 k^2)) / (2 k^2).
            let k = sp * dx / HBAR;
            let k2 = k * k;
            if k2 < 1e-6 {
                Ok(1.0 - 2.0 * k2 / 2.0 + 4.0 * k2 * k2 / 6.0)
            } else {
                Ok(-(-2.0 * k2).exp_m1() / (2.0 * k2))
            }
        }
        AmplitudeModel::Tabulated { cos_theta, weight } => {
            if dx == 0.0 {
                return Ok(1.0);
            }
            // The Maxwell-Boltzmann average of sinc(2 P dx sin(theta/2) / hbar)
            // is exp(-k^2 (1 - cos theta)), leaving the angular average of a
            // piecewise-linear weight times an exponential, done per segment.
            let k = sp * dx / HBAR;
            let lambda = k * k;
            let norm = trapezoid(cos_theta, weight);
            let mut v = 0.0;
            for (c, w) in cos_theta.windows(2).zip(weight.windows(2)) {
                // u = 1 - cos theta runs over [a, a + h]; the weight is linear in u
                let (a, h) = (1.0 - c[1], c[1] - c[0]);
                let slope = (w[0] - w[1]) / h;
                let x = lambda * h;
                let e = (-lambda * a).exp();
                v += e * h * (w[1] * expm1_ratio(x) + slope * h * ramp_moment(x));
            }
            Ok(v / norm)
        }
    }
}

/// (1 - exp(-x)) / x
fn expm1_ratio(x: f64) -> f64 {
    if x < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// int_0^1 t exp(-x t) dt
fn ramp_moment(x: f64) -> f64 {
    if x < 0.5 {
        // sum_n (-x)^n / (n! (n + 2))
        let (mut term, mut sum) = (1.0, 0.5);
        for n in 1..30 {
            term *= -x / n as f64;
            sum += term / (n + 2) as f64;
        }
        sum
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (x * x)
    }
}

/// Frequency dependence of the absorption cross section.
#[derive(Debug, Clone, PartialEq)]
pub enum AbsorptionModel {
    /// sigma0 in m^2.
    Constant(f64),
    /// sigma0 (omega / omega0)^exponent.
    PowerLaw {
        sigma0: f64,
        omega0: f64,
        exponent: f64,
    },
    /// Piecewise linear over angular frequency, zero outside.
    Tabulated { omega: Vec<f64>, sigma: Vec<f64> },
}

impl AbsorptionModel {
    pub fn at(&self, omega: f64) -> f64 {
        match self {
            AbsorptionModel::Constant(s) => *s,
            AbsorptionModel::PowerLaw {
                sigma0,
                omega0,
                exponent,
            } => sigma0 * (omega / omega0).powf(*exponent),
            AbsorptionModel::Tabulated { omega: w, sigma } => {
                if omega < w[0] || omega > w[w.len() - 1] {
                    0.0
                } else {
                    interpolate(w, sigma, omega)
                }
            }
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            AbsorptionModel::Constant(s) => *s == 0.0,
            AbsorptionModel::PowerLaw { sigma0, .. } => *sigma0 == 0.0,
            AbsorptionModel::Tabulated { sigma, .. } => sigma.iter().all(|s| *s == 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSpec {
    /// Microcanonical temperature T* at the source, K.
    pub temperature: f64,
    /// Heat capacity C_V, J/K.
    pub heat_capacity: f64,
    pub absorption: AbsorptionModel,
    pub enable_cooling: bool,
}

impl ThermalSpec {
    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::invalid(
                format!("{path}.temperature"),
                "must be strictly positive",
            ));
        }
        if !(self.heat_capacity > 0.0) {
            return Err(Error::invalid(
                format!("{path}.heat_capacity"),
                "must be strictly positive",
            ));
        }
        let neg = match &self.absorption {
            AbsorptionModel::Constant(s) => *s < 0.0,
            AbsorptionModel::PowerLaw { sigma0, omega0, .. } => *sigma0 < 0.0 || *omega0 <= 0.0,
            AbsorptionModel::Tabulated { omega, sigma } => {
                omega.len() < 2
                    || omega.len() != sigma.len()
                    || sigma.iter().any(|s| *s < 0.0)
                    || omega.windows(2).any(|w| w[1] <= w[0])
            }
        };
        if neg {
            return Err(Error::invalid(
                format!("{path}.absorption"),
                "cross section must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Thermal emission rate per unit angular frequency (1/s per rad/s) at
/// internal temperature `temperature`.
pub fn thermal_spectral_rate(omega: f64, thermal: &ThermalSpec, temperature: f64) -> f64 {
    let cv = thermal.heat_capacity / BOLTZMANN;
    let x = HBAR * omega / (BOLTZMANN * temperature);
    omega * omega / (PI * PI * SPEED_OF_LIGHT * SPEED_OF_LIGHT)
        * thermal.absorption.at(omega)
        * (-x - x * x / (2.0 * cv)).exp()
}

// Upper end of the emission spectrum in units of k T / hbar.
const X_MAX: f64 = 60.0;
const X_BREAKS: [f64; 8] = [0.0, 1.0, 2.5, 5.0, 10.0, 20.0, 35.0, X_MAX];

/// `abs_tol` is in units of the result.
fn spectral_integral(
    thermal: &ThermalSpec,
    temperature: f64,
    weight: impl Fn(f64) -> f64,
    abs_tol: f64,
) -> Result<f64> {
    let scale = BOLTZMANN * temperature / HBAR;
    let mut breaks: Vec<f64> = X_BREAKS.to_vec();
    if let AbsorptionModel::Tabulated { omega, .. } = &thermal.absorption {
        breaks.extend(
            omega
                .iter()
                .map(|w| w / scale)
                .filter(|x| *x > 0.0 && *x < X_MAX),
        );
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup();
    }
    let f = |x: f64| {
        let w = x * scale;
        thermal_spectral_rate(w, thermal, temperature) * weight(w)
    };
    let opts = QuadOptions {
        abs_tol: abs_tol / scale,
        rel_tol: 1e-11,
        max_intervals: 1 << 16,
    };
    Ok(integrate(&f, &breaks, &opts, "thermal spectrum")? * scale)
}

/// Total emission rate in 1/s.
pub fn thermal_total_rate(thermal: &ThermalSpec, temperature: f64) -> Result<f64> {
    if thermal.absorption.is_zero() {
        return Ok(0.0);
    }
    spectral_integral(thermal, temperature, |_| 1.0, 0.0)
}

/// Radiated power in W.
pub fn thermal_power(thermal: &ThermalSpec, temperature: f64) -> Result<f64> {
    if thermal.absorption.is_zero() {
        return Ok(0.0);
    }
    spectral_integral(thermal, temperature, |w| HBAR * w, 0.0)
}

/// Thermal-emission decoherence function at a fixed internal temperature.
pub fn eta_thermal(dx: f64, thermal: &ThermalSpec, temperature: f64) -> Result<Complex64> {
    let total = thermal_total_rate(thermal, temperature)?;
    if total == 0.0 || dx == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    // far out the sinc weight oscillates and the result is a small difference
    let v = spectral_integral(
        thermal,
        temperature,
        |w| sinc(w * dx / SPEED_OF_LIGHT),
        1e-13 * total,
    )?;
    Ok(Complex64::new(v / total, 0.0))
}

/// Internal temperature along the beam path.
#[derive(Debug, Clone, PartialEq)]
pub struct CoolingProfile {
    pub z: Vec<f64>,
    pub temperature: Vec<f64>,
    slope: Vec<f64>,
}

impl CoolingProfile {
    pub fn constant(temperature: f64, length: f64) -> Self {
        CoolingProfile {
            z: vec![0.0, length],
            temperature: vec![temperature; 2],
            slope: vec![0.0; 2],
        }
    }

    /// Cubic Hermite interpolation through the stored nodes.
    pub fn at(&self, z: f64) -> f64 {
        let n = self.z.len();
        if z <= self.z[0] {
            return self.temperature[0];
        }
        if z >= self.z[n - 1] {
            return self.temperature[n - 1];
        }
        let i = match self.z.binary_search_by(|p| p.total_cmp(&z)) {
            Ok(i) => return self.temperature[i],
            Err(i) => i - 1,
        };
        let h = self.z[i + 1] - self.z[i];
        let t = (z - self.z[i]) / h;
        let (y0, y1) = (self.temperature[i], self.temperature[i + 1]);
        let (m0, m1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }
}

/// Integrates dT/dz = -P(T) / (v_z C_V) over [0, length] with classical RK4,
/// doubling the step count from 64 until the end temperature settles to 1e-6.
pub fn cooling_profile(thermal: &ThermalSpec, v_z: f64, length: f64) -> Result<CoolingProfile> {
    let rhs = |t: f64| -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::numeric(
                "cooling_profile",
                format!("internal temperature fell to {t} K"),
            ));
        }
        Ok(-thermal_power(thermal, t)? / (v_z * thermal.heat_capacity))
    };
    let run = |n: usize| -> Result<CoolingProfile> {
        let h = length / n as f64;
        let mut z = Vec::with_capacity(n + 1);
        let mut temp = Vec::with_capacity(n + 1);
        let mut slope = Vec::with_capacity(n + 1);
        let mut t = thermal.temperature;
        for i in 0..=n {
            z.push(h * i as f64);
            temp.push(t);
            let k1 = rhs(t)?;
            slope.push(k1);
            if i == n {
                break;
            }
            let k2 = rhs(t + 0.5 * h * k1)?;
            let k3 = rhs(t + 0.5 * h * k2)?;
            let k4 = rhs(t + h * k3)?;
            t += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if !(t > 0.0) {
            return Err(Error::numeric(
                "cooling_profile",
                format!("internal temperature fell to {t} K"),
            ));
        }
        Ok(CoolingProfile {
            z,
            temperature: temp,
            slope,
        })
    };
    let mut n = 64;
    let mut coarse = run(n)?;
    loop {
        let fine = run(2 * n)?;
        let (a, b) = (coarse.temperature[n], fine.temperature[2 * n]);
        if (a - b).abs() <= 1e-6 * b.abs() {
            return Ok(fine);
        }
        if n >= 1 << 16 {
            return Err(Error::numeric(
                "cooling_profile",
                "step halving did not settle",
            ));
        }
        n *= 2;
        coarse = fine;
    }
}

pub type EtaFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;
pub type KickFn = Arc<dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync>;

/// A user-supplied decoherence function with an optional sampler of the
/// corresponding x-kick distribution (needed only by the Monte-Carlo oracle).
#[derive(Clone)]
pub struct CustomMechanism {
    pub label: String,
    pub eta: EtaFn,
    pub kick: Option<KickFn>,
}

impl fmt::Debug for CustomMechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomMechanism")
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Mechanism {
    Collisional {
        gas: GasSpec,
        c6: f64,
        amplitude: AmplitudeModel,
    },
    Thermal(ThermalSpec),
    Custom(CustomMechanism),
}

#[derive(Debug, Clone)]
pub struct DecoherenceScenario {
    pub mechanism: Mechanism,
    /// Overrides the rate implied by the mechanism. Required for custom
    /// mechanisms; not allowed for thermal emission, whose rate follows T(z).
    pub profile: Option<RateProfile>,
}

impl DecoherenceScenario {
    pub fn collisional(gas: GasSpec, c6: f64, amplitude: AmplitudeModel) -> Self {
        DecoherenceScenario {
            mechanism: Mechanism::Collisional { gas, c6, amplitude },
            profile: None,
        }
    }

    pub fn thermal(thermal: ThermalSpec) -> Self {
        DecoherenceScenario {
            mechanism: Mechanism::Thermal(thermal),
            profile: None,
        }
    }

    pub fn custom(mechanism: CustomMechanism, profile: RateProfile) -> Self {
        DecoherenceScenario {
            mechanism: Mechanism::Custom(mechanism),
            profile: Some(profile),
        }
    }

    pub fn with_profile(mut self, profile: RateProfile) -> Self {
        self.profile = Some(profile);
        self
    }

    pub fn name(&self) -> &str {
        match &self.mechanism {
            Mechanism::Collisional { .. } => "collisional",
            Mechanism::Thermal(_) => "thermal",
            Mechanism::Custom(c) => &c.label,
        }
    }

    /// Decoherence function at the start of the path.
    pub fn eta(&self, dx: f64) -> Result<Complex64> {
        match &self.mechanism {
            Mechanism::Collisional { gas, amplitude, .. } => eta_collisional(dx, gas, amplitude),
            Mechanism::Thermal(t) => eta_thermal(dx, t, t.temperature),
            Mechanism::Custom(c) => Ok((c.eta)(dx)),
        }
    }

    /// Resolves everything that depends on the velocity: rates and the
    /// cooling curve.
    pub fn prepare(&self, ctx: &DecoherenceContext) -> Result<PreparedScenario> {
        let length = 2.0 * ctx.separation;
        let kind = match &self.mechanism {
            Mechanism::Collisional { gas, c6, amplitude } => {
                let rate = match &self.profile {
                    Some(p) => p.clone(),
                    None => {
                        collision_rate_profile(gas, sigma_eff(ctx.kinematics.v_z, gas, *c6).value)
                    }
                };
                Prepared::Rate {
                    rate,
                    eta: EtaModel::Gas {
                        sp: gas.momentum_width(),
                        amplitude: amplitude.clone(),
                    },
                }
            }
            Mechanism::Custom(c) => Prepared::Rate {
                rate: self.profile.clone().ok_or_else(|| {
                    Error::invalid(
                        "decoherence.profile",
                        "a custom mechanism needs an explicit rate profile",
                    )
                })?,
                eta: EtaModel::Custom(c.clone()),
            },
            Mechanism::Thermal(t) => {
                if self.profile.is_some() {
                    return Err(Error::UnsupportedScenario(
                        "thermal emission takes its rate from the emission spectrum".into(),
                    ));
                }
                let cooling = if t.enable_cooling {
                    cooling_profile(t, ctx.kinematics.v_z, length)?
                } else {
                    CoolingProfile::constant(t.temperature, length)
                };
                Prepared::Thermal {
                    spec: t.clone(),
                    cooling,
                }
            }
        };
        Ok(PreparedScenario { ctx: *ctx, kind })
    }

    /// Suppression exponent for order m (see [`suppression_exponent`]).
    pub fn exponent(&self, m: i64, ctx: &DecoherenceContext) -> Result<Complex64> {
        self.prepare(ctx)?.exponent(m)
    }
}

#[derive(Debug, Clone)]
enum EtaModel {
    Gas { sp: f64, amplitude: AmplitudeModel },
    Custom(CustomMechanism),
}

impl EtaModel {
    fn eval(&self, dx: f64) -> Result<Complex64> {
        match self {
            EtaModel::Gas { sp, amplitude } => {
                Ok(Complex64::new(eta_gas(dx, *sp, amplitude)?, 0.0))
            }
            EtaModel::Custom(c) => Ok((c.eta)(dx)),
        }
    }
}

#[derive(Debug, Clone)]
enum Prepared {
    Rate {
        rate: RateProfile,
        eta: EtaModel,
    },
    Thermal {
        spec: ThermalSpec,
        cooling: CoolingProfile,
    },
}

/// A scenario bound to one velocity.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    ctx: DecoherenceContext,
    kind: Prepared,
}

/// One sampled decoherence event along a Monte-Carlo trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kick {
    /// Transverse momentum transfer along x, kg m/s.
    Momentum(f64),
    /// Complete loss of transverse coherence: the fringe position is randomized.
    Randomize,
}

impl PreparedScenario {
    pub fn exponent(&self, m: i64) -> Result<Complex64> {
        if m == 0 {
            return Ok(Complex64::default());
        }
        let ctx = self.ctx;
        self.integrate_path(|z| ctx.separation_for_order(m, z))
    }

    /// int R(z) [1 - eta(dx(z))] dz over [0, 2L] for a caller-chosen path separation.
    fn integrate_path(&self, dx: impl Fn(f64) -> f64 + Sync) -> Result<Complex64> {
        let l = self.ctx.separation;
        let opts = QuadOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_intervals: 1 << 18,
        };
        match &self.kind {
            Prepared::Rate { rate, eta } => {
                let f = |z: f64| -> Complex64 {
                    let r = rate.at(z);
                    if r == 0.0 {
                        return Complex64::default();
                    }
                    match eta.eval(-dx(z)) {
                        Ok(e) => (Complex64::new(1.0, 0.0) - e) * r,
                        Err(_) => Complex64::new(f64::NAN, 0.0),
                    }
                };
                let v = match rate {
                    RateProfile::Constant(r) => {
                        if *r == 0.0 {
                            return Ok(Complex64::default());
                        }
                        let g = |z: f64| f(z);
                        integrate_complex(&g, &[0.0, l], &opts, "suppression exponent")?
                            + integrate_complex(&g, &[l, 2.0 * l], &opts, "suppression exponent")?
                    }
                    RateProfile::Tabulated { z, .. } => {
                        let mut b: Vec<f64> = vec![0.0, l, 2.0 * l];
                        b.extend(z.iter().copied().filter(|x| *x > 0.0 && *x < 2.0 * l));
                        b.sort_by(|a, c| a.total_cmp(c));
                        b.dedup();
                        integrate_complex(&f, &b, &opts, "suppression exponent")?
                    }
                    RateProfile::Events(events) => {
                        let mut s = Complex64::default();
                        for (z, n) in events {
                            s += (Complex64::new(1.0, 0.0) - eta.eval(-dx(*z))?) * *n;
                        }
                        s
                    }
                };
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::numeric(
                        "suppression exponent",
                        "decoherence function failed",
                    ));
                }
                Ok(v)
            }
            Prepared::Thermal { spec, cooling } => {
                if spec.absorption.is_zero() {
                    return Ok(Complex64::default());
                }
                let v_z = self.ctx.kinematics.v_z;
                let inner = |z: f64| -> f64 {
                    let t = cooling.at(z);
                    let d = dx(z);
                    spectral_integral(spec, t, |w| one_minus_sinc(w * d / SPEED_OF_LIGHT), 0.0)
                        .unwrap_or(f64::NAN)
                };
                let o = QuadOptions {
                    abs_tol: 0.0,
                    rel_tol: 1e-9,
                    max_intervals: 1 << 14,
                };
                let v = integrate(
                    &inner,
                    &[0.0, 0.5 * l, l, 1.5 * l, 2.0 * l],
                    &o,
                    "thermal exponent",
                )? / v_z;
                if !v.is_finite() {
                    return Err(Error::numeric(
                        "thermal exponent",
                        "spectral integral failed",
                    ));
                }
                Ok(Complex64::new(v, 0.0))
            }
        }
    }

    /// Expected number of events per unit length at z (thermal: at T(z)).
    pub fn rate_at(&self, z: f64) -> Result<f64> {
        match &self.kind {
            Prepared::Rate { rate, .. } => Ok(rate.at(z)),
            Prepared::Thermal { spec, cooling } => {
                Ok(thermal_total_rate(spec, cooling.at(z))? / self.ctx.kinematics.v_z)
            }
        }
    }

    /// Samples the decoherence events of one trajectory.
    pub fn sample_events(
        &self,
        rng: &mut dyn RngCore,
        sampler: &KickSampler,
    ) -> Result<Vec<(f64, Kick)>> {
        let length = 2.0 * self.ctx.separation;
        let mut out = Vec::new();
        match (&self.kind, sampler) {
            (
                Prepared::Rate {
                    rate: RateProfile::Events(events),
                    ..
                },
                _,
            ) => {
                for (z, n) in events {
                    if *n <= 0.0 {
                        continue;
                    }
                    let count = Poisson::new(*n)
                        .map_err(|e| Error::numeric("sample_events", e.to_string()))?
                        .sample(rng) as usize;
                    for _ in 0..count {
                        out.push((*z, sampler.kick(rng, *z, self)?));
                    }
                }
            }
            _ => {
                let majorant = sampler.majorant;
                if majorant <= 0.0 {
                    return Ok(out);
                }
                let gap = Exp::new(majorant)
                    .map_err(|e| Error::numeric("sample_events", e.to_string()))?;
                let mut z = 0.0;
                loop {
                    z += gap.sample(rng);
                    if z >= length {
                        break;
                    }
                    if let Some(k) = sampler.accept(rng, z, self)? {
                        out.push((z, k));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Builds the Monte-Carlo kick sampler; fails for mechanisms whose
    /// decoherence function is not the characteristic function of a kick
    /// distribution.
    pub fn kick_sampler(&self) -> Result<KickSampler> {
        match &self.kind {
            Prepared::Rate { rate, eta } => {
                let model = match eta {
                    EtaModel::Gas { sp, amplitude } => match amplitude {
                        AmplitudeModel::FullLocalization => KickModel::Randomize,
                        AmplitudeModel::Isotropic => KickModel::Gas {
                            sp: *sp,
                            angles: None,
                        },
                        AmplitudeModel::Tabulated { cos_theta, weight } => KickModel::Gas {
                            sp: *sp,
                            angles: Some(PiecewiseLinearSampler::new(cos_theta, weight)?),
                        },
                    },
                    EtaModel::Custom(c) => match &c.kick {
                        Some(k) => KickModel::Custom(k.clone()),
                        None => {
                            return Err(Error::UnsupportedScenario(format!(
                                "{}: no kick distribution supplied for Monte-Carlo sampling",
                                c.label
                            )))
                        }
                    },
                };
                Ok(KickSampler {
                    majorant: rate.max(),
                    model,
                })
            }
            Prepared::Thermal { spec, cooling } => {
                let t0 = cooling.temperature.iter().copied().fold(0.0, f64::max);
                let v_z = self.ctx.kinematics.v_z;
                let majorant = thermal_total_rate(spec, t0)? / v_z;
                // proposal spectrum at the hottest point of the path
                let scale = BOLTZMANN * t0 / HBAR;
                let n = 4096;
                let xs: Vec<f64> = (0..=n).map(|i| X_MAX * i as f64 / n as f64).collect();
                let ws: Vec<f64> = xs
                    .iter()
                    .map(|x| thermal_spectral_rate(x * scale, spec, t0))
                    .collect();
                Ok(KickSampler {
                    majorant,
                    model: KickModel::Photon {
                        spectrum: PiecewiseLinearSampler::new(&xs, &ws)?,
                        scale,
                        t0,
                    },
                })
            }
        }
    }
}

enum KickModel {
    Randomize,
    Gas {
        sp: f64,
        angles: Option<PiecewiseLinearSampler>,
    },
    Photon {
        spectrum: PiecewiseLinearSampler,
        scale: f64,
        t0: f64,
    },
    Custom(KickFn),
}

/// Draws event positions and kicks for the Monte-Carlo oracle.
pub struct KickSampler {
    majorant: f64,
    model: KickModel,
}

impl fmt::Debug for KickSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KickSampler")
            .field("majorant", &self.majorant)
            .finish_non_exhaustive()
    }
}

impl KickSampler {
    fn accept(&self, rng: &mut dyn RngCore, z: f64, sc: &PreparedScenario) -> Result<Option<Kick>> {
        match (&self.model, &sc.kind) {
            (
                KickModel::Photon {
                    spectrum,
                    scale,
                    t0,
                },
                Prepared::Thermal { spec, cooling },
            ) => {
                // thin jointly in (z, omega) against the hottest spectrum
                let w = spectrum.sample(rng) * scale;
                let t = cooling.at(z);
                let p = if t == *t0 {
                    1.0
                } else {
                    thermal_spectral_rate(w, spec, t) / thermal_spectral_rate(w, spec, *t0)
                };
                if rng.gen::<f64>() >= p {
                    return Ok(None);
                }
                let u: f64 = rng.gen_range(-1.0..1.0);
                Ok(Some(Kick::Momentum(HBAR * w / SPEED_OF_LIGHT * u)))
            }
            _ => {
                let r = sc.rate_at(z)?;
                if rng.gen::<f64>() * self.majorant >= r {
                    return Ok(None);
                }
                self.kick(rng, z, sc).map(Some)
            }
        }
    }

    fn kick(&self, rng: &mut dyn RngCore, _z: f64, _sc: &PreparedScenario) -> Result<Kick> {
        Ok(match &self.model {
            KickModel::Randomize => Kick::Randomize,
            KickModel::Gas { sp, angles } => {
                let mut p2 = 0.0;
                for _ in 0..3 {
                    let g: f64 = StandardNormal.sample(rng);
                    p2 += g * g;
                }
                let p = sp * p2.sqrt();
                let c = match angles {
                    None => rng.gen_range(-1.0..1.0),
                    Some(s) => s.sample(rng),
                };
                // |Q| = 2 P sin(theta / 2), isotropic direction: x-projection uniform
                let q = 2.0 * p * (0.5 * (1.0 - c)).max(0.0).sqrt();
                Kick::Momentum(q * rng.gen_range(-1.0..1.0))
            }
            KickModel::Photon {
                spectrum, scale, ..
            } => {
                let w = spectrum.sample(rng) * scale;
                Kick::Momentum(HBAR * w / SPEED_OF_LIGHT * rng.gen_range(-1.0..1.0))
            }
            KickModel::Custom(k) => Kick::Momentum(k(rng)),
        })
    }
}

/// Exact inverse-CDF sampling from a piecewise-linear density.
#[derive(Debug, Clone)]
struct PiecewiseLinearSampler {
    x: Vec<f64>,
    w: Vec<f64>,
    cdf: Vec<f64>,
}

impl PiecewiseLinearSampler {
    fn new(x: &[f64], w: &[f64]) -> Result<Self> {
        if x.len() < 2 || x.len() != w.len() || w.iter().any(|v| *v < 0.0) {
            return Err(Error::invalid(
                "table",
                "needs at least two rows with non-negative weights",
            ));
        }
        let mut cdf = vec![0.0];
        for i in 0..x.len() - 1 {
            let c = cdf[i] + 0.5 * (x[i + 1] - x[i]) * (w[i] + w[i + 1]);
            cdf.push(c);
        }
        if !(cdf[cdf.len() - 1] > 0.0) {
            return Err(Error::invalid("table", "weights integrate to zero"));
        }
        Ok(PiecewiseLinearSampler {
            x: x.to_vec(),
            w: w.to_vec(),
            cdf,
        })
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let total = self.cdf[self.cdf.len() - 1];
        let r = rng.gen::<f64>() * total;
        let i = match self.cdf.binary_search_by(|c| c.total_cmp(&r)) {
            Ok(i) => return self.x[i.min(self.x.len() - 1)],
            Err(i) => (i - 1).min(self.x.len() - 2),
        };
        let h = self.x[i + 1] - self.x[i];
        let (w0, w1) = (self.w[i], self.w[i + 1]);
        let rem = r - self.cdf[i];
        let a = 0.5 * (w1 - w0) / h;
        // solve a t^2 + w0 t = rem in the stable form
        let disc = (w0 * w0 + 4.0 * a * rem).max(0.0);
        let t = if w0 + disc.sqrt() > 0.0 {
            2.0 * rem / (w0 + disc.sqrt())
        } else {
            0.0
        };
        self.x[i] + t.clamp(0.0, h)
    }
}

/// Suppression exponent int R(z) [1 - eta(-m (d/2) l(z) / L_lambda)] dz.
pub fn suppression_exponent(
    m: i64,
    scenario: &DecoherenceScenario,
    ctx: &DecoherenceContext,
) -> Result<Complex64> {
    scenario.exponent(m, ctx)
}

/// B^_m = B~_m prod exp(-exponent). The order-zero term is passed through
/// untouched.
pub fn apply_decoherence(
    b: &CoeffSet,
    scenarios: &[DecoherenceScenario],
    ctx: &DecoherenceContext,
) -> Result<CoeffSet> {
    let prepared = scenarios
        .iter()
        .map(|s| s.prepare(ctx))
        .collect::<Result<Vec<_>>>()?;
    let mut err = None;
    let out = CoeffSet::from_fn(
        b.max_order(),
        CoeffTag {
            regime: b.tag.regime,
            stage: Stage::Decohered,
        },
        |m| {
            let mut v = b.value(m);
            for p in &prepared {
                match p.exponent(m) {
                    Ok(e) => v *= (-e).exp(),
                    Err(e) => err = Some(e),
                }
            }
            v
        },
    );
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// V = V0 exp(-int R(z) [1 - eta(-d l(z) / L_lambda)] dz), the reduction of a
/// sinusoidal fringe pattern.
pub fn reduced_visibility(
    v0: f64,
    scenario: &DecoherenceScenario,
    ctx: &DecoherenceContext,
) -> Result<f64> {
    let p = scenario.prepare(ctx)?;
    let (d, lt) = (ctx.period, ctx.kinematics.talbot_length);
    let e = p.integrate_path(|z| d * ctx.lever(z) / lt)?;
    Ok(v0 * (-e.re).exp())
}

/// Linear interpolation, clamped at the ends; `xs` strictly increasing.
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|p| *p <= x) - 1;
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_kinematics;
    use crate::units::{amu, nm3, ATOMIC_MASS_UNIT};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn argon() -> GasSpec {
        GasSpec {
            mass: amu(39.948),
            temperature: 300.0,
            pressure: 1e-5,
            polarizability: nm3(1.6411),
            valence_electrons: 8.0,
            c6: None,
        }
    }

    fn particle() -> ParticleSpec {
        ParticleSpec {
            mass: 720.0 * ATOMIC_MASS_UNIT,
            static_polarizability: nm3(85.0),
            dynamic_polarizability: None,
            valence_electrons: Some(240.0),
            heat_capacity: None,
            initial_internal_temperature: None,
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

    fn context(v: f64) -> DecoherenceContext {
        let p = particle();
        let d = 1e-6;
        DecoherenceContext {
            separation: 0.22,
            period: d,
            kinematics: derive_kinematics(&p, v, d).unwrap(),
        }
    }

    #[test]
    fn vdw_prefactors_match_high_precision() {
        let k = sigma_total_vdw(8.0 * HBAR / (3.0 * PI), 1.0);
        assert!((k / 7.569_867_537_732_577 - 1.0).abs() < 1e-14);
        let g = GasSpec {
            temperature: 1.0,
            mass: 2.0 * BOLTZMANN,
            ..argon()
        };
        // thermal speed 1, C6 chosen so the bracket is 1, and x -> 0
        let s = sigma_eff(1e-9, &g, 2.0 * HBAR / (3.0 * PI));
        assert!((s.value * 1e-9 / 4.569_282_494_788_091 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn total_cross_section_scales_with_c6() {
        let a = sigma_total_vdw(1e-76, 300.0);
        let b = sigma_total_vdw(32e-76, 300.0);
        assert!((b / a - 4.0).abs() < 1e-13);
    }

    #[test]
    fn effective_cross_section_matches_thermal_average() {
        let g = argon();
        let c6 = 1e-76;
        let v = 0.2 * g.thermal_speed();
        let asym = sigma_eff(v, &g, c6);
        let brute = sigma_eff_numeric(v, &g, c6).unwrap();
        assert!(!asym.out_of_regime);
        assert!(
            (asym.value / brute - 1.0).abs() < 1e-3,
            "{} vs {}",
            asym.value,
            brute
        );
    }

    #[test]
    fn quadratic_correction_is_five_percent_at_half_speed() {
        let g = argon();
        let v = 0.5 * g.thermal_speed();
        let lead = 4.569_282_494_788_091
            * (3.0 * PI * 1e-76 / (2.0 * HBAR)).powf(0.4)
            * g.thermal_speed().powf(0.6)
            / v;
        assert!((sigma_eff(v, &g, 1e-76).value / lead - 1.05).abs() < 1e-12);
    }

    #[test]
    fn slater_kirkwood_symmetric_case() {
        let p = particle();
        let g = GasSpec {
            polarizability: p.static_polarizability,
            valence_electrons: 240.0,
            ..argon()
        };
        let c6 = c6_slater_kirkwood(&g, &p).unwrap();
        let pref = ELEMENTARY_CHARGE * HBAR / (4.0 * PI * EPSILON_0 * ELECTRON_MASS).sqrt();
        let expect = 0.75 * pref * p.static_polarizability.powf(1.5) * 240f64.sqrt();
        assert!((c6 / expect - 1.0).abs() < 1e-13);
    }

    #[test]
    fn collision_rate_is_density_times_cross_section() {
        let g = GasSpec {
            pressure: crate::units::mbar(1e-7),
            ..argon()
        };
        let n = 1e-5 / (1.380_649e-23 * 300.0);
        match collision_rate_profile(&g, 2e-17) {
            RateProfile::Constant(r) => assert!((r / (n * 2e-17) - 1.0).abs() < 1e-14),
            _ => unreachable!(),
        }
    }

    #[test]
    fn isotropic_eta_matches_angular_quadrature() {
        let g = argon();
        let flat = AmplitudeModel::Tabulated {
            cos_theta: vec![-1.0, 1.0],
            weight: vec![1.0, 1.0],
        };
        for dx in [0.0, 1e-12, 5e-12, 2e-11, 1e-10] {
            let a = eta_collisional(dx, &g, &AmplitudeModel::Isotropic)
                .unwrap()
                .re;
            let b = eta_collisional(dx, &g, &flat).unwrap().re;
            assert!((a - b).abs() < 1e-12, "dx {dx}: {a} vs {b}");
        }
    }

    #[test]
    fn one_minus_sinc_is_continuous_across_branches() {
        for x in [1e-3, 0.1] {
            let (lo, hi) = (
                one_minus_sinc(x * (1.0 - 1e-12)),
                one_minus_sinc(x * (1.0 + 1e-12)),
            );
            // the function grows like x^2 across the tiny step
            assert!(
                (hi / lo - 1.0 - 4e-12).abs() < 2e-13,
                "jump at {x}: {lo} vs {hi}"
            );
        }
        // four Taylor terms at x = 0.05
        let x: f64 = 0.05;
        let series =
            x.powi(2) / 6.0 - x.powi(4) / 120.0 + x.powi(6) / 5040.0 - x.powi(8) / 362_880.0;
        assert!((one_minus_sinc(x) / series - 1.0).abs() < 1e-13);
    }

    #[test]
    fn tabulated_eta_matches_nested_quadrature() {
        // brute force: Maxwell-Boltzmann momenta and angles, both by quadrature
        let g = argon();
        let (cs, ws) = (vec![-1.0, -0.2, 0.5, 1.0], vec![0.3, 1.0, 2.0, 5.0]);
        let model = AmplitudeModel::Tabulated {
            cos_theta: cs.clone(),
            weight: ws.clone(),
        };
        let sp = g.momentum_width();
        let opts = QuadOptions::with_abs_tol(1e-12);
        for k in [0.05, 0.5, 1.0, 2.5] {
            let dx = k * HBAR / sp;
            let inner = |p: f64| {
                let f = |c: f64| {
                    interpolate(&cs, &ws, c) * sinc(2.0 * p * k * (0.5 * (1.0 - c)).sqrt())
                };
                integrate(&f, &cs, &opts, "angles").unwrap()
            };
            let outer = |p: f64| (2.0 / PI).sqrt() * p * p * (-0.5 * p * p).exp() * inner(p);
            let brute = integrate(&outer, &[0.0, 2.0, 4.0, 8.0, 14.0], &opts, "momenta").unwrap()
                / trapezoid(&cs, &ws);
            let fast = eta_collisional(dx, &g, &model).unwrap().re;
            assert!((fast - brute).abs() < 1e-9, "k {k}: {fast} vs {brute}");
        }
    }

    #[test]
    fn isotropic_eta_is_characteristic_function_of_sampled_kicks() {
        let g = argon();
        let sc = DecoherenceScenario::collisional(g.clone(), 1e-76, AmplitudeModel::Isotropic);
        let prep = sc.prepare(&context(100.0)).unwrap();
        let sampler = prep.kick_sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dx = 1.5 * HBAR / g.momentum_width();
        let n = 200_000;
        let mut acc = 0.0;
        for _ in 0..n {
            match sampler.kick(&mut rng, 0.0, &prep).unwrap() {
                Kick::Momentum(q) => acc += (q * dx / HBAR).cos(),
                Kick::Randomize => unreachable!(),
            }
        }
        let mc = acc / n as f64;
        let exact = eta_collisional(dx, &g, &AmplitudeModel::Isotropic)
            .unwrap()
            .re;
        assert!(
            (mc - exact).abs() < 5.0 / (n as f64).sqrt(),
            "{mc} vs {exact}"
        );
    }

    #[test]
    fn canonical_limit_is_boltzmann() {
        let t = thermal(1e-21, 1e9);
        for x in [0.1, 1.0, 5.0, 20.0] {
            let w = x * BOLTZMANN * t.temperature / HBAR;
            let r = thermal_spectral_rate(w, &t, t.temperature);
            let boltz = w * w / (PI * PI * SPEED_OF_LIGHT * SPEED_OF_LIGHT) * 1e-21 * (-x).exp();
            assert!((r / boltz - 1.0).abs() < 1e-6);
        }
        assert_eq!(thermal_spectral_rate(0.0, &t, t.temperature), 0.0);
        let finite = thermal(1e-21, 100.0);
        let w = 10.0 * BOLTZMANN * t.temperature / HBAR;
        assert!(thermal_spectral_rate(w, &finite, 1500.0) <= thermal_spectral_rate(w, &t, 1500.0));
    }

    #[test]
    fn dark_particle_keeps_its_temperature() {
        let t = thermal(0.0, 200.0);
        let c = cooling_profile(&t, 100.0, 0.5).unwrap();
        assert!(c.temperature.iter().all(|x| *x == 1500.0));
    }

    #[test]
    fn halving_heat_capacity_doubles_cooling_rate() {
        let a = thermal(1e-21, 4000.0);
        let b = thermal(1e-21, 2000.0);
        let sa = cooling_profile(&a, 100.0, 0.5).unwrap().slope[0];
        let sb = cooling_profile(&b, 100.0, 0.5).unwrap().slope[0];
        // the emission spectrum also depends weakly on C_V
        assert!(sa < 0.0 && (sb / sa - 2.0).abs() < 0.05, "{}", sb / sa);
    }

    #[test]
    fn cooling_matches_stefan_boltzmann_solution() {
        // canonical limit with constant sigma: P = a T^4, so 1/T^3 = 1/T0^3 + 3 a z / (v C)
        let t = thermal(4e-16, 1e9);
        let v = 50.0;
        let c = cooling_profile(&t, v, 0.5).unwrap();
        let a = 6.0 * 4e-16 * BOLTZMANN.powi(4) / (PI * PI * SPEED_OF_LIGHT.powi(2) * HBAR.powi(3));
        let exact =
            |z: f64| (1500f64.powi(-3) + 3.0 * a * z / (v * t.heat_capacity)).powf(-1.0 / 3.0);
        for z in [0.0, 0.1, 0.25, 0.4, 0.5] {
            assert!(
                (c.at(z) / exact(z) - 1.0).abs() < 1e-6,
                "z {z}: {} vs {}",
                c.at(z),
                exact(z)
            );
        }
        assert!(exact(0.5) < 1300.0);
    }

    #[test]
    fn thermal_exponent_vanishes_for_short_separations() {
        let t = thermal(1e-26, 200.0);
        let sc = DecoherenceScenario::thermal(t);
        let mut ctx = context(100.0);
        let e1 = sc.exponent(1, &ctx).unwrap().re;
        ctx.period *= 1e-3;
        let e2 = sc.exponent(1, &ctx).unwrap().re;
        assert!(e1 > 0.0);
        assert!(e2 < 1e-5 * e1, "{e1} {e2}");
    }

    #[test]
    fn events_profile_uses_poisson_exponent() {
        let custom = CustomMechanism {
            label: "full".into(),
            eta: Arc::new(|dx| Complex64::new(if dx == 0.0 { 1.0 } else { 0.0 }, 0.0)),
            kick: None,
        };
        let ctx = context(100.0);
        let sc =
            DecoherenceScenario::custom(custom, RateProfile::Events(vec![(0.1, 0.3), (0.3, 0.2)]));
        let e = sc.exponent(2, &ctx).unwrap();
        assert!((e.re - 0.5).abs() < 1e-15);
        assert_eq!(sc.exponent(0, &ctx).unwrap(), Complex64::default());
        assert!(matches!(
            sc.prepare(&ctx).unwrap().kick_sampler(),
            Err(Error::UnsupportedScenario(_))
        ));
    }

    #[test]
    fn full_localization_matches_event_probability() {
        let g = argon();
        let ctx = context(100.0);
        let sc = DecoherenceScenario::collisional(g, 1e-76, AmplitudeModel::FullLocalization)
            .with_profile(RateProfile::Constant(2.0));
        let e = sc.exponent(1, &ctx).unwrap().re;
        // every event away from the ends destroys coherence
        assert!((e - 2.0 * 2.0 * ctx.separation).abs() < 1e-9);
        let v = reduced_visibility(0.8, &sc, &ctx).unwrap();
        assert!((v - 0.8 * (-e).exp()).abs() < 1e-9);
    }

    #[test]
    fn piecewise_linear_sampler_reproduces_mean() {
        let s = PiecewiseLinearSampler::new(&[0.0, 1.0, 3.0], &[0.0, 2.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| s.sample(&mut rng)).sum::<f64>() / n as f64;
        // triangle on [0, 3] with apex at 1
        assert!((mean - 4.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn interpolation_clamps() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [1.0, 3.0, 2.0];
        assert_eq!(interpolate(&xs, &ys, -1.0), 1.0);
        assert_eq!(interpolate(&xs, &ys, 0.5), 2.0);
        assert_eq!(interpolate(&xs, &ys, 1.5), 2.5);
        assert_eq!(interpolate(&xs, &ys, 9.0), 2.0);
    }
}
