//! Domain types shared by every other module. All quantities are SI.

use num_complex::Complex64;

use crate::error::{Error, Result, Violation};
use crate::units::PLANCK;

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSpec {
    /// kg
    pub mass: f64,
    /// Static polarizability volume alpha(0), m^3.
    pub static_polarizability: f64,
    /// Polarizability volume at the laser frequency, m^3.
    pub dynamic_polarizability: Option<f64>,
    pub valence_electrons: Option<f64>,
    /// J/K
    pub heat_capacity: Option<f64>,
    /// K
    pub initial_internal_temperature: Option<f64>,
}

impl ParticleSpec {
    pub fn with_mass(mass: f64) -> Self {
        ParticleSpec {
            mass,
            static_polarizability: 0.0,
            dynamic_polarizability: None,
            valence_electrons: None,
            heat_capacity: None,
            initial_internal_temperature: None,
        }
    }

    pub fn validate(&self, path: &str, out: &mut Vec<Violation>) {
        if !(self.mass >= crate::units::ATOMIC_MASS_UNIT) {
            push(out, path, "mass", "must be at least 1 amu");
        }
        if !(self.static_polarizability >= 0.0) {
            push(out, path, "static_polarizability", "must be non-negative");
        }
        let positive = [
            ("dynamic_polarizability", self.dynamic_polarizability),
            ("valence_electrons", self.valence_electrons),
            ("heat_capacity", self.heat_capacity),
            (
                "initial_internal_temperature",
                self.initial_internal_temperature,
            ),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    push(out, path, name, "must be strictly positive");
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VelocityDistribution {
    Delta(f64),
    /// Gaussian truncated to v > 0.
    Gaussian {
        mean: f64,
        width: f64,
    },
    /// Weights need not be normalized; they are interpolated linearly.
    Tabulated {
        velocities: Vec<f64>,
        weights: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamSpec {
    pub distribution: VelocityDistribution,
    pub flux_weighted: bool,
}

impl BeamSpec {
    pub fn monochromatic(v_z: f64) -> Self {
        BeamSpec {
            distribution: VelocityDistribution::Delta(v_z),
            flux_weighted: false,
        }
    }

    /// Representative velocity used for kinematic quantities that need one.
    pub fn mean_velocity(&self) -> f64 {
        match &self.distribution {
            VelocityDistribution::Delta(v) => *v,
            VelocityDistribution::Gaussian { mean, .. } => *mean,
            VelocityDistribution::Tabulated {
                velocities,
                weights,
            } => {
                let (mut num, mut den) = (0.0, 0.0);
                for w in velocities.windows(2).zip(weights.windows(2)) {
                    let (v, g) = w;
                    let dv = v[1] - v[0];
                    num += 0.5 * dv * (v[0] * g[0] + v[1] * g[1]);
                    den += 0.5 * dv * (g[0] + g[1]);
                }
                num / den
            }
        }
    }

    pub fn validate(&self, path: &str, out: &mut Vec<Violation>) {
        match &self.distribution {
            VelocityDistribution::Delta(v) => {
                if !(*v > 0.0 && v.is_finite()) {
                    push(out, path, "velocity", "must be strictly positive");
                }
            }
            VelocityDistribution::Gaussian { mean, width } => {
                if !(*mean > 0.0 && mean.is_finite()) {
                    push(out, path, "velocity", "mean must be strictly positive");
                }
                if !(*width > 0.0 && width.is_finite()) {
                    push(out, path, "width", "must be strictly positive");
                }
            }
            VelocityDistribution::Tabulated {
                velocities,
                weights,
            } => {
                if velocities.len() < 2 || velocities.len() != weights.len() {
                    push(
                        out,
                        path,
                        "table",
                        "needs at least two (velocity, weight) rows",
                    );
                    return;
                }
                if velocities[0] <= 0.0 {
                    push(out, path, "table", "velocities must be strictly positive");
                }
                if velocities.windows(2).any(|w| w[1] <= w[0]) {
                    push(out, path, "table", "velocities must be strictly increasing");
                }
                if weights.iter().any(|w| *w < 0.0) || weights.iter().all(|w| *w == 0.0) {
                    push(
                        out,
                        path,
                        "table",
                        "weights must be non-negative and not all zero",
                    );
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteractionLaw {
    None,
    /// U = -C3 / distance^3
    VdwC3,
    /// U = -C4 / distance^4
    RetardedC4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialInteraction {
    pub law: InteractionLaw,
    /// J m^3
    pub c3: f64,
    /// J m^4
    pub c4: f64,
    /// Distance from each wall treated as opaque. `None` means period/2000.
    pub wall_cutoff: Option<f64>,
}

impl MaterialInteraction {
    pub fn none() -> Self {
        MaterialInteraction {
            law: InteractionLaw::None,
            c3: 0.0,
            c4: 0.0,
            wall_cutoff: None,
        }
    }

    pub fn vdw(c3: f64) -> Self {
        MaterialInteraction {
            law: InteractionLaw::VdwC3,
            c3,
            c4: 0.0,
            wall_cutoff: None,
        }
    }

    pub fn retarded(c4: f64) -> Self {
        MaterialInteraction {
            law: InteractionLaw::RetardedC4,
            c3: 0.0,
            c4,
            wall_cutoff: None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.law {
            InteractionLaw::None => "none",
            InteractionLaw::VdwC3 => "vdw_c3",
            InteractionLaw::RetardedC4 => "retarded_c4",
        }
    }

    /// Power p and constant C of the single-wall law U = -C / distance^p.
    pub fn power_law(&self) -> Option<(i32, f64)> {
        match self.law {
            InteractionLaw::None => None,
            InteractionLaw::VdwC3 => Some((3, self.c3)),
            InteractionLaw::RetardedC4 => Some((4, self.c4)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LightGratingSpec {
    /// W
    pub laser_power: f64,
    /// m
    pub waist: f64,
    /// m
    pub laser_wavelength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GratingKind {
    Material(MaterialInteraction),
    Light(LightGratingSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GratingSpec {
    /// m
    pub period: f64,
    /// Ignored for light gratings.
    pub open_fraction: f64,
    /// m
    pub thickness: f64,
    pub kind: GratingKind,
}

impl GratingSpec {
    pub fn binary(period: f64, open_fraction: f64) -> Self {
        GratingSpec {
            period,
            open_fraction,
            thickness: 0.0,
            kind: GratingKind::Material(MaterialInteraction::none()),
        }
    }

    pub fn material(
        period: f64,
        open_fraction: f64,
        thickness: f64,
        interaction: MaterialInteraction,
    ) -> Self {
        GratingSpec {
            period,
            open_fraction,
            thickness,
            kind: GratingKind::Material(interaction),
        }
    }

    /// A standing light wave; its period is half the laser wavelength.
    pub fn light(light: LightGratingSpec) -> Self {
        GratingSpec {
            period: 0.5 * light.laser_wavelength,
            open_fraction: 1.0,
            thickness: 0.0,
            kind: GratingKind::Light(light),
        }
    }

    pub fn is_light(&self) -> bool {
        matches!(self.kind, GratingKind::Light(_))
    }

    pub fn interaction(&self) -> Option<&MaterialInteraction> {
        match &self.kind {
            GratingKind::Material(m) => Some(m),
            GratingKind::Light(_) => None,
        }
    }

    /// Wall cutoff in metres, resolving the default.
    pub fn wall_cutoff(&self) -> f64 {
        match &self.kind {
            GratingKind::Material(m) if m.law != InteractionLaw::None => {
                m.wall_cutoff.unwrap_or(self.period / 2000.0)
            }
            _ => 0.0,
        }
    }

    /// True when the transmission carries no phase, so it is an ideal binary mask.
    pub fn is_ideal(&self) -> bool {
        match &self.kind {
            GratingKind::Material(m) => {
                m.power_law().map_or(true, |(_, c)| c == 0.0) || self.thickness == 0.0
            }
            GratingKind::Light(_) => false,
        }
    }

    pub fn validate(&self, path: &str, out: &mut Vec<Violation>) {
        if !(self.period > 0.0 && self.period.is_finite()) {
            push(out, path, "period", "must be strictly positive");
        }
        if !(self.thickness >= 0.0 && self.thickness.is_finite()) {
            push(out, path, "thickness", "must be non-negative");
        }
        match &self.kind {
            GratingKind::Material(m) => {
                if !(self.open_fraction > 0.0 && self.open_fraction < 1.0) {
                    push(out, path, "open_fraction", "must lie in (0, 1)");
                }
                if !(m.c3 >= 0.0) {
                    push(out, path, "c3", "must be non-negative");
                }
                if !(m.c4 >= 0.0) {
                    push(out, path, "c4", "must be non-negative");
                }
                if let Some(c) = m.wall_cutoff {
                    if !(c >= 0.0) {
                        push(out, path, "wall_cutoff", "must be non-negative");
                    }
                }
                if m.law != InteractionLaw::None
                    && self.open_fraction > 0.0
                    && self.wall_cutoff() >= 0.5 * self.open_fraction * self.period
                {
                    push(
                        out,
                        path,
                        "wall_cutoff",
                        "must be smaller than the slit half-width",
                    );
                }
            }
            GratingKind::Light(l) => {
                for (name, v) in [
                    ("laser_power", l.laser_power),
                    ("waist", l.waist),
                    ("laser_wavelength", l.laser_wavelength),
                ] {
                    if !(v > 0.0 && v.is_finite()) {
                        push(out, path, name, "must be strictly positive");
                    }
                }
                if l.laser_wavelength > 0.0 && !rel_eq(self.period, 0.5 * l.laser_wavelength, 1e-12)
                {
                    push(out, path, "period", "must equal half the laser wavelength");
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetupSpec {
    pub gratings: [GratingSpec; 3],
    /// Distance L between consecutive gratings, m.
    pub separation: f64,
    pub period_ratio: u32,
    /// Apply the slit interaction at the first and third gratings too.
    pub interaction_at_all_gratings: bool,
}

impl SetupSpec {
    /// Equal-period (r = 2) setup of three identical binary gratings.
    pub fn ideal(period: f64, open_fraction: f64, separation: f64) -> Self {
        let g = GratingSpec::binary(period, open_fraction);
        SetupSpec {
            gratings: [g.clone(), g.clone(), g],
            separation,
            period_ratio: 2,
            interaction_at_all_gratings: false,
        }
    }
}

/// A setup that has passed [`validate_setup`].
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedSetup(SetupSpec);

impl CheckedSetup {
    pub fn spec(&self) -> &SetupSpec {
        &self.0
    }

    pub fn grating(&self, i: usize) -> &GratingSpec {
        &self.0.gratings[i]
    }

    /// Period d of the second grating.
    pub fn d(&self) -> f64 {
        self.0.gratings[1].period
    }

    /// Period d1 = 2d/r of the first and third gratings.
    pub fn d1(&self) -> f64 {
        self.0.gratings[0].period
    }

    pub fn r(&self) -> u32 {
        self.0.period_ratio
    }

    pub fn separation(&self) -> f64 {
        self.0.separation
    }

    pub fn into_spec(self) -> SetupSpec {
        self.0
    }
}

pub fn validate_setup(setup: SetupSpec) -> Result<CheckedSetup> {
    let mut out = Vec::new();
    for (i, g) in setup.gratings.iter().enumerate() {
        g.validate(&format!("gratings.{}", i + 1), &mut out);
    }
    for i in [0, 2] {
        if setup.gratings[i].is_light() {
            push(
                &mut out,
                &format!("gratings.{}", i + 1),
                "kind",
                "only the second grating may be a light grating",
            );
        }
    }
    if !(setup.separation > 0.0 && setup.separation.is_finite()) {
        push(&mut out, "setup", "separation", "must be strictly positive");
    }
    if setup.period_ratio == 0 {
        push(
            &mut out,
            "setup",
            "period_ratio",
            "must be a positive integer",
        );
    } else {
        let d = setup.gratings[1].period;
        let d1 = 2.0 * d / setup.period_ratio as f64;
        if !rel_eq(setup.gratings[0].period, d1, 1e-12) {
            push(&mut out, "gratings.1", "period", "must equal 2 d / r");
        }
    }
    if !rel_eq(setup.gratings[2].period, setup.gratings[0].period, 1e-12) {
        push(
            &mut out,
            "gratings.3",
            "period",
            "must equal the period of grating 1",
        );
    }
    if out.is_empty() {
        Ok(CheckedSetup(setup))
    } else {
        Err(Error::Validation(out))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub v_z: f64,
    pub p_z: f64,
    pub wavelength: f64,
    pub talbot_length: f64,
}

pub fn derive_kinematics(particle: &ParticleSpec, v_z: f64, d: f64) -> Result<Kinematics> {
    let mut out = Vec::new();
    if !(v_z > 0.0 && v_z.is_finite()) {
        push(&mut out, "beam", "velocity", "must be strictly positive");
    }
    if !(d > 0.0 && d.is_finite()) {
        push(
            &mut out,
            "gratings.2",
            "period",
            "must be strictly positive",
        );
    }
    if !(particle.mass > 0.0) {
        push(&mut out, "particle", "mass", "must be strictly positive");
    }
    if !out.is_empty() {
        return Err(Error::Validation(out));
    }
    let p_z = particle.mass * v_z;
    let wavelength = PLANCK / p_z;
    Ok(Kinematics {
        v_z,
        p_z,
        wavelength,
        talbot_length: d * d / wavelength,
    })
}

/// Longitudinal velocity at which the separation equals `ratio` Talbot lengths.
pub fn velocity_for_talbot_ratio(mass: f64, d: f64, separation: f64, ratio: f64) -> f64 {
    let wavelength = ratio * d * d / separation;
    PLANCK / (mass * wavelength)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Quantum,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Ideal,
    Interacting,
    Decohered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoeffTag {
    pub regime: Regime,
    pub stage: Stage,
}

/// Complex Fourier coefficients indexed by order m in [-M, M].
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSet {
    values: Vec<Complex64>,
    pub tag: CoeffTag,
}

impl CoeffSet {
    pub fn from_fn(max_order: usize, tag: CoeffTag, mut f: impl FnMut(i64) -> Complex64) -> Self {
        let m = max_order as i64;
        CoeffSet {
            values: (-m..=m).map(&mut f).collect(),
            tag,
        }
    }

    /// Builds a hermitian set from the non-negative orders.
    pub fn hermitian(nonneg: &[Complex64], tag: CoeffTag) -> Self {
        let m = nonneg.len() - 1;
        let mut values = Vec::with_capacity(2 * m + 1);
        values.extend(nonneg[1..].iter().rev().map(|c| c.conj()));
        values.extend_from_slice(nonneg);
        CoeffSet { values, tag }
    }

    pub fn max_order(&self) -> usize {
        (self.values.len() - 1) / 2
    }

    pub fn get(&self, m: i64) -> Option<Complex64> {
        let idx = m + self.max_order() as i64;
        if idx < 0 {
            return None;
        }
        self.values.get(idx as usize).copied()
    }

    /// Coefficient of order m, zero outside the stored range.
    pub fn value(&self, m: i64) -> Complex64 {
        self.get(m).unwrap_or_default()
    }

    pub fn orders(&self) -> std::ops::RangeInclusive<i64> {
        let m = self.max_order() as i64;
        -m..=m
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.orders().zip(self.values.iter().copied())
    }

    pub fn with_tag(mut self, tag: CoeffTag) -> Self {
        self.tag = tag;
        self
    }
}

/// One period of a sampled density or detector signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub visibility: f64,
    pub mean_level: f64,
}

impl Pattern {
    pub fn from_samples(x: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let visibility = grid_visibility(&values)?;
        let mean_level = values.iter().sum::<f64>() / values.len() as f64;
        Ok(Pattern {
            x,
            values,
            visibility,
            mean_level,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// (max - min) / (max + min) of sampled values.
pub fn grid_visibility(values: &[f64]) -> Result<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max + min > 0.0) {
        return Err(Error::DegenerateSignal);
    }
    Ok((max - min) / (max + min))
}

fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn push(out: &mut Vec<Violation>, path: &str, field: &str, message: &str) {
    out.push(Violation {
        path: format!("{path}.{field}"),
        message: message.to_string(),
    });
}
