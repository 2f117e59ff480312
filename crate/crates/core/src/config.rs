//! TOML configuration. Keys carry their unit as a suffix (`mass_amu`,
//! `period_um`, `pressure_mbar`, ...) and are converted to SI here; nothing
//! past this module sees config units.
//!
//! ```toml
//! [particle]
//! mass_amu = 1000
//!
//! [beam]
//! talbot_ratio = 0.9          # or velocity_m_s, or distribution = "gaussian"
//!
//! [setup]
//! separation_m = 0.2
//! period_ratio = 2
//!
//! [gratings.1]
//! period_um = 1
//! open_fraction = 0.5
//!
//! [gratings.2]
//! period_um = 1
//! open_fraction = 0.5
//! thickness_um = 0.2
//! law = "vdw_c3"
//! c3_mev_nm3 = 10
//!
//! [gratings.3]
//! period_um = 1
//! open_fraction = 0.5
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::decoherence::{
    gas_c6, AbsorptionModel, AmplitudeModel, DecoherenceScenario, GasSpec, RateProfile, ThermalSpec,
};
use crate::error::{Error, Result, Violation};
use crate::model::{
    validate_setup, velocity_for_talbot_ratio, BeamSpec, GratingKind, GratingSpec, InteractionLaw,
    LightGratingSpec, MaterialInteraction, ParticleSpec, SetupSpec, VelocityDistribution,
};
use crate::oracle::OracleConfig;
use crate::talbot::{FringeOptions, Interferometer};
use crate::units::Unit;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    particle: RawParticle,
    beam: RawBeam,
    setup: RawSetup,
    gratings: BTreeMap<String, RawGrating>,
    gas: Option<RawGas>,
    thermal: Option<RawThermal>,
    oracle: Option<RawOracle>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParticle {
    mass_amu: f64,
    #[serde(default)]
    static_polarizability_nm3: f64,
    dynamic_polarizability_nm3: Option<f64>,
    valence_electrons: Option<f64>,
    heat_capacity_kb: Option<f64>,
    internal_temperature_k: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBeam {
    #[serde(default = "default_distribution")]
    distribution: String,
    velocity_m_s: Option<f64>,
    /// L / L_lambda, converted to a velocity through the setup.
    talbot_ratio: Option<f64>,
    width_m_s: Option<f64>,
    relative_width: Option<f64>,
    /// Two columns: velocity (m/s), weight.
    table: Option<PathBuf>,
    #[serde(default)]
    flux_weighted: bool,
}

fn default_distribution() -> String {
    "delta".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSetup {
    separation_m: f64,
    #[serde(default = "default_ratio")]
    period_ratio: u32,
    #[serde(default)]
    interaction_at_all_gratings: bool,
}

fn default_ratio() -> u32 {
    2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrating {
    #[serde(default = "default_kind")]
    kind: String,
    period_um: Option<f64>,
    open_fraction: Option<f64>,
    #[serde(default)]
    thickness_um: f64,
    #[serde(default = "default_law")]
    law: String,
    c3_mev_nm3: Option<f64>,
    c4_mev_nm4: Option<f64>,
    wall_cutoff_nm: Option<f64>,
    laser_power_w: Option<f64>,
    waist_um: Option<f64>,
    laser_wavelength_nm: Option<f64>,
}

fn default_kind() -> String {
    "material".into()
}

fn default_law() -> String {
    "none".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGas {
    mass_amu: f64,
    temperature_k: f64,
    pressure_mbar: f64,
    polarizability_nm3: f64,
    valence_electrons: f64,
    c6_mev_nm6: Option<f64>,
    /// "isotropic", "full_localization" or "table".
    #[serde(default = "default_amplitude")]
    amplitude: String,
    /// Two columns: cos(theta), |f|^2 up to normalization.
    amplitude_table: Option<PathBuf>,
    /// Two columns: z (m), events per metre. Replaces n sigma_eff.
    rate_table: Option<PathBuf>,
}

fn default_amplitude() -> String {
    "isotropic".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThermal {
    /// Falls back to particle.internal_temperature_k.
    temperature_k: Option<f64>,
    /// Falls back to particle.heat_capacity_kb.
    heat_capacity_kb: Option<f64>,
    /// "constant", "power_law" or "table".
    #[serde(default = "default_absorption")]
    absorption: String,
    sigma_abs_nm2: Option<f64>,
    reference_energy_ev: Option<f64>,
    exponent: Option<f64>,
    /// Two columns: photon energy (eV), cross section (nm^2).
    absorption_table: Option<PathBuf>,
    #[serde(default = "yes")]
    enable_cooling: bool,
}

fn default_absorption() -> String {
    "constant".into()
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    slit_window: Option<usize>,
    cells_per_period: Option<usize>,
    samples_per_period: Option<usize>,
    source_points_per_slit: Option<usize>,
    mc_trajectories: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    grid_points: Option<usize>,
}

/// Collisional decoherence as configured.
#[derive(Debug, Clone, PartialEq)]
pub struct GasConfig {
    pub gas: GasSpec,
    pub amplitude: AmplitudeModel,
    pub rate_table: Option<RateProfile>,
}

/// A fully resolved configuration in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub particle: ParticleSpec,
    pub beam: BeamSpec,
    pub setup: SetupSpec,
    pub gas: Option<GasConfig>,
    pub thermal: Option<ThermalSpec>,
    pub oracle: OracleConfig,
    pub fringe: FringeOptions,
    /// sha256 of the configuration text.
    pub hash: String,
}

/// Reads a two-column CSV of (abscissa, value) with strictly increasing
/// abscissa. Lines starting with '#' and a non-numeric header are skipped.
pub fn read_two_column(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let ctx = |msg: String| Error::Config(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ctx(e.to_string()))?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| ctx(e.to_string()))?;
        if rec.len() != 2 {
            return Err(ctx(format!(
                "row {}: expected two columns, found {}",
                line + 1,
                rec.len()
            )));
        }
        let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
        match parsed {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if line == 0 => continue,
            _ => return Err(ctx(format!("row {}: not a number", line + 1))),
        }
    }
    if xs.len() < 2 {
        return Err(ctx("needs at least two rows".into()));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ctx("abscissa must be strictly increasing".into()));
    }
    Ok((xs, ys))
}

fn violation(path: &str, message: &str) -> Violation {
    Violation {
        path: path.into(),
        message: message.into(),
    }
}

fn require(v: Option<f64>, path: &str, bad: &mut Vec<Violation>) -> f64 {
    v.unwrap_or_else(|| {
        bad.push(violation(path, "is required"));
        f64::NAN
    })
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Config::parse(&text, base)
    }

    /// Parses configuration text; table paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Config> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let hash = format!("{:x}", Sha256::digest(text.as_bytes()));
        let mut bad = Vec::new();
        let table = |p: &Path| read_two_column(&base.join(p));

        let rp = &raw.particle;
        let particle = ParticleSpec {
            mass: Unit::Amu.to_si(rp.mass_amu),
            static_polarizability: Unit::CubicNanometre.to_si(rp.static_polarizability_nm3),
            dynamic_polarizability: rp
                .dynamic_polarizability_nm3
                .map(|a| Unit::CubicNanometre.to_si(a)),
            valence_electrons: rp.valence_electrons,
            heat_capacity: rp.heat_capacity_kb.map(|c| Unit::Boltzmann.to_si(c)),
            initial_internal_temperature: rp.internal_temperature_k,
        };
        particle.validate("particle", &mut bad);

        let rs = &raw.setup;
        let mut gratings = Vec::new();
        for i in 1..=3 {
            let path = format!("gratings.{i}");
            match raw.gratings.get(&i.to_string()) {
                Some(g) => gratings.push(grating(g, &path, &mut bad)),
                None => {
                    bad.push(violation(&path, "section is missing"));
                    gratings.push(GratingSpec::binary(f64::NAN, 0.5));
                }
            }
        }
        for key in raw.gratings.keys() {
            if !["1", "2", "3"].contains(&key.as_str()) {
                bad.push(violation(
                    &format!("gratings.{key}"),
                    "only gratings 1, 2 and 3 exist",
                ));
            }
        }
        let gratings: [GratingSpec; 3] = gratings.try_into().expect("three gratings");
        let setup = SetupSpec {
            gratings,
            separation: rs.separation_m,
            period_ratio: rs.period_ratio,
            interaction_at_all_gratings: rs.interaction_at_all_gratings,
        };
        if !(setup.separation > 0.0 && setup.separation.is_finite()) {
            bad.push(violation("setup.separation_m", "must be strictly positive"));
        }

        let rb = &raw.beam;
        let d = setup.gratings[1].period;
        let centre = match (rb.velocity_m_s, rb.talbot_ratio) {
            (Some(v), None) => v,
            (None, Some(s)) if s > 0.0 => {
                velocity_for_talbot_ratio(particle.mass, d, setup.separation, s)
            }
            (None, Some(_)) => {
                bad.push(violation("beam.talbot_ratio", "must be strictly positive"));
                f64::NAN
            }
            (Some(_), Some(_)) => {
                bad.push(violation(
                    "beam",
                    "give either velocity_m_s or talbot_ratio, not both",
                ));
                f64::NAN
            }
            (None, None) => f64::NAN,
        };
        let distribution = match rb.distribution.as_str() {
            "delta" => VelocityDistribution::Delta(require(
                centre.is_finite().then_some(centre),
                "beam.velocity_m_s",
                &mut bad,
            )),
            "gaussian" => {
                let mean = require(
                    centre.is_finite().then_some(centre),
                    "beam.velocity_m_s",
                    &mut bad,
                );
                let width = match (rb.width_m_s, rb.relative_width) {
                    (Some(w), None) => w,
                    (None, Some(r)) => r * mean,
                    _ => {
                        bad.push(violation(
                            "beam",
                            "gaussian needs exactly one of width_m_s, relative_width",
                        ));
                        f64::NAN
                    }
                };
                VelocityDistribution::Gaussian { mean, width }
            }
            "table" => match &rb.table {
                Some(p) => match table(p) {
                    Ok((velocities, weights)) => VelocityDistribution::Tabulated {
                        velocities,
                        weights,
                    },
                    Err(e) => return Err(e),
                },
                None => {
                    bad.push(violation(
                        "beam.table",
                        "is required for distribution = \"table\"",
                    ));
                    VelocityDistribution::Delta(f64::NAN)
                }
            },
            other => {
                bad.push(violation(
                    "beam.distribution",
                    &format!("unknown distribution {other:?}"),
                ));
                VelocityDistribution::Delta(f64::NAN)
            }
        };
        let beam = BeamSpec {
            distribution,
            flux_weighted: rb.flux_weighted,
        };
        beam.validate("beam", &mut bad);

        let gas = match &raw.gas {
            None => None,
            Some(g) => {
                let spec = GasSpec {
                    mass: Unit::Amu.to_si(g.mass_amu),
                    temperature: g.temperature_k,
                    pressure: Unit::Millibar.to_si(g.pressure_mbar),
                    polarizability: Unit::CubicNanometre.to_si(g.polarizability_nm3),
                    valence_electrons: g.valence_electrons,
                    c6: g.c6_mev_nm6.map(|c| Unit::MevNm6.to_si(c)),
                };
                if let Err(Error::Validation(v)) = spec.validate("gas") {
                    bad.extend(v);
                }
                let amplitude = match g.amplitude.as_str() {
                    "isotropic" => AmplitudeModel::Isotropic,
                    "full_localization" => AmplitudeModel::FullLocalization,
                    "table" => match &g.amplitude_table {
                        Some(p) => {
                            let (cos_theta, weight) = table(p)?;
                            AmplitudeModel::Tabulated { cos_theta, weight }
                        }
                        None => {
                            bad.push(violation(
                                "gas.amplitude_table",
                                "is required for amplitude = \"table\"",
                            ));
                            AmplitudeModel::Isotropic
                        }
                    },
                    other => {
                        bad.push(violation(
                            "gas.amplitude",
                            &format!("unknown amplitude model {other:?}"),
                        ));
                        AmplitudeModel::Isotropic
                    }
                };
                let rate_table = match &g.rate_table {
                    Some(p) => {
                        let (z, rate) = table(p)?;
                        if rate.iter().any(|r| *r < 0.0) {
                            bad.push(violation("gas.rate_table", "rates must be non-negative"));
                        }
                        Some(RateProfile::Tabulated { z, rate })
                    }
                    None => None,
                };
                Some(GasConfig {
                    gas: spec,
                    amplitude,
                    rate_table,
                })
            }
        };

        let thermal = match &raw.thermal {
            None => None,
            Some(t) => {
                let temperature = require(
                    t.temperature_k.or(rp.internal_temperature_k),
                    "thermal.temperature_k",
                    &mut bad,
                );
                let heat_capacity = Unit::Boltzmann.to_si(require(
                    t.heat_capacity_kb.or(rp.heat_capacity_kb),
                    "thermal.heat_capacity_kb",
                    &mut bad,
                ));
                let absorption = match t.absorption.as_str() {
                    "constant" => AbsorptionModel::Constant(Unit::SquareNanometre.to_si(require(
                        t.sigma_abs_nm2,
                        "thermal.sigma_abs_nm2",
                        &mut bad,
                    ))),
                    "power_law" => AbsorptionModel::PowerLaw {
                        sigma0: Unit::SquareNanometre.to_si(require(
                            t.sigma_abs_nm2,
                            "thermal.sigma_abs_nm2",
                            &mut bad,
                        )),
                        omega0: Unit::ElectronVolt.to_si(require(
                            t.reference_energy_ev,
                            "thermal.reference_energy_ev",
                            &mut bad,
                        )),
                        exponent: require(t.exponent, "thermal.exponent", &mut bad),
                    },
                    "table" => match &t.absorption_table {
                        Some(p) => {
                            let (e, s) = table(p)?;
                            AbsorptionModel::Tabulated {
                                omega: e.into_iter().map(|x| Unit::ElectronVolt.to_si(x)).collect(),
                                sigma: s
                                    .into_iter()
                                    .map(|x| Unit::SquareNanometre.to_si(x))
                                    .collect(),
                            }
                        }
                        None => {
                            bad.push(violation(
                                "thermal.absorption_table",
                                "is required for absorption = \"table\"",
                            ));
                            AbsorptionModel::Constant(0.0)
                        }
                    },
                    other => {
                        bad.push(violation(
                            "thermal.absorption",
                            &format!("unknown absorption model {other:?}"),
                        ));
                        AbsorptionModel::Constant(0.0)
                    }
                };
                let spec = ThermalSpec {
                    temperature,
                    heat_capacity,
                    absorption,
                    enable_cooling: t.enable_cooling,
                };
                if bad.is_empty() {
                    if let Err(Error::Validation(v)) = spec.validate("thermal") {
                        bad.extend(v);
                    }
                }
                Some(spec)
            }
        };

        let mut oracle = OracleConfig::default();
        if let Some(o) = &raw.oracle {
            oracle.slit_window = o.slit_window.unwrap_or(oracle.slit_window);
            oracle.cells_per_period = o.cells_per_period.unwrap_or(oracle.cells_per_period);
            oracle.samples_per_period = o.samples_per_period.unwrap_or(oracle.samples_per_period);
            oracle.source_points_per_slit = o
                .source_points_per_slit
                .unwrap_or(oracle.source_points_per_slit);
            oracle.mc_trajectories = o.mc_trajectories.unwrap_or(oracle.mc_trajectories);
        }
        let mut fringe = FringeOptions::default();
        if let Some(grid) = raw.output.as_ref().and_then(|o| o.grid_points) {
            if grid < 8 {
                bad.push(violation("output.grid_points", "must be at least 8"));
            }
            fringe.grid_points = grid;
        }

        if !bad.is_empty() {
            return Err(Error::Validation(bad));
        }
        let config = Config {
            particle,
            beam,
            setup,
            gas,
            thermal,
            oracle,
            fringe,
            hash,
        };
        config.interferometer()?;
        Ok(config)
    }

    /// Validated interferometer with every configured scenario attached.
    pub fn interferometer(&self) -> Result<Interferometer> {
        let setup = validate_setup(self.setup.clone())?;
        Ok(Interferometer::new(setup, self.particle.clone())
            .with_options(self.fringe.clone())
            .with_scenarios(self.scenarios()?))
    }

    pub fn scenarios(&self) -> Result<Vec<DecoherenceScenario>> {
        let mut out = Vec::new();
        if let Some(g) = &self.gas {
            let c6 = gas_c6(&g.gas, &self.particle)?;
            let mut sc = DecoherenceScenario::collisional(g.gas.clone(), c6, g.amplitude.clone());
            if let Some(p) = &g.rate_table {
                sc = sc.with_profile(p.clone());
            }
            out.push(sc);
        }
        if let Some(t) = &self.thermal {
            out.push(DecoherenceScenario::thermal(t.clone()));
        }
        Ok(out)
    }

    /// Representative beam velocity.
    pub fn velocity(&self) -> f64 {
        self.beam.mean_velocity()
    }

    /// Rescales the whole velocity distribution so its mean becomes v.
    pub fn set_velocity(&mut self, v: f64) {
        let k = v / self.velocity();
        self.beam.distribution = match &self.beam.distribution {
            VelocityDistribution::Delta(_) => VelocityDistribution::Delta(v),
            VelocityDistribution::Gaussian { width, .. } => VelocityDistribution::Gaussian {
                mean: v,
                width: width * k,
            },
            VelocityDistribution::Tabulated {
                velocities,
                weights,
            } => VelocityDistribution::Tabulated {
                velocities: velocities.iter().map(|x| x * k).collect(),
                weights: weights.clone(),
            },
        };
    }
}

fn grating(g: &RawGrating, path: &str, bad: &mut Vec<Violation>) -> GratingSpec {
    match g.kind.as_str() {
        "light" => {
            let light = LightGratingSpec {
                laser_power: require(g.laser_power_w, &format!("{path}.laser_power_w"), bad),
                waist: Unit::Micrometre.to_si(require(
                    g.waist_um,
                    &format!("{path}.waist_um"),
                    bad,
                )),
                laser_wavelength: Unit::Nanometre.to_si(require(
                    g.laser_wavelength_nm,
                    &format!("{path}.laser_wavelength_nm"),
                    bad,
                )),
            };
            if g.period_um.is_some() || g.open_fraction.is_some() {
                bad.push(violation(
                    path,
                    "light gratings take their period from the laser wavelength",
                ));
            }
            GratingSpec::light(light)
        }
        "material" => {
            let law = match g.law.as_str() {
                "none" => InteractionLaw::None,
                "vdw_c3" => InteractionLaw::VdwC3,
                "retarded_c4" => InteractionLaw::RetardedC4,
                other => {
                    bad.push(violation(
                        &format!("{path}.law"),
                        &format!("unknown law {other:?}"),
                    ));
                    InteractionLaw::None
                }
            };
            let interaction = MaterialInteraction {
                law,
                c3: match law {
                    InteractionLaw::VdwC3 => Unit::MevNm3.to_si(require(
                        g.c3_mev_nm3,
                        &format!("{path}.c3_mev_nm3"),
                        bad,
                    )),
                    _ => 0.0,
                },
                c4: match law {
                    InteractionLaw::RetardedC4 => Unit::MevNm4.to_si(require(
                        g.c4_mev_nm4,
                        &format!("{path}.c4_mev_nm4"),
                        bad,
                    )),
                    _ => 0.0,
                },
                wall_cutoff: g.wall_cutoff_nm.map(|c| Unit::Nanometre.to_si(c)),
            };
            GratingSpec {
                period: Unit::Micrometre.to_si(require(
                    g.period_um,
                    &format!("{path}.period_um"),
                    bad,
                )),
                open_fraction: require(g.open_fraction, &format!("{path}.open_fraction"), bad),
                thickness: Unit::Micrometre.to_si(g.thickness_um),
                kind: GratingKind::Material(interaction),
            }
        }
        other => {
            bad.push(violation(
                &format!("{path}.kind"),
                &format!("unknown grating kind {other:?}"),
            ));
            GratingSpec::binary(f64::NAN, 0.5)
        }
    }
}
