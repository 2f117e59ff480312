//! Batch front end: scans over one parameter, pattern dumps, oracle checks
//! and the two built-in figure reproductions. Every command produces a CSV
//! with a `#` metadata header; rows come out in scan order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::model::{velocity_for_talbot_ratio, GratingKind, Regime, VelocityDistribution};
use crate::oracle::{coherent_pattern_oracle, compare, mc_decohered_pattern};
use crate::talbot::{FringeResult, Interferometer};

pub const VERSION: &str = concat!("talbot-lau ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Pattern,
    VisibilityScan,
    DecoherenceScan,
    OracleCheck,
    FigureRepro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig2,
    Fig4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Plane {
    /// Density at the third grating.
    Density,
    /// Detector signal versus third-grating offset.
    Signal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Quantum,
    Classical,
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "talbot-lau",
    version,
    about = "Talbot-Lau fringe visibilities, scans and oracle checks"
)]
pub struct Args {
    pub command: Command,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// <param>=<lo>:<hi>:<n> with param one of open_fraction, L_over_Ltalbot,
    /// v_z, pressure, T_star, laser_power.
    #[arg(long)]
    pub scan: Option<ScanSpec>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Add the direct-propagation oracle to scans.
    #[arg(long)]
    pub oracle: bool,
    /// Fail with exit code 4 when |fast - oracle| visibility exceeds this.
    #[arg(long)]
    pub assert_oracle: Option<f64>,
    #[arg(long, value_enum)]
    pub figure: Option<Figure>,
    #[arg(long, value_enum, default_value_t = Plane::Density)]
    pub plane: Plane,
    #[arg(long, value_enum, default_value_t = RegimeArg::Quantum)]
    pub regime: RegimeArg,
    /// Grid points for `pattern`.
    #[arg(long, default_value_t = 512)]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanParam {
    OpenFraction,
    TalbotRatio,
    Velocity,
    Pressure,
    TStar,
    LaserPower,
}

impl ScanParam {
    pub fn name(self) -> &'static str {
        match self {
            ScanParam::OpenFraction => "open_fraction",
            ScanParam::TalbotRatio => "L_over_Ltalbot",
            ScanParam::Velocity => "v_z",
            ScanParam::Pressure => "pressure",
            ScanParam::TStar => "T_star",
            ScanParam::LaserPower => "laser_power",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            ScanParam::OpenFraction | ScanParam::TalbotRatio => "1",
            ScanParam::Velocity => "m/s",
            ScanParam::Pressure => "mbar",
            ScanParam::TStar => "K",
            ScanParam::LaserPower => "W",
        }
    }

    /// Copy of `base` with this parameter set to `value` (config units).
    pub fn apply(self, base: &Config, value: f64) -> Result<Config> {
        let mut c = base.clone();
        let path = format!("scan.{}", self.name());
        match self {
            ScanParam::OpenFraction => {
                let mut any = false;
                for g in c.setup.gratings.iter_mut() {
                    if let GratingKind::Material(_) = g.kind {
                        g.open_fraction = value;
                        any = true;
                    }
                }
                if !any {
                    return Err(Error::invalid(path, "no material grating to scan"));
                }
            }
            ScanParam::TalbotRatio => {
                if !(value > 0.0) {
                    return Err(Error::invalid(path, "must be strictly positive"));
                }
                let v = velocity_for_talbot_ratio(
                    c.particle.mass,
                    c.setup.gratings[1].period,
                    c.setup.separation,
                    value,
                );
                c.set_velocity(v);
            }
            ScanParam::Velocity => {
                if !(value > 0.0) {
                    return Err(Error::invalid(path, "must be strictly positive"));
                }
                c.set_velocity(value);
            }
            ScanParam::Pressure => match c.gas.as_mut() {
                Some(g) if value >= 0.0 => {
                    g.gas.pressure = crate::units::Unit::Millibar.to_si(value)
                }
                Some(_) => return Err(Error::invalid(path, "must be non-negative")),
                None => return Err(Error::invalid(path, "needs a [gas] section")),
            },
            ScanParam::TStar => match c.thermal.as_mut() {
                Some(t) if value > 0.0 => t.temperature = value,
                Some(_) => return Err(Error::invalid(path, "must be strictly positive")),
                None => return Err(Error::invalid(path, "needs a [thermal] section")),
            },
            ScanParam::LaserPower => {
                let mut any = false;
                for g in c.setup.gratings.iter_mut() {
                    if let GratingKind::Light(l) = &mut g.kind {
                        l.laser_power = value;
                        any = true;
                    }
                }
                if !any {
                    return Err(Error::invalid(path, "no light grating to scan"));
                }
            }
        }
        c.interferometer()?;
        Ok(c)
    }
}

impl FromStr for ScanParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "open_fraction" => ScanParam::OpenFraction,
            "L_over_Ltalbot" => ScanParam::TalbotRatio,
            "v_z" => ScanParam::Velocity,
            "pressure" => ScanParam::Pressure,
            "T_star" => ScanParam::TStar,
            "laser_power" => ScanParam::LaserPower,
            other => return Err(format!("unknown scan parameter {other:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSpec {
    pub param: ScanParam,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl ScanSpec {
    pub fn values(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                if i + 1 == self.n {
                    self.hi
                } else {
                    self.lo + i as f64 * step
                }
            })
            .collect()
    }
}

impl FromStr for ScanSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (name, range) = s.split_once('=').ok_or("expected <param>=<lo>:<hi>:<n>")?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err("expected <param>=<lo>:<hi>:<n>".into());
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|e| format!("{:?}: {e}", parts[2]))?;
        if n < 2 {
            return Err("a scan needs at least two points".into());
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return Err("scan bounds must be finite".into());
        }
        Ok(ScanSpec {
            param: name.trim().parse()?,
            lo,
            hi,
            n,
        })
    }
}

/// CSV text plus a one-line human summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub csv: String,
    pub summary: String,
}

struct Table {
    header: String,
    columns: Vec<(String, &'static str)>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(command: &str, hash: &str, seed: u64) -> Self {
        let header =
            format!("# {VERSION}\n# command: {command}\n# config_sha256: {hash}\n# seed: {seed}\n");
        Table {
            header,
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    fn column(&mut self, name: &str, unit: &'static str) {
        self.columns.push((name.to_string(), unit));
    }

    fn render(&self) -> String {
        let mut s = self.header.clone();
        let units: Vec<String> = self
            .columns
            .iter()
            .map(|(n, u)| format!("{n} [{u}]"))
            .collect();
        let _ = writeln!(s, "# units: {}", units.join(", "));
        let names: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
        let _ = writeln!(s, "{}", names.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

pub fn run(args: &Args) -> Result<Output> {
    if let Some(tol) = args.assert_oracle {
        if !(tol > 0.0) {
            return Err(Error::Config(
                "--assert-oracle needs a positive tolerance".into(),
            ));
        }
    }
    match args.command {
        Command::FigureRepro => {
            let fig = args
                .figure
                .ok_or_else(|| Error::Config("figure-repro needs --figure <fig2|fig4>".into()))?;
            figure_repro(fig, args.seed)
        }
        command => {
            let path = args
                .config
                .as_deref()
                .ok_or_else(|| Error::Config(format!("{command:?} needs --config <path>")))?;
            let config = Config::load(path)?;
            match command {
                Command::Pattern => emit_pattern(&config, args),
                Command::VisibilityScan | Command::DecoherenceScan => {
                    let scan = args.scan.ok_or_else(|| {
                        Error::Config("scans need --scan <param>=<lo>:<hi>:<n>".into())
                    })?;
                    run_scan(&config, &scan, command, args)
                }
                Command::OracleCheck => oracle_check(&config, args),
                Command::FigureRepro => unreachable!(),
            }
        }
    }
}

fn with_point(e: Error, param: &str, value: f64) -> Error {
    match e {
        Error::Numeric { context, detail } => Error::Numeric {
            context: format!("{context} (scan point {param} = {value})"),
            detail,
        },
        other => other,
    }
}

fn is_monochromatic(config: &Config) -> Option<f64> {
    match config.beam.distribution {
        VelocityDistribution::Delta(v) => Some(v),
        _ => None,
    }
}

/// Fringe at the configured beam, averaging over velocity when the beam is
/// not monochromatic.
fn beam_fringe(ifm: &Interferometer, config: &Config, regime: Regime) -> Result<FringeResult> {
    match is_monochromatic(config) {
        Some(v) => ifm.fringe(v, regime),
        None => ifm.velocity_average(&config.beam, regime),
    }
}

/// One row per scan point: swept value, coherent quantum and classical
/// visibilities, decohered quantum visibility when scenarios are present,
/// mean signal level, and the oracle visibility when requested.
pub fn run_scan(config: &Config, scan: &ScanSpec, command: Command, args: &Args) -> Result<Output> {
    let with_oracle = args.oracle || args.assert_oracle.is_some();
    let decohere = !config.scenarios()?.is_empty();
    if command == Command::DecoherenceScan && !decohere {
        return Err(Error::Config(
            "decoherence-scan needs a [gas] or [thermal] section".into(),
        ));
    }
    if with_oracle && is_monochromatic(config).is_none() {
        return Err(Error::Config(
            "the oracle needs a monochromatic beam".into(),
        ));
    }
    let name = scan.param.name();
    let rows: Vec<Vec<f64>> = scan
        .values()
        .into_par_iter()
        .map(|x| -> Result<Vec<f64>> {
            let c = scan.param.apply(config, x)?;
            let ifm = c.interferometer()?;
            let coherent = ifm.clone().with_scenarios(Vec::new());
            let q = beam_fringe(&coherent, &c, Regime::Quantum)?;
            let cl = beam_fringe(&coherent, &c, Regime::Classical)?;
            let mut row = vec![x, q.visibility, cl.visibility];
            let mean = if decohere {
                let d = beam_fringe(&ifm, &c, Regime::Quantum)?;
                row.push(d.visibility);
                d.signal_coeffs.value(0).re
            } else {
                q.signal_coeffs.value(0).re
            };
            row.push(mean);
            if with_oracle {
                let v = c.velocity();
                let mut oc = c.oracle.clone();
                oc.seed = args.seed;
                let o = coherent_pattern_oracle(&coherent, v, &oc)?;
                if let Some(tol) = args.assert_oracle {
                    let diff = (o.visibility - q.visibility).abs();
                    if diff > tol {
                        return Err(Error::OracleMismatch {
                            difference: diff,
                            tolerance: tol,
                        });
                    }
                }
                row.push(o.visibility);
            }
            Ok(row)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .zip(scan.values())
        .map(|(r, x)| r.map_err(|e| with_point(e, name, x)))
        .collect::<Result<Vec<_>>>()?;

    let label = match command {
        Command::DecoherenceScan => "decoherence-scan",
        _ => "visibility-scan",
    };
    let mut t = Table::new(label, &config.hash, args.seed);
    t.column(name, scan.param.unit());
    t.column("quantum_visibility", "1");
    t.column("classical_visibility", "1");
    if decohere {
        t.column("decohered_visibility", "1");
    }
    t.column("mean_level", "1");
    if with_oracle {
        t.column("oracle_visibility", "1");
    }
    let vq: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let summary = format!(
        "{} points over {name} in [{}, {}]: quantum visibility {:.4} .. {:.4}",
        rows.len(),
        scan.lo,
        scan.hi,
        vq.iter().copied().fold(f64::INFINITY, f64::min),
        vq.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    t.rows = rows;
    Ok(Output {
        csv: t.render(),
        summary,
    })
}

/// One period of the density at the third grating (or of the detector
/// signal), normalized to mean 1.
pub fn emit_pattern(config: &Config, args: &Args) -> Result<Output> {
    let ifm = config.interferometer()?;
    let regime = match args.regime {
        RegimeArg::Quantum => Regime::Quantum,
        RegimeArg::Classical => Regime::Classical,
    };
    let r = beam_fringe(&ifm, config, regime)?;
    let (pattern, label) = match args.plane {
        Plane::Density => (ifm.density_pattern(&r, args.points)?, "density"),
        Plane::Signal => {
            let coeffs = &r.signal_coeffs;
            (
                crate::talbot::sample_series(coeffs, ifm.setup.d1(), args.points)?,
                "signal",
            )
        }
    };
    let mean = pattern.values.iter().sum::<f64>() / pattern.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::DegenerateSignal);
    }
    let mut t = Table::new("pattern", &config.hash, args.seed);
    t.column("x", "m");
    t.column(label, "1");
    t.rows = pattern
        .x
        .iter()
        .zip(&pattern.values)
        .map(|(x, v)| vec![*x, v / mean])
        .collect();
    Ok(Output {
        csv: t.render(),
        summary: format!(
            "{label} over one period, {} points, visibility {:.6}",
            pattern.len(),
            pattern.visibility
        ),
    })
}

/// Fast path against the direct-propagation oracle at the configured
/// velocity (or at each scan point), plus the Monte-Carlo unraveling when
/// decoherence scenarios are configured.
pub fn oracle_check(config: &Config, args: &Args) -> Result<Output> {
    if is_monochromatic(config).is_none() {
        return Err(Error::Config(
            "the oracle needs a monochromatic beam".into(),
        ));
    }
    let points: Vec<(f64, Config)> = match &args.scan {
        Some(scan) => scan
            .values()
            .into_iter()
            .map(|x| Ok((x, scan.param.apply(config, x)?)))
            .collect::<Result<_>>()?,
        None => vec![(config.velocity(), config.clone())],
    };
    let decohere = !config.scenarios()?.is_empty();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    // Oracle runs are parallel internally; points go one at a time.
    for (x, c) in &points {
        let ifm = c.interferometer()?;
        let v = c.velocity();
        let coherent = ifm.clone().with_scenarios(Vec::new());
        let fast = coherent.fringe(v, Regime::Quantum)?;
        let mut oc = c.oracle.clone();
        oc.seed = args.seed;
        let o = coherent_pattern_oracle(&coherent, v, &oc).map_err(|e| with_point(e, "x", *x))?;
        let cmp = compare(&fast.signal, &o.signal);
        worst = worst.max(cmp.visibility_difference.abs());
        let mut row = vec![
            *x,
            ifm.talbot_ratio(v)?,
            fast.visibility,
            o.visibility,
            cmp.relative_l2,
            o.window_change.unwrap_or(f64::NAN),
            o.sampling_change.unwrap_or(f64::NAN),
        ];
        if decohere {
            let decohered = ifm.fringe(v, Regime::Quantum)?;
            let mc = mc_decohered_pattern(&ifm, v, &ifm.scenarios, &o, &oc)?;
            row.extend([
                decohered.visibility,
                mc.visibility,
                mc.standard_error,
                mc.predicted_visibility,
            ]);
        }
        rows.push(row);
    }
    let mut t = Table::new("oracle-check", &config.hash, args.seed);
    let first = args
        .scan
        .map(|s| (s.param.name(), s.param.unit()))
        .unwrap_or(("v_z", "m/s"));
    t.column(first.0, first.1);
    for name in [
        "L_over_Ltalbot",
        "fast_visibility",
        "oracle_visibility",
        "relative_l2",
        "window_change",
        "sampling_change",
    ] {
        t.column(name, "1");
    }
    if decohere {
        for name in [
            "decohered_visibility",
            "mc_visibility",
            "mc_standard_error",
            "mc_predicted_visibility",
        ] {
            t.column(name, "1");
        }
    }
    t.rows = rows;
    let summary = format!(
        "{} oracle points, largest visibility difference {worst:.3e}",
        points.len()
    );
    let out = Output {
        csv: t.render(),
        summary,
    };
    if let Some(tol) = args.assert_oracle {
        if worst > tol {
            return Err(Error::OracleMismatch {
                difference: worst,
                tolerance: tol,
            });
        }
    }
    Ok(out)
}

const FIG2: &str = r#"[particle]
mass_amu = 1000

[beam]
talbot_ratio = 1.0

[setup]
separation_m = 0.2
period_ratio = 2

[gratings.1]
period_um = 1
open_fraction = 0.5

[gratings.2]
period_um = 1
open_fraction = 0.5

[gratings.3]
period_um = 1
open_fraction = 0.5
"#;

const FIG4: &str = r#"[particle]
mass_amu = 1000

[beam]
talbot_ratio = 1.0

[setup]
separation_m = 0.2
period_ratio = 2

[gratings.1]
period_um = 1
open_fraction = 0.5

[gratings.2]
period_um = 1
open_fraction = 0.5
thickness_um = 0.2
law = "vdw_c3"
c3_mev_nm3 = 10

[gratings.3]
period_um = 1
open_fraction = 0.5
"#;

/// Built-in configuration text for a figure.
pub fn figure_config(fig: Figure) -> &'static str {
    match fig {
        Figure::Fig2 => FIG2,
        Figure::Fig4 => FIG4,
    }
}

pub const FIGURE_RATIOS: [f64; 3] = [1.0, 0.9, 0.8];

/// Open-fraction scan f = 0.05 .. 0.95 (19 points) at L / L_talbot = 1.0,
/// 0.9 and 0.8, quantum and classical.
pub fn figure_repro(fig: Figure, seed: u64) -> Result<Output> {
    let base = Config::parse(figure_config(fig), Path::new("."))?;
    let fs: Vec<f64> = (1..=19).map(|i| 0.05 * i as f64).collect();
    let jobs: Vec<(f64, f64)> = FIGURE_RATIOS
        .iter()
        .flat_map(|s| fs.iter().map(move |f| (*s, *f)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(s, f)| -> Result<Vec<f64>> {
            let c = ScanParam::TalbotRatio.apply(&base, s)?;
            let c = ScanParam::OpenFraction.apply(&c, f)?;
            let ifm = c.interferometer()?;
            let v = c.velocity();
            let q = ifm
                .fringe(v, Regime::Quantum)
                .map_err(|e| with_point(e, "open_fraction", f))?;
            let cl = ifm
                .fringe(v, Regime::Classical)
                .map_err(|e| with_point(e, "open_fraction", f))?;
            Ok(vec![s, f, q.visibility, cl.visibility])
        })
        .collect::<Result<Vec<_>>>()?;
    let label = match fig {
        Figure::Fig2 => "figure-repro fig2",
        Figure::Fig4 => "figure-repro fig4",
    };
    let mut t = Table::new(label, &base.hash, seed);
    t.column("L_over_Ltalbot", "1");
    t.column("open_fraction", "1");
    t.column("quantum_visibility", "1");
    t.column("classical_visibility", "1");
    let at = |s: f64| {
        rows.iter()
            .find(|r| r[0] == s && (r[1] - 0.5).abs() < 1e-9)
            .map(|r| r[2])
            .unwrap_or(f64::NAN)
    };
    let summary = format!(
        "{label}: quantum visibility at f = 0.5: {:.4} (1.0), {:.4} (0.9), {:.4} (0.8)",
        at(1.0),
        at(0.9),
        at(0.8)
    );
    t.rows = rows;
    Ok(Output {
        csv: t.render(),
        summary,
    })
}

/// Parses the data rows of a CSV written by this module.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty CSV".into()))?
        .split(',')
        .map(String::from)
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|e| Error::Config(format!("{c:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}
