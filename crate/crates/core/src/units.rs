//! Physical constants (CODATA 2018, exact where SI defines them) and the
//! unit conversions applied at the configuration boundary. Everything past
//! the boundary is SI.

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;

pub const NM: f64 = 1e-9;
pub const UM: f64 = 1e-6;
pub const MEV: f64 = 1e-3 * ELEMENTARY_CHARGE;
pub const MBAR: f64 = 100.0;

pub fn amu(m: f64) -> f64 {
    m * ATOMIC_MASS_UNIT
}

pub fn nm(x: f64) -> f64 {
    x * NM
}

pub fn um(x: f64) -> f64 {
    x * UM
}

/// Polarizability volume in nm^3 to m^3.
pub fn nm3(a: f64) -> f64 {
    a * 1e-27
}

/// A C3 coefficient given in meV nm^3, to J m^3.
pub fn mev_nm3(c: f64) -> f64 {
    c * MEV * 1e-27
}

/// A C4 coefficient given in meV nm^4, to J m^4.
pub fn mev_nm4(c: f64) -> f64 {
    c * MEV * 1e-36
}

/// A C6 coefficient given in meV nm^6, to J m^6.
pub fn mev_nm6(c: f64) -> f64 {
    c * MEV * 1e-54
}

pub fn mbar(p: f64) -> f64 {
    p * MBAR
}

/// Ground-state excitation frequency corresponding to a photon energy in eV.
pub fn ev_to_angular_frequency(e: f64) -> f64 {
    e * ELEMENTARY_CHARGE / HBAR
}

/// Units accepted in configuration files. `to_si` and `from_si` are exact
/// inverses up to one rounding each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Amu,
    Metre,
    Micrometre,
    Nanometre,
    CubicNanometre,
    SquareNanometre,
    MevNm3,
    MevNm4,
    MevNm6,
    Kelvin,
    Watt,
    Millibar,
    MetrePerSecond,
    ElectronVolt,
    /// Heat capacity in units of k_B.
    Boltzmann,
}

impl Unit {
    pub const ALL: [Unit; 15] = [
        Unit::Amu,
        Unit::Metre,
        Unit::Micrometre,
        Unit::Nanometre,
        Unit::CubicNanometre,
        Unit::SquareNanometre,
        Unit::MevNm3,
        Unit::MevNm4,
        Unit::MevNm6,
        Unit::Kelvin,
        Unit::Watt,
        Unit::Millibar,
        Unit::MetrePerSecond,
        Unit::ElectronVolt,
        Unit::Boltzmann,
    ];

    /// SI value of one unit. Electron volts convert to angular frequency.
    pub fn factor(self) -> f64 {
        match self {
            Unit::Amu => ATOMIC_MASS_UNIT,
            Unit::Metre | Unit::Kelvin | Unit::Watt | Unit::MetrePerSecond => 1.0,
            Unit::Micrometre => UM,
            Unit::Nanometre => NM,
            Unit::CubicNanometre => 1e-27,
            Unit::SquareNanometre => 1e-18,
            Unit::MevNm3 => MEV * 1e-27,
            Unit::MevNm4 => MEV * 1e-36,
            Unit::MevNm6 => MEV * 1e-54,
            Unit::Millibar => MBAR,
            Unit::ElectronVolt => ELEMENTARY_CHARGE / HBAR,
            Unit::Boltzmann => BOLTZMANN,
        }
    }

    pub fn to_si(self, x: f64) -> f64 {
        x * self.factor()
    }

    pub fn from_si(self, x: f64) -> f64 {
        x / self.factor()
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Amu => "amu",
            Unit::Metre => "m",
            Unit::Micrometre => "um",
            Unit::Nanometre => "nm",
            Unit::CubicNanometre => "nm^3",
            Unit::SquareNanometre => "nm^2",
            Unit::MevNm3 => "meV nm^3",
            Unit::MevNm4 => "meV nm^4",
            Unit::MevNm6 => "meV nm^6",
            Unit::Kelvin => "K",
            Unit::Watt => "W",
            Unit::Millibar => "mbar",
            Unit::MetrePerSecond => "m/s",
            Unit::ElectronVolt => "eV",
            Unit::Boltzmann => "k_B",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_are_linear_scalings() {
        assert_eq!(amu(2.0), 2.0 * ATOMIC_MASS_UNIT);
        assert_eq!(um(1.0), 1e-6);
        assert!((mev_nm3(10.0) - 1.602_176_634e-48).abs() < 1e-60);
        assert!((mbar(1e-6) - 1e-4).abs() < 1e-19);
    }

    #[test]
    fn hbar_matches_codata() {
        assert!((HBAR - 1.054_571_817e-34).abs() / HBAR < 1e-9);
    }
}
