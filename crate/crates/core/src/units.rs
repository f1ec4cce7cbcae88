//! Unit conversions between the configuration-facing units (cm⁻¹, ps, a₀,
//! amu) and the atomic units used everywhere inside the library (ħ = 1).

use crate::error::{Error, Result};

/// Wavenumbers per hartree (CODATA 2018).
pub const CM1_PER_HARTREE: f64 = 219474.6313632;

/// Picoseconds per atomic unit of time (CODATA 2018).
pub const PS_PER_AU_TIME: f64 = 2.4188843265857e-5;

/// Electron masses per unified atomic mass unit (CODATA 2018).
pub const ME_PER_AMU: f64 = 1822.888486209;

/// ħ in mixed units of cm⁻¹·ps.
pub const HBAR_CM1_PS: f64 = CM1_PER_HARTREE * PS_PER_AU_TIME;

/// Electric field strength of one atomic unit, in V/m.
pub const FIELD_AU_V_PER_M: f64 = 5.142_206_747_63e11;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Vacuum permittivity in F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// The conversion factors of the four dimensions the library handles.
/// Lengths are always Bohr radii, so they carry a unit factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    pub energy_cm1_per_hartree: f64,
    pub time_ps_per_au: f64,
    pub length_a0_per_au: f64,
    pub mass_me_per_amu: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::CODATA
    }
}

impl UnitSystem {
    pub const CODATA: UnitSystem = UnitSystem {
        energy_cm1_per_hartree: CM1_PER_HARTREE,
        time_ps_per_au: PS_PER_AU_TIME,
        length_a0_per_au: 1.0,
        mass_me_per_amu: ME_PER_AMU,
    };

    pub fn energy_to_internal(&self, cm1: f64) -> Result<f64> {
        finite("energy", cm1)?;
        Ok(cm1 / self.energy_cm1_per_hartree)
    }

    pub fn energy_from_internal(&self, hartree: f64) -> f64 {
        hartree * self.energy_cm1_per_hartree
    }

    pub fn time_to_internal(&self, ps: f64) -> Result<f64> {
        finite("time", ps)?;
        Ok(ps / self.time_ps_per_au)
    }

    pub fn time_from_internal(&self, au: f64) -> f64 {
        au * self.time_ps_per_au
    }

    pub fn length_to_internal(&self, a0: f64) -> Result<f64> {
        finite("length", a0)?;
        Ok(a0 / self.length_a0_per_au)
    }

    pub fn mass_to_internal(&self, amu: f64) -> Result<f64> {
        finite("mass", amu)?;
        Ok(amu * self.mass_me_per_amu)
    }
}

fn finite(what: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{what} value {value}")))
    }
}

/// cm⁻¹ → hartree.
pub fn energy_to_internal(cm1: f64) -> Result<f64> {
    UnitSystem::CODATA.energy_to_internal(cm1)
}

/// hartree → cm⁻¹.
pub fn energy_from_internal(hartree: f64) -> f64 {
    UnitSystem::CODATA.energy_from_internal(hartree)
}

/// ps → atomic time units.
pub fn time_to_internal(ps: f64) -> Result<f64> {
    UnitSystem::CODATA.time_to_internal(ps)
}

/// atomic time units → ps.
pub fn time_from_internal(au: f64) -> f64 {
    UnitSystem::CODATA.time_from_internal(au)
}

/// amu → electron masses.
pub fn mass_to_internal(amu: f64) -> Result<f64> {
    UnitSystem::CODATA.mass_to_internal(amu)
}

/// Rate in 1/ps² → 1/(atomic time)².
pub fn rate2_to_internal(per_ps2: f64) -> Result<f64> {
    finite("chirp rate", per_ps2)?;
    Ok(per_ps2 * PS_PER_AU_TIME * PS_PER_AU_TIME)
}

/// Rate in 1/(atomic time)² → 1/ps².
pub fn rate2_from_internal(per_au2: f64) -> f64 {
    per_au2 / (PS_PER_AU_TIME * PS_PER_AU_TIME)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn energy_examples() {
        assert!((energy_to_internal(219474.6313632).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(energy_to_internal(0.0).unwrap(), 0.0);
        let w = energy_to_internal(13.17).unwrap();
        assert!((w - 6.0007e-5).abs() / 6.0007e-5 < 1e-4, "{w}");
    }

    #[test]
    fn time_examples() {
        assert!((time_to_internal(2.4188843265857e-5).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(time_to_internal(0.0).unwrap(), 0.0);
        let t = time_to_internal(1.27).unwrap();
        assert!((t - 5.2504e4).abs() / 5.2504e4 < 1e-4, "{t}");
    }

    #[test]
    fn non_finite_rejected() {
        assert!(energy_to_internal(f64::NAN).is_err());
        assert!(time_to_internal(f64::INFINITY).is_err());
        assert!(mass_to_internal(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn hbar_mixed_units() {
        assert!((HBAR_CM1_PS - 5.30883746).abs() < 1e-7, "{HBAR_CM1_PS}");
        let period = std::f64::consts::PI * HBAR_CM1_PS / 13.17;
        assert!((period - 1.26638).abs() < 1e-5, "{period}");
        assert!((period - 1.27).abs() / 1.27 < 5e-3);
    }

    #[test]
    fn factors_positive() {
        let u = UnitSystem::default();
        for f in [
            u.energy_cm1_per_hartree,
            u.time_ps_per_au,
            u.length_a0_per_au,
            u.mass_me_per_amu,
        ] {
            assert!(f > 0.0);
        }
    }

    proptest! {
        #[test]
        fn round_trips(x in -1e8f64..1e8) {
            let e = energy_from_internal(energy_to_internal(x).unwrap());
            prop_assert!((e - x).abs() <= 1e-12 * x.abs().max(1e-300));
            let t = time_from_internal(time_to_internal(x).unwrap());
            prop_assert!((t - x).abs() <= 1e-12 * x.abs().max(1e-300));
            let r = rate2_from_internal(rate2_to_internal(x).unwrap());
            prop_assert!((r - x).abs() <= 1e-12 * x.abs().max(1e-300));
        }
    }
}
