//! Chirped Gaussian laser pulses in the rotating-wave picture.
//!
//! A pulse contributes the coupling `-W_L f(t) exp(∓iφ(t))` between its lower
//! and upper channel, where
//!
//! ```text
//! f(t) = sqrt(τ_L/τ_C) exp(-2 ln2 ((t - t_P)/τ_C)²)
//! φ(t) = ½ β (t - t_P)²
//! ```
//!
//! `τ_C` is the FWHM of the intensity profile `f²` after chirping and `τ_L`
//! that of the transform-limited pulse.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::units;

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSpec {
    /// Peak coupling strength (hartree), sign included.
    pub w_l: f64,
    /// Carrier photon energy ħω_L (hartree).
    pub photon_energy: f64,
    /// Envelope center.
    pub t_p: f64,
    /// Chirped intensity FWHM.
    pub tau_c: f64,
    /// Transform-limited intensity FWHM.
    pub tau_l: f64,
    /// Quadratic phase coefficient β (1/time²).
    pub chirp_rate: f64,
    /// (lower, upper) channel indices.
    pub channels: (usize, usize),
}

impl PulseSpec {
    pub fn validate(&self) -> Result<()> {
        let values = [
            self.w_l,
            self.photon_energy,
            self.t_p,
            self.tau_c,
            self.tau_l,
            self.chirp_rate,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("pulse parameters {values:?}")));
        }
        if !(self.tau_l > 0.0) {
            return Err(Error::InvalidInput(format!("τ_L must be positive, got {}", self.tau_l)));
        }
        if self.tau_c < self.tau_l {
            return Err(Error::InvalidInput(format!(
                "τ_C ({}) must not be shorter than τ_L ({})",
                self.tau_c, self.tau_l
            )));
        }
        if self.channels.0 == self.channels.1 {
            return Err(Error::InvalidInput("pulse must couple two distinct channels".into()));
        }
        Ok(())
    }

    /// Envelope maximum `sqrt(τ_L/τ_C)`.
    pub fn peak(&self) -> f64 {
        (self.tau_l / self.tau_c).sqrt()
    }

    pub fn envelope(&self, t: f64) -> f64 {
        let x = (t - self.t_p) / self.tau_c;
        self.peak() * (-2.0 * LN_2 * x * x).exp()
    }

    pub fn phase(&self, t: f64) -> f64 {
        let x = t - self.t_p;
        0.5 * self.chirp_rate * x * x
    }

    /// Instantaneous frequency offset `dφ/dt` from the carrier.
    pub fn frequency_shift(&self, t: f64) -> f64 {
        self.chirp_rate * (t - self.t_p)
    }

    pub fn chirped_rabi_period(&self) -> Result<f64> {
        chirped_rabi_period(self.w_l, self.tau_c, self.tau_l)
    }
}

/// `√(τ_C/τ_L) π ħ / |W_L|`.
pub fn chirped_rabi_period(w_l: f64, tau_c: f64, tau_l: f64) -> Result<f64> {
    if w_l == 0.0 || !w_l.is_finite() {
        return Err(Error::InvalidInput(format!(
            "Rabi period needs a finite nonzero W_L, got {w_l}"
        )));
    }
    Ok((tau_c / tau_l).sqrt() * PI / w_l.abs())
}

/// Chirp rate that stretches a transform-limited pulse of width `τ_L` to
/// `τ_C` at constant bandwidth: `sign (4 ln2/τ_C²) √((τ_C/τ_L)² - 1)`.
pub fn default_chirp_rate(tau_l: f64, tau_c: f64, sign: f64) -> Result<f64> {
    if !(tau_l > 0.0) || tau_c < tau_l {
        return Err(Error::InvalidInput(format!(
            "default chirp rate needs 0 < τ_L ≤ τ_C (got τ_L = {tau_l}, τ_C = {tau_c})"
        )));
    }
    let ratio = tau_c / tau_l;
    Ok(sign.signum() * 4.0 * LN_2 / (tau_c * tau_c) * (ratio * ratio - 1.0).sqrt())
}

/// Coupling `W_L = -½ E₀ D` (hartree) for a peak intensity in W/cm² and a
/// transition dipole in atomic units, with `E₀ = √(2I / c ε₀)`.
pub fn coupling_from_intensity(intensity_w_per_cm2: f64, dipole_au: f64) -> Result<f64> {
    if !(intensity_w_per_cm2 >= 0.0) || !dipole_au.is_finite() {
        return Err(Error::InvalidInput(format!(
            "intensity {intensity_w_per_cm2} W/cm² and dipole {dipole_au} a.u. must be finite, intensity ≥ 0"
        )));
    }
    let intensity_si = intensity_w_per_cm2 * 1e4;
    let field_si = (2.0 * intensity_si / (units::SPEED_OF_LIGHT * units::VACUUM_PERMITTIVITY)).sqrt();
    Ok(-0.5 * field_si / units::FIELD_AU_V_PER_M * dipole_au)
}

/// Pulses ordered by center time, optionally repeated with a fixed period.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSequence {
    pulses: Vec<PulseSpec>,
    repetition_period: Option<f64>,
}

impl PulseSequence {
    pub fn new(mut pulses: Vec<PulseSpec>, repetition_period: Option<f64>) -> Result<Self> {
        for p in &pulses {
            p.validate()?;
        }
        if let Some(t) = repetition_period {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "repetition period must be positive, got {t}"
                )));
            }
        }
        pulses.sort_by(|a, b| a.t_p.total_cmp(&b.t_p));
        Ok(Self {
            pulses,
            repetition_period,
        })
    }

    pub fn pulses(&self) -> &[PulseSpec] {
        &self.pulses
    }

    pub fn repetition_period(&self) -> Option<f64> {
        self.repetition_period
    }

    /// Every pulse instance whose center lies before `t_end`, with repeated
    /// copies shifted by whole periods, sorted by center.
    pub fn expanded(&self, t_end: f64) -> Vec<PulseSpec> {
        let Some(period) = self.repetition_period else {
            return self.pulses.clone();
        };
        let Some(first) = self.pulses.first() else {
            return Vec::new();
        };
        let mut out = self.pulses.clone();
        let mut k = 1;
        while first.t_p + k as f64 * period <= t_end {
            let shift = k as f64 * period;
            out.extend(self.pulses.iter().map(|p| PulseSpec {
                t_p: p.t_p + shift,
                ..p.clone()
            }));
            k += 1;
        }
        out.sort_by(|a, b| a.t_p.total_cmp(&b.t_p));
        out
    }
}
