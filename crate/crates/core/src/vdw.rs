//! Atom–surface van der Waals potential `-C3/z³` and the resulting line shift.
//!
//! C3 values are carried in kHz·μm³ (energies divided by h), potentials and
//! shifts are returned in MHz, distances in metres.

use crate::constants::UM;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VdwError {
    #[error("distance must be positive, got {0:e} m")]
    NonpositiveDistance(f64),
    #[error("detuning must be negative (red of resonance), got {0} MHz")]
    NonnegativeDetuning(f64),
    #[error("invalid van der Waals parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElectronicState {
    Ground,
    Excited,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VdwParams {
    /// kHz·μm³.
    pub c3_ground: f64,
    /// kHz·μm³.
    pub c3_excited: f64,
    /// Hard-wall position (m).
    pub z_min: f64,
    /// Shift scale ν (MHz) in `Δν = -ν/(k0 z)³`.
    pub nu_shift: f64,
    /// Transition wavelength defining `k0` (m).
    pub wavelength: f64,
}

impl VdwParams {
    /// Excited-state C3 chosen so that the C3 difference reproduces `nu_shift`.
    pub fn calibrated(c3_ground: f64, nu_shift: f64, wavelength: f64, z_min: f64) -> Result<Self, VdwError> {
        let k0_um = 2.0 * PI / (wavelength / UM);
        let params = VdwParams {
            c3_ground,
            c3_excited: c3_ground + 1e3 * nu_shift / k0_um.powi(3),
            z_min,
            nu_shift,
            wavelength,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), VdwError> {
        let bad = |m: String| Err(VdwError::InvalidParams(m));
        if !(self.c3_ground > 0.0) {
            return bad(format!("c3_ground {} <= 0", self.c3_ground));
        }
        if !(self.c3_excited > self.c3_ground) {
            return bad(format!(
                "c3_excited {} must exceed c3_ground {}",
                self.c3_excited, self.c3_ground
            ));
        }
        if !(self.z_min > 0.0) {
            return bad(format!("z_min {} <= 0", self.z_min));
        }
        if !(self.nu_shift > 0.0) {
            return bad(format!("nu_shift {} <= 0", self.nu_shift));
        }
        if !(self.wavelength > 0.0) {
            return bad(format!("wavelength {} <= 0", self.wavelength));
        }
        Ok(())
    }

    /// `k0` in 1/m.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn c3(&self, state: ElectronicState) -> f64 {
        match state {
            ElectronicState::Ground => self.c3_ground,
            ElectronicState::Excited => self.c3_excited,
        }
    }

    /// `(c3_excited − c3_ground)` relative to `ν/k0³`, minus one.
    pub fn shift_consistency(&self) -> f64 {
        let k0_um = self.k0() * UM;
        (self.c3_excited - self.c3_ground) / (1e3 * self.nu_shift / k0_um.powi(3)) - 1.0
    }
}

/// `-c3/z³` in MHz for `c3` in kHz·μm³ and `z` in metres.
pub fn potential(c3: f64, z: f64) -> Result<f64, VdwError> {
    if !(z > 0.0) {
        return Err(VdwError::NonpositiveDistance(z));
    }
    Ok(potential_unchecked(c3, z))
}

#[inline]
pub(crate) fn potential_unchecked(c3: f64, z: f64) -> f64 {
    let z_um = z / UM;
    -1e-3 * c3 / (z_um * z_um * z_um)
}

/// Resonance shift `-ν/(k0 z)³` in MHz.
pub fn line_shift(params: &VdwParams, z: f64) -> Result<f64, VdwError> {
    if !(z > 0.0) {
        return Err(VdwError::NonpositiveDistance(z));
    }
    Ok(-params.nu_shift / (params.k0() * z).powi(3))
}

/// Inverse of [`line_shift`].
pub fn distance_for_detuning(params: &VdwParams, detuning: f64) -> Result<f64, VdwError> {
    if !(detuning < 0.0) {
        return Err(VdwError::NonnegativeDetuning(detuning));
    }
    Ok((params.nu_shift / detuning.abs()).cbrt() / params.k0())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialOnGrid {
    pub params: VdwParams,
    pub electronic_state: ElectronicState,
    pub values: Vec<f64>,
}

impl PotentialOnGrid {
    /// Samples the potential at every `z` (m), all of which must be positive.
    pub fn sample(params: &VdwParams, state: ElectronicState, z: &[f64]) -> Result<Self, VdwError> {
        let c3 = params.c3(state);
        let values = z.iter().map(|&z| potential(c3, z)).collect::<Result<Vec<_>, _>>()?;
        Ok(PotentialOnGrid {
            params: *params,
            electronic_state: state,
            values,
        })
    }

    pub fn c3(&self) -> f64 {
        self.params.c3(self.electronic_state)
    }
}
