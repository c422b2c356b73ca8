//! Fraction of spontaneous emission channelled into one direction of the
//! guided mode.
//!
//! For a dipole along unit vector `u` the rate into one direction, summed over
//! both quasi-linear polarisations and divided by the free-space rate, is
//! `(3π n_g / (2 k0²)) |u·e|² / ∫n²|e|²dA` with `n_g = dβ/dk0`. The
//! radiation-mode rate is taken as the free-space rate, so
//! `η = c g / (1 + 2 c g)` with the calibration scalar `c`.

use crate::fiber::GuidedMode;
use crate::quadrature::midpoints;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub const SHELL_CELLS: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("atom at r = {r:e} m is inside the fiber (a = {a:e} m)")]
    AtomInsideFiber { r: f64, a: f64 },
    #[error("observation shell has non-positive thickness {0:e} m")]
    EmptyShell(f64),
    #[error("calibration scalar must be finite and non-negative, got {0}")]
    InvalidCalibration(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DipoleModel {
    #[default]
    IsotropicAverage,
    Radial,
    Azimuthal,
    Axial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// How the shell average weights each radius.
pub enum ShellWeighting<'a> {
    VolumeUniform,
    /// Relative atom density as a function of radius (m).
    DensityProfile(&'a (dyn Fn(f64) -> f64 + Sync)),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingCurve {
    /// Positions in units of the fiber radius.
    pub radii: Vec<f64>,
    pub eta_per_direction: Vec<f64>,
    pub mode: GuidedMode,
    pub dipole_model: DipoleModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionCoupling {
    mode: GuidedMode,
    calibration: f64,
    prefactor: f64,
}

impl EmissionCoupling {
    pub fn new(mode: &GuidedMode) -> Self {
        let k0 = mode.spec.k0();
        EmissionCoupling {
            mode: *mode,
            calibration: 1.0,
            prefactor: 3.0 * PI * mode.group_index / (2.0 * k0 * k0) / mode.index_weighted_norm,
        }
    }

    pub fn with_calibration(mut self, calibration: f64) -> Result<Self, CouplingError> {
        if !(calibration.is_finite() && calibration >= 0.0) {
            return Err(CouplingError::InvalidCalibration(calibration));
        }
        self.calibration = calibration;
        Ok(self)
    }

    pub fn mode(&self) -> &GuidedMode {
        &self.mode
    }

    /// Uncalibrated one-direction guided rate over the free-space rate.
    pub fn guided_rate(&self, r: f64, dipole: DipoleModel, direction: Direction) -> f64 {
        let e = self.mode.components(r);
        // backward-propagating mode has e_z reversed
        let ez = match direction {
            Direction::Forward => e.axial,
            Direction::Backward => -e.axial,
        };
        let c2 = match dipole {
            DipoleModel::Radial => e.radial * e.radial,
            DipoleModel::Azimuthal => e.azimuthal * e.azimuthal,
            DipoleModel::Axial => ez * ez,
            DipoleModel::IsotropicAverage => {
                (e.radial * e.radial + e.azimuthal * e.azimuthal + ez * ez) / 3.0
            }
        };
        self.prefactor * c2
    }

    /// η for one direction at radius `r` (m).
    pub fn eta_guided(&self, r: f64, dipole: DipoleModel) -> Result<f64, CouplingError> {
        let a = self.mode.spec.radius;
        if !(r >= a) {
            return Err(CouplingError::AtomInsideFiber { r, a });
        }
        let eta = |d| {
            let g = self.calibration * self.guided_rate(r, d, Direction::Forward);
            g / (1.0 + 2.0 * g)
        };
        Ok(match dipole {
            DipoleModel::IsotropicAverage => {
                (eta(DipoleModel::Radial) + eta(DipoleModel::Azimuthal) + eta(DipoleModel::Axial))
                    / 3.0
            }
            d => eta(d),
        })
    }

    /// Average of η over the shell `[a, a + thickness]`, midpoint rule with
    /// `r dr` weighting.
    pub fn eta_fiber_average(
        &self,
        thickness: f64,
        dipole: DipoleModel,
        weighting: ShellWeighting<'_>,
    ) -> Result<f64, CouplingError> {
        self.shell_average(thickness, dipole, weighting, SHELL_CELLS)
    }

    pub fn shell_average(
        &self,
        thickness: f64,
        dipole: DipoleModel,
        weighting: ShellWeighting<'_>,
        cells: usize,
    ) -> Result<f64, CouplingError> {
        if !(thickness > 0.0) {
            return Err(CouplingError::EmptyShell(thickness));
        }
        let a = self.mode.spec.radius;
        let mut num = 0.0;
        let mut den = 0.0;
        for r in midpoints(a, a + thickness, cells) {
            let density = match &weighting {
                ShellWeighting::VolumeUniform => 1.0,
                ShellWeighting::DensityProfile(f) => f(r),
            };
            num += self.eta_guided(r, dipole)? * r * density;
            den += r * density;
        }
        Ok(num / den)
    }

    /// η on a list of radii given in units of `a`. Order of the output
    /// matches the input regardless of the worker count.
    pub fn curve(&self, radii_over_a: &[f64], dipole: DipoleModel) -> Result<CouplingCurve, CouplingError> {
        let a = self.mode.spec.radius;
        let eta = radii_over_a
            .par_iter()
            .map(|&x| self.eta_guided(x * a, dipole))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CouplingCurve {
            radii: radii_over_a.to_vec(),
            eta_per_direction: eta,
            mode: self.mode,
            dipole_model: dipole,
        })
    }
}
