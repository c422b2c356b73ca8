//! Photon-count chain `n_p = N R η_fiber T η_D` and its inversion.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BudgetError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("detection chain R·η_fiber·T·η_D is zero; atom number cannot be inferred")]
    ZeroChain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserParams {
    /// Total intensity over all beams (mW/cm²).
    pub intensity: f64,
    /// Signed detuning (MHz).
    pub detuning: f64,
    /// mW/cm².
    pub i_sat: f64,
    /// Excited-state lifetime (s).
    pub lifetime: f64,
}

impl LaserParams {
    pub fn validate(&self) -> Result<(), BudgetError> {
        if !(self.intensity >= 0.0 && self.intensity.is_finite()) {
            return Err(BudgetError::InvalidParameter(format!("intensity {}", self.intensity)));
        }
        if !self.detuning.is_finite() {
            return Err(BudgetError::InvalidParameter(format!("detuning {}", self.detuning)));
        }
        if !(self.i_sat > 0.0) {
            return Err(BudgetError::InvalidParameter(format!("i_sat {}", self.i_sat)));
        }
        if !(self.lifetime > 0.0) {
            return Err(BudgetError::InvalidParameter(format!("lifetime {}", self.lifetime)));
        }
        Ok(())
    }

    /// Natural linewidth `Γ = 1/τ` (rad/s).
    pub fn gamma(&self) -> f64 {
        1.0 / self.lifetime
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetParams {
    pub n_atoms: f64,
    pub eta_fiber: f64,
    pub transmission: f64,
    pub det_qe: f64,
}

impl BudgetParams {
    pub fn validate(&self) -> Result<(), BudgetError> {
        if !(self.n_atoms >= 0.0 && self.n_atoms.is_finite()) {
            return Err(BudgetError::InvalidParameter(format!("n_atoms {}", self.n_atoms)));
        }
        for (name, v) in [
            ("eta_fiber", self.eta_fiber),
            ("transmission", self.transmission),
            ("det_qe", self.det_qe),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(BudgetError::InvalidParameter(format!("{name} {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// `η_fiber T η_D`.
    pub fn efficiency(&self) -> f64 {
        self.eta_fiber * self.transmission * self.det_qe
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationShell {
    /// m.
    pub inner_radius: f64,
    /// m.
    pub thickness: f64,
    /// m.
    pub length: f64,
    /// atoms/cm³.
    pub density: f64,
}

impl ObservationShell {
    pub fn validate(&self) -> Result<(), BudgetError> {
        for (name, v) in [
            ("inner_radius", self.inner_radius),
            ("length", self.length),
            ("density", self.density),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BudgetError::InvalidParameter(format!("{name} {v} must be positive")));
            }
        }
        if !(self.thickness >= 0.0 && self.thickness.is_finite()) {
            return Err(BudgetError::InvalidParameter(format!("thickness {}", self.thickness)));
        }
        Ok(())
    }

    /// Shell volume (m³).
    pub fn volume(&self) -> f64 {
        let outer = self.inner_radius + self.thickness;
        PI * (outer * outer - self.inner_radius * self.inner_radius) * self.length
    }
}

/// Two-level steady-state scattering rate (photons/s).
pub fn scattering_rate(laser: &LaserParams) -> f64 {
    let gamma = laser.gamma();
    let s0 = laser.intensity / laser.i_sat;
    let delta = 2.0 * PI * laser.detuning * 1e6;
    0.5 * gamma * s0 / (1.0 + s0 + (2.0 * delta / gamma).powi(2))
}

/// Detected counts per second.
pub fn photon_count(budget: &BudgetParams, rate: f64) -> f64 {
    budget.n_atoms * rate * budget.efficiency()
}

/// `N = observed / (R η_fiber T η_D)`; `budget.n_atoms` is ignored.
pub fn infer_atom_number(observed: f64, budget: &BudgetParams, rate: f64) -> Result<f64, BudgetError> {
    let chain = rate * budget.efficiency();
    if !(chain > 0.0) {
        return Err(BudgetError::ZeroChain);
    }
    Ok(observed / chain)
}

/// Atoms inside the shell at its stated density.
pub fn effective_atom_number(shell: &ObservationShell) -> f64 {
    // cm⁻³ → m⁻³
    shell.density * 1e6 * shell.volume()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inference {
    pub observed: f64,
    pub background: f64,
    pub signal: f64,
    pub n_atoms: f64,
    /// True when the observed rate does not exceed the background, so the
    /// inferred number is not a measurement of atoms.
    pub background_dominated: bool,
}

/// Inference with background bookkeeping: the background is subtracted when
/// `subtract_background` is set, and the result is flagged whenever
/// `observed <= background`.
pub fn infer_with_background(
    observed: f64,
    background: f64,
    subtract_background: bool,
    budget: &BudgetParams,
    rate: f64,
) -> Result<Inference, BudgetError> {
    let signal = if subtract_background {
        (observed - background).max(0.0)
    } else {
        observed
    };
    Ok(Inference {
        observed,
        background,
        signal,
        n_atoms: infer_atom_number(signal, budget, rate)?,
        background_dominated: observed <= background,
    })
}
