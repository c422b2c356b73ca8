//! Franck–Condon line lists and broadened excitation spectra.
//!
//! Detunings are in MHz from the free-atom resonance. Line strengths are pure
//! Franck–Condon factors times a population or thermal weight (constant
//! transition dipole).

mod pipeline;

pub use pipeline::{SpectrumModel, SpectrumResult};

use crate::constants::thermal_energy_mhz;
use crate::qm1d::{self, solve_continuum, BoundState, Grid, QmError};
use crate::quadrature::Rule;
use crate::vdw::{PotentialOnGrid, VdwError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Tail length, in free wavelengths, needed by the continuum solver
/// (10 oscillations in the last quarter) plus a margin.
const CONTINUUM_WAVELENGTHS: f64 = 44.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("sample counts differ: {0} vs {1}")]
    GridMismatch(usize, usize),
    #[error("no states to build lines from: {0}")]
    EmptyBasis(&'static str),
    #[error("fit is degenerate: {0}")]
    DegenerateFit(String),
    #[error("invalid spectrum parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Solver(#[from] QmError),
    #[error(transparent)]
    Potential(#[from] VdwError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    BoundBound,
    FreeBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    /// MHz.
    pub center: f64,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineList {
    pub lines: Vec<Line>,
    pub kind: LineKind,
}

impl LineList {
    pub fn total_strength(&self) -> f64 {
        self.lines.iter().map(|l| l.strength).sum()
    }

    pub fn max_strength(&self) -> f64 {
        self.lines.iter().map(|l| l.strength).fold(0.0, f64::max)
    }

    /// Lines whose strength is at least `floor` times the strongest one.
    pub fn count_above(&self, floor: f64) -> usize {
        let cut = floor * self.max_strength();
        self.lines.iter().filter(|l| l.strength >= cut && l.strength > 0.0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme")]
pub enum PopulationScheme {
    /// Equal weight for every ground state bound by at most the cutoff.
    EqualToCutoff,
    /// `exp(E/kT)` weights (E < 0) below the cutoff, normalised to one per
    /// state on average.
    Boltzmann { temperature: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationModel {
    pub scheme: PopulationScheme,
    /// Largest populated binding energy (MHz, positive).
    pub binding_cutoff: f64,
}

impl PopulationModel {
    pub fn equal(binding_cutoff: f64) -> Self {
        PopulationModel {
            scheme: PopulationScheme::EqualToCutoff,
            binding_cutoff,
        }
    }

    fn validate(&self) -> Result<(), SpectrumError> {
        if !(self.binding_cutoff > 0.0) {
            return Err(SpectrumError::InvalidParameter(format!(
                "binding cutoff {} <= 0",
                self.binding_cutoff
            )));
        }
        if let PopulationScheme::Boltzmann { temperature } = self.scheme {
            if !(temperature > 0.0) {
                return Err(SpectrumError::InvalidParameter(format!(
                    "population temperature {temperature} <= 0"
                )));
            }
        }
        Ok(())
    }

    /// Population of each state (zero beyond the cutoff).
    pub fn populations(&self, states: &[BoundState]) -> Vec<f64> {
        let inside = |s: &BoundState| s.energy >= -self.binding_cutoff;
        match self.scheme {
            PopulationScheme::EqualToCutoff => states
                .iter()
                .map(|s| if inside(s) { 1.0 } else { 0.0 })
                .collect(),
            PopulationScheme::Boltzmann { temperature } => {
                let kt = thermal_energy_mhz(temperature);
                let raw: Vec<f64> = states
                    .iter()
                    .map(|s| if inside(s) { (s.energy / kt).exp() } else { 0.0 })
                    .collect();
                let count = raw.iter().filter(|&&w| w > 0.0).count() as f64;
                let sum: f64 = raw.iter().sum();
                raw.iter().map(|w| w * count / sum).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyQuadrature {
    GaussLaguerre,
    /// Midpoint rule on `(0, 12 kT]`.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalModel {
    /// K.
    pub temperature: f64,
    pub n_energy_samples: usize,
    pub energy_quadrature: EnergyQuadrature,
}

impl ThermalModel {
    fn validate(&self) -> Result<(), SpectrumError> {
        if !(self.temperature > 0.0) {
            return Err(SpectrumError::InvalidParameter(format!(
                "temperature {} <= 0",
                self.temperature
            )));
        }
        if self.n_energy_samples < 8 {
            return Err(SpectrumError::InvalidParameter(format!(
                "{} energy samples, at least 8 required",
                self.n_energy_samples
            )));
        }
        Ok(())
    }

    /// Collision energies (MHz) and weights of `exp(-E/kT)`, weights summing
    /// to one.
    pub fn energy_samples(&self) -> Vec<(f64, f64)> {
        let kt = thermal_energy_mhz(self.temperature);
        let n = self.n_energy_samples;
        let (x, w): (Vec<f64>, Vec<f64>) = match self.energy_quadrature {
            EnergyQuadrature::GaussLaguerre => {
                let rule = Rule::gauss_laguerre(n);
                (rule.nodes, rule.weights)
            }
            EnergyQuadrature::Uniform => {
                let x = crate::quadrature::midpoints(0.0, 12.0, n);
                let w = x.iter().map(|x| (-x).exp()).collect();
                (x, w)
            }
        };
        let total: f64 = w.iter().sum();
        x.iter().zip(&w).map(|(x, w)| (x * kt, w / total)).collect()
    }
}

/// Uniform detuning axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetuningGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl DetuningGrid {
    pub fn points(&self) -> Result<Vec<f64>, SpectrumError> {
        if !(self.step > 0.0 && self.stop > self.start) {
            return Err(SpectrumError::InvalidParameter(format!("detuning grid {self:?}")));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumProfile {
    pub detunings: Vec<f64>,
    pub intensity: Vec<f64>,
    /// Lorentzian FWHM used (MHz), if the profile was broadened directly.
    pub fwhm: Option<f64>,
    pub line_count: usize,
}

impl SpectrumProfile {
    /// `(detuning, intensity)` of the global maximum.
    pub fn peak(&self) -> (f64, f64) {
        let mut best = (self.detunings[0], self.intensity[0]);
        for (&d, &v) in self.detunings.iter().zip(&self.intensity) {
            if v > best.1 {
                best = (d, v);
            }
        }
        best
    }

    /// Detunings of strict interior local maxima.
    pub fn local_maxima(&self) -> Vec<f64> {
        let y = &self.intensity;
        (1..y.len().saturating_sub(1))
            .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1])
            .map(|i| self.detunings[i])
            .collect()
    }

    /// Linear interpolation; `None` outside the axis.
    pub fn value_at(&self, detuning: f64) -> Option<f64> {
        interpolate(&self.detunings, &self.intensity, detuning)
    }

    /// Largest intensity on `[lo, hi]`.
    pub fn max_in(&self, lo: f64, hi: f64) -> f64 {
        self.detunings
            .iter()
            .zip(&self.intensity)
            .filter(|(d, _)| **d >= lo && **d <= hi)
            .map(|(_, v)| *v)
            .fold(0.0, f64::max)
    }

    /// Intensity-weighted mean detuning.
    pub fn mean_detuning(&self) -> f64 {
        let w: f64 = self.intensity.iter().sum();
        self.detunings.iter().zip(&self.intensity).map(|(d, v)| d * v).sum::<f64>() / w
    }

    /// Copy scaled to a unit global maximum (unchanged if all zero).
    pub fn peak_normalized(mut self) -> SpectrumProfile {
        let peak = self.intensity.iter().copied().fold(0.0, f64::max);
        if peak > 0.0 {
            self.intensity.iter_mut().for_each(|v| *v /= peak);
        }
        self
    }

    /// Trapezoid area.
    pub fn area(&self) -> f64 {
        let d = &self.detunings;
        let y = &self.intensity;
        (0..d.len() - 1).map(|i| 0.5 * (d[i + 1] - d[i]) * (y[i] + y[i + 1])).sum()
    }
}

/// `|∫ ψ_bra ψ_ket dz|²` (trapezoid rule) over the common grid.
pub fn franck_condon(grid: &Grid, bra: &[f64], ket: &[f64]) -> Result<f64, SpectrumError> {
    if bra.len() != grid.len() || ket.len() != grid.len() {
        return Err(SpectrumError::GridMismatch(bra.len(), ket.len()));
    }
    Ok(qm1d::overlap(grid, bra, ket).powi(2))
}

/// One line per populated (ground, excited) pair, ground-major order.
pub fn bound_bound_lines(
    grid: &Grid,
    ground: &[BoundState],
    excited: &[BoundState],
    population: &PopulationModel,
) -> Result<LineList, SpectrumError> {
    population.validate()?;
    if ground.is_empty() {
        return Err(SpectrumError::EmptyBasis("ground states"));
    }
    if excited.is_empty() {
        return Err(SpectrumError::EmptyBasis("excited states"));
    }
    let pops = population.populations(ground);
    let populated: Vec<(&BoundState, f64)> = ground
        .iter()
        .zip(pops)
        .filter(|(_, p)| *p > 0.0)
        .collect();
    if populated.is_empty() {
        return Err(SpectrumError::EmptyBasis("no ground state inside the binding cutoff"));
    }
    let rows = populated
        .par_iter()
        .map(|(g, p)| {
            excited
                .iter()
                .map(|e| {
                    Ok(Line {
                        center: e.energy - g.energy,
                        strength: p * franck_condon(grid, &g.wavefunction, &e.wavefunction)?,
                    })
                })
                .collect::<Result<Vec<_>, SpectrumError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LineList {
        lines: rows.into_iter().flatten().collect(),
        kind: LineKind::BoundBound,
    })
}

/// Free→bound lines: for every excited state and thermal collision energy
/// `E`, a line at `E_v' − E` with strength `w(E) |⟨v'|E⟩|²`. Energy-major
/// order.
pub fn photoassociation_lines(
    grid: &Grid,
    excited: &[BoundState],
    thermal: &ThermalModel,
    ground: &PotentialOnGrid,
    mass: f64,
) -> Result<LineList, SpectrumError> {
    thermal.validate()?;
    if excited.is_empty() {
        return Err(SpectrumError::EmptyBasis("excited states"));
    }
    if ground.values.len() != grid.len() {
        return Err(SpectrumError::GridMismatch(ground.values.len(), grid.len()));
    }
    let kappa = crate::constants::kinetic_coefficient(mass);
    let n = grid.len();
    let rows = thermal
        .energy_samples()
        .par_iter()
        .map(|&(energy, weight)| {
            let k = (energy / kappa).sqrt();
            let needed = grid.z_min() + CONTINUUM_WAVELENGTHS * 2.0 * PI / k;
            let (cgrid, cpot) = if needed > grid.z_max() {
                let g = grid.extended(needed);
                let pot = PotentialOnGrid::sample(&ground.params, ground.electronic_state, g.points())?;
                (g, pot.values)
            } else {
                (grid.clone(), ground.values.clone())
            };
            let state = solve_continuum(&cgrid, &cpot, mass, energy)?;
            let psi = &state.wavefunction[..n];
            Ok(excited
                .iter()
                .map(|e| Line {
                    center: e.energy - energy,
                    strength: weight * qm1d::overlap(grid, psi, &e.wavefunction).powi(2),
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, SpectrumError>>()?;
    Ok(LineList {
        lines: rows.into_iter().flatten().collect(),
        kind: LineKind::FreeBound,
    })
}

/// Sum of area-normalised Lorentzians scaled by line strength.
pub fn broaden(lines: &LineList, fwhm: f64, grid: &DetuningGrid) -> Result<SpectrumProfile, SpectrumError> {
    if !(fwhm > 0.0) {
        return Err(SpectrumError::InvalidParameter(format!("fwhm {fwhm} <= 0")));
    }
    let detunings = grid.points()?;
    let half = 0.5 * fwhm;
    let intensity = detunings
        .par_iter()
        .map(|&d| {
            lines
                .lines
                .iter()
                .map(|l| l.strength * half / (PI * ((d - l.center).powi(2) + half * half)))
                .sum()
        })
        .collect();
    Ok(SpectrumProfile {
        detunings,
        intensity,
        fwhm: Some(fwhm),
        line_count: lines.lines.len(),
    })
}

/// `pa + ratio · bb`.
pub fn combine(pa: &SpectrumProfile, bb: &SpectrumProfile, ratio: f64) -> Result<SpectrumProfile, SpectrumError> {
    if pa.detunings != bb.detunings {
        return Err(SpectrumError::GridMismatch(pa.detunings.len(), bb.detunings.len()));
    }
    Ok(SpectrumProfile {
        detunings: pa.detunings.clone(),
        intensity: pa
            .intensity
            .iter()
            .zip(&bb.intensity)
            .map(|(p, b)| p + ratio * b)
            .collect(),
        fwhm: None,
        line_count: pa.line_count + bb.line_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub ratio: f64,
    pub amplitude: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares fit of `observed ≈ amplitude · (pa + ratio · bb)`; the model
/// is interpolated onto the observed detunings, points outside the model axis
/// are ignored.
pub fn fit_ratio(
    pa: &SpectrumProfile,
    bb: &SpectrumProfile,
    observed: &[(f64, f64)],
) -> Result<FitReport, SpectrumError> {
    if pa.detunings != bb.detunings {
        return Err(SpectrumError::GridMismatch(pa.detunings.len(), bb.detunings.len()));
    }
    let rows: Vec<(f64, f64, f64)> = observed
        .iter()
        .filter_map(|&(d, y)| {
            let p = pa.value_at(d)?;
            let b = bb.value_at(d)?;
            Some((p, b, y))
        })
        .collect();
    if rows.len() < 3 {
        return Err(SpectrumError::DegenerateFit(format!(
            "{} usable points, need at least 3",
            rows.len()
        )));
    }
    let (mut spp, mut spb, mut sbb, mut spy, mut sby) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(p, b, y) in &rows {
        spp += p * p;
        spb += p * b;
        sbb += b * b;
        spy += p * y;
        sby += b * y;
    }
    let det = spp * sbb - spb * spb;
    if !(det.abs() > 1e-14 * spp * sbb) {
        return Err(SpectrumError::DegenerateFit("model components are collinear".into()));
    }
    let a = (spy * sbb - sby * spb) / det;
    let c = (sby * spp - spy * spb) / det;
    if a == 0.0 {
        return Err(SpectrumError::DegenerateFit("zero photoassociation amplitude".into()));
    }
    let ss: f64 = rows.iter().map(|&(p, b, y)| (y - a * p - c * b).powi(2)).sum();
    Ok(FitReport {
        ratio: c / a,
        amplitude: a,
        residual: (ss / rows.len() as f64).sqrt(),
        points: rows.len(),
    })
}

fn interpolate(x: &[f64], y: &[f64], at: f64) -> Option<f64> {
    if x.is_empty() || at < x[0] || at > x[x.len() - 1] {
        return None;
    }
    let i = x.partition_point(|&v| v <= at);
    if i == x.len() {
        return Some(y[x.len() - 1]);
    }
    let t = (at - x[i - 1]) / (x[i] - x[i - 1]);
    Some(y[i - 1] + t * (y[i] - y[i - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis() -> DetuningGrid {
        DetuningGrid {
            start: -160.0,
            stop: 20.0,
            step: 0.25,
        }
    }

    fn single(center: f64, strength: f64) -> LineList {
        LineList {
            lines: vec![Line { center, strength }],
            kind: LineKind::BoundBound,
        }
    }

    #[test]
    fn detuning_axis() {
        let p = axis().points().unwrap();
        assert_eq!(p.len(), 721);
        assert_eq!(p[720], 20.0);
        assert!(DetuningGrid { start: 0.0, stop: -1.0, step: 0.1 }.points().is_err());
    }

    #[test]
    fn single_lorentzian_peak() {
        let fwhm = 5.3;
        let prof = broaden(&single(-40.0, 1.0), fwhm, &axis()).unwrap();
        let (d, v) = prof.peak();
        assert_eq!(d, -40.0);
        assert!((v - 2.0 / (PI * fwhm)).abs() < 1e-15);
        assert!(broaden(&single(0.0, 1.0), 0.0, &axis()).is_err());
    }

    #[test]
    fn broadening_conserves_area() {
        let fwhm = 5.3;
        let lines = LineList {
            lines: vec![
                Line { center: -30.0, strength: 0.4 },
                Line { center: -60.0, strength: 1.1 },
            ],
            kind: LineKind::FreeBound,
        };
        let grid = DetuningGrid {
            start: -60.0 - 20.0 * fwhm,
            stop: -30.0 + 20.0 * fwhm,
            step: 0.05,
        };
        let prof = broaden(&lines, fwhm, &grid).unwrap();
        assert!((prof.area() / lines.total_strength() - 1.0).abs() < 0.02);
    }

    #[test]
    fn ratio_zero_and_fit_round_trip() {
        let pa = broaden(&single(-1.0, 1.0), 5.3, &axis()).unwrap();
        let bb = broaden(
            &LineList {
                lines: vec![Line { center: -40.0, strength: 1.0 }, Line { center: -90.0, strength: 0.5 }],
                kind: LineKind::BoundBound,
            },
            5.3,
            &axis(),
        )
        .unwrap();
        assert_eq!(combine(&pa, &bb, 0.0).unwrap().intensity, pa.intensity);
        let total = combine(&pa, &bb, 0.7).unwrap();
        let obs: Vec<(f64, f64)> = total
            .detunings
            .iter()
            .zip(&total.intensity)
            .map(|(d, v)| (*d, 3.0 * v))
            .collect();
        let fit = fit_ratio(&pa, &bb, &obs).unwrap();
        assert!((fit.ratio - 0.7).abs() < 1e-6);
        assert!((fit.amplitude - 3.0).abs() < 1e-9);
        assert!(matches!(fit_ratio(&pa, &bb, &obs[..2]), Err(SpectrumError::DegenerateFit(_))));
        let other = broaden(&single(0.0, 1.0), 5.3, &DetuningGrid { start: -10.0, stop: 10.0, step: 1.0 }).unwrap();
        assert!(matches!(combine(&pa, &other, 1.0), Err(SpectrumError::GridMismatch(..))));
    }

    #[test]
    fn thermal_weights_normalised() {
        for q in [EnergyQuadrature::GaussLaguerre, EnergyQuadrature::Uniform] {
            let t = ThermalModel {
                temperature: 400e-6,
                n_energy_samples: 32,
                energy_quadrature: q,
            };
            let s = t.energy_samples();
            assert_eq!(s.len(), 32);
            assert!((s.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-12);
            // mean of exp(-E/kT) is kT
            let mean: f64 = s.iter().map(|(e, w)| e * w).sum();
            let kt = thermal_energy_mhz(400e-6);
            let tol = if q == EnergyQuadrature::GaussLaguerre { 1e-10 } else { 0.05 };
            assert!((mean / kt - 1.0).abs() < tol);
        }
        let bad = ThermalModel {
            temperature: 400e-6,
            n_energy_samples: 4,
            energy_quadrature: EnergyQuadrature::GaussLaguerre,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn profile_queries() {
        let prof = broaden(
            &LineList {
                lines: vec![Line { center: -40.0, strength: 1.0 }, Line { center: 0.0, strength: 2.0 }],
                kind: LineKind::BoundBound,
            },
            5.3,
            &axis(),
        )
        .unwrap();
        let maxima = prof.local_maxima();
        assert_eq!(maxima, vec![-40.0, 0.0]);
        assert!(prof.value_at(-200.0).is_none());
        assert!((prof.value_at(-40.0).unwrap() - prof.max_in(-41.0, -39.0)).abs() < 1e-15);
        assert!(prof.mean_detuning() < 0.0);
    }
}
