//! One-dimensional Schrödinger problem for the atom–surface coordinate.
//!
//! Energies are in MHz (E/h), lengths in metres. The Hamiltonian is the
//! three-point finite-volume discretisation on a possibly non-uniform grid,
//! symmetrised with the cell widths so that eigenvectors are orthonormal
//! under the trapezoid rule. Both grid ends are hard walls.

mod continuum;
mod grid;
mod tridiag;

pub use continuum::{solve_continuum, ContinuumState};
pub use grid::{AdaptedSpacing, Grid, Spacing, MIN_POINTS};
pub use tridiag::SymTridiagonal;

use crate::constants::kinetic_coefficient;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("potential has {found} samples but the grid has {expected}")]
    GridMismatch { expected: usize, found: usize },
    #[error("mass must be positive and finite, got {0:e} kg")]
    InvalidMass(f64),
    #[error("invalid energy window [{lo}, {hi}) MHz")]
    InvalidWindow { lo: f64, hi: f64 },
    #[error("no eigenstates in [{lo}, {hi}) MHz")]
    WindowEmpty { lo: f64, hi: f64 },
    #[error("state {index} has {nodes} nodes; grid too coarse to resolve the spectrum")]
    IncompleteSpectrum { index: usize, nodes: usize },
    #[error("continuum energy must be positive, got {0} MHz")]
    NonpositiveEnergy(f64),
    #[error("only {oscillations:.1} oscillations at {energy} MHz in the grid tail, need 10")]
    EnergyTooLowForAsymptotics { energy: f64, oscillations: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    /// Node count.
    pub index: usize,
    /// MHz.
    pub energy: f64,
    /// Amplitude at every grid point (zero at both walls), unit norm under
    /// the trapezoid rule.
    pub wavefunction: Vec<f64>,
    /// Largest `z` with `U(z) = energy` (m); the far wall if none.
    pub outer_turning_point: f64,
}

/// Symmetrised Hamiltonian on the interior points and the matching cell
/// widths.
pub(crate) struct Hamiltonian {
    pub matrix: SymTridiagonal,
    pub cell: Vec<f64>,
}

pub(crate) fn check_inputs(grid: &Grid, potential: &[f64], mass: f64) -> Result<f64, QmError> {
    if potential.len() != grid.len() {
        return Err(QmError::GridMismatch {
            expected: grid.len(),
            found: potential.len(),
        });
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(QmError::InvalidMass(mass));
    }
    Ok(kinetic_coefficient(mass))
}

pub(crate) fn hamiltonian(grid: &Grid, potential: &[f64], kappa: f64) -> Hamiltonian {
    let z = grid.points();
    let n = z.len();
    let m = n - 2;
    let mut diag = Vec::with_capacity(m);
    let mut cell = Vec::with_capacity(m);
    for i in 1..n - 1 {
        let hm = z[i] - z[i - 1];
        let hp = z[i + 1] - z[i];
        let w = 0.5 * (hm + hp);
        cell.push(w);
        diag.push(kappa * (1.0 / hm + 1.0 / hp) / w + potential[i]);
    }
    let off = (1..n - 2)
        .map(|i| -kappa / ((z[i + 1] - z[i]) * (cell[i - 1] * cell[i]).sqrt()))
        .collect();
    Hamiltonian {
        matrix: SymTridiagonal::new(diag, off),
        cell,
    }
}

/// All eigenstates with energy in `[lo, hi)`, ascending.
pub fn solve_bound_states(
    grid: &Grid,
    potential: &[f64],
    mass: f64,
    window: (f64, f64),
) -> Result<Vec<BoundState>, QmError> {
    let kappa = check_inputs(grid, potential, mass)?;
    let (lo, hi) = window;
    if !(lo < hi) || lo.is_nan() || hi.is_nan() {
        return Err(QmError::InvalidWindow { lo, hi });
    }
    let ham = hamiltonian(grid, potential, kappa);
    let t = &ham.matrix;
    let (g_lo, g_hi) = t.bounds();
    let lo = lo.max(g_lo - 1.0);
    let hi = hi.min(g_hi + 1.0);
    let first = t.count_below(lo);
    let end = t.count_below(hi);
    if end <= first {
        return Err(QmError::WindowEmpty {
            lo: window.0,
            hi: window.1,
        });
    }
    (first..end)
        .into_par_iter()
        .map(|k| {
            let energy = t.eigenvalue(k, lo, hi);
            let phi = t.eigenvector(energy);
            let wavefunction = physical_wavefunction(&phi, &ham.cell, potential, energy);
            let nodes = count_nodes(&wavefunction);
            if nodes != k {
                return Err(QmError::IncompleteSpectrum { index: k, nodes });
            }
            Ok(BoundState {
                index: k,
                energy,
                outer_turning_point: outer_turning_point(grid, potential, energy),
                wavefunction,
            })
        })
        .collect()
}

/// Keeps the states whose outer turning point lies at or inside `z_max_tp`.
pub fn filter_by_turning_point(states: &[BoundState], z_max_tp: f64) -> Vec<BoundState> {
    states
        .iter()
        .filter(|s| s.outer_turning_point <= z_max_tp)
        .cloned()
        .collect()
}

/// `∫ f g dz` by the trapezoid rule.
pub fn overlap(grid: &Grid, f: &[f64], g: &[f64]) -> f64 {
    let z = grid.points();
    let mut sum = 0.0;
    for i in 0..z.len() - 1 {
        sum += 0.5 * (z[i + 1] - z[i]) * (f[i] * g[i] + f[i + 1] * g[i + 1]);
    }
    sum
}

/// Sign changes, ignoring exact zeros.
pub fn count_nodes(psi: &[f64]) -> usize {
    let mut nodes = 0;
    let mut last = 0.0;
    for &v in psi {
        if v != 0.0 {
            if last != 0.0 && (v > 0.0) != (last > 0.0) {
                nodes += 1;
            }
            last = v;
        }
    }
    nodes
}

pub fn outer_turning_point(grid: &Grid, potential: &[f64], energy: f64) -> f64 {
    let z = grid.points();
    let n = z.len();
    match potential.iter().rposition(|&v| v <= energy) {
        None => z[0],
        Some(i) if i == n - 1 => z[n - 1],
        Some(i) => {
            let t = (energy - potential[i]) / (potential[i + 1] - potential[i]);
            z[i] + t * (z[i + 1] - z[i])
        }
    }
}

/// Undoes the cell-width symmetrisation, pads the walls and fixes the sign so
/// the amplitude is positive just inside the outer turning point.
fn physical_wavefunction(phi: &[f64], cell: &[f64], potential: &[f64], energy: f64) -> Vec<f64> {
    let mut psi = Vec::with_capacity(phi.len() + 2);
    psi.push(0.0);
    psi.extend(phi.iter().zip(cell).map(|(p, w)| p / w.sqrt()));
    psi.push(0.0);
    let n = psi.len();
    let i = potential[..n - 1]
        .iter()
        .rposition(|&v| v <= energy)
        .unwrap_or(n - 2)
        .max(1);
    let anchor = psi[..=i]
        .iter()
        .rev()
        .find(|v| v.abs() > 0.0)
        .copied()
        .unwrap_or(1.0);
    if anchor < 0.0 {
        psi.iter_mut().for_each(|v| *v = -*v);
    }
    psi
}
