use super::QmError;
use serde::{Deserialize, Serialize};

pub const MIN_POINTS: usize = 2000;

/// Parameters of a grid whose step follows the local de Broglie wavelength of
/// a `-C3/z³` well near the wall and a fixed far-field energy elsewhere.
///
/// The mapping coordinate is `x(z) = -2A/(d1 √z) + B z / d2` with
/// `A = √(C3/κ)` and `B = √(E_far/κ)`; points are equally spaced in `x`, so the
/// phase advance per step is about `d1` close to the wall and `d2` far away.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptedSpacing {
    /// Strongest C3 the grid has to resolve, MHz·m³.
    pub c3: f64,
    /// `ħ²/2m` in MHz·m².
    pub kinetic: f64,
    /// Energy (MHz) resolved far from the wall.
    pub far_energy: f64,
    /// Phase step (rad) near the wall.
    pub inner_phase_step: f64,
    /// Phase step (rad) in the far field.
    pub far_phase_step: f64,
}

impl AdaptedSpacing {
    fn map(&self, z: f64) -> f64 {
        let a = (self.c3 / self.kinetic).sqrt();
        let b = (self.far_energy / self.kinetic).sqrt();
        -2.0 * a / (self.inner_phase_step * z.sqrt()) + b * z / self.far_phase_step
    }

    fn halved(&self) -> AdaptedSpacing {
        AdaptedSpacing {
            inner_phase_step: 0.5 * self.inner_phase_step,
            far_phase_step: 0.5 * self.far_phase_step,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Spacing {
    Uniform,
    Adapted(AdaptedSpacing),
}

/// Strictly increasing sample points; both ends carry hard walls.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    z: Vec<f64>,
    spacing: Spacing,
}

impl Grid {
    pub fn uniform(z_min: f64, z_max: f64, n_points: usize) -> Result<Grid, QmError> {
        check_range(z_min, z_max)?;
        if n_points < MIN_POINTS {
            return Err(QmError::InvalidGrid(format!(
                "{n_points} points, at least {MIN_POINTS} required"
            )));
        }
        let h = (z_max - z_min) / (n_points - 1) as f64;
        let mut z: Vec<f64> = (0..n_points).map(|i| z_min + i as f64 * h).collect();
        z[n_points - 1] = z_max;
        Ok(Grid {
            z,
            spacing: Spacing::Uniform,
        })
    }

    pub fn adapted(z_min: f64, z_max: f64, spacing: AdaptedSpacing) -> Result<Grid, QmError> {
        check_range(z_min, z_max)?;
        if !(z_min > 0.0) {
            return Err(QmError::InvalidGrid("adapted grid needs z_min > 0".into()));
        }
        let s = spacing;
        let all_positive = [s.c3, s.kinetic, s.far_energy, s.inner_phase_step, s.far_phase_step]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !all_positive {
            return Err(QmError::InvalidGrid(format!("invalid spacing parameters {s:?}")));
        }
        let x0 = s.map(z_min);
        let x1 = s.map(z_max);
        let steps = (x1 - x0).ceil().max((MIN_POINTS - 1) as f64) as usize;
        let dx = (x1 - x0) / steps as f64;
        let mut z = Vec::with_capacity(steps + 1);
        z.push(z_min);
        let mut lo = z_min;
        for i in 1..steps {
            let target = x0 + i as f64 * dx;
            let mut hi = z_max;
            // x(z) is strictly increasing
            let mut a = lo;
            for _ in 0..200 {
                let mid = 0.5 * (a + hi);
                if mid <= a || mid >= hi {
                    break;
                }
                if s.map(mid) < target {
                    a = mid;
                } else {
                    hi = mid;
                }
            }
            lo = 0.5 * (a + hi);
            z.push(lo);
        }
        z.push(z_max);
        if z.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(QmError::InvalidGrid("mapped grid is not strictly increasing".into()));
        }
        Ok(Grid {
            z,
            spacing: Spacing::Adapted(spacing),
        })
    }

    /// Same construction with every step halved.
    pub fn refined(&self) -> Result<Grid, QmError> {
        match &self.spacing {
            Spacing::Uniform => Grid::uniform(self.z_min(), self.z_max(), 2 * self.len() - 1),
            Spacing::Adapted(s) => Grid::adapted(self.z_min(), self.z_max(), s.halved()),
        }
    }

    /// Appends points at the last step size until `z_end` is reached.
    pub fn extended(&self, z_end: f64) -> Grid {
        let mut z = self.z.clone();
        let n = z.len();
        let h = z[n - 1] - z[n - 2];
        let last = z[n - 1];
        let extra = ((z_end - last) / h).ceil().max(0.0) as usize;
        z.extend((1..=extra).map(|i| last + i as f64 * h));
        Grid {
            z,
            spacing: self.spacing.clone(),
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn z_min(&self) -> f64 {
        self.z[0]
    }

    pub fn z_max(&self) -> f64 {
        self.z[self.z.len() - 1]
    }

    pub fn spacing(&self) -> &Spacing {
        &self.spacing
    }

    /// Trapezoid weights; for interior points these are the finite-volume
    /// cell widths `(h₋ + h₊)/2`.
    pub fn weights(&self) -> Vec<f64> {
        crate::quadrature::trapezoid_weights(&self.z)
    }
}

fn check_range(z_min: f64, z_max: f64) -> Result<(), QmError> {
    if !(z_min.is_finite() && z_max.is_finite() && z_min < z_max) {
        return Err(QmError::InvalidGrid(format!(
            "need finite z_min < z_max, got [{z_min:e}, {z_max:e}]"
        )));
    }
    Ok(())
}
