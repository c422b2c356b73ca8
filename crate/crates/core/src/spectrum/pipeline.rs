use super::{
    bound_bound_lines, broaden, combine, photoassociation_lines, DetuningGrid, LineList, PopulationModel,
    SpectrumError, SpectrumProfile, ThermalModel,
};
use crate::constants::kinetic_coefficient;
use crate::qm1d::{filter_by_turning_point, solve_bound_states, AdaptedSpacing, BoundState, Grid};
use crate::vdw::{ElectronicState, PotentialOnGrid, VdwParams};
use serde::{Deserialize, Serialize};

/// kHz·μm³ → MHz·m³.
const C3_TO_SI: f64 = 1e-21;

/// Everything needed to go from C3 coefficients to the combined profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumModel {
    pub vdw: VdwParams,
    /// Far hard wall (m).
    pub far_cutoff: f64,
    pub mass: f64,
    pub inner_phase_step: f64,
    pub far_phase_step: f64,
    /// MHz.
    pub far_energy: f64,
    pub population: PopulationModel,
    pub thermal: ThermalModel,
    /// Excited states with an outer turning point beyond this are dropped (m).
    pub excited_turning_point_max: f64,
    /// Lowest excited-state energy searched (MHz).
    pub excited_floor: f64,
    /// Lorentzian FWHM (MHz).
    pub fwhm: f64,
    pub detuning: DetuningGrid,
    /// Weight of the bound–bound profile in the total; both profiles are
    /// scaled to unit peak first.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub grid: Grid,
    pub ground_states: Vec<BoundState>,
    /// After the turning-point filter.
    pub excited_states: Vec<BoundState>,
    pub excited_unfiltered: usize,
    pub bound_bound: LineList,
    pub free_bound: LineList,
    pub bb_profile: SpectrumProfile,
    pub pa_profile: SpectrumProfile,
    pub total: SpectrumProfile,
}

impl SpectrumModel {
    pub fn grid(&self) -> Result<Grid, SpectrumError> {
        let spacing = AdaptedSpacing {
            c3: self.vdw.c3_excited * C3_TO_SI,
            kinetic: kinetic_coefficient(self.mass),
            far_energy: self.far_energy,
            inner_phase_step: self.inner_phase_step,
            far_phase_step: self.far_phase_step,
        };
        Ok(Grid::adapted(self.vdw.z_min, self.far_cutoff, spacing)?)
    }

    pub fn with_grid_refined(&self) -> SpectrumModel {
        SpectrumModel {
            inner_phase_step: 0.5 * self.inner_phase_step,
            far_phase_step: 0.5 * self.far_phase_step,
            ..self.clone()
        }
    }

    pub fn potentials(&self, grid: &Grid) -> Result<(PotentialOnGrid, PotentialOnGrid), SpectrumError> {
        Ok((
            PotentialOnGrid::sample(&self.vdw, ElectronicState::Ground, grid.points())?,
            PotentialOnGrid::sample(&self.vdw, ElectronicState::Excited, grid.points())?,
        ))
    }

    /// Ground states inside the population cutoff and the unfiltered excited
    /// states above the floor.
    pub fn eigenstates(
        &self,
        grid: &Grid,
        ground: &PotentialOnGrid,
        excited: &PotentialOnGrid,
    ) -> Result<(Vec<BoundState>, Vec<BoundState>), SpectrumError> {
        let g = solve_bound_states(grid, &ground.values, self.mass, (-self.population.binding_cutoff, 0.0))?;
        let e = solve_bound_states(grid, &excited.values, self.mass, (self.excited_floor, 0.0))?;
        Ok((g, e))
    }

    pub fn run(&self) -> Result<SpectrumResult, SpectrumError> {
        self.vdw.validate()?;
        if !(self.ratio >= 0.0 && self.ratio.is_finite()) {
            return Err(SpectrumError::InvalidParameter(format!("ratio {} must be >= 0", self.ratio)));
        }
        let grid = self.grid()?;
        let (ground_pot, excited_pot) = self.potentials(&grid)?;
        let (ground_states, excited_all) = self.eigenstates(&grid, &ground_pot, &excited_pot)?;
        let excited_unfiltered = excited_all.len();
        let excited_states = filter_by_turning_point(&excited_all, self.excited_turning_point_max);

        let bound_bound = bound_bound_lines(&grid, &ground_states, &excited_states, &self.population)?;
        let free_bound = photoassociation_lines(&grid, &excited_states, &self.thermal, &ground_pot, self.mass)?;
        let bb_profile = broaden(&bound_bound, self.fwhm, &self.detuning)?.peak_normalized();
        let pa_profile = broaden(&free_bound, self.fwhm, &self.detuning)?.peak_normalized();
        let total = combine(&pa_profile, &bb_profile, self.ratio)?;
        Ok(SpectrumResult {
            grid,
            ground_states,
            excited_states,
            excited_unfiltered,
            bound_bound,
            free_bound,
            bb_profile,
            pa_profile,
            total,
        })
    }
}
