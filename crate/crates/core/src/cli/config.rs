//! Strict TOML run configuration. Every key is required, unknown keys are
//! rejected, and all problems are reported together.

use crate::budget::{BudgetParams, LaserParams, ObservationShell};
use crate::coupling::DipoleModel;
use crate::detection::CloudSpec;
use crate::fiber::{Azimuth, FiberSpec};
use crate::spectrum::{
    DetuningGrid, EnergyQuadrature, PopulationModel, PopulationScheme, SpectrumModel, ThermalModel,
};
use crate::vdw::VdwParams;
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("{}", .0.join("; "))]
    Invalid(Vec<String>),
}

impl ConfigError {
    pub fn problems(&self) -> Vec<String> {
        match self {
            ConfigError::Io { .. } => vec![self.to_string()],
            ConfigError::Invalid(p) => p.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateSource {
    Computed,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberSection {
    pub spec: FiberSpec,
    pub azimuth: Azimuth,
    pub profile_r_over_a_max: f64,
    pub profile_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSection {
    pub dipole_model: DipoleModel,
    pub calibration: f64,
    /// m.
    pub shell_thickness: f64,
    pub curve_r_over_a_max: f64,
    pub curve_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSection {
    pub params: BudgetParams,
    pub rate: RateSource,
    /// counts/s.
    pub observed_counts: f64,
    pub background_counts: f64,
    pub room_light_counts: f64,
    pub subtract_background: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSection {
    /// m.
    pub half_range: f64,
    pub points: usize,
    pub noise_fraction: f64,
    /// s.
    pub decay_t_max: f64,
    pub decay_points: usize,
    pub decay_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub fiber: FiberSection,
    pub coupling: CouplingSection,
    pub spectrum: SpectrumModel,
    pub observed_spectrum: Option<PathBuf>,
    pub budget: BudgetSection,
    /// Cooling beams.
    pub laser: LaserParams,
    /// Resonant standing-wave probe.
    pub probe: LaserParams,
    pub shell: ObservationShell,
    pub cloud: CloudSpec,
    pub scan: ScanSection,
    /// sha256 of the effective configuration without `output_dir`.
    pub hash: String,
}

/// Reads `path`, applies `key=value` overrides and validates.
pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse(&text, overrides)
}

pub fn parse(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Invalid(vec![format!("syntax: {}", e.message())]))?;
    let mut problems = Vec::new();
    for o in overrides {
        if let Err(p) = apply_override(&mut table, o) {
            problems.push(p);
        }
    }
    if !problems.is_empty() {
        return Err(ConfigError::Invalid(problems));
    }
    build(&table)
}

fn apply_override(table: &mut Table, item: &str) -> Result<(), String> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| format!("override '{item}' is not key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    // bare words such as `averaged` are taken as strings
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(format!("override key '{key}' is malformed"));
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        node = node
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| format!("override '{key}': '{part}' is not a section"))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

struct Reader<'a> {
    root: &'a Table,
    seen: BTreeSet<String>,
    problems: Vec<String>,
}

impl<'a> Reader<'a> {
    fn get(&mut self, path: &str) -> Option<&'a Value> {
        self.seen.insert(path.to_string());
        let mut node = self.root;
        let parts: Vec<&str> = path.split('.').collect();
        for part in &parts[..parts.len() - 1] {
            match node.get(*part).and_then(Value::as_table) {
                Some(t) => node = t,
                None => {
                    self.problems.push(format!("missing key {path}"));
                    return None;
                }
            }
        }
        let v = node.get(parts[parts.len() - 1]);
        if v.is_none() {
            self.problems.push(format!("missing key {path}"));
        }
        v
    }

    fn f64(&mut self, path: &str) -> f64 {
        match self.get(path) {
            Some(Value::Float(x)) => *x,
            Some(Value::Integer(i)) => *i as f64,
            Some(other) => {
                self.problems.push(format!("{path}: expected a number, found {}", other.type_str()));
                f64::NAN
            }
            None => f64::NAN,
        }
    }

    fn usize(&mut self, path: &str) -> usize {
        match self.get(path) {
            Some(Value::Integer(i)) if *i >= 0 => *i as usize,
            Some(other) => {
                self.problems.push(format!("{path}: expected a non-negative integer, found {other}"));
                0
            }
            None => 0,
        }
    }

    fn bool(&mut self, path: &str) -> bool {
        match self.get(path) {
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                self.problems.push(format!("{path}: expected true or false, found {other}"));
                false
            }
            None => false,
        }
    }

    fn string(&mut self, path: &str) -> String {
        match self.get(path) {
            Some(Value::String(s)) => s.clone(),
            Some(other) => {
                self.problems.push(format!("{path}: expected a string, found {}", other.type_str()));
                String::new()
            }
            None => String::new(),
        }
    }

    fn choice<T: Copy>(&mut self, path: &str, options: &[(&str, T)]) -> Option<T> {
        let s = self.string(path);
        let found = options.iter().find(|(name, _)| *name == s).map(|(_, v)| *v);
        if found.is_none() && self.root_has(path) {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            self.problems.push(format!("{path}: '{s}' is not one of {}", names.join(", ")));
        }
        found
    }

    fn root_has(&self, path: &str) -> bool {
        let mut node = self.root;
        let parts: Vec<&str> = path.split('.').collect();
        for part in &parts[..parts.len() - 1] {
            match node.get(*part).and_then(Value::as_table) {
                Some(t) => node = t,
                None => return false,
            }
        }
        node.contains_key(parts[parts.len() - 1])
    }

    fn check(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.problems.push(message());
        }
    }

    fn unknown_keys(&mut self) {
        let mut found = Vec::new();
        collect_leaves(self.root, "", &mut found);
        for path in found {
            if !self.seen.contains(&path) {
                self.problems.push(format!("unknown key {path}"));
            }
        }
    }
}

fn collect_leaves(table: &Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in table {
        let path = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => collect_leaves(t, &path, out),
            _ => out.push(path),
        }
    }
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

fn build(table: &Table) -> Result<RunConfig, ConfigError> {
    let mut r = Reader {
        root: table,
        seen: BTreeSet::new(),
        problems: Vec::new(),
    };
    let output_dir = PathBuf::from(r.string("output_dir"));

    let mass = r.f64("atom.mass_kg");
    let lifetime = r.f64("atom.lifetime_ns") * 1e-9;
    let transition = r.f64("atom.wavelength_nm") * 1e-9;
    r.check(positive(mass), || format!("atom.mass_kg must be positive, got {mass}"));
    r.check(positive(lifetime), || "atom.lifetime_ns must be positive".into());
    r.check(positive(transition), || "atom.wavelength_nm must be positive".into());

    let spec = FiberSpec {
        radius: r.f64("fiber.radius_nm") * 1e-9,
        n_core: r.f64("fiber.n_core"),
        n_clad: r.f64("fiber.n_clad"),
        wavelength: r.f64("fiber.wavelength_nm") * 1e-9,
    };
    let azimuth = r.choice(
        "fiber.azimuth",
        &[
            ("averaged", Azimuth::Averaged),
            ("parallel", Azimuth::Parallel),
            ("perpendicular", Azimuth::Perpendicular),
        ],
    );
    let fiber = FiberSection {
        spec,
        azimuth: azimuth.unwrap_or_default(),
        profile_r_over_a_max: r.f64("fiber.profile_r_over_a_max"),
        profile_points: r.usize("fiber.profile_points"),
    };
    if spec.radius.is_finite() && spec.n_core.is_finite() && spec.n_clad.is_finite() && spec.wavelength.is_finite() {
        if let Err(e) = spec.validate() {
            r.problems.push(format!("fiber: {e}"));
        }
    }
    r.check(fiber.profile_r_over_a_max > 0.0, || "fiber.profile_r_over_a_max must be positive".into());
    r.check(fiber.profile_points >= 2, || "fiber.profile_points must be at least 2".into());

    let dipole_model = r.choice(
        "coupling.dipole_model",
        &[
            ("isotropic_average", DipoleModel::IsotropicAverage),
            ("radial", DipoleModel::Radial),
            ("azimuthal", DipoleModel::Azimuthal),
            ("axial", DipoleModel::Axial),
        ],
    );
    let coupling = CouplingSection {
        dipole_model: dipole_model.unwrap_or_default(),
        calibration: r.f64("coupling.calibration"),
        shell_thickness: r.f64("coupling.shell_thickness_nm") * 1e-9,
        curve_r_over_a_max: r.f64("coupling.curve_r_over_a_max"),
        curve_points: r.usize("coupling.curve_points"),
    };
    r.check(coupling.calibration >= 0.0, || "coupling.calibration must be >= 0".into());
    r.check(positive(coupling.shell_thickness), || "coupling.shell_thickness_nm must be positive".into());
    r.check(coupling.curve_r_over_a_max >= 1.0, || "coupling.curve_r_over_a_max must be >= 1".into());
    r.check(coupling.curve_points >= 2, || "coupling.curve_points must be at least 2".into());

    let c3_ground = r.f64("vdw.c3_ground_khz_um3");
    let nu_shift = r.f64("vdw.nu_shift_mhz");
    let z_min = r.f64("vdw.z_min_nm") * 1e-9;
    let far_cutoff = r.f64("vdw.far_cutoff_nm") * 1e-9;
    let vdw = match VdwParams::calibrated(c3_ground, nu_shift, transition, z_min) {
        Ok(v) => Some(v),
        Err(e) => {
            if [c3_ground, nu_shift, z_min, transition].iter().all(|x| x.is_finite()) {
                r.problems.push(format!("vdw: {e}"));
            }
            None
        }
    };
    r.check(far_cutoff > z_min, || "vdw.far_cutoff_nm must exceed vdw.z_min_nm".into());

    let inner_phase_step = r.f64("grid.inner_phase_step_rad");
    let far_phase_step = r.f64("grid.far_phase_step_rad");
    let far_energy = r.f64("grid.far_energy_mhz");
    r.check(positive(inner_phase_step), || "grid.inner_phase_step_rad must be positive".into());
    r.check(positive(far_phase_step), || "grid.far_phase_step_rad must be positive".into());
    r.check(positive(far_energy), || "grid.far_energy_mhz must be positive".into());

    let energy_quadrature = r.choice(
        "thermal.energy_quadrature",
        &[
            ("gauss_laguerre", EnergyQuadrature::GaussLaguerre),
            ("uniform", EnergyQuadrature::Uniform),
        ],
    );
    let thermal = ThermalModel {
        temperature: r.f64("thermal.temperature_uk") * 1e-6,
        n_energy_samples: r.usize("thermal.n_energy_samples"),
        energy_quadrature: energy_quadrature.unwrap_or(EnergyQuadrature::GaussLaguerre),
    };
    r.check(positive(thermal.temperature), || "thermal.temperature_uk must be positive".into());
    r.check(thermal.n_energy_samples >= 8, || "thermal.n_energy_samples must be at least 8".into());

    let scheme = r.choice(
        "population.scheme",
        &[
            ("equal_to_cutoff", PopulationScheme::EqualToCutoff),
            (
                "boltzmann",
                PopulationScheme::Boltzmann {
                    temperature: thermal.temperature,
                },
            ),
        ],
    );
    let population = PopulationModel {
        scheme: scheme.unwrap_or(PopulationScheme::EqualToCutoff),
        binding_cutoff: r.f64("population.binding_cutoff_mhz"),
    };
    r.check(positive(population.binding_cutoff), || "population.binding_cutoff_mhz must be positive".into());

    let excited_floor = r.f64("spectrum.excited_floor_mhz");
    let excited_turning_point_max = r.f64("spectrum.turning_point_max_nm") * 1e-9;
    let fwhm = r.f64("spectrum.fwhm_mhz");
    let detuning = DetuningGrid {
        start: r.f64("spectrum.detuning_start_mhz"),
        stop: r.f64("spectrum.detuning_stop_mhz"),
        step: r.f64("spectrum.detuning_step_mhz"),
    };
    let ratio = r.f64("spectrum.ratio");
    let observed = r.string("spectrum.observed_csv");
    r.check(excited_floor < 0.0, || "spectrum.excited_floor_mhz must be negative".into());
    r.check(excited_turning_point_max > 0.0, || "spectrum.turning_point_max_nm must be positive".into());
    r.check(positive(fwhm), || "spectrum.fwhm_mhz must be positive".into());
    r.check(
        positive(detuning.step) && detuning.stop > detuning.start,
        || "spectrum detuning grid needs stop > start and step > 0".into(),
    );
    r.check(ratio >= 0.0 && ratio.is_finite(), || "spectrum.ratio must be >= 0".into());

    let rate = match r.get("budget.rate_per_s") {
        Some(Value::String(s)) if s == "computed" => RateSource::Computed,
        Some(Value::Float(x)) if positive(*x) => RateSource::Fixed(*x),
        Some(Value::Integer(i)) if *i > 0 => RateSource::Fixed(*i as f64),
        Some(other) => {
            r.problems.push(format!("budget.rate_per_s: expected \"computed\" or a positive rate, found {other}"));
            RateSource::Computed
        }
        None => RateSource::Computed,
    };
    let budget = BudgetSection {
        params: BudgetParams {
            n_atoms: r.f64("budget.n_atoms"),
            eta_fiber: r.f64("budget.eta_fiber"),
            transmission: r.f64("budget.transmission"),
            det_qe: r.f64("budget.det_qe"),
        },
        rate,
        observed_counts: r.f64("budget.observed_counts"),
        background_counts: r.f64("budget.background_counts"),
        room_light_counts: r.f64("budget.room_light_counts"),
        subtract_background: r.bool("budget.subtract_background"),
    };
    if let Err(e) = budget.params.validate() {
        r.problems.push(format!("budget: {e}"));
    }
    for (name, v) in [
        ("budget.observed_counts", budget.observed_counts),
        ("budget.background_counts", budget.background_counts),
        ("budget.room_light_counts", budget.room_light_counts),
    ] {
        r.check(v >= 0.0 && v.is_finite(), || format!("{name} must be >= 0"));
    }

    let laser = LaserParams {
        intensity: r.f64("laser.intensity_mw_cm2"),
        detuning: r.f64("laser.detuning_mhz"),
        i_sat: r.f64("laser.i_sat_mw_cm2"),
        lifetime,
    };
    let probe = LaserParams {
        intensity: r.f64("probe.intensity_mw_cm2"),
        detuning: r.f64("probe.detuning_mhz"),
        ..laser
    };
    if lifetime > 0.0 {
        if let Err(e) = laser.validate() {
            r.problems.push(format!("laser: {e}"));
        }
        if let Err(e) = probe.validate() {
            r.problems.push(format!("probe: {e}"));
        }
    }

    let shell = ObservationShell {
        inner_radius: spec.radius,
        thickness: coupling.shell_thickness,
        length: r.f64("shell.length_mm") * 1e-3,
        density: r.f64("shell.density_cm3"),
    };
    if spec.radius > 0.0 {
        if let Err(e) = shell.validate() {
            r.problems.push(format!("shell: {e}"));
        }
    }

    let cloud = CloudSpec {
        sigma_h: r.f64("cloud.sigma_h_mm") * 1e-3,
        sigma_v: r.f64("cloud.sigma_v_mm") * 1e-3,
        peak_density: r.f64("cloud.peak_density_cm3"),
        temperature: thermal.temperature,
        mass,
    };
    if mass > 0.0 && thermal.temperature > 0.0 {
        if let Err(e) = cloud.validate() {
            r.problems.push(format!("cloud: {e}"));
        }
    }

    let scan = ScanSection {
        half_range: r.f64("scan.half_range_mm") * 1e-3,
        points: r.usize("scan.points"),
        noise_fraction: r.f64("scan.noise_fraction"),
        decay_t_max: r.f64("scan.decay_t_max_ms") * 1e-3,
        decay_points: r.usize("scan.decay_points"),
        decay_fraction: r.f64("scan.decay_fraction"),
    };
    r.check(positive(scan.half_range), || "scan.half_range_mm must be positive".into());
    r.check(scan.points >= 5, || "scan.points must be at least 5".into());
    r.check(
        (0.0..1.0).contains(&scan.noise_fraction),
        || "scan.noise_fraction must be in [0, 1)".into(),
    );
    r.check(positive(scan.decay_t_max), || "scan.decay_t_max_ms must be positive".into());
    r.check(scan.decay_points >= 2, || "scan.decay_points must be at least 2".into());
    r.check(
        scan.decay_fraction > 0.0 && scan.decay_fraction < 1.0,
        || "scan.decay_fraction must be in (0, 1)".into(),
    );

    r.unknown_keys();
    if !r.problems.is_empty() {
        return Err(ConfigError::Invalid(r.problems));
    }

    let spectrum = SpectrumModel {
        vdw: vdw.expect("validated above"),
        far_cutoff,
        mass,
        inner_phase_step,
        far_phase_step,
        far_energy,
        population,
        thermal,
        excited_turning_point_max,
        excited_floor,
        fwhm,
        detuning,
        ratio,
    };
    Ok(RunConfig {
        output_dir,
        fiber,
        coupling,
        spectrum,
        observed_spectrum: (!observed.is_empty()).then(|| PathBuf::from(observed)),
        budget,
        laser,
        probe,
        shell,
        cloud,
        scan,
        hash: config_hash(table),
    })
}

fn config_hash(table: &Table) -> String {
    let mut canonical = table.clone();
    canonical.remove("output_dir");
    // toml::Table is ordered by key, so the rendering is canonical
    let text = toml::to_string(&canonical).expect("table serialises");
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
