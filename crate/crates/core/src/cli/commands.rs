use super::artifacts::{fmt_f64, Artifacts, Cell};
use super::config::{RateSource, RunConfig};
use crate::budget::{
    effective_atom_number, infer_with_background, photon_count, scattering_rate, BudgetParams,
};
use crate::coupling::{DipoleModel, EmissionCoupling, ShellWeighting};
use crate::detection::{add_multiplicative_noise, decay_time, expansion_decay, fit_gaussian, scan_profile};
use crate::fiber::{mode_intensity, relative_residual, solve_he11, Azimuth, GuidedMode};
use crate::qm1d::filter_by_turning_point;
use crate::spectrum::{combine, fit_ratio, LineKind, LineList, SpectrumProfile};
use crate::vdw::distance_for_detuning;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

/// Strength floor, relative to the strongest line, for counting lines.
pub const LINE_FLOOR: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum CommandError {
    /// Inputs that only turn out to be unusable for a particular command.
    #[error("{0}")]
    Config(String),
    #[error("{command} failed: {message}")]
    Failed { command: &'static str, message: String },
}

impl CommandError {
    fn failed(command: &'static str, e: impl std::fmt::Display) -> Self {
        CommandError::Failed {
            command,
            message: e.to_string(),
        }
    }
}

/// Runs one subcommand, writing artifacts and returning text for stdout.
pub type CommandResult = Result<String, CommandError>;

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

fn azimuth_name(a: Azimuth) -> &'static str {
    match a {
        Azimuth::Averaged => "averaged",
        Azimuth::Parallel => "parallel",
        Azimuth::Perpendicular => "perpendicular",
    }
}

fn dipole_name(d: DipoleModel) -> &'static str {
    match d {
        DipoleModel::IsotropicAverage => "isotropic_average",
        DipoleModel::Radial => "radial",
        DipoleModel::Azimuthal => "azimuthal",
        DipoleModel::Axial => "axial",
    }
}

fn solve_mode(cfg: &RunConfig, command: &'static str) -> Result<GuidedMode, CommandError> {
    solve_he11(&cfg.fiber.spec).map_err(|e| CommandError::failed(command, e))
}

fn io(command: &'static str) -> impl Fn(std::io::Error) -> CommandError {
    move |e| CommandError::failed(command, format!("writing artifacts: {e}"))
}

pub fn mode(cfg: &RunConfig, out: &mut Artifacts) -> CommandResult {
    let m = solve_mode(cfg, "mode")?;
    let a = m.spec.radius;
    let k0 = m.spec.k0();
    let b = m.effective_index();
    let body = json!({
        "beta_over_k0": b,
        "h_a": m.h_in * a,
        "q_a": m.q_out * a,
        "v_number": m.spec.v_number(),
        "k0_a": m.spec.size_parameter(),
        "group_index": m.group_index,
        "hybrid_parameter_s": m.s,
        "relative_residual": relative_residual(&m.spec, b),
        "beta_per_m": m.beta,
        "k0_per_m": k0,
        "azimuth": azimuth_name(cfg.fiber.azimuth),
    });
    out.json("mode.json", "mode", body).map_err(io("mode"))?;
    let radii = linspace(0.0, cfg.fiber.profile_r_over_a_max, cfg.fiber.profile_points);
    let rows = radii
        .iter()
        .map(|&x| vec![Cell::from(x), Cell::from(mode_intensity(&m, x * a, cfg.fiber.azimuth) * a * a)]);
    out.csv(
        "mode_profile.csv",
        "mode",
        &["intensity is |e|^2 a^2 with the cross-section integral of |e|^2 equal to 1".into()],
        &["r_over_a", "intensity"],
        rows,
    )
    .map_err(io("mode"))?;
    Ok(format!(
        "beta/k0 = {}  h*a = {}  q*a = {}  V = {}",
        fmt_f64(b),
        fmt_f64(m.h_in * a),
        fmt_f64(m.q_out * a),
        fmt_f64(m.spec.v_number())
    ))
}

fn coupling_model(cfg: &RunConfig, command: &'static str) -> Result<EmissionCoupling, CommandError> {
    EmissionCoupling::new(&solve_mode(cfg, command)?)
        .with_calibration(cfg.coupling.calibration)
        .map_err(|e| CommandError::failed(command, e))
}

pub fn coupling(cfg: &RunConfig, out: &mut Artifacts) -> CommandResult {
    let c = coupling_model(cfg, "coupling")?;
    let a = cfg.fiber.spec.radius;
    let dipole = cfg.coupling.dipole_model;
    let fail = |e| CommandError::failed("coupling", e);
    let radii = linspace(1.0, cfg.coupling.curve_r_over_a_max, cfg.coupling.curve_points);
    let curve = c.curve(&radii, dipole).map_err(fail)?;
    let eta_a = c.eta_guided(a, dipole).map_err(fail)?;
    let eta_2a = c.eta_guided(2.0 * a, dipole).map_err(fail)?;
    let eta_fiber = c
        .eta_fiber_average(cfg.coupling.shell_thickness, dipole, ShellWeighting::VolumeUniform)
        .map_err(fail)?;
    out.csv(
        "coupling.csv",
        "coupling",
        &[format!("eta per propagation direction, dipole model {}", dipole_name(dipole))],
        &["r_over_a", "eta"],
        curve
            .radii
            .iter()
            .zip(&curve.eta_per_direction)
            .map(|(&r, &e)| vec![Cell::from(r), Cell::from(e)]),
    )
    .map_err(io("coupling"))?;
    out.json(
        "coupling.json",
        "coupling",
        json!({
            "dipole_model": dipole_name(dipole),
            "calibration": cfg.coupling.calibration,
            "eta_at_a": eta_a,
            "eta_at_2a": eta_2a,
            "shell_thickness_nm": cfg.coupling.shell_thickness * 1e9,
            "eta_fiber_shell_average": eta_fiber,
        }),
    )
    .map_err(io("coupling"))?;
    Ok(format!(
        "eta(a) = {}  eta(2a) = {}  shell average = {}",
        fmt_f64(eta_a),
        fmt_f64(eta_2a),
        fmt_f64(eta_fiber)
    ))
}

pub fn calibrate(cfg: &RunConfig, out: &mut Artifacts) -> CommandResult {
    let vdw = &cfg.spectrum.vdw;
    let detunings: Vec<f64> = cfg
        .spectrum
        .detuning
        .points()
        .map_err(|e| CommandError::failed("calibrate", e))?
        .into_iter()
        .filter(|&d| d < 0.0)
        .collect();
    let mut rows = Vec::with_capacity(detunings.len());
    for &d in &detunings {
        let z = distance_for_detuning(vdw, d).map_err(|e| CommandError::failed("calibrate", e))?;
        rows.push(vec![Cell::from(d), Cell::from(z * 1e9)]);
    }
    out.csv(
        "calibration.csv",
        "calibrate",
        &[format!("nu = {} MHz, wavelength = {} nm", fmt_f64(vdw.nu_shift), fmt_f64(vdw.wavelength * 1e9))],
        &["detuning_mhz", "z_nm"],
        rows,
    )
    .map_err(io("calibrate"))?;
    let z30 = distance_for_detuning(vdw, -30.0).map_err(|e| CommandError::failed("calibrate", e))?;
    let z140 = distance_for_detuning(vdw, -140.0).map_err(|e| CommandError::failed("calibrate", e))?;
    Ok(format!(
        "z(-30 MHz) = {} nm  z(-140 MHz) = {} nm",
        fmt_f64(z30 * 1e9),
        fmt_f64(z140 * 1e9)
    ))
}

pub fn eigen(cfg: &RunConfig, out: &mut Artifacts) -> CommandResult {
    let model = &cfg.spectrum;
    let fail = |e| CommandError::failed("eigen", e);
    let grid = model.grid().map_err(fail)?;
    let (gp, ep) = model.potentials(&grid).map_err(fail)?;
    let (ground, excited) = model.eigenstates(&grid, &gp, &ep).map_err(fail)?;
    let kept = filter_by_turning_point(&excited, model.excited_turning_point_max);
    let tp_max = model.excited_turning_point_max;
    out.csv(
        "eigen_ground.csv",
        "eigen",
        &[],
        &["index", "energy_mhz", "turning_point_nm"],
        ground
            .iter()
            .map(|s| vec![Cell::from(s.index), Cell::from(s.energy), Cell::from(s.outer_turning_point * 1e9)]),
    )
    .map_err(io("eigen"))?;
    out.csv(
        "eigen_excited.csv",
        "eigen",
        &[format!("retained = 1 when the outer turning point is within {} nm", fmt_f64(tp_max * 1e9))],
        &["index", "energy_mhz", "turning_point_nm", "retained"],
        excited.iter().map(|s| {
            vec![
                Cell::from(s.index),
                Cell::from(s.energy),
                Cell::from(s.outer_turning_point * 1e9),
                Cell::from(usize::from(s.outer_turning_point <= tp_max)),
            ]
        }),
    )
    .map_err(io("eigen"))?;
    out.json(
        "eigen.json",
        "eigen",
        json!({
            "grid_points": grid.len(),
            "ground_states": ground.len(),
            "ground_energy_mhz": ground.first().map(|s| s.energy),
            "excited_states": excited.len(),
            "excited_retained": kept.len(),
            "excited_energy_mhz": excited.first().map(|s| s.energy),
        }),
    )
    .map_err(io("eigen"))?;
    Ok(format!(
        "{} ground states, {} excited states ({} retained) on {} points",
        ground.len(),
        excited.len(),
        kept.len(),
        grid.len()
    ))
}

fn read_observed(path: &Path) -> Result<Vec<(f64, f64)>, CommandError> {
    let bad = |m: String| CommandError::Config(format!("observed spectrum {}: {m}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| -> Result<f64, CommandError> {
            rec.get(i)
                .ok_or_else(|| bad(format!("row {} has fewer than 2 columns", rows.len() + 1)))?
                .parse()
                .map_err(|e| bad(format!("row {}: {e}", rows.len() + 1)))
        };
        rows.push((field(0)?, field(1)?));
    }
    Ok(rows)
}

fn profile_summary(p: &SpectrumProfile) -> Value {
    let (peak_at, peak) = p.peak();
    json!({
        "peak_detuning_mhz": peak_at,
        "peak": peak,
        "mean_detuning_mhz": p.mean_detuning(),
        "local_maxima_mhz": p.local_maxima(),
    })
}

fn lines_rows(list: &LineList) -> impl Iterator<Item = Vec<Cell>> + '_ {
    let kind = match list.kind {
        LineKind::BoundBound => "bound_bound",
        LineKind::FreeBound => "free_bound",
    };
    list.lines
        .iter()
        .map(move |l| vec![Cell::from(l.center), Cell::from(l.strength), Cell::Text(kind)])
}

pub fn spectrum(cfg: &RunConfig, out: &mut Artifacts) -> CommandResult {
    let fail = |e| CommandError::failed("spectrum", e);
    let observed = cfg.observed_spectrum.as_deref().map(read_observed).transpose()?;
    let result = cfg.spectrum.run().map_err(fail)?;
    let fit = observed
        .as_deref()
        .map(|obs| fit_ratio(&result.pa_profile, &result.bb_profile, obs))
        .transpose()
        .map_err(fail)?;
    let ratio = fit.map_or(cfg.spectrum.ratio, |f| f.ratio);
    let total = if fit.is_some() {
        combine(&result.pa_profile, &result.bb_profile, ratio).map_err(fail)?
    } else {
        result.total.clone()
    };

    out.csv(
        "lines.csv",
        "spectrum",
        &[],
        &["center_mhz", "strength", "kind"],
        lines_rows(&result.bound_bound).chain(lines_rows(&result.free_bound)),
    )
    .map_err(io("spectrum"))?;
    out.csv(
        "profile.csv",
        "spectrum",
        &[format!(
            "pa and bb are scaled to unit peak; total = pa + {} * bb",
            fmt_f64(ratio)
        )],
        &["detuning_mhz", "pa", "bb", "total"],
        total.detunings.iter().enumerate().map(|(i, &d)| {
            vec![
                Cell::from(d),
                Cell::from(result.pa_profile.intensity[i]),
                Cell::from(result.bb_profile.intensity[i]),
                Cell::from(total.intensity[i]),
            ]
        }),
    )
    .map_err(io("spectrum"))?;

    let (_, peak) = total.peak();
    let bb_max_center = result
        .bound_bound
        .lines
        .iter()
        .map(|l| l.center)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut body = json!({
        "grid_points": result.grid.len(),
        "ground_states": result.ground_states.len(),
        "excited_states": result.excited_unfiltered,
        "excited_retained": result.excited_states.len(),
        "bound_bound_lines": result.bound_bound.lines.len(),
        "bound_bound_lines_above_floor": result.bound_bound.count_above(LINE_FLOOR),
        "line_floor": LINE_FLOOR,
        "bound_bound_max_center_mhz": bb_max_center,
        "free_bound_lines": result.free_bound.lines.len(),
        "ratio": ratio,
        "fwhm_mhz": cfg.spectrum.fwhm,
        "pa": profile_summary(&result.pa_profile),
        "bb": profile_summary(&result.bb_profile),
        "total": profile_summary(&total),
        "total_tail_max_fraction_120_140": total.max_in(-140.0, -120.0) / peak,
        "total_fraction_at_start": total.intensity[0] / peak,
    });
    if let Some(f) = fit {
        body["fit"] = json!(f);
    }
    out.json("spectrum.json", "spectrum", body).map_err(io("spectrum"))?;
    let mut text = format!(
        "{} bound-bound lines ({} above {}), {} free-bound lines; total peak at {} MHz",
        result.bound_bound.lines.len(),
        result.bound_bound.count_above(LINE_FLOOR),
        LINE_FLOOR,
        result.free_bound.lines.len(),
        fmt_f64(total.peak().0)
    );
    if let Some(f) = fit {
        write!(text, "; fitted ratio {}", fmt_f64(f.ratio)).unwrap();
    }
    Ok(text)
}

pub fn budget(cfg: &RunConfig, out: &mut Artifacts) -> CommandResult {
    let fail = |e| CommandError::failed("budget", e);
    let b = &cfg.budget;
    let computed_rate = scattering_rate(&cfg.laser);
    let rate = match b.rate {
        RateSource::Computed => computed_rate,
        RateSource::Fixed(r) => r,
    };
    let n_p = photon_count(&b.params, rate);
    let probe_rate = scattering_rate(&cfg.probe);
    let inference = infer_with_background(
        b.observed_counts,
        b.background_counts,
        b.subtract_background,
        &b.params,
        probe_rate,
    )
    .map_err(fail)?;
    let background_only = infer_with_background(b.background_counts, b.background_counts, false, &b.params, probe_rate)
        .map_err(fail)?;
    let shell_atoms = effective_atom_number(&cfg.shell);
    let eta_model = coupling_model(cfg, "budget")?
        .eta_fiber_average(cfg.coupling.shell_thickness, cfg.coupling.dipole_model, ShellWeighting::VolumeUniform)
        .map_err(|e| CommandError::failed("budget", e))?;
    let n_p_shell = photon_count(&BudgetParams { n_atoms: shell_atoms, ..b.params }, rate);

    out.json(
        "budget.json",
        "budget",
        json!({
            "chain": {
                "n_atoms": b.params.n_atoms,
                "scattering_rate_per_s": rate,
                "rate_source": match b.rate { RateSource::Computed => "computed", RateSource::Fixed(_) => "fixed" },
                "eta_fiber": b.params.eta_fiber,
                "transmission": b.params.transmission,
                "det_qe": b.params.det_qe,
                "photon_count_per_s": n_p,
            },
            "cooling_rate_computed_per_s": computed_rate,
            "shell": {
                "volume_m3": cfg.shell.volume(),
                "density_cm3": cfg.shell.density,
                "n_atoms": shell_atoms,
                "photon_count_per_s": n_p_shell,
                "eta_fiber_model": eta_model,
            },
            "probe": {
                "intensity_mw_cm2": cfg.probe.intensity,
                "detuning_mhz": cfg.probe.detuning,
                "scattering_rate_per_s": probe_rate,
                "inference": inference,
                "background_as_signal": background_only,
            },
            "room_light_counts_per_s": b.room_light_counts,
        }),
    )
    .map_err(io("budget"))?;

    let mut t = String::new();
    writeln!(t, "N                 {}", fmt_f64(b.params.n_atoms)).unwrap();
    writeln!(t, "R (1/s)           {}  (computed from cooling beams: {})", fmt_f64(rate), fmt_f64(computed_rate)).unwrap();
    writeln!(t, "eta_fiber         {}  (shell average from the mode: {})", fmt_f64(b.params.eta_fiber), fmt_f64(eta_model)).unwrap();
    writeln!(t, "T                 {}", fmt_f64(b.params.transmission)).unwrap();
    writeln!(t, "eta_D             {}", fmt_f64(b.params.det_qe)).unwrap();
    writeln!(t, "n_p (counts/s)    {}", fmt_f64(n_p)).unwrap();
    writeln!(t, "shell N           {}", fmt_f64(shell_atoms)).unwrap();
    writeln!(t, "probe R (1/s)     {}", fmt_f64(probe_rate)).unwrap();
    writeln!(
        t,
        "inferred N        {}  from {} counts/s{}",
        fmt_f64(inference.n_atoms),
        fmt_f64(b.observed_counts),
        if inference.background_dominated { " (background dominated)" } else { "" }
    )
    .unwrap();
    write!(
        t,
        "background as N   {}  from {} counts/s (background dominated)",
        fmt_f64(background_only.n_atoms),
        fmt_f64(b.background_counts)
    )
    .unwrap();
    Ok(t)
}

pub fn scan(cfg: &RunConfig, out: &mut Artifacts, seed: Option<u64>) -> CommandResult {
    let fail = |e| CommandError::failed("scan", e);
    let s = &cfg.scan;
    let offsets = linspace(-s.half_range, s.half_range, s.points);
    let result = scan_profile(
        &cfg.cloud,
        &cfg.shell,
        &cfg.budget.params,
        &cfg.probe,
        cfg.budget.background_counts,
        &offsets,
    )
    .map_err(fail)?;
    let counts = if s.noise_fraction > 0.0 {
        let seed = seed.ok_or_else(|| {
            CommandError::Config("scan.noise_fraction > 0 requires --seed".into())
        })?;
        add_multiplicative_noise(&result.counts, s.noise_fraction, seed)
    } else {
        result.counts.clone()
    };
    let fit = fit_gaussian(&offsets, &counts).map_err(fail)?;
    let times = linspace(0.0, s.decay_t_max, s.decay_points);
    let decay = expansion_decay(&cfg.cloud, &times);
    let t_decay = decay_time(&cfg.cloud, s.decay_fraction).map_err(fail)?;

    out.csv(
        "scan.csv",
        "scan",
        &[format!("background {} counts/s", fmt_f64(result.background))],
        &["offset_mm", "counts"],
        offsets.iter().zip(&counts).map(|(&y, &c)| vec![Cell::from(y * 1e3), Cell::from(c)]),
    )
    .map_err(io("scan"))?;
    out.csv(
        "decay.csv",
        "scan",
        &[],
        &["t_ms", "n_ratio"],
        times.iter().zip(&decay).map(|(&t, &n)| vec![Cell::from(t * 1e3), Cell::from(n)]),
    )
    .map_err(io("scan"))?;
    out.json(
        "scan_fit.json",
        "scan",
        json!({
            "center_mm": fit.center * 1e3,
            "diameter_mm": fit.diameter * 1e3,
            "amplitude": fit.amplitude,
            "offset": fit.offset,
            "residual": fit.residual,
            "iterations": fit.iterations,
            "cloud_diameter_mm": cfg.cloud.vertical_diameter() * 1e3,
            "peak_counts": result.peak_counts(),
            "peak_signal": result.peak_counts() - result.background,
            "noise_fraction": s.noise_fraction,
            "decay_fraction": s.decay_fraction,
            "decay_time_ms": t_decay * 1e3,
        }),
    )
    .map_err(io("scan"))?;
    Ok(format!(
        "fitted 1/e^2 diameter {} mm, peak {} counts/s, decay time {} ms",
        fmt_f64(fit.diameter * 1e3),
        fmt_f64(result.peak_counts()),
        fmt_f64(t_decay * 1e3)
    ))
}
