use nanofiber::cli::config;
use nanofiber::qm1d::{solve_bound_states, Grid};
use nanofiber::spectrum::{
    bound_bound_lines, broaden, combine, fit_ratio, franck_condon, DetuningGrid, Line, LineKind, LineList,
    PopulationModel, SpectrumModel, SpectrumResult,
};
use proptest::prelude::*;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;

fn model() -> SpectrumModel {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/paper.toml");
    config::load(&path, &[]).unwrap().spectrum
}

fn result() -> &'static SpectrumResult {
    static RESULT: OnceLock<SpectrumResult> = OnceLock::new();
    RESULT.get_or_init(|| model().run().unwrap())
}

/// Small uniform problem where the full eigenbasis is cheap.
fn small_problem(c3: f64) -> (Grid, Vec<nanofiber::qm1d::BoundState>) {
    let grid = Grid::uniform(5e-9, 60e-9, 2002).unwrap();
    let pot: Vec<f64> = grid.points().iter().map(|&z| -c3 * 1e-21 / z.powi(3)).collect();
    let mass = model().mass;
    let states = solve_bound_states(&grid, &pot, mass, (-1e15, 1e15)).unwrap();
    (grid, states)
}

#[test]
fn franck_condon_sum_rule_over_complete_basis() {
    let (grid, ground) = small_problem(1.0);
    let (_, excited) = small_problem(1.6);
    assert_eq!(excited.len(), grid.len() - 2);
    for g in ground.iter().take(5) {
        let sum: f64 = excited
            .iter()
            .map(|e| franck_condon(&grid, &g.wavefunction, &e.wavefunction).unwrap())
            .sum();
        assert!((sum - 1.0).abs() < 1e-10, "state {}: {sum}", g.index);
    }
}

#[test]
fn franck_condon_self_overlap_and_orthogonality() {
    let (grid, states) = small_problem(1.0);
    for a in states.iter().take(8) {
        for b in states.iter().take(8) {
            let fc = franck_condon(&grid, &a.wavefunction, &b.wavefunction).unwrap();
            if a.index == b.index {
                assert!((fc - 1.0).abs() < 1e-8);
            } else {
                assert!(fc < 1e-8);
            }
        }
    }
}

#[test]
fn default_retained_basis_does_not_exceed_the_sum_rule() {
    let r = result();
    for g in r.ground_states.iter().take(5) {
        let sum: f64 = r
            .excited_states
            .iter()
            .map(|e| franck_condon(&r.grid, &g.wavefunction, &e.wavefunction).unwrap())
            .sum();
        assert!(sum <= 1.0 + 1e-9, "state {}: {sum}", g.index);
    }
}

#[test]
fn bound_bound_total_does_not_depend_on_basis_order() {
    let r = result();
    let pops = PopulationModel::equal(model().population.binding_cutoff);
    let forward = bound_bound_lines(&r.grid, &r.ground_states, &r.excited_states, &pops).unwrap();
    let mut g = r.ground_states.clone();
    let mut e = r.excited_states.clone();
    g.reverse();
    e.reverse();
    let reversed = bound_bound_lines(&r.grid, &g, &e, &pops).unwrap();
    assert_eq!(forward.lines.len(), reversed.lines.len());
    let (a, b) = (forward.total_strength(), reversed.total_strength());
    assert!((a / b - 1.0).abs() < 1e-12);
    assert_eq!(forward.count_above(1e-3), reversed.count_above(1e-3));
}

#[test]
fn one_line_per_pair() {
    let r = result();
    assert_eq!(r.bound_bound.lines.len(), r.ground_states.len() * r.excited_states.len());
    assert_eq!(r.bound_bound.kind, LineKind::BoundBound);
    assert_eq!(
        r.free_bound.lines.len(),
        model().thermal.n_energy_samples * r.excited_states.len()
    );
}

#[test]
fn spectra_are_red_shaded() {
    let r = result();
    assert!(r.bb_profile.mean_detuning() < 0.0);
    assert!(r.total.mean_detuning() < 0.0);
    // all free-bound centers lie below the bound excited level they end on
    assert!(r.free_bound.lines.iter().all(|l| l.center < 0.0));
}

#[test]
fn ratio_fit_round_trip() {
    let r = result();
    let truth = combine(&r.pa_profile, &r.bb_profile, 0.7).unwrap();
    let observed: Vec<(f64, f64)> = truth
        .detunings
        .iter()
        .zip(&truth.intensity)
        .map(|(&d, &y)| (d, 2.5 * y))
        .collect();
    let fit = fit_ratio(&r.pa_profile, &r.bb_profile, &observed).unwrap();
    assert!((fit.ratio - 0.7).abs() < 1e-6, "ratio {}", fit.ratio);
    assert!((fit.amplitude - 2.5).abs() < 1e-6);
}

#[test]
fn secondary_peak_is_stable_under_grid_doubling() {
    let secondary = |r: &SpectrumResult| -> Vec<f64> {
        r.total.local_maxima().into_iter().filter(|d| (-60.0..=-20.0).contains(d)).collect()
    };
    let coarse = secondary(result());
    let fine = secondary(&model().with_grid_refined().run().unwrap());
    assert!(!coarse.is_empty());
    for d in &coarse {
        let nearest = fine.iter().map(|f| (f - d).abs()).fold(f64::INFINITY, f64::min);
        assert!(nearest < 2.0, "maximum at {d} moved by {nearest} MHz ({coarse:?} vs {fine:?})");
    }
}

fn axis() -> DetuningGrid {
    DetuningGrid {
        start: -400.0,
        stop: 400.0,
        step: 0.05,
    }
}

proptest! {
    #[test]
    fn broadening_keeps_area_and_peak_height(center in -50.0f64..50.0, strength in 0.01f64..10.0, fwhm in 1.0f64..10.0) {
        let lines = LineList { lines: vec![Line { center, strength }], kind: LineKind::BoundBound };
        let p = broaden(&lines, fwhm, &axis()).unwrap();
        // the axis truncates the Lorentzian wings: 1 - (2/π) atan(2·350/fwhm) at worst
        let lost = 1.0 - 2.0 / PI * (2.0 * 350.0 / fwhm).atan();
        prop_assert!((p.area() / strength - 1.0).abs() < lost + 1e-4);
        let peak = p.max_in(center - 1.0, center + 1.0);
        let exact = 2.0 * strength / (PI * fwhm);
        // grid step 0.05 puts a sample within 0.025 of the center
        let floor = exact / (1.0 + (0.05 / fwhm).powi(2));
        prop_assert!(peak <= exact * (1.0 + 1e-12) && peak >= floor * (1.0 - 1e-12));
    }

    #[test]
    fn combine_is_linear_in_ratio(ratio in 0.0f64..5.0) {
        let r = result();
        let c = combine(&r.pa_profile, &r.bb_profile, ratio).unwrap();
        for i in (0..c.intensity.len()).step_by(37) {
            let want = r.pa_profile.intensity[i] + ratio * r.bb_profile.intensity[i];
            prop_assert!((c.intensity[i] - want).abs() <= 1e-15 * want.abs().max(1.0));
        }
    }
}
