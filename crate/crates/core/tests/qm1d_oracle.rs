//! Finite-difference eigensolver and continuum solver against uniform-grid
//! Numerov shooting, plus the structural properties of the eigenstates.

mod support;

use nanofiber::cli::config;
use nanofiber::qm1d::{
    count_nodes, filter_by_turning_point, overlap, solve_bound_states, solve_continuum, Grid,
};
use nanofiber::spectrum::SpectrumModel;
use nanofiber::vdw::{ElectronicState, PotentialOnGrid};
use std::path::Path;
use std::sync::OnceLock;
use support::{kappa, wrap, Numerov};

const NM: f64 = 1e-9;

fn model() -> &'static SpectrumModel {
    static MODEL: OnceLock<SpectrumModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/paper.toml");
        config::load(&path, &[]).unwrap().spectrum
    })
}

/// `-c3/z³` with c3 in kHz·μm³, written out independently of the crate.
fn c3_potential(c3: f64) -> impl Fn(f64) -> f64 {
    let c3 = c3 * 1e-21;
    move |z: f64| -c3 / (z * z * z)
}

fn fd_states(m: &SpectrumModel, state: ElectronicState, window: (f64, f64)) -> (Grid, Vec<f64>, Vec<f64>) {
    let grid = m.grid().unwrap();
    let pot = PotentialOnGrid::sample(&m.vdw, state, grid.points()).unwrap().values;
    let energies = solve_bound_states(&grid, &pot, m.mass, window)
        .unwrap()
        .iter()
        .map(|s| s.energy)
        .collect();
    (grid, pot, energies)
}

#[test]
fn ground_levels_match_numerov_shooting() {
    let m = model();
    let window = (-200.0, 0.0);
    let (_, _, fd) = fd_states(m, ElectronicState::Ground, window);
    let oracle = Numerov::new(
        m.vdw.z_min,
        m.far_cutoff,
        2_000_001,
        kappa(m.mass),
        c3_potential(m.vdw.c3_ground),
    )
    .eigenvalues(window.0, window.1, 1e-5);
    assert_eq!(fd.len(), oracle.len(), "level count: fd {} vs oracle {}", fd.len(), oracle.len());
    for (i, (a, b)) in fd.iter().zip(&oracle).enumerate() {
        assert!((a - b).abs() < 0.01, "level {i}: fd {a} vs numerov {b}");
    }
}

#[test]
fn excited_levels_match_numerov_shooting() {
    let m = model();
    let window = (-200.0, -1.0);
    let (_, _, fd) = fd_states(m, ElectronicState::Excited, window);
    let oracle = Numerov::new(
        m.vdw.z_min,
        m.far_cutoff,
        2_000_001,
        kappa(m.mass),
        c3_potential(m.vdw.c3_excited),
    )
    .eigenvalues(window.0, window.1, 1e-5);
    assert_eq!(fd.len(), oracle.len());
    for (i, (a, b)) in fd.iter().zip(&oracle).enumerate() {
        assert!((a - b).abs() < 0.01, "level {i}: fd {a} vs numerov {b}");
    }
}

#[test]
fn eigenstates_are_orthonormal_and_obey_the_node_theorem() {
    let m = model();
    let grid = m.grid().unwrap();
    let pot = PotentialOnGrid::sample(&m.vdw, ElectronicState::Ground, grid.points()).unwrap().values;
    let states = solve_bound_states(&grid, &pot, m.mass, (-200.0, 0.0)).unwrap();
    for (i, a) in states.iter().enumerate() {
        assert_eq!(count_nodes(&a.wavefunction), a.index);
        for b in &states[i..] {
            let s = overlap(&grid, &a.wavefunction, &b.wavefunction);
            let want = if a.index == b.index { 1.0 } else { 0.0 };
            assert!((s - want).abs() < 1e-6, "<{}|{}> = {s}", a.index, b.index);
        }
    }
    assert!(states.windows(2).all(|w| w[1].energy > w[0].energy && w[1].index == w[0].index + 1));
}

#[test]
fn hellmann_feynman_for_c3() {
    // dE/dC3 = <-1/z³> for the same level
    let m = model();
    let grid = m.grid().unwrap();
    let z = grid.points();
    let solve = |c3: f64| {
        let pot: Vec<f64> = z.iter().map(|&z| c3_potential(c3)(z)).collect();
        solve_bound_states(&grid, &pot, m.mass, (-100.0, -0.5)).unwrap()
    };
    let c3 = m.vdw.c3_ground;
    let dc = 1e-4 * c3;
    let (lo, mid, hi) = (solve(c3 - dc), solve(c3), solve(c3 + dc));
    for s in mid.iter().step_by(3) {
        let find = |v: &[nanofiber::qm1d::BoundState]| v.iter().find(|t| t.index == s.index).unwrap().energy;
        let numeric = (find(&hi) - find(&lo)) / (2.0 * dc);
        let inv3: Vec<f64> = z.iter().map(|&z| -1e-21 / (z * z * z)).collect();
        let weighted: Vec<f64> = s.wavefunction.iter().zip(&inv3).map(|(p, v)| p * v).collect();
        let expectation = overlap(&grid, &s.wavefunction, &weighted);
        assert!(
            (numeric / expectation - 1.0).abs() < 0.01,
            "level {}: {numeric} vs {expectation}",
            s.index
        );
    }
}

#[test]
fn levels_converge_under_grid_refinement() {
    let m = model();
    let fine = m.with_grid_refined();
    let (_, _, coarse) = fd_states(m, ElectronicState::Ground, (-200.0, 0.0));
    let (_, _, refined) = fd_states(&fine, ElectronicState::Ground, (-200.0, 0.0));
    assert_eq!(coarse.len(), refined.len());
    for (a, b) in coarse.iter().zip(&refined) {
        // second-order scheme: the halved step removes about 3/4 of the error
        assert!((a - b).abs() < 0.01, "{a} vs {b}");
    }
}

#[test]
fn hard_wall_box_and_harmonic_well() {
    let mass = model().mass;
    let k = kappa(mass);
    let l = 500.0 * NM;
    let grid = Grid::uniform(0.0, l, 20001).unwrap();
    let flat = vec![0.0; grid.len()];
    let states = solve_bound_states(&grid, &flat, mass, (0.0, 50.0)).unwrap();
    for s in states.iter().take(10) {
        let n = (s.index + 1) as f64;
        let exact = k * (n * std::f64::consts::PI / l).powi(2);
        assert!((s.energy / exact - 1.0).abs() < 1e-5, "box n = {n}: {} vs {exact}", s.energy);
    }

    // V = (z - c)²·k·w² gives levels 2 k w (n + 1/2)
    let w = 1.0 / (20.0 * NM).powi(2);
    let c = 0.5 * l;
    let pot: Vec<f64> = grid.points().iter().map(|&z| k * w * w * (z - c).powi(2)).collect();
    let states = solve_bound_states(&grid, &pot, mass, (0.0, 22.0 * k * w)).unwrap();
    assert!(states.len() >= 10);
    for s in states.iter().take(10) {
        let exact = 2.0 * k * w * (s.index as f64 + 0.5);
        assert!((s.energy / exact - 1.0).abs() < 1e-5, "oscillator n = {}: {} vs {exact}", s.index, s.energy);
    }
}

#[test]
fn shorter_box_raises_every_level() {
    let m = model();
    let states = |far: f64| {
        let mut boxed = m.clone();
        boxed.far_cutoff = far;
        let grid = boxed.grid().unwrap();
        let pot: Vec<f64> = grid.points().iter().map(|&z| c3_potential(m.vdw.c3_ground)(z)).collect();
        solve_bound_states(&grid, &pot, m.mass, (-60.0, 0.0)).unwrap()
    };
    let full = states(m.far_cutoff);
    let short = states(0.5 * m.far_cutoff);
    for s in &short {
        let same = full.iter().find(|t| t.index == s.index).unwrap();
        assert!(s.energy >= same.energy, "level {}: {} < {}", s.index, s.energy, same.energy);
    }
    // deep levels do not see the far wall
    assert!((full[0].energy - short[0].energy).abs() < 1e-6);
}

#[test]
fn turning_point_filter_is_stable_under_small_changes() {
    let m = model();
    let grid = m.grid().unwrap();
    let pot = PotentialOnGrid::sample(&m.vdw, ElectronicState::Excited, grid.points()).unwrap().values;
    let states = solve_bound_states(&grid, &pot, m.mass, (m.excited_floor, 0.0)).unwrap();
    let cut = m.excited_turning_point_max;
    let base = filter_by_turning_point(&states, cut).len() as i64;
    for factor in [0.99, 1.01] {
        let n = filter_by_turning_point(&states, cut * factor).len() as i64;
        assert!((n - base).abs() <= 1, "cutoff x{factor}: {n} vs {base}");
    }
}

#[test]
fn retained_count_is_stable_under_grid_refinement() {
    let m = model();
    let retained = |m: &SpectrumModel| {
        let grid = m.grid().unwrap();
        let pot = PotentialOnGrid::sample(&m.vdw, ElectronicState::Excited, grid.points()).unwrap().values;
        let states = solve_bound_states(&grid, &pot, m.mass, (m.excited_floor, 0.0)).unwrap();
        filter_by_turning_point(&states, m.excited_turning_point_max).len() as i64
    };
    let (coarse, fine) = (retained(m), retained(&m.with_grid_refined()));
    assert!((coarse - fine).abs() <= 1, "{coarse} vs {fine}");
}

#[test]
fn continuum_phase_matches_fine_numerov() {
    let m = model();
    let grid = m.grid().unwrap();
    let pot = PotentialOnGrid::sample(&m.vdw, ElectronicState::Ground, grid.points()).unwrap().values;
    let oracle = Numerov::new(
        m.vdw.z_min,
        m.far_cutoff,
        8_000_001,
        kappa(m.mass),
        c3_potential(m.vdw.c3_ground),
    );
    for energy in [8.33, 3.0, 25.0] {
        let state = solve_continuum(&grid, &pot, m.mass, energy).unwrap();
        let (phase, _) = oracle.scattering_phase(energy);
        let d = wrap(state.phase_shift - phase).abs();
        assert!(d < 1e-3, "E = {energy}: {} vs {phase} (diff {d})", state.phase_shift);
    }
}

#[test]
fn continuum_normalisation_is_grid_independent() {
    let m = model();
    let fine = m.with_grid_refined();
    let norm = |m: &SpectrumModel| {
        let grid = m.grid().unwrap();
        let pot = PotentialOnGrid::sample(&m.vdw, ElectronicState::Ground, grid.points()).unwrap().values;
        let s = solve_continuum(&grid, &pot, m.mass, 8.33).unwrap();
        // amplitude of the outer lobe, independent of the step size
        s.wavefunction.iter().rev().take(grid.len() / 4).fold(0.0f64, |a, v| a.max(v.abs()))
    };
    let (a, b) = (norm(m), norm(&fine));
    assert!((a / b - 1.0).abs() < 1e-3, "{a} vs {b}");
}
