use super::{check_inputs, Grid, QmError};
use std::f64::consts::PI;

const TAIL_FRACTION: f64 = 0.25;
const MIN_TAIL_OSCILLATIONS: f64 = 10.0;

/// Regular scattering solution normalised per unit energy (MHz⁻¹):
/// asymptotically `√(1/(π κ k)) sin(k z + φ)` with `κ = ħ²/2m` in MHz·m².
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumState {
    /// MHz.
    pub energy: f64,
    pub wavefunction: Vec<f64>,
    /// Asymptotic wavenumber (1/m).
    pub wavenumber: f64,
    /// Factor that maps the unit-slope solution at the wall onto the
    /// energy-normalised one.
    pub normalization: f64,
    /// Phase relative to the potential-free solution on the same grid (rad,
    /// wrapped to (-π, π]).
    pub phase_shift: f64,
}

/// Energy-normalisation amplitude `√(1/(π κ k))`.
pub fn energy_normalized_amplitude(kappa: f64, k: f64) -> f64 {
    (1.0 / (PI * kappa * k)).sqrt()
}

pub fn solve_continuum(
    grid: &Grid,
    potential: &[f64],
    mass: f64,
    energy: f64,
) -> Result<ContinuumState, QmError> {
    let kappa = check_inputs(grid, potential, mass)?;
    if !(energy > 0.0) {
        return Err(QmError::NonpositiveEnergy(energy));
    }
    let z = grid.points();
    let n = z.len();
    let k = (energy / kappa).sqrt();
    let tail_start = z[n - 1] - TAIL_FRACTION * (z[n - 1] - z[0]);
    let oscillations = k * (z[n - 1] - tail_start) / (2.0 * PI);
    if oscillations < MIN_TAIL_OSCILLATIONS {
        return Err(QmError::EnergyTooLowForAsymptotics {
            energy,
            oscillations,
        });
    }
    let first_tail = z.partition_point(|&x| x < tail_start);
    let tail = first_tail..n - 1;

    let mut psi = integrate_outward(z, |i| potential[i], kappa, energy);
    let free = integrate_outward(z, |_| 0.0, kappa, energy);

    let mut sum = 0.0;
    for i in tail.clone() {
        let h = z[i + 1] - z[i];
        let q2 = (energy - potential[i]) / kappa;
        let c = 1.0 - 0.5 * q2 * h * h;
        let invariant = psi[i] * psi[i] + psi[i + 1] * psi[i + 1] - 2.0 * c * psi[i] * psi[i + 1];
        // WKB: the local amplitude² scales as 1/q
        sum += invariant / (1.0 - c * c) * q2.sqrt() / k;
    }
    let amplitude = (sum / tail.len() as f64).sqrt();
    let normalization = energy_normalized_amplitude(kappa, k) / amplitude;
    psi.iter_mut().for_each(|v| *v *= normalization);

    let alpha = discrete_phase(z, k);
    let phase_shift = wrap(tail_phase(&psi, &alpha, tail.clone()) - tail_phase(&free, &alpha, tail));

    Ok(ContinuumState {
        energy,
        wavefunction: psi,
        wavenumber: k,
        normalization,
        phase_shift,
    })
}

/// Three-point recurrence from `ψ(z₀) = 0`, `ψ'(z₀) = 1`.
fn integrate_outward(z: &[f64], potential: impl Fn(usize) -> f64, kappa: f64, energy: f64) -> Vec<f64> {
    let n = z.len();
    let mut psi = vec![0.0; n];
    psi[1] = z[1] - z[0];
    for i in 1..n - 1 {
        let hm = z[i] - z[i - 1];
        let hp = z[i + 1] - z[i];
        let w = 0.5 * (hm + hp);
        psi[i + 1] =
            psi[i] + hp * ((psi[i] - psi[i - 1]) / hm + w * (potential(i) - energy) * psi[i] / kappa);
    }
    psi
}

/// Accumulated phase of the free discrete wave, step by step.
fn discrete_phase(z: &[f64], k: f64) -> Vec<f64> {
    let mut alpha = Vec::with_capacity(z.len());
    alpha.push(0.0);
    let mut acc = 0.0;
    for w in z.windows(2) {
        let h = w[1] - w[0];
        acc += (1.0 - 0.5 * k * k * h * h).acos();
        alpha.push(acc);
    }
    alpha
}

/// Least-squares phase φ of `ψ ≈ P sin α + Q cos α` over `range`.
fn tail_phase(psi: &[f64], alpha: &[f64], range: std::ops::Range<usize>) -> f64 {
    let (mut ss, mut sc, mut cc, mut ps, mut pc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in range {
        let (s, c) = alpha[i].sin_cos();
        ss += s * s;
        sc += s * c;
        cc += c * c;
        ps += psi[i] * s;
        pc += psi[i] * c;
    }
    let det = ss * cc - sc * sc;
    let p = (ps * cc - pc * sc) / det;
    let q = (pc * ss - ps * sc) / det;
    q.atan2(p)
}

fn wrap(phi: f64) -> f64 {
    let mut p = phi % (2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    } else if p <= -PI {
        p += 2.0 * PI;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{kinetic_coefficient, CS_MASS, NM};

    #[test]
    fn free_particle_is_the_discrete_sine() {
        let grid = Grid::uniform(10.0 * NM, 2010.0 * NM, 40001).unwrap();
        let v = vec![0.0; grid.len()];
        let energy = 8.0;
        let st = solve_continuum(&grid, &v, CS_MASS, energy).unwrap();
        let kappa = kinetic_coefficient(CS_MASS);
        let amp = energy_normalized_amplitude(kappa, st.wavenumber);
        let h = grid.points()[1] - grid.points()[0];
        let theta = (1.0 - 0.5 * st.wavenumber.powi(2) * h * h).acos();
        for (i, psi) in st.wavefunction.iter().enumerate() {
            let exact = amp * (theta * i as f64).sin();
            assert!((psi - exact).abs() <= 1e-6 * amp);
        }
        assert!(st.phase_shift.abs() < 1e-9);
    }

    #[test]
    fn low_energy_and_invalid_energy() {
        let grid = Grid::uniform(10.0 * NM, 1010.0 * NM, 4001).unwrap();
        let v = vec![0.0; grid.len()];
        assert!(matches!(
            solve_continuum(&grid, &v, CS_MASS, 0.01),
            Err(QmError::EnergyTooLowForAsymptotics { .. })
        ));
        assert!(matches!(
            solve_continuum(&grid, &v, CS_MASS, -1.0),
            Err(QmError::NonpositiveEnergy(_))
        ));
    }

    #[test]
    fn wrap_range() {
        assert!((wrap(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap(-0.5) + 0.5).abs() < 1e-15);
        assert!((wrap(7.0) - (7.0 - 2.0 * PI)).abs() < 1e-12);
    }
}
