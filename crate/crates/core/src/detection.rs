//! MOT-position scans across the fiber, ballistic expansion of the cloud and
//! Gaussian profile fitting.

use crate::budget::{photon_count, BudgetParams, LaserParams, ObservationShell, scattering_rate};
use crate::constants::BOLTZMANN;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectionError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Gaussian fit diverged: {reason} (initial guess {initial:?}, residual {residual:e})")]
    FitDiverged {
        reason: String,
        initial: [f64; 4],
        residual: f64,
    },
}

/// Gaussian atom cloud; widths are standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudSpec {
    /// m.
    pub sigma_h: f64,
    /// m.
    pub sigma_v: f64,
    /// atoms/cm³.
    pub peak_density: f64,
    /// K.
    pub temperature: f64,
    /// kg.
    pub mass: f64,
}

impl CloudSpec {
    pub fn validate(&self) -> Result<(), DetectionError> {
        for (name, v) in [
            ("sigma_h", self.sigma_h),
            ("sigma_v", self.sigma_v),
            ("peak_density", self.peak_density),
            ("temperature", self.temperature),
            ("mass", self.mass),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DetectionError::InvalidParameter(format!("{name} {v} must be positive")));
            }
        }
        Ok(())
    }

    /// Vertical 1/e² diameter (m).
    pub fn vertical_diameter(&self) -> f64 {
        4.0 * self.sigma_v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    /// Vertical offset of the cloud centre from the fiber (m).
    pub offsets: Vec<f64>,
    /// counts/s.
    pub counts: Vec<f64>,
    /// counts/s.
    pub background: f64,
}

impl ScanResult {
    pub fn peak_counts(&self) -> f64 {
        self.counts.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Count rate versus cloud offset: the shell sees the local density of the
/// cloud at the fiber (thin-shell approximation).
pub fn scan_profile(
    cloud: &CloudSpec,
    shell: &ObservationShell,
    budget: &BudgetParams,
    laser: &LaserParams,
    background: f64,
    offsets: &[f64],
) -> Result<ScanResult, DetectionError> {
    cloud.validate()?;
    shell
        .validate()
        .and_then(|_| budget.validate())
        .and_then(|_| laser.validate())
        .map_err(|e| DetectionError::InvalidParameter(e.to_string()))?;
    if !(background >= 0.0) {
        return Err(DetectionError::InvalidParameter(format!("background {background}")));
    }
    let rate = scattering_rate(laser);
    let atoms_at_peak = shell.volume() * cloud.peak_density * 1e6;
    let counts = offsets
        .par_iter()
        .map(|&y| {
            let n = atoms_at_peak * (-0.5 * (y / cloud.sigma_v).powi(2)).exp();
            background + photon_count(&BudgetParams { n_atoms: n, ..*budget }, rate)
        })
        .collect();
    Ok(ScanResult {
        offsets: offsets.to_vec(),
        counts,
        background,
    })
}

/// `N(t)/N(0)` at the cloud centre after free expansion in the dark, with
/// `σ_i(t)² = σ_i² + (k_B T/m) t²` along two horizontal and one vertical axis.
pub fn expansion_decay(cloud: &CloudSpec, times: &[f64]) -> Vec<f64> {
    let v2 = BOLTZMANN * cloud.temperature / cloud.mass;
    times
        .iter()
        .map(|&t| {
            [cloud.sigma_h, cloud.sigma_h, cloud.sigma_v]
                .iter()
                .map(|s| s / (s * s + v2 * t * t).sqrt())
                .product()
        })
        .collect()
}

/// Time at which the centre density has dropped to `fraction` of its
/// initial value.
pub fn decay_time(cloud: &CloudSpec, fraction: f64) -> Result<f64, DetectionError> {
    cloud.validate()?;
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DetectionError::InvalidParameter(format!("fraction {fraction}")));
    }
    let at = |t: f64| expansion_decay(cloud, &[t])[0];
    let mut hi = 1e-3;
    while at(hi) > fraction {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid) > fraction {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Multiplies every sample by `1 + fraction·ξ`, ξ standard normal, from a
/// seeded generator.
pub fn add_multiplicative_noise(values: &[f64], fraction: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    values
        .iter()
        .map(|v| v * (1.0 + fraction * normal.sample(&mut rng)))
        .collect()
}

/// `amplitude · exp(-8 (y - center)²/diameter²) + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub center: f64,
    /// 1/e² diameter.
    pub diameter: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub iterations: usize,
}

impl GaussianFit {
    pub fn eval(&self, y: f64) -> f64 {
        gaussian([self.center, self.diameter, self.amplitude, self.offset], y)
    }
}

fn gaussian(p: [f64; 4], y: f64) -> f64 {
    let [c, d, a, b] = p;
    a * (-8.0 * (y - c).powi(2) / (d * d)).exp() + b
}

const MAX_ITERATIONS: usize = 500;

/// Levenberg–Marquardt fit with an analytic Jacobian, started from moments.
pub fn fit_gaussian(x: &[f64], y: &[f64]) -> Result<GaussianFit, DetectionError> {
    if x.len() != y.len() {
        return Err(DetectionError::InvalidParameter("x and y lengths differ".into()));
    }
    if x.len() < 5 {
        return Err(DetectionError::InvalidParameter(format!("{} points, need at least 5", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(DetectionError::InvalidParameter("non-finite sample".into()));
    }
    // work in scaled units so all parameters are O(1)
    let x_min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let x_max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sx = x_max - x_min;
    let sy = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if !(sx > 0.0) || !(sy > 0.0) {
        return Err(DetectionError::FitDiverged {
            reason: "no spread in data".into(),
            initial: [0.0; 4],
            residual: 0.0,
        });
    }
    let u: Vec<f64> = x.iter().map(|v| (v - x_min) / sx).collect();
    let v: Vec<f64> = y.iter().map(|w| w / sy).collect();

    let initial = moments_guess(&u, &v);
    let unscale = |p: [f64; 4]| [x_min + p[0] * sx, p[1] * sx, p[2] * sy, p[3] * sy];
    if !(initial[2].abs() > 1e-12) {
        return Err(DetectionError::FitDiverged {
            reason: "zero amplitude".into(),
            initial: unscale(initial),
            residual: rms(&u, &v, initial) * sy,
        });
    }

    let mut p = initial;
    let mut chi2 = chi_square(&u, &v, p);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&u, &v, p);
        let mut a = jtj;
        for i in 0..4 {
            a[i][i] += lambda * jtj[i][i].max(1e-300);
        }
        let step = match solve4(a, jtr) {
            Some(s) => s,
            None => {
                lambda *= 10.0;
                continue;
            }
        };
        let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
        let trial_chi2 = if trial[1] > 0.0 {
            chi_square(&u, &v, trial)
        } else {
            f64::INFINITY
        };
        if trial_chi2 <= chi2 {
            let small_step = step
                .iter()
                .zip(&trial)
                .all(|(s, q)| s.abs() <= 1e-13 * (q.abs() + 1e-13));
            let small_gain = chi2 - trial_chi2 <= 1e-15 * chi2;
            p = trial;
            chi2 = trial_chi2;
            lambda = (lambda / 10.0).max(1e-15);
            if small_step || small_gain || chi2 == 0.0 {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e20 {
                // no downhill direction left: at a minimum to working precision
                converged = true;
                break;
            }
        }
    }
    let residual = (chi2 / u.len() as f64).sqrt() * sy;
    let fitted = unscale(p);
    if !converged || fitted.iter().any(|v| !v.is_finite()) || !(fitted[1] > 0.0) {
        return Err(DetectionError::FitDiverged {
            reason: format!("no convergence after {iterations} iterations"),
            initial: unscale(initial),
            residual,
        });
    }
    Ok(GaussianFit {
        center: fitted[0],
        diameter: fitted[1],
        amplitude: fitted[2],
        offset: fitted[3],
        residual,
        iterations,
    })
}

fn moments_guess(u: &[f64], v: &[f64]) -> [f64; 4] {
    let base = v.iter().copied().fold(f64::INFINITY, f64::min);
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = v.iter().map(|y| y - base).collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return [0.5, 0.5, 0.0, base];
    }
    let mean = u.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / total;
    let var = u.iter().zip(&w).map(|(x, w)| w * (x - mean).powi(2)).sum::<f64>() / total;
    [mean, 4.0 * var.sqrt().max(1e-6), top - base, base]
}

fn chi_square(u: &[f64], v: &[f64], p: [f64; 4]) -> f64 {
    u.iter().zip(v).map(|(x, y)| (y - gaussian(p, *x)).powi(2)).sum()
}

fn rms(u: &[f64], v: &[f64], p: [f64; 4]) -> f64 {
    (chi_square(u, v, p) / u.len() as f64).sqrt()
}

fn normal_equations(u: &[f64], v: &[f64], p: [f64; 4]) -> ([[f64; 4]; 4], [f64; 4]) {
    let [c, d, a, _] = p;
    let mut jtj = [[0.0; 4]; 4];
    let mut jtr = [0.0; 4];
    for (x, y) in u.iter().zip(v) {
        let dx = x - c;
        let e = (-8.0 * dx * dx / (d * d)).exp();
        let row = [
            a * e * 16.0 * dx / (d * d),
            a * e * 16.0 * dx * dx / (d * d * d),
            e,
            1.0,
        ];
        let r = y - gaussian(p, *x);
        for i in 0..4 {
            jtr[i] += row[i] * r;
            for j in 0..4 {
                jtj[i][j] += row[i] * row[j];
            }
        }
    }
    (jtj, jtr)
}

/// Gaussian elimination with partial pivoting.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[pivot][col].abs() > 0.0) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (v, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for i in (0..4).rev() {
        let s: f64 = (i + 1..4).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::CS_MASS;

    fn cloud() -> CloudSpec {
        CloudSpec {
            sigma_h: 0.5e-3,
            sigma_v: 0.275e-3,
            peak_density: 2.1e10,
            temperature: 400e-6,
            mass: CS_MASS,
        }
    }

    fn axis(n: usize, half: f64) -> Vec<f64> {
        (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn noiseless_round_trip() {
        let truth = [0.1e-3, 1.1e-3, 1.2e4, 2.5e3];
        let x = axis(61, 1.5e-3);
        let y: Vec<f64> = x.iter().map(|&v| gaussian(truth, v)).collect();
        let fit = fit_gaussian(&x, &y).unwrap();
        assert!((fit.diameter / truth[1] - 1.0).abs() < 1e-6);
        assert!((fit.center - truth[0]).abs() < 1e-9);
        assert!((fit.amplitude / truth[2] - 1.0).abs() < 1e-6);
        assert!((fit.offset / truth[3] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_inputs() {
        let x = axis(21, 1.0);
        assert!(matches!(fit_gaussian(&x, &[5.0; 21]), Err(DetectionError::FitDiverged { .. })));
        assert!(fit_gaussian(&x[..4], &[1.0, 2.0, 1.0, 0.5]).is_err());
        assert!(fit_gaussian(&x, &[1.0; 20]).is_err());
    }

    #[test]
    fn decay_limits() {
        let c = cloud();
        assert_eq!(expansion_decay(&c, &[0.0]), vec![1.0]);
        let frozen = CloudSpec { temperature: 1e-30, ..c };
        let d = expansion_decay(&frozen, &[1e-3, 1e-2]);
        assert!(d.iter().all(|v| (v - 1.0).abs() < 1e-20));
        let times: Vec<f64> = (0..100).map(|i| i as f64 * 1e-4).collect();
        let d = expansion_decay(&c, &times);
        assert!(d.windows(2).all(|w| w[1] <= w[0]));
        let t = decay_time(&c, (-1.0f64).exp()).unwrap();
        assert!((expansion_decay(&c, &[t])[0] - (-1.0f64).exp()).abs() < 1e-12);
        assert!(decay_time(&c, 1.5).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let v = vec![1.0; 10];
        assert_eq!(add_multiplicative_noise(&v, 0.05, 7), add_multiplicative_noise(&v, 0.05, 7));
        assert_ne!(add_multiplicative_noise(&v, 0.05, 7), add_multiplicative_noise(&v, 0.05, 8));
    }
}
