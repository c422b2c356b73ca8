//! Independent Numerov integrators on uniform grids, used as oracles for the
//! matrix eigensolver and the continuum solver.

#![allow(dead_code)]

use std::f64::consts::PI;

const PLANCK: f64 = 6.626_070_15e-34;

/// `ħ²/2m` expressed as `h/(8π²m)` in MHz·m².
pub fn kappa(mass: f64) -> f64 {
    PLANCK / (8.0 * PI * PI * mass) * 1e-6
}

/// Solves `-κψ'' + V(z)ψ = Eψ` on a uniform grid with `ψ = 0` at both ends.
pub struct Numerov {
    z0: f64,
    h: f64,
    /// `V/κ` at every point (1/m²).
    v: Vec<f64>,
    kappa: f64,
}

impl Numerov {
    pub fn new(z0: f64, z1: f64, n: usize, kappa: f64, potential: impl Fn(f64) -> f64) -> Self {
        let h = (z1 - z0) / (n - 1) as f64;
        let v = (0..n).map(|i| potential(z0 + i as f64 * h) / kappa).collect();
        Numerov { z0, h, v, kappa }
    }

    /// Outward shot from the left wall: number of sign changes of ψ on
    /// `(z0, z1]`, which equals the number of eigenvalues below `e`.
    pub fn count_below(&self, e: f64) -> usize {
        let c = self.h * self.h / 12.0;
        let e = e / self.kappa;
        let n = self.v.len();
        // y = (1 - c g) ψ with ψ'' = g ψ
        let mut psi_prev = 0.0;
        let mut psi = 1e-30;
        let mut y_prev = 0.0;
        let mut y = (1.0 - c * (self.v[1] - e)) * psi;
        let mut nodes = 0;
        for i in 1..n - 1 {
            let g = self.v[i] - e;
            let y_next = 2.0 * y - y_prev + 12.0 * c * g * psi;
            let psi_next = y_next / (1.0 - c * (self.v[i + 1] - e));
            if psi_next == 0.0 || (psi_next < 0.0) != (psi < 0.0) {
                nodes += 1;
            }
            psi_prev = psi;
            psi = psi_next;
            y_prev = y;
            y = y_next;
            if psi.abs() > 1e200 {
                psi *= 1e-200;
                psi_prev *= 1e-200;
                y *= 1e-200;
                y_prev *= 1e-200;
            }
        }
        let _ = psi_prev;
        nodes
    }

    /// All eigenvalues inside `(lo, hi)`, by bisection on the node count.
    pub fn eigenvalues(&self, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
        let first = self.count_below(lo);
        let last = self.count_below(hi);
        (first..last)
            .map(|k| {
                let (mut a, mut b) = (lo, hi);
                while b - a > tol {
                    let m = 0.5 * (a + b);
                    if self.count_below(m) <= k {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    }

    /// Regular solution from the left wall at energy `e > 0`, fitted over the
    /// last quarter to `P sin(k(z - z0)) + Q cos(k(z - z0))`. Returns the
    /// phase `atan2(Q, P)` and the amplitude per unit initial slope.
    pub fn scattering_phase(&self, e: f64) -> (f64, f64) {
        let c = self.h * self.h / 12.0;
        let k = (e / self.kappa).sqrt();
        let eg = e / self.kappa;
        let n = self.v.len();
        let tail = n - n / 4;
        let mut psi = self.h;
        let mut y_prev = 0.0;
        let mut y = (1.0 - c * (self.v[1] - eg)) * psi;
        let (mut ss, mut sc, mut cc, mut ps, mut pc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 1..n - 1 {
            let g = self.v[i] - eg;
            let y_next = 2.0 * y - y_prev + 12.0 * c * g * psi;
            let psi_next = y_next / (1.0 - c * (self.v[i + 1] - eg));
            y_prev = y;
            y = y_next;
            psi = psi_next;
            if i + 1 >= tail {
                let (s, co) = (k * (i + 1) as f64 * self.h).sin_cos();
                ss += s * s;
                sc += s * co;
                cc += co * co;
                ps += psi * s;
                pc += psi * co;
            }
        }
        let det = ss * cc - sc * sc;
        let p = (ps * cc - pc * sc) / det;
        let q = (pc * ss - ps * sc) / det;
        let _ = self.z0;
        (q.atan2(p), p.hypot(q))
    }
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap(phi: f64) -> f64 {
    let mut p = phi % (2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    } else if p <= -PI {
        p += 2.0 * PI;
    }
    p
}
