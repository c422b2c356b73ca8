//! Fundamental HE11 mode of a step-index cylinder with a sharp core/cladding
//! boundary, solved from the full hybrid characteristic equation.
//!
//! The mode is quasi-linearly polarised. With `u = h a`, `w = q a` and
//! `s = (1/u² + 1/w²) / (J1'(u)/(u J1(u)) + K1'(w)/(w K1(w)))` the transverse
//! profile is (up to a common amplitude, polarisation along φ = 0)
//!
//! ```text
//! r < a:  e_r = β/(2h) [(1-s) J0(hr) - (1+s) J2(hr)]
//!         e_φ = β/(2h) [(1-s) J0(hr) + (1+s) J2(hr)]
//!         e_z = J1(hr)
//! r > a:  e_r = c β/(2q) [(1-s) K0(qr) + (1+s) K2(qr)]
//!         e_φ = c β/(2q) [(1-s) K0(qr) - (1+s) K2(qr)]
//!         e_z = c K1(qr),                  c = J1(u)/K1(w)
//! ```
//!
//! with angular factors `cos φ`, `sin φ`, `cos φ` on the three components.

use crate::bessel::{self, Orders};
use crate::quadrature::Rule;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// First zero of `J0`: the HE11-only cutoff in `V`.
pub const SINGLE_MODE_CUTOFF: f64 = 2.404_825_557_695_773;

const TOLERANCE_B: f64 = 1e-14;
const SCAN_POINTS: usize = 4000;
const SCAN_LOG_SPAN: f64 = 14.0;
const GROUP_INDEX_STEP: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FiberError {
    #[error("invalid fiber: {0}")]
    InvalidSpec(String),
    #[error("fiber supports more than one mode (V = {v:.6} >= 2.405)")]
    Multimode { v: f64 },
    #[error("no HE11 root could be bracketed (V = {v:.6})")]
    NoRoot { v: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    /// Core radius (m).
    pub radius: f64,
    pub n_core: f64,
    pub n_clad: f64,
    /// Vacuum wavelength (m).
    pub wavelength: f64,
}

impl FiberSpec {
    pub fn new(radius: f64, n_core: f64, n_clad: f64, wavelength: f64) -> Result<Self, FiberError> {
        let spec = FiberSpec {
            radius,
            n_core,
            n_clad,
            wavelength,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), FiberError> {
        let finite = [self.radius, self.n_core, self.n_clad, self.wavelength]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(FiberError::InvalidSpec("non-finite parameter".into()));
        }
        if self.radius <= 0.0 {
            return Err(FiberError::InvalidSpec(format!("radius {} <= 0", self.radius)));
        }
        if self.wavelength <= 0.0 {
            return Err(FiberError::InvalidSpec(format!(
                "wavelength {} <= 0",
                self.wavelength
            )));
        }
        if self.n_clad < 1.0 {
            return Err(FiberError::InvalidSpec(format!("n_clad {} < 1", self.n_clad)));
        }
        if self.n_core <= self.n_clad {
            return Err(FiberError::InvalidSpec(format!(
                "n_core {} <= n_clad {}",
                self.n_core, self.n_clad
            )));
        }
        Ok(())
    }

    pub fn k0(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// `k0 a`.
    pub fn size_parameter(&self) -> f64 {
        self.k0() * self.radius
    }

    pub fn v_number(&self) -> f64 {
        self.size_parameter() * (self.n_core.powi(2) - self.n_clad.powi(2)).sqrt()
    }

    fn with_wavelength(&self, wavelength: f64) -> FiberSpec {
        FiberSpec { wavelength, ..*self }
    }
}

/// Azimuthal treatment of `|e|²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Azimuth {
    /// Average over φ.
    #[default]
    Averaged,
    /// Along the polarisation axis (φ = 0).
    Parallel,
    /// Perpendicular to the polarisation axis (φ = π/2).
    Perpendicular,
}

/// Field amplitudes without the angular factors, scaled so that
/// `∫ |e|² dA = 1` over the whole cross section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldComponents {
    pub radial: f64,
    pub azimuthal: f64,
    pub axial: f64,
}

impl FieldComponents {
    pub fn intensity(&self, azimuth: Azimuth) -> f64 {
        let (r2, p2, z2) = (
            self.radial * self.radial,
            self.azimuthal * self.azimuthal,
            self.axial * self.axial,
        );
        match azimuth {
            Azimuth::Averaged => 0.5 * (r2 + p2 + z2),
            Azimuth::Parallel => r2 + z2,
            Azimuth::Perpendicular => p2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidedMode {
    pub spec: FiberSpec,
    /// Propagation constant (rad/m).
    pub beta: f64,
    /// Interior transverse wavenumber (rad/m).
    pub h_in: f64,
    /// Exterior decay constant (rad/m).
    pub q_out: f64,
    /// Hybrid-mode parameter `s`.
    pub s: f64,
    /// Amplitude factor applied to the raw profile so that `∫|e|² dA = 1`.
    pub norm: f64,
    /// `∫ n² |e|² dA` of the normalised field.
    pub index_weighted_norm: f64,
    /// `dβ/dk0`.
    pub group_index: f64,
}

/// Solves the HE11 mode.
pub fn solve_he11(spec: &FiberSpec) -> Result<GuidedMode, FiberError> {
    spec.validate()?;
    let v = spec.v_number();
    if v >= SINGLE_MODE_CUTOFF {
        return Err(FiberError::Multimode { v });
    }
    let b = effective_index(spec)?;

    let dl = GROUP_INDEX_STEP * spec.wavelength;
    let plus = spec.with_wavelength(spec.wavelength - dl);
    let minus = spec.with_wavelength(spec.wavelength + dl);
    let beta_plus = effective_index(&plus)? * plus.k0();
    let beta_minus = effective_index(&minus)? * minus.k0();
    let group_index = (beta_plus - beta_minus) / (plus.k0() - minus.k0());

    let k0 = spec.k0();
    let beta = b * k0;
    let h_in = k0 * (spec.n_core.powi(2) - b * b).sqrt();
    let q_out = k0 * (b * b - spec.n_clad.powi(2)).sqrt();
    let u = h_in * spec.radius;
    let w = q_out * spec.radius;
    let (jq, kq) = log_derivative_terms(u, w);
    let s = (1.0 / (u * u) + 1.0 / (w * w)) / (jq + kq);

    let mut mode = GuidedMode {
        spec: *spec,
        beta,
        h_in,
        q_out,
        s,
        norm: 1.0,
        index_weighted_norm: 0.0,
        group_index,
    };
    let (inner, outer) = mode.raw_power_integrals();
    let total = inner + outer;
    mode.norm = 1.0 / total.sqrt();
    mode.index_weighted_norm =
        (spec.n_core.powi(2) * inner + spec.n_clad.powi(2) * outer) / total;
    Ok(mode)
}

/// `|e(r)|²` with unit cross-section integral.
pub fn mode_intensity(mode: &GuidedMode, r: f64, azimuth: Azimuth) -> f64 {
    mode.components(r).intensity(azimuth)
}

impl GuidedMode {
    pub fn effective_index(&self) -> f64 {
        self.beta / self.spec.k0()
    }

    pub fn u(&self) -> f64 {
        self.h_in * self.spec.radius
    }

    pub fn w(&self) -> f64 {
        self.q_out * self.spec.radius
    }

    /// Normalised field components at radius `r >= 0`.
    pub fn components(&self, r: f64) -> FieldComponents {
        let raw = self.raw_components(r);
        FieldComponents {
            radial: self.norm * raw.radial,
            azimuthal: self.norm * raw.azimuthal,
            axial: self.norm * raw.axial,
        }
    }

    /// Signed interior `e_z` zero crossings on `(0, a)`: 0 identifies HE11.
    pub fn interior_axial_nodes(&self, samples: usize) -> usize {
        let a = self.spec.radius;
        let mut nodes = 0;
        let mut prev = self.raw_components(a / samples as f64).axial;
        for i in 2..=samples {
            let cur = self.raw_components(a * i as f64 / samples as f64).axial;
            if cur * prev < 0.0 {
                nodes += 1;
            }
            prev = cur;
        }
        nodes
    }

    fn raw_components(&self, r: f64) -> FieldComponents {
        let a = self.spec.radius;
        let s = self.s;
        if r < a {
            let x = self.h_in * r;
            let j = bessel::bessel_j(x);
            let f = self.beta / (2.0 * self.h_in);
            FieldComponents {
                radial: f * ((1.0 - s) * j[0] - (1.0 + s) * j[2]),
                azimuthal: -f * ((1.0 - s) * j[0] + (1.0 + s) * j[2]),
                axial: j[1],
            }
        } else {
            let x = self.q_out * r;
            let k = bessel::bessel_k(x);
            let c = bessel::bessel_j(self.u())[1] / bessel::bessel_k(self.w())[1];
            let f = c * self.beta / (2.0 * self.q_out);
            FieldComponents {
                radial: f * ((1.0 - s) * k[0] + (1.0 + s) * k[2]),
                azimuthal: -f * ((1.0 - s) * k[0] - (1.0 + s) * k[2]),
                axial: c * k[1],
            }
        }
    }

    /// `(∫_core, ∫_cladding)` of `|e_raw|² dA`.
    fn raw_power_integrals(&self) -> (f64, f64) {
        let density = |r: f64| 2.0 * self.raw_components(r).intensity(Azimuth::Averaged) * PI * r;
        let a = self.spec.radius;
        let gl = Rule::gauss_legendre(48);
        let inner = gl.mapped(0.0, a).integrate(density);
        // the exterior integrand decays like exp(-2 q r)
        let panel = 1.0 / self.q_out;
        let mut outer = 0.0;
        for p in 0..40 {
            let lo = a + p as f64 * panel;
            outer += gl.mapped(lo, lo + panel).integrate(density);
        }
        (inner, outer)
    }
}

/// `β/k0` of the HE11 root.
fn effective_index(spec: &FiberSpec) -> Result<f64, FiberError> {
    let v = spec.v_number();
    let ka = spec.size_parameter();
    let n2sq = spec.n_clad.powi(2);
    let b_of_w = |w: f64| (n2sq + (w / ka).powi(2)).sqrt();
    let f = |w: f64| characteristic(spec, b_of_w(w));

    // scan w = q a logarithmically from V·10^-14 up to V, where the root
    // sits close to the cladding line for thin fibers
    let w_at = |i: usize| {
        let t = i as f64 / SCAN_POINTS as f64;
        v * 10f64.powf(-SCAN_LOG_SPAN * (1.0 - t)) * (1.0 - 1e-9 * t)
    };
    let mut bracket = None;
    let mut w_prev = w_at(0);
    let mut f_prev = f(w_prev);
    for i in 1..=SCAN_POINTS {
        let w = w_at(i);
        let fw = f(w);
        if fw.is_finite() && f_prev.is_finite() && fw * f_prev <= 0.0 {
            bracket = Some((w_prev, w, f_prev, fw));
            break;
        }
        w_prev = w;
        f_prev = fw;
    }
    let (mut lo, mut hi, mut f_lo, mut f_hi) = bracket.ok_or(FiberError::NoRoot { v })?;

    // bisection to a coarse bracket, then Illinois-modified regula falsi
    while b_of_w(hi) - b_of_w(lo) > 1e-6 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm * f_lo <= 0.0 {
            hi = mid;
            f_hi = fm;
        } else {
            lo = mid;
            f_lo = fm;
        }
    }
    let mut side = 0;
    for _ in 0..200 {
        if b_of_w(hi) - b_of_w(lo) <= TOLERANCE_B {
            break;
        }
        let mut mid = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        if !(mid > lo && mid < hi) {
            mid = 0.5 * (lo + hi);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(b_of_w(mid));
        }
        if fm * f_lo < 0.0 {
            hi = mid;
            f_hi = fm;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        } else {
            lo = mid;
            f_lo = fm;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        }
    }
    Ok(b_of_w(0.5 * (lo + hi)))
}

fn log_derivative_terms(u: f64, w: f64) -> (f64, f64) {
    let j: Orders = bessel::bessel_j(u);
    let k: Orders = bessel::bessel_k(w);
    let dj = bessel::cylinder_derivatives(j, u);
    let dk = bessel::bessel_k_derivatives(k, w);
    (dj[1] / (u * j[1]), dk[1] / (w * k[1]))
}

/// Characteristic function of the HE/EH family in `b = β/k0`.
pub fn characteristic(spec: &FiberSpec, b: f64) -> f64 {
    let (lhs, rhs) = characteristic_terms(spec, b);
    lhs - rhs
}

/// Residual relative to the size of the two sides of the equation.
pub fn relative_residual(spec: &FiberSpec, b: f64) -> f64 {
    let (lhs, rhs) = characteristic_terms(spec, b);
    (lhs - rhs).abs() / (lhs.abs() + rhs.abs())
}

fn characteristic_terms(spec: &FiberSpec, b: f64) -> (f64, f64) {
    let ka = spec.size_parameter();
    let n1sq = spec.n_core.powi(2);
    let n2sq = spec.n_clad.powi(2);
    let u = ka * (n1sq - b * b).sqrt();
    let w = ka * (b * b - n2sq).sqrt();
    let (jq, kq) = log_derivative_terms(u, w);
    let lhs = (jq + kq) * (n1sq * jq + n2sq * kq);
    let rhs = b * b * (1.0 / (u * u) + 1.0 / (w * w)).powi(2);
    (lhs, rhs)
}
