//! Cylinder functions `J`, `Y`, `I`, `K` of orders 0, 1, 2 for real arguments.
//!
//! Each routine returns the three orders at once as `[f(0), f(1), f(2)]`.
//!
//! Regimes:
//! - `J`, `Y` for `x <= 25`: Miller backward recurrence normalised by
//!   `J0 + 2 (J2 + J4 + ...) = 1`, with `Y0`, `Y1` from the Neumann series over
//!   the same even/odd `J` values. Above 25 the Hankel asymptotic expansion.
//! - `I`: ascending series for `x <= 50`, asymptotic expansion above.
//! - `K`: ascending series for `x <= 2`, Steed's continued fraction (Temme's
//!   form) above.
//!
//! Order 2 always follows from the three-term recurrence except where noted.

use std::f64::consts::{FRAC_2_PI, PI};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const JY_ASYMPTOTIC_FROM: f64 = 25.0;
const I_ASYMPTOTIC_FROM: f64 = 50.0;
const K_SERIES_UP_TO: f64 = 2.0;
const RESCALE_ABOVE: f64 = 1e250;

/// Values of orders 0, 1, 2.
pub type Orders = [f64; 3];

/// Bessel functions of the first kind.
pub fn bessel_j(x: f64) -> Orders {
    if x < 0.0 {
        let [j0, j1, j2] = bessel_j(-x);
        return [j0, -j1, j2];
    }
    if x == 0.0 {
        return [1.0, 0.0, 0.0];
    }
    if x > JY_ASYMPTOTIC_FROM {
        return hankel_jy(x).0;
    }
    let (j, _) = miller(x);
    [j[0], j[1], j[2]]
}

/// Bessel functions of the second kind. `NaN` for `x <= 0`.
pub fn bessel_y(x: f64) -> Orders {
    bessel_jy(x).1
}

/// `J` and `Y` evaluated together; cheaper than two separate calls.
pub fn bessel_jy(x: f64) -> (Orders, Orders) {
    if !(x > 0.0) {
        return (bessel_j(x), [f64::NAN; 3]);
    }
    if x > JY_ASYMPTOTIC_FROM {
        return hankel_jy(x);
    }
    let (j, m) = miller(x);
    let log_term = (0.5 * x).ln() + EULER_GAMMA;

    // Y0 = (2/pi)(ln(x/2) + gamma) J0 - (4/pi) sum_{k>=1} (-1)^k J_{2k} / k
    let mut s0 = 0.0;
    let mut k = 1;
    while 2 * k <= m {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        k += 1;
    }
    let y0 = FRAC_2_PI * log_term * j[0] - 2.0 * FRAC_2_PI * s0;

    // Y1 = (2/pi)[(ln(x/2) + gamma - 1) J1 - J0/x
    //             - sum_{k>=1} (-1)^k (2k+1)/(k(k+1)) J_{2k+1}]
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k < m {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let kf = k as f64;
        s1 += sign * (2.0 * kf + 1.0) / (kf * (kf + 1.0)) * j[2 * k + 1];
        k += 1;
    }
    let y1 = FRAC_2_PI * ((log_term - 1.0) * j[1] - j[0] / x - s1);
    let y2 = 2.0 * y1 / x - y0;
    ([j[0], j[1], j[2]], [y0, y1, y2])
}

/// Modified Bessel functions of the first kind.
pub fn bessel_i(x: f64) -> Orders {
    let ax = x.abs();
    let mut out = if ax > I_ASYMPTOTIC_FROM {
        [
            asymptotic_i(ax, 0),
            asymptotic_i(ax, 1),
            asymptotic_i(ax, 2),
        ]
    } else {
        [series_i(ax, 0), series_i(ax, 1), series_i(ax, 2)]
    };
    if x < 0.0 {
        out[1] = -out[1];
    }
    out
}

/// Modified Bessel functions of the second kind. `NaN` for `x <= 0`.
pub fn bessel_k(x: f64) -> Orders {
    if !(x > 0.0) {
        return [f64::NAN; 3];
    }
    let (k0, k1) = if x <= K_SERIES_UP_TO {
        series_k01(x)
    } else {
        steed_k01(x)
    };
    [k0, k1, k0 + 2.0 * k1 / x]
}

/// Derivatives of `J` or `Y` from their values: `C0' = -C1`,
/// `C1' = C0 - C1/x`, `C2' = C1 - 2 C2/x`.
pub fn cylinder_derivatives(c: Orders, x: f64) -> Orders {
    [-c[1], c[0] - c[1] / x, c[1] - 2.0 * c[2] / x]
}

/// Derivatives of `I` from its values.
pub fn bessel_i_derivatives(i: Orders, x: f64) -> Orders {
    [i[1], i[0] - i[1] / x, i[1] - 2.0 * i[2] / x]
}

/// Derivatives of `K` from its values.
pub fn bessel_k_derivatives(k: Orders, x: f64) -> Orders {
    [-k[1], -k[0] - k[1] / x, -k[1] - 2.0 * k[2] / x]
}

/// Returns `J_0 ..= J_m` (normalised) and `m`.
fn miller(x: f64) -> (Vec<f64>, usize) {
    let m = 2 * ((x + 30.0 + 10.0 * x.sqrt()) / 2.0).floor() as usize;
    let mut j = vec![0.0; m + 2];
    j[m] = 1e-30;
    for k in (1..=m).rev() {
        let next = 2.0 * k as f64 / x * j[k] - j[k + 1];
        j[k - 1] = next;
        if next.abs() > RESCALE_ABOVE {
            for v in j[k - 1..].iter_mut() {
                *v /= RESCALE_ABOVE;
            }
        }
    }
    let mut norm = j[0];
    let mut k = 2;
    while k <= m {
        norm += 2.0 * j[k];
        k += 2;
    }
    for v in j.iter_mut() {
        *v /= norm;
    }
    (j, m)
}

/// Hankel expansion for `J` and `Y`, orders 0 and 1, order 2 by recurrence.
fn hankel_jy(x: f64) -> (Orders, Orders) {
    let mut j = [0.0; 3];
    let mut y = [0.0; 3];
    for n in 0..2 {
        let (p, q) = hankel_pq(x, n);
        let chi = x - (0.5 * n as f64 + 0.25) * PI;
        let amp = (FRAC_2_PI / x).sqrt();
        let (s, c) = chi.sin_cos();
        j[n] = amp * (p * c - q * s);
        y[n] = amp * (p * s + q * c);
    }
    j[2] = 2.0 * j[1] / x - j[0];
    y[2] = 2.0 * y[1] / x - y[0];
    (j, y)
}

fn hankel_pq(x: f64, n: usize) -> (f64, f64) {
    let mu = 4.0 * (n * n) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        term *= (mu - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf * x);
        if term.abs() >= last {
            break;
        }
        last = term.abs();
        // a_k / x^k enters P with sign (-1)^{k/2} for even k, Q with (-1)^{(k-1)/2} for odd k
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    (p, q)
}

fn series_i(x: f64, n: usize) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let t = half * half;
    let mut sum = term;
    for k in 1..500 {
        term *= t / (k as f64 * (k + n) as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn asymptotic_i(x: f64, n: usize) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 1..40 {
        let kf = k as f64;
        let next = -term * (mu - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 {
            break;
        }
    }
    x.exp() / (2.0 * PI * x).sqrt() * sum
}

fn series_k01(x: f64) -> (f64, f64) {
    let [i0, i1, _] = bessel_i(x);
    let log_half = (0.5 * x).ln();
    let t = 0.25 * x * x;

    let mut k0 = -(log_half + EULER_GAMMA) * i0;
    let mut coeff = 1.0; // t^k / (k!)^2
    let mut harmonic = 0.0;
    for k in 1..100 {
        let kf = k as f64;
        coeff *= t / (kf * kf);
        harmonic += 1.0 / kf;
        let term = coeff * harmonic;
        k0 += term;
        if term < 1e-17 * k0.abs() {
            break;
        }
    }

    // psi(k+1) + psi(k+2) = -2 gamma + 2 H_k + 1/(k+1)
    let mut sum = 1.0 - 2.0 * EULER_GAMMA;
    let mut coeff = 1.0; // t^k / (k! (k+1)!)
    let mut harmonic = 0.0;
    for k in 1..100 {
        let kf = k as f64;
        coeff *= t / (kf * (kf + 1.0));
        harmonic += 1.0 / kf;
        let term = coeff * (-2.0 * EULER_GAMMA + 2.0 * harmonic + 1.0 / (kf + 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    let k1 = 1.0 / x + log_half * i1 - 0.25 * x * sum;
    (k0, k1)
}

fn steed_k01(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}
