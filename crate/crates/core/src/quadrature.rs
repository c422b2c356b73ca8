//! Fixed-node quadrature rules.

use std::f64::consts::PI;

/// Nodes and weights of a rule, in ascending node order.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Gauss–Legendre rule on `[-1, 1]`.
    pub fn gauss_legendre(n: usize) -> Rule {
        assert!(n >= 1, "quadrature needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Rule { nodes, weights }
    }

    /// Gauss–Laguerre rule for `∫_0^∞ e^{-x} f(x) dx`.
    pub fn gauss_laguerre(n: usize) -> Rule {
        assert!(n >= 1, "quadrature needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..n {
            z = match i {
                0 => 3.0 / (1.0 + 2.4 * nf),
                1 => z + 15.0 / (1.0 + 2.5 * nf),
                _ => {
                    let ai = (i - 1) as f64;
                    z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
                }
            };
            let mut dp = 1.0;
            let mut p_prev = 0.0;
            for _ in 0..200 {
                let (p, pm) = laguerre(n, z);
                p_prev = pm;
                dp = nf * (p - pm) / z;
                let dz = p / dp;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            let (p, pm) = laguerre(n, z);
            if z != 0.0 {
                dp = nf * (p - pm) / z;
                p_prev = pm;
            }
            nodes[i] = z;
            weights[i] = -1.0 / (dp * nf * p_prev);
        }
        Rule { nodes, weights }
    }

    /// Maps a `[-1, 1]` rule onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Rule {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| half * w).collect(),
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Midpoints of `n` equal cells on `[a, b]`.
pub fn midpoints(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / n as f64;
    (0..n).map(|j| a + (j as f64 + 0.5) * h).collect()
}

/// Trapezoid weights for arbitrary strictly increasing abscissae.
pub fn trapezoid_weights(z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (z[i + 1] - z[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `(L_n(x), L_{n-1}(x))`.
fn laguerre(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0;
    for k in 1..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0 - x) * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = Rule::gauss_legendre(8);
        // exact up to degree 15
        let v = rule.integrate(|x| x.powi(14) + 3.0 * x.powi(7));
        assert!((v - 2.0 / 15.0).abs() < 1e-15);
        assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let odd = Rule::gauss_legendre(7);
        assert_eq!(odd.nodes[3], 0.0);
    }

    #[test]
    fn laguerre_moments() {
        let rule = Rule::gauss_laguerre(32);
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        // ∫ x^k e^{-x} = k!
        let m5 = rule.integrate(|x| x.powi(5));
        assert!((m5 - 120.0).abs() < 1e-10);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(rule.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn mapped_rule_and_trapezoid() {
        let rule = Rule::gauss_legendre(16).mapped(1.0, 3.0);
        assert!((rule.integrate(|x| x.ln()) - (3.0 * 3f64.ln() - 2.0)).abs() < 1e-14);
        let w = trapezoid_weights(&[0.0, 1.0, 3.0]);
        assert_eq!(w, vec![0.5, 1.5, 1.0]);
        let m = midpoints(0.0, 1.0, 4);
        assert_eq!(m, vec![0.125, 0.375, 0.625, 0.875]);
    }
}
