//! Symmetric tridiagonal eigenproblems: Sturm-sequence bisection for
//! eigenvalues, twisted factorisation for eigenvectors.

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    off_sq: Vec<f64>,
}

impl SymTridiagonal {
    /// `off[i]` couples rows `i` and `i + 1`.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> SymTridiagonal {
        assert!(!diag.is_empty());
        assert_eq!(off.len() + 1, diag.len());
        let off_sq = off.iter().map(|b| b * b).collect();
        SymTridiagonal { diag, off, off_sq }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE / f64::EPSILON;
        let mut count = 0;
        let mut d = 0.0;
        for i in 0..self.diag.len() {
            d = if i == 0 {
                self.diag[0] - x
            } else {
                (self.diag[i] - x) - self.off_sq[i - 1] / d
            };
            if d == 0.0 {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// The `k`-th eigenvalue (0-based, ascending), given `lo`/`hi` with
    /// `count_below(lo) <= k < count_below(hi)`.
    pub fn eigenvalue(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Unit eigenvector for an accurately known eigenvalue `lambda`.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.diag.len();
        if n == 1 {
            return vec![1.0];
        }
        let tiny = f64::MIN_POSITIVE / f64::EPSILON;
        let guard = |d: f64| if d == 0.0 { tiny } else { d };

        let mut dplus = vec![0.0; n];
        dplus[0] = guard(self.diag[0] - lambda);
        for i in 1..n {
            dplus[i] = guard((self.diag[i] - lambda) - self.off_sq[i - 1] / dplus[i - 1]);
        }
        let mut dminus = vec![0.0; n];
        dminus[n - 1] = guard(self.diag[n - 1] - lambda);
        for i in (0..n - 1).rev() {
            dminus[i] = guard((self.diag[i] - lambda) - self.off_sq[i] / dminus[i + 1]);
        }
        let mut twist = 0;
        let mut best = f64::INFINITY;
        for k in 0..n {
            let gamma = (dplus[k] + dminus[k] - (self.diag[k] - lambda)).abs();
            if gamma < best {
                best = gamma;
                twist = k;
            }
        }

        let mut v = vec![0.0; n];
        v[twist] = 1.0;
        for i in (0..twist).rev() {
            v[i] = -(self.off[i] / dplus[i]) * v[i + 1];
        }
        for i in twist..n - 1 {
            v[i + 1] = -(self.off[i] / dminus[i + 1]) * v[i];
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }
}
