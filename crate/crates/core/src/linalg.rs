//! Small dense/tridiagonal numerical kernels shared by the solvers.

use crate::error::{Error, Result};

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::InvalidParameter(format!(
                "tridiagonal shape mismatch: {} diagonal, {} off-diagonal",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            if q == 0.0 {
                q = tiny;
            }
            let e = self.off[i - 1];
            q = self.diag[i] - x - e * e / q;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k` smallest eigenvalues in increasing order, by bisection.
    pub fn lowest_eigenvalues(&self, k: usize) -> Result<Vec<f64>> {
        if k > self.len() {
            return Err(Error::InvalidParameter(format!(
                "requested {k} eigenvalues of a {}x{} matrix",
                self.len(),
                self.len()
            )));
        }
        let (glo, ghi) = self.gershgorin();
        let span = (ghi - glo).abs().max(f64::MIN_POSITIVE);
        let mut out = Vec::with_capacity(k);
        let mut lower = glo - 1e-12 * span;
        for idx in 0..k {
            // eigenvalue idx is the smallest x with count_below(x) > idx
            let mut a = lower;
            let mut b = ghi + 1e-12 * span;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if self.count_below(mid) > idx {
                    b = mid;
                } else {
                    a = mid;
                }
                if b - a <= 2.0 * f64::EPSILON * a.abs().max(b.abs()) {
                    break;
                }
            }
            let val = 0.5 * (a + b);
            out.push(val);
            lower = a;
        }
        Ok(out)
    }

    /// Unit eigenvector for an (accurately known) eigenvalue, by inverse iteration.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.len();
        let scale = self
            .diag
            .iter()
            .chain(self.off.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        // perturb the shift slightly so the factorization stays finite
        let shift = lambda + 4.0 * f64::EPSILON * scale;
        // deterministic, non-degenerate start vector
        let mut y: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_75).fract())
            .collect();
        normalize(&mut y);
        for _ in 0..3 {
            let mut z = self.solve_shifted(shift, &y);
            normalize(&mut z);
            y = z;
        }
        y
    }

    /// Solves `(T - shift I) z = rhs` by Gaussian elimination with partial pivoting.
    fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.len();
        let tiny = f64::EPSILON * f64::MIN_POSITIVE.sqrt();
        // rows hold (sub, diag, sup1, sup2) after pivoting
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - shift).collect();
        let mut u1: Vec<f64> = self.off.clone();
        u1.push(0.0);
        let mut u2 = vec![0.0; n];
        let mut l: Vec<f64> = self.off.clone();
        let mut b = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            if l[i].abs() > d[i].abs() {
                // swap rows i and i+1
                let (di, u1i, u2i, bi) = (d[i], u1[i], u2[i], b[i]);
                d[i] = l[i];
                u1[i] = d[i + 1];
                u2[i] = u1[i + 1];
                b[i] = b[i + 1];
                let f = di / d[i];
                d[i + 1] = u1i - f * u1[i];
                u1[i + 1] = u2i - f * u2[i];
                b[i + 1] = bi - f * b[i];
            } else {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let f = l[i] / d[i];
                d[i + 1] -= f * u1[i];
                u1[i + 1] -= f * u2[i];
                b[i + 1] -= f * b[i];
            }
            l[i] = 0.0;
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        let mut z = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= u1[i] * z[i + 1];
            }
            if i + 2 < n {
                s -= u2[i] * z[i + 2];
            }
            z[i] = s / d[i];
        }
        z
    }

    /// `T v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes increasing.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root
        let theta = std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
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

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| v * half).collect(),
    )
}

/// Composite Gauss–Legendre rule on `[a, b]` with panels no longer than `max_panel`.
pub fn composite_gauss(a: f64, b: f64, max_panel: f64, points: usize) -> (Vec<f64>, Vec<f64>) {
    let len = b - a;
    if len <= 0.0 {
        return (Vec::new(), Vec::new());
    }
    let panels = ((len / max_panel).ceil() as usize).max(1);
    let (x, w) = gauss_legendre(points);
    let h = len / panels as f64;
    let mut nodes = Vec::with_capacity(panels * points);
    let mut weights = Vec::with_capacity(panels * points);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (t, wt) in x.iter().zip(w.iter()) {
            nodes.push(lo + 0.5 * h * (t + 1.0));
            weights.push(0.5 * h * wt);
        }
    }
    (nodes, weights)
}

/// Ordinary least-squares line `y = slope x + intercept`; returns `(slope, intercept, r^2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (slope * a + intercept);
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn sample(n: usize) -> SymTridiagonal {
        let diag = (0..n).map(|i| 2.0 + (i as f64 * 0.37).sin()).collect();
        let off = (0..n - 1).map(|i| -1.0 + 0.3 * (i as f64 * 1.3).cos()).collect();
        SymTridiagonal::new(diag, off).unwrap()
    }

    #[test]
    fn bisection_matches_dense_solver() {
        let t = sample(40);
        let mut dense = DMatrix::zeros(40, 40);
        for i in 0..40 {
            dense[(i, i)] = t.diag[i];
            if i + 1 < 40 {
                dense[(i, i + 1)] = t.off[i];
                dense[(i + 1, i)] = t.off[i];
            }
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(dense).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ours = t.lowest_eigenvalues(10).unwrap();
        for (a, b) in ours.iter().zip(ev.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn inverse_iteration_residual() {
        let t = sample(200);
        let ev = t.lowest_eigenvalues(5).unwrap();
        let mut prev: Vec<Vec<f64>> = Vec::new();
        for &lam in &ev {
            let v = t.eigenvector(lam);
            let tv = t.apply(&v);
            let res: f64 = tv
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - lam * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-10, "residual {res}");
            for p in &prev {
                let dot: f64 = p.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-8);
            }
            prev.push(v);
        }
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in [1usize, 2, 5, 12, 40] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(t, wt)| wt * t.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn composite_rule_integrates_oscillation() {
        let (x, w) = composite_gauss(0.0, 5.0, 0.1, 8);
        let q: f64 = x.iter().zip(&w).map(|(t, wt)| wt * (7.0 * t).cos().powi(2)).sum();
        let exact = 2.5 + (70.0f64).sin() / 28.0;
        assert!((q - exact).abs() < 1e-13);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let (s, i, r2) = linear_fit(&x, &y);
        assert!((s - 2.0).abs() < 1e-14 && (i + 1.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }
}
