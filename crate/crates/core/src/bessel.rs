//! Bessel functions of the first kind, their zeros, and the closed-form
//! eigen-system of `-x^alpha d^2/dx^2` on `(0, 1)` with Dirichlet ends.
//!
//! Evaluation strategy:
//! * `x <= 40` (or `nu >= x`): the power series, summed in double-double so
//!   the alternating cancellation does not eat the result;
//! * otherwise: Hankel's large-argument expansion at the fractional orders
//!   `nu - floor(nu)` and `nu - floor(nu) + 1`, followed by forward
//!   recurrence in the order, which is stable while the order stays below `x`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::params::{Convention, GasGiantParams};

/// Largest argument accepted by [`bessel_j`].
pub const MAX_ARGUMENT: f64 = 1.0e5;
/// Below this argument the double-double series is always used.
pub const SERIES_LIMIT: f64 = 40.0;
/// Residual accepted for a stored zero.
pub const TOL_ZERO: f64 = 1e-13;
const NEWTON_MAX: usize = 50;
const SCAN_STEP: f64 = 0.5;

fn check_domain(nu: f64, x: f64) -> Result<()> {
    if !(nu.is_finite() && nu >= 0.0) {
        return Err(Error::Domain(format!("order must be finite and >= 0, got {nu}")));
    }
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::Domain(format!("argument must be finite and >= 0, got {x}")));
    }
    if x > MAX_ARGUMENT {
        return Err(Error::Domain(format!(
            "argument {x} exceeds the overflow guard {MAX_ARGUMENT}"
        )));
    }
    Ok(())
}

/// `J_nu(x)` for real `nu >= 0`, `x >= 0`.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    check_domain(nu, x)?;
    Ok(bessel_j_unchecked(nu, x))
}

pub(crate) fn bessel_j_unchecked(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_LIMIT || nu >= x {
        series(nu, x)
    } else {
        large_argument(nu, x)
    }
}

/// `(x/2)^nu / Gamma(nu + 1)`.
fn series_prefactor(nu: f64, x: f64) -> f64 {
    if nu < 100.0 {
        (0.5 * x).powf(nu) / gamma(nu + 1.0)
    } else {
        (nu * (0.5 * x).ln() - ln_gamma(nu + 1.0)).exp()
    }
}

/// Ascending series, summed in double-double.
pub(crate) fn series(nu: f64, x: f64) -> f64 {
    let xx = Dd::from_f64(x) * Dd::from_f64(x);
    let q = -(xx * Dd::from_f64(0.25));
    let dnu = Dd::from_f64(nu);
    let mut term = Dd::from_f64(1.0);
    let mut sum = term;
    let half = 0.5 * x;
    for k in 1..2000usize {
        let kf = Dd::from_f64(k as f64);
        term = term * q / (kf * (dnu + kf));
        sum = sum + term;
        if (k as f64) > half && term.hi.abs() <= 1e-33 * sum.hi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    series_prefactor(nu, x) * sum.to_f64()
}

/// Hankel asymptotic expansion; accurate for `x` large compared to `nu^2`.
pub(crate) fn hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0f64;
    for k in 1..200usize {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() > term.abs() && k > 2 {
            break;
        }
        term = next;
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let phase = (0.5 * nu + 0.25) * PI;
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = phase.sin_cos();
    let cos_chi = cx * cp + sx * sp;
    let sin_chi = sx * cp - cx * sp;
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

pub(crate) fn large_argument(nu: f64, x: f64) -> f64 {
    let base = nu.fract();
    let steps = (nu - base).round() as usize;
    let j0 = hankel(base, x);
    if steps == 0 {
        return j0;
    }
    let mut prev = j0;
    let mut cur = hankel(base + 1.0, x);
    for i in 1..steps {
        let order = base + i as f64;
        let next = 2.0 * order / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `J'_nu(x)` through `x J'_nu = nu J_nu - x J_{nu+1}`.
pub fn bessel_j_prime(nu: f64, x: f64) -> Result<f64> {
    check_domain(nu, x)?;
    if x == 0.0 {
        return if nu == 0.0 || nu > 1.0 {
            Ok(0.0)
        } else if nu == 1.0 {
            Ok(0.5)
        } else {
            Err(Error::Domain(format!(
                "J'_nu(0) is unbounded for 0 < nu < 1 (nu = {nu})"
            )))
        };
    }
    Ok(nu / x * bessel_j_unchecked(nu, x) - bessel_j_unchecked(nu + 1.0, x))
}

/// McMahon's large-zero expansion, used as a Newton starting point.
pub fn mcmahon_guess(nu: f64, k: usize) -> f64 {
    let b = (k as f64 + 0.5 * nu - 0.25) * PI;
    let mu = 4.0 * nu * nu;
    let eb = 8.0 * b;
    b - (mu - 1.0) / eb - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * eb.powi(3))
}

/// The first `count` positive zeros of `J_nu`, increasing.
///
/// Zeros are bracketed by a sign-change scan (consecutive zeros are more
/// than two units apart for `nu >= 0`), then polished by Newton's method,
/// falling back to bisection whenever a step leaves the bracket.
pub fn bessel_zeros(nu: f64, count: usize) -> Result<Vec<f64>> {
    check_domain(nu, 0.0)?;
    if count == 0 {
        return Err(Error::InvalidParameter("need at least one zero".into()));
    }
    let mut zeros = Vec::with_capacity(count);
    // j_{nu,1} > max(nu, 2.4) for nu >= 0, so J_nu > 0 on (0, start]
    let mut a = nu.max(1.0);
    let mut fa = bessel_j_unchecked(nu, a);
    while zeros.len() < count {
        let b = a + SCAN_STEP;
        if b > MAX_ARGUMENT {
            return Err(Error::ZeroFinding(format!(
                "no sign change found below {MAX_ARGUMENT} for zero {} of J_{nu}",
                zeros.len() + 1
            )));
        }
        let fb = bessel_j_unchecked(nu, b);
        if fb == 0.0 {
            zeros.push(b);
            a = b + 1e-9 * b;
            fa = bessel_j_unchecked(nu, a);
            continue;
        }
        if fa.signum() != fb.signum() {
            let k = zeros.len() + 1;
            zeros.push(refine_zero(nu, a, b, fa, mcmahon_guess(nu, k))?);
        }
        a = b;
        fa = fb;
    }
    Ok(zeros)
}

fn refine_zero(nu: f64, mut a: f64, mut b: f64, mut fa: f64, guess: f64) -> Result<f64> {
    let mut x = if guess > a && guess < b { guess } else { 0.5 * (a + b) };
    let mut newton_steps = 0;
    for _ in 0..(NEWTON_MAX + 200) {
        let f = bessel_j_unchecked(nu, x);
        if f == 0.0 {
            return Ok(x);
        }
        if f.signum() == fa.signum() {
            a = x;
            fa = f;
        } else {
            b = x;
        }
        let d = nu / x * f - bessel_j_unchecked(nu + 1.0, x);
        let step = f / d;
        let candidate = x - step;
        if f.abs() <= TOL_ZERO && step.abs() <= 4.0 * f64::EPSILON * x {
            return Ok(x);
        }
        if b - a <= 4.0 * f64::EPSILON * x {
            break;
        }
        x = if newton_steps < NEWTON_MAX && candidate > a && candidate < b && d.is_finite() {
            newton_steps += 1;
            candidate
        } else {
            0.5 * (a + b)
        };
    }
    let r = bessel_j_unchecked(nu, x);
    if r.abs() <= TOL_ZERO {
        Ok(x)
    } else {
        Err(Error::ZeroFinding(format!(
            "zero of J_{nu} in [{a}, {b}] stalled with residual {r:e}"
        )))
    }
}

/// Closed-form eigen-system of `-x^alpha d^2/dx^2` on `(0, 1)`.
#[derive(Debug, Clone, Serialize)]
pub struct BesselEigenSystem {
    pub params: GasGiantParams,
    pub zeros: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub frequencies: Vec<f64>,
    /// `L^2_alpha` norm of `y_k = x^{1/2} J_nu(j_k x^kappa)`.
    pub norm_constants: Vec<f64>,
    /// `j_k^nu / |J'_nu(j_k)|`; the Neumann trace of `Phi_k` is this times
    /// [`trace_constant`](Self::trace_constant).
    pub trace_amplitudes: Vec<f64>,
    derivative_at_zero: Vec<f64>,
}

pub fn build_eigensystem_1d(params: &GasGiantParams, count: usize) -> Result<BesselEigenSystem> {
    params.require(Convention::OneDimensional)?;
    let nu = params.nu;
    let kappa = params.kappa;
    let zeros = bessel_zeros(nu, count)?;
    let derivative_at_zero: Vec<f64> = zeros
        .iter()
        .map(|&j| -bessel_j_unchecked(nu + 1.0, j))
        .collect();
    let eigenvalues = zeros.iter().map(|j| (kappa * j).powi(2)).collect();
    let frequencies = zeros.iter().map(|j| kappa * j).collect();
    let norm_constants = derivative_at_zero
        .iter()
        .map(|d| d.abs() / (2.0 * kappa).sqrt())
        .collect();
    let trace_amplitudes = zeros
        .iter()
        .zip(&derivative_at_zero)
        .map(|(j, d)| j.powf(nu) / d.abs())
        .collect();
    Ok(BesselEigenSystem {
        params: *params,
        zeros,
        eigenvalues,
        frequencies,
        norm_constants,
        trace_amplitudes,
        derivative_at_zero,
    })
}

impl BesselEigenSystem {
    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    fn scale(&self, k: usize) -> f64 {
        (2.0 * self.params.kappa).sqrt() / self.derivative_at_zero[k].abs()
    }

    /// Normalized eigenfunction `Phi_k(x)` (`k` zero-based).
    pub fn eigenfunction(&self, k: usize, x: f64) -> f64 {
        let j = self.zeros[k];
        self.scale(k) * x.sqrt() * bessel_j_unchecked(self.params.nu, j * x.powf(self.params.kappa))
    }

    /// `Phi_k'(x)` for `x > 0`.
    pub fn eigenfunction_derivative(&self, k: usize, x: f64) -> f64 {
        let nu = self.params.nu;
        let kappa = self.params.kappa;
        let j = self.zeros[k];
        let z = j * x.powf(kappa);
        self.scale(k)
            * (bessel_j_unchecked(nu, z) / x.sqrt()
                - j * kappa * x.powf(kappa - 0.5) * bessel_j_unchecked(nu + 1.0, z))
    }

    /// The `k`-independent constant `sqrt(2 kappa) / (2^nu Gamma(nu + 1))`.
    pub fn trace_constant(&self) -> f64 {
        let nu = self.params.nu;
        (2.0 * self.params.kappa).sqrt() / (2f64.powf(nu) * gamma(nu + 1.0))
    }

    /// Closed-form `Phi_k'(0+)`.
    pub fn trace_limit(&self, k: usize) -> f64 {
        self.trace_constant() * self.trace_amplitudes[k]
    }

    /// `Phi_k'(0+)` estimated from `Phi_k'(2^-m)`, `m = 8..=16`, by Richardson
    /// extrapolation in powers of `x^{2 kappa}`.
    pub fn extrapolated_trace(&self, k: usize) -> f64 {
        let samples: Vec<f64> = (8..=16)
            .map(|m| self.eigenfunction_derivative(k, 2f64.powi(-m)))
            .collect();
        richardson(&samples, 2f64.powf(2.0 * self.params.kappa), 8)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,j_nuk,lambda_k,mu_k,norm_const,trace_amp\n");
        for k in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                k + 1,
                self.zeros[k],
                self.eigenvalues[k],
                self.frequencies[k],
                self.norm_constants[k],
                self.trace_amplitudes[k]
            );
        }
        out
    }
}

/// Richardson tableau for samples taken at a geometric sequence of step
/// sizes whose error expansion is in powers of `ratio^-1` per refinement.
pub(crate) fn richardson(samples: &[f64], ratio: f64, max_order: usize) -> f64 {
    let n = samples.len();
    let mut table = samples.to_vec();
    let order = max_order.min(n.saturating_sub(1));
    for j in 1..=order {
        let f = ratio.powi(j as i32);
        for i in (j..n).rev() {
            table[i] = (f * table[i] - table[i - 1]) / (f - 1.0);
        }
    }
    table[n - 1]
}
