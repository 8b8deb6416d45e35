//! Mode-by-mode synthesis of separable waves: trace signals, anisotropic
//! energies, exponential Gram (Ingham) bounds, observability ratios and
//! minimum-norm (HUM) controls.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::bessel::build_eigensystem_1d;
use crate::error::{Error, Result};
use crate::linalg::composite_gauss;
use crate::modal::{solve_modal, BoundaryCondition, ModalEigenSystem};
use crate::params::GasGiantParams;
use crate::tangential::{Point, TangentialBasis};

/// Condition number of the exponential Gram beyond which a control problem
/// is reported ill-posed.
pub const MAX_CONDITION: f64 = 1e12;
/// Gauss points per time panel.
const TIME_POINTS: usize = 6;

/// Normal profiles of one tangential mode, as coefficients against the
/// modal eigenfunctions `phi_{n, omega}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeData {
    pub tangential_index: usize,
    pub omega: f64,
    pub f0: Vec<f64>,
    pub f1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialData {
    pub bandwidth: f64,
    pub truncation: usize,
    pub modes: Vec<ModeData>,
}

impl InitialData {
    pub fn new(bandwidth: f64, truncation: usize, modes: Vec<ModeData>) -> Result<Self> {
        for m in &modes {
            if m.f0.len() != m.f1.len() || m.f0.len() > truncation {
                return Err(Error::InvalidParameter(format!(
                    "mode {}: profiles of length {} and {} exceed truncation {truncation} or differ",
                    m.tangential_index,
                    m.f0.len(),
                    m.f1.len()
                )));
            }
            if m.omega > bandwidth {
                return Err(Error::InvalidParameter(format!(
                    "mode {} has omega {} above the bandwidth {bandwidth}",
                    m.tangential_index, m.omega
                )));
            }
            if m.f0.iter().chain(&m.f1).any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite coefficient".into()));
            }
        }
        Ok(Self {
            bandwidth,
            truncation,
            modes,
        })
    }

    /// Single tangential mode with `f0 = e_n`, `f1 = 0`.
    pub fn single(tangential_index: usize, omega: f64, n: usize, truncation: usize) -> Result<Self> {
        let mut f0 = vec![0.0; truncation];
        f0[n] = 1.0;
        Self::new(
            omega,
            truncation,
            vec![ModeData {
                tangential_index,
                omega,
                f0,
                f1: vec![0.0; truncation],
            }],
        )
    }

    /// Standard Gaussian coefficients on every listed `(index, omega)` mode.
    pub fn random<R: Rng>(modes: &[(usize, f64)], truncation: usize, rng: &mut R) -> Result<Self> {
        let bandwidth = modes.iter().map(|m| m.1).fold(0.0, f64::max);
        let draw = |rng: &mut R| -> Vec<f64> {
            (0..truncation).map(|_| rng.sample(StandardNormal)).collect()
        };
        let data = modes
            .iter()
            .map(|&(tangential_index, omega)| {
                let f0 = draw(rng);
                let f1 = draw(rng);
                ModeData {
                    tangential_index,
                    omega,
                    f0,
                    f1,
                }
            })
            .collect();
        Self::new(bandwidth, truncation, data)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for m in &mut out.modes {
            m.f0.iter_mut().chain(m.f1.iter_mut()).for_each(|v| *v *= s);
        }
        out
    }

    /// Data of the solution at time `tau`.
    pub fn propagated(&self, family: &ModalFamily, tau: f64) -> Result<Self> {
        let mut out = self.clone();
        for m in &mut out.modes {
            let sys = family.get(m.omega)?;
            for n in 0..m.f0.len() {
                let mu = sys.frequencies[n];
                let (s, c) = (mu * tau).sin_cos();
                let (a, b) = (m.f0[n], m.f1[n]);
                m.f0[n] = a * c + b / mu * s;
                m.f1[n] = -a * mu * s + b * c;
            }
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.modes
            .iter()
            .all(|m| m.f0.iter().chain(&m.f1).all(|v| *v == 0.0))
    }
}

/// Friedrichs eigen-systems for a set of tangential eigenvalues.
#[derive(Debug, Clone)]
pub struct ModalFamily {
    pub params: GasGiantParams,
    pub systems: Vec<ModalEigenSystem>,
}

impl ModalFamily {
    pub fn build(
        params: &GasGiantParams,
        omegas: &[f64],
        bc: BoundaryCondition,
        n_eigs: usize,
        grid_size: usize,
    ) -> Result<Self> {
        let mut unique: Vec<f64> = omegas.to_vec();
        unique.sort_by(f64::total_cmp);
        unique.dedup();
        let systems = unique
            .par_iter()
            .map(|&w| solve_modal(params, w, bc, n_eigs, grid_size))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params: *params,
            systems,
        })
    }

    /// Family covering every mode of `data` with the default grid.
    pub fn for_data(params: &GasGiantParams, data: &InitialData) -> Result<Self> {
        let omegas: Vec<f64> = data.modes.iter().map(|m| m.omega).collect();
        let grid = (50 * data.truncation).max(400);
        Self::build(params, &omegas, BoundaryCondition::Dirichlet, data.truncation, grid)
    }

    pub fn get(&self, omega: f64) -> Result<&ModalEigenSystem> {
        self.systems
            .iter()
            .find(|s| s.omega == omega)
            .ok_or_else(|| Error::Missing(format!("no modal system for omega = {omega}")))
    }
}

/// `a_{n,k} = (f0 - i f1 / mu_n) / 2`, the coefficient of `e^{+i mu_n t}`.
pub fn spectral_coefficients(data: &InitialData, family: &ModalFamily) -> Result<Vec<Vec<Complex64>>> {
    data.modes
        .iter()
        .map(|m| {
            let sys = family.get(m.omega)?;
            if sys.len() < m.f0.len() {
                return Err(Error::Missing(format!(
                    "modal system at omega = {} has {} modes, data needs {}",
                    m.omega,
                    sys.len(),
                    m.f0.len()
                )));
            }
            (0..m.f0.len())
                .map(|n| {
                    let mu = sys.frequencies[n];
                    if !(mu > 0.0) {
                        return Err(Error::Domain(format!("nonpositive frequency {mu}")));
                    }
                    Ok(Complex64::new(0.5 * m.f0[n], -0.5 * m.f1[n] / mu))
                })
                .collect()
        })
        .collect()
}

/// Per-mode exponential sums `y_k(t) = sum_q c_q e^{i w_q t}` of the
/// renormalized trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceSignal {
    pub tangential_indices: Vec<usize>,
    /// `(coefficient, frequency)` pairs; `+mu` and `-mu` entries are conjugate.
    pub terms: Vec<Vec<(Complex64, f64)>>,
}

impl TraceSignal {
    pub fn new(data: &InitialData, family: &ModalFamily) -> Result<Self> {
        let a = spectral_coefficients(data, family)?;
        let mut terms = Vec::with_capacity(a.len());
        for (m, ak) in data.modes.iter().zip(&a) {
            let sys = family.get(m.omega)?;
            let mut t = Vec::with_capacity(2 * ak.len());
            for (n, an) in ak.iter().enumerate() {
                let c = an * sys.trace_coeffs[n];
                t.push((c, sys.frequencies[n]));
                t.push((c.conj(), -sys.frequencies[n]));
            }
            terms.push(t);
        }
        Ok(Self {
            tangential_indices: data.modes.iter().map(|m| m.tangential_index).collect(),
            terms,
        })
    }

    /// `y_k(t)` for every populated mode.
    pub fn values(&self, t: f64) -> Vec<f64> {
        self.terms
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|(c, w)| (c * Complex64::from_polar(1.0, w * t)).re)
                    .sum()
            })
            .collect()
    }

    /// Imaginary part of the synthesized sum, zero up to rounding.
    pub fn imaginary_residual(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|(c, w)| (c * Complex64::from_polar(1.0, w * t)).im)
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    /// Full trace `sum_k y_k(t) psi_k(p)` at a boundary point.
    pub fn sample(&self, basis: &TangentialBasis, t: f64, p: &Point) -> Result<f64> {
        let psi = basis.evaluate(p)?;
        Ok(self
            .values(t)
            .iter()
            .zip(&self.tangential_indices)
            .map(|(y, &k)| y * psi[k])
            .sum())
    }

    pub fn max_frequency(&self) -> f64 {
        self.terms
            .iter()
            .flatten()
            .map(|(_, w)| w.abs())
            .fold(0.0, f64::max)
    }
}

/// Restriction of a tangential Gram to the modes populated by `data`.
pub fn restrict_gram(full: &DMatrix<f64>, data: &InitialData) -> DMatrix<f64> {
    let idx: Vec<usize> = data.modes.iter().map(|m| m.tangential_index).collect();
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| full[(idx[i], idx[j])])
}

/// `int_region |trace(t, .)|^2` at each time; `None` observes all of `M`.
pub fn evaluate_trace(
    data: &InitialData,
    family: &ModalFamily,
    times: &[f64],
    gram: Option<&DMatrix<f64>>,
) -> Result<Vec<f64>> {
    let signal = TraceSignal::new(data, family)?;
    observe(&signal, times, gram)
}

fn observe(signal: &TraceSignal, times: &[f64], gram: Option<&DMatrix<f64>>) -> Result<Vec<f64>> {
    if let Some(g) = gram {
        if g.nrows() != signal.terms.len() || g.ncols() != signal.terms.len() {
            return Err(Error::InvalidParameter(format!(
                "Gram is {}x{}, data has {} modes",
                g.nrows(),
                g.ncols(),
                signal.terms.len()
            )));
        }
    }
    Ok(times
        .iter()
        .map(|&t| {
            let y = signal.values(t);
            match gram {
                None => y.iter().map(|v| v * v).sum(),
                Some(g) => {
                    let yv = DVector::from_vec(y);
                    yv.dot(&(g * &yv))
                }
            }
        })
        .collect())
}

/// Composite Gauss rule on `[a, b]` resolving frequencies up to `max_freq`.
pub fn time_rule(a: f64, b: f64, max_freq: f64) -> (Vec<f64>, Vec<f64>) {
    let period = if max_freq > 0.0 { 2.0 * PI / max_freq } else { b - a };
    composite_gauss(a, b, period / 8.0, TIME_POINTS)
}

/// `int_a^b int_region |trace|^2 dt`.
pub fn observed_integral(
    signal: &TraceSignal,
    a: f64,
    b: f64,
    gram: Option<&DMatrix<f64>>,
) -> Result<f64> {
    let (t, w) = time_rule(a, b, signal.max_frequency());
    let vals = observe(signal, &t, gram)?;
    Ok(vals.iter().zip(&w).map(|(v, w)| v * w).sum())
}

#[derive(Debug, Clone, Serialize)]
pub struct AnisotropicEnergy {
    pub total: f64,
    pub per_mode: Vec<f64>,
}

/// `e_k = sum_n lambda^{nu+1/2} f0^2 + lambda^{nu-1/2} f1^2 + omega lambda^{nu-1/2} f0^2`.
pub fn anisotropic_energy(data: &InitialData, family: &ModalFamily) -> Result<AnisotropicEnergy> {
    let nu = family.params.nu;
    let per_mode = data
        .modes
        .iter()
        .map(|m| {
            let sys = family.get(m.omega)?;
            Ok((0..m.f0.len())
                .map(|n| {
                    let lam = sys.eigenvalues[n];
                    let low = lam.powf(nu - 0.5);
                    low * ((lam + m.omega) * m.f0[n] * m.f0[n] + m.f1[n] * m.f1[n])
                })
                .sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(AnisotropicEnergy {
        total: per_mode.iter().sum(),
        per_mode,
    })
}

/// Per-mode energy from the exponential coefficients:
/// `4 lambda^{nu-1/2} ((lambda + omega) Re(a)^2 + lambda Im(a)^2)`.
pub fn energy_from_coefficients(a: &[Complex64], eigenvalues: &[f64], omega: f64, nu: f64) -> f64 {
    a.iter()
        .zip(eigenvalues)
        .map(|(a, &lam)| 4.0 * lam.powf(nu - 0.5) * ((lam + omega) * a.re * a.re + lam * a.im * a.im))
        .sum()
}

/// Energy conserved by the modal flow, `sum lambda^{nu-1/2} (lambda f0^2 + f1^2)`.
pub fn conserved_energy(data: &InitialData, family: &ModalFamily) -> Result<f64> {
    let nu = family.params.nu;
    let mut total = 0.0;
    for m in &data.modes {
        let sys = family.get(m.omega)?;
        for n in 0..m.f0.len() {
            let lam = sys.eigenvalues[n];
            total += lam.powf(nu - 0.5) * (lam * m.f0[n] * m.f0[n] + m.f1[n] * m.f1[n]);
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameBounds {
    pub t: f64,
    pub count: usize,
    pub c_lower: f64,
    pub c_upper: f64,
    pub frequencies: Vec<f64>,
}

/// `G_{mn} = int_0^T e^{i (w_n - w_m) t} dt`, so that
/// `int_0^T |sum_n c_n e^{i w_n t}|^2 dt = c^H G c`.
pub fn exponential_gram(frequencies: &[f64], t: f64) -> DMatrix<Complex64> {
    let n = frequencies.len();
    DMatrix::from_fn(n, n, |m, k| {
        if m == k {
            return Complex64::new(t, 0.0);
        }
        let half = 0.5 * (frequencies[k] - frequencies[m]) * t;
        let sinc = if half.abs() < 1e-8 {
            1.0 - half * half / 6.0
        } else {
            half.sin() / half
        };
        Complex64::from_polar(t * sinc, half)
    })
}

fn check_frequencies(frequencies: &[f64], t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("T must be > 0, got {t}")));
    }
    if frequencies.is_empty() {
        return Err(Error::InvalidParameter("empty frequency list".into()));
    }
    let mut sorted = frequencies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let scale = sorted.iter().fold(1.0f64, |m, w| m.max(w.abs()));
    if sorted.windows(2).any(|w| (w[1] - w[0]).abs() <= 1e-12 * scale) {
        return Err(Error::InvalidParameter(
            "duplicate frequencies make the Gram singular".into(),
        ));
    }
    Ok(())
}

fn hermitian_extremes(g: &DMatrix<Complex64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(g.clone());
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Extreme eigenvalues of the exponential Gram.
pub fn ingham_frame_bounds(frequencies: &[f64], t: f64) -> Result<FrameBounds> {
    check_frequencies(frequencies, t)?;
    let (lo, hi) = hermitian_extremes(&exponential_gram(frequencies, t));
    Ok(FrameBounds {
        t,
        count: frequencies.len(),
        c_lower: lo.max(0.0),
        c_upper: hi,
        frequencies: frequencies.to_vec(),
    })
}

/// `+-mu_n`, `n < count`.
pub fn symmetric_frequencies(mu: &[f64]) -> Vec<f64> {
    mu.iter().flat_map(|&m| [m, -m]).collect()
}

/// `+-kappa j_{nu,k}` of the one-dimensional model sharing `kappa` with
/// `params`; their Beurling density gives the threshold `2 / kappa`.
pub fn one_dimensional_frequencies(params: &GasGiantParams, count: usize) -> Result<Vec<f64>> {
    let model = params.one_dimensional_model()?;
    let sys = build_eigensystem_1d(&model, count)?;
    Ok(symmetric_frequencies(&sys.frequencies))
}

/// Frame bounds of the modal frequencies `+-mu_n(omega)` of every populated
/// mode; returns `(min c_T, max C_T)`.
pub fn family_frame_bounds(data: &InitialData, family: &ModalFamily, t: f64) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for m in &data.modes {
        let sys = family.get(m.omega)?;
        let f = symmetric_frequencies(&sys.frequencies[..m.f0.len()]);
        let b = ingham_frame_bounds(&f, t)?;
        lo = lo.min(b.c_lower);
        hi = hi.max(b.c_upper);
    }
    Ok((lo, hi))
}

/// Range of `2 T_n^2 |a_n|^2 / e_n` over populated `(n, k)`:
/// `[T_n^2 / (2 lambda^{nu-1/2} (lambda + omega)), T_n^2 / (2 lambda^{nu+1/2})]`.
pub fn trace_weight_bounds(data: &InitialData, family: &ModalFamily) -> Result<(f64, f64)> {
    let nu = family.params.nu;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for m in &data.modes {
        let sys = family.get(m.omega)?;
        for n in 0..m.f0.len() {
            let (lw, hw) = mode_weight_range(sys, n, nu);
            lo = lo.min(lw);
            hi = hi.max(hw);
        }
    }
    Ok((lo, hi))
}

fn mode_weight_range(sys: &ModalEigenSystem, n: usize, nu: f64) -> (f64, f64) {
    let lam = sys.eigenvalues[n];
    let t2 = sys.trace_coeffs[n].powi(2);
    (
        t2 / (2.0 * lam.powf(nu - 0.5) * (lam + sys.omega)),
        t2 / (2.0 * lam.powf(nu + 0.5)),
    )
}

/// Envelope of the per-mode trace weights of one modal system over its first `count` modes.
pub fn system_weight_interval(sys: &ModalEigenSystem, count: usize) -> (f64, f64) {
    let nu = sys.params.nu;
    (0..count).fold((f64::INFINITY, 0.0f64), |(lo, hi), n| {
        let (a, b) = mode_weight_range(sys, n, nu);
        (lo.min(a), hi.max(b))
    })
}

/// `int_0^T int_region |trace|^2 dt / E_nu`.
pub fn observability_ratio(
    data: &InitialData,
    family: &ModalFamily,
    t: f64,
    gram: Option<&DMatrix<f64>>,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("T must be > 0, got {t}")));
    }
    let energy = anisotropic_energy(data, family)?.total;
    if !(energy > 0.0) {
        return Err(Error::InvalidParameter("zero-energy data".into()));
    }
    let signal = TraceSignal::new(data, family)?;
    Ok(observed_integral(&signal, 0.0, t, gram)? / energy)
}

/// Minimum-norm control of one tangential mode, `g(t) = sum_q x_q e^{i w_q t}`.
#[derive(Debug, Clone, Serialize)]
pub struct ModeControl {
    pub tangential_index: usize,
    pub omega: f64,
    pub frequencies: Vec<f64>,
    pub coefficients: Vec<Complex64>,
    pub norm_squared: f64,
    pub residual: f64,
    pub condition: f64,
}

impl ModeControl {
    pub fn value(&self, t: f64) -> f64 {
        self.coefficients
            .iter()
            .zip(&self.frequencies)
            .map(|(x, w)| (x * Complex64::from_polar(1.0, w * t)).re)
            .sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ControlResult {
    pub t: f64,
    pub modes: Vec<ModeControl>,
    pub norm: f64,
    pub residual: f64,
}

/// Moments `int_0^T g e^{-i w s} ds` steering the modal system
/// `c'' + lambda c = T_n g` from rest to `(f0, f1)` at time `T`.
fn control_moments(sys: &ModalEigenSystem, f0: &[f64], f1: &[f64], t: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(2 * f0.len());
    for n in 0..f0.len() {
        let mu = sys.frequencies[n];
        let m = Complex64::from_polar(1.0, -mu * t) * Complex64::new(f1[n], mu * f0[n])
            / sys.trace_coeffs[n];
        out.push(m);
        out.push(m.conj());
    }
    out
}

fn steering_residual(control: &ModeControl, sys: &ModalEigenSystem, f0: &[f64], f1: &[f64], t: f64) -> f64 {
    let max_freq = control.frequencies.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let (s, w) = time_rule(0.0, t, max_freq);
    let g: Vec<f64> = s.iter().map(|&s| control.value(s)).collect();
    let mut err = 0.0;
    let mut size = 0.0;
    for n in 0..f0.len() {
        let mu = sys.frequencies[n];
        let tn = sys.trace_coeffs[n];
        let mut c = 0.0;
        let mut dc = 0.0;
        for ((si, wi), gi) in s.iter().zip(&w).zip(&g) {
            let (sn, cs) = (mu * (t - si)).sin_cos();
            c += wi * sn / mu * tn * gi;
            dc += wi * cs * tn * gi;
        }
        err += (c - f0[n]).powi(2) + ((dc - f1[n]) / mu).powi(2);
        size += f0[n].powi(2) + (f1[n] / mu).powi(2);
    }
    if size > 0.0 {
        (err / size).sqrt()
    } else {
        err.sqrt()
    }
}

/// Minimum `L^2(0, T)` controls reaching `target` from rest, one per
/// tangential mode, by solving the exponential Gram system.
pub fn hum_control(target: &InitialData, family: &ModalFamily, t: f64) -> Result<ControlResult> {
    let t_star = 2.0 / family.params.kappa;
    if !(t > t_star) {
        return Err(Error::InvalidParameter(format!(
            "control time {t} must exceed T* = {t_star}"
        )));
    }
    let mut modes = Vec::with_capacity(target.modes.len());
    for m in &target.modes {
        let sys = family.get(m.omega)?;
        let count = m.f0.len();
        if sys.len() < count {
            return Err(Error::Missing(format!(
                "modal system at omega = {} is too short",
                m.omega
            )));
        }
        let freqs = symmetric_frequencies(&sys.frequencies[..count]);
        check_frequencies(&freqs, t)?;
        let gram = exponential_gram(&freqs, t);
        let (lo, hi) = hermitian_extremes(&gram);
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllPosed(format!(
                "exponential Gram at T = {t}, {count} modes has condition {condition:e}"
            )));
        }
        let moments = DVector::from_vec(control_moments(sys, &m.f0, &m.f1, t));
        let x = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::IllPosed("exponential Gram is not positive definite".into()))?
            .solve(&moments);
        let norm_squared = x.dotc(&(&gram * &x)).re.max(0.0);
        let mut control = ModeControl {
            tangential_index: m.tangential_index,
            omega: m.omega,
            frequencies: freqs,
            coefficients: x.iter().copied().collect(),
            norm_squared,
            residual: 0.0,
            condition,
        };
        control.residual = steering_residual(&control, sys, &m.f0, &m.f1, t);
        modes.push(control);
    }
    let norm = modes.iter().map(|m| m.norm_squared).sum::<f64>().sqrt();
    let residual = modes.iter().map(|m| m.residual).fold(0.0, f64::max);
    Ok(ControlResult {
        t,
        modes,
        norm,
        residual,
    })
}

/// CSV `t,value` of sampled observations.
pub fn trace_csv(times: &[f64], values: &[f64]) -> String {
    let mut out = String::from("t,value\n");
    for (t, v) in times.iter().zip(values) {
        let _ = writeln!(out, "{t:.15e},{v:.15e}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tangential::{circle_basis, Manifold};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn family(params: &GasGiantParams, omegas: &[f64], n: usize) -> ModalFamily {
        ModalFamily::build(params, omegas, BoundaryCondition::Dirichlet, n, (50 * n).max(400)).unwrap()
    }

    fn polytropic(n: u32) -> GasGiantParams {
        GasGiantParams::derive_constants(2.0, n).unwrap()
    }

    #[test]
    fn coefficients_of_pure_position_and_velocity() {
        let p = polytropic(1);
        let fam = family(&p, &[0.0], 3);
        let mut d = InitialData::new(0.0, 3, vec![ModeData {
            tangential_index: 0,
            omega: 0.0,
            f0: vec![1.0, -2.0, 0.5],
            f1: vec![0.0; 3],
        }])
        .unwrap();
        let a = spectral_coefficients(&d, &fam).unwrap();
        for (n, an) in a[0].iter().enumerate() {
            assert_eq!(an.re, 0.5 * d.modes[0].f0[n]);
            assert_eq!(an.im, 0.0);
        }
        d.modes[0].f1 = d.modes[0].f0.clone();
        d.modes[0].f0 = vec![0.0; 3];
        let a = spectral_coefficients(&d, &fam).unwrap();
        let mu = &fam.systems[0].frequencies;
        for (n, an) in a[0].iter().enumerate() {
            assert_eq!(an.re, 0.0);
            assert!((an.im + d.modes[0].f1[n] / (2.0 * mu[n])).abs() < 1e-15);
        }
    }

    #[test]
    fn energy_identity_for_random_data() {
        let p = polytropic(1);
        let omegas = [0.0, 1.0, 4.0, 9.0, 16.0];
        let fam = family(&p, &omegas, 5);
        let modes: Vec<(usize, f64)> = omegas.iter().enumerate().map(|(i, w)| (i, *w)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = InitialData::random(&modes, 5, &mut rng).unwrap();
        let e = anisotropic_energy(&d, &fam).unwrap();
        let a = spectral_coefficients(&d, &fam).unwrap();
        for (k, m) in d.modes.iter().enumerate() {
            let sys = fam.get(m.omega).unwrap();
            let from_a = energy_from_coefficients(&a[k], &sys.eigenvalues, m.omega, p.nu);
            assert!(((from_a - e.per_mode[k]) / e.per_mode[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn single_mode_energy_and_zero_data() {
        let p = polytropic(2);
        let fam = family(&p, &[6.0], 4);
        let d = InitialData::single(3, 6.0, 2, 4).unwrap();
        let e = anisotropic_energy(&d, &fam).unwrap().total;
        let lam = fam.systems[0].eigenvalues[2];
        let want = lam.powf(p.nu + 0.5) + 6.0 * lam.powf(p.nu - 0.5);
        assert!(((e - want) / want).abs() < 1e-14);
        let z = d.scaled(0.0);
        assert!(z.is_zero());
        assert_eq!(anisotropic_energy(&z, &fam).unwrap().total, 0.0);
        assert!(observability_ratio(&z, &fam, 5.0, None).is_err());
    }

    #[test]
    fn gram_closed_forms() {
        let b = ingham_frame_bounds(&[1.7], 3.0).unwrap();
        assert_eq!((b.c_lower, b.c_upper), (3.0, 3.0));
        let f = symmetric_frequencies(&[PI, 2.0 * PI, 3.0 * PI]);
        let b = ingham_frame_bounds(&f, 2.0).unwrap();
        assert!((b.c_lower - 2.0).abs() < 1e-12 && (b.c_upper - 2.0).abs() < 1e-12);
        assert!(ingham_frame_bounds(&[1.0, 1.0], 2.0).is_err());
        assert!(b.c_upper <= b.t * b.count as f64);
    }

    #[test]
    fn gram_matches_quadrature() {
        let f = [0.3, -1.1, 2.5, 4.0];
        let t = 2.7;
        let g = exponential_gram(&f, t);
        let (s, w) = composite_gauss(0.0, t, 0.1, 8);
        for m in 0..4 {
            for n in 0..4 {
                let q: Complex64 = s
                    .iter()
                    .zip(&w)
                    .map(|(s, w)| Complex64::from_polar(*w, (f[n] - f[m]) * s))
                    .sum();
                assert!((q - g[(m, n)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn trace_signal_is_real_and_parseval_holds() {
        let p = polytropic(1);
        let basis = circle_basis(2).unwrap();
        let modes: Vec<(usize, f64)> = basis.modes.iter().map(|m| (m.index, m.eigenvalue)).collect();
        let omegas: Vec<f64> = modes.iter().map(|m| m.1).collect();
        let fam = family(&p, &omegas, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = InitialData::random(&modes, 4, &mut rng).unwrap();
        let sig = TraceSignal::new(&d, &fam).unwrap();
        assert_eq!(basis.manifold, Manifold::Circle);
        for &t in &[0.0, 0.7, 3.1] {
            assert!(sig.imaginary_residual(t) < 1e-10);
            let q = &basis.quadrature;
            let integral: f64 = q
                .points
                .iter()
                .zip(&q.weights)
                .map(|(p, w)| w * sig.sample(&basis, t, p).unwrap().powi(2))
                .sum();
            let parseval: f64 = sig.values(t).iter().map(|v| v * v).sum();
            assert!(((integral - parseval) / parseval).abs() < 1e-10);
            let full = evaluate_trace(&d, &fam, &[t], None).unwrap()[0];
            assert!(((full - parseval) / parseval).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_mode_scales_with_fraction() {
        let p = polytropic(1);
        let fam = family(&p, &[0.0], 3);
        let d = InitialData::new(0.0, 3, vec![ModeData {
            tangential_index: 0,
            omega: 0.0,
            f0: vec![1.0, 0.3, -0.2],
            f1: vec![0.5, 0.0, 1.0],
        }])
        .unwrap();
        let l = 0.37;
        let g = DMatrix::from_element(1, 1, l);
        let times = [0.0, 0.4, 1.3];
        let part = evaluate_trace(&d, &fam, &times, Some(&g)).unwrap();
        let full = evaluate_trace(&d, &fam, &times, None).unwrap();
        for (a, b) in part.iter().zip(&full) {
            assert!((a - l * b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn standing_wave_period_integral() {
        let p = polytropic(1);
        let fam = family(&p, &[2.0], 2);
        let d = InitialData::single(0, 2.0, 1, 2).unwrap();
        let sig = TraceSignal::new(&d, &fam).unwrap();
        let mu = fam.systems[0].frequencies[1];
        let (c, _) = sig.terms[0][2];
        let period = 2.0 * PI / mu;
        // |c e^{i mu t} + conj|^2 integrates to 2 |c|^2 per period
        let closed = 2.0 * c.norm_sqr() * period;
        let q = observed_integral(&sig, 0.0, period, None).unwrap();
        assert!((q - closed).abs() < 1e-9 * closed);
    }

    #[test]
    fn single_pair_ratio_closed_form() {
        let p = polytropic(1);
        let fam = family(&p, &[1.0], 2);
        let d = InitialData::single(0, 1.0, 0, 2).unwrap();
        let sys = &fam.systems[0];
        let (mu, tn, lam) = (sys.frequencies[0], sys.trace_coeffs[0], sys.eigenvalues[0]);
        let t = 5.0;
        // trace = T_n cos(mu t)
        let integral = tn * tn * (0.5 * t + (2.0 * mu * t).sin() / (4.0 * mu));
        let energy = lam.powf(p.nu - 0.5) * (lam + 1.0);
        let r = observability_ratio(&d, &fam, t, None).unwrap();
        assert!(((r - integral / energy) / r).abs() < 1e-8);
        let r10 = observability_ratio(&d.scaled(10.0), &fam, t, None).unwrap();
        assert!(((r10 - r) / r).abs() < 1e-12);
    }

    #[test]
    fn frame_sandwich_per_mode() {
        let p = polytropic(1);
        let fam = family(&p, &[0.0, 4.0], 6);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let t = 4.8;
        for _ in 0..10 {
            let d = InitialData::random(&[(0, 0.0), (3, 4.0)], 6, &mut rng).unwrap();
            let sig = TraceSignal::new(&d, &fam).unwrap();
            let obs = observed_integral(&sig, 0.0, t, None).unwrap();
            let (lo, hi) = family_frame_bounds(&d, &fam, t).unwrap();
            let mass: f64 = sig.terms.iter().flatten().map(|(c, _)| c.norm_sqr()).sum();
            assert!(lo * mass <= obs * (1.0 + 1e-9));
            assert!(obs <= hi * mass * (1.0 + 1e-9));
        }
    }

    #[test]
    fn time_translation_invariance() {
        let p = polytropic(1);
        let fam = family(&p, &[0.0, 3.0], 5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = InitialData::random(&[(0, 0.0), (1, 3.0)], 5, &mut rng).unwrap();
        let tau = 0.83;
        let moved = d.propagated(&fam, tau).unwrap();
        let e0 = conserved_energy(&d, &fam).unwrap();
        let e1 = conserved_energy(&moved, &fam).unwrap();
        assert!(((e0 - e1) / e0).abs() < 1e-9);
        let s0 = TraceSignal::new(&d, &fam).unwrap();
        let s1 = TraceSignal::new(&moved, &fam).unwrap();
        let a = observed_integral(&s0, tau, tau + 4.5, None).unwrap();
        let b = observed_integral(&s1, 0.0, 4.5, None).unwrap();
        assert!(((a - b) / a).abs() < 1e-9);
        // omega-free modes keep E_nu too
        let d0 = InitialData::random(&[(0, 0.0)], 5, &mut rng).unwrap();
        let e_a = anisotropic_energy(&d0, &fam).unwrap().total;
        let e_b = anisotropic_energy(&d0.propagated(&fam, 2.1).unwrap(), &fam).unwrap().total;
        assert!(((e_a - e_b) / e_a).abs() < 1e-9);
    }

    #[test]
    fn zero_target_gives_zero_control() {
        let p = polytropic(2);
        let fam = family(&p, &[0.0], 5);
        let d = InitialData::single(0, 0.0, 0, 5).unwrap().scaled(0.0);
        let c = hum_control(&d, &fam, 5.0).unwrap();
        assert_eq!(c.norm, 0.0);
        assert!(c.modes[0].coefficients.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn single_pair_control_closed_form() {
        let p = polytropic(2);
        let fam = family(&p, &[0.0], 1);
        let d = InitialData::new(0.0, 1, vec![ModeData {
            tangential_index: 0,
            omega: 0.0,
            f0: vec![0.8],
            f1: vec![-0.3],
        }])
        .unwrap();
        let t = 5.0;
        let c = hum_control(&d, &fam, t).unwrap();
        let sys = &fam.systems[0];
        let m = control_moments(sys, &[0.8], &[-0.3], t);
        let g = exponential_gram(&c.modes[0].frequencies, t);
        // 2x2 Hermitian closed form: |m|^2 weighted by the inverse Gram
        let det = (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).re;
        let quad = (m[0].conj() * g[(1, 1)] * m[0] - m[0].conj() * g[(0, 1)] * m[1]
            - m[1].conj() * g[(1, 0)] * m[0]
            + m[1].conj() * g[(0, 0)] * m[1])
            .re
            / det;
        assert!(((c.modes[0].norm_squared - quad) / quad).abs() < 1e-10);
        assert!(c.residual < 1e-8);
    }

    #[test]
    fn hum_gram_is_observability_gram() {
        let p = polytropic(2);
        let fam = family(&p, &[2.0], 4);
        let d = InitialData::single(0, 2.0, 1, 4).unwrap();
        let c = hum_control(&d, &fam, 5.0).unwrap();
        let f = symmetric_frequencies(&fam.systems[0].frequencies[..4]);
        assert_eq!(c.modes[0].frequencies, f);
        let a = exponential_gram(&c.modes[0].frequencies, 5.0);
        let b = exponential_gram(&f, 5.0);
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    }

    #[test]
    fn control_requires_time_above_threshold() {
        let p = polytropic(2);
        let fam = family(&p, &[0.0], 2);
        let d = InitialData::single(0, 0.0, 0, 2).unwrap();
        assert!(hum_control(&d, &fam, 3.9).is_err());
    }

    #[test]
    fn one_dimensional_frequencies_have_half_pi_gap() {
        let p = polytropic(2);
        let f = one_dimensional_frequencies(&p, 60).unwrap();
        let gap = f[118] - f[116];
        assert!((gap - 0.5 * PI).abs() < 1e-3);
    }

    #[test]
    fn trace_weights_stay_within_a_decade_across_omega() {
        let p = polytropic(2);
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for omega in [0.0, 1.0, 10.0, 100.0, 1000.0] {
            let sys = solve_modal(&p, omega, BoundaryCondition::Dirichlet, 40, 2000).unwrap();
            let (a, b) = system_weight_interval(&sys, 40);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        assert!(hi / lo <= 10.0, "[{lo}, {hi}]");
    }
}
