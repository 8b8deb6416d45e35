//! Friedrichs eigenproblem for `P_w = -d^2/dx^2 + C/x^2 + w x^beta` on `(0, 1)`.
//!
//! Writing `u = x^s v` with `s = 1/2 + nu` turns the quadratic form into
//! `int x^{2s} v'^2 + w int x^{beta + 2s} v^2 (+ s v(1)^2 for Neumann)` with
//! mass `int x^{2s} v^2`. Only the regular Frobenius branch is representable
//! and `v(0)` is the Frobenius leading coefficient. The reduced form is
//! discretized with linear elements and a lumped mass, then solved as a
//! symmetric tridiagonal eigenproblem on three nested grids.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gauss_legendre, linear_fit, SymTridiagonal};
use crate::params::GasGiantParams;

/// Relative accuracy targeted by the extrapolated eigenvalues.
pub const TARGET_TOL: f64 = 1e-6;
/// Relative disagreement between the trace estimates that is flagged.
pub const TRACE_FLAG: f64 = 0.01;
const TRACE_FIT_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone)]
pub struct ModalEigenSystem {
    pub params: GasGiantParams,
    pub omega: f64,
    pub bc_at_1: BoundaryCondition,
    /// Finest grid, nodes in `(0, 1]`.
    pub grid: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub frequencies: Vec<f64>,
    /// `phi_n` at the nodes of `grid`, unit in `L^2(0, 1)`.
    pub eigenfunctions: Vec<Vec<f64>>,
    /// `lim x^{1/2 - nu} phi_n'(x)` as `x -> 0+`.
    pub trace_coeffs: Vec<f64>,
    /// Observed convergence order of each eigenvalue over the three grids.
    pub convergence_order: Vec<f64>,
    fine: Level,
}

#[derive(Debug, Clone)]
struct Level {
    /// All nodes, `x_0 = 0` included.
    nodes: Vec<f64>,
    operator: SymTridiagonal,
    mass: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// Reduced unknowns `v = x^{-s} u`, one vector per mode, node 0 included.
    reduced: Vec<Vec<f64>>,
}

/// Two independent estimates of a trace coefficient.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceEstimate {
    /// `(nu + 1/2) A_n` with `A_n` the leading Frobenius coefficient.
    pub fit: f64,
    /// Intercept of `x^{1/2 - nu} phi'(x)` extrapolated from the inner nodes.
    pub derivative: f64,
    /// Empirical order `rho` of the remainder `x^{1/2 - nu} phi' - T = O(x^rho)`.
    pub remainder_order: f64,
}

fn grid_exponent(params: &GasGiantParams) -> f64 {
    (1.0 / (2.0 * params.kappa)).max(1.0)
}

/// `(int x^p (b-x)/h, int x^p (x-a)/h)` over the cell `[a, b]`.
fn cell_moments(p: f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> (f64, f64) {
    let h = b - a;
    if a == 0.0 {
        let i0 = b.powf(p + 1.0) / (p + 1.0);
        let i1 = b.powf(p + 2.0) / (p + 2.0);
        return ((b * i0 - i1) / h, i1 / h);
    }
    let half = 0.5 * h;
    let mid = 0.5 * (a + b);
    let mut left = 0.0;
    let mut right = 0.0;
    for (t, w) in rule.0.iter().zip(&rule.1) {
        let x = mid + half * t;
        let f = w * half * x.powf(p);
        left += f * (b - x) / h;
        right += f * (x - a) / h;
    }
    (left, right)
}

fn assemble(
    params: &GasGiantParams,
    omega: f64,
    bc: BoundaryCondition,
    cells: usize,
) -> (Vec<f64>, SymTridiagonal, Vec<f64>) {
    let s = 0.5 + params.nu;
    let gamma = grid_exponent(params);
    let nodes: Vec<f64> = (0..=cells)
        .map(|i| (i as f64 / cells as f64).powf(gamma))
        .collect();
    let rule = gauss_legendre(8);
    let mut diag = vec![0.0; cells + 1];
    let mut off = vec![0.0; cells];
    let mut mass = vec![0.0; cells + 1];
    for c in 0..cells {
        let (a, b) = (nodes[c], nodes[c + 1]);
        let h = b - a;
        let (ml, mr) = cell_moments(2.0 * s, a, b, &rule);
        // int x^{2s} over the cell is ml + mr
        let w = (ml + mr) / (h * h);
        diag[c] += w;
        diag[c + 1] += w;
        off[c] = -w;
        mass[c] += ml;
        mass[c + 1] += mr;
        if omega > 0.0 {
            let (pl, pr) = cell_moments(params.beta + 2.0 * s, a, b, &rule);
            diag[c] += omega * pl;
            diag[c + 1] += omega * pr;
        }
    }
    match bc {
        BoundaryCondition::Dirichlet => {
            diag.pop();
            off.pop();
            mass.pop();
        }
        BoundaryCondition::Neumann => diag[cells] += s,
    }
    let scaled_diag: Vec<f64> = diag.iter().zip(&mass).map(|(d, m)| d / m).collect();
    let scaled_off: Vec<f64> = off
        .iter()
        .enumerate()
        .map(|(i, o)| o / (mass[i] * mass[i + 1]).sqrt())
        .collect();
    let op = SymTridiagonal::new(scaled_diag, scaled_off).expect("consistent shapes");
    (nodes, op, mass)
}

fn solve_level(
    params: &GasGiantParams,
    omega: f64,
    bc: BoundaryCondition,
    cells: usize,
    count: usize,
) -> Result<Level> {
    let (nodes, operator, mass) = assemble(params, omega, bc, cells);
    let eigenvalues = operator.lowest_eigenvalues(count)?;
    let reduced = eigenvalues
        .par_iter()
        .map(|&lam| {
            let y = operator.eigenvector(lam);
            let sign = if y[0] < 0.0 { -1.0 } else { 1.0 };
            let mut v: Vec<f64> = y.iter().zip(&mass).map(|(y, m)| sign * y / m.sqrt()).collect();
            if bc == BoundaryCondition::Dirichlet {
                v.push(0.0);
            }
            v
        })
        .collect();
    Ok(Level {
        nodes,
        operator,
        mass,
        eigenvalues,
        reduced,
    })
}

fn richardson2(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// First `n_eigs` Friedrichs eigenpairs of `P_omega`.
///
/// Eigenvalues are Richardson-extrapolated over `grid_size`, `2 grid_size`
/// and `4 grid_size` cells; the two extrapolants must agree to ten times
/// [`TARGET_TOL`].
pub fn solve_modal(
    params: &GasGiantParams,
    omega: f64,
    bc_at_1: BoundaryCondition,
    n_eigs: usize,
    grid_size: usize,
) -> Result<ModalEigenSystem> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(Error::InvalidParameter(format!("omega must be >= 0, got {omega}")));
    }
    if n_eigs == 0 || n_eigs * 8 > grid_size {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= n_eigs <= grid_size / 8, got n_eigs = {n_eigs}, grid_size = {grid_size}"
        )));
    }
    let levels: Vec<Level> = [grid_size, 2 * grid_size, 4 * grid_size]
        .par_iter()
        .map(|&g| solve_level(params, omega, bc_at_1, g, n_eigs))
        .collect::<Result<_>>()?;
    let s = 0.5 + params.nu;
    let mut eigenvalues = Vec::with_capacity(n_eigs);
    let mut trace_coeffs = Vec::with_capacity(n_eigs);
    let mut convergence_order = Vec::with_capacity(n_eigs);
    for k in 0..n_eigs {
        let e = [
            levels[0].eigenvalues[k],
            levels[1].eigenvalues[k],
            levels[2].eigenvalues[k],
        ];
        let r1 = richardson2(e[0], e[1]);
        let r2 = richardson2(e[1], e[2]);
        if (r2 - r1).abs() > 10.0 * TARGET_TOL * r2.abs() {
            return Err(Error::NonConvergence(format!(
                "eigenvalue {} at omega = {omega}: extrapolants {r1} and {r2} disagree; refine the grid",
                k + 1
            )));
        }
        eigenvalues.push(r2);
        convergence_order.push(((e[0] - e[1]) / (e[1] - e[2])).abs().log2());
        let a = [
            levels[0].reduced[k][0],
            levels[1].reduced[k][0],
            levels[2].reduced[k][0],
        ];
        trace_coeffs.push(s * richardson2(a[1], a[2]));
    }
    let fine = levels.into_iter().nth(2).expect("three levels");
    let grid = fine.nodes[1..].to_vec();
    let eigenfunctions = fine
        .reduced
        .iter()
        .map(|v| grid.iter().zip(&v[1..]).map(|(x, v)| x.powf(s) * v).collect())
        .collect();
    Ok(ModalEigenSystem {
        params: *params,
        omega,
        bc_at_1,
        grid,
        frequencies: eigenvalues.iter().map(|l: &f64| l.sqrt()).collect(),
        eigenvalues,
        eigenfunctions,
        trace_coeffs,
        convergence_order,
        fine,
    })
}

impl ModalEigenSystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    fn exponent(&self) -> f64 {
        0.5 + self.params.nu
    }

    /// Both trace estimates for mode `n` (zero-based).
    pub fn trace_estimate(&self, n: usize) -> Result<TraceEstimate> {
        if n >= self.len() {
            return Err(Error::InvalidParameter(format!(
                "mode {n} out of range (have {})",
                self.len()
            )));
        }
        let s = self.exponent();
        let x = &self.fine.nodes;
        let v = &self.fine.reduced[n];
        // x^{1/2 - nu} phi' = s v + x v'
        let mut xs = Vec::with_capacity(TRACE_FIT_NODES);
        let mut ds = Vec::with_capacity(TRACE_FIT_NODES);
        for i in 1..=TRACE_FIT_NODES {
            let dv = (v[i + 1] - v[i - 1]) / (x[i + 1] - x[i - 1]);
            xs.push(x[i]);
            ds.push(s * v[i] + x[i] * dv);
        }
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let (_, derivative, _) = linear_fit(&sq, &ds);
        let (lx, ly): (Vec<f64>, Vec<f64>) = xs
            .iter()
            .zip(&ds)
            .filter(|(_, d)| (*d - derivative).abs() > 0.0)
            .map(|(x, d)| (x.ln(), (d - derivative).abs().ln()))
            .unzip();
        let remainder_order = if lx.len() >= 2 {
            linear_fit(&lx, &ly).0
        } else {
            f64::NAN
        };
        Ok(TraceEstimate {
            fit: self.trace_coeffs[n],
            derivative,
            remainder_order,
        })
    }

    /// Log-log slope of `phi_n` on the innermost nodes.
    pub fn boundary_exponent(&self, n: usize) -> f64 {
        let k = TRACE_FIT_NODES;
        let lx: Vec<f64> = self.grid[..k].iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = self.eigenfunctions[n][..k]
            .iter()
            .map(|u| u.abs().ln())
            .collect();
        linear_fit(&lx, &ly).0
    }

    /// `sum_i m_i v_a(x_i) v_b(x_i)`, the discrete `L^2(0, 1)` inner product.
    pub fn inner_product(&self, a: usize, b: usize) -> f64 {
        let va = &self.fine.reduced[a];
        let vb = &self.fine.reduced[b];
        self.fine
            .mass
            .iter()
            .enumerate()
            .map(|(i, m)| m * va[i] * vb[i])
            .sum()
    }

    /// `|A y - lambda y| / lambda` for the finest-grid eigenpair of mode `n`.
    pub fn discrete_residual(&self, n: usize) -> f64 {
        let lam = self.fine.eigenvalues[n];
        let len = self.fine.operator.len();
        let y: Vec<f64> = (0..len)
            .map(|i| self.fine.mass[i].sqrt() * self.fine.reduced[n][i])
            .collect();
        let ay = self.fine.operator.apply(&y);
        let r = ay
            .iter()
            .zip(&y)
            .map(|(a, y)| (a - lam * y).powi(2))
            .sum::<f64>()
            .sqrt();
        r / lam
    }

    /// CSV with columns `omega,n,lambda,mu,trace_coeff`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,n,lambda,mu,trace_coeff\n");
        self.append_csv_rows(&mut out);
        out
    }

    pub fn append_csv_rows(&self, out: &mut String) {
        for k in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{:.15e},{:.15e},{:.15e}",
                self.omega,
                k + 1,
                self.eigenvalues[k],
                self.frequencies[k],
                self.trace_coeffs[k]
            );
        }
    }

    /// CSV with columns `x,value` for mode `n`.
    pub fn eigenfunction_csv(&self, n: usize) -> String {
        let mut out = String::from("x,value\n");
        for (x, u) in self.grid.iter().zip(&self.eigenfunctions[n]) {
            let _ = writeln!(out, "{x:.15e},{u:.15e}");
        }
        out
    }
}

/// Trace coefficient of mode `n` (zero-based); errors when the function fit
/// and the derivative extrapolation disagree by more than one percent.
pub fn trace_coefficient(system: &ModalEigenSystem, n: usize) -> Result<f64> {
    let est = system.trace_estimate(n)?;
    let rel = ((est.fit - est.derivative) / est.fit).abs();
    if !(rel <= TRACE_FLAG) {
        return Err(Error::IllConditioned(format!(
            "trace estimates for mode {} disagree: fit {} vs derivative {} ({:.2}%)",
            n + 1,
            est.fit,
            est.derivative,
            100.0 * rel
        )));
    }
    Ok(est.fit)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeylGapRow {
    pub omega: f64,
    /// Least-squares slope of `mu_n` against `n` over the upper half of the range.
    pub slope: f64,
    pub last_gap: f64,
    /// The 1D Weyl gap `kappa pi`.
    pub reference_gap: f64,
    pub slope_deviation: f64,
    pub gap_deviation: f64,
}

/// Frequency-slope table over `omegas` with `n` Dirichlet modes each.
pub fn weyl_gap_report(params: &GasGiantParams, omegas: &[f64], n: usize) -> Result<Vec<WeylGapRow>> {
    if n < 30 {
        return Err(Error::InvalidParameter(format!("need at least 30 modes, got {n}")));
    }
    let grid = 50 * n;
    let reference_gap = params.kappa * PI;
    omegas
        .par_iter()
        .map(|&omega| {
            let sys = solve_modal(params, omega, BoundaryCondition::Dirichlet, n, grid)?;
            let start = n / 2;
            let idx: Vec<f64> = (start..n).map(|k| (k + 1) as f64).collect();
            let (slope, _, _) = linear_fit(&idx, &sys.frequencies[start..]);
            let last_gap = sys.frequencies[n - 1] - sys.frequencies[n - 2];
            Ok(WeylGapRow {
                omega,
                slope,
                last_gap,
                reference_gap,
                slope_deviation: (slope - reference_gap) / reference_gap,
                gap_deviation: (last_gap - reference_gap) / reference_gap,
            })
        })
        .collect()
}

/// Closed-form `omega = 0` Dirichlet trace `T_n`, from
/// `phi_n = sqrt(2) x^{1/2} J_nu(j x) / |J'_nu(j)|`.
pub fn trace_at_zero_omega(nu: f64, zero: f64) -> f64 {
    let dj = crate::bessel::bessel_j_unchecked(nu + 1.0, zero).abs();
    (nu + 0.5) * 2f64.sqrt() * zero.powf(nu)
        / (2f64.powf(nu) * statrs::function::gamma::gamma(nu + 1.0) * dj)
}
