//! Localized observation: failure of a fixed cap, band-limited cost,
//! convexified moving designs, switching schedules and the Cesàro protocol.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{gauss_legendre, linear_fit};
use crate::params::GasGiantParams;
use crate::tangential::{
    concentrating_mode, restricted_gram, sphere_basis, weighted_evaluation, Manifold, Provenance,
    Region, Rotation, RotationSet, TangentialBasis,
};
use crate::waves::{
    anisotropic_energy, family_frame_bounds, observability_ratio, restrict_gram, time_rule,
    trace_weight_bounds, InitialData, ModalFamily, TraceSignal,
};

/// Default acceptance tolerance of a design, relative to `L`.
pub const DEFAULT_EPSILON: f64 = 1e-6;
/// Eigenvalues below this are at the resolution floor of the SVD.
pub const FLOOR_LIMIT: f64 = 1e-26;

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn from_points(points: &[[f64; 3]], provenance: Provenance) -> RotationSet {
    RotationSet {
        rotations: points
            .iter()
            .map(|p| Rotation::pole_to(*p).expect("nonzero design point"))
            .collect(),
        provenance,
    }
}

pub fn tetrahedral_points() -> Vec<[f64; 3]> {
    [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
        .map(unit)
        .to_vec()
}

pub fn octahedral_points() -> Vec<[f64; 3]> {
    vec![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ]
}

pub fn icosahedral_points() -> Vec<[f64; 3]> {
    let g = 0.5 * (1.0 + 5f64.sqrt());
    let mut out = Vec::with_capacity(12);
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            out.push(unit([0.0, s1, s2 * g]));
            out.push(unit([s1, s2 * g, 0.0]));
            out.push(unit([s2 * g, 0.0, s1]));
        }
    }
    out
}

/// Rotations carrying the pole to the vertices of a regular tetrahedron (a 2-design).
pub fn tetrahedral_design() -> RotationSet {
    from_points(&tetrahedral_points(), Provenance::SphericalDesign { t: 2 })
}

/// Octahedron vertices (a 3-design).
pub fn octahedral_design() -> RotationSet {
    from_points(&octahedral_points(), Provenance::SphericalDesign { t: 3 })
}

/// Icosahedron vertices (a 5-design).
pub fn icosahedral_design() -> RotationSet {
    from_points(&icosahedral_points(), Provenance::SphericalDesign { t: 5 })
}

/// Gauss–Legendre in `z` times uniform longitudes: a weighted design exact
/// for polynomials of degree `<= t`. Returns the rotations and the weights.
pub fn gauss_product_design(t: usize) -> (RotationSet, Vec<f64>) {
    let nz = t / 2 + 1;
    let nphi = t + 1;
    let (z, w) = gauss_legendre(nz);
    let mut points = Vec::with_capacity(nz * nphi);
    let mut weights = Vec::with_capacity(nz * nphi);
    for (zi, wi) in z.iter().zip(&w) {
        let rho = (1.0 - zi * zi).sqrt();
        for j in 0..nphi {
            let (s, c) = (2.0 * PI * j as f64 / nphi as f64).sin_cos();
            points.push([rho * c, rho * s, *zi]);
            weights.push(0.5 * wi / nphi as f64);
        }
    }
    (from_points(&points, Provenance::WeightedDesign { t }), weights)
}

/// `J` equally spaced arc translations.
pub fn circle_grid(j: usize) -> RotationSet {
    RotationSet {
        rotations: (0..j)
            .map(|i| Rotation::Circle(2.0 * PI * i as f64 / j as f64))
            .collect(),
        provenance: Provenance::Grid,
    }
}

#[derive(Debug, Clone)]
pub struct ObservationDesign {
    pub region: Region,
    pub fraction: f64,
    pub manifold: Manifold,
    pub max_degree: usize,
    pub rotations: Vec<Rotation>,
    pub provenance: Provenance,
    pub weights: Vec<f64>,
    pub grams: Vec<DMatrix<f64>>,
    /// `|sum theta_j M(R_j) - L Id|_F`.
    pub residual: f64,
    pub tolerance: f64,
    pub accepted: bool,
}

impl ObservationDesign {
    pub fn effective_gram(&self) -> DMatrix<f64> {
        weighted_sum(&self.grams, &self.weights)
    }

    /// `epsilon L`, the largest residual an accepted design may have.
    pub fn residual_bound(&self) -> f64 {
        self.tolerance * self.fraction
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rotations: Vec<serde_json::Value> = self
            .rotations
            .iter()
            .map(|r| {
                let (axis, angle) = r.axis_angle();
                serde_json::json!({"axis": axis, "angle": angle})
            })
            .collect();
        serde_json::json!({
            "manifold": self.manifold,
            "region": self.region,
            "fraction": self.fraction,
            "max_degree": self.max_degree,
            "provenance": self.provenance,
            "rotations": rotations,
            "weights": self.weights,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "accepted": self.accepted,
        })
    }
}

fn weighted_sum(grams: &[DMatrix<f64>], weights: &[f64]) -> DMatrix<f64> {
    let d = grams[0].nrows();
    let mut s = DMatrix::zeros(d, d);
    for (g, w) in grams.iter().zip(weights) {
        s += g * *w;
    }
    s
}

fn design_residual(grams: &[DMatrix<f64>], weights: &[f64], fraction: f64) -> f64 {
    let d = grams[0].nrows();
    (weighted_sum(grams, weights) - DMatrix::identity(d, d) * fraction).norm()
}

/// `min |sum theta_j M_j - L Id|_F` over the simplex.
pub fn solve_design(
    basis: &TangentialBasis,
    region: &Region,
    candidates: &RotationSet,
    epsilon: f64,
) -> Result<ObservationDesign> {
    if candidates.rotations.is_empty() {
        return Err(Error::InvalidParameter("empty candidate set".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
    }
    let grams = candidates
        .rotations
        .par_iter()
        .map(|r| restricted_gram(basis, region, r))
        .collect::<Result<Vec<_>>>()?;
    let fraction = region.fraction;
    let j = grams.len();
    let q = DMatrix::from_fn(j, j, |a, b| grams[a].dot(&grams[b]));
    let c = DVector::from_fn(j, |a, _| fraction * grams[a].trace());
    let weights = simplex_least_squares(&q, &c);
    let residual = design_residual(&grams, &weights, fraction);
    Ok(ObservationDesign {
        region: *region,
        fraction,
        manifold: basis.manifold,
        max_degree: basis.max_degree,
        rotations: candidates.rotations.clone(),
        provenance: candidates.provenance,
        weights,
        grams,
        residual,
        tolerance: epsilon,
        accepted: residual <= epsilon * fraction,
    })
}

/// Design with prescribed weights (no optimization).
pub fn fixed_design(
    basis: &TangentialBasis,
    region: &Region,
    candidates: &RotationSet,
    weights: &[f64],
    epsilon: f64,
) -> Result<ObservationDesign> {
    if weights.len() != candidates.rotations.len() || weights.iter().any(|w| *w < 0.0) {
        return Err(Error::InvalidParameter("weights must be nonnegative, one per rotation".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("weights sum to {total}, not 1")));
    }
    let grams = candidates
        .rotations
        .par_iter()
        .map(|r| restricted_gram(basis, region, r))
        .collect::<Result<Vec<_>>>()?;
    let residual = design_residual(&grams, weights, region.fraction);
    Ok(ObservationDesign {
        region: *region,
        fraction: region.fraction,
        manifold: basis.manifold,
        max_degree: basis.max_degree,
        rotations: candidates.rotations.clone(),
        provenance: candidates.provenance,
        weights: weights.to_vec(),
        grams,
        residual,
        tolerance: epsilon,
        accepted: residual <= epsilon * region.fraction,
    })
}

/// Active-set method for `min theta^T Q theta - 2 c^T theta` on the simplex,
/// started at uniform weights; ties go to the lowest index.
pub(crate) fn simplex_least_squares(q: &DMatrix<f64>, c: &DVector<f64>) -> Vec<f64> {
    let j = q.nrows();
    let mut theta = DVector::from_element(j, 1.0 / j as f64);
    if j == 1 {
        return vec![1.0];
    }
    let scale = q.amax().max(c.amax()).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let mut active = vec![false; j];
    for _ in 0..(50 * j + 100) {
        let free: Vec<usize> = (0..j).filter(|&i| !active[i]).collect();
        let nf = free.len();
        let mut kkt = DMatrix::zeros(nf + 1, nf + 1);
        let mut rhs = DVector::zeros(nf + 1);
        for (a, &i) in free.iter().enumerate() {
            for (b, &k) in free.iter().enumerate() {
                kkt[(a, b)] = 2.0 * q[(i, k)];
            }
            kkt[(a, nf)] = 1.0;
            kkt[(nf, a)] = 1.0;
            rhs[a] = 2.0 * c[i];
        }
        rhs[nf] = 1.0;
        let sol = kkt
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-14 * kkt.amax())
            .unwrap_or_else(|_| DVector::zeros(nf + 1));
        let step: Vec<f64> = free
            .iter()
            .enumerate()
            .map(|(a, &i)| sol[a] - theta[i])
            .collect();
        let step_size = step.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if step_size <= 1e-15 {
            let g = (q * &theta - c) * 2.0;
            let lambda = free.iter().map(|&i| g[i]).sum::<f64>() / nf as f64;
            let mut worst: Option<(usize, f64)> = None;
            for i in (0..j).filter(|&i| active[i]) {
                let mu = g[i] - lambda;
                if mu < -tol && worst.is_none_or(|(_, w)| mu < w) {
                    worst = Some((i, mu));
                }
            }
            match worst {
                Some((i, _)) => active[i] = false,
                None => break,
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for (a, &i) in free.iter().enumerate() {
            if step[a] < 0.0 {
                let r = theta[i] / -step[a];
                if r < alpha {
                    alpha = r;
                    blocking = Some(i);
                }
            }
        }
        for (a, &i) in free.iter().enumerate() {
            theta[i] += alpha * step[a];
        }
        if let Some(i) = blocking {
            theta[i] = 0.0;
            active[i] = true;
        }
    }
    let mut out: Vec<f64> = theta.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slot {
    pub start: f64,
    pub end: f64,
    pub index: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SwitchingSchedule {
    pub period: f64,
    pub micro: usize,
    pub slots: Vec<Slot>,
    pub fractions: Vec<f64>,
    /// Contiguous blocks of length `theta_j T_0`, in index order.
    pub one_cycle: Vec<Slot>,
}

/// Largest-remainder counts of `weights * micro`; ties go to the lowest index.
pub fn apportion(weights: &[f64], micro: usize) -> Vec<usize> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * micro as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(micro.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Micro-partition of `[0, T_0)` realizing the weights as time fractions,
/// with slots interleaved by largest deficit.
pub fn realize_schedule(weights: &[f64], period: f64, micro: usize) -> Result<SwitchingSchedule> {
    if weights.is_empty() || micro < weights.len() {
        return Err(Error::InvalidParameter(format!(
            "need micro >= number of rotations ({} < {})",
            micro,
            weights.len()
        )));
    }
    if !(period > 0.0) {
        return Err(Error::InvalidParameter(format!("period must be > 0, got {period}")));
    }
    let counts = apportion(weights, micro);
    let mut used = vec![0usize; weights.len()];
    let h = period / micro as f64;
    let mut slots = Vec::with_capacity(micro);
    for s in 0..micro {
        let mut best: Option<(usize, i128)> = None;
        for (j, (&cj, &uj)) in counts.iter().zip(&used).enumerate() {
            if uj >= cj {
                continue;
            }
            let deficit = cj as i128 * (s as i128 + 1) - micro as i128 * uj as i128;
            if best.is_none_or(|(_, d)| deficit > d) {
                best = Some((j, deficit));
            }
        }
        let (j, _) = best.expect("counts sum to micro");
        used[j] += 1;
        slots.push(Slot {
            start: s as f64 * h,
            end: (s + 1) as f64 * h,
            index: j,
        });
    }
    let fractions = counts.iter().map(|c| *c as f64 / micro as f64).collect();
    let mut one_cycle = Vec::new();
    let mut start = 0.0;
    for (j, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            let end = (start + w * period).min(period);
            one_cycle.push(Slot { start, end, index: j });
            start = end;
        }
    }
    if let Some(last) = one_cycle.last_mut() {
        last.end = period;
    }
    Ok(SwitchingSchedule {
        period,
        micro,
        slots,
        fractions,
        one_cycle,
    })
}

impl SwitchingSchedule {
    /// CSV `t_start,t_end,rotation_index` of the micro-partition.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_start,t_end,rotation_index\n");
        for s in &self.slots {
            let _ = writeln!(out, "{:.15e},{:.15e},{}", s.start, s.end, s.index);
        }
        out
    }

    /// `(1 / (m T_0)) int_0^{m T_0} M_{sigma(t)} dt` for the periodic extension.
    pub fn averaged_gram(&self, grams: &[DMatrix<f64>], periods: usize) -> DMatrix<f64> {
        let d = grams[0].nrows();
        let mut s = DMatrix::zeros(d, d);
        for p in 0..periods {
            let offset = p as f64 * self.period;
            for slot in &self.slots {
                let len = (offset + slot.end) - (offset + slot.start);
                s += &grams[slot.index] * len;
            }
        }
        s / (periods as f64 * self.period)
    }
}

/// `int int_{omega(t)} |trace|^2 dt` over the given slots, shifted by `offset`.
pub fn scheduled_integral(
    signal: &TraceSignal,
    slots: &[Slot],
    grams: &[DMatrix<f64>],
    offset: f64,
) -> f64 {
    let max_freq = signal.max_frequency();
    slots
        .iter()
        .map(|s| {
            let (t, w) = time_rule(offset + s.start, offset + s.end, max_freq);
            let g = &grams[s.index];
            t.iter()
                .zip(&w)
                .map(|(&t, &w)| {
                    let y = DVector::from_vec(signal.values(t));
                    w * y.dot(&(g * &y))
                })
                .sum::<f64>()
        })
        .sum()
}

/// Energy-level frame constant `min_k c_T(k) * min trace weight`.
pub fn energy_frame_constant(data: &InitialData, family: &ModalFamily, t: f64) -> Result<f64> {
    let (c_t, _) = family_frame_bounds(data, family, t)?;
    let (w_min, _) = trace_weight_bounds(data, family)?;
    Ok(c_t * w_min)
}

#[derive(Debug, Clone, Serialize)]
pub struct MovingCheck {
    pub periods: usize,
    pub per_period_ratios: Vec<f64>,
    pub average_ratio: f64,
    pub c_t0: f64,
    pub epsilon: f64,
    pub lower_bound: f64,
    /// Largest entry-wise change of the time-averaged Gram over `1..=m` periods.
    pub averaged_gram_drift: f64,
    pub passes: bool,
}

/// Observation ratio of moving data under a switching schedule over `m` periods.
pub fn moving_observability_check(
    design: &ObservationDesign,
    schedule: &SwitchingSchedule,
    data: &InitialData,
    family: &ModalFamily,
    data_basis: &TangentialBasis,
    periods: usize,
) -> Result<MovingCheck> {
    if periods == 0 {
        return Err(Error::InvalidParameter("need at least one period".into()));
    }
    let data_degree = data
        .modes
        .iter()
        .map(|m| data_basis.modes[m.tangential_index].degree)
        .max()
        .unwrap_or(0);
    if data_degree > design.max_degree {
        return Err(Error::InvalidParameter(format!(
            "data degree {data_degree} exceeds the design band {}",
            design.max_degree
        )));
    }
    let grams = data_grams(data_basis, &design.region, &design.rotations, data)?;
    let energy = anisotropic_energy(data, family)?.total;
    if !(energy > 0.0) {
        return Err(Error::InvalidParameter("zero-energy data".into()));
    }
    let signal = TraceSignal::new(data, family)?;
    let per_period_ratios: Vec<f64> = (0..periods)
        .map(|p| scheduled_integral(&signal, &schedule.slots, &grams, p as f64 * schedule.period) / energy)
        .collect();
    let average_ratio = per_period_ratios.iter().sum::<f64>() / periods as f64;
    let c_t0 = energy_frame_constant(data, family, schedule.period)?;
    let epsilon = design.residual_bound();
    let lower_bound = (design.fraction - epsilon) * c_t0;
    let base = schedule.averaged_gram(&grams, 1);
    let averaged_gram_drift = (1..=periods)
        .map(|m| (schedule.averaged_gram(&grams, m) - &base).amax())
        .fold(0.0, f64::max);
    Ok(MovingCheck {
        periods,
        passes: per_period_ratios.iter().all(|r| *r >= lower_bound),
        per_period_ratios,
        average_ratio,
        c_t0,
        epsilon,
        lower_bound,
        averaged_gram_drift,
    })
}

/// Restricted Grams of the data's modes for every rotation.
pub fn data_grams(
    data_basis: &TangentialBasis,
    region: &Region,
    rotations: &[Rotation],
    data: &InitialData,
) -> Result<Vec<DMatrix<f64>>> {
    rotations
        .par_iter()
        .map(|r| Ok(restrict_gram(&restricted_gram(data_basis, region, r)?, data)))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalizedRow {
    pub degree: usize,
    pub cap_mass: f64,
    pub full_ratio: f64,
    pub ratio: f64,
}

/// Ratio of cap observation to energy for sectoral data `Y_l^l` with one
/// normal profile, for each listed degree.
pub fn localized_failure_demo(
    params: &GasGiantParams,
    cap: &Region,
    degrees: &[usize],
    t: f64,
) -> Result<Vec<LocalizedRow>> {
    if cap.manifold != Manifold::Sphere2 {
        return Err(Error::InvalidParameter("the failure demo lives on the sphere".into()));
    }
    if !(t > params.t_star) {
        return Err(Error::InvalidParameter(format!(
            "T = {t} must exceed T* = {}",
            params.t_star
        )));
    }
    let l_max = degrees.iter().copied().max().unwrap_or(0);
    let basis = sphere_basis(l_max)?;
    let gram = restricted_gram(&basis, cap, &Rotation::identity(Manifold::Sphere2))?;
    degrees
        .par_iter()
        .map(|&l| {
            let k = concentrating_mode(&basis, l)?;
            let omega = basis.modes[k].eigenvalue;
            let data = InitialData::single(k, omega, 0, 1)?;
            let family = ModalFamily::build(
                params,
                &[omega],
                crate::modal::BoundaryCondition::Dirichlet,
                1,
                400,
            )?;
            let cap_mass = gram[(k, k)];
            let g = DMatrix::from_element(1, 1, cap_mass);
            let full_ratio = observability_ratio(&data, &family, t, None)?;
            let ratio = observability_ratio(&data, &family, t, Some(&g))?;
            Ok(LocalizedRow {
                degree: l,
                cap_mass,
                full_ratio,
                ratio,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BandLimitedRow {
    pub degree: usize,
    pub bandwidth: f64,
    pub lambda_min: f64,
    pub floor_limited: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandLimitedReport {
    pub rows: Vec<BandLimitedRow>,
    /// Fit `log lambda_min = intercept + slope sqrt(Lambda)`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Smallest eigenvalue of the single-region Gram on `E_Lambda` for each degree.
pub fn band_limited_constant(region: &Region, degrees: &[usize]) -> Result<BandLimitedReport> {
    if region.manifold != Manifold::Sphere2 {
        return Err(Error::InvalidParameter("band-limited sweep runs on the sphere".into()));
    }
    let l_max = degrees.iter().copied().max().unwrap_or(0);
    let basis = sphere_basis(l_max)?;
    let a = weighted_evaluation(&basis, region, &Rotation::identity(Manifold::Sphere2))?;
    let rows: Vec<BandLimitedRow> = degrees
        .par_iter()
        .map(|&l| {
            let d = basis.modes_up_to_degree(l);
            let sub = a.columns(0, d).into_owned();
            let s = sub.singular_values();
            let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
            let lambda_min = smin * smin;
            BandLimitedRow {
                degree: l,
                bandwidth: (l * (l + 1)) as f64,
                lambda_min,
                floor_limited: lambda_min < FLOOR_LIMIT,
            }
        })
        .collect();
    let fit_rows: Vec<&BandLimitedRow> = rows.iter().filter(|r| r.lambda_min > 0.0).collect();
    let (slope, intercept, r_squared) = if fit_rows.len() >= 2 {
        let x: Vec<f64> = fit_rows.iter().map(|r| r.bandwidth.sqrt()).collect();
        let y: Vec<f64> = fit_rows.iter().map(|r| r.lambda_min.ln()).collect();
        linear_fit(&x, &y)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    Ok(BandLimitedReport {
        rows,
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CesaroRow {
    pub blocks: usize,
    pub block_degree: usize,
    pub block_residual: f64,
    pub block_observation: f64,
    pub running_average: f64,
    pub lower_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CesaroReport {
    pub rows: Vec<CesaroRow>,
    pub c_t0: f64,
    pub energy: f64,
    pub delta: f64,
    /// First `N` with running average `>= (L - delta) c_{T_0} E_nu`.
    pub n_delta: Option<usize>,
    /// First block whose band contains every data mode.
    pub covering_block: Option<usize>,
    /// Blocks whose band was capped by the dimension limit.
    pub truncated_blocks: Vec<usize>,
}

impl CesaroReport {
    /// CSV `N,running_average,lower_bound`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,running_average,lower_bound\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.15e},{:.15e}", r.blocks, r.running_average, r.lower_bound);
        }
        out
    }
}

/// Largest degree `l` with `l (l + 1) <= bandwidth`.
pub fn degree_for_bandwidth(bandwidth: f64) -> usize {
    let mut l = 0usize;
    while ((l + 1) * (l + 2)) as f64 <= bandwidth {
        l += 1;
    }
    l
}

/// Concatenated switching blocks with `Lambda_m = m^2`, `epsilon_m = 1/m`.
#[allow(clippy::too_many_arguments)]
pub fn cesaro_protocol(
    cap: &Region,
    data: &InitialData,
    family: &ModalFamily,
    data_basis: &TangentialBasis,
    n_blocks: usize,
    period: f64,
    micro: usize,
    delta: f64,
    max_degree: usize,
) -> Result<CesaroReport> {
    if n_blocks == 0 {
        return Err(Error::InvalidParameter("need at least one block".into()));
    }
    let energy = anisotropic_energy(data, family)?.total;
    if !(energy > 0.0) {
        return Err(Error::InvalidParameter("zero-energy data".into()));
    }
    let data_degree = data
        .modes
        .iter()
        .map(|m| data_basis.modes[m.tangential_index].degree)
        .max()
        .unwrap_or(0);
    let signal = TraceSignal::new(data, family)?;
    let blocks: Vec<(usize, bool, f64, f64)> = (1..=n_blocks)
        .into_par_iter()
        .map(|m| {
            let wanted = degree_for_bandwidth((m * m) as f64);
            let l = wanted.min(max_degree);
            let basis = sphere_basis(l)?;
            let design = if l == 0 {
                fixed_design(
                    &basis,
                    cap,
                    &RotationSet {
                        rotations: vec![Rotation::identity(Manifold::Sphere2)],
                        provenance: Provenance::Grid,
                    },
                    &[1.0],
                    1.0 / m as f64,
                )?
            } else {
                let (candidates, _) = gauss_product_design(2 * l);
                solve_design(&basis, cap, &candidates, 1.0 / m as f64)?
            };
            let schedule = realize_schedule(&design.weights, period, micro.max(design.weights.len()))?;
            let grams = data_grams(data_basis, cap, &design.rotations, data)?;
            let offset = (m - 1) as f64 * period;
            let obs = scheduled_integral(&signal, &schedule.slots, &grams, offset);
            Ok((l, wanted > l, design.residual, obs))
        })
        .collect::<Result<_>>()?;
    let c_t0 = energy_frame_constant(data, family, period)?;
    let bound = (cap.fraction - delta) * c_t0 * energy;
    let mut rows = Vec::with_capacity(n_blocks);
    let mut total = 0.0;
    let mut n_delta = None;
    let mut covering_block = None;
    let mut truncated_blocks = Vec::new();
    for (i, (l, truncated, residual, obs)) in blocks.into_iter().enumerate() {
        let n = i + 1;
        total += obs;
        let running_average = total / n as f64;
        if truncated {
            truncated_blocks.push(n);
        }
        if covering_block.is_none() && l >= data_degree {
            covering_block = Some(n);
        }
        if n_delta.is_none() && running_average >= bound {
            n_delta = Some(n);
        }
        rows.push(CesaroRow {
            blocks: n,
            block_degree: l,
            block_residual: residual,
            block_observation: obs,
            running_average,
            lower_bound: bound,
        });
    }
    Ok(CesaroReport {
        rows,
        c_t0,
        energy,
        delta,
        n_delta,
        covering_block,
        truncated_blocks,
    })
}

/// Unit vector of a design point, for reporting.
pub fn rotation_target(r: &Rotation) -> Option<[f64; 3]> {
    match r {
        Rotation::Sphere(m) => {
            let v = m * Vector3::z();
            Some([v.x, v.y, v.z])
        }
        Rotation::Circle(_) => None,
    }
}
