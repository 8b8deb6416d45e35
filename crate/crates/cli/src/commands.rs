use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use gasgiant::bessel::build_eigensystem_1d;
use gasgiant::design::{
    band_limited_constant, cesaro_protocol, circle_grid, gauss_product_design, icosahedral_design,
    localized_failure_demo, moving_observability_check, octahedral_design, realize_schedule,
    solve_design, tetrahedral_design, ObservationDesign,
};
use gasgiant::modal::solve_modal;
use gasgiant::tangential::{
    circle_basis, restricted_gram, sphere_basis, Manifold, Rotation, RotationSet, TangentialBasis,
    DEFAULT_MAX_DIMENSION,
};
use gasgiant::waves::{
    family_frame_bounds, hum_control, ingham_frame_bounds, observability_ratio,
    one_dimensional_frequencies, restrict_gram, trace_weight_bounds, InitialData, ModalFamily,
    ModeData,
};
use gasgiant::{Convention, GasGiantParams};

use crate::config::{CandidateConfig, ExperimentConfig};
use crate::error::CliError;
use crate::output::{Output, Plot};

const UNITS_SPECTRAL: &str = "dimensionless; x in (0,1), lambda in 1/length^2, mu = sqrt(lambda)";
const UNITS_TIME: &str = "dimensionless; T in model time units, ratios relative to E_nu";

pub type CommandResult = Result<String, CliError>;

fn modal_params(cfg: &ExperimentConfig) -> Result<GasGiantParams, CliError> {
    let p = cfg.params()?;
    p.require(Convention::Multidimensional)
        .map_err(|_| CliError::Config("this command needs `beta` and `n`, not `alpha`".into()))?;
    Ok(p)
}

fn basis(cfg: &ExperimentConfig) -> Result<TangentialBasis, CliError> {
    let degree = cfg.tangential_degree()?;
    let b = match cfg.manifold()? {
        Manifold::Sphere2 => sphere_basis(degree),
        Manifold::Circle => circle_basis(degree),
    };
    b.map_err(|e| CliError::Config(format!("tangential basis: {e}")))
}

fn rng(seed: Option<u64>) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.unwrap_or(0))
}

/// Explicit modes from the config, or Gaussian coefficients on every basis mode.
fn initial_data(
    cfg: &ExperimentConfig,
    basis: &TangentialBasis,
    truncation: usize,
    rng: &mut ChaCha8Rng,
) -> Result<InitialData, CliError> {
    match &cfg.data {
        Some(modes) => {
            let mut out = Vec::with_capacity(modes.len());
            for m in modes {
                let mode = basis.modes.get(m.index).ok_or_else(|| {
                    CliError::Config(format!(
                        "data: tangential index {} outside the basis (dimension {})",
                        m.index,
                        basis.dimension()
                    ))
                })?;
                out.push(ModeData {
                    tangential_index: m.index,
                    omega: mode.eigenvalue,
                    f0: m.f0.clone(),
                    f1: m.f1.clone(),
                });
            }
            let bandwidth = out.iter().map(|m| m.omega).fold(0.0, f64::max);
            InitialData::new(bandwidth, truncation, out).map_err(|e| CliError::Config(format!("data: {e}")))
        }
        None => {
            let modes: Vec<(usize, f64)> = basis.modes.iter().map(|m| (m.index, m.eigenvalue)).collect();
            Ok(InitialData::random(&modes, truncation, rng)?)
        }
    }
}

fn family_for(cfg: &ExperimentConfig, params: &GasGiantParams, data: &InitialData) -> Result<ModalFamily, CliError> {
    let omegas: Vec<f64> = data.modes.iter().map(|m| m.omega).collect();
    let n = data.truncation;
    Ok(ModalFamily::build(params, &omegas, cfg.boundary(), n, cfg.grid(n))?)
}

fn candidates(cfg: &ExperimentConfig, manifold: Manifold) -> Result<RotationSet, CliError> {
    let c = cfg.candidates.ok_or_else(|| CliError::Config("missing required key `candidates`".into()))?;
    let ok = matches!(
        (c, manifold),
        (CandidateConfig::CircleGrid { .. }, Manifold::Circle) | (
            CandidateConfig::Tetrahedral
                | CandidateConfig::Octahedral
                | CandidateConfig::Icosahedral
                | CandidateConfig::GaussProduct { .. },
            Manifold::Sphere2
        )
    );
    if !ok {
        return Err(CliError::Config(format!("candidates {c:?} do not live on {manifold:?}")));
    }
    Ok(match c {
        CandidateConfig::Tetrahedral => tetrahedral_design(),
        CandidateConfig::Octahedral => octahedral_design(),
        CandidateConfig::Icosahedral => icosahedral_design(),
        CandidateConfig::GaussProduct { t } => gauss_product_design(t).0,
        CandidateConfig::CircleGrid { count } if count > 0 => circle_grid(count),
        CandidateConfig::CircleGrid { .. } => {
            return Err(CliError::Config("circle_grid needs count >= 1".into()))
        }
    })
}

fn build_design(cfg: &ExperimentConfig) -> Result<(TangentialBasis, ObservationDesign), CliError> {
    let basis = basis(cfg)?;
    let region = cfg.region()?;
    if region.manifold != basis.manifold {
        return Err(CliError::Config("region and manifold disagree".into()));
    }
    let set = candidates(cfg, basis.manifold)?;
    let design = solve_design(&basis, &region, &set, cfg.epsilon()?)?;
    Ok((basis, design))
}

pub fn eigen(cfg: &ExperimentConfig, out: &mut Output) -> CommandResult {
    let p = cfg.params()?;
    let n = cfg.modal_truncation()?;
    if p.convention == Convention::OneDimensional {
        let sys = build_eigensystem_1d(&p, n)?;
        out.csv("eigen_1d.csv", UNITS_SPECTRAL, &sys.to_csv())?;
        let mut conv = String::from("k,trace_closed_form,trace_extrapolated,relative_difference\n");
        for k in 0..sys.len() {
            let a = sys.trace_limit(k);
            let b = sys.extrapolated_trace(k);
            let _ = writeln!(conv, "{},{a:.15e},{b:.15e},{:.3e}", k + 1, ((a - b) / a).abs());
        }
        out.csv("convergence.csv", UNITS_SPECTRAL, &conv)?;
        out.json("eigen.json", UNITS_SPECTRAL, json!({"params": p, "system": sys}))?;
        return Ok(format!("{} closed-form eigenvalues, lambda_1 = {:.12e}", n, sys.eigenvalues[0]));
    }
    let omegas = cfg.omegas.clone().unwrap_or_else(|| vec![0.0]);
    let mut table = String::from("omega,n,lambda,mu,trace_coeff\n");
    let mut conv = String::from(
        "omega,n,convergence_order,trace_fit,trace_derivative,remainder_order,discrete_residual\n",
    );
    for &w in &omegas {
        let sys = solve_modal(&p, w, cfg.boundary(), n, cfg.grid(n))?;
        sys.append_csv_rows(&mut table);
        for k in 0..sys.len() {
            let e = sys.trace_estimate(k)?;
            let _ = writeln!(
                conv,
                "{w},{},{:.4},{:.15e},{:.15e},{:.4},{:.3e}",
                k + 1,
                sys.convergence_order[k],
                e.fit,
                e.derivative,
                e.remainder_order,
                sys.discrete_residual(k)
            );
        }
    }
    out.csv("eigen_modal.csv", UNITS_SPECTRAL, &table)?;
    out.csv("convergence.csv", UNITS_SPECTRAL, &conv)?;
    Ok(format!("{} modal eigenvalues at {} omega values", n, omegas.len()))
}

pub fn frame_sweep(cfg: &ExperimentConfig, out: &mut Output) -> CommandResult {
    let p = cfg.params()?;
    let times = cfg.sweep()?;
    // N is the number of frequency pairs, or the list length for explicit frequencies
    let sets: Vec<(usize, Vec<f64>)> = match cfg.frame.as_ref().and_then(|f| f.frequencies.clone()) {
        Some(f) => vec![(f.len(), f)],
        None => {
            let counts = cfg
                .frame
                .as_ref()
                .and_then(|f| f.truncations.clone())
                .map_or_else(|| cfg.modal_truncation().map(|n| vec![n]), Ok)?;
            counts
                .iter()
                .map(|&n| one_dimensional_frequencies(&p, n).map(|f| (n, f)))
                .collect::<Result<_, _>>()?
        }
    };
    let mut table = String::from("T,N,c_T,C_T\n");
    let mut series = Vec::new();
    for (count, f) in &sets {
        let mut curve = Vec::with_capacity(times.len());
        for &t in &times {
            let b = ingham_frame_bounds(f, t)?;
            let _ = writeln!(table, "{t},{count},{:.15e},{:.15e}", b.c_lower, b.c_upper);
            curve.push((t, b.c_lower));
        }
        series.push((format!("N = {count}"), curve));
    }
    out.csv("frame_sweep.csv", UNITS_TIME, &table)?;
    let plot = Plot {
        title: "lower frame bound",
        x_label: "T",
        y_label: "c_T",
        series,
        vertical: Some((p.t_star, "T*")),
        log_y: true,
    };
    out.svg("frame_sweep.svg", &plot.render())?;
    Ok(format!("{} times x {} frequency sets, T* = {}", times.len(), sets.len(), p.t_star))
}

pub fn observe(cfg: &ExperimentConfig, out: &mut Output, seed: Option<u64>) -> CommandResult {
    let p = modal_params(cfg)?;
    let basis = basis(cfg)?;
    let n = cfg.modal_truncation()?;
    let t = cfg.time()?;
    let gram = match cfg.region {
        Some(_) => {
            let r = cfg.region()?;
            Some(restricted_gram(&basis, &r, &Rotation::identity(basis.manifold))?)
        }
        None => None,
    };
    let mut rng = rng(seed);
    let mut table = String::from("draw,ratio,lower_bound,upper_bound\n");
    let mut family: Option<ModalFamily> = None;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for d in 0..cfg.draws() {
        let data = initial_data(cfg, &basis, n, &mut rng)?;
        if family.is_none() {
            family = Some(family_for(cfg, &p, &data)?);
        }
        let fam = family.as_ref().expect("built above");
        let g = gram.as_ref().map(|g| restrict_gram(g, &data));
        let r = observability_ratio(&data, fam, t, g.as_ref())?;
        let (c_lo, c_hi) = family_frame_bounds(&data, fam, t)?;
        let (w_lo, w_hi) = trace_weight_bounds(&data, fam)?;
        let _ = writeln!(table, "{d},{r:.15e},{:.15e},{:.15e}", c_lo * w_lo, c_hi * w_hi);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    out.csv("observe.csv", UNITS_TIME, &table)?;
    Ok(format!("{} draws, ratios in [{lo:.6e}, {hi:.6e}]", cfg.draws()))
}

pub fn localize(cfg: &ExperimentConfig, out: &mut Output) -> CommandResult {
    let p = modal_params(cfg)?;
    let region = cfg.region()?;
    let degrees = cfg.degrees()?;
    let t = cfg.time()?;
    let rows = localized_failure_demo(&p, &region, &degrees, t)?;
    let mut table = String::from("degree,cap_mass,full_ratio,ratio\n");
    for r in &rows {
        let _ = writeln!(table, "{},{:.15e},{:.15e},{:.15e}", r.degree, r.cap_mass, r.full_ratio, r.ratio);
    }
    out.csv("localize.csv", UNITS_TIME, &table)?;
    let band = band_limited_constant(&region, &degrees)?;
    let mut table = String::from("degree,bandwidth,lambda_min,floor_limited\n");
    for r in &band.rows {
        let _ = writeln!(table, "{},{},{:.15e},{}", r.degree, r.bandwidth, r.lambda_min, r.floor_limited);
    }
    out.csv("band_limited.csv", "dimensionless; lambda_min of the normalized-measure cap Gram", &table)?;
    out.json("localize.json", UNITS_TIME, json!({"localized": rows, "band_limited": band}))?;
    let plot = Plot {
        title: "cap observation of sectoral data",
        x_label: "degree l",
        y_label: "ratio",
        series: vec![("ratio".into(), rows.iter().map(|r| (r.degree as f64, r.ratio)).collect())],
        vertical: None,
        log_y: true,
    };
    out.svg("localize.svg", &plot.render())?;
    Ok(format!(
        "ratio {:.3e} at l = {} down to {:.3e} at l = {}; band fit slope {:.3}, R^2 {:.4}",
        rows[0].ratio,
        rows[0].degree,
        rows[rows.len() - 1].ratio,
        rows[rows.len() - 1].degree,
        band.slope,
        band.r_squared
    ))
}

pub fn design(cfg: &ExperimentConfig, out: &mut Output) -> CommandResult {
    let (_, design) = build_design(cfg)?;
    out.json("design.json", "dimensionless; weights are time fractions", design.to_json())?;
    Ok(format!(
        "{} rotations, residual {:.3e}, {}",
        design.rotations.len(),
        design.residual,
        if design.accepted { "accepted" } else { "rejected" }
    ))
}

pub fn schedule(cfg: &ExperimentConfig, out: &mut Output, seed: Option<u64>) -> CommandResult {
    let p = modal_params(cfg)?;
    let (basis, design) = build_design(cfg)?;
    let t0 = cfg.period()?;
    let sched = realize_schedule(&design.weights, t0, cfg.micro())?;
    out.json("design.json", "dimensionless; weights are time fractions", design.to_json())?;
    out.csv("schedule.csv", UNITS_TIME, &sched.to_csv())?;
    let mut one = String::from("t_start,t_end,rotation_index\n");
    for s in &sched.one_cycle {
        let _ = writeln!(one, "{:.15e},{:.15e},{}", s.start, s.end, s.index);
    }
    out.csv("one_cycle.csv", UNITS_TIME, &one)?;
    let n = cfg.modal_truncation()?;
    let periods = cfg.times.periods.unwrap_or(1).max(1);
    let mut rng = rng(seed);
    let mut table = String::from("draw,period,ratio,lower_bound\n");
    let mut family: Option<ModalFamily> = None;
    let mut failures = 0;
    for d in 0..cfg.draws() {
        let data = initial_data(cfg, &basis, n, &mut rng)?;
        if family.is_none() {
            family = Some(family_for(cfg, &p, &data)?);
        }
        let fam = family.as_ref().expect("built above");
        let check = moving_observability_check(&design, &sched, &data, fam, &basis, periods)?;
        for (i, r) in check.per_period_ratios.iter().enumerate() {
            let _ = writeln!(table, "{d},{},{r:.15e},{:.15e}", i + 1, check.lower_bound);
        }
        if !check.passes {
            failures += 1;
        }
    }
    out.csv("moving_check.csv", UNITS_TIME, &table)?;
    Ok(format!(
        "{} slots, design residual {:.3e}, {} of {} draws below the bound",
        sched.slots.len(),
        design.residual,
        failures,
        cfg.draws()
    ))
}

pub fn cesaro(cfg: &ExperimentConfig, out: &mut Output, seed: Option<u64>) -> CommandResult {
    let p = modal_params(cfg)?;
    if cfg.manifold()? != Manifold::Sphere2 {
        return Err(CliError::Config("the Cesaro driver runs on the sphere".into()));
    }
    let basis = basis(cfg)?;
    let region = cfg.region()?;
    let n = cfg.modal_truncation()?;
    let blocks = cfg.times.blocks.ok_or_else(|| CliError::Config("missing required key `times.blocks`".into()))?;
    let t0 = cfg.period()?;
    let mut rng = rng(seed);
    let data = initial_data(cfg, &basis, n, &mut rng)?;
    let family = family_for(cfg, &p, &data)?;
    // (l + 1)^2 <= dimension limit
    let max_degree = ((DEFAULT_MAX_DIMENSION as f64).sqrt() as usize).saturating_sub(1);
    let report = cesaro_protocol(&region, &data, &family, &basis, blocks, t0, cfg.micro(), cfg.delta()?, max_degree)?;
    out.csv("cesaro.csv", UNITS_TIME, &report.to_csv())?;
    out.json("cesaro.json", UNITS_TIME, serde_json::to_value(&report).expect("serializable"))?;
    Ok(format!(
        "{} blocks, N_delta = {}, truncated blocks: {:?}",
        blocks,
        report.n_delta.map_or_else(|| "not reached".into(), |v| v.to_string()),
        report.truncated_blocks
    ))
}

pub fn control(cfg: &ExperimentConfig, out: &mut Output, seed: Option<u64>) -> CommandResult {
    let p = modal_params(cfg)?;
    let basis = basis(cfg)?;
    let n = cfg.modal_truncation()?;
    let t = cfg.time()?;
    let mut rng = rng(seed);
    let target = initial_data(cfg, &basis, n, &mut rng)?;
    let family = family_for(cfg, &p, &target)?;
    let result = hum_control(&target, &family, t)?;
    out.json("control.json", "dimensionless; control coefficients of exp(i w t), norm in L^2(0,T)", serde_json::to_value(&result).expect("serializable"))?;
    Ok(format!("control norm {:.6e}, steering residual {:.3e}", result.norm, result.residual))
}
