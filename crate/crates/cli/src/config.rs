use serde::Deserialize;

use gasgiant::modal::BoundaryCondition;
use gasgiant::tangential::{Manifold, Region};
use gasgiant::GasGiantParams;

use crate::error::CliError;

/// One experiment. Commands read the fields they need and reject missing ones.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ParamsConfig,
    #[serde(default)]
    pub manifold: Option<Manifold>,
    /// Normal modes per tangential mode.
    #[serde(default)]
    pub modal_truncation: Option<usize>,
    /// Largest tangential degree (sphere) or frequency (circle).
    #[serde(default)]
    pub tangential_degree: Option<usize>,
    #[serde(default)]
    pub omegas: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub boundary: Option<BoundaryCondition>,
    #[serde(default)]
    pub region: Option<RegionConfig>,
    #[serde(default)]
    pub times: TimesConfig,
    #[serde(default)]
    pub frame: Option<FrameConfig>,
    #[serde(default)]
    pub degrees: Option<Vec<usize>>,
    #[serde(default)]
    pub candidates: Option<CandidateConfig>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub micro: Option<usize>,
    #[serde(default)]
    pub draws: Option<usize>,
    #[serde(default)]
    pub data: Option<Vec<ModeConfig>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub n: Option<u32>,
    #[serde(default)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionConfig {
    Cap { center: [f64; 3], radius: f64 },
    Arc { center: f64, half_width: f64 },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimesConfig {
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub t0: Option<f64>,
    #[serde(default)]
    pub periods: Option<usize>,
    #[serde(default)]
    pub blocks: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    /// Explicit frequency list; otherwise the 1D model frequencies.
    #[serde(default)]
    pub frequencies: Option<Vec<f64>>,
    #[serde(default)]
    pub truncations: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CandidateConfig {
    Tetrahedral,
    Octahedral,
    Icosahedral,
    GaussProduct { t: usize },
    CircleGrid { count: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub index: usize,
    pub f0: Vec<f64>,
    pub f1: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub json: bool,
    #[serde(default)]
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            csv: true,
            json: true,
            svg: false,
        }
    }
}

fn default_dir() -> String {
    "out".into()
}

fn yes() -> bool {
    true
}

fn missing(key: &str) -> CliError {
    CliError::Config(format!("missing required key `{key}`"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn params(&self) -> Result<GasGiantParams, CliError> {
        let p = self.params;
        match (p.beta, p.n, p.alpha) {
            (Some(beta), Some(n), None) => GasGiantParams::derive_constants(beta, n)
                .map_err(|e| CliError::Config(format!("params: {e}"))),
            (None, None, Some(alpha)) => GasGiantParams::from_alpha(alpha)
                .map_err(|e| CliError::Config(format!("params: {e}"))),
            _ => Err(CliError::Config(
                "params: give either `beta` and `n`, or `alpha` alone".into(),
            )),
        }
    }

    pub fn manifold(&self) -> Result<Manifold, CliError> {
        self.manifold.ok_or_else(|| missing("manifold"))
    }

    pub fn modal_truncation(&self) -> Result<usize, CliError> {
        match self.modal_truncation {
            Some(0) => Err(CliError::Config("modal_truncation must be >= 1".into())),
            Some(n) => Ok(n),
            None => Err(missing("modal_truncation")),
        }
    }

    pub fn tangential_degree(&self) -> Result<usize, CliError> {
        self.tangential_degree.ok_or_else(|| missing("tangential_degree"))
    }

    pub fn grid(&self, truncation: usize) -> usize {
        self.grid.unwrap_or((50 * truncation).max(400))
    }

    pub fn boundary(&self) -> BoundaryCondition {
        self.boundary.unwrap_or(BoundaryCondition::Dirichlet)
    }

    pub fn region(&self) -> Result<Region, CliError> {
        let r = match self.region.ok_or_else(|| missing("region"))? {
            RegionConfig::Cap { center, radius } => Region::cap(center, radius),
            RegionConfig::Arc { center, half_width } => Region::arc(center, half_width),
        };
        r.map_err(|e| CliError::Config(format!("region: {e}")))
    }

    pub fn time(&self) -> Result<f64, CliError> {
        positive(self.times.t.ok_or_else(|| missing("times.t"))?, "times.t")
    }

    pub fn period(&self) -> Result<f64, CliError> {
        positive(self.times.t0.ok_or_else(|| missing("times.t0"))?, "times.t0")
    }

    pub fn sweep(&self) -> Result<Vec<f64>, CliError> {
        let s = self.times.sweep.ok_or_else(|| missing("times.sweep"))?;
        if !(s.start > 0.0 && s.end >= s.start && s.steps >= 1) {
            return Err(CliError::Config(
                "times.sweep needs 0 < start <= end and steps >= 1".into(),
            ));
        }
        if s.steps == 1 {
            return Ok(vec![s.start]);
        }
        let h = (s.end - s.start) / (s.steps - 1) as f64;
        Ok((0..s.steps).map(|i| s.start + h * i as f64).collect())
    }

    pub fn degrees(&self) -> Result<Vec<usize>, CliError> {
        let d = self.degrees.clone().ok_or_else(|| missing("degrees"))?;
        if d.is_empty() {
            return Err(CliError::Config("degrees must not be empty".into()));
        }
        Ok(d)
    }

    pub fn epsilon(&self) -> Result<f64, CliError> {
        positive(self.epsilon.unwrap_or(gasgiant::design::DEFAULT_EPSILON), "epsilon")
    }

    pub fn delta(&self) -> Result<f64, CliError> {
        positive(self.delta.unwrap_or(0.1), "delta")
    }

    /// Default slot length is `1e-3 T_0`.
    pub fn micro(&self) -> usize {
        self.micro.unwrap_or(1000)
    }

    pub fn draws(&self) -> usize {
        self.draws.unwrap_or(1)
    }
}

fn positive(v: f64, key: &str) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("`{key}` must be finite and > 0, got {v}")))
    }
}
