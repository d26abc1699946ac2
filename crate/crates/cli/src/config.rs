//! Run configuration: one TOML file drives every subcommand.

use pressure_transport::pressure::{Amplitude, Mode, PressureSpec};
use pressure_transport::torus::{Grid, TorusPoint};
use pressure_transport::transport::DiscreteMeasure;
use serde::Deserialize;
use std::path::Path;

/// Validation failure: maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub grid: GridConfig,
    #[serde(default)]
    pub pressure: PressureConfig,
    #[serde(default)]
    pub measures: Option<MeasuresConfig>,
    #[serde(default)]
    pub action: Option<ActionConfig>,
    #[serde(default)]
    pub hj: Option<HjConfig>,
    #[serde(default)]
    pub duality: Option<DualityConfig>,
    #[serde(default)]
    pub flow: Option<FlowConfig>,
    #[serde(default)]
    pub norm: Option<NormConfig>,
}

fn default_seed() -> u64 {
    7
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub m: usize,
    pub time_steps: usize,
    pub horizon: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureConfig {
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub modes: Vec<ModeConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub k: Vec<i64>,
    #[serde(default)]
    pub a: Option<AmplitudeConfig>,
    #[serde(default)]
    pub b: Option<AmplitudeConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum AmplitudeConfig {
    Constant { value: f64 },
    Poly { coeffs: Vec<f64> },
    Cosine { amp: f64, omega: f64, phase: f64 },
}

impl AmplitudeConfig {
    fn build(&self) -> Result<Amplitude, ConfigError> {
        Ok(match self {
            AmplitudeConfig::Constant { value } => Amplitude::Constant(*value),
            AmplitudeConfig::Poly { coeffs } => {
                if coeffs.len() > 4 {
                    return err("polynomial amplitudes are limited to cubic order");
                }
                Amplitude::Poly(coeffs.clone())
            }
            AmplitudeConfig::Cosine { amp, omega, phase } => {
                Amplitude::Cosine { amp: *amp, omega: *omega, phase: *phase }
            }
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasuresConfig {
    pub mu0: MeasureSource,
    pub mu1: MeasureSource,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MeasureSource {
    Inline { atoms: Vec<AtomConfig> },
    Csv { csv: String },
    Random { random_atoms: usize, atom_seed: Option<u64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub x: Vec<f64>,
    pub w: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionConfig {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t1: f64,
    pub t2: f64,
    #[serde(default)]
    pub node_count: Option<usize>,
    #[serde(default)]
    pub emit_path: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjConfig {
    #[serde(default = "default_direction")]
    pub direction: String,
    pub phi0: Phi0Config,
}

fn default_direction() -> String {
    "forward".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Phi0Config {
    Fourier { modes: Vec<FourierCoeff> },
    Csv { csv: String },
    Constant { constant: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierCoeff {
    pub k: Vec<i64>,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualityConfig {
    #[serde(default)]
    pub eps_rev: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default)]
    pub t1: Option<f64>,
    #[serde(default)]
    pub t2: Option<f64>,
    #[serde(default)]
    pub seeds_csv: Option<String>,
    /// Artifact directory of a previous `duality` run.
    #[serde(default)]
    pub duality_dir: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormConfig {
    #[serde(default)]
    pub orbits_csv: Option<String>,
    #[serde(default = "default_rayleigh_modes")]
    pub rayleigh_modes: usize,
    #[serde(default)]
    pub tube_alpha: Option<f64>,
    #[serde(default = "default_psi_eps")]
    pub psi_eps: Vec<f64>,
    #[serde(default = "default_omega")]
    pub omega: f64,
}

fn default_rayleigh_modes() -> usize {
    64
}

fn default_psi_eps() -> Vec<f64> {
    vec![0.1, 0.01]
}

fn default_omega() -> f64 {
    1.3
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<(RunConfig, String), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig =
            toml::from_str(&text).map_err(|e| ConfigError(format!("parse error: {e}")))?;
        config.validate()?;
        Ok((config, text))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.dimension == 0 || self.dimension > 3 {
            return err(format!("dimension must be 1..=3, got {}", self.dimension));
        }
        if self.grid.m < 4 {
            return err(format!("grid.m must be at least 4, got {}", self.grid.m));
        }
        if self.grid.time_steps < 2 {
            return err(format!("grid.time_steps must be at least 2, got {}", self.grid.time_steps));
        }
        if !(self.grid.horizon > 0.0) {
            return err(format!("grid.horizon must be positive, got {}", self.grid.horizon));
        }
        for mode in &self.pressure.modes {
            if mode.k.len() != self.dimension {
                return err(format!(
                    "pressure mode wavevector {:?} does not match dimension {}",
                    mode.k, self.dimension
                ));
            }
        }
        if let Some(norm) = &self.norm {
            let upper = 1.0 + 1.0 / (self.dimension as f64 + 1.0);
            if !(norm.omega > 1.0 && norm.omega < upper) {
                return err(format!(
                    "norm.omega must satisfy 1 < omega < {upper}, got {}",
                    norm.omega
                ));
            }
            if norm.psi_eps.iter().any(|e| *e <= 0.0) {
                return err("norm.psi_eps entries must be positive");
            }
            if let Some(alpha) = norm.tube_alpha {
                if !(alpha > 0.0) {
                    return err(format!("norm.tube_alpha must be positive, got {alpha}"));
                }
            }
        }
        if let Some(action) = &self.action {
            if action.x.len() != self.dimension || action.y.len() != self.dimension {
                return err("action endpoints must match the configured dimension");
            }
            if !(action.t1 < action.t2) {
                return err(format!("action needs t1 < t2, got [{}, {}]", action.t1, action.t2));
            }
        }
        if let Some(hj) = &self.hj {
            if hj.direction != "forward" && hj.direction != "backward" {
                return err(format!("hj.direction must be forward or backward, got {}", hj.direction));
            }
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid, ConfigError> {
        Grid::new(self.dimension, self.grid.m, self.grid.horizon, self.grid.time_steps)
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn build_pressure(&self) -> Result<PressureSpec, ConfigError> {
        let modes = self
            .pressure
            .modes
            .iter()
            .map(|m| {
                Ok(Mode {
                    wavevector: m.k.clone(),
                    cos_amp: m.a.as_ref().map(|a| a.build()).transpose()?.unwrap_or(Amplitude::zero()),
                    sin_amp: m.b.as_ref().map(|b| b.build()).transpose()?.unwrap_or(Amplitude::zero()),
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        PressureSpec::new(self.dimension, self.pressure.offset, modes, self.grid.horizon)
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn build_measure(
        &self,
        source: &MeasureSource,
        base_dir: &Path,
        fallback_seed: u64,
    ) -> Result<DiscreteMeasure, ConfigError> {
        match source {
            MeasureSource::Inline { atoms } => {
                let atoms = atoms
                    .iter()
                    .map(|a| {
                        if a.x.len() != self.dimension {
                            return err(format!("atom {:?} does not match dimension", a.x));
                        }
                        let p = TorusPoint::wrap(&a.x).map_err(|e| ConfigError(e.to_string()))?;
                        Ok((p, a.w))
                    })
                    .collect::<Result<Vec<_>, ConfigError>>()?;
                DiscreteMeasure::new(atoms).map_err(|e| ConfigError(e.to_string()))
            }
            MeasureSource::Csv { csv } => {
                crate::io::read_measure_csv(&base_dir.join(csv), self.dimension)
                    .map_err(|e| ConfigError(e.to_string()))
            }
            MeasureSource::Random { random_atoms, atom_seed } => {
                DiscreteMeasure::random(self.dimension, *random_atoms, atom_seed.unwrap_or(fallback_seed))
                    .map_err(|e| ConfigError(e.to_string()))
            }
        }
    }
}
