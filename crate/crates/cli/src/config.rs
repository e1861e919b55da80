//! Run configuration: JSON file, command-line overrides, validation.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spinhall_core::model::P_MIN;
use spinhall_core::transport::QuadratureConfig;
use spinhall_core::{BasisKind, Error as CoreError, ModelKind, ModelParams, SectorLabel};

use crate::cli::CommonArgs;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Half-width of the square momentum grid `[−p_max, p_max]²`.
    pub p_max: f64,
    /// Points per axis; odd so the grid is symmetric about the origin.
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { p_max: 3.0, points: 41 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadConfig {
    /// Upper limit of the finite radial integral; `null` means `50·max(Δ_SO, λ_R, 1)/v_F`.
    pub p_max: Option<f64>,
    pub tolerance: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { p_max: None, tolerance: 1e-9, max_panels: 400 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    pub band: String,
    pub x0: [f64; 2],
    pub p0: [f64; 2],
    pub t_end: f64,
    pub tol: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self { band: "up_K".into(), x0: [0.0, 0.0], p0: [0.3, 0.0], t_end: 10.0, tol: 1e-8 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Effective configuration of one run, echoed into every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelKind,
    /// `null` selects `fw` for `km-so` and `psi` for `km-rashba`.
    pub basis: Option<BasisKind>,
    pub delta_so: Option<f64>,
    pub lambda_r: f64,
    pub v_f: f64,
    pub hbar: f64,
    pub charge: f64,
    pub e_field: [f64; 2],
    pub b_field: f64,
    pub fermi_energy: Option<f64>,
    pub allow_out_of_regime: bool,
    pub grid: GridConfig,
    pub quad: QuadConfig,
    pub trajectory: TrajectoryConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::KmSo,
            basis: None,
            delta_so: None,
            lambda_r: 0.0,
            v_f: 1.0,
            hbar: 1.0,
            charge: 1.0,
            e_field: [0.0, 0.0],
            b_field: 0.0,
            fermi_energy: None,
            allow_out_of_regime: false,
            grid: GridConfig::default(),
            quad: QuadConfig::default(),
            trajectory: TrajectoryConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Io { path: PathBuf, source: std::io::Error },
    Malformed { path: PathBuf, line: usize, column: usize, message: String },
    Invalid { field: &'static str, message: String },
    Core(CoreError),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, source } => write!(f, "cannot read config {}: {source}", path.display()),
            ConfigError::Malformed { path, line, column, message } => {
                write!(f, "malformed config {} at line {line}, column {column}: {message}", path.display())
            }
            ConfigError::Invalid { field, message } => write!(f, "invalid config field `{field}`: {message}"),
            ConfigError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<CoreError> for ConfigError {
    fn from(e: CoreError) -> Self {
        ConfigError::Core(e)
    }
}

pub fn load_file(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Malformed { path: path.to_owned(), line: e.line(), column: e.column(), message: e.to_string() })
}

/// Reads the optional config file, applies flag overrides, fills defaults and validates.
pub fn load_config(args: &CommonArgs, extra: impl FnOnce(&mut RunConfig)) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &args.config {
        Some(path) => load_file(path)?,
        None => RunConfig::default(),
    };
    args.apply(&mut cfg);
    extra(&mut cfg);
    cfg.basis = Some(cfg.basis.unwrap_or(match cfg.model {
        ModelKind::KmSo => BasisKind::Fw,
        ModelKind::KmRashba => BasisKind::Psi,
    }));
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn basis(&self) -> BasisKind {
        self.basis.unwrap_or(BasisKind::Fw)
    }

    pub fn params(&self) -> Result<ModelParams<f64>, ConfigError> {
        let delta = self.delta_so.ok_or(ConfigError::Invalid { field: "delta_so", message: "required (config file or --delta-so)".into() })?;
        let mut p = ModelParams::new(delta, self.lambda_r)?.with_v_f(self.v_f).with_e_field(self.e_field).with_b_field(self.b_field);
        p.hbar = self.hbar;
        p.charge = self.charge;
        p.fermi_energy = self.fermi_energy;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let params = self.params()?;
        if !params.spin_hall_regime() && !self.allow_out_of_regime {
            return Err(CoreError::RegimeViolation { delta_so: params.delta_so, twice_lambda: 2.0 * params.lambda_r }.into());
        }
        if self.grid.points < 3 || self.grid.points % 2 == 0 {
            return Err(ConfigError::Invalid { field: "grid.points", message: format!("must be odd and at least 3, got {}", self.grid.points) });
        }
        if !(self.grid.p_max > P_MIN) {
            return Err(ConfigError::Invalid { field: "grid.p_max", message: format!("must exceed {P_MIN}, got {}", self.grid.p_max) });
        }
        if let Some(p) = self.quad.p_max {
            if !(p > P_MIN) {
                return Err(ConfigError::Invalid { field: "quad.p_max", message: format!("must exceed {P_MIN}, got {p}") });
            }
        }
        if !(self.quad.tolerance > 0.0) {
            return Err(ConfigError::Invalid { field: "quad.tolerance", message: "must be positive".into() });
        }
        if SectorLabel::from_key(&self.trajectory.band).is_none() {
            return Err(ConfigError::Invalid { field: "trajectory.band", message: format!("`{}` is not one of up_K, down_K, up_Kp, down_Kp", self.trajectory.band) });
        }
        if !(self.trajectory.tol > 0.0) {
            return Err(ConfigError::Invalid { field: "trajectory.tol", message: "must be positive".into() });
        }
        Ok(())
    }

    pub fn quadrature(&self, params: &ModelParams<f64>) -> QuadratureConfig<f64> {
        let mut q = QuadratureConfig::for_params(params);
        if let Some(p) = self.quad.p_max {
            q.p_max = p;
        }
        q.tolerance = self.quad.tolerance;
        q.max_panels = self.quad.max_panels;
        q
    }

    pub fn format_or(&self, default: Format) -> Format {
        self.output.format.unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"model":"km-so","delta_so":0.5}"#).unwrap();
        assert_eq!((cfg.v_f, cfg.hbar, cfg.charge), (1.0, 1.0, 1.0));
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn regime_violation() {
        let cfg: RunConfig = serde_json::from_str(r#"{"delta_so":0.2,"lambda_r":0.15}"#).unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Core(CoreError::RegimeViolation { .. }))));
        let allowed = RunConfig { allow_out_of_regime: true, ..cfg };
        assert!(allowed.validate().is_ok());
    }

    #[test]
    fn even_grid_is_rejected() {
        let mut cfg: RunConfig = serde_json::from_str(r#"{"delta_so":0.5}"#).unwrap();
        cfg.grid.points = 40;
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid { field: "grid.points", .. })));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"delta":0.5}"#).is_err());
    }
}
