//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use spinhall_core::{BasisKind, ModelKind};

use crate::config::{Format, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "spinhall", version, about = "Berry curvature, spin Chern numbers and spin Hall conductivity of the continuum Kane-Mele model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Band energies E1..E4 over a square momentum grid (CSV: px,py,E1,E2,E3,E4).
    Spectrum(CommonArgs),
    /// Per-sector Berry curvature G^xy over a square momentum grid.
    Curvature(CommonArgs),
    /// Per-sector Chern numbers and the spin Chern number (JSON).
    Chern(CommonArgs),
    /// Spin Hall conductivity report with a linear-response cross-check (JSON).
    Conductivity(CommonArgs),
    /// Semiclassical trajectory of one band (CSV: t,x,y,px,py).
    Trajectory(TrajectoryArgs),
    /// Built-in invariant suite; exits 3 if any invariant fails.
    Check(CheckArgs),
}

fn parse_tag<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok([a.parse().map_err(|e| format!("`{a}`: {e}"))?, b.parse().map_err(|e| format!("`{b}`: {e}"))?]),
        _ => Err(format!("expected two comma-separated numbers, got `{s}`")),
    }
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    parse_tag(s)
}

fn parse_basis(s: &str) -> Result<BasisKind, String> {
    parse_tag(s)
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// km-so | km-rashba
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelKind>,
    /// fw | phi | psi (default: fw for km-so, psi for km-rashba)
    #[arg(long, value_parser = parse_basis)]
    pub basis: Option<BasisKind>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta_so: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_r: Option<f64>,
    #[arg(long)]
    pub v_f: Option<f64>,
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub charge: Option<f64>,
    /// Electric field as `ex,ey`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub e_field: Option<[f64; 2]>,
    #[arg(long, allow_negative_numbers = true)]
    pub b_field: Option<f64>,
    /// Zero-temperature Fermi energy; omitted means fully occupied positive bands.
    #[arg(long, allow_negative_numbers = true)]
    pub fermi_energy: Option<f64>,
    /// Half-width of the momentum grid.
    #[arg(long)]
    pub grid_p_max: Option<f64>,
    /// Grid points per axis (odd, at least 3).
    #[arg(long)]
    pub points: Option<usize>,
    /// Upper limit of the finite radial integral.
    #[arg(long)]
    pub quad_p_max: Option<f64>,
    /// Absolute tolerance of each radial integral.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Output file (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Accept Δ_SO ≤ 2λ_R.
    #[arg(long)]
    pub allow_out_of_regime: bool,
}

impl CommonArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($flag:expr => $field:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v;
                }
            };
        }
        set!(self.model => cfg.model);
        if let Some(b) = self.basis {
            cfg.basis = Some(b);
        }
        if let Some(d) = self.delta_so {
            cfg.delta_so = Some(d);
        }
        set!(self.lambda_r => cfg.lambda_r);
        set!(self.v_f => cfg.v_f);
        set!(self.hbar => cfg.hbar);
        set!(self.charge => cfg.charge);
        set!(self.e_field => cfg.e_field);
        set!(self.b_field => cfg.b_field);
        if let Some(e) = self.fermi_energy {
            cfg.fermi_energy = Some(e);
        }
        set!(self.grid_p_max => cfg.grid.p_max);
        set!(self.points => cfg.grid.points);
        if let Some(p) = self.quad_p_max {
            cfg.quad.p_max = Some(p);
        }
        set!(self.tolerance => cfg.quad.tolerance);
        if let Some(o) = &self.output {
            cfg.output.path = Some(o.clone());
        }
        if let Some(f) = self.format {
            cfg.output.format = Some(f);
        }
        cfg.allow_out_of_regime |= self.allow_out_of_regime;
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// up_K | down_K | up_Kp | down_Kp
    #[arg(long)]
    pub band: Option<String>,
    /// Initial position `x,y`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub x0: Option<[f64; 2]>,
    /// Initial momentum `px,py`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub p0: Option<[f64; 2]>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Local error tolerance of the integrator.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl TrajectoryArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let t = &mut cfg.trajectory;
        if let Some(b) = &self.band {
            t.band = b.clone();
        }
        if let Some(x) = self.x0 {
            t.x0 = x;
        }
        if let Some(p) = self.p0 {
            t.p0 = p;
        }
        if let Some(v) = self.t_end {
            t.t_end = v;
        }
        if let Some(v) = self.tol {
            t.tol = v;
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Output file (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Coarser grids and fewer random cases.
    #[arg(long)]
    pub quick: bool,
    /// Run only the named invariant (repeatable).
    #[arg(long = "only")]
    pub only: Vec<String>,
}
