mod cli;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;
use rayon::prelude::*;
use serde_json::{json, Value};

use spinhall_core::checks::{self, CheckSettings};
use spinhall_core::model::{self, ModelParams};
use spinhall_core::transport::{self, CurrentOperator, Distribution, PolarGrid};
use spinhall_core::{berry, semiclassics, Error as CoreError, SectorLabel};

use cli::{CheckArgs, Cli, Command, CommonArgs, TrajectoryArgs};
use config::{load_config, ConfigError, Format, RunConfig};
use output::{Table, Writer};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

enum Failure {
    Config(String),
    Numeric(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Core(c) => c.into(),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        use CoreError::*;
        match e {
            InvalidParameter { .. }
            | RequiresZeroRashba { .. }
            | UnsupportedCombination { .. }
            | BasisNotSpinDiagonal { .. }
            | GapClosing { .. }
            | RegimeViolation { .. }
            | UnsupportedDimension(_)
            | DimensionMismatch { .. }
            | MissingSector(_) => Failure::Config(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("cannot write output: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let result = match &cli.command {
        Command::Spectrum(args) => spectrum(args),
        Command::Curvature(args) => curvature(args),
        Command::Chern(args) => chern(args),
        Command::Conductivity(args) => conductivity(args),
        Command::Trajectory(args) => trajectory(args),
        Command::Check(args) => check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("SPINHALL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| format!("SPINHALL_THREADS must be a positive integer, got `{raw}`"))?;
    if n == 0 {
        return Err("SPINHALL_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn convention() -> Value {
    json!({
        "epsilon_xy": 1,
        "orientation_sign": transport::ORIENTATION_SIGN,
        "index_ordering": transport::INDEX_ORDERING,
        "connection": transport::CONNECTION_CONVENTION,
        "spin_labels": transport::SPIN_LABEL_CONVENTION,
    })
}

fn setup(args: &CommonArgs) -> Result<(RunConfig, ModelParams<f64>), Failure> {
    let cfg = load_config(args, |_| {})?;
    let params = cfg.params()?;
    Ok((cfg, params))
}

fn grid_points(cfg: &RunConfig) -> Vec<[f64; 2]> {
    let n = cfg.grid.points;
    let ax: Vec<f64> = (0..n).map(|i| cfg.grid.p_max * (2.0 * i as f64 / (n - 1) as f64 - 1.0)).collect();
    ax.iter().flat_map(|&x| ax.iter().map(move |&y| [x, y])).collect()
}

/// Evaluates a row per grid point in parallel, keeping row-major order.
fn grid_rows<F>(cfg: &RunConfig, row: F) -> Result<Vec<Vec<f64>>, Failure>
where
    F: Fn([f64; 2]) -> Result<Vec<f64>, CoreError> + Sync,
{
    grid_points(cfg)
        .par_iter()
        .map(|&p| row(p).map(|mut r| {
            r.splice(0..0, p);
            r
        }))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::from)
}

fn spectrum(args: &CommonArgs) -> Outcome {
    let (cfg, params) = setup(args)?;
    let rows = grid_rows(&cfg, |p| Ok(model::analytic_spectrum(&params, p).energies.to_vec()))?;
    let table = Table { columns: vec!["px", "py", "E1", "E2", "E3", "E4"].into_iter().map(String::from).collect(), rows };
    Writer::new(&cfg, convention()).table(&table, cfg.format_or(Format::Csv))?;
    Ok(())
}

/// `NaN` where the closed forms are undefined (the origin for Rashba forms).
fn curvature_or_nan(r: Result<f64, CoreError>) -> Result<f64, CoreError> {
    match r {
        Err(CoreError::MomentumAtOrigin { .. }) => Ok(f64::NAN),
        other => other,
    }
}

fn curvature(args: &CommonArgs) -> Outcome {
    let (cfg, params) = setup(args)?;
    let model = cfg.model;
    let basis = cfg.basis();
    // validate the combination once, away from the origin
    berry::analytic_curvature(model, basis, &params, [cfg.grid.p_max, 0.0])?;
    let mut columns: Vec<String> = vec!["px".into(), "py".into()];
    let table = if basis.spin_diagonal() {
        let positions: Vec<(SectorLabel, usize)> = SectorLabel::ALL
            .iter()
            .map(|&s| berry::positive_spin_position(&params, basis, s.valley, s.spin).map(|k| (s, k)))
            .collect::<Result<_, _>>()?;
        columns.extend(positions.iter().map(|(s, _)| format!("G_{}", s.key())));
        let rows = grid_rows(&cfg, |p| {
            positions
                .iter()
                .map(|&(_, k)| curvature_or_nan(berry::analytic_curvature(model, basis, &params, p).map(|g| g[(k, k)].re)))
                .collect()
        })?;
        Table { columns, rows }
    } else {
        // the energy basis is valley-independent; report the 2×2 block entries
        columns.extend(["G00", "G01_re", "G01_im", "G11"].map(String::from));
        let rows = grid_rows(&cfg, |p| match berry::analytic_curvature(model, basis, &params, p) {
            Ok(g) => Ok(vec![g[(0, 0)].re, g[(0, 1)].re, g[(0, 1)].im, g[(1, 1)].re]),
            Err(CoreError::MomentumAtOrigin { .. }) => Ok(vec![f64::NAN; 4]),
            Err(e) => Err(e),
        })?;
        Table { columns, rows }
    };
    let mut conv = convention();
    conv["curvature_values"] = json!("unoriented, per positive-energy band");
    Writer::new(&cfg, conv).table(&table, cfg.format_or(Format::Csv))?;
    Ok(())
}

fn distribution(cfg: &RunConfig) -> Distribution<f64> {
    match cfg.fermi_energy {
        Some(e) => Distribution::fermi(e),
        None => Distribution::unity(),
    }
}

fn topology(cfg: &RunConfig, params: &ModelParams<f64>) -> Result<Value, Failure> {
    let report = transport::spin_hall_conductivity(params, cfg.model, cfg.basis(), &distribution(cfg), &cfg.quadrature(params))?;
    serde_json::to_value(report).map_err(|e| Failure::Numeric(e.to_string()))
}

fn chern(args: &CommonArgs) -> Outcome {
    let (cfg, params) = setup(args)?;
    let mut report = topology(&cfg, &params)?;
    report["config"] = serde_json::to_value(&cfg).expect("config serializes");
    Writer::new(&cfg, convention()).json(&report)?;
    Ok(())
}

fn conductivity(args: &CommonArgs) -> Outcome {
    let (cfg, params) = setup(args)?;
    let mut report = topology(&cfg, &params)?;
    let probe = if cfg.e_field == [0.0, 0.0] { [0.1, 0.0] } else { cfg.e_field };
    let driven = params.clone().with_e_field(probe);
    let dist = distribution(&cfg);
    // every sector energy is at least v_F|p|, so E_F/v_F bounds the Fermi momenta
    let cutoff = dist.fermi_energy.map(|e| e.abs() / params.v_f);
    let grid = PolarGrid::new(&cfg.quadrature(&params), cutoff, 8);
    let current = transport::spin_current_density(&driven, cfg.model, cfg.basis(), CurrentOperator::Spin, &dist, &grid)?;
    let sigma = transport::ORIENTATION_SIGN * transport::sigma_from_current(current, &driven)?;
    report["linear_response"] = json!({
        "e_field": probe,
        "spin_current": current,
        "sigma_sh_units_e_over_2pi": sigma,
    });
    report["config"] = serde_json::to_value(&cfg).expect("config serializes");
    Writer::new(&cfg, convention()).json(&report)?;
    Ok(())
}

fn trajectory(args: &TrajectoryArgs) -> Outcome {
    let cfg = load_config(&args.common, |c| args.apply(c))?;
    let params = cfg.params()?;
    let t = &cfg.trajectory;
    let band = SectorLabel::from_key(&t.band).expect("validated band");
    let tr = semiclassics::integrate_trajectory(&params, cfg.model, cfg.basis(), band, t.x0, t.p0, (0.0, t.t_end), t.tol)?;
    let rows = tr.samples.iter().map(|s| vec![s.t, s.x[0], s.x[1], s.p[0], s.p[1]]).collect();
    let table = Table { columns: ["t", "x", "y", "px", "py"].map(String::from).to_vec(), rows };
    let mut conv = convention();
    conv["integrator"] = json!({
        "method": "dormand-prince 5(4)",
        "accepted_steps": tr.stats.accepted_steps,
        "rejected_steps": tr.stats.rejected_steps,
        "max_scaled_error": tr.stats.max_scaled_error,
        "max_interband": tr.stats.max_interband,
    });
    Writer::new(&cfg, conv).table(&table, cfg.format_or(Format::Csv))?;
    Ok(())
}

fn check(args: &CheckArgs) -> Outcome {
    let settings = if args.quick { CheckSettings::quick() } else { CheckSettings::default() };
    let names: Vec<&'static str> = checks::check_names().into_iter().map(|(_, n)| n).filter(|n| args.only.is_empty() || args.only.iter().any(|o| o == n)).collect();
    if let Some(unknown) = args.only.iter().find(|o| !names.contains(&o.as_str())) {
        return Err(Failure::Config(format!("unknown invariant `{unknown}`")));
    }
    let outcomes: Vec<_> = names.par_iter().filter_map(|n| checks::run_check(n, &settings)).collect();
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let text = match args.format.unwrap_or(Format::Csv) {
        Format::Json => serde_json::to_string_pretty(&json!({ "checks": outcomes, "failed": failed, "convention": convention() })).expect("serializable") + "\n",
        Format::Csv => {
            let mut s = String::new();
            for o in &outcomes {
                let op = match o.comparison {
                    checks::Comparison::Below => "<",
                    checks::Comparison::AtLeast => ">=",
                };
                let status = if o.passed { "PASS" } else { "FAIL" };
                match &o.error {
                    Some(e) => s.push_str(&format!("{status} {}/{}: error: {e}\n", o.module, o.name)),
                    None => s.push_str(&format!("{status} {}/{}: {:?} (required {op} {:?})\n", o.module, o.name, o.measured, o.threshold)),
                }
            }
            s.push_str(&format!("{} of {} invariants passed\n", outcomes.len() - failed, outcomes.len()));
            s
        }
    };
    output::emit(args.output.as_deref(), &text)?;
    if failed > 0 {
        return Err(Failure::Numeric(format!("{failed} invariant(s) failed")));
    }
    Ok(())
}
