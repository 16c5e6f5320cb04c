use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maxbound_cli::config::{Abscissa, GeometrySpec};
use maxbound_cli::{render, run, Command, Format, RunConfig, RunError};
use maxbound::model::ModelSpec;
use serde::de::DeserializeOwned;

/// Bounds and approximations for the maximum of smooth isotropic Gaussian
/// fields.
#[derive(Parser)]
#[command(name = "maxbound", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Density bound p̄(x) and its EPC part over an x grid.
    Bound(Flags),
    /// Tail bounds ∫_u^∞ p̄ and ∫_u^∞ pE over a u grid.
    Tail(Flags),
    /// Monte Carlo check of the tail bound on a rectangle.
    Validate(Flags),
    /// GOE eigenvalue density and E|det(G_n − ν)| over a ν grid.
    Goe(Flags),
    /// Geometric coefficients g_j.
    Geom(Flags),
    /// Second-order error exponents.
    Exponent(Flags),
}

/// Every flag overrides the config key of the same name; JSON-valued keys
/// take JSON text.
#[derive(Args)]
struct Flags {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model, e.g. '{"family":"rational","c":0.5,"beta":1.0}'.
    #[arg(long)]
    model: Option<String>,
    /// Geometry, e.g. '{"kind":"rectangle","sides":[1,1]}'.
    #[arg(long)]
    geometry: Option<String>,
    /// Abscissa, '{"min":0,"max":4,"step":0.5}' or '[1,2,3]'.
    #[arg(long)]
    abscissa: Option<String>,
    /// Matrix size for goe.
    #[arg(long)]
    n: Option<usize>,
    /// Diameter for the exponent supremum.
    #[arg(long)]
    delta: Option<f64>,
    /// Grid points per axis for validate, e.g. '[50,50]'.
    #[arg(long)]
    resolution: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn parse<T: DeserializeOwned>(key: &str, text: &str) -> Result<T, RunError> {
    serde_json::from_str(text).map_err(|e| RunError::Config(format!("--{key}: {e}")))
}

fn build_config(command: Command, f: Flags) -> Result<RunConfig, RunError> {
    let mut config = match &f.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
            let mut value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
            if let Some(obj) = value.as_object_mut() {
                obj.insert("command".into(), serde_json::to_value(command).expect("command serializes"));
            }
            serde_json::from_value(value).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::new(command),
    };
    if let Some(s) = &f.model {
        config.model = Some(parse::<ModelSpec>("model", s)?);
    }
    if let Some(s) = &f.geometry {
        config.geometry = Some(parse::<GeometrySpec>("geometry", s)?);
    }
    if let Some(s) = &f.abscissa {
        config.abscissa = Some(parse::<Abscissa>("abscissa", s)?);
    }
    if let Some(s) = &f.resolution {
        config.resolution = Some(parse::<Vec<usize>>("resolution", s)?);
    }
    if f.n.is_some() {
        config.n = f.n;
    }
    if f.delta.is_some() {
        config.delta = f.delta;
    }
    if let Some(seed) = f.seed {
        config.seed = seed;
    }
    if f.reps.is_some() {
        config.reps = f.reps;
    }
    if f.out.is_some() {
        config.out = f.out;
    }
    if let Some(format) = f.format {
        config.format = format;
    }
    config.resolve().map_err(RunError::Config)
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let (command, flags) = match cli.command {
        Sub::Bound(f) => (Command::Bound, f),
        Sub::Tail(f) => (Command::Tail, f),
        Sub::Validate(f) => (Command::Validate, f),
        Sub::Goe(f) => (Command::Goe, f),
        Sub::Geom(f) => (Command::Geom, f),
        Sub::Exponent(f) => (Command::Exponent, f),
    };
    let config = build_config(command, flags)?;
    let table = run(&config)?;
    let text = render(&config, &table);
    match &config.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| RunError::Config(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if table.failed_rows > 0 {
        return Err(RunError::Numeric(format!("{} of {} rows failed", table.failed_rows, table.rows.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("maxbound: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
