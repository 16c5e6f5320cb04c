//! Batch front end for the `maxbound` library: one run reads a
//! [`RunConfig`], sweeps an abscissa and emits a CSV or JSON-lines table
//! headed by the resolved configuration and the library version.

pub mod config;

use maxbound::asympt::{exponent_convex, z_delta_exponent, ExponentReport};
use maxbound::bounds::{default_rule, pbar_density, sphere_pbar, tail_bound};
use maxbound::geometry::GeometryKind;
use maxbound::randmat::evaluate_goe;
use maxbound::simulate::{validate_bound, FieldGrid};
use maxbound::Error;
use serde_json::{Map, Value};

pub use config::{Abscissa, Command, Format, GeometrySpec, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Why a run stopped or which rows failed; maps to exit codes 2 and 3.
#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Config(String),
    Numeric(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

/// A cell of the output table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.replace([',', '\n'], ";"),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
        }
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Rows whose computation failed; their `status` cell carries the error.
    pub failed_rows: usize,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            failed_rows: 0,
        }
    }

    /// Appends `cells` followed by a status column, or `width` NaNs and the
    /// error when the row failed.
    fn push(&mut self, lead: Vec<Cell>, result: Result<Vec<Cell>, Error>, width: usize) {
        let mut row = lead;
        match result {
            Ok(cells) => {
                row.extend(cells);
                row.push(Cell::Text("ok".into()));
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(Cell::Num(f64::NAN), width));
                row.push(Cell::Text(e.to_string()));
                self.failed_rows += 1;
            }
        }
        self.rows.push(row);
    }
}

/// Header line: library version and the resolved configuration.
pub fn header(config: &RunConfig) -> Value {
    let mut h = Map::new();
    h.insert("maxbound".into(), Value::from(VERSION));
    h.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
    Value::Object(h)
}

/// Renders the table with its header line.
pub fn render(config: &RunConfig, table: &Table) -> String {
    let head = header(config).to_string();
    let mut out = String::new();
    match config.format {
        Format::Csv => {
            out.push_str("# ");
            out.push_str(&head);
            out.push('\n');
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        Format::Json => {
            out.push_str(&head);
            out.push('\n');
            for row in &table.rows {
                let obj: Map<String, Value> =
                    table.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                out.push_str(&Value::Object(obj).to_string());
                out.push('\n');
            }
        }
    }
    out
}

fn config_err(e: impl ToString) -> RunError {
    RunError::Config(e.to_string())
}

fn abscissa(config: &RunConfig) -> Result<Vec<f64>, RunError> {
    config
        .abscissa
        .as_ref()
        .ok_or_else(|| config_err("missing abscissa"))?
        .points()
        .map_err(config_err)
}

/// Runs a resolved configuration. Per-row failures are recorded in the
/// table; errors that prevent any output are returned.
pub fn run(config: &RunConfig) -> Result<Table, RunError> {
    match config.command {
        Command::Bound => run_bound(config),
        Command::Tail => run_tail(config),
        Command::Validate => run_validate(config),
        Command::Goe => run_goe(config),
        Command::Geom => run_geom(config),
        Command::Exponent => run_exponent(config),
    }
}

fn run_bound(config: &RunConfig) -> Result<Table, RunError> {
    let m = config.build_model().map_err(config_err)?;
    let geom = config.build_geometry().map_err(config_err)?;
    let xs = abscissa(config)?;
    if geom.kind == GeometryKind::SphereSurface {
        let mut t = Table::new(&["x", "pbar", "status"]);
        for x in xs {
            let r = sphere_pbar(&m, geom.d, x, default_rule()).map(|p| vec![Cell::Num(p)]);
            t.push(vec![Cell::Num(x)], r, 1);
        }
        return Ok(t);
    }
    let mut columns = vec!["x".to_string(), "pbar".into(), "pE".into()];
    columns.extend((0..=geom.d0).map(|j| format!("principal_{j}")));
    columns.extend((0..=geom.d0).map(|j| format!("complementary_{j}")));
    columns.push("status".into());
    let width = columns.len() - 2;
    let mut t = Table {
        columns,
        rows: Vec::new(),
        failed_rows: 0,
    };
    for x in xs {
        let r = pbar_density(&m, &geom, x).map(|b| {
            let mut cells = vec![Cell::Num(b.pbar), Cell::Num(b.pe)];
            cells.extend(b.principal_by_j.iter().map(|&v| Cell::Num(v)));
            cells.extend(b.complementary_by_j.iter().map(|&v| Cell::Num(v)));
            cells
        });
        t.push(vec![Cell::Num(x)], r, width);
    }
    Ok(t)
}

fn run_tail(config: &RunConfig) -> Result<Table, RunError> {
    let m = config.build_model().map_err(config_err)?;
    let geom = config.build_geometry().map_err(config_err)?;
    let mut t = Table::new(&["u", "pbar_tail", "pE_tail", "quadrature_error", "truncation_bound", "status"]);
    for u in abscissa(config)? {
        let r = tail_bound(&m, &geom, u, default_rule()).map(|b| {
            vec![
                Cell::Num(b.pbar_tail),
                Cell::Num(b.pe_tail),
                Cell::Num(b.quadrature_error),
                Cell::Num(b.truncation_bound),
            ]
        });
        t.push(vec![Cell::Num(u)], r, 4);
    }
    Ok(t)
}

fn run_validate(config: &RunConfig) -> Result<Table, RunError> {
    let m = config.build_model().map_err(config_err)?;
    let geom = config.build_geometry().map_err(config_err)?;
    let Some(GeometrySpec::Rectangle { sides }) = &config.geometry else {
        return Err(config_err("validate needs a rectangle geometry"));
    };
    let res = config.resolution.as_ref().ok_or_else(|| config_err("validate needs a resolution"))?;
    let grid = FieldGrid::new(sides, res).map_err(config_err)?;
    let us = abscissa(config)?;
    let reps = config.reps.ok_or_else(|| config_err("validate needs reps"))?;
    let report = validate_bound(&m, &geom, &grid, &us, reps, config.seed).map_err(|e| match e {
        Error::Precondition(_) | Error::SizeCap { .. } | Error::InvalidGeometry(_) | Error::InvalidModel(_) => {
            config_err(e)
        }
        _ => RunError::Numeric(e.to_string()),
    })?;
    let mut columns: Vec<String> = ["u", "emp_mean", "emp_stderr", "pbar_tail", "pE_tail", "verdict"]
        .iter()
        .map(|c| c.to_string())
        .collect();
    for lvl in &report.refinement {
        let tag: Vec<String> = lvl.resolution.iter().map(|n| n.to_string()).collect();
        let tag = tag.join("x");
        columns.push(format!("emp_mean_{tag}"));
        columns.push(format!("emp_stderr_{tag}"));
    }
    columns.push("jitter".into());
    columns.push("jitter_flagged".into());
    let mut t = Table {
        columns,
        rows: Vec::new(),
        failed_rows: 0,
    };
    for i in 0..report.u.len() {
        let mut row = vec![
            Cell::Num(report.u[i]),
            Cell::Num(report.empirical[i].mean),
            Cell::Num(report.empirical[i].stderr),
            Cell::Num(report.pbar_tail[i]),
            Cell::Num(report.pe_tail[i]),
            Cell::Text(report.verdicts[i].as_str().into()),
        ];
        for lvl in &report.refinement {
            row.push(Cell::Num(lvl.empirical[i].mean));
            row.push(Cell::Num(lvl.empirical[i].stderr));
        }
        row.push(Cell::Num(report.jitter));
        row.push(Cell::Bool(report.jitter_flagged));
        t.rows.push(row);
    }
    Ok(t)
}

fn run_goe(config: &RunConfig) -> Result<Table, RunError> {
    let n = config.n.ok_or_else(|| config_err("goe needs n"))?;
    let mut t = Table::new(&["n", "nu", "q_n", "absdet_mean", "status"]);
    for nu in abscissa(config)? {
        let r = evaluate_goe(n, nu).map(|g| vec![Cell::Num(g.density), Cell::Num(g.absdet_mean)]);
        t.push(vec![Cell::Int(n as u64), Cell::Num(nu)], r, 2);
    }
    Ok(t)
}

fn run_geom(config: &RunConfig) -> Result<Table, RunError> {
    let geom = config.build_geometry().map_err(config_err)?;
    let mut t = Table::new(&["j", "g", "g_stderr"]);
    for j in 0..geom.g.len() {
        t.rows.push(vec![Cell::Int(j as u64), Cell::Num(geom.g[j]), Cell::Num(geom.g_stderr[j])]);
    }
    Ok(t)
}

fn run_exponent(config: &RunConfig) -> Result<Table, RunError> {
    let m = config.build_model().map_err(config_err)?;
    let mut t = Table::new(&["method", "rate", "sigma2", "lambda_bar", "kappa", "exact", "status"]);
    let cells = |r: ExponentReport| {
        vec![
            Cell::Num(r.rate),
            Cell::Num(r.components.sigma2),
            Cell::Num(r.components.lambda_bar),
            Cell::Num(r.components.kappa),
            Cell::Bool(r.exact),
        ]
    };
    t.push(vec![Cell::Text("convex".into())], exponent_convex(&m).map(cells), 5);
    if let Some(delta) = config.delta {
        let r = z_delta_exponent(&m, delta).map(|z| cells(z.report));
        t.push(vec![Cell::Text("z_delta".into())], r, 5);
    }
    Ok(t)
}
