//! `lambda-sweep`.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use serde_json::json;

use xyrotor::analysis::StiffnessPoint;
use xyrotor::rotor_code::{self, LimitMode, SIGMA_C};

use crate::mc::temperature_grid;
use crate::output::RunDir;
use crate::svg::{self, Series};
use crate::{CliError, Common};

#[derive(Args, Debug, Serialize)]
pub struct LambdaArgs {
    /// CSV with columns T, rho_s, rho_s_err (e.g. a stiffness-sweep output).
    #[arg(long)]
    pub stiffness_file: PathBuf,
    #[arg(long)]
    pub sigma_min: f64,
    #[arg(long)]
    pub sigma_max: f64,
    /// Number of σ values, endpoints included.
    #[arg(long)]
    pub steps: usize,
    /// Spatial dimension d of the code.
    #[arg(long, default_value_t = 2)]
    pub dim: u32,
    /// Linear size L entering the weight through L^(d-2).
    #[arg(long, default_value_t = 1)]
    pub size: usize,
    /// finite or thermo.
    #[arg(long, default_value = "finite")]
    pub mode: LimitMode,
    /// Critical width used by the thermo mode.
    #[arg(long, default_value_t = SIGMA_C)]
    pub sigma_c: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Serialize)]
struct LambdaRow {
    sigma: f64,
    lambda: f64,
    lambda_err: f64,
    rho_s_used: f64,
}

/// Reads `T`, `rho_s` and `rho_s_err` by header name; other columns are ignored.
pub fn read_stiffness(path: &Path) -> Result<Vec<StiffnessPoint>, CliError> {
    let bad = |msg: String| CliError::Validation(format!("{}: {msg}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |names: &[&str]| {
        headers
            .iter()
            .position(|h| names.contains(&h.trim()))
            .ok_or_else(|| bad(format!("missing column {}", names[0])))
    };
    let (ct, cr, ce) = (col(&["T", "temperature"])?, col(&["rho_s"])?, col(&["rho_s_err"])?);
    let mut table = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |c: usize| {
            rec.get(c)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| bad(format!("row {}: column {} is not a number", i + 1, headers[c].to_owned())))
        };
        table.push(StiffnessPoint {
            temperature: num(ct)?,
            rho_s: num(cr)?,
            rho_s_err: num(ce)?,
        });
    }
    if table.len() < 2 {
        return Err(bad("need at least two temperatures".into()));
    }
    Ok(table)
}

pub fn lambda_sweep(args: &LambdaArgs) -> Result<(), CliError> {
    if args.dim < 2 || args.size < 1 {
        return Err(CliError::Validation(format!(
            "need --dim ≥ 2 and --size ≥ 1, got {} and {}",
            args.dim, args.size
        )));
    }
    if !(args.sigma_c > 0.0) {
        return Err(CliError::Validation(format!("--sigma-c must be positive, got {}", args.sigma_c)));
    }
    let sigmas = temperature_grid(args.sigma_min, args.sigma_max, args.steps)?;
    let table = read_stiffness(&args.stiffness_file)?;
    let results = rotor_code::lambda_sweep(&table, &sigmas, args.dim, args.size, args.mode, args.sigma_c)?;
    let mut out = RunDir::create(&args.common.out_dir())?;
    let rows: Vec<LambdaRow> = results
        .iter()
        .map(|r| LambdaRow {
            sigma: r.sigma,
            lambda: r.lambda,
            lambda_err: r.lambda_err,
            rho_s_used: r.rho_s,
        })
        .collect();
    for r in &rows {
        println!("sigma = {:.4}  lambda = {:.6} ± {:.6}", r.sigma, r.lambda, r.lambda_err);
    }
    out.write_csv("lambda.csv", &rows)?;
    if args.common.svg {
        let series = Series {
            label: "lambda",
            points: rows.iter().map(|r| (r.sigma, r.lambda)).collect(),
            errors: Some(rows.iter().map(|r| r.lambda_err).collect()),
            dashed: false,
        };
        let plot = svg::line_plot(
            &format!("Resilience, d = {}, L = {}", args.dim, args.size),
            "sigma",
            "lambda",
            &[series],
        );
        out.write("lambda.svg", plot.as_bytes())?;
    }
    let max = rows.iter().map(|r| r.lambda).fold(f64::NEG_INFINITY, f64::max);
    out.finish("lambda-sweep", args, json!({ "lambda_max": max }))
}
