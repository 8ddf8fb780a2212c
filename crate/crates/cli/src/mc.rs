//! `mc-run`, `stiffness-sweep` and `analyze`.

use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use xyrotor::analysis::{self, DEFAULT_BINS, KT_SLOPE, StiffnessPoint};
use xyrotor::xy_mc::{
    self, Algorithm, MCParams, Measurement, ObservableSeries, StartMode, default_therm, point_seed,
};

use crate::output::RunDir;
use crate::svg::{self, Series};
use crate::{CliError, Common};

/// Chain settings shared by `mc-run` and `stiffness-sweep`.
#[derive(Args, Debug, Clone, Serialize)]
pub struct ChainArgs {
    /// Linear lattice size L.
    #[arg(long, default_value_t = 16)]
    pub size: usize,
    /// Measurement sweeps.
    #[arg(long, default_value_t = 10_000)]
    pub sweeps: usize,
    /// Thermalization sweeps (default: 10% of the run, at least 1000).
    #[arg(long)]
    pub therm: Option<usize>,
    /// Sweeps between measurements.
    #[arg(long, default_value_t = 2)]
    pub stride: usize,
    /// metropolis, metropolis+overrelax or wolff.
    #[arg(long, default_value = "metropolis+overrelax")]
    pub algo: Algorithm,
    /// Initial Metropolis proposal half-width in radians.
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// cold or hot (default: cold below T = 1).
    #[arg(long)]
    pub start: Option<StartMode>,
    /// Jackknife bins.
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
}

impl ChainArgs {
    fn params(&self, temperature: f64, seed: u64) -> Result<MCParams, CliError> {
        let p = MCParams {
            size: self.size,
            temperature,
            therm_sweeps: self.therm.unwrap_or_else(|| default_therm(self.sweeps)),
            measure_sweeps: self.sweeps,
            stride: self.stride,
            algorithm: self.algo,
            proposal_width: self.width,
            seed,
            start: self.start.unwrap_or_else(|| StartMode::for_temperature(temperature)),
        };
        p.validate()?;
        if self.bins < analysis::MIN_BINS {
            return Err(CliError::Validation(format!(
                "--bins must be at least {}",
                analysis::MIN_BINS
            )));
        }
        if self.sweeps / self.stride < self.bins {
            return Err(CliError::Validation(format!(
                "{} measurements cannot fill {} bins",
                self.sweeps / self.stride,
                self.bins
            )));
        }
        Ok(p)
    }
}

#[derive(Args, Debug, Serialize)]
pub struct McRunArgs {
    /// Temperature T.
    #[arg(long)]
    pub temp: f64,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub tmin: f64,
    #[arg(long)]
    pub tmax: f64,
    /// Number of temperatures, endpoints included.
    #[arg(long)]
    pub steps: usize,
    /// Also write series_NNN.csv per temperature.
    #[arg(long)]
    pub series: bool,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct AnalyzeArgs {
    /// A series.csv written by mc-run.
    #[arg(long)]
    pub series: PathBuf,
    /// Temperature (default: read from the neighbouring meta.json).
    #[arg(long)]
    pub temp: Option<f64>,
    /// Lattice size (default: read from the neighbouring meta.json).
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesRow {
    pub index: usize,
    pub energy: f64,
    pub xbond_cos: f64,
    pub xbond_sin: f64,
    pub cut_cos: f64,
    pub cut_sin: f64,
    pub mag_x: f64,
    pub mag_y: f64,
}

impl SeriesRow {
    fn new(index: usize, m: &Measurement) -> Self {
        Self {
            index,
            energy: m.energy,
            xbond_cos: m.xbond_cos,
            xbond_sin: m.xbond_sin,
            cut_cos: m.cut_cos,
            cut_sin: m.cut_sin,
            mag_x: m.mag_x,
            mag_y: m.mag_y,
        }
    }

    fn measurement(&self) -> Measurement {
        Measurement {
            energy: self.energy,
            xbond_cos: self.xbond_cos,
            xbond_sin: self.xbond_sin,
            cut_cos: self.cut_cos,
            cut_sin: self.cut_sin,
            mag_x: self.mag_x,
            mag_y: self.mag_y,
        }
    }
}

/// One line of `stiffness.csv`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StiffnessRow {
    #[serde(rename = "T")]
    pub t: f64,
    pub rho_s: f64,
    pub rho_s_err: f64,
    #[serde(rename = "E_mean")]
    pub e_mean: f64,
    #[serde(rename = "E_err")]
    pub e_err: f64,
    pub acc_rate: f64,
    pub rho_s_boundary: f64,
    pub rho_s_boundary_err: f64,
    pub tau_int: f64,
}

fn summarize(series: &ObservableSeries, t: f64, bins: usize) -> Result<StiffnessRow, CliError> {
    let d = xy_mc::stiffness_distributed(series, bins)?;
    let b = xy_mc::stiffness_boundary(series, bins)?;
    let e = xy_mc::energy_estimate(series, bins)?;
    let tau = analysis::autocorrelation_time(&series.column(|m| m.xbond_cos));
    Ok(StiffnessRow {
        t,
        rho_s: d.rho_s,
        rho_s_err: d.error,
        e_mean: e.mean,
        e_err: e.error,
        acc_rate: series.acceptance,
        rho_s_boundary: b.rho_s,
        rho_s_boundary_err: b.error,
        tau_int: tau,
    })
}

fn series_rows(series: &ObservableSeries) -> Vec<SeriesRow> {
    series
        .records
        .iter()
        .enumerate()
        .map(|(i, m)| SeriesRow::new(i, m))
        .collect()
}

fn warn_underbinned(row: &StiffnessRow, series: &ObservableSeries, bins: usize) {
    let per_bin = series.records.len() / bins.max(1);
    if (per_bin as f64) < 2.0 * row.tau_int {
        eprintln!(
            "warning: T = {}: bins of {per_bin} measurements are shorter than 2·τ_int = {:.1}",
            row.t,
            2.0 * row.tau_int
        );
    }
}

pub fn mc_run(args: &McRunArgs) -> Result<(), CliError> {
    let params = args.chain.params(args.temp, args.chain.seed)?;
    let mut out = RunDir::create(&args.common.out_dir())?;
    let series = xy_mc::run(&params)?;
    let row = summarize(&series, args.temp, args.chain.bins)?;
    warn_underbinned(&row, &series, args.chain.bins);
    out.write_csv("series.csv", &series_rows(&series))?;
    out.write_csv("stiffness.csv", std::slice::from_ref(&row))?;
    println!(
        "T = {}  rho_s = {} ± {}  E = {} ± {}  acc = {:.3}",
        row.t, row.rho_s, row.rho_s_err, row.e_mean, row.e_err, row.acc_rate
    );
    out.finish(
        "mc-run",
        &json!({ "args": args, "chain": params }),
        json!({ "stiffness": row, "proposal_width": series.proposal_width }),
    )
}

/// `steps` evenly spaced temperatures from `tmin` to `tmax`.
pub fn temperature_grid(tmin: f64, tmax: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps == 0 || !(tmin > 0.0) || !(tmax >= tmin) || !tmax.is_finite() {
        return Err(CliError::Validation(format!(
            "need 0 < tmin ≤ tmax and steps ≥ 1, got tmin = {tmin}, tmax = {tmax}, steps = {steps}"
        )));
    }
    if steps == 1 {
        return Ok(vec![tmin]);
    }
    Ok((0..steps)
        .map(|i| tmin + (tmax - tmin) * i as f64 / (steps - 1) as f64)
        .collect())
}

pub fn stiffness_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let temps = temperature_grid(args.tmin, args.tmax, args.steps)?;
    let params = temps
        .iter()
        .enumerate()
        .map(|(i, &t)| args.chain.params(t, point_seed(args.chain.seed, i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let pool = args.common.pool()?;
    let mut out = RunDir::create(&args.common.out_dir())?;
    let bins = args.chain.bins;
    let results: Vec<Result<(StiffnessRow, Option<Vec<SeriesRow>>), CliError>> = pool.install(|| {
        params
            .par_iter()
            .map(|p| {
                let series = xy_mc::run(p)?;
                let row = summarize(&series, p.temperature, bins)?;
                warn_underbinned(&row, &series, bins);
                eprintln!("T = {:.4}  rho_s = {:.5} ± {:.5}", row.t, row.rho_s, row.rho_s_err);
                Ok((row, args.series.then(|| series_rows(&series))))
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        let (row, series) = r?;
        if let Some(series) = series {
            out.write_csv(&format!("series_{i:03}.csv"), &series)?;
        }
        rows.push(row);
    }
    out.write_csv("stiffness.csv", &rows)?;
    let table: Vec<StiffnessPoint> = rows
        .iter()
        .map(|r| StiffnessPoint {
            temperature: r.t,
            rho_s: r.rho_s,
            rho_s_err: r.rho_s_err,
        })
        .collect();
    let crossing = match analysis::kt_crossing(&table) {
        Ok(c) => {
            println!("KT crossing T* = {} ± {}", c.temperature, c.error);
            json!({ "T_star": c.temperature, "T_star_err": c.error })
        }
        Err(e) => {
            println!("KT crossing: {e}");
            json!({ "error": e.to_string() })
        }
    };
    if args.common.svg {
        let data = Series {
            label: "rho_s",
            points: rows.iter().map(|r| (r.t, r.rho_s)).collect(),
            errors: Some(rows.iter().map(|r| r.rho_s_err).collect()),
            dashed: false,
        };
        let line = Series {
            label: "2T/pi",
            points: vec![(args.tmin, KT_SLOPE * args.tmin), (args.tmax, KT_SLOPE * args.tmax)],
            errors: None,
            dashed: true,
        };
        let plot = svg::line_plot(
            &format!("Spin stiffness, L = {}", args.chain.size),
            "T",
            "rho_s",
            &[data, line],
        );
        out.write("stiffness.svg", plot.as_bytes())?;
    }
    out.finish("stiffness-sweep", args, json!({ "kt_crossing": crossing }))
}

fn read_series(path: &Path) -> Result<Vec<SeriesRow>, CliError> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<SeriesRow>, _>>()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// `(size, temperature)` recorded by `mc-run` next to a series file.
fn meta_params(series: &Path) -> Option<(usize, f64)> {
    let dir = series.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let text = std::fs::read_to_string(dir.join("meta.json")).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    let chain = &v["params"]["chain"];
    Some((chain["size"].as_u64()? as usize, chain["temperature"].as_f64()?))
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let meta = meta_params(&args.series);
    let size = args.size.or(meta.map(|m| m.0)).ok_or_else(|| {
        CliError::Validation("--size is required when no meta.json accompanies the series".into())
    })?;
    let temp = args.temp.or(meta.map(|m| m.1)).ok_or_else(|| {
        CliError::Validation("--temp is required when no meta.json accompanies the series".into())
    })?;
    if !(temp > 0.0) || size < 2 {
        return Err(CliError::Validation(format!("invalid size {size} or temperature {temp}")));
    }
    let rows = read_series(&args.series)?;
    let series = ObservableSeries {
        size,
        beta: 1.0 / temp,
        records: rows.iter().map(SeriesRow::measurement).collect(),
        acceptance: f64::NAN,
        proposal_width: f64::NAN,
    };
    let mut out = RunDir::create(&args.common.out_dir())?;
    let row = summarize(&series, temp, args.bins)?;
    warn_underbinned(&row, &series, args.bins);
    println!(
        "T = {}  rho_s = {} ± {}  rho_s(boundary) = {} ± {}  E = {} ± {}  tau_int = {:.2}",
        row.t,
        row.rho_s,
        row.rho_s_err,
        row.rho_s_boundary,
        row.rho_s_boundary_err,
        row.e_mean,
        row.e_err,
        row.tau_int
    );
    out.write_csv("analysis.csv", std::slice::from_ref(&row))?;
    out.finish("analyze", args, json!({ "stiffness": row }))
}
