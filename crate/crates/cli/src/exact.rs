//! `lattice-check`, `exact-z` and `verify-mapping`.

use clap::Args;
use serde::Serialize;
use serde_json::json;

use xyrotor::exact_dual::{self, DualSumSpec, Method, PartitionResult};
use xyrotor::lattice::TorusLattice;
use xyrotor::rotor_code;

use crate::output::RunDir;
use crate::{CliError, Common};

#[derive(Args, Debug, Serialize)]
pub struct LatticeCheckArgs {
    #[arg(long)]
    pub size: usize,
    /// Write the edge incidence table to incidence.csv.
    #[arg(long)]
    pub dump: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct ExactZArgs {
    #[arg(long)]
    pub size: usize,
    #[arg(long)]
    pub beta: f64,
    /// Current cutoff |k_e| ≤ Q (default: increase until converged).
    #[arg(long)]
    pub cutoff: Option<u32>,
    /// Boundary twist φ in radians.
    #[arg(long, default_value_t = 0.0)]
    pub twist: f64,
    /// enumerate, transfer or quadrature (default: enumerate for L = 2, else transfer).
    #[arg(long)]
    pub method: Option<Method>,
    /// Grid points per angle for quadrature.
    #[arg(long, default_value_t = exact_dual::DEFAULT_QUADRATURE_POINTS)]
    pub quadrature_points: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 2)]
    pub size: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Serialize)]
struct IncidenceRow {
    edge_id: usize,
    start: usize,
    end: usize,
    axis: &'static str,
    f_plus: usize,
    f_minus: usize,
}

pub fn lattice_check(args: &LatticeCheckArgs) -> Result<(), CliError> {
    let lat = TorusLattice::new(args.size)?;
    let mut out = RunDir::create(&args.common.out_dir())?;
    let report = lat.check_code_algebra();
    println!(
        "L = {}: {} vertices, {} edges, {} faces",
        lat.size(),
        lat.num_vertices(),
        lat.num_edges(),
        lat.num_faces()
    );
    println!("{report}");
    if args.dump {
        let rows: Vec<IncidenceRow> = lat
            .edges()
            .iter()
            .enumerate()
            .map(|(id, e)| {
                let face = |s: i8| e.faces.iter().find(|f| f.1 == s).map_or(usize::MAX, |f| f.0);
                IncidenceRow {
                    edge_id: id,
                    start: e.start,
                    end: e.end,
                    axis: e.axis.as_str(),
                    f_plus: face(1),
                    f_minus: face(-1),
                }
            })
            .collect();
        out.write_csv("incidence.csv", &rows)?;
    }
    let passed = report.passed();
    out.finish("lattice-check", args, json!({ "passed": passed }))?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Verification(format!("code algebra violated at L = {}", args.size)))
    }
}

pub fn exact_z(args: &ExactZArgs) -> Result<(), CliError> {
    let method = args.method.unwrap_or_else(|| Method::for_size(args.size));
    let mut spec = DualSumSpec::new(args.size, args.beta, method)
        .with_twist(args.twist)
        .with_quadrature_points(args.quadrature_points);
    if let Some(q) = args.cutoff {
        spec = spec.with_cutoff(q);
    }
    let mut out = RunDir::create(&args.common.out_dir())?;
    let r = exact_dual::z_exact(&spec)?;
    let value = json!({
        "lnZ": r.ln_z,
        "lnZ_phi": r.ln_z_phi,
        "K2_mean": r.k2_mean,
        "convergence": r.convergence,
        "method": r.method,
        "converged": r.converged,
        "cutoff": r.cutoff,
        "size": r.size,
        "beta": r.beta,
        "twist": r.twist,
        "rho_s": exact_dual::stiffness_from(&r),
        "energy": r.energy(),
    });
    println!("{}", serde_json::to_string_pretty(&value).map_err(|e| CliError::Io(e.to_string()))?);
    if method != Method::Quadrature && !r.converged {
        eprintln!(
            "warning: cutoff Q = {} changed ln Z by {:e}; pass a larger --cutoff",
            r.cutoff, r.convergence
        );
    }
    out.write_json("exact_z.json", &value)?;
    out.finish("exact-z", args, value)
}

/// One line of the oracle suite.
#[derive(Debug, Serialize)]
struct Check {
    name: String,
    value: f64,
    tolerance: f64,
    passed: bool,
}

impl Check {
    fn new(name: String, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            tolerance,
            passed: value < tolerance,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn solve(size: usize, beta: f64, method: Method, cutoff: Option<u32>) -> Result<PartitionResult, CliError> {
    let mut spec = DualSumSpec::new(size, beta, method);
    if let Some(q) = cutoff {
        spec = spec.with_cutoff(q);
    }
    Ok(exact_dual::z_exact(&spec)?)
}

/// Oracle-equivalence and susceptibility-identity checks for an `L × L` torus.
fn oracle_suite(size: usize) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let lat = TorusLattice::new(size)?;
    let algebra = lat.check_code_algebra();
    checks.push(Check::new(
        format!("L={size} code algebra"),
        if algebra.passed() { 0.0 } else { 1.0 },
        0.5,
    ));

    match size {
        2 => {
            for beta in [0.5, 1.0, 2.0] {
                let quad = exact_dual::z_vertex_quadrature(2, beta, exact_dual::DEFAULT_QUADRATURE_POINTS)?;
                let dual = solve(2, beta, Method::Enumerate, None)?.ln_z;
                checks.push(Check::new(
                    format!("L=2 beta={beta} |lnZ_quadrature - lnZ_dual|"),
                    (quad - dual).abs(),
                    1e-8,
                ));
            }
        }
        3 => {
            let e = solve(3, 1.0, Method::Enumerate, Some(3))?.ln_z;
            let t = solve(3, 1.0, Method::Transfer, Some(3))?.ln_z;
            checks.push(Check::new(
                "L=3 beta=1 Q=3 |lnZ_enumerate - lnZ_transfer|".into(),
                (e - t).abs(),
                1e-10,
            ));
        }
        _ => {}
    }

    let method = Method::for_size(size);
    for beta in [1.0, 2.0] {
        let r = solve(size, beta, method, None)?;
        let rho = exact_dual::stiffness_exact(size, beta)?;
        checks.push(Check::new(
            format!("L={size} beta={beta} chi_F = rho_s/T (relative)"),
            rel(r.k2_mean, rho * beta),
            1e-10,
        ));
        let sigma = 1.0 / beta;
        let f = rotor_code::rel_fidelity(size, sigma, 0.3)?;
        let direct = r.ln_z_at(0.3).unwrap_or(f64::NAN) - r.ln_z;
        checks.push(Check::new(
            format!("L={size} sigma={sigma} ln r(0.3) = ln Z_phi - ln Z (bitwise)"),
            if f.ln_r.to_bits() == direct.to_bits() { 0.0 } else { 1.0 },
            0.5,
        ));
        let max_ratio = (1..=16)
            .map(|i| r.ln_z_at(std::f64::consts::PI * i as f64 / 16.0).unwrap_or(f64::NAN) - r.ln_z)
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::new(
            format!("L={size} beta={beta} max ln(Z_phi/Z) over phi != 0"),
            max_ratio,
            1e-12,
        ));
    }

    let beta = 1.25;
    let r = solve(size, beta, method, None)?;
    let h = 0.05;
    let lz = |phi: f64| r.ln_z_at(phi).unwrap_or(f64::NAN);
    let curvature = -(lz(h) + lz(-h) - 2.0 * r.ln_z) / (h * h) / beta;
    checks.push(Check::new(
        format!("L={size} beta={beta} T<K^2> vs twist curvature (relative)"),
        rel(curvature, exact_dual::stiffness_from(&r)),
        1e-4,
    ));
    Ok(checks)
}

pub fn verify_mapping(args: &VerifyArgs) -> Result<(), CliError> {
    let mut out = RunDir::create(&args.common.out_dir())?;
    let checks = oracle_suite(args.size)?;
    for c in &checks {
        println!(
            "[{}] {}: {:e} (tolerance {:e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    out.write_json("verify.json", &checks)?;
    out.finish("verify-mapping", args, json!({ "checks": checks.len(), "failed": failed }))?;
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Verification(format!("{failed} of {} checks failed", checks.len())))
    }
}
