//! Exact partition functions of small XY tori.
//!
//! Expanding every bond weight in characters,
//! `e^{β cos Θ} = Σ_k I_k(β) e^{ikΘ}`, and integrating out the spins turns
//! `Z(β) = ∫ Π dθ/2π e^{β Σ cos Θ_e}` into a sum over divergence-free integer
//! currents,
//!
//! ```text
//! Z_φ(β) = Σ_{heights, m, m'} Π_e I_{k_e}(β) · cos(φ K),   K = Σ_{e ∈ B_ȳ} k_e,
//! ```
//!
//! with no extra normalization constants. Three evaluators are provided:
//! direct enumeration of heights and windings (`L ≤ 3`), a column transfer
//! matrix over currents (`L ≤ 5`), and brute-force trapezoid quadrature over
//! the spin angles (`L = 2`) as an independent oracle.
//!
//! All sums are carried in units of `I_0(β)^M` so every edge factor lies in
//! `[0, 1]`; results are reported as logarithms.

mod bessel;
mod enumerate;
mod quadrature;
mod transfer;

use serde::Serialize;

pub use bessel::{bessel_i, bessel_i_log_derivatives, bessel_i_ratios, ln_bessel_i};
pub use transfer::DEFAULT_MAX_STATES;

use crate::error::{Error, Result};
use crate::lattice::TorusLattice;

/// Target for the cutoff-convergence estimate `|ln Z(Q) − ln Z(Q−1)|`.
pub const CUTOFF_TOLERANCE: f64 = 1e-10;

/// Default trapezoid grid per angle for the quadrature oracle.
pub const DEFAULT_QUADRATURE_POINTS: usize = 96;

const MAX_ENUMERATE_SIZE: usize = 3;
const MAX_TRANSFER_SIZE: usize = 5;

/// Largest automatic cutoff for enumeration; the search visits roughly
/// `(2Q+1)^{L²+1}` configurations.
fn max_enumerate_cutoff(size: usize) -> u32 {
    if size <= 2 { 16 } else { 4 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Enumerate,
    Transfer,
    Quadrature,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Enumerate => "enumerate",
            Method::Transfer => "transfer",
            Method::Quadrature => "quadrature",
        }
    }

    /// The preferred current-sum method for a lattice size.
    pub fn for_size(size: usize) -> Self {
        if size == 2 {
            Method::Enumerate
        } else {
            Method::Transfer
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enumerate" => Ok(Method::Enumerate),
            "transfer" => Ok(Method::Transfer),
            "quadrature" => Ok(Method::Quadrature),
            other => Err(Error::InvalidParameter {
                name: "method",
                reason: format!("unknown method `{other}`"),
            }),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualSumSpec {
    pub size: usize,
    pub beta: f64,
    /// Bound on every edge current, `|k_e| ≤ Q`. `None` picks the smallest converged cutoff starting at `⌈2√β⌉ + 3`.
    pub cutoff: Option<u32>,
    pub twist: f64,
    pub method: Method,
    /// Grid points per angle for `Quadrature`.
    pub quadrature_points: usize,
    /// Resource bound on `(2Q+1)^L` for `Transfer`.
    pub max_states: usize,
}

impl DualSumSpec {
    pub fn new(size: usize, beta: f64, method: Method) -> Self {
        Self {
            size,
            beta,
            cutoff: None,
            twist: 0.0,
            method,
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
            max_states: DEFAULT_MAX_STATES,
        }
    }

    pub fn with_cutoff(mut self, q: u32) -> Self {
        self.cutoff = Some(q);
        self
    }

    pub fn with_twist(mut self, phi: f64) -> Self {
        self.twist = phi;
        self
    }

    pub fn with_quadrature_points(mut self, n: usize) -> Self {
        self.quadrature_points = n;
        self
    }

    pub fn with_max_states(mut self, n: usize) -> Self {
        self.max_states = n;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.size < 2 {
            return Err(Error::InvalidSize {
                size: self.size,
                min: 2,
            });
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("must be finite and non-negative, got {}", self.beta),
            });
        }
        if !(self.twist.abs() <= std::f64::consts::PI) {
            return Err(Error::InvalidParameter {
                name: "twist",
                reason: format!("must lie in [-π, π], got {}", self.twist),
            });
        }
        if self.cutoff == Some(0) {
            return Err(Error::InvalidParameter {
                name: "cutoff",
                reason: "must be at least 1".into(),
            });
        }
        let max = match self.method {
            Method::Enumerate => MAX_ENUMERATE_SIZE,
            Method::Transfer => MAX_TRANSFER_SIZE,
            Method::Quadrature => 2,
        };
        if self.size > max || (self.method == Method::Quadrature && self.size != 2) {
            return Err(Error::UnsupportedSize {
                method: self.method.as_str(),
                size: self.size,
                max,
            });
        }
        if self.method == Method::Quadrature && self.quadrature_points < 64 {
            return Err(Error::InvalidParameter {
                name: "quadrature_points",
                reason: format!("need at least 64, got {}", self.quadrature_points),
            });
        }
        Ok(())
    }

    /// Starting cutoff `⌈2√β⌉ + 3`.
    pub fn initial_cutoff(beta: f64) -> u32 {
        (2.0 * beta.sqrt()).ceil() as u32 + 3
    }
}

/// Accumulated weight per net cut current `K`.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct SectorSums {
    offset: i64,
    /// `Σ w` per sector, index `K + offset`.
    weight: Vec<f64>,
    /// `Σ w · Σ_e I'_{k_e}/I_{k_e}` per sector.
    weighted_deriv: Vec<f64>,
}

impl SectorSums {
    pub(crate) fn add(&mut self, k: i64, w: f64, wd: f64) {
        if self.weight.is_empty() {
            self.offset = -k;
            self.weight.push(0.0);
            self.weighted_deriv.push(0.0);
        }
        let mut idx = k + self.offset;
        if idx < 0 {
            let grow = (-idx) as usize;
            self.weight.splice(0..0, std::iter::repeat_n(0.0, grow));
            self.weighted_deriv.splice(0..0, std::iter::repeat_n(0.0, grow));
            self.offset += grow as i64;
            idx = 0;
        }
        let idx = idx as usize;
        if idx >= self.weight.len() {
            self.weight.resize(idx + 1, 0.0);
            self.weighted_deriv.resize(idx + 1, 0.0);
        }
        self.weight[idx] += w;
        self.weighted_deriv[idx] += wd;
    }

    fn iter(&self) -> impl Iterator<Item = (i64, f64, f64)> + '_ {
        self.weight
            .iter()
            .zip(&self.weighted_deriv)
            .enumerate()
            .map(move |(i, (&w, &wd))| (i as i64 - self.offset, w, wd))
    }
}

/// Weights `Z_K` of the conserved cut-current sectors, `Z_φ = Σ_K Z_K cos(φK)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindingSectors {
    /// `ln` of the common scale factor of `weights`.
    pub ln_scale: f64,
    /// `(K, Z_K / e^{ln_scale})`, sorted by `K`.
    pub weights: Vec<(i64, f64)>,
}

impl WindingSectors {
    pub fn ln_z_phi(&self, phi: f64) -> f64 {
        let z: f64 = self
            .weights
            .iter()
            .map(|&(k, w)| w * (phi * k as f64).cos())
            .sum();
        self.ln_scale + z.ln()
    }

    /// `Z_K / Z_0` for the given sector.
    pub fn ratio_to_zero(&self, k: i64) -> f64 {
        let find = |k| {
            self.weights
                .iter()
                .find(|&&(kk, _)| kk == k)
                .map_or(0.0, |&(_, w)| w)
        };
        find(k) / find(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionResult {
    pub method: Method,
    pub size: usize,
    pub beta: f64,
    pub twist: f64,
    /// Cutoff used (grid points for quadrature).
    pub cutoff: u32,
    pub ln_z: f64,
    pub ln_z_phi: f64,
    /// `⟨K⟩` at `φ = 0`.
    pub k_mean: f64,
    /// `⟨K²⟩` at `φ = 0`.
    pub k2_mean: f64,
    /// `⟨Σ_e cos Θ_e⟩ = ∂ ln Z/∂β` at `φ = 0`.
    pub bond_cos_mean: f64,
    /// `|ln Z(Q) − ln Z(Q−1)|`.
    pub convergence: f64,
    pub converged: bool,
    /// Absent for quadrature.
    pub sectors: Option<WindingSectors>,
}

impl PartitionResult {
    pub fn energy(&self) -> f64 {
        -self.bond_cos_mean
    }

    /// `ln Z_φ` at another twist, reusing the sector weights.
    pub fn ln_z_at(&self, phi: f64) -> Option<f64> {
        self.sectors.as_ref().map(|s| s.ln_z_phi(phi))
    }

    fn from_sectors(spec: &DualSumSpec, cutoff: u32, sums: &SectorSums) -> Self {
        let m = 2 * spec.size * spec.size;
        let ln_scale = m as f64 * ln_bessel_i(0, spec.beta);
        let weights: Vec<(i64, f64)> = sums
            .iter()
            .filter(|&(_, w, _)| w != 0.0)
            .map(|(k, w, _)| (k, w))
            .collect();
        let total: f64 = weights.iter().map(|&(_, w)| w).sum();
        let k_mean = weights.iter().map(|&(k, w)| k as f64 * w).sum::<f64>() / total;
        let k2_mean = weights
            .iter()
            .map(|&(k, w)| (k * k) as f64 * w)
            .sum::<f64>()
            / total;
        let bond_cos_mean = if spec.beta == 0.0 {
            0.0
        } else {
            sums.iter().map(|(_, _, wd)| wd).sum::<f64>() / total
        };
        let sectors = WindingSectors { ln_scale, weights };
        Self {
            method: spec.method,
            size: spec.size,
            beta: spec.beta,
            twist: spec.twist,
            cutoff,
            ln_z: sectors.ln_z_phi(0.0),
            ln_z_phi: sectors.ln_z_phi(spec.twist),
            k_mean,
            k2_mean,
            bond_cos_mean,
            convergence: f64::NAN,
            converged: false,
            sectors: Some(sectors),
        }
    }
}

fn sectors_at(spec: &DualSumSpec, q: u32) -> Result<SectorSums> {
    match spec.method {
        Method::Enumerate => {
            let lat = TorusLattice::new(spec.size)?;
            let ratios = bessel_i_ratios(q, spec.beta);
            let derivs = bessel_i_log_derivatives(q, spec.beta);
            Ok(enumerate::sector_sums(&lat, q, &ratios, &derivs).0)
        }
        Method::Transfer => {
            let ratios = bessel_i_ratios(q, spec.beta);
            let derivs = bessel_i_log_derivatives(q, spec.beta);
            transfer::sector_sums(spec.size, q, &ratios, &derivs, spec.max_states)
        }
        Method::Quadrature => unreachable!("quadrature has no sector sums"),
    }
}

/// Evaluates `Z` and `Z_φ` with the method named in `spec`.
pub fn z_exact(spec: &DualSumSpec) -> Result<PartitionResult> {
    spec.validate()?;
    if spec.method == Method::Quadrature {
        return quadrature::evaluate(spec);
    }
    let ln_z = |q| -> Result<(SectorSums, f64)> {
        let sums = sectors_at(spec, q)?;
        let r = PartitionResult::from_sectors(spec, q, &sums);
        Ok((sums, r.ln_z))
    };
    let (q, sums, convergence) = match spec.cutoff {
        Some(q) => {
            let (sums, hi) = ln_z(q)?;
            let (_, lo) = ln_z(q - 1)?;
            (q, sums, (hi - lo).abs())
        }
        None => {
            let max_q = match spec.method {
                Method::Transfer => (1..)
                    .take_while(|&q| {
                        transfer::state_count(spec.size, q).is_some_and(|n| n <= spec.max_states)
                    })
                    .last()
                    .unwrap_or(1),
                _ => max_enumerate_cutoff(spec.size),
            };
            let mut q = DualSumSpec::initial_cutoff(spec.beta).min(max_q).max(1);
            let (_, mut prev) = ln_z(q - 1)?;
            loop {
                let (sums, cur) = ln_z(q)?;
                let conv = (cur - prev).abs();
                if conv < CUTOFF_TOLERANCE || q >= max_q {
                    break (q, sums, conv);
                }
                prev = cur;
                q += 1;
            }
        }
    };
    let mut result = PartitionResult::from_sectors(spec, q, &sums);
    result.convergence = convergence;
    result.converged = convergence < CUTOFF_TOLERANCE;
    Ok(result)
}

/// Shorthand for [`z_exact`] with `Method::Enumerate`.
pub fn z_dual_sum(spec: &DualSumSpec) -> Result<PartitionResult> {
    z_exact(&DualSumSpec {
        method: Method::Enumerate,
        ..spec.clone()
    })
}

/// Shorthand for [`z_exact`] with `Method::Transfer`.
pub fn z_transfer(spec: &DualSumSpec) -> Result<PartitionResult> {
    z_exact(&DualSumSpec {
        method: Method::Transfer,
        ..spec.clone()
    })
}

/// `ln Z` of the `L = 2` torus by trapezoid quadrature over three angles.
pub fn z_vertex_quadrature(size: usize, beta: f64, points: usize) -> Result<f64> {
    let spec = DualSumSpec::new(size, beta, Method::Quadrature).with_quadrature_points(points);
    Ok(z_exact(&spec)?.ln_z)
}

/// Spin stiffness `T⟨K²⟩` (2D) of the `L × L` torus.
pub fn stiffness_exact(size: usize, beta: f64) -> Result<f64> {
    let r = z_exact(&DualSumSpec::new(size, beta, Method::for_size(size)))?;
    Ok(stiffness_from(&r))
}

/// `T⟨K²⟩`, zero at `β = 0`.
pub fn stiffness_from(r: &PartitionResult) -> f64 {
    if r.beta == 0.0 { 0.0 } else { r.k2_mean / r.beta }
}

/// Mean energy `⟨E⟩ = −∂ ln Z/∂β` (coupling `J = 1`).
pub fn energy_exact(size: usize, beta: f64) -> Result<f64> {
    let r = z_exact(&DualSumSpec::new(size, beta, Method::for_size(size)))?;
    Ok(r.energy())
}
