//! Noisy toric-rotor code: von Mises phase noise, relative gate fidelity and
//! the resilience order parameter.
//!
//! Noise of width `σ` on the code maps to the XY model at `T = σ`. The
//! fidelity of a logical phase rotation by `φ` relative to the identity is
//! `r(φ) = Z_φ/Z`, and `λ = ⟨cos φ⟩` under the weight `r(φ)` measures how
//! well the logical phase survives the noise.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{MonotoneCubic, StiffnessPoint};
use crate::error::{Error, Result};
use crate::exact_dual::{DualSumSpec, Method, PartitionResult, WindingSectors, ln_bessel_i, z_exact};
use crate::lattice::{Loop, TorusLattice};

/// Default critical noise width (KT temperature of the XY model).
pub const SIGMA_C: f64 = 0.89;

/// Default periodic grid for [`lambda_exact`].
pub const DEFAULT_PHI_GRID: usize = 128;

/// Independent von Mises phase noise of width `σ` on every rotor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Self { sigma })
    }

    /// Concentration `κ = 1/σ`.
    pub fn kappa(&self) -> f64 {
        1.0 / self.sigma
    }

    /// Inverse temperature of the dual XY model, equal to `κ`.
    pub fn beta(&self) -> f64 {
        1.0 / self.sigma
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        let k = self.kappa();
        (k * theta.cos() - ln_bessel_i(0, k)).exp() / TAU
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        sample_kappa(rng, self.kappa())
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "sigma",
            reason: format!("must be positive and finite, got {sigma}"),
        })
    }
}

/// `P(Θ) = e^{κ cos Θ}/(2π I_0(κ))` with `κ = 1/σ`.
pub fn von_mises_pdf(theta: f64, sigma: f64) -> Result<f64> {
    Ok(NoiseModel::new(sigma)?.pdf(theta))
}

/// One von Mises angle in `(−π, π]`.
pub fn von_mises_sample(rng: &mut impl Rng, sigma: f64) -> Result<f64> {
    Ok(NoiseModel::new(sigma)?.sample(rng))
}

/// Best–Fisher rejection sampler with a wrapped-Cauchy envelope.
fn sample_kappa(rng: &mut impl Rng, kappa: f64) -> f64 {
    if kappa < 1e-8 {
        return PI - TAU * rng.random::<f64>();
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = 1.0 - rng.random::<f64>();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let theta = f.clamp(-1.0, 1.0).acos();
            return if rng.random::<bool>() { theta } else { -theta };
        }
    }
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(t: f64) -> f64 {
    if t > -PI && t <= PI {
        return t;
    }
    let w = (t + PI).rem_euclid(TAU) - PI;
    if w <= -PI { w + TAU } else { w }
}

/// Continuous syndrome of one error configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Syndrome {
    /// Phase error per edge.
    pub errors: Vec<f64>,
    /// `Σ_{e ∈ ∂f} ε_{e,f} Θ_e` per face, wrapped to `(−π, π]`.
    pub faces: Vec<f64>,
    /// Wrapped sums of `Θ_e` along `C_x` and `C_y`.
    pub loops: [f64; 2],
}

/// Face and loop holonomies of a given edge error.
pub fn holonomies(lat: &TorusLattice, errors: &[f64]) -> Syndrome {
    let faces = (0..lat.num_faces())
        .map(|f| {
            wrap_angle(
                lat.face_boundary(f)
                    .iter()
                    .map(|&(e, s)| f64::from(s) * errors[e])
                    .sum(),
            )
        })
        .collect();
    let loop_sum = |which| wrap_angle(lat.loop_edges(which).iter().map(|&e| errors[e]).sum());
    Syndrome {
        errors: errors.to_vec(),
        faces,
        loops: [loop_sum(Loop::Cx), loop_sum(Loop::Cy)],
    }
}

/// Samples von Mises errors on every edge and returns their holonomies.
pub fn syndrome_sample(lat: &TorusLattice, sigma: f64, rng: &mut impl Rng) -> Result<Syndrome> {
    let noise = NoiseModel::new(sigma)?;
    let errors: Vec<f64> = (0..lat.num_edges()).map(|_| noise.sample(rng)).collect();
    Ok(holonomies(lat, &errors))
}

/// `r(φ) = Z_φ/Z` of the `L × L` code at noise width `σ`, from the exact
/// sector weights of the XY model at `β = 1/σ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityCurve {
    pub size: usize,
    pub sigma: f64,
    /// Fidelity susceptibility `χ_F = ⟨K²⟩ = −∂² ln r/∂φ²` at `φ = 0`.
    pub chi_f: f64,
    pub converged: bool,
    sectors: WindingSectors,
    ln_z: f64,
}

impl FidelityCurve {
    pub fn new(size: usize, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        let result = z_exact(&DualSumSpec::new(size, 1.0 / sigma, Method::for_size(size)))?;
        Ok(Self::from_result(sigma, result))
    }

    pub fn from_result(sigma: f64, result: PartitionResult) -> Self {
        let sectors = result.sectors.expect("current-sum results carry sectors");
        Self {
            size: result.size,
            sigma,
            chi_f: result.k2_mean,
            converged: result.converged,
            ln_z: result.ln_z,
            sectors,
        }
    }

    pub fn ln_r(&self, phi: f64) -> f64 {
        self.sectors.ln_z_phi(wrap_angle(phi)) - self.ln_z
    }

    pub fn r(&self, phi: f64) -> f64 {
        self.ln_r(phi).exp()
    }

    /// `Z_1/Z_0`, the exact `⟨cos φ⟩` under the weight `r(φ)`.
    pub fn first_harmonic(&self) -> f64 {
        self.sectors.ratio_to_zero(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelFidelity {
    pub phi: f64,
    pub r: f64,
    pub ln_r: f64,
    pub chi_f: f64,
}

/// Relative gate fidelity of a logical phase rotation by `φ`.
pub fn rel_fidelity(size: usize, sigma: f64, phi: f64) -> Result<RelFidelity> {
    let curve = FidelityCurve::new(size, sigma)?;
    let ln_r = curve.ln_r(phi);
    Ok(RelFidelity {
        phi,
        r: ln_r.exp(),
        ln_r,
        chi_f: curve.chi_f,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// `e^{−ρ_s L^{d−2} φ²/(2T)}`.
    Gaussian,
    /// Exact `r(φ)` of a small torus.
    ExactRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResilienceResult {
    pub sigma: f64,
    pub lambda: f64,
    pub lambda_err: f64,
    pub rho_s: f64,
    pub dim: u32,
    pub size: usize,
    pub mode: WeightMode,
}

/// 15-point Kronrod nodes and weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let s = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod integral to absolute tolerance `tol`.
fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn go(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = kronrod(f, a, b);
        if err <= tol || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        go(f, a, m, 0.5 * tol, depth - 1) + go(f, m, b, 0.5 * tol, depth - 1)
    }
    go(f, a, b, tol, 40)
}

/// `λ = ∫ cos φ w(φ) / ∫ w(φ)` over `[−π, π]` with the Gaussian weight
/// `w = e^{−a φ²}`, `a = ρ_s L^{d−2}/(2T)`.
pub fn lambda_gaussian(rho_s: f64, temperature: f64, dim: u32, size: usize) -> Result<f64> {
    if !(rho_s >= 0.0 && rho_s.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "rho_s",
            reason: format!("must be finite and non-negative, got {rho_s}"),
        });
    }
    if !(temperature > 0.0) {
        return Err(Error::InvalidParameter {
            name: "temperature",
            reason: format!("must be positive, got {temperature}"),
        });
    }
    if dim < 2 || size < 1 {
        return Err(Error::InvalidParameter {
            name: "dim",
            reason: format!("need d ≥ 2 and L ≥ 1, got d = {dim}, L = {size}"),
        });
    }
    let a = rho_s * (size as f64).powi(dim as i32 - 2) / (2.0 * temperature);
    if a == 0.0 {
        return Ok(0.0);
    }
    // the weight is even: integrate over [0, π], splitting at the width scale
    let scale = a.sqrt().recip();
    let mut cuts = vec![0.0];
    cuts.extend(
        [0.5, 1.0, 2.0, 4.0, 8.0, 40.0]
            .iter()
            .map(|m| m * scale)
            .take_while(|&x| x < PI),
    );
    cuts.push(PI);
    let (mut num, mut den) = (0.0, 0.0);
    for w in cuts.windows(2) {
        // each piece to well below the target accuracy of λ
        let d = integrate(&|p: f64| (-a * p * p).exp(), w[0], w[1], 1e-14 * scale);
        num += integrate(&|p: f64| p.cos() * (-a * p * p).exp(), w[0], w[1], 1e-14 * scale);
        den += d;
    }
    Ok((num / den).clamp(0.0, 1.0))
}

/// `λ` under the exact weight `r(φ)` on a periodic grid of `points ≥ 64`
/// nodes over `[−π, π)`.
pub fn lambda_exact(size: usize, sigma: f64, points: usize) -> Result<ResilienceResult> {
    if points < 64 {
        return Err(Error::InvalidParameter {
            name: "points",
            reason: format!("need at least 64 grid points, got {points}"),
        });
    }
    let curve = FidelityCurve::new(size, sigma)?;
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..points {
        let phi = -PI + TAU * j as f64 / points as f64;
        let r = curve.r(phi);
        num += phi.cos() * r;
        den += r;
    }
    Ok(ResilienceResult {
        sigma,
        lambda: (num / den).clamp(0.0, 1.0),
        lambda_err: 0.0,
        rho_s: sigma * curve.chi_f,
        dim: 2,
        size,
        mode: WeightMode::ExactRatio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitMode {
    /// Interpolated finite-size stiffness everywhere.
    Finite,
    /// Stiffness set to zero above `σ_c`, as after the KT jump.
    Thermo,
}

impl std::str::FromStr for LimitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "finite" => Ok(LimitMode::Finite),
            "thermo" | "thermodynamic" => Ok(LimitMode::Thermo),
            other => Err(Error::InvalidParameter {
                name: "mode",
                reason: format!("unknown limit mode `{other}`"),
            }),
        }
    }
}

/// Gaussian-weight `λ(σ)` from a stiffness table read at `T = σ`. Errors
/// come from re-evaluating at `ρ_s ± err`.
pub fn lambda_sweep(
    table: &[StiffnessPoint],
    sigmas: &[f64],
    dim: u32,
    size: usize,
    mode: LimitMode,
    sigma_c: f64,
) -> Result<Vec<ResilienceResult>> {
    let mut rows = table.to_vec();
    rows.sort_by(|a, b| a.temperature.total_cmp(&b.temperature));
    let ts: Vec<f64> = rows.iter().map(|p| p.temperature).collect();
    let rho = MonotoneCubic::new(&ts, &rows.iter().map(|p| p.rho_s).collect::<Vec<_>>())?;
    let err = MonotoneCubic::new(&ts, &rows.iter().map(|p| p.rho_s_err).collect::<Vec<_>>())?;
    let (lo, hi) = rho.domain();
    sigmas
        .iter()
        .map(|&sigma| {
            check_sigma(sigma)?;
            if mode == LimitMode::Thermo && sigma > sigma_c {
                return Ok(ResilienceResult {
                    sigma,
                    lambda: 0.0,
                    lambda_err: 0.0,
                    rho_s: 0.0,
                    dim,
                    size,
                    mode: WeightMode::Gaussian,
                });
            }
            if sigma < lo - 1e-12 || sigma > hi + 1e-12 {
                return Err(Error::OutOfRange {
                    what: "sigma",
                    value: sigma,
                    lo,
                    hi,
                });
            }
            let r = rho.eval(sigma).max(0.0);
            let e = err.eval(sigma).abs();
            let lambda = lambda_gaussian(r, sigma, dim, size)?;
            let up = lambda_gaussian(r + e, sigma, dim, size)?;
            let down = lambda_gaussian((r - e).max(0.0), sigma, dim, size)?;
            Ok(ResilienceResult {
                sigma,
                lambda,
                lambda_err: (up - lambda).abs().max((lambda - down).abs()),
                rho_s: r,
                dim,
                size,
                mode: WeightMode::Gaussian,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_dual::bessel_i;

    #[test]
    fn kronrod_integrates_smooth_functions() {
        let v = integrate(&|x: f64| x.exp(), 0.0, 1.0, 1e-14);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-14);
        let v = integrate(&|x: f64| (-x * x).exp(), 0.0, 10.0, 1e-14);
        assert!((v - PI.sqrt() / 2.0).abs() < 1e-13);
    }

    #[test]
    fn wrap_angle_range() {
        for t in [-10.0, -PI, -1.0, 0.0, PI, 7.0, 2.0 * TAU] {
            let w = wrap_angle(t);
            assert!(w > -PI && w <= PI, "{t} -> {w}");
            assert!(((t - w) / TAU - ((t - w) / TAU).round()).abs() < 1e-12);
        }
        assert_eq!(wrap_angle(-PI), PI);
    }

    #[test]
    fn pdf_ratio_and_flat_limit() {
        for sigma in [0.2, 0.5, 2.0] {
            let r = von_mises_pdf(0.0, sigma).unwrap() / von_mises_pdf(PI, sigma).unwrap();
            assert!((r / (2.0 / sigma).exp() - 1.0).abs() < 1e-12);
        }
        let p = von_mises_pdf(1.0, 1e9).unwrap();
        assert!((p * TAU - 1.0).abs() < 1e-8);
        assert!(von_mises_pdf(0.0, 0.0).is_err());
        assert!(von_mises_pdf(0.0, -1.0).is_err());
    }

    #[test]
    fn first_harmonic_is_bessel_ratio() {
        let norm = integrate(&|t: f64| von_mises_pdf(t, 0.5).unwrap() * t.cos(), -PI, PI, 1e-14);
        assert!((norm - bessel_i(1, 2.0) / bessel_i(0, 2.0)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_lambda_limits() {
        assert_eq!(lambda_gaussian(0.0, 1.0, 2, 8).unwrap(), 0.0);
        assert!(lambda_gaussian(1.0, 1e-6, 2, 8).unwrap() > 0.9999);
        assert!(lambda_gaussian(-0.1, 1.0, 2, 8).is_err());
        assert!(lambda_gaussian(0.1, 0.0, 2, 8).is_err());
        assert!(lambda_gaussian(0.1, 1.0, 1, 8).is_err());
    }
}
