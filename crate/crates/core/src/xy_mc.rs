//! Monte Carlo for the 2D XY model `H = −Σ_{⟨ij⟩} cos(θ_i − θ_j)`.
//!
//! Spins are stored as unit vectors so that local updates need at most one
//! `sin_cos` call. Bond angles are oriented along the edges of
//! [`TorusLattice`]: `Θ_e = θ_end − θ_start`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, BinnedSeries, Estimate};
use crate::error::{Error, Result};
use crate::lattice::{Loop, TorusLattice};

/// Generator used for every Markov chain.
pub type ChainRng = Xoshiro256PlusPlus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Metropolis,
    /// One Metropolis sweep followed by one overrelaxation sweep.
    MetropolisOverrelax,
    Wolff,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Metropolis => "metropolis",
            Algorithm::MetropolisOverrelax => "metropolis+overrelax",
            Algorithm::Wolff => "wolff",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "metropolis" => Ok(Algorithm::Metropolis),
            "metropolis+overrelax" | "metropolis-overrelax" | "overrelax" => {
                Ok(Algorithm::MetropolisOverrelax)
            }
            "wolff" => Ok(Algorithm::Wolff),
            other => Err(Error::InvalidParameter {
                name: "algorithm",
                reason: format!("unknown algorithm `{other}`"),
            }),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartMode {
    Cold,
    Hot,
}

impl StartMode {
    /// Cold below `T = 1`, hot otherwise.
    pub fn for_temperature(t: f64) -> Self {
        if t < 1.0 { StartMode::Cold } else { StartMode::Hot }
    }
}

impl std::str::FromStr for StartMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cold" => Ok(StartMode::Cold),
            "hot" => Ok(StartMode::Hot),
            other => Err(Error::InvalidParameter {
                name: "start",
                reason: format!("unknown start mode `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCParams {
    pub size: usize,
    /// `T > 0`; `f64::INFINITY` gives `β = 0`.
    pub temperature: f64,
    pub therm_sweeps: usize,
    pub measure_sweeps: usize,
    /// Sweeps between measurements.
    pub stride: usize,
    pub algorithm: Algorithm,
    /// Initial Metropolis proposal half-width, adapted during thermalization.
    pub proposal_width: f64,
    pub seed: u64,
    pub start: StartMode,
}

impl MCParams {
    pub fn new(size: usize, temperature: f64) -> Self {
        let measure_sweeps = 10_000;
        Self {
            size,
            temperature,
            therm_sweeps: default_therm(measure_sweeps),
            measure_sweeps,
            stride: 2,
            algorithm: Algorithm::MetropolisOverrelax,
            proposal_width: 1.0,
            seed: 0,
            start: StartMode::for_temperature(temperature),
        }
    }

    /// Sets the measurement sweeps and the matching default thermalization.
    pub fn with_sweeps(mut self, measure: usize) -> Self {
        self.measure_sweeps = measure;
        self.therm_sweeps = default_therm(measure);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 2 {
            return Err(Error::InvalidSize {
                size: self.size,
                min: 2,
            });
        }
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidParameter {
                name: "temperature",
                reason: format!("must be positive, got {}", self.temperature),
            });
        }
        if self.measure_sweeps == 0 {
            return Err(Error::InvalidParameter {
                name: "sweeps",
                reason: "need at least one measurement sweep".into(),
            });
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameter {
                name: "stride",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.proposal_width > 0.0 && self.proposal_width <= PI) {
            return Err(Error::InvalidParameter {
                name: "proposal_width",
                reason: format!("must lie in (0, π], got {}", self.proposal_width),
            });
        }
        Ok(())
    }
}

/// 10% of the total run, at least 1000 sweeps.
pub fn default_therm(measure_sweeps: usize) -> usize {
    measure_sweeps.div_ceil(9).max(1000)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the chain for sweep point `index` under `master`.
pub fn point_seed(master: u64, index: u64) -> u64 {
    mix(mix(master) ^ index.wrapping_mul(0xd605_bbb5_8c8a_bbb5))
}

/// Spin directions, one unit vector `(cos θ, sin θ)` per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinConfig {
    spins: Vec<[f64; 2]>,
}

impl SpinConfig {
    pub fn cold(n: usize) -> Self {
        Self {
            spins: vec![[1.0, 0.0]; n],
        }
    }

    pub fn hot(n: usize, rng: &mut impl Rng) -> Self {
        Self::from_angles(&(0..n).map(|_| rng.random::<f64>() * TAU).collect::<Vec<_>>())
    }

    pub fn from_angles(angles: &[f64]) -> Self {
        Self {
            spins: angles
                .iter()
                .map(|t| {
                    let (s, c) = t.sin_cos();
                    [c, s]
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    /// Angle of spin `i` in `[0, 2π)`.
    pub fn angle(&self, i: usize) -> f64 {
        let [c, s] = self.spins[i];
        let t = s.atan2(c);
        if t < 0.0 {
            let t = t + TAU;
            if t >= TAU { 0.0 } else { t }
        } else {
            t
        }
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.angle(i)).collect()
    }

    pub fn vector(&self, i: usize) -> [f64; 2] {
        self.spins[i]
    }

    /// Adds `c` to every angle.
    pub fn rotate(&mut self, c: f64) {
        let (sc, cc) = c.sin_cos();
        for v in &mut self.spins {
            *v = [v[0] * cc - v[1] * sc, v[0] * sc + v[1] * cc];
        }
    }
}

/// `e^x` for `x ≤ 0` with relative error below `1e-14`.
#[inline]
fn fast_exp(x: f64) -> f64 {
    const LN2_HI: f64 = 0.693_147_180_369_123_8;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    if x < -700.0 {
        return 0.0;
    }
    // nearest integer for x ≤ 0 without a libm call
    let k = ((x * std::f64::consts::LOG2_E - 0.5) as i64) as f64;
    let r = (x - k * LN2_HI) - k * LN2_LO;
    // Taylor series to r^12 on |r| ≤ ln2/2, in Estrin form for short latency
    const C: [f64; 13] = [
        1.0,
        1.0,
        1.0 / 2.0,
        1.0 / 6.0,
        1.0 / 24.0,
        1.0 / 120.0,
        1.0 / 720.0,
        1.0 / 5040.0,
        1.0 / 40_320.0,
        1.0 / 362_880.0,
        1.0 / 3_628_800.0,
        1.0 / 39_916_800.0,
        1.0 / 479_001_600.0,
    ];
    let r2 = r * r;
    let r4 = r2 * r2;
    let r8 = r4 * r4;
    let q0 = (C[0] + C[1] * r) + (C[2] + C[3] * r) * r2;
    let q1 = (C[4] + C[5] * r) + (C[6] + C[7] * r) * r2;
    let q2 = (C[8] + C[9] * r) + (C[10] + C[11] * r) * r2;
    let p = q0 + q1 * r4 + (q2 + C[12] * r4) * r8;
    p * f64::from_bits(((k as i64 + 1023) as u64) << 52)
}

/// Metropolis test `r < e^x`; falls back to the library `exp` only when `r`
/// lies within rounding distance of the threshold.
#[inline]
fn metropolis_accept(r: f64, x: f64) -> bool {
    let a = fast_exp(x);
    if (r - a).abs() <= 1e-12 * a {
        return r < x.exp();
    }
    r < a
}

/// One Newton step towards unit length; updates only ever drift by a few ulp.
#[inline]
fn renormalize(v: [f64; 2]) -> [f64; 2] {
    let r = 1.5 - 0.5 * (v[0] * v[0] + v[1] * v[1]);
    [v[0] * r, v[1] * r]
}

/// Precomputed neighbour table: `[right, up, left, down]` per vertex.
#[derive(Debug, Clone)]
struct Neighbours {
    /// Sites with even `x + y` first, so consecutive updates are independent.
    order: Vec<u32>,
    table: Vec<[u32; 4]>,
    cut_sites: Vec<u32>,
}

impl Neighbours {
    fn new(lat: &TorusLattice) -> Self {
        let l = lat.size();
        let table = (0..lat.num_vertices())
            .map(|v| {
                let (x, y) = lat.vertex_coords(v);
                [
                    lat.vertex_index((x + 1) % l, y),
                    lat.vertex_index(x, (y + 1) % l),
                    lat.vertex_index((x + l - 1) % l, y),
                    lat.vertex_index(x, (y + l - 1) % l),
                ]
                .map(|u| u as u32)
            })
            .collect();
        let cut_sites = lat
            .loop_edges(Loop::ByBar)
            .iter()
            .map(|&e| lat.edge(e).start as u32)
            .collect();
        let parity = |v: usize| {
            let (x, y) = lat.vertex_coords(v);
            (x + y) % 2
        };
        let order = (0..lat.num_vertices())
            .filter(|&v| parity(v) == 0)
            .chain((0..lat.num_vertices()).filter(|&v| parity(v) == 1))
            .map(|v| v as u32)
            .collect();
        Self {
            order,
            table,
            cut_sites,
        }
    }
}

/// One measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    /// Total energy `−Σ_e cos Θ_e`.
    pub energy: f64,
    pub xbond_cos: f64,
    pub xbond_sin: f64,
    /// Sums over the twist cut `B_ȳ`.
    pub cut_cos: f64,
    pub cut_sin: f64,
    /// Magnetization per site.
    pub mag_x: f64,
    pub mag_y: f64,
}

fn measure_spins(nb: &Neighbours, spins: &[[f64; 2]]) -> Measurement {
    let (mut xc, mut xs, mut yc, mut mx, mut my) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &[c, s]) in spins.iter().enumerate() {
        let [r, u, ..] = nb.table[i];
        let [rc, rs] = spins[r as usize];
        let [uc, us] = spins[u as usize];
        xc += c * rc + s * rs;
        xs += c * rs - s * rc;
        yc += c * uc + s * us;
        mx += c;
        my += s;
    }
    let (mut cc, mut cs) = (0.0, 0.0);
    for &i in &nb.cut_sites {
        let [c, s] = spins[i as usize];
        let [rc, rs] = spins[nb.table[i as usize][0] as usize];
        cc += c * rc + s * rs;
        cs += c * rs - s * rc;
    }
    let n = spins.len() as f64;
    Measurement {
        energy: -(xc + yc),
        xbond_cos: xc,
        xbond_sin: xs,
        cut_cos: cc,
        cut_sin: cs,
        mag_x: mx / n,
        mag_y: my / n,
    }
}

/// Measurement records of one chain plus run diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableSeries {
    pub size: usize,
    pub beta: f64,
    pub records: Vec<Measurement>,
    /// Metropolis acceptance during measurement, or the mean Wolff cluster
    /// size divided by `N`.
    pub acceptance: f64,
    /// Proposal width after thermalization.
    pub proposal_width: f64,
}

impl ObservableSeries {
    pub fn column(&self, f: impl Fn(&Measurement) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    pub fn num_sites(&self) -> usize {
        self.size * self.size
    }
}

/// A single Markov chain.
#[derive(Debug, Clone)]
pub struct Simulation {
    params: MCParams,
    beta: f64,
    nb: Neighbours,
    spins: SpinConfig,
    rng: ChainRng,
    width: f64,
    stamp: Vec<u32>,
    generation: u32,
    /// Fixed Wolff clusters per sweep, set during thermalization.
    clusters_per_sweep: usize,
    /// Cluster frontier: site and its projection before the flip.
    stack: Vec<(u32, f64)>,
}

impl Simulation {
    pub fn new(params: MCParams) -> Result<Self> {
        params.validate()?;
        let lat = TorusLattice::new(params.size)?;
        let mut rng = ChainRng::seed_from_u64(params.seed);
        let n = lat.num_vertices();
        let spins = match params.start {
            StartMode::Cold => SpinConfig::cold(n),
            StartMode::Hot => SpinConfig::hot(n, &mut rng),
        };
        Ok(Self {
            beta: params.beta(),
            width: params.proposal_width,
            params,
            nb: Neighbours::new(&lat),
            spins,
            rng,
            stamp: vec![0; n],
            generation: 0,
            clusters_per_sweep: n,
            stack: Vec::with_capacity(n),
        })
    }

    pub fn spins(&self) -> &SpinConfig {
        &self.spins
    }

    pub fn spins_mut(&mut self) -> &mut SpinConfig {
        &mut self.spins
    }

    pub fn measure(&self) -> Measurement {
        measure_spins(&self.nb, &self.spins.spins)
    }

    fn local_field(&self, i: usize) -> [f64; 2] {
        let s = &self.spins.spins;
        let mut h = [0.0; 2];
        for &j in &self.nb.table[i] {
            let v = s[j as usize];
            h[0] += v[0];
            h[1] += v[1];
        }
        h
    }

    /// One checkerboard-ordered Metropolis pass; returns the number of
    /// acceptances.
    pub fn metropolis_sweep(&mut self) -> usize {
        let mut accepted = 0;
        for k in 0..self.nb.order.len() {
            let i = self.nb.order[k] as usize;
            let h = self.local_field(i);
            let delta = self.width * (2.0 * self.rng.random::<f64>() - 1.0);
            let (sd, cd) = delta.sin_cos();
            let [c, s] = self.spins.spins[i];
            let new = [c * cd - s * sd, c * sd + s * cd];
            let de = -((new[0] - c) * h[0] + (new[1] - s) * h[1]);
            let r = self.rng.random::<f64>();
            let ok = metropolis_accept(r, -self.beta * de.max(0.0));
            // select rather than branch: acceptance is close to a coin flip
            self.spins.spins[i] = if ok { renormalize(new) } else { [c, s] };
            accepted += usize::from(ok);
        }
        accepted
    }

    /// Energy-conserving reflection of every spin about its local field.
    pub fn overrelax_sweep(&mut self) {
        for k in 0..self.nb.order.len() {
            let i = self.nb.order[k] as usize;
            let h = self.local_field(i);
            let h2 = h[0] * h[0] + h[1] * h[1];
            if h2 < 1e-12 {
                continue;
            }
            let [c, s] = self.spins.spins[i];
            let f = 2.0 * (c * h[0] + s * h[1]) / h2;
            self.spins.spins[i] = renormalize([f * h[0] - c, f * h[1] - s]);
        }
    }

    /// Grows and flips one Wolff reflection cluster; returns its size.
    pub fn wolff_update(&mut self) -> usize {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.fill(0);
            self.generation = 1;
        }
        let mark = self.generation;
        let n = self.spins.len();
        let alpha = self.rng.random::<f64>() * PI;
        let (ry, rx) = alpha.sin_cos();
        let seed = self.rng.random_range(0..n);
        let spins = &mut self.spins.spins;
        let reflect = |v: &mut [f64; 2]| -> f64 {
            let p = v[0] * rx + v[1] * ry;
            v[0] -= 2.0 * p * rx;
            v[1] -= 2.0 * p * ry;
            p
        };
        self.stack.clear();
        self.stamp[seed] = mark;
        self.stack.push((seed as u32, reflect(&mut spins[seed])));
        let mut size = 1;
        while let Some((i, pi)) = self.stack.pop() {
            for &j in &self.nb.table[i as usize] {
                let j = j as usize;
                if self.stamp[j] == mark {
                    continue;
                }
                let pj = spins[j][0] * rx + spins[j][1] * ry;
                let x = 2.0 * self.beta * pi * pj;
                if x > 0.0 && self.rng.random::<f64>() < 1.0 - (-x).exp() {
                    self.stamp[j] = mark;
                    self.stack.push((j as u32, reflect(&mut spins[j])));
                    size += 1;
                }
            }
        }
        size
    }

    /// One sweep of the configured algorithm. Returns `(accepted, proposed)`
    /// for Metropolis, `(flipped sites, clusters)` for Wolff.
    fn sweep(&mut self) -> (usize, usize) {
        let n = self.spins.len();
        match self.params.algorithm {
            Algorithm::Metropolis => (self.metropolis_sweep(), n),
            Algorithm::MetropolisOverrelax => {
                let a = self.metropolis_sweep();
                self.overrelax_sweep();
                (a, n)
            }
            Algorithm::Wolff => {
                let clusters = self.clusters_per_sweep;
                let flipped = (0..clusters).map(|_| self.wolff_update()).sum();
                (flipped, clusters)
            }
        }
    }

    /// Adapts the Metropolis width, or for Wolff the number of clusters per
    /// sweep so that about `N` sites flip. Both are frozen afterwards: a
    /// state-dependent stopping rule would bias the measured states.
    fn thermalize(&mut self) {
        const WINDOW: usize = 50;
        let n = self.spins.len();
        let wolff = self.params.algorithm == Algorithm::Wolff;
        let (mut acc, mut prop) = (0, 0);
        let (mut flipped, mut clusters) = (0, 0);
        for sweep in 1..=self.params.therm_sweeps {
            if wolff {
                while flipped < sweep * n {
                    flipped += self.wolff_update();
                    clusters += 1;
                }
                continue;
            }
            let (a, p) = self.sweep();
            acc += a;
            prop += p;
            if sweep % WINDOW == 0 {
                let rate = acc as f64 / prop as f64;
                if rate > 0.6 {
                    self.width = (self.width * 1.1).min(PI);
                } else if rate < 0.4 {
                    self.width /= 1.1;
                }
                acc = 0;
                prop = 0;
            }
        }
        if wolff && flipped > 0 {
            self.clusters_per_sweep = ((clusters * n) as f64 / flipped as f64).round().max(1.0) as usize;
        }
    }

    /// Thermalizes, then records one measurement every `stride` sweeps.
    pub fn run(mut self) -> ObservableSeries {
        self.thermalize();
        let n = self.spins.len();
        let p = &self.params;
        let mut records = Vec::with_capacity(p.measure_sweeps / p.stride);
        let (mut acc, mut prop) = (0usize, 0usize);
        for sweep in 1..=self.params.measure_sweeps {
            let (a, q) = self.sweep();
            acc += a;
            prop += q;
            if sweep % self.params.stride == 0 {
                records.push(self.measure());
            }
        }
        let acceptance = match self.params.algorithm {
            Algorithm::Wolff => acc as f64 / prop as f64 / n as f64,
            _ => acc as f64 / prop as f64,
        };
        ObservableSeries {
            size: self.params.size,
            beta: self.beta,
            records,
            acceptance,
            proposal_width: self.width,
        }
    }
}

/// Validates `params` and runs one chain.
pub fn run(params: &MCParams) -> Result<ObservableSeries> {
    Ok(Simulation::new(params.clone())?.run())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Distributed,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StiffnessEstimate {
    pub rho_s: f64,
    pub error: f64,
    pub kind: EstimatorKind,
    /// `⟨Σ cos Θ⟩` over the bond class.
    pub cos_mean: f64,
    /// `⟨Σ sin Θ⟩` over the bond class.
    pub sin_mean: f64,
    /// `⟨(Σ sin Θ)²⟩` over the bond class.
    pub sin2_mean: f64,
    pub underbinned: bool,
}

fn stiffness(
    series: &ObservableSeries,
    bins: usize,
    kind: EstimatorKind,
) -> Result<StiffnessEstimate> {
    let (cos, sin): (Vec<f64>, Vec<f64>) = match kind {
        EstimatorKind::Distributed => series
            .records
            .iter()
            .map(|r| (r.xbond_cos, r.xbond_sin))
            .unzip(),
        EstimatorKind::Boundary => series.records.iter().map(|r| (r.cut_cos, r.cut_sin)).unzip(),
    };
    let sin2: Vec<f64> = sin.iter().map(|s| s * s).collect();
    let binned = BinnedSeries::new(&[&cos, &sin, &sin2], bins)?;
    let norm = match kind {
        EstimatorKind::Distributed => series.num_sites() as f64,
        EstimatorKind::Boundary => 1.0,
    };
    let beta = series.beta;
    let est = analysis::jackknife(&binned, |m| (m[0] - beta * (m[2] - m[1] * m[1])) / norm)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(StiffnessEstimate {
        rho_s: est.mean,
        error: est.error,
        kind,
        cos_mean: mean(&cos),
        sin_mean: mean(&sin),
        sin2_mean: mean(&sin2),
        underbinned: binned.underbinned(),
    })
}

/// `ρ_s = (1/N)⟨Σ_x cos Θ⟩ − (β/N) Var(Σ_x sin Θ)` over all x-bonds.
pub fn stiffness_distributed(series: &ObservableSeries, bins: usize) -> Result<StiffnessEstimate> {
    stiffness(series, bins, EstimatorKind::Distributed)
}

/// `ρ_s = ⟨Σ_B cos Θ⟩ − β Var(Σ_B sin Θ)` over the twist cut.
pub fn stiffness_boundary(series: &ObservableSeries, bins: usize) -> Result<StiffnessEstimate> {
    stiffness(series, bins, EstimatorKind::Boundary)
}

/// Mean total energy with its jackknife error.
pub fn energy_estimate(series: &ObservableSeries, bins: usize) -> Result<Estimate> {
    let e = series.column(|r| r.energy);
    analysis::jackknife(&BinnedSeries::new(&[&e], bins)?, |m| m[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn energy_of(nb: &Neighbours, angles: &[f64]) -> f64 {
        let mut e = 0.0;
        for (i, t) in angles.iter().enumerate() {
            for &j in &nb.table[i][..2] {
                e -= (angles[j as usize] - t).cos();
            }
        }
        e
    }

    #[test]
    fn fast_exp_is_accurate() {
        for i in 0..=20_000 {
            let x = -(i as f64) * 0.0349;
            let (a, b) = (fast_exp(x), x.exp());
            assert!((a - b).abs() <= 1e-14 * b, "{x}: {a} vs {b}");
        }
        assert_eq!(fast_exp(-800.0), 0.0);
        assert_eq!(fast_exp(0.0), 1.0);
    }

    #[test]
    fn cold_start_has_minimal_energy() {
        let sim = Simulation::new(MCParams::new(5, 0.5)).unwrap();
        let m = sim.measure();
        assert_eq!(m.energy, -50.0);
        assert_eq!(m.cut_cos, 5.0);
        assert_eq!(m.mag_x, 1.0);
    }

    #[test]
    fn measurement_matches_direct_sums() {
        let lat = TorusLattice::new(4).unwrap();
        let nb = Neighbours::new(&lat);
        let mut rng = ChainRng::seed_from_u64(5);
        let spins = SpinConfig::hot(16, &mut rng);
        let angles = spins.angles();
        let m = measure_spins(&nb, &spins.spins);
        assert!((m.energy - energy_of(&nb, &angles)).abs() < 1e-12);
        let (mut cc, mut cs) = (0.0, 0.0);
        for &e in lat.loop_edges(Loop::ByBar) {
            let edge = lat.edge(e);
            let d = angles[edge.end] - angles[edge.start];
            cc += d.cos();
            cs += d.sin();
        }
        assert!((m.cut_cos - cc).abs() < 1e-12 && (m.cut_sin - cs).abs() < 1e-12);
    }

    #[test]
    fn global_rotation_leaves_bond_sums_unchanged() {
        let lat = TorusLattice::new(6).unwrap();
        let nb = Neighbours::new(&lat);
        let mut rng = ChainRng::seed_from_u64(9);
        let mut spins = SpinConfig::hot(36, &mut rng);
        let before = measure_spins(&nb, &spins.spins);
        spins.rotate(1.234);
        let after = measure_spins(&nb, &spins.spins);
        assert!((before.energy - after.energy).abs() < 1e-12);
        assert!((before.xbond_cos - after.xbond_cos).abs() < 1e-12);
        assert!((before.cut_cos - after.cut_cos).abs() < 1e-12);
        let (s, c) = 1.234f64.sin_cos();
        assert!((after.mag_x - (before.mag_x * c - before.mag_y * s)).abs() < 1e-12);
    }

    #[test]
    fn angles_are_reduced() {
        let s = SpinConfig::from_angles(&[-0.5, 7.0, 0.0, -1e-18]);
        for t in s.angles() {
            assert!((0.0..TAU).contains(&t));
        }
        assert!((s.angle(0) - (TAU - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn overrelaxation_conserves_energy() {
        let mut p = MCParams::new(8, 0.9);
        p.start = StartMode::Hot;
        let mut sim = Simulation::new(p).unwrap();
        let e0 = sim.measure().energy;
        sim.overrelax_sweep();
        assert!((sim.measure().energy - e0).abs() < 1e-9);
    }

    #[test]
    fn wolff_clusters_track_temperature() {
        let mut p = MCParams::new(8, 0.1).with_algorithm(Algorithm::Wolff);
        p.start = StartMode::Cold;
        let mut sim = Simulation::new(p.clone()).unwrap();
        let spanning = (0..200).filter(|_| sim.wolff_update() == 64).count();
        assert!(spanning > 100, "{spanning}");

        p.temperature = 100.0;
        let mut sim = Simulation::new(p).unwrap();
        let mean = (0..2000).map(|_| sim.wolff_update()).sum::<usize>() as f64 / 2000.0;
        assert!(mean < 1.2, "{mean}");
    }

    #[test]
    fn wolff_commutes_with_global_rotation() {
        let mut p = MCParams::new(6, 0.8).with_algorithm(Algorithm::Wolff);
        p.start = StartMode::Hot;
        let mut sim = Simulation::new(p).unwrap();
        for _ in 0..20 {
            sim.wolff_update();
        }
        let e = sim.measure().energy;
        sim.spins_mut().rotate(0.77);
        assert!((sim.measure().energy - e).abs() < 1e-10);
        sim.wolff_update();
        let e1 = sim.measure().energy;
        sim.spins_mut().rotate(-2.0);
        assert!((sim.measure().energy - e1).abs() < 1e-10);
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let p = MCParams::new(4, 0.8).with_sweeps(200).with_seed(42);
        let a = run(&p).unwrap();
        let b = run(&p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 100);
        let c = run(&p.clone().with_seed(43)).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn point_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| point_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(point_seed(7, 0), point_seed(8, 0));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(matches!(run(&MCParams::new(0, 1.0)), Err(Error::InvalidSize { .. })));
        assert!(run(&MCParams::new(4, -1.0)).is_err());
        assert!(run(&MCParams::new(4, 1.0).with_sweeps(0)).is_err());
        let mut p = MCParams::new(4, 1.0);
        p.stride = 0;
        assert!(run(&p).is_err());
        p.stride = 1;
        p.proposal_width = 4.0;
        assert!(run(&p).is_err());
    }

    #[test]
    fn default_thermalization_is_a_tenth() {
        assert_eq!(default_therm(100), 1000);
        assert_eq!(default_therm(200_000), 22_223);
    }
}
