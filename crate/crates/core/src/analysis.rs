//! Statistical post-processing of Monte Carlo series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of bins for jackknife error estimates.
pub const DEFAULT_BINS: usize = 50;

/// Minimum number of bins accepted by [`jackknife`].
pub const MIN_BINS: usize = 10;

/// Universal-jump line `ρ_s = (2/π) T` used for the KT crossing.
pub const KT_SLOPE: f64 = 2.0 / std::f64::consts::PI;

/// Mean with a one-sigma error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub error: f64,
}

/// Integrated autocorrelation time with Sokal's self-consistent window
/// (`W ≥ 6 τ(W)`). Returns 0.5 for uncorrelated or constant data.
pub fn autocorrelation_time(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.5;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return 0.5;
    }
    let mut tau = 0.5;
    for t in 1..n / 2 {
        let c = x[..n - t]
            .iter()
            .zip(&x[t..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / ((n - t) as f64 * var);
        tau += c;
        if t as f64 >= 6.0 * tau {
            break;
        }
    }
    tau.max(0.5)
}

/// Several observables averaged over equal-size consecutive bins.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedSeries {
    /// `bins[b][c]`: mean of column `c` in bin `b`.
    pub bins: Vec<Vec<f64>>,
    pub bin_size: usize,
    /// Largest integrated autocorrelation time over the columns.
    pub tau: f64,
}

impl BinnedSeries {
    /// Bins equally long `columns` into `n_bins` bins. Trailing samples that
    /// do not fill a bin are dropped. Series shorter than `n_bins` get one
    /// sample per bin.
    pub fn new(columns: &[&[f64]], n_bins: usize) -> Result<Self> {
        let len = columns.first().map_or(0, |c| c.len());
        if len == 0 || n_bins == 0 {
            return Err(Error::EmptySeries);
        }
        if columns.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidParameter {
                name: "columns",
                reason: "columns differ in length".into(),
            });
        }
        let n_bins = n_bins.min(len);
        let bin_size = len / n_bins;
        let bins = (0..n_bins)
            .map(|b| {
                columns
                    .iter()
                    .map(|c| c[b * bin_size..(b + 1) * bin_size].iter().sum::<f64>() / bin_size as f64)
                    .collect()
            })
            .collect();
        let tau = columns
            .iter()
            .map(|c| autocorrelation_time(c))
            .fold(0.5, f64::max);
        Ok(Self {
            bins,
            bin_size,
            tau,
        })
    }

    /// Builds directly from per-bin values (bin size 1).
    pub fn from_bins(bins: Vec<Vec<f64>>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::EmptySeries);
        }
        Ok(Self {
            bins,
            bin_size: 1,
            tau: 0.5,
        })
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Bins shorter than twice the autocorrelation time give biased errors.
    pub fn underbinned(&self) -> bool {
        (self.bin_size as f64) < 2.0 * self.tau
    }

    fn column_means(&self, skip: Option<usize>) -> Vec<f64> {
        let cols = self.bins[0].len();
        let n = self.bins.len() - usize::from(skip.is_some());
        let mut means = vec![0.0; cols];
        for (b, row) in self.bins.iter().enumerate() {
            if Some(b) == skip {
                continue;
            }
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n as f64);
        means
    }
}

/// Leave-one-bin-out jackknife of a statistic of the column means.
pub fn jackknife<F>(series: &BinnedSeries, statistic: F) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64,
{
    let n = series.len();
    if n < MIN_BINS {
        return Err(Error::TooFewBins {
            got: n,
            min: MIN_BINS,
        });
    }
    let full = statistic(&series.column_means(None));
    let partial: Vec<f64> = (0..n)
        .map(|b| statistic(&series.column_means(Some(b))))
        .collect();
    let avg = partial.iter().sum::<f64>() / n as f64;
    let var = partial.iter().map(|p| (p - avg).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    Ok(Estimate {
        mean: full,
        error: var.sqrt(),
    })
}

/// Shape-preserving piecewise-cubic Hermite interpolant (Fritsch–Carlson
/// slopes with the three-point end conditions).
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "table",
                reason: "need at least two points with matching lengths".into(),
            });
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter {
                name: "table",
                reason: "abscissae must be strictly increasing".into(),
            });
        }
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes = vec![delta[0]; 2];
        } else {
            for k in 1..n - 1 {
                let (d0, d1) = (delta[k - 1], delta[k]);
                if d0 * d1 > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    slopes[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
                }
            }
            slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            slopes,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Value at `x`; constant extrapolation outside the domain.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.xs.partition_point(|&v| v <= x) - 1;
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// One row of a `ρ_s(T)` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StiffnessPoint {
    pub temperature: f64,
    pub rho_s: f64,
    pub rho_s_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub temperature: f64,
    pub error: f64,
}

/// Temperature where the monotone interpolant of `ρ_s(T)` meets `slope · T`,
/// coming from the side where `ρ_s` lies above the line.
pub fn kt_crossing_with_slope(table: &[StiffnessPoint], slope: f64) -> Result<Crossing> {
    let t_star = crossing_of(table, slope, 0.0)?;
    let span = table.last().map_or(0.0, |p| p.temperature) - table.first().map_or(0.0, |p| p.temperature);
    let shifted: Vec<f64> = [1.0, -1.0]
        .iter()
        .map(|&s| crossing_of(table, slope, s).map_or(span, |t| (t - t_star).abs()))
        .collect();
    Ok(Crossing {
        temperature: t_star,
        error: shifted.iter().cloned().fold(0.0, f64::max),
    })
}

/// [`kt_crossing_with_slope`] with the universal slope `2/π`.
pub fn kt_crossing(table: &[StiffnessPoint]) -> Result<Crossing> {
    kt_crossing_with_slope(table, KT_SLOPE)
}

fn crossing_of(table: &[StiffnessPoint], slope: f64, err_shift: f64) -> Result<f64> {
    let mut rows = table.to_vec();
    rows.sort_by(|a, b| a.temperature.total_cmp(&b.temperature));
    let ts: Vec<f64> = rows.iter().map(|p| p.temperature).collect();
    let rho: Vec<f64> = rows.iter().map(|p| p.rho_s + err_shift * p.rho_s_err).collect();
    let interp = MonotoneCubic::new(&ts, &rho)?;
    let g = |t: f64| interp.eval(t) - slope * t;
    let k = (0..ts.len() - 1)
        .find(|&k| g(ts[k]) >= 0.0 && g(ts[k + 1]) < 0.0)
        .ok_or(Error::NoBracket { slope })?;
    let (mut lo, mut hi) = (ts[k], ts[k + 1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn normal(rng: &mut impl Rng) -> f64 {
        // Box–Muller
        let (u1, u2): (f64, f64) = (rng.random(), rng.random());
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    #[test]
    fn constant_series_has_zero_error() {
        let x = vec![3.5; 1000];
        let b = BinnedSeries::new(&[&x], 50).unwrap();
        let est = jackknife(&b, |m| m[0]).unwrap();
        assert_eq!(est.mean, 3.5);
        assert_eq!(est.error, 0.0);
    }

    #[test]
    fn linear_statistic_reproduces_plain_mean() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        let x: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let b = BinnedSeries::new(&[&x, &y], 50).unwrap();
        let est = jackknife(&b, |m| 2.0 * m[0] - m[1]).unwrap();
        let plain = x.iter().zip(&y).map(|(a, c)| 2.0 * a - c).sum::<f64>() / 5000.0;
        assert!((est.mean - plain).abs() < 1e-12);
    }

    #[test]
    fn iid_normal_error_matches_theory() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
        let n = 4000;
        let mut ratios = Vec::new();
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
            let b = BinnedSeries::new(&[&x], 50).unwrap();
            ratios.push(jackknife(&b, |m| m[0]).unwrap().error * (n as f64).sqrt());
        }
        let avg = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((avg - 1.0).abs() < 0.2, "average ratio {avg}");
    }

    #[test]
    fn too_few_bins_is_an_error() {
        let b = BinnedSeries::new(&[&[1.0, 2.0, 3.0]], 50).unwrap();
        assert!(matches!(jackknife(&b, |m| m[0]), Err(Error::TooFewBins { got: 3, .. })));
        assert!(matches!(BinnedSeries::new(&[&[]], 50), Err(Error::EmptySeries)));
    }

    #[test]
    fn autocorrelation_of_ar1() {
        // AR(1) with coefficient a has τ_int = (1 + a) / (2 (1 − a))
        let a = 0.8;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let mut x = vec![0.0; 200_000];
        for i in 1..x.len() {
            x[i] = a * x[i - 1] + normal(&mut rng);
        }
        let tau = autocorrelation_time(&x);
        assert!((tau - 4.5).abs() < 0.5, "tau = {tau}");
        let b = BinnedSeries::new(&[&x], 50_000).unwrap();
        assert!(b.underbinned());
    }

    #[test]
    fn linear_crossing() {
        let table: Vec<_> = (0..11)
            .map(|i| {
                let t = 0.5 + 0.08 * i as f64;
                StiffnessPoint {
                    temperature: t,
                    rho_s: 1.0 - t / 2.0,
                    rho_s_err: 0.0,
                }
            })
            .collect();
        let c = kt_crossing(&table).unwrap();
        let exact = 1.0 / (0.5 + 2.0 / std::f64::consts::PI);
        assert!((c.temperature - exact).abs() < 1e-10, "{}", c.temperature);
        assert!((exact - 0.8798016929768852).abs() < 1e-15);
        assert_eq!(c.error, 0.0);
    }

    #[test]
    fn table_above_line_does_not_bracket() {
        let table: Vec<_> = (0..5)
            .map(|i| StiffnessPoint {
                temperature: 0.2 + 0.1 * i as f64,
                rho_s: 2.0,
                rho_s_err: 0.01,
            })
            .collect();
        assert!(matches!(kt_crossing(&table), Err(Error::NoBracket { .. })));
    }

    #[test]
    fn monotone_interpolant_does_not_overshoot() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [1.0, 1.0, 0.9, 0.1, 0.0];
        let p = MonotoneCubic::new(&xs, &ys).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=400 {
            let v = p.eval(i as f64 * 0.01);
            assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
            prev = v;
        }
        for (x, y) in xs.iter().zip(ys) {
            assert!((p.eval(*x) - y).abs() < 1e-15);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #[test]
            fn jackknife_error_ignores_bin_order(
                vals in prop::collection::vec(-10.0f64..10.0, 12..60),
                seed in any::<u64>(),
            ) {
                let bins: Vec<Vec<f64>> = vals.iter().map(|&v| vec![v, v * v]).collect();
                let mut shuffled = bins.clone();
                let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
                for i in (1..shuffled.len()).rev() {
                    shuffled.swap(i, rng.random_range(0..=i));
                }
                let stat = |m: &[f64]| m[1] - m[0] * m[0];
                let a = jackknife(&BinnedSeries::from_bins(bins).unwrap(), stat).unwrap();
                let b = jackknife(&BinnedSeries::from_bins(shuffled).unwrap(), stat).unwrap();
                prop_assert!((a.error - b.error).abs() <= 1e-9 * (1.0 + a.error));
            }

            #[test]
            fn crossing_is_scale_equivariant(
                a in 0.8f64..1.2, b in 0.2f64..0.8, c in 0.1f64..10.0,
            ) {
                let table: Vec<_> = (0..15)
                    .map(|i| {
                        let t = 0.3 + 0.1 * i as f64;
                        StiffnessPoint { temperature: t, rho_s: (a - b * t).max(0.0), rho_s_err: 0.0 }
                    })
                    .collect();
                let scaled: Vec<_> = table
                    .iter()
                    .map(|p| StiffnessPoint { rho_s: c * p.rho_s, ..*p })
                    .collect();
                if let Ok(t1) = kt_crossing_with_slope(&table, KT_SLOPE) {
                    let t2 = kt_crossing_with_slope(&scaled, c * KT_SLOPE).unwrap();
                    prop_assert!((t1.temperature - t2.temperature).abs() < 1e-9);
                }
            }
        }
    }
}
