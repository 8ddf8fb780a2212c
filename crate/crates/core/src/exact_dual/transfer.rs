//! Column transfer matrix over integer-current states.
//!
//! A state is the vector of `L` horizontal currents crossing between two
//! neighbouring columns. Inside a column the vertical currents are fixed by
//! current conservation up to one free integer (the column's share of the
//! `y`-winding), which is summed out. The net horizontal current `K` is
//! conserved from column to column, so the transfer matrix is block diagonal
//! in `K` and `Z_K = Tr(S_K^L)` with the symmetrized block
//! `S_ab = √W_a · V_ab · √W_b`.

use crate::error::{Error, Result};

use super::SectorSums;

/// Default bound on the number of column states `(2Q+1)^L`.
pub const DEFAULT_MAX_STATES: usize = 30_000;

pub(crate) fn state_count(size: usize, q: u32) -> Option<usize> {
    let side = 2 * q as usize + 1;
    (0..size).try_fold(1usize, |acc, _| acc.checked_mul(side))
}

/// Sector sums with every edge current bounded by `|k| ≤ q`.
/// `ratios[k] = I_k/I_0` and `log_derivs[k] = I_k'/I_k` for `k ≤ q`.
pub(crate) fn sector_sums(
    size: usize,
    q: u32,
    ratios: &[f64],
    log_derivs: &[f64],
    max_states: usize,
) -> Result<SectorSums> {
    let states = state_count(size, q).unwrap_or(usize::MAX);
    if states > max_states {
        return Err(Error::Resource {
            states,
            bound: max_states,
        });
    }
    let qi = q as i32;
    let l = size;

    // group the non-zero-weight states by their net current
    let mut blocks: std::collections::BTreeMap<i32, Vec<i32>> = Default::default();
    let mut a = vec![-qi; l];
    'outer: loop {
        if a.iter().all(|&k| ratios[k.unsigned_abs() as usize] > 0.0) {
            let k: i32 = a.iter().sum();
            blocks.entry(k).or_default().extend_from_slice(&a);
        }
        for slot in a.iter_mut() {
            if *slot < qi {
                *slot += 1;
                continue 'outer;
            }
            *slot = -qi;
        }
        break;
    }

    let mut sums = SectorSums::default();
    for (k, flat) in blocks {
        let (z, wd) = block_trace(l, qi, &flat, ratios, log_derivs);
        sums.add(i64::from(k), z, wd);
    }
    Ok(sums)
}

/// `(Tr S^L, L · Tr(S^{L−1} Ṡ))` for one conserved-current block.
fn block_trace(l: usize, q: i32, flat: &[i32], ratios: &[f64], log_derivs: &[f64]) -> (f64, f64) {
    let n = flat.len() / l;
    let state = |i: usize| &flat[i * l..(i + 1) * l];
    let sqrt_w: Vec<f64> = (0..n)
        .map(|i| {
            state(i)
                .iter()
                .map(|&k| ratios[k.unsigned_abs() as usize])
                .product::<f64>()
                .sqrt()
        })
        .collect();
    let dsum: Vec<f64> = (0..n)
        .map(|i| {
            state(i)
                .iter()
                .map(|&k| log_derivs[k.unsigned_abs() as usize])
                .sum()
        })
        .collect();

    let mut s = vec![0.0; n * n];
    let mut sd = vec![0.0; n * n];
    let mut cum = vec![0i32; l];
    for i in 0..n {
        for j in i..n {
            let (a, b) = (state(i), state(j));
            let mut acc = 0;
            let (mut lo, mut hi) = (0, 0);
            for y in 0..l {
                acc += a[y] - b[y];
                cum[y] = acc;
                lo = lo.min(acc);
                hi = hi.max(acc);
            }
            let mut v = 0.0;
            let mut u = 0.0;
            for c in (-q - lo)..=(q - hi) {
                let mut prod = 1.0;
                let mut d = 0.0;
                for &cy in &cum {
                    let idx = (c + cy).unsigned_abs() as usize;
                    prod *= ratios[idx];
                    d += log_derivs[idx];
                }
                if prod > 0.0 {
                    v += prod;
                    u += prod * d;
                }
            }
            let scale = sqrt_w[i] * sqrt_w[j];
            let sv = scale * v;
            let sdv = scale * (0.5 * v * (dsum[i] + dsum[j]) + u);
            s[i * n + j] = sv;
            s[j * n + i] = sv;
            sd[i * n + j] = sdv;
            sd[j * n + i] = sdv;
        }
    }

    // S^{L−1}, symmetric
    let power = match l {
        1 => identity(n),
        2 => s.clone(),
        _ => {
            let half = (l - 1) / 2;
            let mut p = s.clone();
            for _ in 1..half {
                p = matmul(&p, &s, n);
            }
            // p = S^half; square it, then add one more factor if L−1 is odd
            let sq = matmul(&p, &p, n);
            if (l - 1) % 2 == 1 { matmul(&sq, &s, n) } else { sq }
        }
    };
    let z = dot(&power, &s);
    let wd = l as f64 * dot(&power, &sd);
    (z, wd)
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    // SAFETY: all three buffers hold n×n row-major matrices.
    unsafe {
        matrixmultiply::dgemm(
            n,
            n,
            n,
            1.0,
            a.as_ptr(),
            n as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    c
}
