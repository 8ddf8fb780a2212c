//! Modified Bessel functions of the first kind for integer order.
//!
//! The ascending series `I_k(x) = Σ_j (x/2)^{2j+k} / (j! (j+k)!)` has only
//! positive terms, so summing it in scaled form is accurate for every
//! `x ≥ 0` without cancellation; the cost grows linearly in `x`.

const RESCALE: f64 = 1e280;

/// `ln I_k(x)`. Returns `-inf` for `I_k(0)`, `k ≥ 1`, and NaN for `x < 0`.
pub fn ln_bessel_i(k: u32, x: f64) -> f64 {
    if !(x >= 0.0) {
        return f64::NAN;
    }
    if x == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let kf = f64::from(k);
    let ln_first = kf * (0.5 * x).ln() - ln_factorial(k);
    let q = 0.25 * x * x;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut ln_offset = 0.0_f64;
    let mut j = 1.0_f64;
    loop {
        term *= q / (j * (j + kf));
        sum += term;
        if sum > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            ln_offset += RESCALE.ln();
        }
        // past the peak the ratio of successive terms is below one
        if term < sum * 1e-17 && q < j * (j + kf) {
            break;
        }
        j += 1.0;
    }
    ln_first + ln_offset + sum.ln()
}

/// `I_k(x)`; overflows to `+inf` for large `x`, use [`ln_bessel_i`] there.
pub fn bessel_i(k: u32, x: f64) -> f64 {
    ln_bessel_i(k, x).exp()
}

/// Order ratios `I_k(x)/I_0(x)` for `k = 0..=kmax`. All entries lie in `[0, 1]`.
pub fn bessel_i_ratios(kmax: u32, x: f64) -> Vec<f64> {
    let ln0 = ln_bessel_i(0, x);
    (0..=kmax).map(|k| (ln_bessel_i(k, x) - ln0).exp()).collect()
}

/// Logarithmic derivatives `I_k'(x)/I_k(x) = (I_{k−1} + I_{k+1}) / (2 I_k)`
/// for `k = 0..=kmax`, using `I_{−1} = I_1`.
pub fn bessel_i_log_derivatives(kmax: u32, x: f64) -> Vec<f64> {
    let ln: Vec<f64> = (0..=kmax + 1).map(|k| ln_bessel_i(k, x)).collect();
    (0..=kmax as usize)
        .map(|k| {
            let below = if k == 0 { ln[1] } else { ln[k - 1] };
            0.5 * ((below - ln[k]).exp() + (ln[k + 1] - ln[k]).exp())
        })
        .collect()
}

fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|i| f64::from(i).ln()).sum()
}
