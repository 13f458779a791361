//! Two-sided Fisher exact test for 2x2 contingency tables.

use crate::error::{data_err, Result};

/// Largest table total for which hypergeometric weights are compared exactly
/// in `u128`; every weight is bounded by `C(n, n/2)`.
const EXACT_LIMIT: u64 = 124;

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for i in 1..=n {
        out[i] = out[i - 1] + (i as f64).ln();
    }
    out
}

/// Two-sided p-value of the table `[[a, b], [c, d]]`: the total probability,
/// under fixed margins, of all tables no more likely than the observed one.
pub fn fisher_exact(a: u64, b: u64, c: u64, d: u64) -> Result<f64> {
    let n = a + b + c + d;
    if n == 0 {
        return Err(data_err!("Fisher's exact test is undefined for an all-zero table"));
    }
    let (row1, col1) = (a + b, a + c);
    let row2 = c + d;
    let lo = col1.saturating_sub(row2);
    let hi = row1.min(col1);

    if n <= EXACT_LIMIT {
        // P(x) = C(row1, x) C(row2, col1 - x) / C(n, col1): compare numerators exactly.
        let weight = |x: u64| binomial(row1, x) * binomial(row2, col1 - x);
        let observed = weight(a);
        let tail: u128 = (lo..=hi).map(weight).filter(|&w| w <= observed).sum();
        let p = tail as f64 / binomial(n, col1) as f64;
        return Ok(p.min(1.0));
    }

    let lf = ln_factorials(n as usize);
    let ln_p = |x: u64| -> f64 {
        let (xa, xb, xc) = (x, row1 - x, col1 - x);
        let xd = row2 - xc;
        lf[row1 as usize] + lf[row2 as usize] + lf[col1 as usize] + lf[(n - col1) as usize]
            - lf[n as usize]
            - lf[xa as usize]
            - lf[xb as usize]
            - lf[xc as usize]
            - lf[xd as usize]
    };
    let observed = ln_p(a);
    // relative tolerance for ties, as in common statistical packages
    let cutoff = observed + (1.0f64 + 1e-7).ln();
    let p: f64 = (lo..=hi).map(ln_p).filter(|&l| l <= cutoff).map(f64::exp).sum();
    Ok(p.min(1.0))
}
