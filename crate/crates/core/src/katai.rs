// SPDX-License-Identifier: Apache-2.0

//! Kátai-type orthogonality sums over `Z` and over `Z[tau_d]`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{evaluate_power, tabulate, FactorSieve, MultiplicativeSpec};
use crate::error::{bail, Result};
use crate::fourier::{pairwise_sum, pairwise_sum_f64};
use crate::quadfield::{enumerate_norm_le, PrimeElement, QuadInt};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairEntry {
    pub p: u64,
    pub q: u64,
    pub value: f64,
}

/// `|E_{n <= N/q} a(pn) conj(a(qn))|` for every prime pair `p < q < K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PairCorrelationReport {
    pub k: u64,
    pub entries: Vec<PairEntry>,
    pub max_entry: f64,
}

/// `values[n - 1] = a(n)` for `n` in `[N]`.
pub fn pair_correlations(values: &[Complex64], k: u64) -> Result<PairCorrelationReport> {
    if k < 3 {
        bail!(InvalidArgument, "prime cutoff K must be at least 3, got {k}");
    }
    let n = values.len() as u64;
    if n < k * k {
        bail!(InsufficientRange, "N = {n} is below K^2 = {}", k * k);
    }
    let ps: Vec<u64> = (2..k).filter(|&p| crate::primes::is_prime(p)).collect();
    let pairs: Vec<(u64, u64)> =
        ps.iter().enumerate().flat_map(|(i, &p)| ps[i + 1..].iter().map(move |&q| (p, q))).collect();
    let entries: Vec<PairEntry> = pairs
        .par_iter()
        .map(|&(p, q)| {
            let len = n / q;
            let terms: Vec<Complex64> =
                (1..=len).map(|m| values[(p * m - 1) as usize] * values[(q * m - 1) as usize].conj()).collect();
            PairEntry { p, q, value: (pairwise_sum(&terms) / len as f64).norm() }
        })
        .collect();
    let max_entry = entries.iter().map(|e| e.value).fold(0.0, f64::max);
    Ok(PairCorrelationReport { k, entries, max_entry })
}

/// `max_f |E_{n in [N]} f(n) a(n)|` over the family.
pub fn mult_correlation_sup(values: &[Complex64], family: &[MultiplicativeSpec]) -> Result<f64> {
    if family.is_empty() {
        bail!(InvalidArgument, "family must be non-empty");
    }
    let n = values.len();
    if n == 0 {
        bail!(InvalidArgument, "input must be non-empty");
    }
    let sieve = FactorSieve::new(n.max(2))?;
    let mut best: f64 = 0.0;
    for f in family {
        let t = tabulate(f, n, &sieve)?;
        let terms: Vec<Complex64> = t.values().iter().zip(values).map(|(x, y)| x * y).collect();
        best = best.max((pairwise_sum(&terms) / n as f64).norm());
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TkStatistics {
    /// `sum_{alpha in P} 1/N(alpha)`
    pub a: f64,
    /// `(1/count) sum_{N(z) <= x} |omega(z) - A|`
    pub mean_deviation: f64,
    pub count: usize,
}

fn validate_p(d: u32, p: &[PrimeElement]) -> Result<()> {
    if p.is_empty() {
        bail!(InvalidArgument, "prime set P must be non-empty");
    }
    if let Some(e) = p.iter().find(|e| e.z.d != d) {
        bail!(InvalidArgument, "prime element {} is not in Z[tau_{d}]", e.z);
    }
    Ok(())
}

/// Number of `alpha in P` dividing `z` (exact ring division).
pub fn omega(z: &QuadInt, p: &[PrimeElement]) -> Result<usize> {
    let nz = z.norm()?;
    Ok(p.iter().filter(|a| nz % a.norm == 0 && z.is_divisible_by(&a.z)).count())
}

/// Deviation of `omega` from its mean `A` over `{z : N(z) <= x}` (the zero
/// element included).
pub fn tk_statistics(d: u32, p: &[PrimeElement], x: u64) -> Result<TkStatistics> {
    validate_p(d, p)?;
    if x < 1 {
        bail!(InvalidArgument, "x must be at least 1");
    }
    let a: f64 = p.iter().map(|e| 1.0 / e.norm as f64).sum();
    let zs = enumerate_norm_le(d, x)?;
    let devs: Vec<f64> =
        zs.par_iter().map(|z| omega(z, p).map(|w| (w as f64 - a).abs())).collect::<Result<_>>()?;
    Ok(TkStatistics { a, mean_deviation: pairwise_sum_f64(&devs) / zs.len() as f64, count: zs.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KataiZdReport {
    /// `sum_{N(z) <= x} f(z) h(z)`
    pub s: Complex64,
    /// Off-diagonal pair sums `sum_{alpha != beta} |sum_z h(alpha z) conj(h(beta z))|`,
    /// the quantity the argument controls.
    pub c_h: f64,
    /// The same with `f` in place of `h`.
    pub c_f: f64,
    pub a: f64,
    pub x: u64,
    /// `sqrt(1/A + 1/A^2 + C_h/(A^2 x))`
    pub bound_shape: f64,
}

/// `S(x)` and the pair sums for `f(z) = g(N(z)^r)` and a bounded `h`.
pub fn katai_zd_sums<H>(
    g: &MultiplicativeSpec,
    r: u32,
    h: H,
    d: u32,
    p: &[PrimeElement],
    x: u64,
) -> Result<KataiZdReport>
where
    H: Fn(&QuadInt) -> Complex64 + Sync,
{
    validate_p(d, p)?;
    if x < 1 {
        bail!(InvalidArgument, "x must be at least 1");
    }
    let max_alpha = p.iter().map(|e| e.norm).max().unwrap_or(1);
    // f(alpha z) needs N(alpha z) <= x
    let sieve = FactorSieve::new(x.max(max_alpha).max(2) as usize)?;
    let f = |z: &QuadInt| -> Result<Complex64> { evaluate_power(g, z.norm()?, r, &sieve) };
    let zs = enumerate_norm_le(d, x)?;
    let terms: Vec<Complex64> = zs.par_iter().map(|z| Ok(f(z)? * h(z))).collect::<Result<_>>()?;
    let s = pairwise_sum(&terms);

    let pairs: Vec<(usize, usize)> =
        (0..p.len()).flat_map(|i| (0..p.len()).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let sums: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<(f64, f64)> {
            let (alpha, beta) = (&p[i], &p[j]);
            let bound = x / alpha.norm.max(beta.norm);
            let mut sh = Vec::new();
            let mut sf = Vec::new();
            for z in enumerate_norm_le(d, bound)? {
                let az = alpha.z.multiply(&z)?;
                let bz = beta.z.multiply(&z)?;
                sh.push(h(&az) * h(&bz).conj());
                sf.push(f(&az)? * f(&bz)?.conj());
            }
            Ok((pairwise_sum(&sh).norm(), pairwise_sum(&sf).norm()))
        })
        .collect::<Result<_>>()?;
    let c_h = pairwise_sum_f64(&sums.iter().map(|s| s.0).collect::<Vec<_>>());
    let c_f = pairwise_sum_f64(&sums.iter().map(|s| s.1).collect::<Vec<_>>());
    let a: f64 = p.iter().map(|e| 1.0 / e.norm as f64).sum();
    let bound_shape = (1.0 / a + 1.0 / (a * a) + c_h / (a * a * x as f64)).sqrt();
    Ok(KataiZdReport { s, c_h, c_f, a, x, bound_shape })
}
