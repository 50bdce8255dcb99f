// SPDX-License-Identifier: Apache-2.0

//! Gowers uniformity norms on `Z_N` and on intervals `[N]`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::arith::unit_phase;
use crate::error::{bail, Result};
use crate::fourier::{pairwise_sum, pairwise_sum_f64, DftPlan};
use crate::primes;

fn validate_order(s: u32) -> Result<()> {
    if s < 1 {
        bail!(InvalidArgument, "Gowers order s must be at least 1");
    }
    if s > 8 {
        bail!(SizeLimit, "Gowers order s = {s} is beyond the supported range");
    }
    Ok(())
}

/// `||a||_{U^s(Z_N)}` via the shift recursion with an FFT base at `s = 2`.
pub fn gowers_norm_cyclic(a: &[Complex64], s: u32) -> Result<f64> {
    validate_order(s)?;
    if a.is_empty() {
        bail!(InvalidArgument, "signal must be non-empty");
    }
    let plan = DftPlan::new(a.len());
    let p = powered_norm(a, s, &plan);
    Ok(p.max(0.0).powf(1.0 / f64::from(1u32 << s)))
}

/// `||a||_{U^s}^{2^s}`
fn powered_norm(a: &[Complex64], s: u32, plan: &DftPlan) -> f64 {
    let n = a.len();
    match s {
        1 => (pairwise_sum(a) / n as f64).norm_sqr(),
        2 => plan.forward(a).power_sum(4.0),
        _ => {
            // a conj(a_{-t}) is a conjugated shift of a conj(a_t), so the
            // two share every Gowers norm: sum t = 0..=N/2 with weights.
            let half = n / 2;
            let terms: Vec<f64> = (0..=half)
                .into_par_iter()
                .map(|t| {
                    let weight = if t == 0 || 2 * t == n { 1.0 } else { 2.0 };
                    let b: Vec<Complex64> = (0..n).map(|m| a[m] * a[(m + t) % n].conj()).collect();
                    // embedded interval data leaves most shifts with no overlap
                    if b.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                        return 0.0;
                    }
                    weight * powered_norm(&b, s - 1, plan)
                })
                .collect();
            pairwise_sum_f64(&terms) / n as f64
        }
    }
}

/// Reference evaluator: the recursion all the way down to `U^1`, no
/// transforms and no symmetry reduction.
pub fn gowers_norm_recursive(a: &[Complex64], s: u32) -> Result<f64> {
    validate_order(s)?;
    if a.is_empty() {
        bail!(InvalidArgument, "signal must be non-empty");
    }
    fn powered(a: &[Complex64], s: u32) -> f64 {
        let n = a.len();
        if s == 1 {
            return (pairwise_sum(a) / n as f64).norm_sqr();
        }
        let terms: Vec<f64> = (0..n)
            .map(|t| {
                let b: Vec<Complex64> = (0..n).map(|m| a[m] * a[(m + t) % n].conj()).collect();
                powered(&b, s - 1)
            })
            .collect();
        pairwise_sum_f64(&terms) / n as f64
    }
    Ok(powered(a, s).max(0.0).powf(1.0 / f64::from(1u32 << s)))
}

/// `(sum_xi |hat a(xi)|^4)^{1/4}`
pub fn gowers_u2_fft(a: &[Complex64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    DftPlan::new(a.len()).forward(a).power_sum(4.0).powf(0.25)
}

/// `||1_[N] a||_{U^s(Z_N*)} / ||1_[N]||_{U^s(Z_N*)}` for `a` given on
/// `1..=N`; `N*` defaults to the least prime above `2N`.
pub fn gowers_norm_interval(values: &[Complex64], s: u32, nstar: Option<usize>) -> Result<f64> {
    if s < 2 {
        bail!(InvalidArgument, "interval norms need s >= 2, got {s}");
    }
    validate_order(s)?;
    let n = values.len();
    if n == 0 {
        bail!(InvalidArgument, "interval must be non-empty");
    }
    let nstar = match nstar {
        Some(m) if m <= 2 * n => bail!(InvalidArgument, "N* = {m} must exceed 2N = {}", 2 * n),
        Some(m) => m,
        None => primes::next_prime_above(2 * n as u64) as usize,
    };
    let plan = DftPlan::new(nstar);
    let mut embedded = vec![Complex64::new(0.0, 0.0); nstar];
    embedded[1..=n].copy_from_slice(values);
    let num = powered_norm(&embedded, s, &plan);
    let mut indicator = vec![Complex64::new(0.0, 0.0); nstar];
    indicator[1..=n].fill(Complex64::new(1.0, 0.0));
    let den = powered_norm(&indicator, s, &plan);
    Ok((num.max(0.0) / den).powf(1.0 / f64::from(1u32 << s)))
}

/// `(N*/N)^{(s+1)/2^s}`: the ratio of `U^s(Z_N)` to `U^s(Z_N*)` norms of a
/// function supported on an interval shorter than `N/2`.
pub fn embedding_scale_factor(n: usize, nstar: usize, s: u32) -> f64 {
    (nstar as f64 / n as f64).powf(f64::from(s + 1) / f64::from(1u32 << s))
}

/// `{start, start + step, ..., start + (len - 1) step}`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progression {
    pub start: u64,
    pub step: u64,
    pub len: u64,
}

impl Progression {
    pub fn contains(&self, x: u64) -> bool {
        x >= self.start && (x - self.start).is_multiple_of(self.step) && (x - self.start) / self.step < self.len
    }

    fn last(&self) -> u64 {
        self.start + (self.len - 1) * self.step
    }
}

/// Output of a Hölder-chain bound `lhs <= constant * ||a||_{U^2} = rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderBound {
    pub lhs: f64,
    pub bound_constant: f64,
    pub rhs: f64,
}

impl HolderBound {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

/// `|E_{n in Z_N} w(n) a(n)| <= ||hat w||_{4/3} ||a||_{U^2}`
fn holder_bound(weight: &[Complex64], a: &[Complex64], plan: &DftPlan) -> HolderBound {
    let n = a.len();
    let terms: Vec<Complex64> = weight.iter().zip(a).map(|(w, x)| w * x).collect();
    let lhs = (pairwise_sum(&terms) / n as f64).norm();
    let bound_constant = plan.forward(weight).power_sum(4.0 / 3.0).powf(0.75);
    let u2 = plan.forward(a).power_sum(4.0).powf(0.25);
    HolderBound { lhs, bound_constant, rhs: bound_constant * u2 }
}

/// Bound for `|E_{n in [N]} 1_P(n) a(n)|` with `a` on `Z_N`, `N` prime.
pub fn progression_u2_bound(p: Progression, a: &[Complex64]) -> Result<HolderBound> {
    let n = a.len() as u64;
    if !primes::is_prime(n) {
        bail!(InvalidArgument, "N = {n} must be prime");
    }
    if p.step == 0 || p.len == 0 || p.start < 1 || p.last() > n {
        bail!(InvalidArgument, "progression {p:?} is not a non-empty subset of [1, {n}]");
    }
    let mut weight = vec![Complex64::new(0.0, 0.0); n as usize];
    for i in 0..p.len {
        weight[((p.start + i * p.step) % n) as usize] = Complex64::new(1.0, 0.0);
    }
    Ok(holder_bound(&weight, a, &DftPlan::new(n as usize)))
}

/// Bound for `|E_{n in [N]} a(n) e(nt)|`, the phase placed on `Z_N`.
pub fn exponential_phase_bound(a: &[Complex64], t: f64) -> Result<HolderBound> {
    let n = a.len();
    if n == 0 {
        bail!(InvalidArgument, "signal must be non-empty");
    }
    let mut weight = vec![Complex64::new(0.0, 0.0); n];
    for m in 1..=n {
        weight[m % n] = unit_phase((m as f64 * t).fract());
    }
    Ok(holder_bound(&weight, a, &DftPlan::new(n)))
}
