// SPDX-License-Identifier: Apache-2.0

//! Fejér-type kernels on `Z_Ntilde` and the structured/uniform splits
//! they induce.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{tabulate, FactorSieve, FunctionTable, MultiplicativeSpec};
use crate::error::{bail, Result};
use crate::fourier::{pairwise_sum_by, DftPlan};
use crate::primes;

/// `(Ntilde, Q, W)` for a structured kernel; `W` is the spectral width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelParams {
    pub ntilde: usize,
    pub q: u64,
    pub width: u64,
    pub theta: Option<f64>,
}

impl KernelParams {
    pub fn new(ntilde: usize, q: u64, width: u64) -> Result<Self> {
        if q == 0 || width == 0 {
            bail!(InvalidArgument, "Q and W must be positive (got Q = {q}, W = {width})");
        }
        if !primes::is_prime(ntilde as u64) {
            bail!(InvalidArgument, "Ntilde = {ntilde} must be prime");
        }
        if ntilde as u64 <= 2 * width {
            bail!(InvalidArgument, "Ntilde = {ntilde} must exceed 2W = {}", 2 * width);
        }
        if primes::gcd(q, ntilde as u64) != 1 {
            bail!(InvalidArgument, "Q = {q} is not invertible mod {ntilde}");
        }
        Ok(Self { ntilde, q, width, theta: None })
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = Some(theta);
        self
    }

    /// Whether `other` is a refinement in the sense that makes coefficients
    /// grow: `Q | Q'` and `W'/Q' >= W/Q`.
    pub fn is_refined_by(&self, other: &KernelParams) -> bool {
        self.ntilde == other.ntilde
            && other.q.is_multiple_of(self.q)
            && u128::from(other.width) * u128::from(self.q) >= u128::from(self.width) * u128::from(other.q)
    }
}

/// Distance from `x` to the nearest multiple of `m`.
pub fn circular_distance(x: u64, m: u64) -> u64 {
    let r = x % m;
    r.min(m - r)
}

/// A nonnegative mean-one function on `Z_Ntilde` with its exact spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    ntilde: usize,
    q: u64,
    width: u64,
    values: Vec<f64>,
    coefficients: Vec<f64>,
}

impl Kernel {
    pub fn ntilde(&self) -> usize {
        self.ntilde
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Closed-form Fourier coefficients, zero off the spectrum.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `{xi : hat phi(xi) != 0}` in increasing order.
    pub fn spectrum(&self) -> Vec<usize> {
        (0..self.ntilde).filter(|&xi| self.coefficients[xi] != 0.0).collect()
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum_by(&self.values, |x| *x) / self.ntilde as f64
    }
}

/// Fejér kernel of width `m`: `sum_{|xi| < m} (1 - |xi|/m) e(x xi / Ntilde)`.
pub fn fejer_kernel(ntilde: usize, m: u64) -> Result<Kernel> {
    if m == 0 {
        bail!(InvalidArgument, "Fejer width must be positive");
    }
    if ntilde as u64 <= 2 * m {
        bail!(InvalidArgument, "Ntilde = {ntilde} must exceed 2m = {}", 2 * m);
    }
    Ok(build_kernel(ntilde, 1, 1, m))
}

/// `phi(x) = F_W(Q* x)` where `Q*` inverts `Q` mod `Ntilde`.
pub fn structured_kernel(params: &KernelParams) -> Result<Kernel> {
    let p = KernelParams::new(params.ntilde, params.q, params.width)?;
    let qstar = primes::mod_inverse(p.q % p.ntilde as u64, p.ntilde as u64)
        .expect("Q is invertible by validation");
    Ok(build_kernel(p.ntilde, p.q, qstar, p.width))
}

fn build_kernel(ntilde: usize, q: u64, qstar: u64, width: u64) -> Kernel {
    let nt = ntilde as u64;
    let w = width as f64;
    let fejer = |y: u64| -> f64 {
        let y = circular_distance(y, nt);
        if y == 0 {
            return w;
        }
        let num = (PI * (width * y % nt) as f64 / nt as f64).sin();
        let den = (PI * y as f64 / nt as f64).sin();
        num * num / (den * den * w)
    };
    let values = (0..nt).map(|x| fejer(((x as u128 * qstar as u128) % nt as u128) as u64)).collect();
    let coefficients = (0..nt)
        .map(|xi| {
            let d = circular_distance(((xi as u128 * q as u128) % nt as u128) as u64, nt);
            if d < width {
                1.0 - d as f64 / w
            } else {
                0.0
            }
        })
        .collect();
    Kernel { ntilde, q, width, values, coefficients }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub spectrum_size: usize,
    /// `Ntilde * max_n |f_st(n + Q) - f_st(n)|`
    pub almost_period_deficit: f64,
    /// `2 pi |Xi| W`
    pub deficit_bound: f64,
    /// Every frequency carried by the kernel lies within `W/(Q Ntilde)` of
    /// some `p/Q` (integer check).
    pub spectrum_contained: bool,
    pub u2_uniform: f64,
    pub u2_total: f64,
    pub max_abs_structured: f64,
    pub max_abs_uniform: f64,
    pub max_abs_error: Option<f64>,
    /// `max_n |f_st + f_un (+ f_er) - f_N|`
    pub reconstruction_error: f64,
}

/// `f_N = f_st + f_un (+ f_er)` on `Z_Ntilde`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub f_n: Vec<Complex64>,
    pub f_st: Vec<Complex64>,
    pub f_un: Vec<Complex64>,
    pub f_er: Option<Vec<Complex64>>,
    /// `hat f_N`
    pub f_n_hat: Vec<Complex64>,
    /// Coefficients of the kernel whose convolution is subtracted to form
    /// `f_un`.
    pub uniform_kernel_hat: Vec<f64>,
    pub q: u64,
    pub width: u64,
    pub report: DecompositionReport,
}

/// `f_N * phi`, computed as `idft(hat f_N * hat phi)`.
fn convolve_with(plan: &DftPlan, f_hat: &[Complex64], kernel: &Kernel) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = f_hat.iter().zip(&kernel.coefficients).map(|(a, k)| a * k).collect();
    plan.inverse_in_place(&mut buf);
    buf
}

fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn u2(plan: &DftPlan, v: &[Complex64]) -> f64 {
    plan.forward(v).power_sum(4.0).powf(0.25)
}

fn spectrum_contained(kernel: &Kernel) -> bool {
    let nt = kernel.ntilde as i128;
    let (q, w) = (kernel.q as i128, kernel.width as i128);
    kernel.spectrum().into_iter().all(|xi| {
        // |xi/Nt - p/Q| <= W/(Q Nt)  <=>  |Q xi - p Nt| <= W
        let qx = q * xi as i128;
        let p = (qx + nt / 2).div_euclid(nt);
        (qx - p * nt).abs() <= w && (0..=q).contains(&p)
    })
}

fn deficit(f_st: &[Complex64], q: u64) -> f64 {
    let n = f_st.len();
    let shift = (q % n as u64) as usize;
    let max = (0..n).map(|m| (f_st[(m + shift) % n] - f_st[m]).norm()).fold(0.0, f64::max);
    n as f64 * max
}

/// Split `f_N` with a single kernel.
pub fn decompose(table: &FunctionTable, kernel: &Kernel) -> Result<Decomposition> {
    let f_n = table.embed(kernel.ntilde)?;
    let plan = DftPlan::new(kernel.ntilde);
    let f_n_hat = plan.forward(&f_n).0;
    let f_st = convolve_with(&plan, &f_n_hat, kernel);
    let f_un: Vec<Complex64> = f_n.iter().zip(&f_st).map(|(a, b)| a - b).collect();
    let reconstruction_error =
        f_n.iter().zip(f_st.iter().zip(&f_un)).map(|(a, (s, u))| (s + u - a).norm()).fold(0.0, f64::max);
    let spectrum_size = kernel.spectrum().len();
    let report = DecompositionReport {
        spectrum_size,
        almost_period_deficit: deficit(&f_st, kernel.q),
        deficit_bound: 2.0 * PI * spectrum_size as f64 * kernel.width as f64,
        spectrum_contained: spectrum_contained(kernel),
        u2_uniform: u2(&plan, &f_un),
        u2_total: f_n_hat.iter().map(|z| z.norm().powi(4)).sum::<f64>().powf(0.25),
        max_abs_structured: max_abs(&f_st),
        max_abs_uniform: max_abs(&f_un),
        max_abs_error: None,
        reconstruction_error,
    };
    Ok(Decomposition {
        f_n,
        f_st,
        f_un,
        f_er: None,
        f_n_hat,
        uniform_kernel_hat: kernel.coefficients.clone(),
        q: kernel.q,
        width: kernel.width,
        report,
    })
}

/// `f_st = f_N * psi1`, `f_er = f_N * psi2 - f_st`, `f_un = f_N - f_N * psi2`.
pub fn three_term_decompose(table: &FunctionTable, psi1: &Kernel, psi2: &Kernel) -> Result<Decomposition> {
    if psi1.ntilde != psi2.ntilde {
        bail!(InvalidArgument, "kernels live on different groups: {} vs {}", psi1.ntilde, psi2.ntilde);
    }
    let mut d = decompose(table, psi1)?;
    let plan = DftPlan::new(psi2.ntilde);
    let smooth2 = convolve_with(&plan, &d.f_n_hat, psi2);
    let f_er: Vec<Complex64> = smooth2.iter().zip(&d.f_st).map(|(a, b)| a - b).collect();
    d.f_un = d.f_n.iter().zip(&smooth2).map(|(a, b)| a - b).collect();
    d.report.reconstruction_error = (0..d.f_n.len())
        .map(|i| (d.f_st[i] + f_er[i] + d.f_un[i] - d.f_n[i]).norm())
        .fold(0.0, f64::max);
    d.report.u2_uniform = u2(&plan, &d.f_un);
    d.report.max_abs_uniform = max_abs(&d.f_un);
    d.report.max_abs_error = Some(max_abs(&f_er));
    d.uniform_kernel_hat = psi2.coefficients.clone();
    d.f_er = Some(f_er);
    Ok(d)
}

/// Outcome of the conditional `U^2` bound for the uniform part.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct U2Certificate {
    pub theta: f64,
    /// Frequencies with `|hat f_N| >= theta^2` but `hat kappa < 1 - theta^4`.
    pub violations: Vec<usize>,
    pub hypothesis_holds: bool,
    pub u2_uniform: f64,
    /// `hypothesis_holds && u2_uniform <= theta + 1e-9`; `None` when the
    /// hypothesis fails and nothing is asserted.
    pub passed: Option<bool>,
}

/// If every large coefficient of `f_N` is almost fixed by the kernel, then
/// `||f_un||_{U^2} <= theta`.
pub fn conditional_u2_certificate(decomp: &Decomposition, theta: f64) -> Result<U2Certificate> {
    if !(theta > 0.0 && theta < 1.0) {
        bail!(InvalidArgument, "theta must lie in (0, 1), got {theta}");
    }
    let t2 = theta * theta;
    let violations: Vec<usize> = decomp
        .f_n_hat
        .iter()
        .zip(&decomp.uniform_kernel_hat)
        .enumerate()
        .filter(|(_, (f, k))| f.norm() >= t2 && **k < 1.0 - t2 * t2)
        .map(|(xi, _)| xi)
        .collect();
    let hypothesis_holds = violations.is_empty();
    let u2_uniform = decomp.report.u2_uniform;
    Ok(U2Certificate {
        theta,
        violations,
        hypothesis_holds,
        u2_uniform,
        passed: hypothesis_holds.then_some(u2_uniform <= theta + 1e-9),
    })
}

/// A large Fourier coefficient found while scanning a family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub member: usize,
    pub xi: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QvEstimate {
    pub q: u64,
    pub v: u64,
    /// `Q V ceil(theta^-4)`
    pub width: u64,
    /// Modulus on which the witnesses were collected; `2 W < ntilde`.
    pub ntilde: usize,
    pub theta: f64,
    /// `max Ntilde ||Q xi / Ntilde||` over the witnesses.
    pub max_distance: u64,
    pub witnesses: Vec<Witness>,
}

impl QvEstimate {
    pub fn params(&self) -> Result<KernelParams> {
        Ok(KernelParams::new(self.ntilde, self.q, self.width)?.with_theta(self.theta))
    }
}

const FACTORIALS: [u64; 8] = [1, 2, 6, 24, 120, 720, 5040, 40320];
const MAX_MODULUS_ROUNDS: usize = 8;

/// Empirical `(Q, V)` for a finite family: collect every `xi` with
/// `|hat f_N(xi)| >= theta^2`, then pick the factorial `Q = k!` (`k <= 8`)
/// minimising `max Ntilde ||Q xi / Ntilde||` (ties go to the smaller `Q`).
///
/// The modulus starts at the least prime above `2N`; if the resulting
/// width does not fit (`2W >= Ntilde`) it moves to the least prime above
/// `2W` and the scan is repeated.
pub fn estimate_qv(family: &[MultiplicativeSpec], n: usize, theta: f64) -> Result<QvEstimate> {
    if family.is_empty() {
        bail!(InvalidArgument, "family must be non-empty");
    }
    if !(theta > 0.0 && theta < 1.0) {
        bail!(InvalidArgument, "theta must lie in (0, 1), got {theta}");
    }
    let sieve = FactorSieve::new(n.max(2))?;
    let tables: Vec<FunctionTable> = family.iter().map(|f| tabulate(f, n, &sieve)).collect::<Result<_>>()?;
    let inv4 = (theta.powi(-4) - 1e-9).ceil() as u64;
    let mut ntilde = primes::next_prime_above(2 * n as u64) as usize;
    for _ in 0..MAX_MODULUS_ROUNDS {
        let est = scan_qv(&tables, ntilde, theta, inv4)?;
        if 2 * est.width < ntilde as u64 {
            return Ok(est);
        }
        ntilde = primes::next_prime_above(2 * est.width) as usize;
    }
    bail!(
        InsufficientRange,
        "no modulus accommodates the kernel width after {MAX_MODULUS_ROUNDS} rounds; increase N"
    )
}

fn scan_qv(tables: &[FunctionTable], ntilde: usize, theta: f64, inv4: u64) -> Result<QvEstimate> {
    let plan = DftPlan::new(ntilde);
    let t2 = theta * theta;
    let per_member: Vec<Vec<Witness>> = tables
        .par_iter()
        .enumerate()
        .map(|(member, t)| -> Result<Vec<Witness>> {
            let spec = plan.forward(&t.embed(ntilde)?);
            Ok(spec
                .0
                .iter()
                .enumerate()
                .filter(|(_, z)| z.norm() >= t2)
                .map(|(xi, z)| Witness { member, xi, magnitude: z.norm() })
                .collect())
        })
        .collect::<Result<_>>()?;
    let witnesses: Vec<Witness> = per_member.into_iter().flatten().collect();
    let nt = ntilde as u64;
    let max_for = |q: u64| {
        witnesses
            .iter()
            .map(|w| circular_distance(((w.xi as u128 * q as u128) % nt as u128) as u64, nt))
            .max()
            .unwrap_or(0)
    };
    let (q, max_distance) = if witnesses.is_empty() {
        (1, 0)
    } else {
        FACTORIALS
            .iter()
            .filter(|&&q| primes::gcd(q, nt) == 1)
            .map(|&q| (q, max_for(q)))
            .min_by_key(|&(q, m)| (m, q))
            .expect("Q = 1 is always admissible")
    };
    let v = if witnesses.is_empty() { 1 } else { max_distance.div_ceil(q) + 1 };
    Ok(QvEstimate { q, v, width: q * v * inv4, ntilde, theta, max_distance, witnesses })
}
