// SPDX-License-Identifier: Apache-2.0

//! Chowla-type averages over planar regions and linear-forms averages on
//! `Z_Ntilde`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{evaluate_power, tabulate, unit_phase, FactorSieve, MultiplicativeSpec};
use crate::error::{bail, Error, Result};
use crate::fourier::pairwise_sum;
use crate::gowers::gowers_norm_cyclic;
use crate::primes;
use crate::quadfield::checked_norm_form;

/// Linear forms `kappa_j m + lambda_j n`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearFormSet {
    forms: Vec<(i64, i64)>,
}

impl LinearFormSet {
    pub fn new(forms: Vec<(i64, i64)>) -> Self {
        Self { forms }
    }

    pub fn forms(&self) -> &[(i64, i64)] {
        &self.forms
    }

    /// `kappa_i lambda_j - lambda_i kappa_j`
    pub fn independence_matrix(&self) -> Vec<Vec<i128>> {
        self.forms
            .iter()
            .map(|&(ki, li)| {
                self.forms
                    .iter()
                    .map(|&(kj, lj)| i128::from(ki) * i128::from(lj) - i128::from(li) * i128::from(kj))
                    .collect()
            })
            .collect()
    }

    pub fn independent(&self, i: usize, j: usize) -> bool {
        let (ki, li) = self.forms[i];
        let (kj, lj) = self.forms[j];
        i128::from(ki) * i128::from(lj) != i128::from(li) * i128::from(kj)
    }

    /// Parse `"k1,l1;k2,l2;..."`; the empty string gives no forms.
    pub fn parse(text: &str) -> Result<Self> {
        let mut forms = Vec::new();
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, l) = part
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("form '{part}' must be 'kappa,lambda'")))?;
            let num = |x: &str| -> Result<i64> {
                x.trim().parse().map_err(|e| Error::Parse(format!("form '{part}': {e}")))
            };
            forms.push((num(k)?, num(l)?));
        }
        Ok(Self { forms })
    }
}

/// Summation region in the `(m, n)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// `[N]^2`
    Square,
    /// `{(m, n) in Z^2 : Q(m, n) <= N^2}`
    Ball,
    /// `[m0, m1] x [n0, n1]`
    Rectangle { m0: i64, m1: i64, n0: i64, n1: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChowlaResult {
    pub average: Complex64,
    pub count: u64,
}

/// `(m, n) -> Q_d(M (m, n))` for a unimodular `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadraticForm2 {
    pub d: u32,
    pub change: [[i64; 2]; 2],
}

impl QuadraticForm2 {
    pub fn new(d: u32, change: [[i64; 2]; 2]) -> Result<Self> {
        if d == 0 {
            bail!(InvalidArgument, "d must be positive");
        }
        let det = i128::from(change[0][0]) * i128::from(change[1][1]) - i128::from(change[0][1]) * i128::from(change[1][0]);
        if det.abs() != 1 {
            bail!(InvalidArgument, "change of variables must have determinant +-1, got {det}");
        }
        Ok(Self { d, change })
    }

    pub fn standard(d: u32) -> Self {
        Self { d, change: [[1, 0], [0, 1]] }
    }

    pub fn eval(&self, m: i64, n: i64) -> Option<i128> {
        let [[a, b], [c, e]] = self.change;
        let x = i128::from(a) * i128::from(m) + i128::from(b) * i128::from(n);
        let y = i128::from(c) * i128::from(m) + i128::from(e) * i128::from(n);
        checked_norm_form(self.d, x, y)
    }
}

fn region_points(q: &QuadraticForm2, n: u64, region: Region) -> Result<Vec<(i64, i64)>> {
    let n_i = i64::try_from(n).map_err(|_| Error::Overflow("N too large".into()))?;
    let pts = match region {
        Region::Square => (1..=n_i).flat_map(|m| (1..=n_i).map(move |k| (m, k))).collect(),
        Region::Rectangle { m0, m1, n0, n1 } => {
            if m0 > m1 || n0 > n1 {
                bail!(EmptyDomain, "rectangle [{m0},{m1}]x[{n0},{n1}] is empty");
            }
            (m0..=m1).flat_map(|m| (n0..=n1).map(move |k| (m, k))).collect()
        }
        Region::Ball => {
            // Q_d(M v) <= N^2 and Q_d >= (3/4)|w|_inf^2 give |v|_inf <= 2N * ||M^-1||
            let [[a, b], [c, e]] = q.change;
            let inv_norm = (a.abs() + b.abs()).max(c.abs() + e.abs()).max(1);
            let box_r = 2 * n_i * inv_norm;
            let limit = i128::from(n) * i128::from(n);
            let mut v = Vec::new();
            for m in -box_r..=box_r {
                for k in -box_r..=box_r {
                    if q.eval(m, k).is_some_and(|x| x <= limit) {
                        v.push((m, k));
                    }
                }
            }
            v
        }
    };
    Ok(pts)
}

/// Average of `f(Q(m, n)^r) prod_j f(L_j(m, n))` over the lattice points of
/// the region, with `f` evenly extended (`f(0) = 0`).
pub fn chowla_average(
    f: &MultiplicativeSpec,
    q: &QuadraticForm2,
    r: u32,
    forms: &LinearFormSet,
    n: u64,
    region: Region,
) -> Result<ChowlaResult> {
    if n == 0 {
        bail!(InvalidArgument, "N must be positive");
    }
    let points = region_points(q, n, region)?;
    if points.is_empty() {
        bail!(EmptyDomain, "region contains no lattice points");
    }
    let mut limit: u64 = 2;
    for &(m, k) in &points {
        let v = q.eval(m, k).ok_or_else(|| Error::Overflow(format!("Q({m},{k}) overflows")))?;
        if r > 0 && v.checked_pow(r).is_none() {
            bail!(Overflow, "Q({m},{k})^{r} exceeds 128 bits");
        }
        limit = limit.max(u64::try_from(v).map_err(|_| Error::Overflow("Q value".into()))?);
        for &(kappa, lambda) in forms.forms() {
            let l = i128::from(kappa) * i128::from(m) + i128::from(lambda) * i128::from(k);
            limit = limit.max(u64::try_from(l.unsigned_abs()).map_err(|_| Error::Overflow("form value".into()))?);
        }
    }
    let sieve = FactorSieve::new(limit as usize)?;
    let table = tabulate(f, limit as usize, &sieve)?;
    let value = |x: u64| -> Complex64 {
        if x == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            table.values()[(x - 1) as usize]
        }
    };
    let terms: Vec<Complex64> = points
        .par_iter()
        .map(|&(m, k)| -> Result<Complex64> {
            let qv = q.eval(m, k).expect("checked above") as u64;
            let mut acc = match r {
                0 => Complex64::new(1.0, 0.0),
                1 => value(qv),
                _ if f.is_complete() => value(qv).powu(r),
                _ => evaluate_power(f, qv, r, &sieve)?,
            };
            for &(kappa, lambda) in forms.forms() {
                let l = i128::from(kappa) * i128::from(m) + i128::from(lambda) * i128::from(k);
                acc *= value(l.unsigned_abs() as u64);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(ChowlaResult { average: pairwise_sum(&terms) / points.len() as f64, count: points.len() as u64 })
}

fn check_linear_inputs(tables: &[Vec<Complex64>], shifts: &[i64], n: usize, ntilde: usize) -> Result<()> {
    if tables.is_empty() || tables.len() != shifts.len() {
        bail!(InvalidArgument, "need one shift per table (got {} tables, {} shifts)", tables.len(), shifts.len());
    }
    if let Some(t) = tables.iter().find(|t| t.len() != ntilde) {
        bail!(InvalidArgument, "table of length {} does not live on Z_{ntilde}", t.len());
    }
    let ell: u64 = shifts.iter().map(|s| s.unsigned_abs()).sum::<u64>().max(1);
    if !primes::is_prime(ntilde as u64) || (ntilde as u64) <= 2 * ell * n as u64 {
        bail!(InvalidArgument, "Ntilde = {ntilde} must be a prime exceeding 2 l N = {}", 2 * ell * n as u64);
    }
    Ok(())
}

/// `E_{m, n in Z_Ntilde} 1_[N](n) prod_j a_j(m + l_j n)`
pub fn linear_forms_average(tables: &[Vec<Complex64>], shifts: &[i64], n: usize, ntilde: usize) -> Result<Complex64> {
    check_linear_inputs(tables, shifts, n, ntilde)?;
    let nt = ntilde as i64;
    let rows: Vec<Complex64> = (1..=n as i64)
        .into_par_iter()
        .map(|k| {
            let offsets: Vec<usize> = shifts.iter().map(|l| (l * k).rem_euclid(nt) as usize).collect();
            let terms: Vec<Complex64> = (0..ntilde)
                .map(|m| {
                    tables.iter().zip(&offsets).fold(Complex64::new(1.0, 0.0), |acc, (t, &o)| {
                        let idx = m + o;
                        acc * t[if idx >= ntilde { idx - ntilde } else { idx }]
                    })
                })
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    Ok(pairwise_sum(&rows) / (ntilde as f64 * ntilde as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityReport {
    pub lhs: f64,
    /// `min_j ||a_j||_{U^{s-1}(Z_Ntilde)}`
    pub min_norm: f64,
    /// `max(lhs - 2/Ntilde, 0) / min_norm^{1/2}`; `None` when `min_norm` vanishes.
    pub implied_c: Option<f64>,
    /// `implied_c * min_norm^{1/2} + 2/Ntilde`
    pub rhs: f64,
    pub s: u32,
}

/// Measure the constant that would make the linear-forms bound tight.
pub fn uniformity_bound_report(
    tables: &[Vec<Complex64>],
    shifts: &[i64],
    n: usize,
    ntilde: usize,
    s: u32,
) -> Result<UniformityReport> {
    if s < 2 {
        bail!(InvalidArgument, "s must be at least 2");
    }
    let lhs = linear_forms_average(tables, shifts, n, ntilde)?.norm();
    let min_norm = tables
        .iter()
        .map(|t| gowers_norm_cyclic(t, s - 1))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let floor = 2.0 / ntilde as f64;
    let (implied_c, rhs) = if min_norm > 1e-12 {
        let c = (lhs - floor).max(0.0) / min_norm.sqrt();
        (Some(c), c * min_norm.sqrt() + floor)
    } else {
        (None, f64::INFINITY)
    };
    Ok(UniformityReport { lhs, min_norm, implied_c, rhs, s })
}

/// `|E_{n in [N]} f_un(n) e(n^2 alpha)|` for `f_un` on `Z_Ntilde`.
pub fn quad_phase_correlation(f_un: &[Complex64], alpha: f64, n: usize) -> Result<f64> {
    if n == 0 || n >= f_un.len() {
        bail!(InvalidArgument, "N = {n} must lie in [1, Ntilde) with Ntilde = {}", f_un.len());
    }
    let terms: Vec<Complex64> = (1..=n)
        .map(|k| {
            let sq = (k as u128 * k as u128) as f64;
            f_un[k] * unit_phase((sq * alpha).fract())
        })
        .collect();
    Ok((pairwise_sum(&terms) / n as f64).norm())
}

/// `f_N` of a multiplicative function embedded in `Z_Ntilde`, for feeding
/// [`linear_forms_average`].
pub fn embedded_table(f: &MultiplicativeSpec, n: usize, ntilde: usize) -> Result<Vec<Complex64>> {
    let sieve = FactorSieve::new(n.max(2))?;
    tabulate(f, n, &sieve)?.embed(ntilde)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{evaluate, FactorSieve};

    #[test]
    fn form_set_basics() {
        let f = LinearFormSet::parse("1,0;1,1; 2,2").unwrap();
        assert!(f.independent(0, 1) && !f.independent(1, 2));
        assert_eq!(f.independence_matrix()[0][1], 1);
        assert!(LinearFormSet::parse("1;2").is_err());
        assert!(LinearFormSet::parse("").unwrap().forms().is_empty());
    }

    #[test]
    fn principal_average_is_one() {
        let q = QuadraticForm2::standard(1);
        let forms = LinearFormSet::parse("1,0;1,1").unwrap();
        let r = chowla_average(&MultiplicativeSpec::principal(), &q, 1, &forms, 20, Region::Square).unwrap();
        assert!((r.average - 1.0).norm() < 1e-12);
    }

    #[test]
    fn sum_of_two_squares_is_one() {
        let q = QuadraticForm2::standard(1);
        let r = chowla_average(&MultiplicativeSpec::sum_of_two_squares(), &q, 1, &LinearFormSet::default(), 64, Region::Square)
            .unwrap();
        assert_eq!(r.average, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn matches_brute_force() {
        let s = FactorSieve::new(20_000).unwrap();
        let f = MultiplicativeSpec::liouville();
        let q = QuadraticForm2::new(2, [[1, 1], [0, 1]]).unwrap();
        let forms = LinearFormSet::parse("1,0;1,-1").unwrap();
        for region in [Region::Square, Region::Ball, Region::Rectangle { m0: -5, m1: 7, n0: -3, n1: 9 }] {
            let got = chowla_average(&f, &q, 2, &forms, 30, region).unwrap();
            let mut sum = Complex64::new(0.0, 0.0);
            let mut count = 0;
            for m in -200i64..=200 {
                for k in -200i64..=200 {
                    let inside = match region {
                        Region::Square => (1..=30).contains(&m) && (1..=30).contains(&k),
                        Region::Ball => q.eval(m, k).unwrap() <= 900,
                        Region::Rectangle { m0, m1, n0, n1 } => (m0..=m1).contains(&m) && (n0..=n1).contains(&k),
                    };
                    if !inside {
                        continue;
                    }
                    count += 1;
                    let qv = q.eval(m, k).unwrap() as i64;
                    let mut v = evaluate(&f, qv, &s).unwrap().powu(2);
                    for &(a, b) in forms.forms() {
                        v *= evaluate(&f, a * m + b * k, &s).unwrap();
                    }
                    sum += v;
                }
            }
            assert_eq!(got.count, count);
            assert!((got.average - sum / count as f64).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_unimodular() {
        assert!(QuadraticForm2::new(1, [[2, 0], [0, 1]]).is_err());
    }

    #[test]
    fn linear_forms_trivial() {
        let nt = 61;
        let ones = vec![Complex64::new(1.0, 0.0); nt];
        let avg = linear_forms_average(&[ones.clone(), ones.clone()], &[0, 1], 10, nt).unwrap();
        assert!((avg - 10.0 / 61.0).norm() < 1e-12);
        assert!(linear_forms_average(&[ones.clone(), ones.clone()], &[0, 4], 10, nt).is_err());
        let r = uniformity_bound_report(&[ones.clone(), ones], &[0, 1], 10, nt, 3).unwrap();
        assert!((r.min_norm - 1.0).abs() < 1e-12);
        assert!((r.implied_c.unwrap() - 8.0 / 61.0).abs() < 1e-12);
    }

    #[test]
    fn linear_forms_two_phases() {
        // a_1(x) = e(x u / Nt), a_2(x) = e(-x u / Nt): product e(-l_2 n u / Nt)
        let nt = 101usize;
        let (u, n) = (7i64, 20usize);
        let a1: Vec<_> = (0..nt).map(|x| unit_phase((x as i64 * u).rem_euclid(nt as i64) as f64 / nt as f64)).collect();
        let a2: Vec<_> = a1.iter().map(|z| z.conj()).collect();
        let got = linear_forms_average(&[a1, a2], &[0, 2], n, nt).unwrap();
        let want: Complex64 = (1..=n as i64)
            .map(|k| unit_phase((-2 * k * u).rem_euclid(nt as i64) as f64 / nt as f64))
            .sum::<Complex64>()
            / nt as f64;
        assert!((got - want).norm() < 1e-12);
    }

    #[test]
    fn quad_phase_examples() {
        let nt = 211;
        let zero = vec![Complex64::new(0.0, 0.0); nt];
        assert_eq!(quad_phase_correlation(&zero, 0.3, 100).unwrap(), 0.0);
        let alpha = 2f64.sqrt();
        let mut f = zero.clone();
        for k in 1..=100usize {
            f[k] = unit_phase(-((k * k) as f64 * alpha).fract());
        }
        assert!((quad_phase_correlation(&f, alpha, 100).unwrap() - 1.0).abs() < 1e-9);
    }
}
