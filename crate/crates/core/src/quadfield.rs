// SPDX-License-Identifier: Apache-2.0

//! Exact arithmetic in `Z[tau_d]`, where `tau_d = (1 + sqrt(-d))/2` for
//! `d = 3 mod 4` and `tau_d = sqrt(-d)` otherwise.

use std::fmt;

use serde::Serialize;

use crate::error::{bail, Error, Result};
use crate::primes;

/// `m + n tau_d`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct QuadInt {
    pub m: i64,
    pub n: i64,
    pub d: u32,
}

fn overflow(what: &str) -> Error {
    Error::Overflow(format!("{what} exceeds 64-bit range"))
}

fn narrow(x: i128, what: &str) -> Result<i64> {
    i64::try_from(x).map_err(|_| overflow(what))
}

fn validate_d(d: u32) -> Result<()> {
    if d == 0 {
        bail!(InvalidArgument, "d must be a positive integer");
    }
    Ok(())
}

/// `Q_d(m, n) = N(m + n tau_d)` in 128-bit arithmetic; `None` on overflow.
pub fn checked_norm_form(d: u32, m: i128, n: i128) -> Option<i128> {
    let (b, c) = if d % 4 == 3 { (1, i128::from((d + 1) / 4)) } else { (0, i128::from(d)) };
    m.checked_mul(m)?
        .checked_add(m.checked_mul(n)?.checked_mul(b)?)?
        .checked_add(n.checked_mul(n)?.checked_mul(c)?)
}

/// `Q_d(m, n)` for arguments known to be small.
pub fn norm_form(d: u32, m: i128, n: i128) -> i128 {
    checked_norm_form(d, m, n).expect("norm form overflow")
}

impl QuadInt {
    pub fn new(m: i64, n: i64, d: u32) -> Result<Self> {
        validate_d(d)?;
        Ok(Self { m, n, d })
    }

    pub fn integer(m: i64, d: u32) -> Self {
        Self { m, n: 0, d }
    }

    pub fn is_zero(&self) -> bool {
        self.m == 0 && self.n == 0
    }

    /// `tau^2 = p + q tau`
    fn tau_square(d: u32) -> (i128, i128) {
        if d % 4 == 3 {
            (-i128::from((d + 1) / 4), 1)
        } else {
            (-i128::from(d), 0)
        }
    }

    /// `(a + b tau)(c + e tau)` as `(m, n)`; `None` on 128-bit overflow.
    fn product_parts(d: u32, a: i128, b: i128, c: i128, e: i128) -> Option<(i128, i128)> {
        let (p, q) = Self::tau_square(d);
        let be = b.checked_mul(e)?;
        let m = a.checked_mul(c)?.checked_add(be.checked_mul(p)?)?;
        let n = a.checked_mul(e)?.checked_add(b.checked_mul(c)?)?.checked_add(be.checked_mul(q)?)?;
        Some((m, n))
    }

    pub fn norm(&self) -> Result<u64> {
        let v = checked_norm_form(self.d, self.m.into(), self.n.into()).ok_or_else(|| overflow("norm"))?;
        u64::try_from(v).map_err(|_| overflow("norm"))
    }

    pub fn multiply(&self, other: &QuadInt) -> Result<QuadInt> {
        if self.d != other.d {
            bail!(InvalidArgument, "elements of different rings (d = {} and {})", self.d, other.d);
        }
        let (a, b, c, e) = (i128::from(self.m), i128::from(self.n), i128::from(other.m), i128::from(other.n));
        let (m, n) = Self::product_parts(self.d, a, b, c, e).ok_or_else(|| overflow("product"))?;
        Ok(QuadInt { m: narrow(m, "product")?, n: narrow(n, "product")?, d: self.d })
    }

    pub fn conjugate(&self) -> Result<QuadInt> {
        if self.d % 4 == 3 {
            let m = i128::from(self.m) + i128::from(self.n);
            let n = self.n.checked_neg().ok_or_else(|| overflow("conjugate"))?;
            Ok(QuadInt { m: narrow(m, "conjugate")?, n, d: self.d })
        } else {
            Ok(QuadInt { m: self.m, n: self.n.checked_neg().ok_or_else(|| overflow("conjugate"))?, d: self.d })
        }
    }

    pub fn neg(&self) -> Result<QuadInt> {
        Ok(QuadInt {
            m: self.m.checked_neg().ok_or_else(|| overflow("negation"))?,
            n: self.n.checked_neg().ok_or_else(|| overflow("negation"))?,
            d: self.d,
        })
    }

    /// Quotient `z / self` when it lies in the ring.
    pub fn divides(&self, z: &QuadInt) -> Result<Option<QuadInt>> {
        if self.d != z.d {
            bail!(InvalidArgument, "elements of different rings (d = {} and {})", self.d, z.d);
        }
        if self.is_zero() {
            return Ok(z.is_zero().then_some(QuadInt::integer(0, self.d)));
        }
        let nrm = i128::from(self.norm()?);
        let (a, b, c, e) = (i128::from(z.m), i128::from(z.n), i128::from(self.m), i128::from(self.n));
        // z * conj(self), in 128 bits
        let (cm, cn) = if self.d % 4 == 3 { (c + e, -e) } else { (c, -e) };
        let (m, n) = Self::product_parts(self.d, a, b, cm, cn).ok_or_else(|| overflow("division"))?;
        if m % nrm != 0 || n % nrm != 0 {
            return Ok(None);
        }
        Ok(Some(QuadInt { m: narrow(m / nrm, "quotient")?, n: narrow(n / nrm, "quotient")?, d: self.d }))
    }

    pub fn is_divisible_by(&self, alpha: &QuadInt) -> bool {
        matches!(alpha.divides(self), Ok(Some(_)))
    }

    /// The unit multiple with `m > 0` (or `m = 0, n > 0`) that is
    /// lexicographically least in `(m, n)`.
    pub fn canonical(&self) -> Result<QuadInt> {
        if self.is_zero() {
            return Ok(*self);
        }
        let mut best: Option<QuadInt> = None;
        for u in units(self.d)? {
            let w = u.multiply(self)?;
            if (w.m > 0 || (w.m == 0 && w.n > 0))
                && best.is_none_or(|b| (w.m, w.n) < (b.m, b.n)) {
                    best = Some(w);
                }
        }
        Ok(best.expect("some unit multiple is positive"))
    }

    pub fn is_associate(&self, other: &QuadInt) -> Result<bool> {
        Ok(self.canonical()? == other.canonical()?)
    }

    /// Coefficient of `tau_d`, the part carrying the imaginary direction.
    pub fn tau_coefficient(&self) -> i64 {
        self.n
    }
}

impl fmt::Display for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.n < 0 { '-' } else { '+' };
        write!(f, "{} {} {}t", self.m, sign, self.n.unsigned_abs())
    }
}

/// All `z` with `N(z) <= limit`, ordered by `(m, n)` within increasing `n`.
pub fn enumerate_norm_le(d: u32, limit: u64) -> Result<Vec<QuadInt>> {
    validate_d(d)?;
    let x = i128::from(limit);
    let dd = i128::from(d);
    let mut out = Vec::new();
    // Q = (m + n/2)^2 + (d/4) n^2 when d = 3 mod 4, else m^2 + d n^2
    let (n_max, half) = if d % 4 == 3 {
        (primes::isqrt(4 * x / dd), true)
    } else {
        (primes::isqrt(x / dd), false)
    };
    for n in -n_max..=n_max {
        let (lo, hi) = if half {
            let rest = 4 * x - dd * n * n;
            if rest < 0 {
                continue;
            }
            let r = primes::isqrt(rest);
            // 2m + n in [-r, r]
            ((-r - n).div_euclid(2) - 1, (r - n).div_euclid(2) + 1)
        } else {
            let rest = x - dd * n * n;
            if rest < 0 {
                continue;
            }
            let r = primes::isqrt(rest);
            (-r, r)
        };
        for m in lo..=hi {
            if norm_form(d, m, n) <= x {
                out.push(QuadInt { m: narrow(m, "enumeration")?, n: narrow(n, "enumeration")?, d });
            }
        }
    }
    Ok(out)
}

/// Every unit of `Z[tau_d]`.
pub fn units(d: u32) -> Result<Vec<QuadInt>> {
    enumerate_norm_le(d, 1).map(|v| v.into_iter().filter(|z| !z.is_zero()).collect())
}

/// The lattice points of `B_N = {Q_d <= N^2}` with the box sandwich
/// `[-N/R, N/R]^2 <= B_N <= [-R N, R N]^2` checked for `R = R_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormBall {
    pub points: Vec<(i64, i64)>,
    pub r_d: u64,
    pub sandwich_holds: bool,
}

/// Smallest integer `R` with `R^2` at least the sum of the absolute
/// coefficients of `Q_d`; both inclusions of the sandwich hold for it.
pub fn sandwich_constant(d: u32) -> u64 {
    let coeff_sum = if d % 4 == 3 { 2 + u64::from((d + 1) / 4) } else { 1 + u64::from(d) };
    let mut r = (coeff_sum as f64).sqrt() as u64;
    while r * r < coeff_sum {
        r += 1;
    }
    r
}

pub fn enumerate_ball(n: u64, d: u32) -> Result<NormBall> {
    if n == 0 {
        bail!(InvalidArgument, "ball radius must be positive");
    }
    let limit = n.checked_mul(n).ok_or_else(|| overflow("N^2"))?;
    let zs = enumerate_norm_le(d, limit)?;
    let r_d = sandwich_constant(d);
    let inner = (n / r_d) as i64;
    let outer = (r_d * n) as i64;
    let outer_ok = zs.iter().all(|z| z.m.abs() <= outer && z.n.abs() <= outer);
    let inner_ok = (-inner..=inner)
        .all(|m| (-inner..=inner).all(|k| norm_form(d, m.into(), k.into()) <= i128::from(limit)));
    Ok(NormBall { points: zs.iter().map(|z| (z.m, z.n)).collect(), r_d, sandwich_holds: inner_ok && outer_ok })
}

/// A non-integer element of prime norm, as its canonical associate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PrimeElement {
    pub z: QuadInt,
    pub norm: u64,
    /// `z` is associate to its conjugate.
    pub ramified: bool,
}

/// Canonical representatives of the prime elements with norm `<= limit`,
/// sorted by `(norm, m, n)`; a non-ramified element and its conjugate are
/// listed separately.
pub fn prime_elements(d: u32, limit: u64) -> Result<Vec<PrimeElement>> {
    if limit < 2 {
        bail!(InvalidArgument, "norm limit must be at least 2");
    }
    let mut out = Vec::new();
    for z in enumerate_norm_le(d, limit)? {
        if z.n == 0 {
            continue;
        }
        let norm = z.norm()?;
        if !primes::is_prime(norm) {
            continue;
        }
        let c = z.canonical()?;
        if c != z {
            continue;
        }
        let ramified = z.conjugate()?.canonical()? == c;
        out.push(PrimeElement { z, norm, ramified });
    }
    out.sort_by_key(|p| (p.norm, p.z.m, p.z.n));
    Ok(out)
}

/// `zeta` with `L(m, n) = kappa m + lambda n` equal to the `tau` part of
/// `zeta (m + n tau_d)` (halved when `d = 3 mod 4`).
pub fn zeta_for_form(d: u32, kappa: i64, lambda: i64) -> Result<QuadInt> {
    validate_d(d)?;
    if d % 4 == 3 {
        let m = 2 * (i128::from(lambda) - i128::from(kappa));
        let n = 2 * i128::from(kappa);
        Ok(QuadInt { m: narrow(m, "zeta")?, n: narrow(n, "zeta")?, d })
    } else {
        Ok(QuadInt { m: lambda, n: kappa, d })
    }
}

/// `L(m, n)` read back from `zeta`.
pub fn form_from_zeta(zeta: &QuadInt, m: i64, n: i64) -> Result<i64> {
    let w = zeta.multiply(&QuadInt { m, n, d: zeta.d })?;
    Ok(if zeta.d % 4 == 3 { w.n / 2 } else { w.n })
}

/// Prime elements `alpha` that are not ramified and such that neither
/// `alpha` nor its conjugate divides any `zeta_j`.
pub fn build_p(d: u32, zetas: &[QuadInt], limit: u64) -> Result<Vec<PrimeElement>> {
    if let Some(z) = zetas.iter().find(|z| z.is_zero() || z.d != d) {
        bail!(InvalidArgument, "zeta {z} must be nonzero and lie in Z[tau_{d}]");
    }
    let mut out = Vec::new();
    for p in prime_elements(d, limit)? {
        if p.ramified {
            continue;
        }
        let conj = p.z.conjugate()?;
        if zetas.iter().any(|z| z.is_divisible_by(&p.z) || z.is_divisible_by(&conj)) {
            continue;
        }
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(m: i64, n: i64, d: u32) -> QuadInt {
        QuadInt::new(m, n, d).unwrap()
    }

    #[test]
    fn norm_examples() {
        assert_eq!(q(3, 4, 1).norm().unwrap(), 25);
        assert_eq!(q(1, 1, 3).norm().unwrap(), 3);
        assert_eq!(q(1, 1, 2).norm().unwrap(), 3);
        assert!(q(i64::MAX, i64::MAX, 5).norm().is_err());
    }

    #[test]
    fn multiply_conjugate_divide() {
        assert_eq!(q(2, 1, 1).multiply(&q(2, -1, 1)).unwrap(), q(5, 0, 1));
        assert_eq!(q(2, 1, 1).divides(&q(5, 0, 1)).unwrap(), Some(q(2, -1, 1)));
        assert_eq!(q(2, 1, 1).divides(&q(3, 0, 1)).unwrap(), None);
        for d in [1, 2, 3, 7, 11] {
            let z = q(5, -3, d);
            assert_eq!(z.conjugate().unwrap().norm().unwrap(), z.norm().unwrap());
            assert_eq!(z.conjugate().unwrap().conjugate().unwrap(), z);
            let zz = z.multiply(&z.conjugate().unwrap()).unwrap();
            assert_eq!(zz, QuadInt::integer(z.norm().unwrap() as i64, d));
        }
    }

    #[test]
    fn norm_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in [1, 2, 3, 5, 7] {
            for _ in 0..2000 {
                let z = q(rng.gen_range(-1000..1000), rng.gen_range(-1000..1000), d);
                let w = q(rng.gen_range(-1000..1000), rng.gen_range(-1000..1000), d);
                assert_eq!(z.multiply(&w).unwrap().norm().unwrap(), z.norm().unwrap() * w.norm().unwrap());
            }
        }
    }

    #[test]
    fn unit_counts() {
        let counts: Vec<usize> = [1, 2, 3, 5, 7].iter().map(|&d| units(d).unwrap().len()).collect();
        assert_eq!(counts, vec![4, 2, 6, 2, 2]);
    }

    #[test]
    fn ball_examples() {
        let b = enumerate_ball(1, 1).unwrap();
        assert_eq!(b.points.len(), 5);
        for d in [1, 2, 3, 7] {
            let small = enumerate_ball(100, d).unwrap();
            let large = enumerate_ball(200, d).unwrap();
            assert!(small.sandwich_holds && large.sandwich_holds);
            let ratio = large.points.len() as f64 / small.points.len() as f64;
            assert!((ratio - 4.0).abs() < 0.4, "d={d} ratio={ratio}");
            for &(m, n) in &small.points {
                assert!(norm_form(d, m.into(), n.into()) <= 10_000);
            }
        }
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for d in [1, 2, 3, 7, 11, 4] {
            let fast = enumerate_norm_le(d, 200).unwrap();
            let mut slow = Vec::new();
            for n in -40..=40 {
                for m in -40..=40 {
                    if norm_form(d, m, n) <= 200 {
                        slow.push((m as i64, n as i64));
                    }
                }
            }
            let mut f: Vec<(i64, i64)> = fast.iter().map(|z| (z.m, z.n)).collect();
            f.sort();
            slow.sort();
            assert_eq!(f, slow, "d={d}");
        }
    }

    #[test]
    fn gaussian_primes_small() {
        let ps = prime_elements(1, 5).unwrap();
        let list: Vec<(i64, i64, bool)> = ps.iter().map(|p| (p.z.m, p.z.n, p.ramified)).collect();
        assert_eq!(list, vec![(1, -1, true), (1, -2, false), (1, 2, false)]);
        assert!(prime_elements(1, 100).unwrap().iter().all(|p| p.norm != 3));
        assert!(q(1, 1, 1).is_associate(&q(1, -1, 1)).unwrap());
        assert!(!q(2, 1, 1).is_associate(&q(2, -1, 1)).unwrap());
    }

    #[test]
    fn build_p_examples() {
        let all = prime_elements(1, 100).unwrap();
        let p = build_p(1, &[QuadInt::integer(1, 1)], 100).unwrap();
        assert_eq!(p.len(), all.iter().filter(|e| !e.ramified).count());
        // 2 + i is associate to 1 - 2i; its conjugate 1 + 2i goes as well
        let p = build_p(1, &[q(2, 1, 1)], 100).unwrap();
        assert!(p.iter().all(|e| e.norm != 5 && e.norm != 2));
    }

    #[test]
    fn zeta_reproduces_forms() {
        for d in [1, 2, 3, 5, 7, 11, 15] {
            for (kappa, lambda) in [(1, 0), (0, 1), (1, 1), (2, -3), (-5, 7)] {
                let zeta = zeta_for_form(d, kappa, lambda).unwrap();
                for m in -6..=6 {
                    for n in -6..=6 {
                        assert_eq!(form_from_zeta(&zeta, m, n).unwrap(), kappa * m + lambda * n, "d={d}");
                    }
                }
            }
        }
    }

    #[test]
    fn divisibility_trichotomy() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ps = prime_elements(1, 200).unwrap();
        let mut checked = 0;
        while checked < 1000 {
            let a = ps[rng.gen_range(0..ps.len())].z;
            let z = q(rng.gen_range(-60..60), rng.gen_range(-60..60), 1);
            if z.is_zero() || !z.norm().unwrap().is_multiple_of(a.norm().unwrap()) {
                let w = a.multiply(&q(rng.gen_range(-30..30), rng.gen_range(-30..30), 1)).unwrap();
                if w.is_zero() {
                    continue;
                }
                assert!(w.is_divisible_by(&a));
                checked += 1;
                continue;
            }
            assert!(z.is_divisible_by(&a) || z.is_divisible_by(&a.conjugate().unwrap()));
            checked += 1;
        }
    }
}
