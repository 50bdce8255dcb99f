// SPDX-License-Identifier: Apache-2.0

//! Sparse integer polynomials in three variables with checked arithmetic.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Polynomial in `(v0, v1, v2)`; callers decide what the variables mean
/// (`(k, m, n)` for families, `(x, y, z)` for forms).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Poly {
    terms: BTreeMap<[u32; 3], i128>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: i128) -> Self {
        Self::monomial(c, [0, 0, 0])
    }

    pub fn monomial(c: i128, exps: [u32; 3]) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0 {
            terms.insert(exps, c);
        }
        Self { terms }
    }

    /// The `i`-th variable.
    pub fn var(i: usize) -> Self {
        let mut e = [0; 3];
        e[i] = 1;
        Self::monomial(1, e)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32; 3], &i128)> {
        self.terms.iter()
    }

    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|e| e[i]).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn checked_add(&self, other: &Self) -> Option<Self> {
        let mut terms = self.terms.clone();
        for (e, &c) in &other.terms {
            let v = terms.get(e).copied().unwrap_or(0).checked_add(c)?;
            if v == 0 {
                terms.remove(e);
            } else {
                terms.insert(*e, v);
            }
        }
        Some(Self { terms })
    }

    pub fn checked_scale(&self, c: i128) -> Option<Self> {
        if c == 0 {
            return Some(Self::zero());
        }
        let mut terms = BTreeMap::new();
        for (e, &v) in &self.terms {
            terms.insert(*e, v.checked_mul(c)?);
        }
        Some(Self { terms })
    }

    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        self.checked_add(&other.checked_scale(-1)?)
    }

    pub fn checked_mul(&self, other: &Self) -> Option<Self> {
        let mut acc = Self::zero();
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                acc = acc.checked_add(&Self::monomial(ca.checked_mul(cb)?, e))?;
            }
        }
        Some(acc)
    }

    pub fn checked_pow(&self, e: u32) -> Option<Self> {
        let mut acc = Self::constant(1);
        for _ in 0..e {
            acc = acc.checked_mul(self)?;
        }
        Some(acc)
    }

    /// Exact value at an integer point; `None` on overflow.
    pub fn eval(&self, v: [i128; 3]) -> Option<i128> {
        let mut total: i128 = 0;
        for (e, &c) in &self.terms {
            let mut t = c;
            for (&x, &p) in v.iter().zip(e) {
                t = t.checked_mul(x.checked_pow(p)?)?;
            }
            total = total.checked_add(t)?;
        }
        Some(total)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            match (i, *c < 0) {
                (0, _) => write!(f, "{c}")?,
                (_, true) => write!(f, " - {}", c.unsigned_abs())?,
                (_, false) => write!(f, " + {c}")?,
            }
            for (name, &p) in ["v0", "v1", "v2"].iter().zip(e) {
                match p {
                    0 => {}
                    1 => write!(f, "*{name}")?,
                    _ => write!(f, "*{name}^{p}")?,
                }
            }
        }
        Ok(())
    }
}

// Operator forms panic on coefficient overflow, like integer arithmetic in
// debug builds. Library code uses the checked methods.

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        self.checked_add(rhs).expect("polynomial coefficient overflow")
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self.checked_sub(rhs).expect("polynomial coefficient overflow")
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        self.checked_mul(rhs).expect("polynomial coefficient overflow")
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.checked_scale(-1).expect("polynomial coefficient overflow")
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let (x, y) = (Poly::var(0), Poly::var(1));
        let sq = (&x + &y).checked_pow(2).unwrap();
        let expanded = &(&(&x * &x) + &(&Poly::constant(2) * &(&x * &y))) + &(&y * &y);
        assert_eq!(sq, expanded);
        assert!((&sq - &expanded).is_zero());
        assert_eq!(sq.eval([3, 4, 0]), Some(49));
        assert_eq!(sq.degree_in(0), 2);
        assert_eq!(sq.total_degree(), 2);
        assert_eq!(Poly::constant(i128::MAX).checked_add(&Poly::constant(1)), None);
        assert_eq!(Poly::var(2).eval([0, 0, i128::MAX]), Some(i128::MAX));
        assert_eq!((Poly::var(2) * Poly::var(2)).eval([0, 0, i128::MAX]), None);
    }

    #[test]
    fn display() {
        let p = Poly::var(0) - Poly::constant(2) * Poly::var(1) * Poly::var(1);
        assert_eq!(p.to_string(), "1*v0 - 2*v1^2");
    }
}
