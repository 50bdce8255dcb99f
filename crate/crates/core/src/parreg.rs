// SPDX-License-Identifier: Apache-2.0

//! Partition regularity of `ax^2 + by^2 + cz^2 + dxy + exz + fyz = 0`:
//! eligibility, parametric solution families, multiplicative Følner sets
//! and monochromatic searches.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::poly::Poly;
use crate::primes::{exact_sqrt, first_primes};

/// `p(x, y, z) = ax^2 + by^2 + cz^2 + dxy + exz + fyz`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadraticForm3 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
    pub e: i64,
    pub f: i64,
}

impl QuadraticForm3 {
    pub const fn new(a: i64, b: i64, c: i64, d: i64, e: i64, f: i64) -> Self {
        Self { a, b, c, d, e, f }
    }

    fn wide(&self) -> [i128; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f].map(i128::from)
    }

    /// `(e^2 - 4ac, f^2 - 4bc, (e+f)^2 - 4c(a+b+d))`
    pub fn discriminants(&self) -> (i128, i128, i128) {
        let [a, b, c, d, e, f] = self.wide();
        (e * e - 4 * a * c, f * f - 4 * b * c, (e + f) * (e + f) - 4 * c * (a + b + d))
    }

    pub fn is_eligible(&self) -> bool {
        let (d1, d2, d3) = self.discriminants();
        let nonzero_square = |v: i128| v != 0 && exact_sqrt(v).is_some();
        self.a != 0 && self.b != 0 && self.c != 0 && nonzero_square(d1) && nonzero_square(d2) && nonzero_square(d3)
    }

    pub fn eval(&self, x: i128, y: i128, z: i128) -> Option<i128> {
        let [a, b, c, d, e, f] = self.wide();
        let terms = [
            a.checked_mul(x.checked_mul(x)?)?,
            b.checked_mul(y.checked_mul(y)?)?,
            c.checked_mul(z.checked_mul(z)?)?,
            d.checked_mul(x.checked_mul(y)?)?,
            e.checked_mul(x.checked_mul(z)?)?,
            f.checked_mul(y.checked_mul(z)?)?,
        ];
        terms.iter().try_fold(0i128, |acc, &t| acc.checked_add(t))
    }

    /// The form as a polynomial in `(x, y, z)`.
    pub fn to_poly(&self) -> Poly {
        let [a, b, c, d, e, f] = self.wide();
        [(a, [2, 0, 0]), (b, [0, 2, 0]), (c, [0, 0, 2]), (d, [1, 1, 0]), (e, [1, 0, 1]), (f, [0, 1, 1])]
            .into_iter()
            .fold(Poly::zero(), |acc, (coef, exps)| &acc + &Poly::monomial(coef, exps))
    }
}

impl fmt::Display for QuadraticForm3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{},{},{}", self.a, self.b, self.c, self.d, self.e, self.f)
    }
}

impl FromStr for QuadraticForm3 {
    type Err = Error;

    /// Six comma-separated integers `a,b,c,d,e,f`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<i64> = s
            .split(',')
            .map(|t| t.trim().parse::<i64>().map_err(|e| Error::Parse(format!("form '{s}': {e}"))))
            .collect::<Result<_>>()?;
        match parts[..] {
            [a, b, c, d, e, f] => Ok(Self::new(a, b, c, d, e, f)),
            _ => Err(Error::Parse(format!("form '{s}' needs six coefficients, got {}", parts.len()))),
        }
    }
}

/// `x = k l0 (m + l1 n)(m + l2 n)`, `y = sign_y k l0 (m + l3 n)(m + l4 n)`,
/// `lambda = k (A m^2 + B mn + C n^2)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamFamily {
    pub ell: [i64; 5],
    pub sign_y: i8,
    pub lambda: [i64; 3],
    pub source: QuadraticForm3,
}

impl ParamFamily {
    pub fn is_admissible(&self) -> bool {
        let [l0, l1, l2, l3, l4] = self.ell;
        let same_pair = (l1 == l3 && l2 == l4) || (l1 == l4 && l2 == l3);
        l0 > 0 && l1 != l2 && l3 != l4 && !same_pair && matches!(self.sign_y, 1 | -1)
    }

    /// `(x, y, lambda)` at `(k, m, n)`.
    pub fn eval(&self, k: i128, m: i128, n: i128) -> Option<(i128, i128, i128)> {
        let [l0, l1, l2, l3, l4] = self.ell.map(i128::from);
        let lin = |l: i128| m.checked_add(l.checked_mul(n)?);
        let x = k.checked_mul(l0)?.checked_mul(lin(l1)?)?.checked_mul(lin(l2)?)?;
        let y = k.checked_mul(l0 * i128::from(self.sign_y))?.checked_mul(lin(l3)?)?.checked_mul(lin(l4)?)?;
        let [a, b, c] = self.lambda.map(i128::from);
        let q = a.checked_mul(m * m)?.checked_add(b.checked_mul(m * n)?)?.checked_add(c.checked_mul(n * n)?)?;
        Some((x, y, k.checked_mul(q)?))
    }

    /// `[x, y, lambda]` as polynomials in `(k, m, n)`.
    pub fn to_polys(&self) -> Result<[Poly; 3]> {
        let overflow = || Error::Overflow("family coefficients overflow".into());
        let (k, m, n) = (Poly::var(0), Poly::var(1), Poly::var(2));
        let lin = |l: i64| m.checked_add(&n.checked_scale(i128::from(l))?);
        let [l0, l1, l2, l3, l4] = self.ell;
        let x = k
            .checked_scale(i128::from(l0))
            .and_then(|p| p.checked_mul(&lin(l1)?))
            .and_then(|p| p.checked_mul(&lin(l2)?))
            .ok_or_else(overflow)?;
        let y = k
            .checked_scale(i128::from(l0) * i128::from(self.sign_y))
            .and_then(|p| p.checked_mul(&lin(l3)?))
            .and_then(|p| p.checked_mul(&lin(l4)?))
            .ok_or_else(overflow)?;
        let [a, b, c] = self.lambda.map(i128::from);
        let quad = Poly::monomial(a, [0, 2, 0])
            .checked_add(&Poly::monomial(b, [0, 1, 1]))
            .and_then(|p| p.checked_add(&Poly::monomial(c, [0, 0, 2])))
            .and_then(|p| p.checked_mul(&k))
            .ok_or_else(overflow)?;
        Ok([x, y, quad])
    }

    /// Exact check of `p(x, y, lambda) = 0` on `|k|, |m|, |n| <= radius`.
    pub fn verify(&self, radius: i64) -> Result<Verification> {
        let form = self.source;
        verify_points(radius, |k, m, n| {
            let (x, y, z) = self.eval(k, m, n)?;
            form.eval(x, y, z)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridWitness {
    pub k: i64,
    pub m: i64,
    pub n: i64,
    pub residual: i128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verification {
    pub holds: bool,
    pub radius: i64,
    pub points: u64,
    /// First grid point (in `k`, `m`, `n` order) with a non-zero residual.
    pub witness: Option<GridWitness>,
}

fn verify_points<F>(radius: i64, residual: F) -> Result<Verification>
where
    F: Fn(i128, i128, i128) -> Option<i128> + Sync,
{
    if radius < 0 {
        bail!(InvalidArgument, "grid radius must be non-negative");
    }
    let rows: Vec<Option<GridWitness>> = (-radius..=radius)
        .into_par_iter()
        .map(|k| -> Result<Option<GridWitness>> {
            for m in -radius..=radius {
                for n in -radius..=radius {
                    let r = residual(k.into(), m.into(), n.into())
                        .ok_or_else(|| Error::Overflow(format!("evaluation overflows at (k,m,n)=({k},{m},{n})")))?;
                    if r != 0 {
                        return Ok(Some(GridWitness { k, m, n, residual: r }));
                    }
                }
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    let witness = rows.into_iter().flatten().next();
    let side = (2 * radius + 1) as u64;
    Ok(Verification { holds: witness.is_none(), radius, points: side * side * side, witness })
}

/// Exact check that `p(x, y, lambda)` vanishes on the grid, where `p` is a
/// polynomial in `(x, y, z)` and the triple is polynomial in `(k, m, n)` of
/// degree at most 3 in each variable.
pub fn verify_family(p: &Poly, triple: &[Poly; 3], radius: i64) -> Result<Verification> {
    if let Some(t) = triple.iter().find(|t| (0..3).any(|i| t.degree_in(i) > 3)) {
        bail!(InvalidArgument, "component {t} has degree above 3 in some variable");
    }
    verify_points(radius, |k, m, n| {
        let v = [triple[0].eval([k, m, n])?, triple[1].eval([k, m, n])?, triple[2].eval([k, m, n])?];
        p.eval(v)
    })
}

/// Exact check that a polynomial in `(k, m, n)` vanishes on the grid.
pub fn verify_identity(residual: &Poly, radius: i64) -> Result<Verification> {
    verify_points(radius, |k, m, n| residual.eval([k, m, n]))
}

fn to_i64(v: i128) -> Result<i64> {
    i64::try_from(v).map_err(|_| Error::Overflow(format!("family coefficient {v} exceeds 64 bits")))
}

fn sqrt_exact(v: i128, what: &str) -> Result<i128> {
    exact_sqrt(v).ok_or_else(|| Error::Internal(format!("{what} = {v} is not a perfect square")))
}

/// Admissible family solving the form identically.
///
/// Forms with `e` or `f` non-zero are first moved to `e = f = 0` through
/// `(x, y, z) -> (2cx, 2cy, z - ex - fy)`. Candidate sign branches are tried
/// in a fixed order and the first one passing exact verification on the
/// radius-4 grid is returned.
pub fn parametrize(form: &QuadraticForm3) -> Result<ParamFamily> {
    if !form.is_eligible() {
        let (d1, d2, d3) = form.discriminants();
        bail!(NotEligible, "form {form} is not eligible (discriminants {d1}, {d2}, {d3})");
    }
    let [a, b, c, d, e, f] = form.wide();
    let reduced = e != 0 || f != 0;
    let (mut a2, mut b2, mut c2, mut d2) =
        if reduced { (c * (4 * a * c - e * e), c * (4 * b * c - f * f), c, 2 * c * (2 * c * d - e * f)) } else { (a, b, c, d) };
    if a2 < 0 {
        (a2, b2, c2, d2) = (-a2, -b2, -c2, -d2);
    }
    let s = a2 + b2 + d2;
    let r1 = sqrt_exact(b2 * s, "b(a+b+d)")?;
    let r2 = sqrt_exact(a2 * s, "a(a+b+d)")?;
    let r3 = sqrt_exact(-c2 * s, "-c(a+b+d)")?;

    let l0 = -c2;
    let (l1, l2) = (-(b2 + r1), -(b2 - r1));
    // lambda' = r3 (m^2 + d mn + ab n^2)
    let lam = [r3, r3 * d2, r3 * a2 * b2];
    let branches = [
        (a2 + d2 + r2, a2 + d2 - r2, 1i128),
        (a2 + d2 + r2, a2 + d2 - r2, -1),
        (-(a2 + d2 + r2), -(a2 + d2 - r2), -1),
        (-(a2 + d2 + r2), -(a2 + d2 - r2), 1),
    ];
    let mut last_witness = None;
    for (l3, l4, sign_y) in branches {
        let (scale, lambda) = if reduced {
            // x = 2c x', y = 2c y', z = z' - e x' - f y', negated when c < 0
            let sc = if c < 0 { -1 } else { 1 };
            let xq = [l0, l0 * (l1 + l2), l0 * l1 * l2];
            let yq = [sign_y * l0, sign_y * l0 * (l3 + l4), sign_y * l0 * l3 * l4];
            let mut out = [0i128; 3];
            for i in 0..3 {
                out[i] = sc * (lam[i] - e * xq[i] - f * yq[i]);
            }
            (2 * c.abs(), out)
        } else {
            (1, lam)
        };
        let family = ParamFamily {
            ell: [to_i64(scale * l0)?, to_i64(l1)?, to_i64(l2)?, to_i64(l3)?, to_i64(l4)?],
            sign_y: sign_y as i8,
            lambda: [to_i64(lambda[0])?, to_i64(lambda[1])?, to_i64(lambda[2])?],
            source: *form,
        };
        if !family.is_admissible() {
            continue;
        }
        let v = family.verify(4)?;
        if v.holds {
            return Ok(family);
        }
        last_witness = v.witness;
    }
    Err(Error::Internal(format!("no sign branch verifies for {form}; last witness {last_witness:?}")))
}

/// Random eligible form with small coefficients; `e` and `f` are usually
/// non-zero.
pub fn random_eligible_form<R: Rng>(rng: &mut R, range: i64) -> QuadraticForm3 {
    assert!(range >= 2, "coefficient range must be at least 2");
    loop {
        let c = *[-2i64, -1, 1, 2].get(rng.gen_range(0..4)).expect("in range");
        let e = rng.gen_range(-range..=range);
        let f = rng.gen_range(-range..=range);
        // e^2 - 4ac = s1^2 with s1 = e (mod 2), and likewise for b and a+b+d
        let pick = |rng: &mut R, base: i64| -> Option<i64> {
            let s = rng.gen_range(-range..=range) * 2 + base.rem_euclid(2);
            let num = base * base - s * s;
            (s != 0 && num % (4 * c) == 0 && num != 0).then(|| num / (4 * c))
        };
        let (Some(a), Some(b), Some(sum)) = (pick(rng, e), pick(rng, f), pick(rng, e + f)) else {
            continue;
        };
        let form = QuadraticForm3::new(a, b, c, sum - a - b, e, f);
        if form.is_eligible() && form.a.abs().max(form.b.abs()).max(form.d.abs()) <= 64 * range * range {
            return form;
        }
    }
}

/// Largest `M` with a materialisable Følner set.
pub const FOLNER_MAX_M: u32 = 8;
/// Largest `M` whose elements all fit in `u128`.
pub const FOLNER_MAX_M_VALUES: u32 = 6;

/// Element `p_1^{k_1} ... p_M^{k_M}` of a Følner set, by exponents.
#[derive(Debug, Clone, Copy)]
pub struct FolnerPoint<'a> {
    pub primes: &'a [u64],
    pub exponents: &'a [u8],
}

impl FolnerPoint<'_> {
    pub fn value(&self) -> Option<u128> {
        self.primes.iter().zip(self.exponents).try_fold(1u128, |acc, (&p, &k)| acc.checked_mul(u128::from(p).checked_pow(k.into())?))
    }

    /// `k | n`; false whenever `k` has a prime factor outside the first `M`.
    pub fn divisible_by(&self, k: u64) -> bool {
        if k == 0 {
            return false;
        }
        let mut rest = k;
        for (&p, &e) in self.primes.iter().zip(self.exponents) {
            let mut need = 0u32;
            while rest.is_multiple_of(p) {
                rest /= p;
                need += 1;
            }
            if need > u32::from(e) {
                return false;
            }
        }
        rest == 1
    }

    pub fn is_odd(&self) -> bool {
        self.exponents.first().is_none_or(|&e| e == 0)
    }
}

fn check_folner_m(m: u32, max: u32) -> Result<()> {
    if m == 0 {
        bail!(InvalidArgument, "M must be at least 1");
    }
    if m > max {
        bail!(SizeLimit, "Følner set for M = {m} has (M+1)^M = {} elements (limit M = {max})", u128::from(m + 1).pow(m));
    }
    Ok(())
}

fn for_each_exponent<F: FnMut(&[u8])>(m: u32, mut visit: F) {
    let mut ex = vec![0u8; m as usize];
    loop {
        visit(&ex);
        let mut i = 0;
        loop {
            if i == ex.len() {
                return;
            }
            if u32::from(ex[i]) < m {
                ex[i] += 1;
                break;
            }
            ex[i] = 0;
            i += 1;
        }
    }
}

/// Divisors of `(p_1 ... p_M)^M`, sorted. Values fit in `u128` for `M <= 6`.
pub fn folner_set(m: u32) -> Result<Vec<u128>> {
    check_folner_m(m, FOLNER_MAX_M)?;
    if m > FOLNER_MAX_M_VALUES {
        bail!(Overflow, "elements of the Følner set for M = {m} exceed 128 bits; use the exponent form");
    }
    let primes = first_primes(m as usize);
    let mut out = Vec::with_capacity((m as usize + 1).pow(m));
    for_each_exponent(m, |ex| {
        out.push(FolnerPoint { primes: &primes, exponents: ex }.value().expect("fits for M <= 6"));
    });
    out.sort_unstable();
    Ok(out)
}

/// Exponent vectors of the Følner set, in odometer order.
pub fn folner_exponents(m: u32) -> Result<Vec<Vec<u8>>> {
    check_folner_m(m, FOLNER_MAX_M)?;
    let mut out = Vec::new();
    for_each_exponent(m, |ex| out.push(ex.to_vec()));
    Ok(out)
}

/// `|{n in Phi_M : pred(n)}| / |Phi_M|`
pub fn mult_density<P: Fn(&FolnerPoint) -> bool>(pred: P, m: u32) -> Result<f64> {
    check_folner_m(m, FOLNER_MAX_M)?;
    let primes = first_primes(m as usize);
    let (mut hits, mut total) = (0u64, 0u64);
    for_each_exponent(m, |ex| {
        total += 1;
        if pred(&FolnerPoint { primes: &primes, exponents: ex }) {
            hits += 1;
        }
    });
    Ok(hits as f64 / total as f64)
}

/// Named sets for density queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensitySet {
    All,
    Odd,
    Even,
    MultipleOf(u64),
    CoprimeTo(u64),
}

impl DensitySet {
    pub fn contains(&self, n: &FolnerPoint) -> bool {
        match *self {
            Self::All => true,
            Self::Odd => n.is_odd(),
            Self::Even => !n.is_odd(),
            Self::MultipleOf(k) => n.divisible_by(k),
            Self::CoprimeTo(k) => {
                n.primes.iter().zip(n.exponents).all(|(&p, &e)| e == 0 || k % p != 0)
            }
        }
    }
}

impl FromStr for DensitySet {
    type Err = Error;

    /// `all`, `odd`, `even`, `mult:K` or `coprime:K`.
    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| -> Result<u64> {
            let k: u64 = t.parse().map_err(|e| Error::Parse(format!("set '{s}': {e}")))?;
            if k == 0 {
                return Err(Error::Parse(format!("set '{s}': K must be positive")));
            }
            Ok(k)
        };
        match s.split_once(':') {
            None => match s {
                "all" => Ok(Self::All),
                "odd" => Ok(Self::Odd),
                "even" => Ok(Self::Even),
                _ => Err(Error::Parse(format!("unknown set '{s}'"))),
            },
            Some(("mult", k)) => Ok(Self::MultipleOf(num(k)?)),
            Some(("coprime", k)) => Ok(Self::CoprimeTo(num(k)?)),
            Some(_) => Err(Error::Parse(format!("unknown set '{s}'"))),
        }
    }
}

/// Colourings of the positive integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Trivial,
    /// Least significant non-zero base-7 digit, six cells.
    SevenAdic,
}

impl Partition {
    pub fn cell(&self, n: u64) -> u32 {
        match self {
            Self::Trivial => 0,
            Self::SevenAdic => {
                let mut n = n;
                while n > 0 && n.is_multiple_of(7) {
                    n /= 7;
                }
                (n % 7) as u32
            }
        }
    }
}

impl FromStr for Partition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trivial" => Ok(Self::Trivial),
            "7adic" | "seven_adic" => Ok(Self::SevenAdic),
            _ => Err(Error::Parse(format!("unknown partition '{s}' (expected trivial or 7adic)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MonoHit {
    pub x: u64,
    pub y: u64,
    pub lambda: i128,
    pub cell: u32,
}

/// Non-negative integer `lambda` with `p(x, y, lambda) = 0`, ascending.
pub fn lambda_roots(form: &QuadraticForm3, x: i128, y: i128) -> Result<Vec<i128>> {
    let [_, _, c, _, e, f] = form.wide();
    let overflow = || Error::Overflow(format!("lambda equation overflows at (x,y)=({x},{y})"));
    let lin = e.checked_mul(x).and_then(|u| u.checked_add(f.checked_mul(y)?)).ok_or_else(overflow)?;
    let cst = form.eval(x, y, 0).ok_or_else(overflow)?;
    let mut roots = Vec::new();
    if c == 0 {
        if lin == 0 {
            if cst == 0 {
                roots.push(0);
            }
        } else if cst % lin == 0 && -cst / lin >= 0 {
            roots.push(-cst / lin);
        }
        return Ok(roots);
    }
    let disc = lin
        .checked_mul(lin)
        .and_then(|l2| l2.checked_sub(c.checked_mul(4)?.checked_mul(cst)?))
        .ok_or_else(overflow)?;
    if disc < 0 {
        return Ok(roots);
    }
    let Some(r) = exact_sqrt(disc) else {
        return Ok(roots);
    };
    for num in [-lin - r, -lin + r] {
        if num % (2 * c) == 0 {
            let z = num / (2 * c);
            if z >= 0 && !roots.contains(&z) {
                roots.push(z);
            }
        }
    }
    roots.sort_unstable();
    Ok(roots)
}

/// All ordered pairs `x != y` in `[1, bound]` of the same cell solving the
/// form for some integer `lambda >= 0`, sorted by `(x, y, lambda)`.
pub fn search_monochromatic<C>(cells: C, form: &QuadraticForm3, bound: u64) -> Result<Vec<MonoHit>>
where
    C: Fn(u64) -> u32 + Sync,
{
    if bound < 2 {
        bail!(InvalidArgument, "bound must be at least 2");
    }
    if bound > 1 << 31 {
        bail!(SizeLimit, "bound {bound} exceeds 2^31");
    }
    let colours: Vec<u32> = (0..=bound).map(&cells).collect();
    let rows: Vec<Vec<MonoHit>> = (1..=bound)
        .into_par_iter()
        .map(|x| -> Result<Vec<MonoHit>> {
            let mut hits = Vec::new();
            for y in (1..=bound).filter(|&y| y != x && colours[y as usize] == colours[x as usize]) {
                for lambda in lambda_roots(form, x.into(), y.into())? {
                    hits.push(MonoHit { x, y, lambda, cell: colours[x as usize] });
                }
            }
            Ok(hits)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}
