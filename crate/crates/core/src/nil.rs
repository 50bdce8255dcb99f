// SPDX-License-Identifier: Apache-2.0

//! Heisenberg nilmanifold orbits, polynomial sequences on tori and
//! equidistribution diagnostics.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{tabulate, unit_phase, FactorSieve, MultiplicativeSpec};
use crate::error::{bail, Error, Result};
use crate::fourier::pairwise_sum;

/// Element of the Heisenberg group with law
/// `(x, y, z)(x', y', z') = (x + x', y + y', z + z' + x y')`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HeisenbergElement {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl HeisenbergElement {
    pub const IDENTITY: Self = Self { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn mul(&self, h: &Self) -> Self {
        Self { x: self.x + h.x, y: self.y + h.y, z: self.z + h.z + self.x * h.y }
    }

    pub fn inverse(&self) -> Self {
        Self { x: -self.x, y: -self.y, z: -self.z + self.x * self.y }
    }

    pub fn from_lattice(g: [i64; 3]) -> Self {
        Self::new(g[0] as f64, g[1] as f64, g[2] as f64)
    }

    /// Right-multiply by `gamma` in `Z^3` to land in `[0, 1)^3`.
    pub fn reduce(&self) -> ([i64; 3], [f64; 3]) {
        let a = -self.x.floor();
        let px = wrap_unit(self.x + a);
        let b = -self.y.floor();
        let py = wrap_unit(self.y + b);
        let w = self.z + self.x * b;
        let c = -w.floor();
        let pz = wrap_unit(w + c);
        ([a as i64, b as i64, c as i64], [px, py, pz])
    }

    /// `a^n = (n x, n y, binom(n, 2) x y + n z)`, exact in the group.
    pub fn pow(&self, n: i64) -> Self {
        let nf = n as f64;
        Self::new(nf * self.x, nf * self.y, binom2(n) * self.x * self.y + nf * self.z)
    }
}

fn binom2(n: i64) -> f64 {
    (i128::from(n) * i128::from(n - 1) / 2) as f64
}

/// `t mod 1` in `[0, 1)`, folding the rounding case `1.0` back to `0`.
fn wrap_unit(t: f64) -> f64 {
    let r = t.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance from `t` to the nearest integer.
pub fn torus_norm(t: f64) -> f64 {
    let r = t.rem_euclid(1.0);
    r.min(1.0 - r)
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn from(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Self { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn product(a: f64, b: f64) -> Self {
        let p = a * b;
        Self { hi: p, lo: a.mul_add(b, -p) }
    }

    fn add(self, o: Self) -> Self {
        let s = Self::two_sum(self.hi, o.hi);
        Self::two_sum(s.hi, s.lo + self.lo + o.lo)
    }

    fn scale(self, c: f64) -> Self {
        let p = Self::product(self.hi, c);
        Self::two_sum(p.hi, p.lo + self.lo * c)
    }

    fn floor(self) -> f64 {
        let f = self.hi.floor();
        if f == self.hi {
            f + self.lo.floor()
        } else {
            f
        }
    }

    fn frac(self) -> f64 {
        let f = self.hi - self.hi.floor();
        wrap_unit(f + self.lo)
    }
}

/// Reduced points of `a^n e_X` for `n = 1..=N`, by repeated left
/// multiplication and reduction.
///
/// Coordinates are carried as double-doubles: in plain `f64` the rounding
/// error of `y` feeds `z` through the `x y` cross term at every step and
/// grows like `n^2 eps`.
pub fn orbit_iterated(a: &HeisenbergElement, n: usize) -> Result<Vec<[f64; 3]>> {
    if n == 0 {
        bail!(InvalidArgument, "N must be at least 1");
    }
    let lift = DoubleDouble::from;
    let mut out = Vec::with_capacity(n);
    let (mut x, mut y, mut z) = (lift(0.0), lift(0.0), lift(0.0));
    for _ in 0..n {
        let nx = x.add(lift(a.x));
        let ny = y.add(lift(a.y));
        let nz = z.add(lift(a.z)).add(y.scale(a.x));
        // right multiplication by an element of Z^3, as in `reduce`
        let b = -ny.floor();
        let w = nz.add(nx.scale(b));
        x = nx.add(lift(-nx.floor()));
        y = ny.add(lift(b));
        z = w.add(lift(-w.floor()));
        out.push([x.frac(), y.frac(), z.frac()]);
    }
    Ok(out)
}

/// Reduced point of `a^n e_X` from the closed form of `a^n`, evaluated in
/// double-double arithmetic so the reduction mod `Z^3` keeps full precision.
pub fn orbit_point_closed_form(a: &HeisenbergElement, n: i64) -> Result<[f64; 3]> {
    if n.unsigned_abs() > 1 << 26 {
        bail!(OutOfRange, "closed form supports |n| <= 2^26, got {n}");
    }
    let nf = n as f64;
    let x = DoubleDouble::product(nf, a.x);
    let y = DoubleDouble::product(nf, a.y);
    let b = -y.floor();
    let z = DoubleDouble::product(a.x, a.y).scale(binom2(n)).add(DoubleDouble::product(nf, a.z));
    let w = z.add(x.scale(b));
    Ok([x.frac(), y.frac(), w.frac()])
}

pub fn orbit_closed_form(a: &HeisenbergElement, n: usize) -> Result<Vec<[f64; 3]>> {
    if n == 0 {
        bail!(InvalidArgument, "N must be at least 1");
    }
    (1..=n as i64).into_par_iter().map(|k| orbit_point_closed_form(a, k)).collect()
}

/// Largest coordinatewise circular distance between two point lists.
pub fn max_torus_distance<const M: usize>(a: &[[f64; M]], b: &[[f64; M]]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(p, q)| p.iter().zip(q).map(|(s, t)| torus_norm(s - t)))
        .fold(0.0, f64::max)
}

/// Polynomial sequence `phi(n) = sum_j alpha_j binom(n, j)` in `T^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoly {
    dim: usize,
    /// `coeffs[j][i]` is coordinate `i` of `alpha_j`, for `j = 0..=d`.
    coeffs: Vec<Vec<f64>>,
}

/// Generalised binomial `binom(n, j)`, exact; `None` past 64 bits.
pub fn binomial(n: i64, j: u32) -> Option<i64> {
    let mut acc: i128 = 1;
    for i in 0..i128::from(j) {
        acc = acc.checked_mul(i128::from(n) - i)? / (i + 1);
    }
    i64::try_from(acc).ok()
}

/// `c alpha mod 1` for an integer `c` with `|c| < 2^53`.
fn scaled_frac(c: i64, alpha: f64) -> f64 {
    DoubleDouble::product(c as f64, alpha).frac()
}

impl TorusPoly {
    /// Coefficients in the binomial basis; each reduced mod 1.
    pub fn new(coeffs: Vec<Vec<f64>>) -> Result<Self> {
        let dim = coeffs.first().map_or(0, Vec::len);
        if dim == 0 {
            bail!(InvalidArgument, "need at least alpha_0 with one coordinate");
        }
        if coeffs.iter().any(|c| c.len() != dim) {
            bail!(InvalidArgument, "all coefficients must lie in T^{dim}");
        }
        if coeffs.iter().flatten().any(|v| !v.is_finite()) {
            bail!(InvalidArgument, "coefficients must be finite");
        }
        let coeffs = coeffs.into_iter().map(|c| c.into_iter().map(wrap_unit).collect()).collect();
        Ok(Self { dim, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn eval(&self, n: i64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        for (j, a) in self.coeffs.iter().enumerate() {
            let c = binomial(n, j as u32).filter(|c| c.unsigned_abs() < 1 << 53).ok_or_else(|| {
                Error::Overflow(format!("binom({n}, {j}) exceeds 53 bits"))
            })?;
            for (o, &v) in out.iter_mut().zip(a) {
                *o = wrap_unit(*o + scaled_frac(c, v));
            }
        }
        Ok(out)
    }

    /// From monomial coefficients `alpha'_k`: `n^k = sum_j S(k, j) j! binom(n, j)`
    /// has integer coefficients, so the conversion is exact mod 1.
    pub fn from_monomial(coeffs: Vec<Vec<f64>>) -> Result<Self> {
        let d = coeffs.len();
        let dim = coeffs.first().map_or(0, Vec::len);
        let weights = stirling2_factorial(d);
        let mut out = vec![vec![0.0; dim]; d];
        for (k, a) in coeffs.iter().enumerate() {
            if a.len() != dim {
                bail!(InvalidArgument, "all coefficients must lie in T^{dim}");
            }
            for (j, row) in out.iter_mut().enumerate().take(k + 1) {
                let w = weights[k][j];
                for (o, &v) in row.iter_mut().zip(a) {
                    *o = wrap_unit(*o + scaled_frac(w, v));
                }
            }
        }
        Self::new(out)
    }

    /// Monomial coefficients of the real polynomial with the stored lifts in
    /// `[0, 1)`, reduced mod 1.
    pub fn to_monomial(&self) -> Vec<Vec<f64>> {
        let d = self.coeffs.len();
        // binom(n, j) = sum_k s(j, k) n^k / j!
        let s1 = stirling1(d);
        let mut out = vec![vec![0.0; self.dim]; d];
        let mut fact = 1.0;
        for (j, a) in self.coeffs.iter().enumerate() {
            if j > 0 {
                fact *= j as f64;
            }
            for (k, row) in out.iter_mut().enumerate().take(j + 1) {
                let w = s1[j][k] as f64 / fact;
                for (o, &v) in row.iter_mut().zip(a) {
                    *o += w * v;
                }
            }
        }
        out.into_iter().map(|r| r.into_iter().map(wrap_unit).collect()).collect()
    }
}

fn stirling1(d: usize) -> Vec<Vec<i64>> {
    // signed: prod_{i<j} (n - i) = sum_k s(j, k) n^k
    let mut s = vec![vec![0i64; d + 1]; d + 1];
    s[0][0] = 1;
    for j in 1..=d {
        for k in 1..=j {
            s[j][k] = s[j - 1][k - 1] - (j as i64 - 1) * s[j - 1][k];
        }
    }
    s
}

fn stirling2_factorial(d: usize) -> Vec<Vec<i64>> {
    // S(k, j) j!, built from S(k, j) = j S(k-1, j) + S(k-1, j-1)
    let mut s = vec![vec![0i64; d + 1]; d + 1];
    s[0][0] = 1;
    for k in 1..=d {
        for j in 1..=k {
            s[k][j] = j as i64 * s[k - 1][j] + s[k - 1][j - 1];
        }
    }
    let mut fact = 1i64;
    for j in 0..=d {
        if j > 0 {
            fact *= j as i64;
        }
        for row in s.iter_mut() {
            row[j] *= fact;
        }
    }
    s
}

/// `max_{1 <= j <= d} N^j ||alpha_j||`, maximised over coordinates.
pub fn smoothness_norm(poly: &TorusPoly, n: u64) -> f64 {
    let nf = n as f64;
    poly.coeffs
        .iter()
        .enumerate()
        .skip(1)
        .flat_map(|(j, a)| a.iter().map(move |&v| nf.powi(j as i32) * torus_norm(v)))
        .fold(0.0, f64::max)
}

/// `n -> phi(n + b)` in the binomial basis:
/// `beta_i = sum_j binom(b, j) alpha_{i+j}` with the generalised binomial for
/// `b < 0`.
pub fn poly_shift(poly: &TorusPoly, b: i64) -> Result<TorusPoly> {
    let d = poly.degree();
    let mut out = vec![vec![0.0; poly.dim]; d + 1];
    for (i, row) in out.iter_mut().enumerate() {
        for j in 0..=(d - i) {
            let c = binomial(b, j as u32)
                .filter(|c| c.unsigned_abs() < 1 << 53)
                .ok_or_else(|| Error::Overflow(format!("binom({b}, {j}) exceeds 53 bits")))?;
            for (o, &v) in row.iter_mut().zip(&poly.coeffs[i + j]) {
                *o = wrap_unit(*o + scaled_frac(c, v));
            }
        }
    }
    TorusPoly::new(out)
}

/// Factor in `||phi_b|| <= F ||phi||` that the binomial expansion proves:
/// `((N+1)/N)^b` for `b >= 0` and `(N/(N-1))^{|b|}` for `b < 0`.
pub fn shift_bound_factor(n: u64, b: i64) -> f64 {
    let nf = n as f64;
    if b >= 0 {
        ((nf + 1.0) / nf).powi(b as i32)
    } else if n > 1 {
        (nf / (nf - 1.0)).powi(b.unsigned_abs() as i32)
    } else {
        f64::INFINITY
    }
}

/// `u -> e(k . u)` on the first `k.len()` coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HorizontalCharacter {
    pub k: Vec<i64>,
}

impl HorizontalCharacter {
    pub fn new(k: Vec<i64>) -> Self {
        Self { k }
    }

    pub fn eval(&self, u: &[f64]) -> Complex64 {
        let phase: f64 = self.k.iter().zip(u).map(|(&k, &v)| scaled_frac(k, v)).sum();
        unit_phase(phase)
    }

    /// Non-zero `k` in `Z^dim` with `sum |k_i| <= max_l1`, up to sign (`e(-k.u)`
    /// is the conjugate and gives the same modulus).
    pub fn defaults(dim: usize, max_l1: i64) -> Vec<Self> {
        let mut out = Vec::new();
        let mut k = vec![-max_l1; dim];
        loop {
            let l1: i64 = k.iter().map(|v| v.abs()).sum();
            let leading_positive = k.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0);
            if l1 >= 1 && l1 <= max_l1 && leading_positive {
                out.push(Self::new(k.clone()));
            }
            let mut i = 0;
            loop {
                if i == dim {
                    return out;
                }
                if k[i] < max_l1 {
                    k[i] += 1;
                    break;
                }
                k[i] = -max_l1;
                i += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DiagnosticWitness {
    pub character: Vec<i64>,
    pub step: usize,
    pub offset: usize,
    pub length: usize,
    pub value: f64,
}

/// `max |E_{n in [N]} 1_P(n) Phi(x_n)|` over the characters and over
/// progressions `P = {n <= L : n = r mod q}` with `q <= budget`, `0 <= r < q`
/// and `L` in `{N/4, N/2, 3N/4, N}`. Point `x_n` sits at index `n - 1`.
pub fn equidistribution_diagnostic<const M: usize>(
    points: &[[f64; M]],
    tests: &[HorizontalCharacter],
    budget: usize,
) -> Result<DiagnosticWitness> {
    let n = points.len();
    if n == 0 || tests.is_empty() || budget == 0 {
        bail!(InvalidArgument, "need points, test functions and a positive budget");
    }
    if let Some(t) = tests.iter().find(|t| t.k.len() > M) {
        bail!(InvalidArgument, "character {:?} has more coordinates than the points ({M})", t.k);
    }
    let cutoffs: Vec<usize> = (1..=4).map(|i| (n * i / 4).max(1)).collect();
    let best = tests
        .par_iter()
        .map(|t| {
            let vals: Vec<Complex64> = points.iter().map(|p| t.eval(p)).collect();
            let mut best = DiagnosticWitness { character: t.k.clone(), step: 1, offset: 0, length: n, value: -1.0 };
            for q in 1..=budget {
                for r in 0..q {
                    // class of n = r mod q among 1..=N
                    let mut acc = Complex64::new(0.0, 0.0);
                    let mut cut = 0;
                    let first = if r == 0 { q } else { r };
                    let mut m = first;
                    while cut < cutoffs.len() {
                        if m > cutoffs[cut] || m > n {
                            let v = acc.norm() / n as f64;
                            if v > best.value {
                                best = DiagnosticWitness { character: t.k.clone(), step: q, offset: r, length: cutoffs[cut], value: v };
                            }
                            cut += 1;
                            continue;
                        }
                        acc += vals[m - 1];
                        m += q;
                    }
                }
            }
            best
        })
        .reduce_with(|a, b| if b.value > a.value { b } else { a })
        .expect("tests non-empty");
    Ok(best)
}

/// Member of a Daboussi family; `Centered` subtracts the mean over `[N]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyMember {
    Plain(MultiplicativeSpec),
    Centered(MultiplicativeSpec),
}

impl FamilyMember {
    pub fn label(&self) -> String {
        match self {
            Self::Plain(f) => f.label(),
            Self::Centered(f) => format!("{}-mean", f.label()),
        }
    }

    fn values(&self, n: usize, sieve: &FactorSieve) -> Result<Vec<Complex64>> {
        match self {
            Self::Plain(f) => Ok(tabulate(f, n, sieve)?.values().to_vec()),
            Self::Centered(f) => {
                let v = tabulate(f, n, sieve)?.values().to_vec();
                let mean = pairwise_sum(&v) / n as f64;
                Ok(v.into_iter().map(|z| z - mean).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DaboussiEntry {
    pub member: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DaboussiReport {
    pub n: usize,
    pub entries: Vec<DaboussiEntry>,
    pub max: f64,
}

/// `|E_{n in [N]} f(n) Phi(a^n e_X)|` for each member, and the maximum.
pub fn daboussi_check(
    a: &HeisenbergElement,
    test: &HorizontalCharacter,
    family: &[FamilyMember],
    n: usize,
) -> Result<DaboussiReport> {
    if family.is_empty() {
        bail!(InvalidArgument, "family must be non-empty");
    }
    if test.k.len() > 3 {
        bail!(InvalidArgument, "Heisenberg points have three coordinates");
    }
    let orbit = orbit_closed_form(a, n)?;
    let phi: Vec<Complex64> = orbit.iter().map(|p| test.eval(p)).collect();
    let sieve = FactorSieve::new(n.max(2))?;
    let mut entries = Vec::with_capacity(family.len());
    for f in family {
        let terms: Vec<Complex64> = f.values(n, &sieve)?.iter().zip(&phi).map(|(u, v)| u * v).collect();
        entries.push(DaboussiEntry { member: f.label(), value: (pairwise_sum(&terms) / n as f64).norm() });
    }
    let max = entries.iter().map(|e| e.value).fold(0.0, f64::max);
    Ok(DaboussiReport { n, entries, max })
}

/// Liouville, Möbius, the character mod 3, `n^i` and the centred principal
/// function.
pub fn standard_family() -> Vec<FamilyMember> {
    vec![
        FamilyMember::Plain(MultiplicativeSpec::liouville()),
        FamilyMember::Plain(MultiplicativeSpec::moebius()),
        FamilyMember::Plain(MultiplicativeSpec::character(3, 1).expect("valid character")),
        FamilyMember::Plain(MultiplicativeSpec::twist(1.0).expect("finite t")),
        FamilyMember::Centered(MultiplicativeSpec::principal()),
    ]
}
