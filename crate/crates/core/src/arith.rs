// SPDX-License-Identifier: Apache-2.0

//! Sieve-backed evaluation of bounded multiplicative functions.
//!
//! A [`MultiplicativeSpec`] describes a function by its values on prime
//! powers; [`FactorSieve`] supplies factorisations so that a whole table on
//! `[N]` is produced by one linear pass.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::primes;

const UNIT_DISC_SLACK: f64 = 1e-12;

/// Smallest-prime-factor table for `2..=limit`.
#[derive(Debug, Clone)]
pub struct FactorSieve {
    limit: usize,
    spf: Vec<u32>,
    primes: Vec<u32>,
}

impl FactorSieve {
    pub fn new(limit: usize) -> Result<Self> {
        if limit < 2 {
            bail!(InvalidArgument, "sieve limit must be at least 2, got {limit}");
        }
        if limit > u32::MAX as usize {
            bail!(SizeLimit, "sieve limit {limit} exceeds 32-bit storage");
        }
        let mut spf = vec![0u32; limit + 1];
        let mut primes = Vec::new();
        for i in 2..=limit {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                let ip = i * p as usize;
                if p > si || ip > limit {
                    break;
                }
                spf[ip] = p;
            }
        }
        Ok(Self { limit, spf, primes })
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    /// Smallest prime factor of `n`, for `2 <= n <= limit`.
    pub fn spf(&self, n: usize) -> u32 {
        self.spf[n]
    }

    pub fn is_prime(&self, n: usize) -> bool {
        n >= 2 && n <= self.limit && self.spf[n] as usize == n
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Prime factorisation of `n` as `(p, k)` pairs in increasing `p`.
    pub fn factorize(&self, mut n: usize) -> Result<Vec<(u64, u32)>> {
        if n == 0 || n > self.limit {
            bail!(OutOfRange, "cannot factor {n} with a sieve of limit {}", self.limit);
        }
        let mut out: Vec<(u64, u32)> = Vec::new();
        while n > 1 {
            let p = self.spf[n] as usize;
            let mut k = 0;
            while n.is_multiple_of(p) {
                n /= p;
                k += 1;
            }
            out.push((p as u64, k));
        }
        Ok(out)
    }
}

/// Dirichlet character modulo `q`, for `q` a product of coprime factors
/// drawn from `{2, 4, p^k}` with `p` odd (cyclic unit groups).
///
/// The index is read in mixed radix over the prime-power components in
/// increasing order; digit `j_i` sends the fixed generator `g_i` of
/// `(Z/q_i)^*` to `e(j_i / phi(q_i))`. Index 0 is the principal character.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CharacterKey", into = "CharacterKey")]
pub struct DirichletCharacter {
    modulus: u64,
    index: u64,
    values: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct CharacterKey {
    modulus: u64,
    index: u64,
}

impl TryFrom<CharacterKey> for DirichletCharacter {
    type Error = Error;
    fn try_from(key: CharacterKey) -> Result<Self> {
        Self::new(key.modulus, key.index)
    }
}

impl From<DirichletCharacter> for CharacterKey {
    fn from(c: DirichletCharacter) -> Self {
        Self { modulus: c.modulus, index: c.index }
    }
}

impl DirichletCharacter {
    pub fn new(modulus: u64, index: u64) -> Result<Self> {
        if modulus == 0 {
            bail!(InvalidArgument, "character modulus must be positive");
        }
        if modulus > 1 << 24 {
            bail!(SizeLimit, "character modulus {modulus} too large to tabulate");
        }
        let components = primes::factorize_trial(modulus);
        let mut group_order = 1u64;
        let mut logs: Vec<(u64, u64, Vec<Option<u64>>)> = Vec::new(); // (q_i, phi, dlog table)
        for &(p, k) in &components {
            let qi = p.pow(k);
            if p == 2 && k >= 3 {
                bail!(
                    InvalidArgument,
                    "modulus {modulus}: (Z/{qi})^* is not cyclic; only 2 and 4 are supported at p = 2"
                );
            }
            let phi = qi / p * (p - 1);
            let g = primitive_root(qi, phi, p);
            let mut table = vec![None; qi as usize];
            let mut x = 1u64;
            for e in 0..phi {
                table[x as usize] = Some(e);
                x = x * g % qi;
            }
            group_order *= phi;
            logs.push((qi, phi, table));
        }
        if index >= group_order {
            bail!(
                InvalidArgument,
                "character index {index} out of range for modulus {modulus} (group order {group_order})"
            );
        }
        let mut digits = Vec::with_capacity(logs.len());
        let mut rest = index;
        for (_, phi, _) in &logs {
            digits.push(rest % phi);
            rest /= phi;
        }
        let values = (0..modulus)
            .map(|r| {
                let mut turns = 0.0;
                for ((qi, phi, table), &j) in logs.iter().zip(&digits) {
                    match table[(r % qi) as usize] {
                        Some(e) => turns += ((e * j) % phi) as f64 / *phi as f64,
                        None => return Complex64::new(0.0, 0.0),
                    }
                }
                unit_phase(turns)
            })
            .collect();
        Ok(Self { modulus, index, values })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn is_principal(&self) -> bool {
        self.index == 0
    }

    /// `chi(n)` for any integer `n` (periodic, zero off the unit group).
    pub fn value(&self, n: i64) -> Complex64 {
        self.values[n.rem_euclid(self.modulus as i64) as usize]
    }
}

fn primitive_root(qi: u64, phi: u64, p: u64) -> u64 {
    if qi <= 2 {
        return 1;
    }
    let factors: Vec<u64> = primes::factorize_trial(phi).into_iter().map(|(r, _)| r).collect();
    (2..qi)
        .find(|&g| {
            g % p != 0
                && factors.iter().all(|&r| {
                    let mut acc = 1u64;
                    for _ in 0..phi / r {
                        acc = acc * g % qi;
                    }
                    acc != 1
                })
        })
        .expect("cyclic unit group has a generator")
}

/// `e(x) = exp(2 pi i x)` evaluated after reducing `x` mod 1.
pub fn unit_phase(turns: f64) -> Complex64 {
    let t = turns - turns.floor();
    // exact values at quarter turns keep characters like chi mod 4 real
    match t {
        t if t == 0.0 => Complex64::new(1.0, 0.0),
        t if t == 0.25 => Complex64::new(0.0, 1.0),
        t if t == 0.5 => Complex64::new(-1.0, 0.0),
        t if t == 0.75 => Complex64::new(0.0, -1.0),
        _ => Complex64::from_polar(1.0, TAU * t),
    }
}

/// `e(num / den)` with the numerator reduced exactly first.
pub fn rational_phase(num: i128, den: u64) -> Complex64 {
    let r = num.rem_euclid(den as i128) as u64;
    unit_phase(r as f64 / den as f64)
}

/// Values of a multiplicative function on primes and, for non-complete
/// specs, on prime powers. Unlisted primes take the value 1; unlisted prime
/// powers default to `f(p)^k`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "PrimeTableEntries", into = "PrimeTableEntries")]
pub struct PrimeTable {
    pub primes: BTreeMap<u64, Complex64>,
    /// `p -> (k -> f(p^k))`
    pub powers: BTreeMap<u64, BTreeMap<u32, Complex64>>,
    pub complete: bool,
}

/// Flat serialised form of [`PrimeTable`].
#[derive(Serialize, Deserialize)]
struct PrimeTableEntries {
    primes: Vec<(u64, Complex64)>,
    #[serde(default)]
    powers: Vec<(u64, u32, Complex64)>,
    complete: bool,
}

impl From<PrimeTableEntries> for PrimeTable {
    fn from(e: PrimeTableEntries) -> Self {
        let mut t = PrimeTable { primes: e.primes.into_iter().collect(), complete: e.complete, ..Default::default() };
        for (p, k, v) in e.powers {
            t.powers.entry(p).or_default().insert(k, v);
        }
        t
    }
}

impl From<PrimeTable> for PrimeTableEntries {
    fn from(t: PrimeTable) -> Self {
        let powers = t.powers.iter().flat_map(|(&p, m)| m.iter().map(move |(&k, &v)| (p, k, v))).collect();
        Self { primes: t.primes.into_iter().collect(), powers, complete: t.complete }
    }
}

impl PrimeTable {
    pub fn prime(&self, p: u64) -> Complex64 {
        self.primes.get(&p).copied().unwrap_or(Complex64::new(1.0, 0.0))
    }

    fn validate(&self) -> Result<()> {
        for (&p, v) in &self.primes {
            if !primes::is_prime(p) {
                bail!(InvalidArgument, "prime table key {p} is not prime");
            }
            if v.norm() > 1.0 + UNIT_DISC_SLACK {
                bail!(InvalidArgument, "f({p}) = {v} lies outside the unit disc");
            }
        }
        for (&p, k, v) in self.powers.iter().flat_map(|(p, m)| m.iter().map(move |(k, v)| (p, *k, v))) {
            if !primes::is_prime(p) || k == 0 {
                bail!(InvalidArgument, "prime-power key {p}^{k} is not a prime power");
            }
            if v.norm() > 1.0 + UNIT_DISC_SLACK {
                bail!(InvalidArgument, "f({p}^{k}) = {v} lies outside the unit disc");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpecKind {
    Liouville,
    Moebius,
    Character(DirichletCharacter),
    /// `n -> n^{it}`
    Twist { t: f64 },
    Primes(PrimeTable),
    Principal,
    /// Indicator of integers that are sums of two squares.
    SumOfTwoSquares,
}

/// A member of the class of multiplicative functions bounded by 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecKind", into = "SpecKind")]
pub struct MultiplicativeSpec {
    kind: SpecKind,
}

impl TryFrom<SpecKind> for MultiplicativeSpec {
    type Error = Error;
    fn try_from(kind: SpecKind) -> Result<Self> {
        Self::new(kind)
    }
}

impl From<MultiplicativeSpec> for SpecKind {
    fn from(spec: MultiplicativeSpec) -> Self {
        spec.kind
    }
}

impl MultiplicativeSpec {
    pub fn new(kind: SpecKind) -> Result<Self> {
        match &kind {
            SpecKind::Primes(t) => t.validate()?,
            SpecKind::Twist { t } if !t.is_finite() => {
                bail!(InvalidArgument, "twist parameter must be finite")
            }
            _ => {}
        }
        Ok(Self { kind })
    }

    pub fn liouville() -> Self {
        Self { kind: SpecKind::Liouville }
    }

    pub fn moebius() -> Self {
        Self { kind: SpecKind::Moebius }
    }

    pub fn principal() -> Self {
        Self { kind: SpecKind::Principal }
    }

    pub fn sum_of_two_squares() -> Self {
        Self { kind: SpecKind::SumOfTwoSquares }
    }

    pub fn twist(t: f64) -> Result<Self> {
        Self::new(SpecKind::Twist { t })
    }

    pub fn character(modulus: u64, index: u64) -> Result<Self> {
        Ok(Self { kind: SpecKind::Character(DirichletCharacter::new(modulus, index)?) })
    }

    pub fn prime_table(table: PrimeTable) -> Result<Self> {
        Self::new(SpecKind::Primes(table))
    }

    /// The completely multiplicative function with `f(2) = -1` and
    /// `f(p) = 1` for odd primes, i.e. `f(2^m (2k+1)) = (-1)^m`.
    pub fn two_sign() -> Self {
        let mut t = PrimeTable { complete: true, ..Default::default() };
        t.primes.insert(2, Complex64::new(-1.0, 0.0));
        Self { kind: SpecKind::Primes(t) }
    }

    pub fn kind(&self) -> &SpecKind {
        &self.kind
    }

    pub fn is_complete(&self) -> bool {
        match &self.kind {
            SpecKind::Liouville
            | SpecKind::Character(_)
            | SpecKind::Twist { .. }
            | SpecKind::Principal => true,
            SpecKind::Primes(t) => t.complete,
            SpecKind::Moebius | SpecKind::SumOfTwoSquares => false,
        }
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match &self.kind {
            SpecKind::Liouville => "liouville".into(),
            SpecKind::Moebius => "moebius".into(),
            SpecKind::Character(c) => format!("chi:{}:{}", c.modulus, c.index),
            SpecKind::Twist { t } => format!("twist:{t}"),
            SpecKind::Primes(_) => "primes".into(),
            SpecKind::Principal => "principal".into(),
            SpecKind::SumOfTwoSquares => "sum2sq".into(),
        }
    }

    /// `f(p^k)` for a prime `p` and `k >= 1`.
    pub fn prime_power(&self, p: u64, k: u32) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match &self.kind {
            SpecKind::Liouville => {
                if k.is_multiple_of(2) {
                    one
                } else {
                    -one
                }
            }
            SpecKind::Moebius => {
                if k == 1 {
                    -one
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            SpecKind::Character(c) => {
                let q = c.modulus;
                let mut r = 1 % q;
                for _ in 0..k {
                    r = ((r as u128 * (p % q) as u128) % q as u128) as u64;
                }
                c.values[r as usize]
            }
            SpecKind::Twist { t } => Complex64::from_polar(1.0, t * k as f64 * (p as f64).ln()),
            SpecKind::Primes(table) => {
                if !table.complete {
                    if let Some(v) = table.powers.get(&p).and_then(|m| m.get(&k)) {
                        return *v;
                    }
                }
                table.prime(p).powu(k)
            }
            SpecKind::Principal => one,
            SpecKind::SumOfTwoSquares => {
                if p % 4 == 3 && k % 2 == 1 {
                    Complex64::new(0.0, 0.0)
                } else {
                    one
                }
            }
        }
    }

    /// `f(n)` for a positive `n` given its factorisation.
    fn from_factors(&self, n: u64, factors: &[(u64, u32)]) -> Complex64 {
        match &self.kind {
            SpecKind::Twist { t } => Complex64::from_polar(1.0, t * (n as f64).ln()),
            SpecKind::Character(c) => c.value(n as i64),
            _ => factors
                .iter()
                .fold(Complex64::new(1.0, 0.0), |acc, &(p, k)| acc * self.prime_power(p, k)),
        }
    }
}

impl std::str::FromStr for MultiplicativeSpec {
    type Err = Error;

    /// Accepts a short name (`liouville`, `moebius`, `principal`, `sum2sq`,
    /// `f2neg`, `chi:<q>:<index>`, `twist:<t>`) or `key=value` pairs split
    /// by whitespace, `;` or newlines:
    ///
    /// ```text
    /// kind=primes complete=false p.2=-1 p.3=0:1 pk.2.2=0.5
    /// kind=character q=12 index=3
    /// ```
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if !text.contains('=') {
            return parse_short(text);
        }
        let mut pairs = BTreeMap::new();
        let body: Vec<&str> = text.lines().map(|l| l.split('#').next().unwrap_or("")).collect();
        let body = body.join("\n");
        for token in body.split(|c: char| c.is_whitespace() || c == ';').filter(|t| !t.is_empty()) {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{token}'")))?;
            if pairs.insert(k.to_string(), v.to_string()).is_some() {
                bail!(Parse, "duplicate key '{k}'");
            }
        }
        let kind = pairs.remove("kind").ok_or_else(|| Error::Parse("missing 'kind' key".into()))?;
        let take_num = |pairs: &mut BTreeMap<String, String>, key: &str| -> Result<u64> {
            let v = pairs.remove(key).ok_or_else(|| Error::Parse(format!("missing '{key}' key")))?;
            v.parse().map_err(|e| Error::Parse(format!("{key}={v}: {e}")))
        };
        let spec = match kind.as_str() {
            "character" | "chi" => {
                let q = take_num(&mut pairs, "q")?;
                let index = take_num(&mut pairs, "index")?;
                Self::character(q, index)?
            }
            "twist" => {
                let v = pairs.remove("t").ok_or_else(|| Error::Parse("missing 't' key".into()))?;
                Self::twist(parse_f64(&v)?)?
            }
            "primes" => {
                let mut table = PrimeTable { complete: true, ..Default::default() };
                if let Some(c) = pairs.remove("complete") {
                    table.complete = c.parse().map_err(|e| Error::Parse(format!("complete={c}: {e}")))?;
                }
                for (k, v) in std::mem::take(&mut pairs) {
                    let parts: Vec<&str> = k.split('.').collect();
                    let num = |x: &str| -> Result<u64> {
                        x.parse().map_err(|e| Error::Parse(format!("key '{k}': {e}")))
                    };
                    match parts.as_slice() {
                        ["p", p] => {
                            table.primes.insert(num(p)?, parse_complex(&v)?);
                        }
                        ["pk", p, e] => {
                            let e = u32::try_from(num(e)?).map_err(|_| Error::Parse(format!("key '{k}': exponent too large")))?;
                            table.powers.entry(num(p)?).or_default().insert(e, parse_complex(&v)?);
                        }
                        _ => {
                            pairs.insert(k, v);
                        }
                    }
                }
                Self::prime_table(table)?
            }
            other => parse_short(other)?,
        };
        if let Some(k) = pairs.keys().next() {
            bail!(Parse, "unknown key '{k}' for kind '{kind}'");
        }
        Ok(spec)
    }
}

fn parse_short(name: &str) -> Result<MultiplicativeSpec> {
    let parts: Vec<&str> = name.split(':').collect();
    let num = |x: &str| -> Result<u64> { x.parse().map_err(|e| Error::Parse(format!("'{name}': {e}"))) };
    match parts.as_slice() {
        ["liouville"] => Ok(MultiplicativeSpec::liouville()),
        ["moebius" | "mobius" | "mu"] => Ok(MultiplicativeSpec::moebius()),
        ["principal" | "one"] => Ok(MultiplicativeSpec::principal()),
        ["sum2sq"] => Ok(MultiplicativeSpec::sum_of_two_squares()),
        ["f2neg"] => Ok(MultiplicativeSpec::two_sign()),
        ["chi", q, i] => MultiplicativeSpec::character(num(q)?, num(i)?),
        ["twist", t] => MultiplicativeSpec::twist(parse_f64(t)?),
        _ => bail!(Parse, "unknown function spec '{name}'"),
    }
}

fn parse_f64(x: &str) -> Result<f64> {
    x.parse().map_err(|e| Error::Parse(format!("'{x}': {e}")))
}

/// `re` or `re:im`
fn parse_complex(x: &str) -> Result<Complex64> {
    match x.split_once(':') {
        Some((re, im)) => Ok(Complex64::new(parse_f64(re)?, parse_f64(im)?)),
        None => Ok(Complex64::new(parse_f64(x)?, 0.0)),
    }
}

/// `f(n)` under the even extension `f(0) = 0`, `f(-n) = f(n)`.
pub fn evaluate(spec: &MultiplicativeSpec, n: i64, sieve: &FactorSieve) -> Result<Complex64> {
    if n == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let m = n.unsigned_abs();
    if m as usize > sieve.limit() {
        bail!(OutOfRange, "|n| = {m} exceeds sieve limit {}", sieve.limit());
    }
    let factors = sieve.factorize(m as usize)?;
    Ok(spec.from_factors(m, &factors))
}

/// `f(n^r)` for `n >= 1`, computed from the factorisation of `n` with every
/// exponent scaled by `r`.
pub fn evaluate_power(spec: &MultiplicativeSpec, n: u64, r: u32, sieve: &FactorSieve) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    if r == 0 {
        return Ok(one);
    }
    if n == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if n as usize > sieve.limit() {
        bail!(OutOfRange, "{n} exceeds sieve limit {}", sieve.limit());
    }
    if spec.is_complete() {
        return Ok(evaluate(spec, n as i64, sieve)?.powu(r));
    }
    let factors = sieve.factorize(n as usize)?;
    Ok(factors.iter().fold(one, |acc, &(p, k)| acc * spec.prime_power(p, k * r)))
}

/// Sampled values `f(1), ..., f(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionTable {
    values: Vec<Complex64>,
    even: bool,
}

impl FunctionTable {
    pub fn from_values(values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            bail!(InvalidArgument, "function table must be non-empty");
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.norm() <= 1.0 + UNIT_DISC_SLACK)) {
            bail!(InvalidArgument, "value at n = {} has modulus {} > 1", i + 1, v.norm());
        }
        Ok(Self { values, even: false })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values for `n = 1..=N`, slice index `n - 1`.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_even_extended(&self) -> bool {
        self.even
    }

    pub fn with_even_extension(mut self) -> Self {
        self.even = true;
        self
    }

    /// `f(n)` on the table's domain: `1..=N`, or `-N..=N` when even-extended.
    pub fn get(&self, n: i64) -> Option<Complex64> {
        let m = n.unsigned_abs() as usize;
        if n > 0 && m <= self.len() {
            return Some(self.values[m - 1]);
        }
        if self.even {
            if n == 0 {
                return Some(Complex64::new(0.0, 0.0));
            }
            if m <= self.len() {
                return Some(self.values[m - 1]);
            }
        }
        None
    }

    /// The truncation `f_N` embedded in `Z_Ntilde`: `f(n)` at position `n`
    /// for `n` in `[N]`, zero elsewhere.
    pub fn embed(&self, ntilde: usize) -> Result<Vec<Complex64>> {
        if ntilde <= self.len() {
            bail!(InvalidArgument, "modulus {ntilde} must exceed table length {}", self.len());
        }
        let mut out = vec![Complex64::new(0.0, 0.0); ntilde];
        out[1..=self.len()].copy_from_slice(&self.values);
        Ok(out)
    }

    /// CSV with header `n,re,im`; floats in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Internal(format!("csv write failed: {e}"));
        w.write_record(["n", "re", "im"]).map_err(io)?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([(i + 1).to_string(), v.re.to_string(), v.im.to_string()]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Internal(e.to_string()))?;
        Ok(())
    }

    /// Inverse of [`FunctionTable::write_csv`]; rows must list `n = 1, 2, ...`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
        let mut values = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(format!("csv row {}: {e}", i + 1)))?;
            let field = |j: usize| -> Result<&str> {
                rec.get(j).ok_or_else(|| Error::Parse(format!("csv row {}: missing column {j}", i + 1)))
            };
            let n: usize = field(0)?.trim().parse().map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
            if n != i + 1 {
                bail!(Parse, "csv rows must list n = 1, 2, ... in order; row {} has n = {n}", i + 1);
            }
            let re: f64 = field(1)?.trim().parse().map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
            let im: f64 = field(2)?.trim().parse().map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
            values.push(Complex64::new(re, im));
        }
        Self::from_values(values)
    }
}

/// Tabulate `f` on `[N]` in one pass over the sieve.
pub fn tabulate(spec: &MultiplicativeSpec, n: usize, sieve: &FactorSieve) -> Result<FunctionTable> {
    if n == 0 {
        bail!(InvalidArgument, "table length must be positive");
    }
    if n > sieve.limit() {
        bail!(OutOfRange, "N = {n} exceeds sieve limit {}", sieve.limit());
    }
    let values = match spec.kind() {
        SpecKind::Twist { t } => (1..=n).map(|m| Complex64::from_polar(1.0, t * (m as f64).ln())).collect(),
        SpecKind::Character(c) => (1..=n).map(|m| c.value(m as i64)).collect(),
        _ => {
            // f(n) = f(p^k) f(n / p^k) with p = spf(n); `pk[n]` is p^k and
            // `ex[n]` is k.
            let mut vals = vec![Complex64::new(0.0, 0.0); n + 1];
            let mut pk = vec![0u32; n + 1];
            let mut ex = vec![0u8; n + 1];
            vals[1] = Complex64::new(1.0, 0.0);
            for m in 2..=n {
                let p = sieve.spf(m);
                let rest = m / p as usize;
                if rest.is_multiple_of(p as usize) {
                    pk[m] = pk[rest] * p;
                    ex[m] = ex[rest] + 1;
                } else {
                    pk[m] = p;
                    ex[m] = 1;
                }
                let cofactor = m / pk[m] as usize;
                vals[m] = spec.prime_power(p as u64, ex[m] as u32) * vals[cofactor];
            }
            vals.remove(0);
            vals
        }
    };
    FunctionTable::from_values(values)
}

/// Mean of `f(an + b)` over the `n >= 1` with `an + b <= N`.
pub fn progression_mean(table: &FunctionTable, a: u64, b: u64) -> Result<Complex64> {
    if a == 0 {
        bail!(InvalidArgument, "progression step must be positive");
    }
    let n = table.len() as u64;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut count = 0u64;
    let mut x = a + b;
    while x <= n {
        sum += table.values()[(x - 1) as usize];
        count += 1;
        x += a;
    }
    if count == 0 {
        bail!(EmptyDomain, "progression {a}n + {b} misses [1, {n}]");
    }
    Ok(sum / count as f64)
}

/// Partial pretension distance `sum_{p <= P} (1 - Re(f(p) conj(g(p) p^{it}))) / p`.
pub fn pretension_distance_partial(
    f: &MultiplicativeSpec,
    g: &MultiplicativeSpec,
    prime_limit: u64,
    t: f64,
) -> Result<f64> {
    if prime_limit < 2 {
        bail!(InvalidArgument, "prime limit must be at least 2");
    }
    let sieve = FactorSieve::new(prime_limit as usize)?;
    Ok(sieve
        .primes()
        .iter()
        .map(|&p| {
            let p = p as u64;
            let twist = Complex64::from_polar(1.0, t * (p as f64).ln());
            (1.0 - (f.prime_power(p, 1) * (g.prime_power(p, 1) * twist).conj()).re) / p as f64
        })
        .sum())
}
