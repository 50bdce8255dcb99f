// SPDX-License-Identifier: Apache-2.0

//! Command-line front end. Every subcommand is also expressible as a JSON
//! experiment config (`hofa run --config file.json`); both routes go through
//! [`ExperimentConfig`] and produce the same bytes.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::arith::{tabulate, FactorSieve, FunctionTable, MultiplicativeSpec};
use crate::correlations::{chowla_average, LinearFormSet, QuadraticForm2, Region};
use crate::error::{bail, Error, Result};
use crate::gowers::{gowers_norm_cyclic, gowers_norm_interval};
use crate::katai::{katai_zd_sums, pair_correlations, tk_statistics};
use crate::nil::{
    daboussi_check, equidistribution_diagnostic, max_torus_distance, orbit_closed_form, orbit_iterated,
    standard_family, FamilyMember, HeisenbergElement, HorizontalCharacter,
};
use crate::parreg::{folner_set, mult_density, parametrize, search_monochromatic, DensitySet, Partition, QuadraticForm3};
use crate::primes::next_prime_above;
use crate::quadfield::{build_p, enumerate_ball, prime_elements, units, QuadInt};
use crate::structure::{conditional_u2_certificate, decompose, structured_kernel, three_term_decompose, KernelParams};

pub const SCHEMA: &str = "hofa/1";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "hofa", version, about = "Higher-order Fourier analysis of multiplicative functions")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: TopLevel,
}

#[derive(Debug, Subcommand)]
pub enum TopLevel {
    /// Run a JSON experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    #[command(flatten)]
    Experiment(Command),
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    /// Gowers uniformity norm of a function on [N].
    Gowers(GowersArgs),
    /// Structured/uniform split with an explicit kernel.
    Decompose(DecomposeArgs),
    /// Kátai pair correlations.
    Katai(KataiArgs),
    /// Turán–Kubilius statistics and Kátai sums over Z[tau_d].
    KataiZd(KataiZdArgs),
    /// Quadratic-ring enumerations.
    Quadfield(QuadfieldArgs),
    /// Chowla-type averages over planar regions.
    Chowla(ChowlaArgs),
    /// Partition regularity of ternary quadratic equations.
    Parreg {
        #[command(subcommand)]
        op: ParregOp,
    },
    /// Multiplicative density over Følner sets.
    Density(DensityArgs),
    /// Heisenberg orbits and Daboussi sums.
    Nil {
        #[command(subcommand)]
        op: NilOp,
    },
    /// Export f(1..N) as CSV (n,re,im).
    Table(TableArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GowersArgs {
    /// Function spec, e.g. `liouville`, `chi:5:1` or `@file` with key=value lines.
    #[arg(long, required_unless_present = "random")]
    pub spec: Option<String>,
    /// Seeded random signal on the unit disc instead of a spec.
    #[arg(long, conflicts_with = "spec")]
    #[serde(default)]
    pub random: bool,
    #[arg(long = "N")]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    #[serde(default = "default_s")]
    pub s: u32,
    /// Norm on [N] through an embedding in Z_Nstar (default).
    #[arg(long, conflicts_with = "cyclic")]
    #[serde(default)]
    pub interval: bool,
    /// Norm of the values placed on Z_N.
    #[arg(long)]
    #[serde(default)]
    pub cyclic: bool,
    #[arg(long)]
    pub nstar: Option<usize>,
}

fn default_s() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub spec: String,
    #[arg(long = "N")]
    pub n: usize,
    #[arg(long = "Q")]
    pub q: u64,
    #[arg(long = "W")]
    pub w: u64,
    /// Also run the conditional U^2 certificate at this theta.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, requires_all = ["q2", "w2"])]
    #[serde(default)]
    pub three_term: bool,
    #[arg(long = "Q2")]
    pub q2: Option<u64>,
    #[arg(long = "W2")]
    pub w2: Option<u64>,
    /// Prime modulus; defaults to the least prime above max(2N, 2W, 2W2, Q).
    #[arg(long)]
    pub ntilde: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KataiArgs {
    /// CSV table (n,re,im) or a function spec.
    #[arg(long)]
    pub input: String,
    #[arg(long = "K")]
    pub k: u64,
    #[arg(long = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KataiZdArgs {
    #[arg(long)]
    pub d: u32,
    #[arg(long)]
    pub norm_limit: u64,
    #[arg(long = "P-norm-limit")]
    #[serde(rename = "p_norm_limit")]
    pub p_norm_limit: u64,
    /// g in f(z) = g(N(z)^r); defaults to liouville.
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "default_r")]
    pub r: u32,
}

fn default_r() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadfieldArgs {
    #[arg(long)]
    pub d: u32,
    #[command(subcommand)]
    pub op: QuadOp,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum QuadOp {
    /// Canonical prime elements up to a norm limit.
    Primes {
        #[arg(long)]
        limit: u64,
    },
    /// The unit group.
    Units,
    /// Lattice points of the norm ball B_N.
    Ball {
        #[arg(long = "N")]
        n: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChowlaArgs {
    #[arg(long)]
    pub spec: String,
    #[arg(long)]
    pub d: u32,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "default_r")]
    pub r: u32,
    /// Linear forms as `k1,l1;k2,l2`.
    #[arg(long, default_value = "")]
    #[serde(default)]
    pub forms: String,
    #[arg(long = "N")]
    pub n: u64,
    /// `square`, `ball` or `rect:m0,m1,n0,n1`.
    #[arg(long, default_value = "square")]
    #[serde(default = "default_region")]
    pub region: String,
    /// Unimodular change of variables `a,b,c,d`.
    #[arg(long, default_value = "1,0,0,1")]
    #[serde(default = "default_change")]
    pub change: String,
}

fn default_region() -> String {
    "square".into()
}

fn default_change() -> String {
    "1,0,0,1".into()
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ParregOp {
    /// Discriminants and eligibility.
    Eligible {
        #[arg(long)]
        form: String,
    },
    /// Verified parametric family.
    Parametrize {
        #[arg(long)]
        form: String,
    },
    /// Monochromatic solutions up to a bound.
    Search {
        #[arg(long)]
        form: String,
        #[arg(long)]
        bound: u64,
        /// `trivial` or `7adic`.
        #[arg(long, default_value = "trivial")]
        #[serde(default = "default_partition")]
        partition: String,
    },
    /// Same as the top-level density command.
    Density(DensityArgs),
}

fn default_partition() -> String {
    "trivial".into()
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityArgs {
    /// `all`, `odd`, `even`, `mult:K` or `coprime:K`.
    #[arg(long)]
    pub set: String,
    #[arg(long = "M")]
    pub m: u32,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum NilOp {
    /// Orbit of a^n e_X in the Heisenberg nilmanifold.
    Orbit {
        /// `x,y,z`
        #[arg(long)]
        a: String,
        #[arg(long = "N")]
        n: usize,
        /// Add the total-equidistribution diagnostic.
        #[arg(long)]
        #[serde(default)]
        diag: bool,
        #[arg(long, default_value_t = 10)]
        #[serde(default = "default_budget")]
        budget: usize,
    },
    /// max over a family of |E f(n) Phi(a^n e_X)|.
    Daboussi {
        #[arg(long)]
        a: String,
        /// `std` or comma-separated short specs.
        #[arg(long, default_value = "std")]
        #[serde(default = "default_family")]
        family: String,
        #[arg(long = "N")]
        n: usize,
        /// Horizontal character frequencies `k1,k2`.
        #[arg(long, default_value = "1,1")]
        #[serde(default = "default_k")]
        k: String,
    },
}

fn default_budget() -> usize {
    10
}

fn default_family() -> String {
    "std".into()
}

fn default_k() -> String {
    "1,1".into()
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableArgs {
    #[arg(long)]
    pub spec: String,
    #[arg(long = "N")]
    pub n: usize,
}

/// A command plus everything needed to reproduce its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    /// Sweep over these N, replacing the command's own N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<u64>>,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// SHA-256 of the canonical JSON form, output path excluded.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let bytes = serde_json::to_vec(&c).expect("config serialises");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Tabular rendering of a result for `--format csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub json: Value,
    pub csv: Option<CsvTable>,
}

impl Outcome {
    fn json(json: Value) -> Self {
        Self { json, csv: None }
    }
}

/// Round to 12 significant digits, printed in shortest round-trip form.
pub fn round12(x: f64) -> f64 {
    if x.is_finite() && x != 0.0 {
        format!("{x:.11e}").parse().expect("formatted float parses")
    } else {
        x
    }
}

fn fmt12(x: f64) -> String {
    round12(x).to_string()
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round12(x))) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("result serialises")
}

fn parse_spec(text: &str) -> Result<MultiplicativeSpec> {
    match text.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read spec file {path}: {e}")))?
            .parse(),
        None => text.parse(),
    }
}

fn parse_floats<const K: usize>(text: &str, what: &str) -> Result<[f64; K]> {
    let v: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{what} '{text}': {e}"))))
        .collect::<Result<_>>()?;
    v.try_into().map_err(|_| Error::Parse(format!("{what} '{text}' needs {K} comma-separated numbers")))
}

fn parse_ints(text: &str, what: &str) -> Result<Vec<i64>> {
    text.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| Error::Parse(format!("{what} '{text}': {e}"))))
        .collect()
}

fn parse_region(text: &str) -> Result<Region> {
    match text {
        "square" => Ok(Region::Square),
        "ball" => Ok(Region::Ball),
        _ => match text.strip_prefix("rect:") {
            Some(rest) => match parse_ints(rest, "rectangle")?[..] {
                [m0, m1, n0, n1] => Ok(Region::Rectangle { m0, m1, n0, n1 }),
                _ => Err(Error::Parse(format!("rectangle '{text}' needs m0,m1,n0,n1"))),
            },
            None => Err(Error::Parse(format!("unknown region '{text}' (square, ball or rect:m0,m1,n0,n1)"))),
        },
    }
}

fn table_for(spec: &MultiplicativeSpec, n: usize) -> Result<FunctionTable> {
    let sieve = FactorSieve::new(n.max(2))?;
    tabulate(spec, n, &sieve)
}

fn complex_pair(z: Complex64) -> Value {
    json!([z.re, z.im])
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Gowers(_) => "gowers",
            Self::Decompose(_) => "decompose",
            Self::Katai(_) => "katai",
            Self::KataiZd(_) => "katai-zd",
            Self::Quadfield(_) => "quadfield",
            Self::Chowla(_) => "chowla",
            Self::Parreg { .. } => "parreg",
            Self::Density(_) => "density",
            Self::Nil { .. } => "nil",
            Self::Table(_) => "table",
        }
    }

    /// The same command at another size.
    pub fn with_size(&self, size: u64) -> Result<Self> {
        let us = usize::try_from(size).map_err(|_| Error::InvalidArgument(format!("size {size} too large")))?;
        let mut c = self.clone();
        match &mut c {
            Self::Gowers(a) => a.n = us,
            Self::Decompose(a) => a.n = us,
            Self::Katai(a) => a.n = us,
            Self::Chowla(a) => a.n = size,
            Self::Table(a) => a.n = us,
            Self::Nil { op: NilOp::Orbit { n, .. } | NilOp::Daboussi { n, .. } } => *n = us,
            Self::KataiZd(a) => a.norm_limit = size,
            Self::Quadfield(QuadfieldArgs { op: QuadOp::Ball { n }, .. }) => *n = size,
            Self::Parreg { op: ParregOp::Search { bound, .. } } => *bound = size,
            Self::Density(a) | Self::Parreg { op: ParregOp::Density(a) } => {
                a.m = u32::try_from(size).map_err(|_| Error::InvalidArgument("M too large".into()))?
            }
            other => bail!(InvalidArgument, "command '{}' has no size parameter to sweep", other.name()),
        }
        Ok(c)
    }

    pub fn execute(&self, seed: u64) -> Result<Outcome> {
        match self {
            Self::Gowers(a) => run_gowers(a, seed),
            Self::Decompose(a) => run_decompose(a),
            Self::Katai(a) => run_katai(a),
            Self::KataiZd(a) => run_katai_zd(a),
            Self::Quadfield(a) => run_quadfield(a),
            Self::Chowla(a) => run_chowla(a),
            Self::Parreg { op } => run_parreg(op),
            Self::Density(a) => run_density(a),
            Self::Nil { op } => run_nil(op),
            Self::Table(a) => run_table(a),
        }
    }
}

fn run_gowers(a: &GowersArgs, seed: u64) -> Result<Outcome> {
    if a.n == 0 {
        bail!(InvalidArgument, "N must be positive");
    }
    let (label, values) = match (&a.spec, a.random) {
        (_, true) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ("random".to_string(), crate::fourier::random_disc_signal(a.n, &mut rng))
        }
        (Some(s), false) => {
            let spec = parse_spec(s)?;
            (spec.label(), table_for(&spec, a.n)?.values().to_vec())
        }
        (None, false) => bail!(InvalidArgument, "need --spec or --random"),
    };
    let (mode, norm) = if a.cyclic {
        // f(n) sits at n mod N
        let mut cyc = values.clone();
        cyc.rotate_right(1);
        ("cyclic", gowers_norm_cyclic(&cyc, a.s)?)
    } else {
        ("interval", gowers_norm_interval(&values, a.s, a.nstar)?)
    };
    Ok(Outcome::json(json!({ "norm": norm, "s": a.s, "N": a.n, "mode": mode, "function": label })))
}

/// A prime above `q` is automatically coprime to it.
fn default_modulus(lower: u64, q: u64) -> usize {
    next_prime_above(lower.max(q)) as usize
}

fn run_decompose(a: &DecomposeArgs) -> Result<Outcome> {
    let spec = parse_spec(&a.spec)?;
    if a.n == 0 {
        bail!(InvalidArgument, "N must be positive");
    }
    let table = table_for(&spec, a.n)?;
    let widest = a.w.max(a.w2.unwrap_or(0));
    let ntilde = a.ntilde.unwrap_or_else(|| default_modulus((2 * a.n as u64).max(2 * widest), a.q.max(a.q2.unwrap_or(1))));
    let psi1 = structured_kernel(&KernelParams::new(ntilde, a.q, a.w)?)?;
    let decomp = if a.three_term {
        let (q2, w2) = match (a.q2, a.w2) {
            (Some(q2), Some(w2)) => (q2, w2),
            _ => bail!(InvalidArgument, "--three-term needs --Q2 and --W2"),
        };
        let psi2 = structured_kernel(&KernelParams::new(ntilde, q2, w2)?)?;
        three_term_decompose(&table, &psi1, &psi2)?
    } else {
        decompose(&table, &psi1)?
    };
    let r = &decomp.report;
    let mut out = json!({
        "function": spec.label(),
        "N": a.n,
        "Ntilde": ntilde,
        "Q": a.q,
        "W": a.w,
        "spectrumSize": r.spectrum_size,
        "deficitR": r.almost_period_deficit,
        "deficitBound": r.deficit_bound,
        "spectrumContained": r.spectrum_contained,
        "u2Uniform": r.u2_uniform,
        "u2Total": r.u2_total,
        "maxAbsStructured": r.max_abs_structured,
        "maxAbsUniform": r.max_abs_uniform,
        "maxAbsError": r.max_abs_error,
        "reconstructionError": r.reconstruction_error,
    });
    if let Some(theta) = a.theta {
        out["certificate"] = to_value(&conditional_u2_certificate(&decomp, theta)?);
    }
    Ok(Outcome::json(out))
}

fn run_katai(a: &KataiArgs) -> Result<Outcome> {
    let path = Path::new(&a.input);
    let (label, values) = if path.is_file() {
        let file = std::fs::File::open(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", a.input)))?;
        let table = FunctionTable::read_csv(file)?;
        if table.len() < a.n {
            bail!(InsufficientRange, "table {} has {} values, N = {}", a.input, table.len(), a.n);
        }
        (a.input.clone(), table.values()[..a.n].to_vec())
    } else {
        let spec = parse_spec(&a.input)?;
        (spec.label(), table_for(&spec, a.n)?.values().to_vec())
    };
    let report = pair_correlations(&values, a.k)?;
    let rows = report
        .entries
        .iter()
        .map(|e| vec![e.p.to_string(), e.q.to_string(), fmt12(e.value)])
        .collect();
    let mut json = to_value(&report);
    json["input"] = Value::from(label);
    json["N"] = Value::from(a.n);
    Ok(Outcome { json, csv: Some(CsvTable { header: vec!["p".into(), "q".into(), "value".into()], rows }) })
}

fn run_katai_zd(a: &KataiZdArgs) -> Result<Outcome> {
    let g = match &a.spec {
        Some(s) => parse_spec(s)?,
        None => MultiplicativeSpec::liouville(),
    };
    let p = build_p(a.d, &[], a.p_norm_limit)?;
    if p.is_empty() {
        bail!(InvalidArgument, "no unramified prime elements of norm <= {}", a.p_norm_limit);
    }
    let tk = tk_statistics(a.d, &p, a.norm_limit)?;
    let sums = katai_zd_sums(&g, a.r, |_: &QuadInt| Complex64::new(1.0, 0.0), a.d, &p, a.norm_limit)?;
    Ok(Outcome::json(json!({
        "d": a.d,
        "function": g.label(),
        "r": a.r,
        "primeCount": p.len(),
        "A": tk.a,
        "meanDeviation": tk.mean_deviation,
        "count": tk.count,
        "S": complex_pair(sums.s),
        "Ch": sums.c_h,
        "Cf": sums.c_f,
        "boundShape": sums.bound_shape,
    })))
}

fn run_quadfield(a: &QuadfieldArgs) -> Result<Outcome> {
    match &a.op {
        QuadOp::Primes { limit } => {
            let primes = prime_elements(a.d, *limit)?;
            let rows = primes
                .iter()
                .map(|e| vec![e.z.m.to_string(), e.z.n.to_string(), e.norm.to_string(), e.ramified.to_string()])
                .collect();
            let json = json!({ "d": a.d, "limit": limit, "primes": primes.iter().map(|e| json!({
                "m": e.z.m, "n": e.z.n, "norm": e.norm, "ramified": e.ramified
            })).collect::<Vec<_>>() });
            let header = ["m", "n", "norm", "ramified"].map(String::from).to_vec();
            Ok(Outcome { json, csv: Some(CsvTable { header, rows }) })
        }
        QuadOp::Units => {
            let u = units(a.d)?;
            let rows = u.iter().map(|z| vec![z.m.to_string(), z.n.to_string()]).collect();
            let json = json!({ "d": a.d, "units": u.iter().map(|z| json!([z.m, z.n])).collect::<Vec<_>>() });
            Ok(Outcome { json, csv: Some(CsvTable { header: vec!["m".into(), "n".into()], rows }) })
        }
        QuadOp::Ball { n } => {
            let ball = enumerate_ball(*n, a.d)?;
            let rows = ball.points.iter().map(|(m, k)| vec![m.to_string(), k.to_string()]).collect();
            let json = json!({ "d": a.d, "N": n, "count": ball.points.len(), "Rd": ball.r_d, "sandwichHolds": ball.sandwich_holds });
            Ok(Outcome { json, csv: Some(CsvTable { header: vec!["m".into(), "n".into()], rows }) })
        }
    }
}

fn run_chowla(a: &ChowlaArgs) -> Result<Outcome> {
    let spec = parse_spec(&a.spec)?;
    let forms = LinearFormSet::parse(&a.forms)?;
    let change = match parse_ints(&a.change, "change")?[..] {
        [p, q, r, s] => [[p, q], [r, s]],
        _ => bail!(Parse, "change '{}' needs four integers", a.change),
    };
    let q = QuadraticForm2::new(a.d, change)?;
    let region = parse_region(&a.region)?;
    let res = chowla_average(&spec, &q, a.r, &forms, a.n, region)?;
    Ok(Outcome::json(json!({
        "function": spec.label(),
        "d": a.d,
        "r": a.r,
        "N": a.n,
        "region": a.region,
        "avgRe": res.average.re,
        "avgIm": res.average.im,
        "count": res.count,
    })))
}

fn run_parreg(op: &ParregOp) -> Result<Outcome> {
    match op {
        ParregOp::Eligible { form } => {
            let f: QuadraticForm3 = form.parse()?;
            let (d1, d2, d3) = f.discriminants();
            Ok(Outcome::json(json!({
                "form": f.to_string(),
                "discriminants": [d1.to_string(), d2.to_string(), d3.to_string()],
                "eligible": f.is_eligible(),
            })))
        }
        ParregOp::Parametrize { form } => {
            let f: QuadraticForm3 = form.parse()?;
            let fam = parametrize(&f)?;
            let check = fam.verify(4)?;
            Ok(Outcome::json(json!({
                "form": f.to_string(),
                "ell": fam.ell,
                "signY": fam.sign_y,
                "lambda": fam.lambda,
                "admissible": fam.is_admissible(),
                "verifiedRadius": check.radius,
                "verified": check.holds,
            })))
        }
        ParregOp::Search { form, bound, partition } => {
            let f: QuadraticForm3 = form.parse()?;
            let part: Partition = partition.parse()?;
            let hits = search_monochromatic(|n| part.cell(n), &f, *bound)?;
            let rows = hits
                .iter()
                .map(|h| vec![h.x.to_string(), h.y.to_string(), h.lambda.to_string(), h.cell.to_string()])
                .collect();
            let json = json!({
                "form": f.to_string(),
                "bound": bound,
                "partition": partition,
                "count": hits.len(),
                "solutions": hits.iter().map(|h| json!([h.x, h.y, h.lambda.to_string(), h.cell])).collect::<Vec<_>>(),
            });
            let header = ["x", "y", "lambda", "cell"].map(String::from).to_vec();
            Ok(Outcome { json, csv: Some(CsvTable { header, rows }) })
        }
        ParregOp::Density(a) => run_density(a),
    }
}

fn run_density(a: &DensityArgs) -> Result<Outcome> {
    let set: DensitySet = a.set.parse()?;
    let density = mult_density(|n| set.contains(n), a.m)?;
    let size = u64::from(a.m + 1).checked_pow(a.m);
    let mut out = json!({ "set": a.set, "M": a.m, "size": size, "density": density });
    if a.m <= 3 {
        out["elements"] = to_value(&folner_set(a.m)?.iter().map(|v| v.to_string()).collect::<Vec<_>>());
    }
    Ok(Outcome::json(out))
}

fn run_nil(op: &NilOp) -> Result<Outcome> {
    match op {
        NilOp::Orbit { a, n, diag, budget } => {
            let [x, y, z] = parse_floats::<3>(a, "element")?;
            let g = HeisenbergElement::new(x, y, z);
            let closed = orbit_closed_form(&g, *n)?;
            let iterated = orbit_iterated(&g, *n)?;
            let mut out = json!({
                "a": [x, y, z],
                "N": n,
                "routeAgreement": max_torus_distance(&closed, &iterated),
                "last": closed.last().expect("N >= 1"),
            });
            if *diag {
                let w = equidistribution_diagnostic(&closed, &HorizontalCharacter::defaults(2, 5), *budget)?;
                out["diagnostic"] = to_value(&w);
            }
            let rows = closed
                .iter()
                .enumerate()
                .map(|(i, p)| vec![(i + 1).to_string(), fmt12(p[0]), fmt12(p[1]), fmt12(p[2])])
                .collect();
            let header = ["n", "x", "y", "z"].map(String::from).to_vec();
            Ok(Outcome { json: out, csv: Some(CsvTable { header, rows }) })
        }
        NilOp::Daboussi { a, family, n, k } => {
            let [x, y, z] = parse_floats::<3>(a, "element")?;
            let g = HeisenbergElement::new(x, y, z);
            let members = if family == "std" {
                standard_family()
            } else {
                family.split(',').map(|s| parse_spec(s.trim()).map(FamilyMember::Plain)).collect::<Result<_>>()?
            };
            let test = HorizontalCharacter::new(parse_ints(k, "character")?);
            let report = daboussi_check(&g, &test, &members, *n)?;
            let rows = report.entries.iter().map(|e| vec![e.member.clone(), fmt12(e.value)]).collect();
            let json = json!({ "a": [x, y, z], "k": test.k, "N": n, "entries": to_value(&report.entries), "max": report.max });
            Ok(Outcome { json, csv: Some(CsvTable { header: vec!["member".into(), "value".into()], rows }) })
        }
    }
}

fn run_table(a: &TableArgs) -> Result<Outcome> {
    let spec = parse_spec(&a.spec)?;
    let t = table_for(&spec, a.n)?;
    // full precision, so an exported table reads back bit for bit
    let rows = t
        .values()
        .iter()
        .enumerate()
        .map(|(i, z)| vec![(i + 1).to_string(), format!("{:?}", z.re), format!("{:?}", z.im)])
        .collect();
    let json = json!({ "function": spec.label(), "N": a.n, "values": t.values().iter().map(|z| complex_pair(*z)).collect::<Vec<_>>() });
    Ok(Outcome { json, csv: Some(CsvTable { header: vec!["n".into(), "re".into(), "im".into()], rows }) })
}

fn flatten_json(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(o) => {
            for (k, x) in o {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_json(&key, x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten_json(&format!("{prefix}.{i}"), x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render(config: &ExperimentConfig, results: Vec<(Option<u64>, Outcome)>) -> String {
    let digest = config.digest();
    let version = env!("CARGO_PKG_VERSION");
    match config.format {
        Format::Json => {
            let mut result = match &config.sizes {
                None => results.into_iter().next().expect("one result").1.json,
                Some(_) => Value::Array(
                    results.into_iter().map(|(size, o)| json!({ "size": size, "result": o.json })).collect(),
                ),
            };
            round_value(&mut result);
            let mut top = Map::new();
            top.insert("schema".into(), SCHEMA.into());
            top.insert("version".into(), version.into());
            top.insert("configSha256".into(), digest.into());
            top.insert("seed".into(), config.seed.into());
            top.insert("command".into(), config.command.name().into());
            top.insert("result".into(), result);
            let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("json renders");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = format!(
                "# schema={SCHEMA} version={version} configSha256={digest} seed={} command={}\n",
                config.seed,
                config.command.name()
            );
            let sweep = config.sizes.is_some();
            let mut header_done = false;
            for (size, o) in results {
                let table = o.csv.unwrap_or_else(|| {
                    let mut json = o.json;
                    round_value(&mut json);
                    let mut kv = Vec::new();
                    flatten_json("", &json, &mut kv);
                    CsvTable { header: vec!["key".into(), "value".into()], rows: kv.into_iter().map(|(k, v)| vec![k, v]).collect() }
                });
                if !header_done {
                    let mut h = table.header.clone();
                    if sweep {
                        h.insert(0, "size".into());
                    }
                    s.push_str(&h.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(","));
                    s.push('\n');
                    header_done = true;
                }
                for row in table.rows {
                    let mut r = row;
                    if sweep {
                        r.insert(0, size.map(|v| v.to_string()).unwrap_or_default());
                    }
                    s.push_str(&r.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(","));
                    s.push('\n');
                }
            }
            s
        }
    }
}

/// Execute a config and return the rendered output.
pub fn run_config(config: &ExperimentConfig) -> Result<String> {
    let results = match &config.sizes {
        None => vec![(None, config.command.execute(config.seed)?)],
        Some(sizes) => {
            if sizes.is_empty() {
                bail!(InvalidArgument, "sizes must be non-empty when given");
            }
            sizes
                .iter()
                .map(|&s| Ok((Some(s), config.command.with_size(s)?.execute(config.seed)?)))
                .collect::<Result<_>>()?
        }
    };
    Ok(render(config, results))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))
}

fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        2
    } else {
        1
    }
}

/// Parse arguments, run, write the output; returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = write!(sink, "{text}");
            return code;
        }
    };
    let config = match cli.command {
        TopLevel::Run { config } => match load_config(&config) {
            Ok(mut c) => {
                if cli.output.is_some() {
                    c.output = cli.output;
                }
                c
            }
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                return exit_code(&e);
            }
        },
        TopLevel::Experiment(command) => {
            ExperimentConfig { command, seed: cli.seed, sizes: None, format: cli.format, output: cli.output }
        }
    };
    match run_config(&config) {
        Ok(text) => {
            let written = match &config.output {
                Some(path) => std::fs::write(path, text.as_bytes()),
                None => stdout.write_all(text.as_bytes()),
            };
            match written {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(stderr, "error: cannot write output: {e}");
                    1
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
