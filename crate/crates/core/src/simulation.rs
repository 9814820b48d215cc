//! Sampling from independent component models, the minimum distance index,
//! Monte Carlo checks of the asymptotic variances and contour grids.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::asymptotics::{asv_table, check_assumptions, deflation_order, offdiag_criterion};
use crate::cumulants::DataMatrix;
use crate::distributions::{moment_profile, parse_sources, sample_source, MomentProfile, SourceSpec};
use crate::error::{Error, Result};
use crate::estimators::{estimate, Method, SolverOptions};
use crate::linalg::{align_to_identity, apply_signed_permutation, max_weight_assignment};

/// Largest accepted condition number of a mixing matrix.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub enum Mixing {
    Identity,
    Given(DMatrix<f64>),
    /// Standard normal entries drawn from the seed (redrawn until
    /// well conditioned).
    RandomFullRank(u64),
}

/// `x = shift + Omega z` with independent standardized `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct IcModelSpec {
    pub sources: Vec<SourceSpec>,
    pub mixing: Mixing,
    pub shift: DVector<f64>,
}

impl IcModelSpec {
    /// Identity mixing, no shift.
    pub fn new(sources: Vec<SourceSpec>) -> Self {
        let p = sources.len();
        IcModelSpec {
            sources,
            mixing: Mixing::Identity,
            shift: DVector::zeros(p),
        }
    }

    pub fn dim(&self) -> usize {
        self.sources.len()
    }

    pub fn profiles(&self) -> Result<Vec<MomentProfile>> {
        self.sources.iter().map(moment_profile).collect()
    }

    /// The mixing matrix `Omega`.
    pub fn mixing_matrix(&self) -> Result<DMatrix<f64>> {
        let p = self.dim();
        let omega = match &self.mixing {
            Mixing::Identity => DMatrix::identity(p, p),
            Mixing::Given(m) => {
                if m.nrows() != p || m.ncols() != p {
                    return Err(Error::InvalidSpec(format!(
                        "mixing matrix is {}x{}, expected {p}x{p}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                m.clone()
            }
            Mixing::RandomFullRank(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                loop {
                    let m = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
                    if condition_number(&m) < MAX_CONDITION {
                        break m;
                    }
                }
            }
        };
        let cond = condition_number(&omega);
        if !(cond < MAX_CONDITION) {
            return Err(Error::InvalidSpec(format!(
                "mixing matrix condition number {cond:e} is too large"
            )));
        }
        Ok(omega)
    }
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Draws `n` observations. Returns `(X, Omega, Z)` with rows
/// `x_i = shift + Omega z_i`.
pub fn generate_ic_sample<R: Rng + ?Sized>(
    spec: &IcModelSpec,
    n: usize,
    rng: &mut R,
) -> Result<(DataMatrix, DMatrix<f64>, DataMatrix)> {
    let p = spec.dim();
    if p == 0 {
        return Err(Error::InvalidSpec("model has no sources".into()));
    }
    if n <= p {
        return Err(Error::InvalidSpec(format!("need n > p, got n={n}, p={p}")));
    }
    if spec.shift.len() != p {
        return Err(Error::InvalidSpec(format!(
            "shift has length {}, expected {p}",
            spec.shift.len()
        )));
    }
    let omega = spec.mixing_matrix()?;
    let mut z = DMatrix::<f64>::zeros(n, p);
    for (j, src) in spec.sources.iter().enumerate() {
        let col = sample_source(src, n, rng)?;
        z.set_column(j, &DVector::from_vec(col));
    }
    let mut x = &z * omega.transpose();
    for mut row in x.row_iter_mut() {
        row += spec.shift.transpose();
    }
    Ok((DataMatrix::new(x)?, omega, DataMatrix::new(z)?))
}

/// Minimum distance index of `W` against the true mixing matrix: 0 exactly
/// when `W Omega` is a scaled signed permutation, at most 1.
pub fn mdi(w: &DMatrix<f64>, omega: &DMatrix<f64>) -> Result<f64> {
    let p = w.nrows();
    if w.ncols() != p || omega.nrows() != p || omega.ncols() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: if w.ncols() != p { w.ncols() } else { omega.nrows() },
        });
    }
    if p < 2 {
        return Err(Error::InvalidParams("index needs p >= 2".into()));
    }
    if !(condition_number(w) < 1e12) || !(condition_number(omega) < 1e12) {
        return Err(Error::SingularInput);
    }
    let g = w * omega;
    let mut gt = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let row_sq = g.row(i).norm_squared();
        for j in 0..p {
            gt[(i, j)] = g[(i, j)] * g[(i, j)] / row_sq;
        }
    }
    let assign = max_weight_assignment(&gt);
    // Sum the unmatched mass directly; `p - matched` cancels badly near 0.
    let unmatched: f64 = assign
        .iter()
        .enumerate()
        .map(|(i, &j)| (0..p).filter(|&c| c != j).map(|c| gt[(i, c)]).sum::<f64>())
        .sum();
    let d = (unmatched / (p as f64 - 1.0)).max(0.0).sqrt();
    Ok(d.min(1.0))
}

/// Entry-wise Monte Carlo variances beside their analytic targets.
#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub method: Method,
    pub alpha: f64,
    pub n: usize,
    pub replications: usize,
    /// Replications that errored or did not converge; excluded below.
    pub failed: usize,
    /// `n` times the unbiased variance of each aligned entry.
    pub n_var: DMatrix<f64>,
    pub asv: DMatrix<f64>,
    pub mdi_mean: f64,
    pub mdi_median: f64,
    pub wall_clock: Duration,
}

pub const MC_CSV_HEADER: &str = "method,alpha,n,reps,k,l,n_var,asv,rel_err";

impl McResult {
    /// `(n_var - asv) / asv`.
    pub fn rel_err(&self, k: usize, l: usize) -> f64 {
        (self.n_var[(k, l)] - self.asv[(k, l)]) / self.asv[(k, l)]
    }

    /// CSV body lines (1-based `k`, `l`), without the header.
    pub fn csv_rows(&self) -> Vec<String> {
        let p = self.n_var.nrows();
        let mut out = Vec::with_capacity(p * p);
        for k in 0..p {
            for l in 0..p {
                out.push(format!(
                    "{},{},{},{},{},{},{},{},{}",
                    self.method,
                    self.alpha,
                    self.n,
                    self.replications - self.failed,
                    k + 1,
                    l + 1,
                    self.n_var[(k, l)],
                    self.asv[(k, l)],
                    self.rel_err(k, l)
                ));
            }
        }
        out
    }
}

/// Analytic variance targets in source order.
pub fn asv_targets(profiles: &[MomentProfile], method: Method, alpha: f64) -> Result<DMatrix<f64>> {
    let p = profiles.len();
    if method == Method::DeflationPP {
        let order = deflation_order(profiles, alpha);
        let ordered: Vec<MomentProfile> = order.iter().map(|&i| profiles[i]).collect();
        let table = asv_table(method, &ordered, alpha)?.matrix();
        let mut pos = vec![0; p];
        for (rank, &src) in order.iter().enumerate() {
            pos[src] = rank;
        }
        Ok(DMatrix::from_fn(p, p, |k, l| table[(pos[k], pos[l])]))
    } else {
        Ok(asv_table(method, profiles, alpha)?.matrix())
    }
}

/// Generator for replication `rep`: the master seed on its own stream.
pub fn replication_rng(master_seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(rep);
    rng
}

/// Runs `replications` independent estimations on samples of size `n` from
/// the model with identity mixing, aligns every estimate to the identity
/// by the closest signed permutation and compares `n Var(w_kl)` with the
/// analytic variances. Results do not depend on the thread count.
pub fn monte_carlo_experiment(
    model: &IcModelSpec,
    method: Method,
    alpha: f64,
    n: usize,
    replications: usize,
    master_seed: u64,
    solver: &SolverOptions,
) -> Result<McResult> {
    if replications < 2 {
        return Err(Error::InvalidParams("need at least two replications".into()));
    }
    let profiles = model.profiles()?;
    check_assumptions(&profiles, method, alpha)?;
    let asv = asv_targets(&profiles, method, alpha)?;
    let p = model.dim();
    let identity_model = IcModelSpec {
        sources: model.sources.clone(),
        mixing: Mixing::Identity,
        shift: DVector::zeros(p),
    };
    let eye = DMatrix::<f64>::identity(p, p);
    let start = Instant::now();

    let runs: Vec<Option<(DMatrix<f64>, f64)>> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(master_seed, rep as u64);
            let (x, _, _) = generate_ic_sample(&identity_model, n, &mut rng).ok()?;
            let est = estimate(&x, method, alpha, solver).ok()?;
            if !est.converged {
                return None;
            }
            let (rows, signs) = align_to_identity(&est.w);
            let aligned = apply_signed_permutation(&est.w, &rows, &signs);
            let d = mdi(&est.w, &eye).ok()?;
            Some((aligned, d))
        })
        .collect();

    let ok: Vec<&(DMatrix<f64>, f64)> = runs.iter().flatten().collect();
    let failed = replications - ok.len();
    if failed * 100 > replications || ok.len() < 2 {
        return Err(Error::TooManyFailures {
            failed,
            total: replications,
        });
    }
    let m = ok.len() as f64;
    let mut mean = DMatrix::<f64>::zeros(p, p);
    for (w, _) in &ok {
        mean += w;
    }
    mean /= m;
    let mut ss = DMatrix::<f64>::zeros(p, p);
    for (w, _) in &ok {
        let d = w - &mean;
        ss += d.component_mul(&d);
    }
    let n_var = ss * (n as f64 / (m - 1.0));

    let mut mdis: Vec<f64> = ok.iter().map(|(_, d)| *d).collect();
    mdis.sort_by(f64::total_cmp);
    let mdi_mean = mdis.iter().sum::<f64>() / m;
    let mid = mdis.len() / 2;
    let mdi_median = if mdis.len() % 2 == 0 {
        0.5 * (mdis[mid - 1] + mdis[mid])
    } else {
        mdis[mid]
    };

    Ok(McResult {
        method,
        alpha,
        n,
        replications,
        failed,
        n_var,
        asv,
        mdi_mean,
        mdi_median,
        wall_clock: start.elapsed(),
    })
}

/// One-parameter source families swept by [`contour_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeFamily {
    Gamma,
    ExpPower,
}

impl ShapeFamily {
    pub fn spec(&self, shape: f64) -> SourceSpec {
        match self {
            ShapeFamily::Gamma => SourceSpec::Gamma { shape },
            ShapeFamily::ExpPower => SourceSpec::ExpPower { shape },
        }
    }
}

impl fmt::Display for ShapeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShapeFamily::Gamma => "gamma",
            ShapeFamily::ExpPower => "ep",
        })
    }
}

impl FromStr for ShapeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(ShapeFamily::Gamma),
            "ep" | "exppower" => Ok(ShapeFamily::ExpPower),
            other => Err(Error::InvalidSpec(format!("unknown family '{other}'"))),
        }
    }
}

/// Shape parameters `from..=to`, evenly spaced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyRange {
    pub family: ShapeFamily,
    pub from: f64,
    pub to: f64,
}

impl FamilyRange {
    pub fn values(&self, steps: usize) -> Vec<f64> {
        if steps == 1 {
            return vec![self.from];
        }
        (0..steps)
            .map(|i| self.from + (self.to - self.from) * i as f64 / (steps - 1) as f64)
            .collect()
    }
}

/// `ASV(w_12) + ASV(w_21)` at `p = 2` over a grid of source pairs; `None`
/// where the sources are not identifiable by the method.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourGrid {
    pub x: FamilyRange,
    pub y: FamilyRange,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `values[i][j]` belongs to `(xs[i], ys[j])`.
    pub values: Vec<Vec<Option<f64>>>,
}

impl ContourGrid {
    pub fn csv_header(&self) -> String {
        format!("{},{},criterion", self.x.family, self.y.family)
    }

    pub fn csv_rows(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.xs.len() * self.ys.len());
        for (i, x) in self.xs.iter().enumerate() {
            for (j, y) in self.ys.iter().enumerate() {
                let v = match self.values[i][j] {
                    Some(v) => v.to_string(),
                    None => "NA".to_string(),
                };
                out.push(format!("{x},{y},{v}"));
            }
        }
        out
    }
}

/// Pair criterion for one cell; deflation uses the population extraction
/// order.
pub fn pair_criterion(a: &SourceSpec, b: &SourceSpec, method: Method, alpha: f64) -> Result<f64> {
    let mut profiles = vec![moment_profile(a)?, moment_profile(b)?];
    if method == Method::DeflationPP {
        let order = deflation_order(&profiles, alpha);
        profiles = order.iter().map(|&i| profiles[i]).collect();
    }
    let table = asv_table(method, &profiles, alpha)?;
    let v = offdiag_criterion(&table, 0, 1)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::ZeroDenominator { k: 0, l: 1 })
    }
}

pub fn contour_grid(
    x: FamilyRange,
    y: FamilyRange,
    method: Method,
    alpha: f64,
    steps: usize,
) -> Result<ContourGrid> {
    if steps == 0 {
        return Err(Error::InvalidParams("steps must be positive".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParams(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let xs = x.values(steps);
    let ys = y.values(steps);
    let values = xs
        .iter()
        .map(|&a| {
            ys.iter()
                .map(|&b| pair_criterion(&x.family.spec(a), &y.family.spec(b), method, alpha).ok())
                .collect()
        })
        .collect();
    Ok(ContourGrid { x, y, xs, ys, values })
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::InvalidParams(format!("line {}: expected key = value", lineno + 1))
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// A Monte Carlo experiment read from a key-value file. Recognized keys:
/// `sources`, `method`, `alpha`, `n`, `reps`, `seed`, `restarts`, `tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sources: Vec<SourceSpec>,
    pub method: Method,
    pub alpha: f64,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl ExperimentConfig {
    pub fn from_key_values(kv: &BTreeMap<String, String>) -> Result<Self> {
        fn get<T: FromStr>(kv: &BTreeMap<String, String>, key: &str, default: Option<T>) -> Result<T> {
            match kv.get(key) {
                Some(v) => v
                    .parse()
                    .map_err(|_| Error::InvalidParams(format!("bad value for {key}: '{v}'"))),
                None => default.ok_or_else(|| Error::InvalidParams(format!("missing key '{key}'"))),
            }
        }
        for key in kv.keys() {
            if !["sources", "method", "alpha", "n", "reps", "seed", "restarts", "tol"].contains(&key.as_str()) {
                return Err(Error::InvalidParams(format!("unknown key '{key}'")));
            }
        }
        let sources = parse_sources(
            kv.get("sources")
                .ok_or_else(|| Error::InvalidParams("missing key 'sources'".into()))?,
        )?;
        let method: Method = kv
            .get("method")
            .map(|s| s.parse())
            .transpose()?
            .unwrap_or(Method::SymmetricPP);
        let defaults = SolverOptions {
            restarts: 1,
            ..SolverOptions::default()
        };
        Ok(ExperimentConfig {
            sources,
            method,
            alpha: get(kv, "alpha", Some(0.8))?,
            n: get(kv, "n", Some(10_000))?,
            reps: get(kv, "reps", Some(100))?,
            seed: get(kv, "seed", Some(0))?,
            solver: SolverOptions {
                restarts: get(kv, "restarts", Some(defaults.restarts))?,
                tol: get(kv, "tol", Some(defaults.tol))?,
                ..defaults
            },
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_key_values(&parse_key_values(text)?)
    }
}
