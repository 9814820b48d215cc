//! Unmixing-matrix estimators weighting squared third and fourth cumulants.
//!
//! Every estimator takes `alpha` in `[0, 1]`, the share of weight given to
//! skewness. `alpha = 0` reduces to the classical kurtosis-based methods
//! (deflation/symmetric FastICA with squared kurtosis, FOBI, JADE).

mod cumulant;
mod projection;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::cumulants::{third_fourth, DataMatrix};
use crate::error::{Error, Result};

pub use cumulant::{all_cumulant, compound_cumulant, fobi, Standardizer};
pub use projection::{deflation_pp, symmetric_pp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    DeflationPP,
    SymmetricPP,
    CompoundCumulant,
    AllCumulant,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::DeflationPP,
        Method::SymmetricPP,
        Method::CompoundCumulant,
        Method::AllCumulant,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::DeflationPP => "deflation",
            Method::SymmetricPP => "symmetric",
            Method::CompoundCumulant => "compound",
            Method::AllCumulant => "jade",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deflation" | "deflation-pp" => Ok(Method::DeflationPP),
            "symmetric" | "symmetric-pp" => Ok(Method::SymmetricPP),
            "compound" | "compound-cumulant" | "fobi" => Ok(Method::CompoundCumulant),
            "jade" | "all-cumulant" | "allcumulant" => Ok(Method::AllCumulant),
            other => Err(Error::InvalidParams(format!("unknown method '{other}'"))),
        }
    }
}

/// Fixed-point solver settings shared by all estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Number of starts: the identity, then `restarts - 1` random orthogonal
    /// matrices drawn from `seed`.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            max_iter: 500,
            restarts: 10,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || self.restarts == 0 {
            return Err(Error::InvalidParams(
                "solver options need tol > 0, max_iter >= 1 and restarts >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Non-fatal conditions detected while estimating.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Iteration budget exhausted; the best iterate was returned.
    NoConvergence { stage: Option<usize> },
    /// The best objective is below `1e-3 * p`: the weighted cumulants carry
    /// no signal (e.g. `alpha = 1` with only symmetric sources).
    DegenerateObjective { objective: f64 },
    /// Two components cannot be told apart by the compound cumulant
    /// diagonals within sampling error.
    NearDegenerateSpectrum { components: (usize, usize) },
    /// A restart was abandoned because its `T` matrix lost rank.
    RestartFailed { restart: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::NoConvergence { stage: Some(s) } => write!(f, "NoConvergence stage={s}"),
            Warning::NoConvergence { stage: None } => write!(f, "NoConvergence"),
            Warning::DegenerateObjective { objective } => {
                write!(f, "DegenerateObjective objective={objective}")
            }
            Warning::NearDegenerateSpectrum { components: (k, l) } => {
                write!(f, "NearDegenerateSpectrum components={k},{l}")
            }
            Warning::RestartFailed { restart } => write!(f, "RestartFailed restart={restart}"),
        }
    }
}

/// Estimated unmixing matrix plus diagnostics.
#[derive(Debug, Clone)]
pub struct UnmixingEstimate {
    /// `p x p`; row `k` extracts the `k`th component from centered data.
    pub w: DMatrix<f64>,
    pub method: Method,
    pub alpha: f64,
    /// Iterations (or sweeps) used, one entry per stage. Only the deflation
    /// estimator has more than one stage.
    pub iterations: Vec<usize>,
    pub converged: bool,
    /// Final value of the maximized criterion.
    pub objective: f64,
    /// Starts actually tried.
    pub restarts_used: usize,
    /// Criterion after every accepted iterate of the winning start (for
    /// deflation, concatenated across stages).
    pub objective_trace: Vec<f64>,
    pub warnings: Vec<Warning>,
}

impl UnmixingEstimate {
    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    /// Sources recovered from `x`: `(x - mean) W^T` (any centering works up
    /// to a shift).
    pub fn unmix(&self, x: &DataMatrix) -> DMatrix<f64> {
        x.centered() * self.w.transpose()
    }
}

/// Dispatches on `method` with each estimator's default settings.
pub fn estimate(
    x: &DataMatrix,
    method: Method,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<UnmixingEstimate> {
    match method {
        Method::DeflationPP => deflation_pp(x, alpha, opts),
        Method::SymmetricPP => symmetric_pp(x, alpha, opts),
        Method::CompoundCumulant => {
            compound_cumulant(x, alpha, &Standardizer::default_for(alpha), opts)
        }
        Method::AllCumulant => all_cumulant(x, alpha, opts),
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("alpha must lie in [0, 1], got {alpha}")))
    }
}

pub(crate) fn check_dim(x: &DataMatrix) -> Result<()> {
    if x.dim() < 2 {
        return Err(Error::InvalidData("need at least two variables".into()));
    }
    Ok(())
}

/// Objective below which the weighted cumulants are considered void.
pub(crate) fn degenerate_floor(p: usize) -> f64 {
    1e-3 * p as f64
}

/// Sign-blind per-row change between two row-unit matrices.
pub(crate) fn row_change(new: &DMatrix<f64>, old: &DMatrix<f64>) -> f64 {
    (0..new.nrows())
        .map(|k| {
            let plus = (new.row(k) - old.row(k)).amax();
            let minus = (new.row(k) + old.row(k)).amax();
            plus.min(minus)
        })
        .fold(0.0, f64::max)
}

/// Sorts rows of `w` by descending `alpha gamma^2 + (1 - alpha) kappa^2` of
/// the recovered components and fixes each row's sign: nonnegative sample
/// skewness when `alpha > 0`, otherwise a positive largest-magnitude entry.
pub(crate) fn canonicalize(w: DMatrix<f64>, x: &DataMatrix, alpha: f64) -> DMatrix<f64> {
    let p = w.nrows();
    let y = x.centered() * w.transpose();
    let stats: Vec<(f64, f64)> = (0..p)
        .map(|k| third_fourth(y.column(k).as_slice()))
        .collect();
    let mut order: Vec<usize> = (0..p).collect();
    let index = |k: usize| {
        let (g, kp) = stats[k];
        alpha * g * g + (1.0 - alpha) * kp * kp
    };
    order.sort_by(|&a, &b| index(b).total_cmp(&index(a)).then(a.cmp(&b)));
    let mut out = DMatrix::<f64>::zeros(p, p);
    for (dst, &src) in order.iter().enumerate() {
        let mut row = w.row(src).into_owned();
        let flip = if alpha > 0.0 {
            stats[src].0 < 0.0
        } else {
            let imax = (0..p)
                .max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()).then(b.cmp(&a)))
                .unwrap_or(0);
            row[imax] < 0.0
        };
        if flip {
            row.neg_mut();
        }
        out.set_row(dst, &row);
    }
    out
}

pub(crate) fn unit(v: DVector<f64>) -> Option<DVector<f64>> {
    let n = v.norm();
    if n > 0.0 && n.is_finite() {
        Some(v / n)
    } else {
        None
    }
}
