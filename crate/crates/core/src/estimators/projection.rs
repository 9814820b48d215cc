//! Deflation-based and symmetric projection pursuit with the index
//! `alpha gamma^2 + (1 - alpha) kappa^2`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    canonicalize, check_alpha, check_dim, degenerate_floor, row_change, unit, Method,
    SolverOptions, UnmixingEstimate, Warning,
};
use crate::cumulants::{standardize, DataMatrix, Standardization, StandardizedSample};
use crate::error::{Error, Result};
use crate::linalg::{polar_orthogonal, random_orthogonal, OrthMatrix};

/// Relative slack when comparing objectives of successive iterates; absorbs
/// rounding at a fixed point.
pub(crate) const MONOTONE_SLACK: f64 = 1e-13;

/// Damping factors tried (times `||T||`) when a plain fixed-point step
/// lowers the objective.
const DAMPING: [f64; 12] = [
    0.25, 1.0, 4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0, 16384.0, 65536.0, 262144.0, 1048576.0,
];

/// Projection index and estimating-equation vectors for each row of `U`.
struct RowStats {
    /// Per-row objective contribution.
    index: Vec<f64>,
    /// `T` with rows `T_k`.
    t: DMatrix<f64>,
}

impl RowStats {
    fn objective(&self) -> f64 {
        self.index.iter().sum()
    }
}

/// `T_k = 3 alpha gamma_k E[y_k^2 x] + 4 (1 - alpha) kappa_k E[y_k^3 x]`
/// with `y_k = u_k' x`, for every row `u_k` of `u`.
fn row_stats(s: &StandardizedSample, u: &DMatrix<f64>, alpha: f64) -> RowStats {
    let n = s.nobs() as f64;
    let y = &s.xst * u.transpose();
    let y2 = y.component_mul(&y);
    let y3 = y2.component_mul(&y);
    let e2 = s.xst.transpose() * &y2 / n;
    let e3 = s.xst.transpose() * &y3 / n;
    let rows = u.nrows();
    let mut index = Vec::with_capacity(rows);
    let mut t = DMatrix::<f64>::zeros(rows, s.dim());
    for k in 0..rows {
        let gamma = y3.column(k).sum() / n;
        let kappa = y2.column(k).norm_squared() / n - 3.0;
        index.push(alpha * gamma * gamma + (1.0 - alpha) * kappa * kappa);
        let tk = e2.column(k) * (3.0 * alpha * gamma) + e3.column(k) * (4.0 * (1.0 - alpha) * kappa);
        t.set_row(k, &tk.transpose());
    }
    RowStats { index, t }
}

fn improves(candidate: f64, current: f64) -> bool {
    candidate >= current - MONOTONE_SLACK * current.abs().max(1e-300)
}

fn prepare(x: &DataMatrix, alpha: f64, opts: &SolverOptions) -> Result<StandardizedSample> {
    check_alpha(alpha)?;
    check_dim(x)?;
    opts.validate()?;
    standardize(x, &Standardization::Symmetric)
}

fn starts(p: usize, opts: &SolverOptions) -> Vec<OrthMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    std::iter::once(OrthMatrix::identity(p))
        .chain((1..opts.restarts).map(|_| random_orthogonal(p, &mut rng)))
        .collect()
}

struct SymmetricRun {
    u: DMatrix<f64>,
    objective: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn symmetric_from(
    s: &StandardizedSample,
    start: &DMatrix<f64>,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<SymmetricRun> {
    let mut u = start.clone();
    let mut stats = row_stats(s, &u, alpha);
    let mut objective = stats.objective();
    let mut trace = vec![objective];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let t_norm = stats.t.norm();
        let mut accepted = None;
        for damping in std::iter::once(0.0).chain(DAMPING.iter().copied()) {
            let target = &stats.t + &u * (damping * t_norm);
            let candidate = polar_orthogonal(&target)?.into_matrix();
            let cstats = row_stats(s, &candidate, alpha);
            if improves(cstats.objective(), objective) {
                accepted = Some((candidate, cstats));
                break;
            }
        }
        let Some((candidate, cstats)) = accepted else {
            // No ascent direction left: stationary point.
            converged = true;
            break;
        };
        let change = row_change(&candidate, &u);
        u = candidate;
        stats = cstats;
        objective = stats.objective();
        trace.push(objective);
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(SymmetricRun {
        u,
        objective,
        iterations,
        converged,
        trace,
    })
}

/// Symmetric projection pursuit: all rows of `U` at once through the
/// fixed-point step `U <- T (T^T T)^{-1/2}`.
pub fn symmetric_pp(x: &DataMatrix, alpha: f64, opts: &SolverOptions) -> Result<UnmixingEstimate> {
    let s = prepare(x, alpha, opts)?;
    let p = s.dim();
    let mut warnings = Vec::new();
    let mut best: Option<SymmetricRun> = None;
    let starts = starts(p, opts);
    for (r, start) in starts.iter().enumerate() {
        match symmetric_from(&s, start.matrix(), alpha, opts) {
            Ok(run) => {
                // Strict comparison keeps the lowest restart index on ties.
                if best.as_ref().is_none_or(|b| run.objective > b.objective) {
                    best = Some(run);
                }
            }
            Err(Error::RankDeficient { .. }) => warnings.push(Warning::RestartFailed { restart: r }),
            Err(e) => return Err(e),
        }
    }
    let best = best.ok_or(Error::AllRestartsFailed {
        restarts: starts.len(),
    })?;
    if !best.converged {
        warnings.push(Warning::NoConvergence { stage: None });
    }
    if best.objective < degenerate_floor(p) {
        warnings.push(Warning::DegenerateObjective {
            objective: best.objective,
        });
    }
    let w = canonicalize(&best.u * &s.whitener, x, alpha);
    Ok(UnmixingEstimate {
        w,
        method: Method::SymmetricPP,
        alpha,
        iterations: vec![best.iterations],
        converged: best.converged,
        objective: best.objective,
        restarts_used: starts.len(),
        objective_trace: best.trace,
        warnings,
    })
}

struct StageRun {
    u: DVector<f64>,
    objective: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn single_index(s: &StandardizedSample, u: &DVector<f64>, alpha: f64) -> (f64, DVector<f64>) {
    let m = DMatrix::from_row_slice(1, u.len(), u.as_slice());
    let st = row_stats(s, &m, alpha);
    (st.index[0], st.t.row(0).transpose())
}

fn deflation_stage(
    s: &StandardizedSample,
    projector: &DMatrix<f64>,
    start: DVector<f64>,
    alpha: f64,
    opts: &SolverOptions,
) -> Option<StageRun> {
    let mut u = unit(projector * start)?;
    let (mut objective, mut t) = single_index(s, &u, alpha);
    let mut trace = vec![objective];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let t_norm = t.norm();
        let mut accepted = None;
        for damping in std::iter::once(0.0).chain(DAMPING.iter().copied()) {
            let Some(candidate) = unit(projector * (&t + &u * (damping * t_norm))) else {
                continue;
            };
            let (cobj, ct) = single_index(s, &candidate, alpha);
            if improves(cobj, objective) {
                accepted = Some((candidate, cobj, ct));
                break;
            }
        }
        let Some((candidate, cobj, ct)) = accepted else {
            converged = true;
            break;
        };
        let change = (&candidate - &u).amax().min((&candidate + &u).amax());
        u = candidate;
        objective = cobj;
        t = ct;
        trace.push(objective);
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    Some(StageRun {
        u,
        objective,
        iterations,
        converged,
        trace,
    })
}

/// Deflation-based projection pursuit: rows found one at a time, each
/// orthogonal to the previous ones.
pub fn deflation_pp(x: &DataMatrix, alpha: f64, opts: &SolverOptions) -> Result<UnmixingEstimate> {
    let s = prepare(x, alpha, opts)?;
    let p = s.dim();
    let starts = starts(p, opts);
    let mut rows: Vec<DVector<f64>> = Vec::with_capacity(p);
    let mut iterations = Vec::with_capacity(p);
    let mut trace = Vec::new();
    let mut objective = 0.0;
    let mut converged = true;
    let mut warnings = Vec::new();

    for stage in 0..p {
        let mut projector = DMatrix::<f64>::identity(p, p);
        for r in &rows {
            projector -= r * r.transpose();
        }
        let mut best: Option<StageRun> = None;
        for start in &starts {
            // Fall back through the start's rows if its own row is already
            // spanned by the found directions.
            let candidates = (0..p).map(|j| start.matrix().row((stage + j) % p).transpose());
            let run = candidates
                .into_iter()
                .find_map(|v| deflation_stage(&s, &projector, v, alpha, opts));
            if let Some(run) = run {
                if best.as_ref().is_none_or(|b| run.objective > b.objective) {
                    best = Some(run);
                }
            }
        }
        let best = best.ok_or(Error::AllRestartsFailed {
            restarts: starts.len(),
        })?;
        if !best.converged {
            converged = false;
            warnings.push(Warning::NoConvergence { stage: Some(stage) });
        }
        objective += best.objective;
        iterations.push(best.iterations);
        trace.extend(best.trace);
        // Re-orthogonalize against rounding drift.
        let u = unit(&projector * best.u).ok_or(Error::RankDeficient {
            min_singular_value: 0.0,
        })?;
        rows.push(u);
    }

    if objective < degenerate_floor(p) {
        warnings.push(Warning::DegenerateObjective { objective });
    }
    let u = DMatrix::from_fn(p, p, |k, j| rows[k][j]);
    let w = canonicalize(&u * &s.whitener, x, alpha);
    Ok(UnmixingEstimate {
        w,
        method: Method::DeflationPP,
        alpha,
        iterations,
        converged,
        objective,
        restarts_used: starts.len(),
        objective_trace: trace,
        warnings,
    })
}
