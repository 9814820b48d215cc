//! Estimators built on third and fourth cumulant matrices: the compound
//! (eigendecomposition) family containing FOBI and the all-cumulant family
//! containing JADE.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    canonicalize, check_alpha, check_dim, degenerate_floor, symmetric_pp, Method, SolverOptions,
    UnmixingEstimate, Warning,
};
use crate::cumulants::{
    all_cum3, all_cum4, compound_matrices, fobi_matrix, standardize, third_fourth, DataMatrix,
    Standardization,
};
use crate::error::{Error, Result};
use crate::linalg::{
    diag_sq, joint_diagonalize_from, random_orthogonal, sym_eigen, JointDiagonalization,
    OrthMatrix, SymMatrix,
};

/// The IC functional used to pre-standardize data for [`compound_cumulant`].
#[derive(Debug, Clone, PartialEq)]
pub enum Standardizer {
    /// Symmetric projection pursuit with the given weight.
    SymmetricPP(f64),
    /// Classical FOBI.
    Fobi,
    /// A fixed full-rank matrix applied to centered data.
    Custom(DMatrix<f64>),
}

impl Standardizer {
    /// FOBI for `alpha = 0`, symmetric projection pursuit with the same
    /// weight otherwise.
    pub fn default_for(alpha: f64) -> Self {
        if alpha == 0.0 {
            Standardizer::Fobi
        } else {
            Standardizer::SymmetricPP(alpha)
        }
    }

    fn matrix(&self, x: &DataMatrix, opts: &SolverOptions) -> Result<DMatrix<f64>> {
        match self {
            Standardizer::SymmetricPP(a) => Ok(symmetric_pp(x, *a, opts)?.w),
            Standardizer::Fobi => fobi(x),
            Standardizer::Custom(w0) => {
                if w0.nrows() != x.dim() || w0.ncols() != x.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: x.dim(),
                        found: w0.nrows().max(w0.ncols()),
                    });
                }
                Ok(w0.clone())
            }
        }
    }
}

/// Classical FOBI unmixing matrix: eigenvectors of `E[|x_st|^2 x_st x_st^T]`
/// (as rows, by descending eigenvalue) times the symmetric whitener.
pub fn fobi(x: &DataMatrix) -> Result<DMatrix<f64>> {
    check_dim(x)?;
    let s = standardize(x, &Standardization::Symmetric)?;
    let eig = sym_eigen(&fobi_matrix(&s));
    Ok(eig.vectors.transpose() * &s.whitener)
}

/// Rows of `w0` flipped so that each recovered component has nonnegative
/// sample skewness. `C3` only transforms by congruence under orthogonal maps
/// when sign flips are excluded this way.
fn skew_signed(mut w0: DMatrix<f64>, x: &DataMatrix) -> DMatrix<f64> {
    let y = x.centered() * w0.transpose();
    for k in 0..w0.nrows() {
        if third_fourth(y.column(k).as_slice()).0 < 0.0 {
            w0.row_mut(k).neg_mut();
        }
    }
    w0
}

/// Compound cumulant estimator: diagonalizes `alpha`-weighted `C3` and `C4`
/// of data standardized by `standardizer`.
pub fn compound_cumulant(
    x: &DataMatrix,
    alpha: f64,
    standardizer: &Standardizer,
    opts: &SolverOptions,
) -> Result<UnmixingEstimate> {
    check_alpha(alpha)?;
    check_dim(x)?;
    opts.validate()?;
    let w0 = skew_signed(standardizer.matrix(x, opts)?, x);
    let s = standardize(x, &Standardization::Custom(w0))?;
    let (c3, c4) = compound_matrices(&s);

    let (u, iterations, converged) = if alpha == 1.0 {
        (sym_eigen(&c3).vectors.transpose(), 1, true)
    } else if alpha == 0.0 {
        (sym_eigen(&c4).vectors.transpose(), 1, true)
    } else {
        let jd = joint_diagonalize_from(
            &[c3.clone(), c4.clone()],
            &[alpha, 1.0 - alpha],
            &OrthMatrix::identity(s.dim()),
            opts.tol,
            opts.max_iter,
        )?;
        (jd.rotation.into_matrix(), jd.sweeps, jd.converged)
    };
    let objective =
        alpha * diag_sq(c3.congruence(&u).matrix()) + (1.0 - alpha) * diag_sq(c4.congruence(&u).matrix());

    let w = canonicalize(&u * &s.whitener, x, alpha);
    let mut warnings = Vec::new();
    if !converged {
        warnings.push(Warning::NoConvergence { stage: None });
    }
    warnings.extend(spectrum_warnings(&w, x, alpha));
    Ok(UnmixingEstimate {
        w,
        method: Method::CompoundCumulant,
        alpha,
        iterations: vec![iterations],
        converged,
        objective,
        restarts_used: 1,
        objective_trace: vec![objective],
        warnings,
    })
}

/// Pairs of recovered components whose compound-cumulant diagonal entries
/// are within ten standard errors of each other (in every statistic that
/// carries weight).
/// Diagonal gaps smaller than this many standard errors of the difference
/// count as indistinguishable.
const GAP_SE: f64 = 2.0;

fn spectrum_warnings(w: &DMatrix<f64>, x: &DataMatrix, alpha: f64) -> Vec<Warning> {
    let y = x.centered() * w.transpose();
    let (n, p) = (y.nrows(), y.ncols());
    let nf = n as f64;
    // Per-observation contributions to diag(C3) and diag(C4).
    let stats = |k: usize| {
        let (mut s3, mut q3, mut s4, mut q4) = (0.0, 0.0, 0.0, 0.0);
        for r in 0..n {
            let row = y.row(r);
            let yk2 = row[k] * row[k];
            let a = row.sum() * yk2;
            let b = row.norm_squared() * yk2;
            s3 += a;
            q3 += a * a;
            s4 += b;
            q4 += b * b;
        }
        let (m3, m4) = (s3 / nf, s4 / nf);
        let se3 = ((q3 / nf - m3 * m3).max(0.0) / nf).sqrt();
        let se4 = ((q4 / nf - m4 * m4).max(0.0) / nf).sqrt();
        (m3, se3, m4, se4)
    };
    let st: Vec<_> = (0..p).map(stats).collect();
    let mut out = Vec::new();
    for k in 0..p {
        for l in (k + 1)..p {
            let close = |d: f64, a: f64, b: f64| d.abs() < GAP_SE * (a * a + b * b).sqrt();
            let near3 = close(st[k].0 - st[l].0, st[k].1, st[l].1);
            let near4 = close(st[k].2 - st[l].2, st[k].3, st[l].3);
            let degenerate = if alpha == 1.0 {
                near3
            } else if alpha == 0.0 {
                near4
            } else {
                near3 && near4
            };
            if degenerate {
                out.push(Warning::NearDegenerateSpectrum { components: (k, l) });
            }
        }
    }
    out
}

/// All-cumulant estimator: joint diagonalization of every `C3i` (weight
/// `alpha`) and every `C4ij` (weight `1 - alpha`). `alpha = 0` is JADE.
pub fn all_cumulant(x: &DataMatrix, alpha: f64, opts: &SolverOptions) -> Result<UnmixingEstimate> {
    check_alpha(alpha)?;
    check_dim(x)?;
    opts.validate()?;
    let s = standardize(x, &Standardization::Symmetric)?;
    let p = s.dim();
    let mut matrices: Vec<SymMatrix> = all_cum3(&s);
    let mut weights = vec![alpha; p];
    matrices.extend(all_cum4(&s));
    weights.resize(p + p * p, 1.0 - alpha);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<JointDiagonalization> = None;
    for r in 0..opts.restarts {
        let start = if r == 0 {
            OrthMatrix::identity(p)
        } else {
            random_orthogonal(p, &mut rng)
        };
        let jd = joint_diagonalize_from(&matrices, &weights, &start, opts.tol, opts.max_iter)?;
        if best.as_ref().is_none_or(|b| jd.objective > b.objective) {
            best = Some(jd);
        }
    }
    let best = best.expect("at least one restart");

    let mut warnings = Vec::new();
    if !best.converged {
        warnings.push(Warning::NoConvergence { stage: None });
    }
    if best.objective < degenerate_floor(p) {
        warnings.push(Warning::DegenerateObjective {
            objective: best.objective,
        });
    }
    let w = canonicalize(best.rotation.matrix() * &s.whitener, x, alpha);
    Ok(UnmixingEstimate {
        w,
        method: Method::AllCumulant,
        alpha,
        iterations: vec![best.sweeps],
        converged: best.converged,
        objective: best.objective,
        restarts_used: opts.restarts,
        objective_trace: best.objective_history,
        warnings,
    })
}
