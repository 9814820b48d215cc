//! Sample standardization and third/fourth order cumulant statistics.
//!
//! Matrix indices are zero-based throughout. All sample moments divide by
//! `n`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{inv_sqrt_sym, SymMatrix};

/// `n x p` observation matrix, one observation per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::InvalidData("empty data matrix".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("data contains non-finite values".into()));
        }
        Ok(DataMatrix(x))
    }

    /// Builds from row-major observations.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }

    pub fn nobs(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn mean(&self) -> DVector<f64> {
        self.0.row_mean().transpose()
    }

    /// Sample covariance (divisor `n`).
    pub fn covariance(&self) -> SymMatrix {
        let c = self.centered();
        SymMatrix::symmetrized(c.transpose() * &c / self.nobs() as f64)
    }

    pub fn centered(&self) -> DMatrix<f64> {
        let mean = self.0.row_mean();
        let mut c = self.0.clone();
        for mut row in c.row_iter_mut() {
            row -= &mean;
        }
        c
    }

    /// `X A^T + 1 b^T`, i.e. every observation mapped by `x -> A x + b`.
    pub fn affine(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        if a.ncols() != self.dim() || b.len() != a.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: a.ncols(),
            });
        }
        let mut y = &self.0 * a.transpose();
        let bt = b.transpose();
        for mut row in y.row_iter_mut() {
            row += &bt;
        }
        DataMatrix::new(y)
    }
}

/// How the whitening matrix is chosen.
#[derive(Debug, Clone)]
pub enum Standardization {
    /// Symmetric inverse square root of the sample covariance.
    Symmetric,
    /// Caller-supplied full-rank `W0`, corrected so the output is white.
    Custom(DMatrix<f64>),
}

/// Centered and whitened data together with the transform that produced it.
#[derive(Debug, Clone)]
pub struct StandardizedSample {
    /// `n x p`, zero mean and identity sample covariance.
    pub xst: DMatrix<f64>,
    pub mean: DVector<f64>,
    /// `xst[r] = whitener * (x[r] - mean)`.
    pub whitener: DMatrix<f64>,
}

impl StandardizedSample {
    pub fn nobs(&self) -> usize {
        self.xst.nrows()
    }

    pub fn dim(&self) -> usize {
        self.xst.ncols()
    }

    /// Applies an orthogonal (or any square) map to every observation.
    pub fn rotated(&self, v: &DMatrix<f64>) -> StandardizedSample {
        StandardizedSample {
            xst: &self.xst * v.transpose(),
            mean: self.mean.clone(),
            whitener: v * &self.whitener,
        }
    }
}

pub fn standardize(x: &DataMatrix, mode: &Standardization) -> Result<StandardizedSample> {
    let p = x.dim();
    if x.nobs() <= p {
        // Centered data of rank at most n - 1 < p.
        return Err(Error::NotPositiveDefinite { min_eigenvalue: 0.0 });
    }
    let cov = x.covariance();
    let whitener = match mode {
        Standardization::Symmetric => inv_sqrt_sym(&cov)?.into_matrix(),
        Standardization::Custom(w0) => {
            if w0.nrows() != p || w0.ncols() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: w0.nrows(),
                });
            }
            // Rows of an IC whitener are already uncorrelated, in which case
            // this is a row rescaling; otherwise it is the symmetric
            // correction that makes W0 Σ W0ᵀ exactly I.
            let inner = SymMatrix::symmetrized(w0 * cov.matrix() * w0.transpose());
            let g = inv_sqrt_sym(&inner).map_err(|_| Error::SingularCustomWhitener)?;
            g.matrix() * w0
        }
    };
    let xst = x.centered() * whitener.transpose();
    Ok(StandardizedSample {
        xst,
        mean: x.mean(),
        whitener,
    })
}

/// `(mean((u'x)^3), mean((u'x)^4) - 3)` for a unit direction `u`.
pub fn projection_cumulants(s: &StandardizedSample, u: &DVector<f64>) -> Result<(f64, f64)> {
    if u.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: u.len(),
        });
    }
    let norm = u.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnit { norm });
    }
    let y = &s.xst * u;
    Ok(third_fourth(y.as_slice()))
}

/// `(mean(y^3), mean(y^4) - 3)` of an already standardized series.
pub(crate) fn third_fourth(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let (mut m3, mut m4) = (0.0, 0.0);
    for &v in y {
        let v2 = v * v;
        m3 += v2 * v;
        m4 += v2 * v2;
    }
    (m3 / n, m4 / n - 3.0)
}

fn check_index(i: usize, p: usize) -> Result<()> {
    if i >= p {
        Err(Error::IndexOutOfRange { index: i, dim: p })
    } else {
        Ok(())
    }
}

/// `(1/n) sum_r x[r,i] x[r] x[r]^T`.
pub fn cum3_matrix(s: &StandardizedSample, i: usize) -> Result<SymMatrix> {
    let p = s.dim();
    check_index(i, p)?;
    let weighted = weight_rows(&s.xst, |r| s.xst[(r, i)]);
    Ok(SymMatrix::symmetrized(
        weighted.transpose() * &s.xst / s.nobs() as f64,
    ))
}

/// Sample fourth cumulant matrix
/// `E[x_i x_j x x^T] - E(x_i x_j) E(x x^T) - E(x_i x) E(x_j x^T) - E(x_j x) E(x_i x^T)`.
pub fn cum4_matrix(s: &StandardizedSample, i: usize, j: usize) -> Result<SymMatrix> {
    let p = s.dim();
    check_index(i, p)?;
    check_index(j, p)?;
    let n = s.nobs() as f64;
    let second = s.xst.transpose() * &s.xst / n;
    Ok(cum4_with_second(s, i, j, &second))
}

fn cum4_with_second(s: &StandardizedSample, i: usize, j: usize, second: &DMatrix<f64>) -> SymMatrix {
    let n = s.nobs() as f64;
    let weighted = weight_rows(&s.xst, |r| s.xst[(r, i)] * s.xst[(r, j)]);
    let fourth = weighted.transpose() * &s.xst / n;
    let ei = second.column(i);
    let ej = second.column(j);
    let m = fourth - second * second[(i, j)] - ei * ej.transpose() - ej * ei.transpose();
    SymMatrix::symmetrized(m)
}

fn weight_rows(x: &DMatrix<f64>, w: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let mut out = x.clone();
    for (r, mut row) in out.row_iter_mut().enumerate() {
        row *= w(r);
    }
    out
}

/// All `p` third cumulant matrices, in index order.
pub fn all_cum3(s: &StandardizedSample) -> Vec<SymMatrix> {
    (0..s.dim())
        .map(|i| cum3_matrix(s, i).expect("index in range"))
        .collect()
}

/// All `p^2` fourth cumulant matrices, ordered `(0,0), (0,1), ..., (p-1,p-1)`.
pub fn all_cum4(s: &StandardizedSample) -> Vec<SymMatrix> {
    let p = s.dim();
    let second = s.xst.transpose() * &s.xst / s.nobs() as f64;
    let mut out = Vec::with_capacity(p * p);
    for i in 0..p {
        for j in 0..p {
            out.push(cum4_with_second(s, i, j, &second));
        }
    }
    out
}

/// Compound matrices `C3 = sum_i C3i` and `C4 = sum_i C4ii`, accumulated in
/// index order.
pub fn compound_matrices(s: &StandardizedSample) -> (SymMatrix, SymMatrix) {
    let p = s.dim();
    let n = s.nobs() as f64;
    let second = s.xst.transpose() * &s.xst / n;
    let mut c3 = DMatrix::<f64>::zeros(p, p);
    let mut c4 = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        c3 += cum3_matrix(s, i).expect("index in range").matrix();
        c4 += cum4_with_second(s, i, i, &second).matrix();
    }
    (SymMatrix::symmetrized(c3), SymMatrix::symmetrized(c4))
}

/// Sample fourth moment matrix `E[x x^T x x^T] = E[|x|^2 x x^T]` used by FOBI.
pub fn fobi_matrix(s: &StandardizedSample) -> SymMatrix {
    let weighted = weight_rows(&s.xst, |r| s.xst.row(r).norm_squared());
    SymMatrix::symmetrized(weighted.transpose() * &s.xst / s.nobs() as f64)
}
