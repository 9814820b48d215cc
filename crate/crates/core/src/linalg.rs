//! Small dense symmetric linear algebra.
//!
//! Everything here targets the `p <= 50` regime of independent component
//! problems: a cyclic Jacobi eigensolver, symmetric inverse square roots,
//! the orthogonal polar factor and a Jacobi-rotation joint diagonalizer.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative eigenvalue floor below which a symmetric matrix is treated as
/// not positive definite.
pub const PD_EPS: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-12;
const ORTHOGONALITY_TOL: f64 = 1e-10;
const EIGEN_MAX_SWEEPS: usize = 100;

/// Real symmetric `p x p` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Checks squareness and symmetry (relative to the largest entry) and
    /// stores the exactly symmetrized matrix.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite matrix entry".into()));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::InvalidData(format!(
                "matrix is not symmetric (asymmetry {asym:e})"
            )));
        }
        Ok(Self::symmetrized(m))
    }

    /// `(M + M^T) / 2`, no checks.
    pub fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        SymMatrix((m + t) * 0.5)
    }

    pub fn identity(p: usize) -> Self {
        SymMatrix(DMatrix::identity(p, p))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// `U S U^T`.
    pub fn congruence(&self, u: &DMatrix<f64>) -> SymMatrix {
        SymMatrix::symmetrized(u * &self.0 * u.transpose())
    }
}

/// Real orthogonal `p x p` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthMatrix(DMatrix<f64>);

impl OrthMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let p = m.nrows();
        let dev = (m.transpose() * &m - DMatrix::<f64>::identity(p, p)).amax();
        if !(dev <= ORTHOGONALITY_TOL) {
            return Err(Error::InvalidData(format!(
                "matrix is not orthogonal (deviation {dev:e})"
            )));
        }
        Ok(OrthMatrix(m))
    }

    pub fn identity(p: usize) -> Self {
        OrthMatrix(DMatrix::identity(p, p))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in descending order.
    pub values: DVector<f64>,
    /// Eigenvectors as columns, matching `values`. Each column is signed so
    /// that its largest-magnitude entry is positive.
    pub vectors: DMatrix<f64>,
}

/// Cyclic Jacobi eigensolver.
pub fn sym_eigen(s: &SymMatrix) -> SymEigen {
    let n = s.dim();
    let mut a = s.matrix().clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let norm = a.norm();

    for _ in 0..EIGEN_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-17 * norm || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                rotate_cols(&mut a, p, q, c, -sn);
                rotate_rows(&mut a, p, q, c, -sn);
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                rotate_cols(&mut v, p, q, c, -sn);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).into_owned();
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    SymEigen { values, vectors }
}

/// Columns `p`, `q` of `m` replaced by `c*col_p + s*col_q`, `-s*col_p + c*col_q`.
fn rotate_cols(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..m.nrows() {
        let mp = m[(k, p)];
        let mq = m[(k, q)];
        m[(k, p)] = c * mp + s * mq;
        m[(k, q)] = -s * mp + c * mq;
    }
}

/// Rows `p`, `q` of `m` replaced by `c*row_p + s*row_q`, `-s*row_p + c*row_q`.
fn rotate_rows(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..m.ncols() {
        let mp = m[(p, k)];
        let mq = m[(q, k)];
        m[(p, k)] = c * mp + s * mq;
        m[(q, k)] = -s * mp + c * mq;
    }
}

/// Symmetric `G` with `G S G = I`.
pub fn inv_sqrt_sym(s: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eigen(s);
    let n = s.dim();
    let lmax = eig.values[0];
    let lmin = eig.values[n - 1];
    if !(lmax > 0.0) || lmin <= PD_EPS * lmax {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: lmin,
        });
    }
    let d = DMatrix::from_diagonal(&eig.values.map(|l| 1.0 / l.sqrt()));
    let g = &eig.vectors * d * eig.vectors.transpose();
    Ok(SymMatrix::symmetrized(g))
}

/// Orthogonal polar factor `T (T^T T)^{-1/2}`.
pub fn polar_orthogonal(t: &DMatrix<f64>) -> Result<OrthMatrix> {
    if t.nrows() != t.ncols() {
        return Err(Error::DimensionMismatch {
            expected: t.nrows(),
            found: t.ncols(),
        });
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::RankDeficient {
            min_singular_value: f64::NAN,
        });
    }
    let n = t.nrows();
    let gram = SymMatrix::symmetrized(t.transpose() * t);
    let eig = sym_eigen(&gram);
    let smax = eig.values[0].max(0.0).sqrt();
    let smin = eig.values[n - 1].max(0.0).sqrt();
    if !(smax > 0.0) || smin <= 1e-12 * smax {
        return Err(Error::RankDeficient {
            min_singular_value: smin,
        });
    }
    let d = DMatrix::from_diagonal(&eig.values.map(|l| 1.0 / l.sqrt()));
    let u = t * (&eig.vectors * d * eig.vectors.transpose());
    Ok(OrthMatrix(u))
}

/// Haar-distributed random orthogonal matrix (QR of a Gaussian matrix with
/// the signs of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal<R: Rng + ?Sized>(p: usize, rng: &mut R) -> OrthMatrix {
    let g = DMatrix::<f64>::from_fn(p, p, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    OrthMatrix(q)
}

/// Squared Frobenius norm of the diagonal.
pub fn diag_sq(m: &DMatrix<f64>) -> f64 {
    m.diagonal().norm_squared()
}

/// Squared Frobenius norm of the off-diagonal part.
pub fn off_sq(m: &DMatrix<f64>) -> f64 {
    m.norm_squared() - diag_sq(m)
}

/// Outcome of [`joint_diagonalize`].
#[derive(Debug, Clone)]
pub struct JointDiagonalization {
    /// `U` such that every `U C_s U^T` is as diagonal as possible.
    pub rotation: OrthMatrix,
    pub sweeps: usize,
    /// `false` when `max_sweeps` ran out before the rotation angles fell
    /// below `tol`.
    pub converged: bool,
    /// Final `sum_s w_s ||diag(U C_s U^T)||^2`.
    pub objective: f64,
    /// Objective before the first sweep and after every sweep.
    pub objective_history: Vec<f64>,
    /// `sum_s w_s (||diag||^2 + ||off||^2)`, recorded alongside
    /// `objective_history`; constant up to rounding.
    pub mass_history: Vec<f64>,
}

pub const JD_DEFAULT_TOL: f64 = 1e-10;
pub const JD_DEFAULT_MAX_SWEEPS: usize = 100;

/// Weighted joint approximate diagonalization by Jacobi rotations, starting
/// from the identity.
pub fn joint_diagonalize(
    matrices: &[SymMatrix],
    weights: &[f64],
    tol: f64,
    max_sweeps: usize,
) -> Result<JointDiagonalization> {
    let p = matrices.first().map(SymMatrix::dim).unwrap_or(0);
    joint_diagonalize_from(matrices, weights, &OrthMatrix::identity(p), tol, max_sweeps)
}

/// As [`joint_diagonalize`] but starting from `start`.
pub fn joint_diagonalize_from(
    matrices: &[SymMatrix],
    weights: &[f64],
    start: &OrthMatrix,
    tol: f64,
    max_sweeps: usize,
) -> Result<JointDiagonalization> {
    if matrices.is_empty() {
        return Err(Error::InvalidParams("no matrices to diagonalize".into()));
    }
    if matrices.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: matrices.len(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParams("weights must be finite and nonnegative".into()));
    }
    if !weights.iter().any(|w| *w > 0.0) {
        return Err(Error::InvalidParams("at least one weight must be positive".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams("tolerance must be positive".into()));
    }
    let p = matrices[0].dim();
    for m in matrices {
        if m.dim() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: m.dim(),
            });
        }
    }
    if start.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: start.dim(),
        });
    }

    // Rotated copies A_s = V^T C_s V with V = U^T.
    let mut active: Vec<(f64, DMatrix<f64>)> = matrices
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(m, w)| (*w, m.congruence(start.matrix()).into_matrix()))
        .collect();
    let mut v = start.matrix().transpose();

    let objective = |active: &[(f64, DMatrix<f64>)]| -> f64 {
        active.iter().map(|(w, a)| w * diag_sq(a)).sum()
    };
    let mass = |active: &[(f64, DMatrix<f64>)]| -> f64 {
        active.iter().map(|(w, a)| w * a.norm_squared()).sum()
    };

    let mut objective_history = vec![objective(&active)];
    let mut mass_history = vec![mass(&active)];
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < max_sweeps {
        sweeps += 1;
        let mut max_angle: f64 = 0.0;
        for i in 0..p {
            for j in (i + 1)..p {
                let (mut g00, mut g01, mut g11) = (0.0, 0.0, 0.0);
                for (w, a) in &active {
                    let h0 = a[(i, i)] - a[(j, j)];
                    let h1 = a[(i, j)] + a[(j, i)];
                    g00 += w * h0 * h0;
                    g01 += w * h0 * h1;
                    g11 += w * h1 * h1;
                }
                let ton = g00 - g11;
                let toff = 2.0 * g01;
                let r = (ton * ton + toff * toff).sqrt();
                if r == 0.0 {
                    continue;
                }
                let theta = 0.5 * toff.atan2(ton + r);
                max_angle = max_angle.max(theta.abs());
                if theta.abs() <= tol * 1e-3 {
                    continue;
                }
                let (s, c) = theta.sin_cos();
                for (_, a) in active.iter_mut() {
                    rotate_rows(a, i, j, c, s);
                    rotate_cols(a, i, j, c, s);
                }
                rotate_cols(&mut v, i, j, c, s);
            }
        }
        objective_history.push(objective(&active));
        mass_history.push(mass(&active));
        if max_angle < tol {
            converged = true;
            break;
        }
    }

    Ok(JointDiagonalization {
        rotation: OrthMatrix(v.transpose()),
        sweeps,
        converged,
        objective: *objective_history.last().expect("history is never empty"),
        objective_history,
        mass_history,
    })
}

/// Maximum-weight perfect assignment (Hungarian algorithm).
///
/// Returns `assign` with `assign[row] = col`, maximizing
/// `sum_row weights[(row, assign[row])]`.
pub fn max_weight_assignment(weights: &DMatrix<f64>) -> Vec<usize> {
    let n = weights.nrows();
    assert_eq!(n, weights.ncols(), "assignment needs a square weight matrix");
    if n == 0 {
        return Vec::new();
    }
    let wmax = weights.max();
    let cost = |i: usize, j: usize| wmax - weights[(i - 1, j - 1)];

    // 1-indexed potentials formulation; column 0 is a sentinel.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[matched_row[j] - 1] = j - 1;
    }
    assign
}

/// Signed permutation `PJ` minimizing `||PJ W - I||_F`, returned as
/// `(rows, signs)` where row `i` of the aligned matrix is
/// `signs[i] * W[rows[i], :]`.
pub fn align_to_identity(w: &DMatrix<f64>) -> (Vec<usize>, Vec<f64>) {
    let p = w.nrows();
    // Row r placed at position i contributes |W[r, i]| to tr(PJ W).
    let scores = DMatrix::from_fn(p, p, |r, i| w[(r, i)].abs());
    let assign = max_weight_assignment(&scores);
    let mut rows = vec![0usize; p];
    for (r, &i) in assign.iter().enumerate() {
        rows[i] = r;
    }
    let signs = (0..p)
        .map(|i| if w[(rows[i], i)] < 0.0 { -1.0 } else { 1.0 })
        .collect();
    (rows, signs)
}

/// Applies the output of [`align_to_identity`].
pub fn apply_signed_permutation(w: &DMatrix<f64>, rows: &[usize], signs: &[f64]) -> DMatrix<f64> {
    let mut out = DMatrix::<f64>::zeros(w.nrows(), w.ncols());
    for (i, (&r, &s)) in rows.iter().zip(signs).enumerate() {
        out.set_row(i, &(w.row(r) * s));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.amax()
    }

    #[test]
    fn eigen_of_diagonal_is_sorted() {
        let s = SymMatrix::from_diagonal(&[1.0, 5.0, 3.0]);
        let e = sym_eigen(&s);
        assert_eq!(e.values.as_slice(), &[5.0, 3.0, 1.0]);
        assert_eq!(e.vectors[(1, 0)], 1.0);
    }

    #[test]
    fn eigen_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_orthogonal(6, &mut rng);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, -1.0, 2.5, 0.3, 7.0, -3.0]));
        let s = SymMatrix::symmetrized(q.matrix() * d * q.matrix().transpose());
        let e = sym_eigen(&s);
        let back = &e.vectors * DMatrix::from_diagonal(&e.values) * e.vectors.transpose();
        assert!(max_abs(&(back - s.matrix())) < 1e-12);
        assert!((e.values[0] - 7.0).abs() < 1e-12);
        assert!((e.values[5] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn inv_sqrt_identity_and_diagonal() {
        let g = inv_sqrt_sym(&SymMatrix::identity(3)).unwrap();
        assert!(max_abs(&(g.matrix() - DMatrix::identity(3, 3))) < 1e-15);
        let g = inv_sqrt_sym(&SymMatrix::from_diagonal(&[4.0, 1.0])).unwrap();
        assert!((g.matrix()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((g.matrix()[(1, 1)] - 1.0).abs() < 1e-15);
        assert_eq!(g.matrix()[(0, 1)], 0.0);
    }

    #[test]
    fn inv_sqrt_planted_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = random_orthogonal(3, &mut rng);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0, 5.0]));
        let s = SymMatrix::symmetrized(q.matrix() * d * q.matrix().transpose());
        let g = inv_sqrt_sym(&s).unwrap();
        let gsg = g.matrix() * s.matrix() * g.matrix();
        assert!(max_abs(&(gsg - DMatrix::identity(3, 3))) < 1e-10);
        assert!(sym_eigen(&g).values.iter().all(|&l| l > 0.0));
    }

    #[test]
    fn inv_sqrt_rejects_singular() {
        let s = SymMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(matches!(inv_sqrt_sym(&s), Err(Error::NotPositiveDefinite { .. })));
        let s = SymMatrix::from_diagonal(&[1.0, -2.0]);
        assert!(matches!(inv_sqrt_sym(&s), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn polar_basic_cases() {
        let i3 = DMatrix::<f64>::identity(3, 3);
        assert!(max_abs(&(polar_orthogonal(&i3).unwrap().into_matrix() - &i3)) < 1e-15);
        let two = &i3 * 2.0;
        assert!(max_abs(&(polar_orthogonal(&two).unwrap().into_matrix() - &i3)) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_orthogonal(4, &mut rng);
        assert!(max_abs(&(polar_orthogonal(u.matrix()).unwrap().into_matrix() - u.matrix())) < 1e-12);
    }

    #[test]
    fn polar_recovers_planted_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_orthogonal(4, &mut rng);
        let q = random_orthogonal(4, &mut rng);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0, 2.0, 4.0]));
        let spd = q.matrix() * d * q.matrix().transpose();
        let t = u.matrix() * spd;
        let back = polar_orthogonal(&t).unwrap();
        assert!(max_abs(&(back.into_matrix() - u.matrix())) < 1e-10);
    }

    #[test]
    fn polar_rejects_rank_deficient() {
        let t = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(polar_orthogonal(&t), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn jd_single_diagonal_matrix_stays_put() {
        let c = SymMatrix::from_diagonal(&[3.0, 1.0]);
        let jd = joint_diagonalize(&[c], &[1.0], JD_DEFAULT_TOL, JD_DEFAULT_MAX_SWEEPS).unwrap();
        assert!(jd.converged);
        let u = jd.rotation.matrix();
        // identity up to signed permutation
        for r in 0..2 {
            let row_max = u.row(r).amax();
            assert!((row_max - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jd_zero_weight_drops_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let q = random_orthogonal(3, &mut rng);
        let a = SymMatrix::from_diagonal(&[3.0, 1.0, -2.0]).congruence(q.matrix());
        let b = SymMatrix::symmetrized(DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64));
        let alone = joint_diagonalize(&[a.clone()], &[1.0], 1e-12, 100).unwrap();
        let both = joint_diagonalize(&[a, b], &[1.0, 0.0], 1e-12, 100).unwrap();
        assert!(max_abs(&(alone.rotation.matrix() - both.rotation.matrix())) < 1e-15);
    }

    #[test]
    fn jd_rejects_bad_weights() {
        let a = SymMatrix::identity(2);
        assert!(joint_diagonalize(&[a.clone()], &[0.0], 1e-10, 10).is_err());
        assert!(joint_diagonalize(&[a.clone()], &[-1.0], 1e-10, 10).is_err());
        assert!(joint_diagonalize(&[a], &[1.0, 1.0], 1e-10, 10).is_err());
    }

    #[test]
    fn jd_reports_non_convergence_softly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random_orthogonal(5, &mut rng);
        let a = SymMatrix::from_diagonal(&[5.0, 4.0, 3.0, 2.0, 1.0]).congruence(q.matrix());
        let jd = joint_diagonalize(&[a], &[1.0], 1e-14, 1).unwrap();
        assert!(!jd.converged);
        assert_eq!(jd.sweeps, 1);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let w = DMatrix::<f64>::from_fn(4, 4, |_, _| rng.random::<f64>());
            let a = max_weight_assignment(&w);
            let got: f64 = a.iter().enumerate().map(|(r, &c)| w[(r, c)]).sum();
            let mut best = f64::NEG_INFINITY;
            for perm in permutations(4) {
                let s: f64 = perm.iter().enumerate().map(|(r, &c)| w[(r, c)]).sum();
                best = best.max(s);
            }
            assert!((got - best).abs() < 1e-12);
        }
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn alignment_undoes_signed_permutation() {
        let w = DMatrix::from_row_slice(3, 3, &[0.0, -1.1, 0.1, 0.05, 0.0, 0.9, 1.2, 0.0, 0.0]);
        let (rows, signs) = align_to_identity(&w);
        let a = apply_signed_permutation(&w, &rows, &signs);
        assert!(a[(0, 0)] > 1.0 && a[(1, 1)] > 1.0 && a[(2, 2)] > 0.8);
    }
}
