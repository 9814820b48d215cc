#![allow(dead_code)]

use cumica::{DataMatrix, SourceSpec};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// `E z^r` of the standardized source by quadrature over its density.
pub fn quadrature_moment(spec: &SourceSpec, r: i32) -> f64 {
    use statrs::function::gamma::{gamma, ln_gamma};
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let piecewise = |g: &dyn Fn(f64) -> f64, pts: &[f64]| -> f64 {
        pts.windows(2).map(|w| integrate(g, w[0], w[1], 1e-12)).sum()
    };
    match *spec {
        SourceSpec::Normal => piecewise(&|z| z.powi(r) * phi(z), &[-40.0, -5.0, 0.0, 5.0, 40.0]),
        SourceSpec::Uniform => {
            let h = 3f64.sqrt();
            piecewise(&|z| z.powi(r) * 0.5 / h, &[-h, 0.0, h])
        }
        SourceSpec::Gamma { shape } => {
            let s = shape.sqrt();
            let lg = ln_gamma(shape);
            let top = shape + 120.0 + 20.0 * s;
            if shape < 1.0 {
                // x = u^(1/shape) removes the singularity of x^(shape-1) at 0:
                // x^(shape-1) e^-x dx = e^-x du / shape.
                let g = |u: f64| {
                    let x = u.powf(1.0 / shape);
                    ((x - shape) / s).powi(r) * (-x - lg).exp() / shape
                };
                let ut = top.powf(shape);
                piecewise(&g, &grid(0.0, ut, 256))
            } else {
                let g = |x: f64| {
                    if x <= 0.0 {
                        return 0.0;
                    }
                    ((x - shape) / s).powi(r) * ((shape - 1.0) * x.ln() - x - lg).exp()
                };
                piecewise(&g, &grid(0.0, top, 256))
            }
        }
        SourceSpec::ExpPower { shape } => {
            // Density proportional to exp(-|x|^shape), rescaled to unit
            // variance; odd moments vanish by symmetry.
            if r % 2 == 1 {
                return 0.0;
            }
            let sd = (gamma(3.0 / shape) / gamma(1.0 / shape)).sqrt();
            let c = shape / (2.0 * gamma(1.0 / shape));
            if shape < 1.0 {
                // x = v^(1/shape): dx = v^(1/shape - 1) dv / shape.
                let g = |v: f64| {
                    let x = v.powf(1.0 / shape);
                    2.0 * c * (x / sd).powi(r) * (-v).exp() * v.powf(1.0 / shape - 1.0) / shape
                };
                piecewise(&g, &grid(0.0, 200.0, 256))
            } else {
                let g = |x: f64| 2.0 * c * (x / sd).powi(r) * (-x.powf(shape)).exp();
                piecewise(&g, &grid(0.0, 200f64.powf(1.0 / shape), 256))
            }
        }
        SourceSpec::GaussMixture { pi, mu } => {
            let mean = (1.0 - pi) * mu;
            let sd = (1.0 + pi * (1.0 - pi) * mu * mu).sqrt();
            let g = |x: f64| ((x - mean) / sd).powi(r) * (pi * phi(x) + (1.0 - pi) * phi(x - mu));
            let lo = mu.min(0.0) - 40.0;
            let hi = mu.max(0.0) + 40.0;
            piecewise(&g, &grid(lo, hi, 256))
        }
    }
}

fn grid(a: f64, b: f64, pieces: usize) -> Vec<f64> {
    (0..=pieces).map(|i| a + (b - a) * i as f64 / pieces as f64).collect()
}

/// Independent columns drawn from `specs`.
pub fn independent(specs: &[SourceSpec], n: usize, rng: &mut ChaCha8Rng) -> DataMatrix {
    let cols: Vec<Vec<f64>> = specs
        .iter()
        .map(|s| cumica::distributions::sample_source(s, n, rng).unwrap())
        .collect();
    DataMatrix::new(DMatrix::from_fn(n, specs.len(), |i, j| cols[j][i])).unwrap()
}

pub fn random_matrix(p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Classical FOBI coded directly with nalgebra's eigensolver.
pub fn direct_fobi(x: &DataMatrix) -> DMatrix<f64> {
    let n = x.nobs() as f64;
    let xc = x.centered();
    let cov = xc.transpose() * &xc / n;
    let e = SymmetricEigen::new(cov);
    let g = &e.eigenvectors
        * DMatrix::from_diagonal(&e.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * e.eigenvectors.transpose();
    let xst = &xc * &g;
    let mut b = DMatrix::<f64>::zeros(x.dim(), x.dim());
    for r in 0..xst.nrows() {
        let row = xst.row(r).transpose();
        b += &row * row.transpose() * row.norm_squared();
    }
    b /= n;
    let eb = SymmetricEigen::new(b);
    eb.eigenvectors.transpose() * g
}

/// `max |A - PJ B|` over the signed permutation `PJ` nearest to `A B^-1`;
/// infinite when that matrix is not close to any signed permutation.
pub fn signed_perm_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let m = a * b.clone().try_inverse().expect("invertible");
    let pj = m.map(|v| v.round());
    let is_signed_perm = (0..pj.nrows()).all(|i| pj.row(i).abs().sum() == 1.0)
        && (0..pj.ncols()).all(|j| pj.column(j).abs().sum() == 1.0);
    if !is_signed_perm {
        return f64::INFINITY;
    }
    (a - pj * b).amax()
}
