//! Closed-form asymptotic variances of the unmixing-matrix entries under an
//! identity mixing matrix, and derived quantities.

use nalgebra::DMatrix;

use crate::distributions::{moment_profile, MomentProfile, SourceSpec};
use crate::error::{Error, Result};
use crate::estimators::Method;

/// Elementwise asymptotic variances `ASV(w_kl)` for one method and weight.
#[derive(Debug, Clone, PartialEq)]
pub struct AsvTable {
    pub method: Method,
    pub alpha: f64,
    /// `ASV(w_kk) = (kappa_k + 2) / 4`.
    pub diag: Vec<f64>,
    /// `ASV(w_kl)` for `k != l`; the diagonal is left at zero.
    pub offdiag: DMatrix<f64>,
}

impl AsvTable {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn entry(&self, k: usize, l: usize) -> f64 {
        if k == l {
            self.diag[k]
        } else {
            self.offdiag[(k, l)]
        }
    }

    /// Full `p x p` matrix with the diagonal filled in.
    pub fn matrix(&self) -> DMatrix<f64> {
        let p = self.dim();
        DMatrix::from_fn(p, p, |k, l| self.entry(k, l))
    }

    /// Sum of all entries, the trace of the limiting covariance of
    /// `vec(W)`.
    pub fn total(&self) -> f64 {
        self.matrix().sum()
    }
}

/// The three variance terms entering every off-diagonal formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaTriple {
    pub zeta11: f64,
    pub zeta22: f64,
    pub zeta12: f64,
}

impl ZetaTriple {
    /// Single-component terms used by deflation-based projection pursuit.
    pub fn component(m: &MomentProfile) -> Self {
        let (g, k) = (m.gamma, m.kappa);
        ZetaTriple {
            zeta11: g * g * (m.nu - g * g),
            zeta22: k * k * (m.omega - m.beta * m.beta),
            zeta12: g * k * (m.eta - g * m.beta),
        }
    }

    /// Pairwise terms shared by symmetric projection pursuit and the
    /// all-cumulant estimator.
    pub fn pair(k: &MomentProfile, l: &MomentProfile) -> Self {
        let (a, b) = (Self::component(k), Self::component(l));
        let (gl, kl) = (l.gamma, l.kappa);
        ZetaTriple {
            zeta11: a.zeta11 + b.zeta11 + gl.powi(4),
            zeta22: a.zeta22 + b.zeta22 + kl.powi(4),
            zeta12: a.zeta12 + b.zeta12 + gl * gl * kl * kl,
        }
    }

    /// Pairwise terms of the compound cumulant estimator; `others` are the
    /// profiles of all components except `k` and `l`.
    pub fn compound<'a>(
        k: &MomentProfile,
        l: &MomentProfile,
        others: impl Iterator<Item = &'a MomentProfile>,
    ) -> Self {
        let (mut rest2, mut rest12) = (0.0, 0.0);
        let mut count = 0usize;
        for m in others {
            rest2 += m.beta - 1.0;
            rest12 += m.gamma;
            count += 1;
        }
        ZetaTriple {
            zeta11: (k.nu - k.gamma * k.gamma) + (l.nu - l.gamma * l.gamma) + l.gamma * l.gamma + count as f64,
            zeta22: (k.omega - k.beta * k.beta) + (l.omega - l.beta * l.beta) + l.kappa * l.kappa + rest2,
            zeta12: (k.eta - k.gamma * k.beta) + (l.eta - l.gamma * l.beta) + l.gamma * l.kappa + rest12,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("alpha must lie in [0, 1], got {alpha}")))
    }
}

fn check_profiles(profiles: &[MomentProfile]) -> Result<()> {
    if profiles.len() < 2 {
        return Err(Error::InvalidParams("need at least two components".into()));
    }
    Ok(())
}

fn diag_law(profiles: &[MomentProfile]) -> Vec<f64> {
    profiles.iter().map(|m| (m.kappa + 2.0) / 4.0).collect()
}

/// `numerator / denominator`, failing on a zero denominator.
fn ratio(num: f64, den: f64, k: usize, l: usize) -> Result<f64> {
    if den == 0.0 || !den.is_finite() {
        return Err(Error::ZeroDenominator { k, l });
    }
    Ok(num / den)
}

fn deflation_term(m: &MomentProfile, alpha: f64) -> (f64, f64) {
    let z = ZetaTriple::component(m);
    let b = 1.0 - alpha;
    let num = 9.0 * alpha * alpha * z.zeta11 + 16.0 * b * b * z.zeta22 + 24.0 * alpha * b * z.zeta12;
    let base = 3.0 * alpha * m.gamma * m.gamma + 4.0 * b * m.kappa * m.kappa;
    (num, base * base)
}

/// Deflation-based projection pursuit. `profiles` must be listed in
/// extraction order (see [`deflation_order`]). The last component's
/// denominator never enters the table and may vanish.
pub fn asv_deflation(profiles: &[MomentProfile], alpha: f64) -> Result<AsvTable> {
    check_alpha(alpha)?;
    check_profiles(profiles)?;
    let p = profiles.len();
    let mut stage = Vec::with_capacity(p - 1);
    for (k, m) in profiles[..p - 1].iter().enumerate() {
        let (num, den) = deflation_term(m, alpha);
        stage.push(ratio(num, den, k, k)?);
    }
    let offdiag = DMatrix::from_fn(p, p, |k, l| match k.cmp(&l) {
        std::cmp::Ordering::Less => stage[k],
        std::cmp::Ordering::Greater => stage[l] + 1.0,
        std::cmp::Ordering::Equal => 0.0,
    });
    Ok(AsvTable {
        method: Method::DeflationPP,
        alpha,
        diag: diag_law(profiles),
        offdiag,
    })
}

/// Order in which deflation extracts the components at the population:
/// descending projection index, ties by position.
pub fn deflation_order(profiles: &[MomentProfile], alpha: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..profiles.len()).collect();
    order.sort_by(|&a, &b| {
        profiles[b]
            .index(alpha)
            .total_cmp(&profiles[a].index(alpha))
            .then(a.cmp(&b))
    });
    order
}

fn pairwise(
    profiles: &[MomentProfile],
    alpha: f64,
    method: Method,
    entry: impl Fn(usize, usize) -> Result<f64>,
) -> Result<AsvTable> {
    check_alpha(alpha)?;
    check_profiles(profiles)?;
    let p = profiles.len();
    let mut offdiag = DMatrix::<f64>::zeros(p, p);
    for k in 0..p {
        for l in 0..p {
            if k != l {
                offdiag[(k, l)] = entry(k, l)?;
            }
        }
    }
    Ok(AsvTable {
        method,
        alpha,
        diag: diag_law(profiles),
        offdiag,
    })
}

/// Symmetric projection pursuit.
pub fn asv_symmetric(profiles: &[MomentProfile], alpha: f64) -> Result<AsvTable> {
    let b = 1.0 - alpha;
    pairwise(profiles, alpha, Method::SymmetricPP, |k, l| {
        let (mk, ml) = (&profiles[k], &profiles[l]);
        let z = ZetaTriple::pair(mk, ml);
        let num = 9.0 * alpha * alpha * z.zeta11 + 16.0 * b * b * z.zeta22 + 24.0 * alpha * b * z.zeta12;
        let base = 3.0 * alpha * (mk.gamma.powi(2) + ml.gamma.powi(2))
            + 4.0 * b * (mk.kappa.powi(2) + ml.kappa.powi(2));
        ratio(num, base * base, k, l)
    })
}

/// All-cumulant (JADE-type) estimator.
pub fn asv_allcumulant(profiles: &[MomentProfile], alpha: f64) -> Result<AsvTable> {
    let b = 1.0 - alpha;
    pairwise(profiles, alpha, Method::AllCumulant, |k, l| {
        let (mk, ml) = (&profiles[k], &profiles[l]);
        let z = ZetaTriple::pair(mk, ml);
        let num = alpha * alpha * z.zeta11 + b * b * z.zeta22 + 2.0 * alpha * b * z.zeta12;
        let base =
            alpha * (mk.gamma.powi(2) + ml.gamma.powi(2)) + b * (mk.kappa.powi(2) + ml.kappa.powi(2));
        ratio(num, base * base, k, l)
    })
}

/// Compound cumulant estimator; the dimension is `profiles.len()`.
pub fn asv_compound(profiles: &[MomentProfile], alpha: f64) -> Result<AsvTable> {
    let b = 1.0 - alpha;
    pairwise(profiles, alpha, Method::CompoundCumulant, |k, l| {
        let (mk, ml) = (&profiles[k], &profiles[l]);
        let others = profiles
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != k && m != l)
            .map(|(_, m)| m);
        let z = ZetaTriple::compound(mk, ml, others);
        let d1 = mk.gamma - ml.gamma;
        let d2 = mk.kappa - ml.kappa;
        let num = alpha * alpha * d1 * d1 * z.zeta11
            + b * b * d2 * d2 * z.zeta22
            + 2.0 * alpha * b * d1 * d2 * z.zeta12;
        let base = alpha * d1 * d1 + b * d2 * d2;
        ratio(num, base * base, k, l)
    })
}

/// Lower bound of the FOBI (`alpha = 0` compound) variance of `w_kl`,
/// attained when every other component has `beta_m = 1`.
pub fn fobi_lower_bound(k: &MomentProfile, l: &MomentProfile) -> Result<f64> {
    let num = (k.omega - k.beta * k.beta) + (l.omega - l.beta * l.beta) + l.kappa * l.kappa;
    let d = k.kappa - l.kappa;
    ratio(num, d * d, 0, 1)
}

/// Table for `method` at weight `alpha`; deflation expects extraction order.
pub fn asv_table(method: Method, profiles: &[MomentProfile], alpha: f64) -> Result<AsvTable> {
    match method {
        Method::DeflationPP => asv_deflation(profiles, alpha),
        Method::SymmetricPP => asv_symmetric(profiles, alpha),
        Method::CompoundCumulant => asv_compound(profiles, alpha),
        Method::AllCumulant => asv_allcumulant(profiles, alpha),
    }
}

/// Symmetric projection pursuit weight giving the same asymptotic
/// variances as the all-cumulant estimator with weight `alpha_j`.
pub fn jade_weight_map(alpha_j: f64) -> f64 {
    4.0 * alpha_j / (3.0 + alpha_j)
}

/// `ASV(w_kl) + ASV(w_lk)`.
pub fn offdiag_criterion(table: &AsvTable, k: usize, l: usize) -> Result<f64> {
    let p = table.dim();
    for i in [k, l] {
        if i >= p {
            return Err(Error::IndexOutOfRange { index: i, dim: p });
        }
    }
    if k == l {
        return Err(Error::InvalidParams("criterion needs two distinct components".into()));
    }
    Ok(table.offdiag[(k, l)] + table.offdiag[(l, k)])
}

/// Denominator base below which the cluster objective is treated as a pole.
const POLE_EPS: f64 = 1e-20;

/// Variance of the discriminating direction estimate for a two-group
/// normal mixture with weight `pi` on the group at the origin and the
/// other group at distance `mu`. Returns `+inf` at a pole.
pub fn cluster_objective(alpha: f64, pi: f64, mu: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let m = moment_profile(&SourceSpec::GaussMixture { pi, mu })
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    Ok(cluster_value(&m, alpha))
}

fn cluster_value(m: &MomentProfile, alpha: f64) -> f64 {
    let z = ZetaTriple::component(m);
    let b = 1.0 - alpha;
    let base = 3.0 * alpha * m.gamma * m.gamma + 4.0 * b * m.kappa * m.kappa;
    if base.abs() < POLE_EPS {
        return f64::INFINITY;
    }
    let num = 9.0 * alpha * alpha * z.zeta11 + 16.0 * b * b * z.zeta22 + 24.0 * alpha * b * z.zeta12;
    num / (base * base)
}

/// Relative slack under which two objective values count as tied.
const TIE_RTOL: f64 = 1e-12;

/// Global minimizer of [`cluster_objective`] over `[0, 1]`: dense grid with
/// step `grid_step`, then golden-section search in the bracket around the
/// best grid point. Ties go to the smallest `alpha`.
pub fn optimal_alpha(pi: f64, mu: f64, grid_step: f64) -> Result<(f64, f64)> {
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(Error::InvalidParams(format!(
            "grid step must lie in (0, 0.5], got {grid_step}"
        )));
    }
    let m = moment_profile(&SourceSpec::GaussMixture { pi, mu })
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let f = |a: f64| cluster_value(&m, a);
    let steps = (1.0 / grid_step).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&a| f(a)).collect();
    let fmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !fmin.is_finite() {
        return Err(Error::InvalidParams(format!(
            "objective has no finite value for pi={pi}, mu={mu}"
        )));
    }
    let best = values
        .iter()
        .position(|&v| v <= fmin + TIE_RTOL * fmin.abs())
        .expect("finite minimum exists");

    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(steps)];
    let (a, fa) = golden_section(&f, lo, hi, 1e-8);
    if fa < values[best] - TIE_RTOL * values[best].abs() {
        Ok((a, fa))
    } else {
        Ok((grid[best], values[best]))
    }
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Limiting covariance of the scaled statistics
/// `(q_kl, q_lk, r_kl, r_lk, q_m'kl, r_mkl, s_kl)` for distinct components
/// `k`, `l`, `m` (and `m'`, which shares the profile `m`).
pub fn stat_covariance_table(k: &MomentProfile, l: &MomentProfile, m: &MomentProfile) -> DMatrix<f64> {
    let upper: [[f64; 7]; 7] = [
        [k.omega, k.beta * l.beta, k.eta, k.beta * l.gamma, k.beta, 0.0, k.beta],
        [0.0, l.omega, l.beta * k.gamma, l.eta, l.beta, 0.0, l.beta],
        [0.0, 0.0, k.nu, k.gamma * l.gamma, k.gamma, 0.0, k.gamma],
        [0.0, 0.0, 0.0, l.nu, l.gamma, 0.0, l.gamma],
        [0.0, 0.0, 0.0, 0.0, m.beta, 0.0, 1.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ];
    DMatrix::from_fn(7, 7, |i, j| if i <= j { upper[i][j] } else { upper[j][i] })
}

/// Skewness and excess kurtosis of `u' z` for unit `u` and independent
/// standardized `z` with the given profiles.
pub fn population_projection_cumulants(u: &[f64], profiles: &[MomentProfile]) -> Result<(f64, f64)> {
    if u.len() != profiles.len() {
        return Err(Error::DimensionMismatch {
            expected: profiles.len(),
            found: u.len(),
        });
    }
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnit { norm });
    }
    let gamma = u.iter().zip(profiles).map(|(v, m)| v.powi(3) * m.gamma).sum();
    let kappa = u.iter().zip(profiles).map(|(v, m)| v.powi(4) * m.kappa).sum();
    Ok((gamma, kappa))
}

const ZERO_TOL: f64 = 1e-12;

fn is_zero(x: f64) -> bool {
    x.abs() <= ZERO_TOL
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= ZERO_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Moment assumption each method needs at weight `alpha`:
/// 3 (at most one zero skewness), 4 (at most one zero kurtosis),
/// 5 (distinct skewnesses), 6 (distinct kurtoses), 7 (at most one
/// component with both zero), 8 (no two components sharing both).
pub fn required_assumption(method: Method, alpha: f64) -> u8 {
    let base = match method {
        Method::CompoundCumulant => 5,
        _ => 3,
    };
    if alpha == 1.0 {
        base
    } else if alpha == 0.0 {
        base + 1
    } else if base == 5 {
        8
    } else {
        7
    }
}

/// Whether the profiles satisfy the numbered moment assumption.
pub fn assumption_holds(number: u8, profiles: &[MomentProfile]) -> Result<bool> {
    let zeros = |f: &dyn Fn(&MomentProfile) -> bool| profiles.iter().filter(|m| f(m)).count();
    let pairs_clash = |f: &dyn Fn(&MomentProfile, &MomentProfile) -> bool| {
        (0..profiles.len()).any(|k| ((k + 1)..profiles.len()).any(|l| f(&profiles[k], &profiles[l])))
    };
    Ok(match number {
        3 => zeros(&|m| is_zero(m.gamma)) <= 1,
        4 => zeros(&|m| is_zero(m.kappa)) <= 1,
        5 => !pairs_clash(&|a, b| same(a.gamma, b.gamma)),
        6 => !pairs_clash(&|a, b| same(a.kappa, b.kappa)),
        7 => zeros(&|m| is_zero(m.gamma) && is_zero(m.kappa)) <= 1,
        8 => !pairs_clash(&|a, b| same(a.gamma, b.gamma) && same(a.kappa, b.kappa)),
        other => {
            return Err(Error::InvalidParams(format!(
                "no moment assumption numbered {other}"
            )))
        }
    })
}

/// Fails with `AssumptionViolated` when `method` at `alpha` is not
/// identifiable for these sources.
pub fn check_assumptions(profiles: &[MomentProfile], method: Method, alpha: f64) -> Result<()> {
    check_alpha(alpha)?;
    let n = required_assumption(method, alpha);
    if assumption_holds(n, profiles)? {
        Ok(())
    } else {
        Err(Error::AssumptionViolated(n))
    }
}
