//! Standardized source families and their exact moment profiles.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, Uniform};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// A standardized (mean 0, variance 1) scalar source distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceSpec {
    /// Gamma with the given shape.
    Gamma { shape: f64 },
    /// Exponential power, density proportional to `exp(-|z|^shape)`.
    ExpPower { shape: f64 },
    /// `pi N(0,1) + (1 - pi) N(mu, 1)`.
    GaussMixture { pi: f64, mu: f64 },
    Normal,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    Uniform,
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SourceSpec::Gamma { shape } | SourceSpec::ExpPower { shape } => {
                shape.is_finite() && shape > 0.0
            }
            SourceSpec::GaussMixture { pi, mu } => {
                pi > 0.0 && pi < 1.0 && mu.is_finite() && mu != 0.0
            }
            SourceSpec::Normal | SourceSpec::Uniform => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(self.to_string()))
        }
    }

    /// Symmetric about zero for every admissible parameter.
    pub fn is_symmetric(&self) -> bool {
        match *self {
            SourceSpec::Gamma { .. } => false,
            SourceSpec::GaussMixture { pi, .. } => pi == 0.5,
            SourceSpec::ExpPower { .. } | SourceSpec::Normal | SourceSpec::Uniform => true,
        }
    }

    /// Analytic mean and standard deviation of the raw (unstandardized) draw.
    fn raw_location_scale(&self) -> (f64, f64) {
        match *self {
            SourceSpec::Gamma { shape } => (shape, shape.sqrt()),
            SourceSpec::ExpPower { shape } => {
                let var = (ln_gamma(3.0 / shape) - ln_gamma(1.0 / shape)).exp();
                (0.0, var.sqrt())
            }
            SourceSpec::GaussMixture { pi, mu } => {
                ((1.0 - pi) * mu, (1.0 + pi * (1.0 - pi) * mu * mu).sqrt())
            }
            SourceSpec::Normal => (0.0, 1.0),
            SourceSpec::Uniform => (0.0, 1.0),
        }
    }
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SourceSpec::Gamma { shape } => write!(f, "gamma:{shape}"),
            SourceSpec::ExpPower { shape } => write!(f, "ep:{shape}"),
            SourceSpec::GaussMixture { pi, mu } => write!(f, "mix:{pi}:{mu}"),
            SourceSpec::Normal => write!(f, "normal"),
            SourceSpec::Uniform => write!(f, "uniform"),
        }
    }
}

impl FromStr for SourceSpec {
    type Err = Error;

    /// Parses `gamma:2.0`, `ep:1.0`, `mix:0.3:5.0`, `normal` or `uniform`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidSpec(s.to_string()))
        };
        let spec = match parts.as_slice() {
            ["gamma", a] => SourceSpec::Gamma { shape: num(a)? },
            ["ep", a] => SourceSpec::ExpPower { shape: num(a)? },
            ["mix", p, m] => SourceSpec::GaussMixture {
                pi: num(p)?,
                mu: num(m)?,
            },
            ["normal"] => SourceSpec::Normal,
            ["uniform"] => SourceSpec::Uniform,
            _ => return Err(Error::InvalidSpec(s.to_string())),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Parses a comma separated list of source specifications.
pub fn parse_sources(s: &str) -> Result<Vec<SourceSpec>> {
    s.split(',').map(str::parse).collect()
}

/// Moments of a standardized source that enter the asymptotic variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentProfile {
    /// `E z^3`
    pub gamma: f64,
    /// `E z^4`
    pub beta: f64,
    /// `beta - 3`
    pub kappa: f64,
    /// `beta - 1`
    pub nu: f64,
    /// `E z^6 - gamma^2`
    pub omega: f64,
    /// `E z^5 - E z^3`
    pub eta: f64,
}

impl MomentProfile {
    /// Builds a profile from the standardized raw moments `E z^3 .. E z^6`.
    pub fn from_moments(m3: f64, m4: f64, m5: f64, m6: f64) -> Self {
        MomentProfile {
            gamma: m3,
            beta: m4,
            kappa: m4 - 3.0,
            nu: m4 - 1.0,
            omega: m6 - m3 * m3,
            eta: m5 - m3,
        }
    }

    pub fn normal() -> Self {
        Self::from_moments(0.0, 3.0, 0.0, 15.0)
    }

    /// `alpha gamma^2 + (1 - alpha) kappa^2`, the projection index value.
    pub fn index(&self, alpha: f64) -> f64 {
        alpha * self.gamma * self.gamma + (1.0 - alpha) * self.kappa * self.kappa
    }
}

/// Exact moment profile of a standardized source.
pub fn moment_profile(spec: &SourceSpec) -> Result<MomentProfile> {
    spec.validate()?;
    let (m3, m4, m5, m6) = match *spec {
        SourceSpec::Normal => return Ok(MomentProfile::normal()),
        SourceSpec::Uniform => (0.0, 9.0 / 5.0, 0.0, 27.0 / 7.0),
        SourceSpec::Gamma { shape } => {
            // Cumulants of Gamma(shape, 1): k_r = shape (r - 1)!.
            let k2 = shape;
            let k3 = 2.0 * shape;
            let k4 = 6.0 * shape;
            let k5 = 24.0 * shape;
            let k6 = 120.0 * shape;
            let c4 = k4 + 3.0 * k2 * k2;
            let c5 = k5 + 10.0 * k3 * k2;
            let c6 = k6 + 15.0 * k4 * k2 + 10.0 * k3 * k3 + 15.0 * k2 * k2 * k2;
            let sd = shape.sqrt();
            (k3 / sd.powi(3), c4 / (k2 * k2), c5 / sd.powi(5), c6 / (k2 * k2 * k2))
        }
        SourceSpec::ExpPower { shape } => {
            // E|z|^r ∝ Γ((r + 1) / shape); odd moments vanish.
            let lg = |r: f64| ln_gamma((r + 1.0) / shape);
            let m4 = (lg(4.0) + lg(0.0) - 2.0 * lg(2.0)).exp();
            let m6 = (lg(6.0) + 2.0 * lg(0.0) - 3.0 * lg(2.0)).exp();
            (0.0, m4, 0.0, m6)
        }
        SourceSpec::GaussMixture { pi, mu } => {
            let mean = (1.0 - pi) * mu;
            let components = [(pi, -mean), (1.0 - pi, mu - mean)];
            let central = |r: u32| -> f64 {
                components
                    .iter()
                    .map(|&(w, shift)| w * shifted_normal_moment(shift, r))
                    .sum()
            };
            let var = central(2);
            let sd = var.sqrt();
            (
                central(3) / sd.powi(3),
                central(4) / (var * var),
                central(5) / sd.powi(5),
                central(6) / (var * var * var),
            )
        }
    };
    let profile = MomentProfile::from_moments(m3, m4, m5, m6);
    let fields = [
        profile.gamma,
        profile.beta,
        profile.omega,
        profile.eta,
    ];
    if fields.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "{spec}: moments up to order six overflow"
        )));
    }
    Ok(profile)
}

/// `E[(a + Z)^r]` for standard normal `Z` by binomial expansion.
fn shifted_normal_moment(a: f64, r: u32) -> f64 {
    const NORMAL_MOMENTS: [f64; 7] = [1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0];
    (0..=r)
        .map(|j| binomial(r, j) * a.powi((r - j) as i32) * NORMAL_MOMENTS[j as usize])
        .sum()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Draws `n` i.i.d. standardized values. The standardization uses the
/// family's exact mean and standard deviation.
pub fn sample_source<R: Rng + ?Sized>(spec: &SourceSpec, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    spec.validate()?;
    let (loc, scale) = spec.raw_location_scale();
    let mut out = Vec::with_capacity(n);
    match *spec {
        SourceSpec::Normal => {
            out.extend((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        }
        SourceSpec::Uniform => {
            let h = 3f64.sqrt();
            let u = Uniform::new(-h, h).map_err(|e| Error::InvalidSpec(e.to_string()))?;
            out.extend((0..n).map(|_| u.sample(rng)));
        }
        SourceSpec::Gamma { shape } => {
            let g = Gamma::new(shape, 1.0).map_err(|e| Error::InvalidSpec(e.to_string()))?;
            out.extend((0..n).map(|_| (g.sample(rng) - loc) / scale));
        }
        SourceSpec::ExpPower { shape } => {
            // |z|^shape ~ Gamma(1 / shape) with an independent random sign.
            let g = Gamma::new(1.0 / shape, 1.0).map_err(|e| Error::InvalidSpec(e.to_string()))?;
            out.extend((0..n).map(|_| {
                let mag = g.sample(rng).powf(1.0 / shape);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * mag / scale
            }));
        }
        SourceSpec::GaussMixture { pi, mu } => {
            out.extend((0..n).map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                let x = if rng.random::<f64>() < pi { z } else { z + mu };
                (x - loc) / scale
            }));
        }
    }
    Ok(out)
}
