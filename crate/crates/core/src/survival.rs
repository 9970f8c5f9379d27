//! Catalog of univariate laws on `[0, ∞)` with their tail classification.
//!
//! Every model exposes its survival function `S(x) = Pr(X > x)` with
//! `S(0) = 1`, the density, a quantile function, and a [`TailClass`] saying
//! whether it sits in the Fréchet domain (`S(z) = z^{-a} l(z)`) or in the
//! Weibull subset of the Gumbel domain (`S(z) ~ exp(-z^ξ l(z))`).
//!
//! The survival functions are also available in log form so that
//! ratios `S(x + u) / S(u)` can be taken far into the tail.

use std::f64::consts::{FRAC_2_PI, PI};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{Curve, DecayHint};
use crate::special::{erfc, ln_erfc, ln_gamma, ln_gamma_q};

/// Below this |γ| the GPD is evaluated through its exponential expansion.
pub const SMALL_GAMMA: f64 = 1e-8;

/// Shape γ and scale σ of a Generalized Pareto survival law
/// `S(x) = (1 + γx/σ)^(-1/γ)`, with γ = 0 the exponential law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    gamma: f64,
    sigma: f64,
}

impl GpdParams {
    /// Only γ ≥ 0 is supported (infinite support).
    pub fn new(gamma: f64, sigma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "GPD shape must be finite and >= 0, got {gamma}"
            )));
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "GPD scale must be finite and > 0, got {sigma}"
            )));
        }
        Ok(Self { gamma, sigma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `ln S(x)` for `x >= 0`, no argument checks.
    pub(crate) fn ln_survival_unchecked(&self, x: f64) -> f64 {
        let t = x / self.sigma;
        if self.gamma < SMALL_GAMMA {
            // -ln(1 + γt)/γ = -t + γt²/2 - O(γ²)
            -t + 0.5 * self.gamma * t * t
        } else {
            -(self.gamma * t).ln_1p() / self.gamma
        }
    }

    pub(crate) fn ln_density_unchecked(&self, x: f64) -> f64 {
        let t = x / self.sigma;
        self.ln_survival_unchecked(x) - (self.gamma * t).ln_1p() - self.sigma.ln()
    }

    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        let ln_p = p.ln();
        if self.gamma < SMALL_GAMMA {
            -self.sigma * ln_p * (1.0 - 0.5 * self.gamma * ln_p)
        } else {
            self.sigma / self.gamma * (-self.gamma * ln_p).exp_m1()
        }
    }
}

fn check_nonnegative(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("argument must be >= 0, got {x}")));
    }
    Ok(())
}

fn check_probability(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!(
            "probability must lie in (0, 1], got {p}"
        )));
    }
    Ok(())
}

/// GPD survival `(1 + γx/σ)^(-1/γ)`, or `exp(-x/σ)` at γ = 0.
pub fn gpd_survival(params: &GpdParams, x: f64) -> Result<f64> {
    check_nonnegative(x)?;
    Ok(params.ln_survival_unchecked(x).exp())
}

/// GPD density `(1/σ)(1 + γx/σ)^(-1/γ - 1)`.
pub fn gpd_density(params: &GpdParams, x: f64) -> Result<f64> {
    check_nonnegative(x)?;
    Ok(params.ln_density_unchecked(x).exp())
}

/// Inverse of [`gpd_survival`]: `(σ/γ)(p^{-γ} - 1)`, or `-σ ln p` at γ = 0.
pub fn gpd_quantile(params: &GpdParams, p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(params.quantile_unchecked(p))
}

/// Slowly varying factor `l` of a tail, as an evaluable handle plus its
/// limiting constant as `z → ∞`.
#[derive(Clone)]
pub struct SlowlyVarying {
    handle: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    limit: f64,
}

impl SlowlyVarying {
    pub fn new(handle: impl Fn(f64) -> f64 + Send + Sync + 'static, limit: f64) -> Self {
        Self {
            handle: Arc::new(handle),
            limit,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(move |_| value, value)
    }

    pub fn eval(&self, z: f64) -> f64 {
        (self.handle)(z)
    }

    pub fn limit(&self) -> f64 {
        self.limit
    }
}

impl fmt::Debug for SlowlyVarying {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SlowlyVarying")
            .field("limit", &self.limit)
            .finish_non_exhaustive()
    }
}

/// Extreme-value domain of a model.
#[derive(Debug, Clone)]
pub enum TailClass {
    /// `S(z) = z^{-a} l(z)`.
    Frechet { a: f64, l: SlowlyVarying },
    /// `S(z) ~ exp(-z^ξ l(z))`.
    Weibull { xi: f64, l: SlowlyVarying },
}

impl TailClass {
    pub fn index(&self) -> f64 {
        match self {
            TailClass::Frechet { a, .. } => *a,
            TailClass::Weibull { xi, .. } => *xi,
        }
    }

    pub fn slowly_varying(&self) -> &SlowlyVarying {
        match self {
            TailClass::Frechet { l, .. } | TailClass::Weibull { l, .. } => l,
        }
    }

    pub fn is_frechet(&self) -> bool {
        matches!(self, TailClass::Frechet { .. })
    }
}

/// Parametric family behind a [`SurvivalModel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Gpd(GpdParams),
    /// Pure power law `S(x) = min(1, x^{-a})`.
    Pareto {
        a: f64,
    },
    /// Shifted power law `S(x) = (1 + x)^{-a}`.
    Lomax {
        a: f64,
    },
    /// `f(x) = 2 / (π(1 + x²))`.
    HalfCauchy,
    /// `S(x) = erfc(x / √2)`.
    HalfGaussian,
    /// `S(x) = Γ(a, bx) / Γ(a)`.
    Gamma {
        shape: f64,
        rate: f64,
    },
}

/// A named law on `[0, ∞)`. Immutable once built.
#[derive(Debug, Clone)]
pub struct SurvivalModel {
    kind: ModelKind,
    tail: TailClass,
}

const MODEL_NAMES: [&str; 6] = [
    "gpd",
    "pareto",
    "lomax",
    "half_cauchy",
    "half_gaussian",
    "gamma",
];

fn positive(name: &str, what: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!(
            "{name}: {what} must be finite and > 0, got {v}"
        )))
    }
}

fn expect_params(name: &str, params: &[f64], n: usize) -> Result<()> {
    if params.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{name} takes {n} parameter(s), got {}",
            params.len()
        )));
    }
    Ok(())
}

/// Builds a catalog model by name.
///
/// | name            | parameters          | survival                   |
/// |-----------------|---------------------|----------------------------|
/// | `gpd`           | γ ≥ 0, σ > 0        | `(1 + γx/σ)^(-1/γ)`        |
/// | `pareto`        | a > 0               | `min(1, x^{-a})`           |
/// | `lomax`         | a > 0               | `(1 + x)^{-a}`             |
/// | `half_cauchy`   | none                | `1 - (2/π) atan x`         |
/// | `half_gaussian` | none                | `erfc(x/√2)`               |
/// | `gamma`         | shape a > 0, rate b > 0 | `Γ(a, bx)/Γ(a)`        |
pub fn make_model(name: &str, params: &[f64]) -> Result<SurvivalModel> {
    let kind = match name {
        "gpd" => {
            expect_params(name, params, 2)?;
            ModelKind::Gpd(GpdParams::new(params[0], params[1])?)
        }
        "pareto" => {
            expect_params(name, params, 1)?;
            ModelKind::Pareto {
                a: positive(name, "tail index", params[0])?,
            }
        }
        "lomax" => {
            expect_params(name, params, 1)?;
            ModelKind::Lomax {
                a: positive(name, "tail index", params[0])?,
            }
        }
        "half_cauchy" => {
            expect_params(name, params, 0)?;
            ModelKind::HalfCauchy
        }
        "half_gaussian" => {
            expect_params(name, params, 0)?;
            ModelKind::HalfGaussian
        }
        "gamma" => {
            expect_params(name, params, 2)?;
            ModelKind::Gamma {
                shape: positive(name, "shape", params[0])?,
                rate: positive(name, "rate", params[1])?,
            }
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    Ok(SurvivalModel::from_kind(kind))
}

/// Parses `name[:p1[,p2]]`, e.g. `pareto:3`, `gamma:3,2`, `half_cauchy`.
pub fn parse_model_spec(spec: &str) -> Result<SurvivalModel> {
    let spec = spec.trim();
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), Some(r)),
        None => (spec, None),
    };
    if !MODEL_NAMES.contains(&name) {
        return Err(Error::UnknownModel(name.to_string()));
    }
    let params = match rest {
        None => Vec::new(),
        Some(r) => r
            .split(',')
            .map(|p| {
                p.trim().parse::<f64>().map_err(|e| Error::Parse {
                    spec: spec.to_string(),
                    reason: format!("`{}`: {e}", p.trim()),
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    make_model(name, &params)
}

impl SurvivalModel {
    pub fn from_kind(kind: ModelKind) -> Self {
        let tail = Self::classify(&kind);
        Self { kind, tail }
    }

    fn classify(kind: &ModelKind) -> TailClass {
        match *kind {
            ModelKind::Gpd(p) if p.gamma() < SMALL_GAMMA => TailClass::Weibull {
                xi: 1.0,
                l: SlowlyVarying::constant(1.0 / p.sigma()),
            },
            ModelKind::Gpd(p) => {
                let a = 1.0 / p.gamma();
                let limit = (p.sigma() / p.gamma()).powf(a);
                TailClass::Frechet {
                    a,
                    l: SlowlyVarying::new(
                        move |z| (a * z.ln() + p.ln_survival_unchecked(z)).exp(),
                        limit,
                    ),
                }
            }
            ModelKind::Pareto { a } => TailClass::Frechet {
                a,
                l: SlowlyVarying::new(move |z| if z >= 1.0 { 1.0 } else { z.powf(a) }, 1.0),
            },
            ModelKind::Lomax { a } => TailClass::Frechet {
                a,
                l: SlowlyVarying::new(move |z| (z / (1.0 + z)).powf(a), 1.0),
            },
            ModelKind::HalfCauchy => TailClass::Frechet {
                a: 1.0,
                l: SlowlyVarying::new(|z| z * FRAC_2_PI * 1f64.atan2(z), FRAC_2_PI),
            },
            ModelKind::HalfGaussian => TailClass::Weibull {
                xi: 2.0,
                // S(z) = exp(-z²/2 - ln(√(2π) z)) to leading order
                l: SlowlyVarying::new(|z| 0.5 + ((2.0 * PI).sqrt() * z).ln() / (z * z), 0.5),
            },
            ModelKind::Gamma { shape, rate } => TailClass::Weibull {
                xi: 1.0,
                l: SlowlyVarying::new(move |z| rate - (shape - 1.0) * (rate * z).ln() / z, rate),
            },
        }
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn tail(&self) -> &TailClass {
        &self.tail
    }

    /// Canonical `name:params` identifier.
    pub fn name(&self) -> String {
        self.to_string()
    }

    /// Offset `x0` such that the tail is exactly `(x0 + x)^{-a}` up to a
    /// constant, when such an offset exists. The natural Fréchet scale at
    /// threshold `u` is then `g(u) = u + x0`.
    pub fn frechet_offset(&self) -> Option<f64> {
        match self.kind {
            ModelKind::Gpd(p) if p.gamma() >= SMALL_GAMMA => Some(p.sigma() / p.gamma()),
            ModelKind::Pareto { .. } => Some(0.0),
            ModelKind::Lomax { .. } => Some(1.0),
            _ => None,
        }
    }

    /// `ln S(x)`; `x < 0` maps to 0 (all mass lies on `[0, ∞)`).
    pub fn ln_survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self.kind {
            ModelKind::Gpd(p) => p.ln_survival_unchecked(x),
            ModelKind::Pareto { a } => -a * x.max(1.0).ln(),
            ModelKind::Lomax { a } => -a * x.ln_1p(),
            ModelKind::HalfCauchy => (FRAC_2_PI * 1f64.atan2(x)).ln(),
            ModelKind::HalfGaussian => ln_erfc(x / std::f64::consts::SQRT_2),
            ModelKind::Gamma { shape, rate } => ln_gamma_q(shape, rate * x),
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match self.kind {
            ModelKind::HalfCauchy => FRAC_2_PI * 1f64.atan2(x),
            ModelKind::HalfGaussian => erfc(x / std::f64::consts::SQRT_2),
            _ => self.ln_survival(x).exp(),
        }
    }

    /// `ln f(x)`; `-inf` where the density vanishes.
    pub fn ln_density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        match self.kind {
            ModelKind::Gpd(p) => p.ln_density_unchecked(x),
            ModelKind::Pareto { a } => {
                if x < 1.0 {
                    f64::NEG_INFINITY
                } else {
                    a.ln() - (a + 1.0) * x.ln()
                }
            }
            ModelKind::Lomax { a } => a.ln() - (a + 1.0) * x.ln_1p(),
            ModelKind::HalfCauchy => (FRAC_2_PI / (1.0 + x * x)).ln(),
            ModelKind::HalfGaussian => 0.5 * FRAC_2_PI.ln() - 0.5 * x * x,
            ModelKind::Gamma { shape, rate } => {
                if x == 0.0 {
                    return if shape < 1.0 {
                        f64::INFINITY
                    } else if shape == 1.0 {
                        rate.ln()
                    } else {
                        f64::NEG_INFINITY
                    };
                }
                shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma(shape)
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    /// Smallest `x` with `S(x) <= p`, for `p` in `(0, 1]`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        if p == 1.0 {
            return Ok(0.0);
        }
        let x = match self.kind {
            ModelKind::Gpd(params) => params.quantile_unchecked(p),
            ModelKind::Pareto { a } => (-p.ln() / a).exp(),
            ModelKind::Lomax { a } => (-p.ln() / a).exp_m1(),
            ModelKind::HalfCauchy => 1.0 / (0.5 * PI * p).tan(),
            ModelKind::Gamma { shape: 1.0, rate } => -p.ln() / rate,
            _ => self.solve_quantile(p)?,
        };
        Ok(x)
    }

    /// Safeguarded Newton on `ln S(x) - ln p` inside a bracket.
    fn solve_quantile(&self, p: f64) -> Result<f64> {
        let target = p.ln();
        let g = |x: f64| self.ln_survival(x) - target;
        let mut lo = 0.0;
        let mut hi = 1.0;
        while g(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::Domain(format!("no quantile found for p = {p}")));
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let gx = g(x);
            if gx == 0.0 {
                return Ok(x);
            }
            if gx > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            // d/dx ln S = -f/S
            let slope = -(self.ln_density(x) - self.ln_survival(x)).exp();
            let newton = x - gx / slope;
            let next = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= 1e-15 * x.abs() || hi - lo <= 1e-15 * hi {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }
}

impl fmt::Display for SurvivalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModelKind::Gpd(p) => write!(f, "gpd:{},{}", p.gamma(), p.sigma()),
            ModelKind::Pareto { a } => write!(f, "pareto:{a}"),
            ModelKind::Lomax { a } => write!(f, "lomax:{a}"),
            ModelKind::HalfCauchy => write!(f, "half_cauchy"),
            ModelKind::HalfGaussian => write!(f, "half_gaussian"),
            ModelKind::Gamma { shape, rate } => write!(f, "gamma:{shape},{rate}"),
        }
    }
}

impl Curve for GpdParams {
    fn eval(&self, z: f64) -> f64 {
        self.ln_survival_unchecked(z).exp()
    }

    fn ln_eval(&self, z: f64) -> f64 {
        self.ln_survival_unchecked(z)
    }

    fn decay_hint(&self) -> Option<DecayHint> {
        Some(if self.gamma < SMALL_GAMMA {
            DecayHint::Exponential
        } else {
            DecayHint::Power {
                exponent: 1.0 / self.gamma,
            }
        })
    }
}

impl Curve for SurvivalModel {
    fn eval(&self, z: f64) -> f64 {
        self.survival(z)
    }

    fn ln_eval(&self, z: f64) -> f64 {
        self.ln_survival(z)
    }

    fn decay_hint(&self) -> Option<DecayHint> {
        Some(match self.tail {
            TailClass::Frechet { a, .. } => DecayHint::Power { exponent: a },
            TailClass::Weibull { .. } => DecayHint::Exponential,
        })
    }
}
