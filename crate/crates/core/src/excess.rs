//! Peaks over threshold.
//!
//! The excess `X_u = X - u | X > u` has survival `S(z + u) / S(u)`. Two
//! normalizations make it converge to a fixed limit as `u → ∞`:
//!
//! - Fréchet domain, `S(z) = z^{-a} l(z)`: divide by `g(u) ~ u`; the limit
//!   is `(1 + z)^{-a}`.
//! - Weibull subset, `S(z) ~ exp(-z^ξ l(z))`: multiply by
//!   `c(u) = u^{ξ-1} l(u)`; the limit is `exp(-ξ z)`.
//!
//! Both limits are maximum entropy solutions: `q = 1 - 1/a`, `α = β = 1` in
//! the Fréchet case and `q = 1`, `α = 1`, `β = ξ` in the Weibull case.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::functionals::{Curve, DecayHint};
use crate::maxent::MaxEntSolution;
use crate::survival::{GpdParams, SurvivalModel, TailClass};

/// Scaling applied to the excess variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    None,
    /// `Y = X_u / g(u)`. `None` picks the model's natural `g(u) = u + x0`
    /// (`x0 = 0` unless the tail is exactly `(x0 + x)^{-a}`).
    FrechetScale {
        g: Option<f64>,
    },
    /// `Y = u^{ξ-1} l(u) X_u`, with `l` evaluated at the threshold.
    WeibullScale,
}

impl Normalization {
    /// The normalization matching a model's tail class.
    pub fn for_tail(tail: &TailClass) -> Self {
        match tail {
            TailClass::Frechet { .. } => Normalization::FrechetScale { g: None },
            TailClass::Weibull { .. } => Normalization::WeibullScale,
        }
    }
}

/// A thresholded, optionally normalized model.
#[derive(Debug, Clone)]
pub struct ExcessSpec {
    base: SurvivalModel,
    u: f64,
    normalization: Normalization,
    /// Excess units per unit of the normalized variable.
    scale: f64,
    ln_survival_u: f64,
}

impl ExcessSpec {
    pub fn new(base: SurvivalModel, u: f64, normalization: Normalization) -> Result<Self> {
        if !(u.is_finite() && u > 0.0) {
            return Err(Error::Domain(format!(
                "threshold must be finite and > 0, got {u}"
            )));
        }
        let ln_survival_u = base.ln_survival(u);
        if !ln_survival_u.is_finite() {
            return Err(Error::Domain(format!(
                "threshold {u} lies outside the support of {base}"
            )));
        }
        let scale = match (normalization, base.tail()) {
            (Normalization::None, _) => 1.0,
            (Normalization::FrechetScale { g }, TailClass::Frechet { .. }) => {
                let g = g.unwrap_or_else(|| u + base.frechet_offset().unwrap_or(0.0));
                if !(g.is_finite() && g > 0.0) {
                    return Err(Error::Domain(format!("scale g(u) must be > 0, got {g}")));
                }
                g
            }
            (Normalization::WeibullScale, TailClass::Weibull { xi, l }) => {
                let c = u.powf(xi - 1.0) * l.eval(u);
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::Domain(format!(
                        "multiplier u^(xi-1) l(u) must be > 0 at u = {u}, got {c}"
                    )));
                }
                1.0 / c
            }
            (n, _) => {
                return Err(Error::Domain(format!(
                    "normalization {n:?} does not match the tail class of {base}"
                )))
            }
        };
        Ok(Self {
            base,
            u,
            normalization,
            scale,
            ln_survival_u,
        })
    }

    /// Thresholded model with the normalization of its tail class.
    pub fn normalized(base: SurvivalModel, u: f64) -> Result<Self> {
        let n = Normalization::for_tail(base.tail());
        Self::new(base, u, n)
    }

    pub fn base(&self) -> &SurvivalModel {
        &self.base
    }

    pub fn threshold(&self) -> f64 {
        self.u
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Factor mapping the normalized variable back to excess units:
    /// `X_u = scale · Y`.
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// `z ↦ S(u + scale·z) / S(u)`.
#[derive(Debug, Clone)]
pub struct ExcessCurve {
    spec: ExcessSpec,
}

impl ExcessCurve {
    pub fn spec(&self) -> &ExcessSpec {
        &self.spec
    }
}

impl Curve for ExcessCurve {
    fn eval(&self, z: f64) -> f64 {
        self.ln_eval(z).exp()
    }

    fn ln_eval(&self, z: f64) -> f64 {
        let s = &self.spec;
        s.base.ln_survival(s.u + s.scale * z) - s.ln_survival_u
    }

    fn decay_hint(&self) -> Option<DecayHint> {
        self.spec.base.decay_hint()
    }
}

/// Survival curve of the (normalized) excess; equals 1 at `z = 0`.
pub fn excess_survival(spec: &ExcessSpec) -> ExcessCurve {
    ExcessCurve { spec: spec.clone() }
}

/// A functional value that may be infinite or not defined for the branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    Value(f64),
    Divergent,
    Unavailable,
}

impl Quantity {
    pub fn value(self) -> Option<f64> {
        match self {
            Quantity::Value(v) => Some(v),
            _ => None,
        }
    }

    /// `inf` for divergent, `NaN` for unavailable.
    pub fn as_f64(self) -> f64 {
        match self {
            Quantity::Value(v) => v,
            Quantity::Divergent => f64::INFINITY,
            Quantity::Unavailable => f64::NAN,
        }
    }

    pub fn is_divergent(self) -> bool {
        self == Quantity::Divergent
    }

    /// `|self - reference| / |reference|` when both are finite.
    pub fn rel_error(self, reference: Quantity) -> Quantity {
        match (self, reference) {
            (Quantity::Value(a), Quantity::Value(b)) if b != 0.0 => {
                Quantity::Value((a - b).abs() / b.abs())
            }
            _ => Quantity::Unavailable,
        }
    }

    pub(crate) fn from_result(r: Result<f64>) -> Result<Self> {
        match r {
            Ok(v) => Ok(Quantity::Value(v)),
            Err(Error::Divergent { .. }) => Ok(Quantity::Divergent),
            Err(e) => Err(e),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Value(v) => write!(f, "{v}"),
            Quantity::Divergent => f.write_str("inf"),
            Quantity::Unavailable => f.write_str("nan"),
        }
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Quantity::Value(v) if v.is_finite() => s.serialize_f64(*v),
            Quantity::Value(_) | Quantity::Unavailable => s.serialize_none(),
            Quantity::Divergent => s.serialize_str("inf"),
        }
    }
}

/// Values of `∫ S^q`, `∫ S`, `∫ z S` and `-∫ S ln S` for one curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Functionals {
    pub qnorm_q: Quantity,
    pub onenorm: Quantity,
    pub moment: Quantity,
    pub shannon: Quantity,
}

impl Functionals {
    pub const UNAVAILABLE: Functionals = Functionals {
        qnorm_q: Quantity::Unavailable,
        onenorm: Quantity::Unavailable,
        moment: Quantity::Unavailable,
        shannon: Quantity::Unavailable,
    };

    /// Field-wise [`Quantity::rel_error`].
    pub fn rel_error(&self, reference: &Functionals) -> Functionals {
        Functionals {
            qnorm_q: self.qnorm_q.rel_error(reference.qnorm_q),
            onenorm: self.onenorm.rel_error(reference.onenorm),
            moment: self.moment.rel_error(reference.moment),
            shannon: self.shannon.rel_error(reference.shannon),
        }
    }

    /// `(name, value)` pairs in column order.
    pub fn fields(&self) -> [(&'static str, Quantity); 4] {
        [
            ("qnorm_q", self.qnorm_q),
            ("onenorm", self.onenorm),
            ("moment", self.moment),
            ("shannon", self.shannon),
        ]
    }
}

/// Closed-form asymptotics of the excess functionals.
pub type AsymptoticPrediction = Functionals;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Domain(format!(
            "{name} must be finite and > 0, got {v}"
        )));
    }
    Ok(())
}

/// Fréchet-domain excess at threshold `u`: `∫S^q ~ u/(aq-1)`,
/// `∫S ~ u/(a-1)`, `∫zS ~ u²/((a-1)(a-2))`. Infinite integrals (`aq <= 1`,
/// `a <= 1`, `a <= 2` respectively) are reported as divergent.
pub fn predict_frechet(a: f64, q: f64, u: f64) -> Result<AsymptoticPrediction> {
    check_positive("tail index", a)?;
    check_positive("q", q)?;
    check_positive("threshold", u)?;
    let finite_if = |ok: bool, v: f64| {
        if ok {
            Quantity::Value(v)
        } else {
            Quantity::Divergent
        }
    };
    Ok(AsymptoticPrediction {
        qnorm_q: finite_if(a * q > 1.0, u / (a * q - 1.0)),
        onenorm: finite_if(a > 1.0, u / (a - 1.0)),
        moment: finite_if(a > 2.0, u * u / ((a - 1.0) * (a - 2.0))),
        shannon: Quantity::Unavailable,
    })
}

/// [`predict_frechet`] for `Y = X_u / g(u)` with `g(u) ~ u`.
pub fn predict_frechet_normalized(a: f64, q: f64) -> Result<AsymptoticPrediction> {
    predict_frechet(a, q, 1.0)
}

/// Weibull-subset excess at threshold `u`: `-∫S ln S ~ ∫S ~ u^{1-ξ}/(ξ l(u))`
/// and `∫zS ~ u^{2(1-ξ)}/(ξ² l(u)²)`. The branch uses `q = 1`, so `qnorm_q`
/// equals the 1-norm.
pub fn predict_weibull(xi: f64, l_at_u: f64, u: f64) -> Result<AsymptoticPrediction> {
    check_positive("tail index", xi)?;
    check_positive("l(u)", l_at_u)?;
    check_positive("threshold", u)?;
    let first = u.powf(1.0 - xi) / (xi * l_at_u);
    Ok(AsymptoticPrediction {
        qnorm_q: Quantity::Value(first),
        onenorm: Quantity::Value(first),
        moment: Quantity::Value(first * first),
        shannon: Quantity::Value(first),
    })
}

/// [`predict_weibull`] for `Y = u^{ξ-1} l(u) X_u`: `(1/ξ, 1/ξ², 1/ξ)`.
pub fn predict_weibull_normalized(xi: f64) -> Result<AsymptoticPrediction> {
    predict_weibull(xi, 1.0, 1.0)
}

/// Maximum entropy solution matched by normalized Fréchet excesses:
/// `q = 1 - 1/a`, `α = β = 1`. Needs `a > 2` so that `q > 1/2`.
pub fn maxent_target_frechet(a: f64) -> Result<MaxEntSolution> {
    if !(a.is_finite() && a > 2.0) {
        return Err(Error::Domain(format!("tail index must exceed 2, got {a}")));
    }
    MaxEntSolution::new(1.0 - 1.0 / a, 1.0, 1.0)
}

/// Maximum Shannon entropy solution matched by normalized Weibull-subset
/// excesses: `q = 1`, `α = 1`, `β = ξ`.
pub fn maxent_target_gumbel(xi: f64) -> Result<MaxEntSolution> {
    check_positive("tail index", xi)?;
    MaxEntSolution::new(1.0, 1.0, xi)
}

/// Excess of a GPD over `u`: same γ, scale `σ + γu`.
pub fn gpd_stability(params: &GpdParams, u: f64) -> Result<GpdParams> {
    check_positive("threshold", u)?;
    GpdParams::new(params.gamma(), params.sigma() + params.gamma() * u)
}

/// GPD limit of the normalized excess for a tail class: `(1 + z)^{-a}`
/// (γ = σ = 1/a) or `exp(-ξz)` (γ = 0, σ = 1/ξ).
pub fn limit_gpd(tail: &TailClass) -> Result<GpdParams> {
    match tail {
        TailClass::Frechet { a, .. } => GpdParams::new(1.0 / a, 1.0 / a),
        TailClass::Weibull { xi, .. } => GpdParams::new(0.0, 1.0 / xi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxent::forward_constraints;
    use crate::survival::{gpd_survival, make_model, parse_model_spec};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn excess_examples() {
        let p = parse_model_spec("pareto:3").unwrap();
        let c = excess_survival(&ExcessSpec::new(p, 1.0, Normalization::None).unwrap());
        assert!(rel(c.eval(1.0), 0.125) < 1e-15);

        let hc = parse_model_spec("half_cauchy").unwrap();
        let c = excess_survival(&ExcessSpec::normalized(hc, 1000.0).unwrap());
        assert!((c.eval(1.0) - 0.5).abs() < 1e-3);

        let g = parse_model_spec("gpd:1,1").unwrap();
        let c = excess_survival(&ExcessSpec::new(g, 1.0, Normalization::None).unwrap());
        assert!(rel(c.eval(1.0), 2.0 / 3.0) < 1e-15);
    }

    #[test]
    fn excess_starts_at_one() {
        for spec in [
            "pareto:3",
            "half_cauchy",
            "half_gaussian",
            "gamma:3,2",
            "gpd:0.5,2",
        ] {
            let m = parse_model_spec(spec).unwrap();
            for u in [0.5, 3.0, 40.0] {
                let c = excess_survival(&ExcessSpec::normalized(m.clone(), u).unwrap());
                assert_eq!(c.eval(0.0), 1.0);
            }
        }
    }

    #[test]
    fn spec_validation() {
        let p = parse_model_spec("pareto:3").unwrap();
        assert!(ExcessSpec::new(p.clone(), 0.0, Normalization::None).is_err());
        assert!(ExcessSpec::new(p.clone(), -1.0, Normalization::None).is_err());
        assert!(ExcessSpec::new(p, 2.0, Normalization::WeibullScale).is_err());
        let hg = parse_model_spec("half_gaussian").unwrap();
        assert!(ExcessSpec::new(hg.clone(), 2.0, Normalization::FrechetScale { g: None }).is_err());
        // the half-Gaussian handle is negative close to the origin
        assert!(ExcessSpec::new(hg, 0.1, Normalization::WeibullScale).is_err());
    }

    #[test]
    fn explicit_frechet_scale() {
        let p = parse_model_spec("lomax:3").unwrap();
        let natural = ExcessSpec::normalized(p.clone(), 4.0).unwrap();
        assert_eq!(natural.scale(), 5.0);
        let plain = ExcessSpec::new(p, 4.0, Normalization::FrechetScale { g: Some(4.0) }).unwrap();
        assert_eq!(plain.scale(), 4.0);
    }

    #[test]
    fn frechet_predictions() {
        let p = predict_frechet(3.0, 0.75, 1.0).unwrap();
        assert!(rel(p.qnorm_q.as_f64(), 0.8) < 1e-15);
        let p = predict_frechet(3.0, 1.0, 10.0).unwrap();
        assert_eq!(p.onenorm, Quantity::Value(5.0));
        let p = predict_frechet(1.0, 1.0, 5.0).unwrap();
        assert!(p.moment.is_divergent() && p.onenorm.is_divergent() && p.qnorm_q.is_divergent());
        assert!(predict_frechet(0.0, 1.0, 1.0).is_err());

        let p = predict_frechet_normalized(3.0, 2.0 / 3.0).unwrap();
        assert!(rel(p.qnorm_q.as_f64(), 1.0) < 1e-15);
        assert_eq!(p.onenorm, Quantity::Value(0.5));
        assert_eq!(p.moment, Quantity::Value(0.5));
        let p = predict_frechet_normalized(5.0, 0.8).unwrap();
        assert!(rel(p.qnorm_q.as_f64(), 1.0 / 3.0) < 1e-15);
        assert_eq!(p.onenorm, Quantity::Value(0.25));
        assert!(rel(p.moment.as_f64(), 1.0 / 12.0) < 1e-15);
        let p = predict_frechet_normalized(2.5, 1.0).unwrap();
        assert!(rel(p.onenorm.as_f64(), 2.0 / 3.0) < 1e-15);
    }

    #[test]
    fn weibull_predictions() {
        let p = predict_weibull(2.0, 0.5, 10.0).unwrap();
        assert!(rel(p.shannon.as_f64(), 0.1) < 1e-15);
        assert!(rel(p.moment.as_f64(), 0.01) < 1e-14);
        for u in [1.0, 7.0, 300.0] {
            assert_eq!(
                predict_weibull(1.0, 2.0, u).unwrap().shannon,
                Quantity::Value(0.5)
            );
        }
        let p = predict_weibull_normalized(2.0).unwrap();
        assert_eq!(
            (p.shannon, p.moment, p.onenorm),
            (
                Quantity::Value(0.5),
                Quantity::Value(0.25),
                Quantity::Value(0.5)
            )
        );
        let p = predict_weibull_normalized(1.0).unwrap();
        assert_eq!(
            (p.shannon, p.moment, p.onenorm),
            (
                Quantity::Value(1.0),
                Quantity::Value(1.0),
                Quantity::Value(1.0)
            )
        );
        let p = predict_weibull_normalized(4.0).unwrap();
        assert_eq!(
            (p.shannon, p.moment, p.onenorm),
            (
                Quantity::Value(0.25),
                Quantity::Value(0.0625),
                Quantity::Value(0.25)
            )
        );
    }

    #[test]
    fn maxent_targets() {
        assert!(rel(maxent_target_frechet(3.0).unwrap().q(), 2.0 / 3.0) < 1e-15);
        assert_eq!(maxent_target_frechet(4.0).unwrap().q(), 0.75);
        assert!(rel(maxent_target_frechet(2.5).unwrap().q(), 0.6) < 1e-15);
        assert!(maxent_target_frechet(2.0).is_err());
        assert!(maxent_target_frechet(1.0).is_err());
        let s = maxent_target_gumbel(2.0).unwrap();
        assert_eq!((s.q(), s.alpha(), s.beta()), (1.0, 1.0, 2.0));
        let s = maxent_target_gumbel(1.0).unwrap();
        assert_eq!((s.q(), s.alpha(), s.beta()), (1.0, 1.0, 1.0));
        assert_eq!(
            forward_constraints(&maxent_target_gumbel(2.0).unwrap()).mu,
            0.25
        );
    }

    #[test]
    fn stability_examples() {
        let s = gpd_stability(&GpdParams::new(1.0, 1.0).unwrap(), 1.0).unwrap();
        assert_eq!((s.gamma(), s.sigma()), (1.0, 2.0));
        let s = gpd_stability(&GpdParams::new(0.0, 3.0).unwrap(), 7.0).unwrap();
        assert_eq!((s.gamma(), s.sigma()), (0.0, 3.0));
        let s = gpd_stability(&GpdParams::new(2.0, 4.0).unwrap(), 3.0).unwrap();
        assert_eq!((s.gamma(), s.sigma()), (2.0, 10.0));
        assert!(gpd_stability(&GpdParams::new(2.0, 4.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn stability_closure_on_grid() {
        for (g, s, u) in [(1.0, 1.0, 1.0), (0.5, 2.0, 3.0), (0.0, 1.0, 5.0)] {
            let p = GpdParams::new(g, s).unwrap();
            let image = gpd_stability(&p, u).unwrap();
            let model = make_model("gpd", &[g, s]).unwrap();
            let c = excess_survival(&ExcessSpec::new(model, u, Normalization::None).unwrap());
            for i in 0..100 {
                let z = 0.25 * i as f64;
                assert!((gpd_survival(&image, z).unwrap() - c.eval(z)).abs() <= 1e-12);
            }
        }
    }
}
