//! Integral functionals of nonnegative curves on `[0, ∞)`.
//!
//! The curves are typically survival functions, which do not integrate to
//! one; the entropies below are therefore functionals of nonnegative curves
//! rather than entropies of probability densities.

mod quadrature;

pub use quadrature::{
    integrate_fn, integrate_fn_abs, QuadratureResult, DEFAULT_REL_TOL, MAX_REL_TOL, MIN_REL_TOL,
};

use crate::error::{Error, Result};

/// Asymptotic behavior of a curve, used to steer the tail handling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayHint {
    /// `G(z) ~ z^{-exponent}`.
    Power { exponent: f64 },
    /// Faster than any power.
    Exponential,
    /// `G(z) = 0` for `z > end`.
    Compact { end: f64 },
}

impl DecayHint {
    fn pow(self, q: f64) -> Self {
        match self {
            DecayHint::Power { exponent } => DecayHint::Power {
                exponent: exponent * q,
            },
            other => other,
        }
    }

    fn times_z(self) -> Self {
        match self {
            DecayHint::Power { exponent } => DecayHint::Power {
                exponent: exponent - 1.0,
            },
            other => other,
        }
    }
}

/// A nonnegative function on `[0, ∞)`.
pub trait Curve {
    fn eval(&self, z: f64) -> f64;

    /// `ln G(z)`; override when the log can be formed without underflow.
    fn ln_eval(&self, z: f64) -> f64 {
        self.eval(z).ln()
    }

    fn decay_hint(&self) -> Option<DecayHint> {
        None
    }
}

impl<C: Curve + ?Sized> Curve for &C {
    fn eval(&self, z: f64) -> f64 {
        (**self).eval(z)
    }

    fn ln_eval(&self, z: f64) -> f64 {
        (**self).ln_eval(z)
    }

    fn decay_hint(&self) -> Option<DecayHint> {
        (**self).decay_hint()
    }
}

/// Closure-backed curve.
#[derive(Clone)]
pub struct FnCurve<F> {
    f: F,
    hint: Option<DecayHint>,
}

impl<F: Fn(f64) -> f64> FnCurve<F> {
    pub fn new(f: F) -> Self {
        Self { f, hint: None }
    }

    pub fn with_hint(mut self, hint: DecayHint) -> Self {
        self.hint = Some(hint);
        self
    }
}

impl<F: Fn(f64) -> f64> Curve for FnCurve<F> {
    fn eval(&self, z: f64) -> f64 {
        (self.f)(z)
    }

    fn decay_hint(&self) -> Option<DecayHint> {
        self.hint
    }
}

/// Runs the functionals at a fixed relative tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    rel_tol: f64,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

impl Integrator {
    pub fn new(rel_tol: f64) -> Result<Self> {
        quadrature::check_rel_tol(rel_tol)?;
        Ok(Self { rel_tol })
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn integrate<C: Curve + ?Sized>(&self, curve: &C) -> Result<QuadratureResult> {
        integrate_fn(|z| curve.eval(z), curve.decay_hint(), self.rel_tol)
    }

    /// `∫ G^q`, the q-th power of the q-norm.
    pub fn q_norm_q<C: Curve + ?Sized>(&self, curve: &C, q: f64) -> Result<f64> {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::InvalidParameter(format!("q must be > 0, got {q}")));
        }
        let hint = curve.decay_hint().map(|h| h.pow(q));
        let r = integrate_fn(|z| (q * curve.ln_eval(z)).exp(), hint, self.rel_tol)?;
        Ok(r.value)
    }

    /// `∫ z G(z) dz`.
    pub fn first_moment<C: Curve + ?Sized>(&self, curve: &C) -> Result<f64> {
        let hint = curve.decay_hint().map(DecayHint::times_z);
        let r = integrate_fn(|z| z * curve.eval(z), hint, self.rel_tol)?;
        Ok(r.value)
    }

    /// `(∫ G^q - 1) / (1 - q)`.
    pub fn tsallis_entropy<C: Curve + ?Sized>(&self, curve: &C, q: f64) -> Result<f64> {
        if q < 0.0 || (q - 1.0).abs() < 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "Tsallis order must be >= 0 and != 1, got {q}"
            )));
        }
        Ok(tsallis_from_q_norm(self.q_norm_q(curve, q)?, q))
    }

    /// `-∫ G ln G`, with `0 ln 0 = 0`.
    pub fn shannon_entropy<C: Curve + ?Sized>(&self, curve: &C) -> Result<f64> {
        let r = integrate_fn(
            |z| {
                let l = curve.ln_eval(z);
                if l == f64::NEG_INFINITY {
                    0.0
                } else {
                    -l.exp() * l
                }
            },
            curve.decay_hint(),
            self.rel_tol,
        )?;
        Ok(r.value)
    }
}

pub(crate) fn tsallis_from_q_norm(q_norm_q: f64, q: f64) -> f64 {
    (q_norm_q - 1.0) / (1.0 - q)
}

/// `∫₀^∞ G(z) dz` at the given relative tolerance.
pub fn integrate<C: Curve + ?Sized>(curve: &C, rel_tol: f64) -> Result<QuadratureResult> {
    Integrator::new(rel_tol)?.integrate(curve)
}

pub fn q_norm_q<C: Curve + ?Sized>(curve: &C, q: f64) -> Result<f64> {
    Integrator::default().q_norm_q(curve, q)
}

pub fn first_moment<C: Curve + ?Sized>(curve: &C) -> Result<f64> {
    Integrator::default().first_moment(curve)
}

pub fn tsallis_entropy<C: Curve + ?Sized>(curve: &C, q: f64) -> Result<f64> {
    Integrator::default().tsallis_entropy(curve, q)
}

pub fn shannon_entropy<C: Curve + ?Sized>(curve: &C) -> Result<f64> {
    Integrator::default().shannon_entropy(curve)
}

/// `max |A(z) - B(z)|` over the grid.
pub fn sup_distance<A, B>(a: &A, b: &B, grid: &[f64]) -> Result<f64>
where
    A: Curve + ?Sized,
    B: Curve + ?Sized,
{
    if grid.is_empty() {
        return Err(Error::InvalidParameter("evaluation grid is empty".into()));
    }
    let mut sup = 0.0f64;
    for &z in grid {
        if z.is_nan() || z < 0.0 {
            return Err(Error::Domain(format!("grid point must be >= 0, got {z}")));
        }
        let d = (a.eval(z) - b.eval(z)).abs();
        if d.is_nan() {
            return Err(Error::NonFinite(z));
        }
        sup = sup.max(d);
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_curve(rate: f64) -> FnCurve<impl Fn(f64) -> f64> {
        FnCurve::new(move |z: f64| (-rate * z).exp()).with_hint(DecayHint::Exponential)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn integrate_examples() {
        let r = integrate(&exp_curve(1.0), 1e-9).unwrap();
        assert!(close(r.value, 1.0, 1e-10));
        assert!(r.error_estimate >= 0.0 && r.error_estimate <= 1e-9);
        let r = integrate(&FnCurve::new(|z: f64| (1.0 + z).powi(-3)), 1e-9).unwrap();
        assert!(close(r.value, 0.5, 1e-10));
        let r = integrate(&FnCurve::new(|z: f64| 1.0 / (1.0 + z)), 1e-9);
        assert!(matches!(r, Err(Error::Divergent { .. })), "{r:?}");
    }

    #[test]
    fn q_norm_examples() {
        assert!(close(q_norm_q(&exp_curve(1.0), 2.0).unwrap(), 0.5, 1e-10));
        assert!(close(q_norm_q(&exp_curve(1.0), 1.0).unwrap(), 1.0, 1e-10));
        // quadrature oracle value for (1+z)^{-4} at q = 3/4: ∫(1+z)^{-3} = 1/2
        let g = FnCurve::new(|z: f64| (1.0 + z).powi(-4));
        assert!(close(q_norm_q(&g, 0.75).unwrap(), 0.5, 1e-9));
    }

    #[test]
    fn first_moment_examples() {
        assert!(close(first_moment(&exp_curve(1.0)).unwrap(), 1.0, 1e-10));
        let g = FnCurve::new(|z: f64| (1.0 + z).powi(-4));
        assert!(close(first_moment(&g).unwrap(), 1.0 / 6.0, 1e-9));
        let cauchy_like = FnCurve::new(|z: f64| 1.0 / (1.0 + z));
        assert!(matches!(
            first_moment(&cauchy_like),
            Err(Error::Divergent { .. })
        ));
    }

    #[test]
    fn tsallis_examples() {
        let uniform = FnCurve::new(|z: f64| if z <= 1.0 { 1.0 } else { 0.0 })
            .with_hint(DecayHint::Compact { end: 1.0 });
        for q in [0.3, 0.5, 2.0, 3.0] {
            assert!(tsallis_entropy(&uniform, q).unwrap().abs() < 1e-12);
        }
        assert!(close(
            tsallis_entropy(&exp_curve(1.0), 0.5).unwrap(),
            2.0,
            1e-9
        ));
        let g = FnCurve::new(|z: f64| (1.0 + z).powi(-4));
        assert!(close(tsallis_entropy(&g, 0.75).unwrap(), -2.0, 1e-8));
        assert!(tsallis_entropy(&g, 1.0).is_err());
        assert!(tsallis_entropy(&g, -0.5).is_err());
    }

    #[test]
    fn shannon_examples() {
        assert!(close(shannon_entropy(&exp_curve(1.0)).unwrap(), 1.0, 1e-9));
        assert!(close(shannon_entropy(&exp_curve(2.0)).unwrap(), 0.5, 1e-9));
        let g = FnCurve::new(|z: f64| 2.0 * (-2.0 * z).exp()).with_hint(DecayHint::Exponential);
        // quadrature oracle (mpmath): 1 - ln 2
        assert!(close(
            shannon_entropy(&g).unwrap(),
            0.306_852_819_440_054_7,
            1e-9
        ));
        // 0 ln 0 = 0 past the support
        let uniform = FnCurve::new(|z: f64| if z <= 1.0 { 1.0 } else { 0.0 })
            .with_hint(DecayHint::Compact { end: 2.0 });
        assert_eq!(shannon_entropy(&uniform).unwrap(), 0.0);
    }

    #[test]
    fn sup_distance_examples() {
        let a = exp_curve(1.0);
        let b = exp_curve(2.0);
        let zero = FnCurve::new(|_| 0.0);
        assert_eq!(sup_distance(&a, &a, &[0.0, 1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(sup_distance(&a, &b, &[0.0]).unwrap(), 0.0);
        assert_eq!(sup_distance(&a, &zero, &[0.0, 1.0]).unwrap(), 1.0);
        assert!(sup_distance(&a, &b, &[]).is_err());
        assert!(sup_distance(&a, &b, &[-1.0]).is_err());
    }
}
