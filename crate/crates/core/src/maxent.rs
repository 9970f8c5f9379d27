//! Closed-form maximum Tsallis/Shannon entropy solution under a first-moment
//! constraint `∫ z G = μ` and a mass constraint `∫ G = θ` on `[0, ∞)`.
//!
//! For `1/2 < q < 1` the maximizer is
//!
//! ```text
//! G*(z) = α^{1/(q-1)} (1 + (β/α) z)^{1/(q-1)}
//! ```
//!
//! and for `q = 1` it is `G*(z) = α exp(-βz)`. Optimality is certified by
//! the functional Bregman divergence built on `-x^q` (or `x ln x` at `q = 1`):
//! since `G*^{q-1} = α + βz` is affine, every feasible `g` satisfies
//! `B(g, G*) = ∫ G*^q - ∫ g^q`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{
    integrate_fn, integrate_fn_abs, Curve, DecayHint, Integrator, DEFAULT_REL_TOL,
};
use crate::survival::GpdParams;

/// `|q - 1|` below this takes the Shannon branch.
pub const SHANNON_EPS: f64 = 1e-9;
/// Relative slack on `α = 1` when converting to a GPD.
const UNIT_ALPHA_TOL: f64 = 1e-9;

fn is_shannon(q: f64) -> bool {
    (q - 1.0).abs() < SHANNON_EPS
}

fn check_order(q: f64) -> Result<()> {
    if !(q.is_finite() && q > 0.5 && q <= 1.0 + SHANNON_EPS) {
        return Err(Error::Domain(format!(
            "entropy order must lie in (1/2, 1], got {q}"
        )));
    }
    Ok(())
}

/// Parameters `(q, α, β)` of the maximizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxEntSolution {
    q: f64,
    alpha: f64,
    beta: f64,
}

/// Constraint values reached by a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintValues {
    /// First moment `∫ z G*`.
    pub mu: f64,
    /// Mass `∫ G*`.
    pub theta: f64,
    /// `∫ G*^q` for `q < 1`, Shannon functional `-∫ G* ln G*` at `q = 1`.
    pub entropy_stat: f64,
}

impl MaxEntSolution {
    pub fn new(q: f64, alpha: f64, beta: f64) -> Result<Self> {
        check_order(q)?;
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        let q = if is_shannon(q) { 1.0 } else { q };
        Ok(Self { q, alpha, beta })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_shannon(&self) -> bool {
        self.q == 1.0
    }

    /// `ln G*(z)`.
    pub fn ln_value(&self, z: f64) -> f64 {
        let (q, a, b) = (self.q, self.alpha, self.beta);
        if self.is_shannon() {
            a.ln() - b * z
        } else {
            (a.ln() + (b / a * z).ln_1p()) / (q - 1.0)
        }
    }

    /// `G*(z)` for `z >= 0`.
    pub fn value(&self, z: f64) -> f64 {
        self.ln_value(z).exp()
    }
}

/// `G*(z)`; rejects `z < 0`.
pub fn evaluate_solution(sol: &MaxEntSolution, z: f64) -> Result<f64> {
    if z.is_nan() || z < 0.0 {
        return Err(Error::Domain(format!("argument must be >= 0, got {z}")));
    }
    Ok(sol.value(z))
}

impl Curve for MaxEntSolution {
    fn eval(&self, z: f64) -> f64 {
        self.value(z)
    }

    fn ln_eval(&self, z: f64) -> f64 {
        self.ln_value(z)
    }

    fn decay_hint(&self) -> Option<DecayHint> {
        Some(if self.is_shannon() {
            DecayHint::Exponential
        } else {
            DecayHint::Power {
                exponent: 1.0 / (1.0 - self.q),
            }
        })
    }
}

/// Closed-form `(μ, θ, entropy_stat)` of a solution.
pub fn forward_constraints(sol: &MaxEntSolution) -> ConstraintValues {
    let (q, a, b) = (sol.q, sol.alpha, sol.beta);
    if sol.is_shannon() {
        let theta = a / b;
        return ConstraintValues {
            mu: a / (b * b),
            theta,
            // -∫ αe^{-βz} ln(αe^{-βz}) dz
            entropy_stat: -theta * a.ln() + theta,
        };
    }
    let p = (2.0 * q - 1.0) / (q - 1.0);
    ConstraintValues {
        mu: (q - 1.0).powi(2) * a.powf(p) / (q * (2.0 * q - 1.0) * b * b),
        theta: a.powf(q / (q - 1.0)) * (1.0 - q) / (b * q),
        entropy_stat: a.powf(p) * (1.0 - q) / ((2.0 * q - 1.0) * b),
    }
}

/// Recovers `(α, β)` from `(q, μ, θ)`. Every `μ, θ > 0` is feasible for
/// `q` in `(1/2, 1]`.
pub fn inverse_solve(q: f64, mu: f64, theta: f64) -> Result<MaxEntSolution> {
    check_order(q)?;
    for (name, v) in [("mu", mu), ("theta", theta)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!(
                "{name} must be finite and > 0, got {v}"
            )));
        }
    }
    if is_shannon(q) {
        let beta = theta / mu;
        return MaxEntSolution::new(1.0, theta * beta, beta);
    }
    // μ/θ² = α^{1/(1-q)} q / (2q - 1)
    let alpha = (q * theta * theta / ((2.0 * q - 1.0) * mu)).powf(q - 1.0);
    let beta = alpha.powf(q / (q - 1.0)) * (1.0 - q) / (q * theta);
    MaxEntSolution::new(q, alpha, beta)
}

/// Functional Bregman divergence `B(g, G*)` generated by `-x^q`
/// (`x ln x` at `q = 1`), by quadrature of the pointwise divergence.
pub fn bregman_divergence<C: Curve + ?Sized>(g: &C, sol: &MaxEntSolution) -> Result<f64> {
    bregman_divergence_tol(g, sol, DEFAULT_REL_TOL)
}

pub fn bregman_divergence_tol<C: Curve + ?Sized>(
    g: &C,
    sol: &MaxEntSolution,
    rel_tol: f64,
) -> Result<f64> {
    let q = sol.q;
    // the pointwise divergence cancels to rounding when g is close to G*;
    // errors are measured against the size of the terms, not of B itself
    let c = forward_constraints(sol);
    let abs_tol = rel_tol * c.theta.max(c.entropy_stat.abs());
    let r = if sol.is_shannon() {
        integrate_fn_abs(
            |z| {
                let ln_star = sol.ln_value(z);
                let star = ln_star.exp();
                let ln_g = g.ln_eval(z);
                if ln_g == f64::NEG_INFINITY {
                    return star;
                }
                let gv = ln_g.exp();
                gv * (ln_g - ln_star) - gv + star
            },
            None,
            rel_tol,
            abs_tol,
        )?
    } else {
        integrate_fn_abs(
            |z| {
                let ln_star = sol.ln_value(z);
                let star = ln_star.exp();
                let star_q = (q * ln_star).exp();
                let slope = ((q - 1.0) * ln_star).exp();
                let g_q = (q * g.ln_eval(z)).exp();
                -g_q + star_q + q * slope * (g.eval(z) - star)
            },
            None,
            rel_tol,
            abs_tol,
        )?
    };
    Ok(r.value)
}

/// GPD equal to a unit-mass-at-origin solution (`α = 1`): `γ = 1 - q`,
/// `σ = (1 - q)/β`, and `γ = 0`, `σ = 1/β` at `q = 1`.
pub fn gpd_from_maxent(sol: &MaxEntSolution) -> Result<GpdParams> {
    if (sol.alpha - 1.0).abs() > UNIT_ALPHA_TOL {
        return Err(Error::Domain(format!(
            "only alpha = 1 gives a survival function (G*(0) = 1), got alpha = {}",
            sol.alpha
        )));
    }
    if sol.is_shannon() {
        GpdParams::new(0.0, 1.0 / sol.beta)
    } else {
        GpdParams::new(1.0 - sol.q, (1.0 - sol.q) / sol.beta)
    }
}

/// `G*(z) (1 + ε h(z))` where `h` is a bounded two-sign bump projected so
/// that the perturbation leaves `μ` and `θ` unchanged.
#[derive(Debug, Clone, Copy)]
pub struct FeasiblePerturbation {
    sol: MaxEntSolution,
    epsilon: f64,
    frequency: f64,
    phase: f64,
    scale: f64,
    c1: f64,
    c2: f64,
}

impl FeasiblePerturbation {
    /// `shape` selects the frequency/phase of the bump; `ε` its amplitude.
    pub fn new(sol: MaxEntSolution, shape: u32, epsilon: f64) -> Result<Self> {
        let frequency = 1.0 + (shape % 5) as f64;
        let phase = 0.7 * (shape / 5) as f64;
        // length scale of the solution
        let cv = forward_constraints(&sol);
        let scale = cv.mu / cv.theta;
        let mut p = Self {
            sol,
            epsilon,
            frequency,
            phase,
            scale,
            c1: 0.0,
            c2: 0.0,
        };
        // zero the θ and μ contributions of h = b0 + c1 b1 + c2 b2
        let integ = Integrator::default();
        let weighted = |k: usize, moment: bool| -> Result<f64> {
            let f = |z: f64| {
                let w = sol.value(z) * p.basis(k, z);
                if moment {
                    z * w
                } else {
                    w
                }
            };
            Ok(integrate_fn(f, None, integ.rel_tol())?.value)
        };
        let m = [
            [weighted(1, false)?, weighted(2, false)?],
            [weighted(1, true)?, weighted(2, true)?],
        ];
        let rhs = [-weighted(0, false)?, -weighted(0, true)?];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.abs() < 1e-300 {
            return Err(Error::Domain("degenerate perturbation basis".into()));
        }
        p.c1 = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
        p.c2 = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
        Ok(p)
    }

    fn basis(&self, k: usize, z: f64) -> f64 {
        let s = z / (z + self.scale);
        match k {
            0 => (std::f64::consts::TAU * self.frequency * s + self.phase).sin(),
            1 => (-z / self.scale).exp(),
            _ => s,
        }
    }

    pub fn bump(&self, z: f64) -> f64 {
        self.basis(0, z) + self.c1 * self.basis(1, z) + self.c2 * self.basis(2, z)
    }

    pub fn solution(&self) -> &MaxEntSolution {
        &self.sol
    }
}

impl Curve for FeasiblePerturbation {
    fn eval(&self, z: f64) -> f64 {
        self.sol.value(z) * (1.0 + self.epsilon * self.bump(z))
    }

    fn ln_eval(&self, z: f64) -> f64 {
        self.sol.ln_value(z) + (self.epsilon * self.bump(z)).ln_1p()
    }

    fn decay_hint(&self) -> Option<DecayHint> {
        self.sol.decay_hint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{first_moment, q_norm_q, shannon_entropy};
    use crate::survival::gpd_survival;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn evaluate_examples() {
        let s = MaxEntSolution::new(0.75, 1.0, 1.0).unwrap();
        assert_eq!(evaluate_solution(&s, 0.0).unwrap(), 1.0);
        assert!(rel(evaluate_solution(&s, 1.0).unwrap(), 0.0625) < 1e-15);
        let s = MaxEntSolution::new(1.0, 1.0, 2.0).unwrap();
        assert!(rel(evaluate_solution(&s, 1.0).unwrap(), 0.135_335_283_236_612_7) < 1e-15);
        assert!(evaluate_solution(&s, -1.0).is_err());
    }

    #[test]
    fn rejects_invalid_solutions() {
        assert!(MaxEntSolution::new(0.5, 1.0, 1.0).is_err());
        assert!(MaxEntSolution::new(0.4, 1.0, 1.0).is_err());
        assert!(MaxEntSolution::new(1.2, 1.0, 1.0).is_err());
        assert!(MaxEntSolution::new(0.75, 0.0, 1.0).is_err());
        assert!(MaxEntSolution::new(0.75, 1.0, -1.0).is_err());
        assert!(MaxEntSolution::new(1.0 - 1e-10, 1.0, 1.0)
            .unwrap()
            .is_shannon());
    }

    #[test]
    fn forward_examples() {
        let c = forward_constraints(&MaxEntSolution::new(0.75, 1.0, 1.0).unwrap());
        assert!(rel(c.mu, 1.0 / 6.0) < 1e-14);
        assert!(rel(c.theta, 1.0 / 3.0) < 1e-14);
        assert!(rel(c.entropy_stat, 0.5) < 1e-14);
        let c = forward_constraints(&MaxEntSolution::new(1.0, 1.0, 2.0).unwrap());
        assert_eq!((c.mu, c.theta, c.entropy_stat), (0.25, 0.5, 0.5));
        let c = forward_constraints(&MaxEntSolution::new(2.0 / 3.0, 1.0, 1.0).unwrap());
        assert!(rel(c.mu, 0.5) < 1e-14);
        assert!(rel(c.theta, 0.5) < 1e-14);
        assert!(rel(c.entropy_stat, 1.0) < 1e-14);
    }

    #[test]
    fn forward_matches_quadrature() {
        for (q, a, b) in [
            (0.75, 1.0, 1.0),
            (0.6, 2.0, 0.5),
            (1.0, 2.0, 3.0),
            (0.9, 0.3, 4.0),
        ] {
            let s = MaxEntSolution::new(q, a, b).unwrap();
            let c = forward_constraints(&s);
            assert!(rel(first_moment(&s).unwrap(), c.mu) < 1e-8);
            assert!(rel(q_norm_q(&s, 1.0).unwrap(), c.theta) < 1e-8);
            let stat = if s.is_shannon() {
                shannon_entropy(&s).unwrap()
            } else {
                q_norm_q(&s, q).unwrap()
            };
            assert!(rel(stat, c.entropy_stat) < 1e-8, "{q} {a} {b}");
        }
    }

    #[test]
    fn inverse_examples() {
        let s = inverse_solve(0.75, 1.0 / 6.0, 1.0 / 3.0).unwrap();
        assert!(rel(s.alpha(), 1.0) < 1e-12 && rel(s.beta(), 1.0) < 1e-12);
        let s = inverse_solve(1.0, 0.25, 0.5).unwrap();
        assert_eq!((s.alpha(), s.beta()), (1.0, 2.0));
        let s = inverse_solve(2.0 / 3.0, 0.5, 0.5).unwrap();
        assert!(rel(s.alpha(), 1.0) < 1e-12 && rel(s.beta(), 1.0) < 1e-12);
        assert!(inverse_solve(0.4, 1.0, 1.0).is_err());
        assert!(inverse_solve(0.75, -1.0, 1.0).is_err());
        assert!(inverse_solve(0.75, 1.0, 0.0).is_err());
    }

    #[test]
    fn bregman_vanishes_at_solution() {
        for q in [0.75, 1.0] {
            let s = MaxEntSolution::new(q, 1.0, 1.0).unwrap();
            assert!(bregman_divergence(&s, &s).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn bregman_identity_needs_constraints() {
        let s = MaxEntSolution::new(0.75, 1.0, 1.0).unwrap();
        let doubled = crate::functionals::FnCurve::new(move |z: f64| 2.0 * s.value(z));
        let b = bregman_divergence(&doubled, &s).unwrap();
        let identity = q_norm_q(&s, 0.75).unwrap() - q_norm_q(&doubled, 0.75).unwrap();
        assert!(b > 0.0);
        assert!((b - identity).abs() > 0.1);
    }

    #[test]
    fn gpd_conversion_examples() {
        let g = gpd_from_maxent(&MaxEntSolution::new(0.75, 1.0, 1.0).unwrap()).unwrap();
        assert!(rel(g.gamma(), 0.25) < 1e-15 && rel(g.sigma(), 0.25) < 1e-15);
        let g = gpd_from_maxent(&MaxEntSolution::new(1.0, 1.0, 2.0).unwrap()).unwrap();
        assert_eq!((g.gamma(), g.sigma()), (0.0, 0.5));
        let g = gpd_from_maxent(&MaxEntSolution::new(2.0 / 3.0, 1.0, 1.0).unwrap()).unwrap();
        assert!(rel(g.gamma(), 1.0 / 3.0) < 1e-15 && rel(g.sigma(), 1.0 / 3.0) < 1e-15);
        assert!(gpd_from_maxent(&MaxEntSolution::new(0.75, 2.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn gpd_pointwise_equivalence() {
        for (q, b) in [(0.75, 1.0), (0.6, 2.5), (1.0, 2.0), (0.95, 0.2)] {
            let s = MaxEntSolution::new(q, 1.0, b).unwrap();
            let g = gpd_from_maxent(&s).unwrap();
            for i in 0..100 {
                let z = 0.1 * i as f64 * (1.0 + i as f64 / 10.0);
                let a = evaluate_solution(&s, z).unwrap();
                let c = gpd_survival(&g, z).unwrap();
                assert!((a - c).abs() <= 1e-12, "q={q} z={z}");
            }
        }
    }

    #[test]
    fn perturbation_preserves_constraints() {
        let s = MaxEntSolution::new(0.75, 1.0, 1.0).unwrap();
        let c = forward_constraints(&s);
        for shape in 0..10 {
            let p = FeasiblePerturbation::new(s, shape, 0.05).unwrap();
            assert!(rel(first_moment(&p).unwrap(), c.mu) < 1e-8, "shape {shape}");
            assert!(
                rel(q_norm_q(&p, 1.0).unwrap(), c.theta) < 1e-8,
                "shape {shape}"
            );
        }
    }
}
