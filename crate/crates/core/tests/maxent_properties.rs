use excess_entropy::functionals::{tsallis_entropy, Integrator};
use excess_entropy::maxent::gpd_from_maxent;
use excess_entropy::maxent::{
    bregman_divergence, forward_constraints, inverse_solve, FeasiblePerturbation, MaxEntSolution,
};
use excess_entropy::survival::gpd_survival;
use proptest::prelude::*;

/// Newton iteration on the two moment equations in `(ln α, ln β)`, using
/// only quadrature of the solution curve and finite-difference Jacobians.
fn newton_oracle(q: f64, mu: f64, theta: f64) -> (f64, f64) {
    let integ = Integrator::new(1e-11).unwrap();
    let residual = |la: f64, lb: f64| -> [f64; 2] {
        let s = MaxEntSolution::new(q, la.exp(), lb.exp()).unwrap();
        let m = integ.first_moment(&s).unwrap();
        let t = integ.integrate(&s).unwrap().value;
        [(m / mu).ln(), (t / theta).ln()]
    };
    let (mut la, mut lb) = (0.0f64, 0.0f64);
    for _ in 0..60 {
        let r = residual(la, lb);
        if r[0].abs().max(r[1].abs()) < 1e-12 {
            break;
        }
        let h = 1e-6;
        let ra = residual(la + h, lb);
        let rb = residual(la, lb + h);
        let j = [
            [(ra[0] - r[0]) / h, (rb[0] - r[0]) / h],
            [(ra[1] - r[1]) / h, (rb[1] - r[1]) / h],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let da = (r[0] * j[1][1] - r[1] * j[0][1]) / det;
        let db = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        // damp large steps
        let step = da.abs().max(db.abs());
        let damp = if step > 1.0 { 1.0 / step } else { 1.0 };
        la -= damp * da;
        lb -= damp * db;
    }
    (la.exp(), lb.exp())
}

#[test]
fn inverse_agrees_with_newton_oracle() {
    for (q, mu, theta) in [
        (0.75, 1.0 / 6.0, 1.0 / 3.0),
        (0.6, 2.0, 0.7),
        (0.9, 0.3, 1.4),
        (1.0, 0.25, 0.5),
    ] {
        let sol = inverse_solve(q, mu, theta).unwrap();
        let (a, b) = newton_oracle(q, mu, theta);
        assert!(
            (sol.alpha() / a - 1.0).abs() < 1e-7,
            "q = {q}: alpha {} vs {a}",
            sol.alpha()
        );
        assert!(
            (sol.beta() / b - 1.0).abs() < 1e-7,
            "q = {q}: beta {} vs {b}",
            sol.beta()
        );
    }
}

#[test]
fn perturbations_cannot_beat_the_maximizer() {
    let sol = MaxEntSolution::new(0.75, 1.3, 0.8).unwrap();
    let h_star = tsallis_entropy(&sol, 0.75).unwrap();
    for shape in 0..10 {
        let g = FeasiblePerturbation::new(sol, shape, 0.05).unwrap();
        let h_g = tsallis_entropy(&g, 0.75).unwrap();
        let b = bregman_divergence(&g, &sol).unwrap();
        assert!(h_star >= h_g, "shape {shape}");
        assert!(b >= -1e-9, "shape {shape}: {b}");
        assert!((b - 0.25 * (h_star - h_g)).abs() <= 1e-8, "shape {shape}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn forward_matches_quadrature(q in 0.55f64..0.95, alpha in 0.2f64..5.0, beta in 0.2f64..5.0) {
        let sol = MaxEntSolution::new(q, alpha, beta).unwrap();
        let c = forward_constraints(&sol);
        let integ = Integrator::default();
        let mu = integ.first_moment(&sol).unwrap();
        let theta = integ.integrate(&sol).unwrap().value;
        let norm = integ.q_norm_q(&sol, q).unwrap();
        prop_assert!((mu / c.mu - 1.0).abs() < 1e-8);
        prop_assert!((theta / c.theta - 1.0).abs() < 1e-8);
        prop_assert!((norm / c.entropy_stat - 1.0).abs() < 1e-8);
    }

    #[test]
    fn inverse_undoes_forward(
        q in prop_oneof![0.51f64..0.999, Just(1.0)],
        alpha in 0.05f64..20.0,
        beta in 0.05f64..20.0,
    ) {
        let sol = MaxEntSolution::new(q, alpha, beta).unwrap();
        let c = forward_constraints(&sol);
        let back = inverse_solve(q, c.mu, c.theta).unwrap();
        prop_assert!((back.alpha() / alpha - 1.0).abs() < 1e-10);
        prop_assert!((back.beta() / beta - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unit_alpha_is_a_gpd(q in prop_oneof![0.51f64..0.999, Just(1.0)], beta in 0.1f64..10.0) {
        let sol = MaxEntSolution::new(q, 1.0, beta).unwrap();
        let gpd = gpd_from_maxent(&sol).unwrap();
        for i in 0..100 {
            let z = 0.37 * i as f64;
            let d = (sol.value(z) - gpd_survival(&gpd, z).unwrap()).abs();
            prop_assert!(d <= 1e-12, "z = {}: {}", z, d);
        }
    }
}
