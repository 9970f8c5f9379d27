use excess_entropy::survival::{parse_model_spec, SurvivalModel, TailClass};

const CATALOG: [&str; 9] = [
    "gpd:0,1",
    "gpd:0.5,2",
    "gpd:3,1",
    "pareto:3",
    "lomax:1.5",
    "half_cauchy",
    "half_gaussian",
    "gamma:3,2",
    "gamma:0.5,1",
];

fn models() -> Vec<SurvivalModel> {
    CATALOG
        .iter()
        .map(|s| parse_model_spec(s).unwrap())
        .collect()
}

fn log_grid(n: usize) -> Vec<f64> {
    // 1e-6 .. 1e6
    (0..n)
        .map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / (n - 1) as f64))
        .collect()
}

#[test]
fn survival_is_bounded_and_nonincreasing() {
    let grid = log_grid(1000);
    for m in models() {
        assert_eq!(m.survival(0.0), 1.0, "{m}");
        let mut prev = 1.0;
        for &x in &grid {
            let s = m.survival(x);
            assert!((0.0..=1.0).contains(&s), "{m}: S({x}) = {s}");
            assert!(s <= prev, "{m}: S increases at {x}");
            prev = s;
        }
    }
}

#[test]
fn quantile_round_trip() {
    for m in models() {
        for p in [0.5, 1e-1, 1e-2, 1e-4] {
            let x = m.quantile(p).unwrap();
            let back = m.survival(x);
            assert!((back - p).abs() <= 1e-9, "{m}: S(Q({p})) = {back}");
        }
        assert!(m.quantile(0.0).is_err());
        assert!(m.quantile(1.5).is_err());
    }
}

#[test]
fn density_is_minus_derivative_of_survival() {
    for m in models() {
        for x in [0.3, 1.7, 4.0, 11.0] {
            let h = 1e-5 * x;
            let fd = (m.survival(x - h) - m.survival(x + h)) / (2.0 * h);
            let f = m.density(x);
            assert!(
                (fd - f).abs() <= 1e-6 * f.max(1e-12),
                "{m} at {x}: {fd} vs {f}"
            );
        }
    }
}

#[test]
fn frechet_tails_regularly_vary() {
    for spec in ["pareto:3", "pareto:1.2", "half_cauchy"] {
        let m = parse_model_spec(spec).unwrap();
        let a = m.tail().index();
        let z = 1e6;
        for c in [2.0, 10.0] {
            let ratio = m.survival(z) / m.survival(c * z);
            let want = f64::powf(c, a);
            assert!(
                (ratio / want - 1.0).abs() < 0.01,
                "{spec}, c = {c}: {ratio} vs {want}"
            );
        }
    }
}

#[test]
fn weibull_tail_rates() {
    let hg = parse_model_spec("half_gaussian").unwrap();
    let v = -hg.ln_survival(30.0) / (30.0 * 30.0);
    assert!((v / 0.5 - 1.0).abs() < 0.01, "{v}");

    // the raw rate −ln S(z)/z picks up a (a−1) ln z / z correction, so at
    // z = 200 it is within 1% of b only for shapes near one
    for (a, b) in [(1.0, 2.0), (1.5, 2.0), (0.5, 3.0)] {
        let m = parse_model_spec(&format!("gamma:{a},{b}")).unwrap();
        let v = -m.ln_survival(200.0) / 200.0;
        assert!((v / b - 1.0).abs() < 0.01, "gamma:{a},{b}: {v}");
    }
}

#[test]
fn slowly_varying_handles_reproduce_the_tail() {
    // −ln S(z) / (z^ξ l(z)) → 1 for the Weibull subset
    for spec in ["half_gaussian", "gamma:3,2", "gamma:0.5,1", "gpd:0,2"] {
        let m = parse_model_spec(spec).unwrap();
        let TailClass::Weibull { xi, l } = m.tail() else {
            panic!("{spec} should be Weibull");
        };
        let r = -m.ln_survival(1e4) / (1e4f64.powf(*xi) * l.eval(1e4));
        assert!((r - 1.0).abs() < 1e-3, "{spec}: {r}");
        assert!((l.eval(1e8) / l.limit() - 1.0).abs() < 1e-3, "{spec}");
    }
    // S(z) z^a → limit for the Fréchet class
    for spec in ["pareto:3", "lomax:2", "half_cauchy", "gpd:0.5,1"] {
        let m = parse_model_spec(spec).unwrap();
        let TailClass::Frechet { a, l } = m.tail() else {
            panic!("{spec} should be Fréchet");
        };
        let z = 1e7;
        let r = m.survival(z) * z.powf(*a) / l.limit();
        assert!((r - 1.0).abs() < 1e-3, "{spec}: {r}");
        assert!((l.eval(2.0 * z) / l.eval(z) - 1.0).abs() < 1e-3, "{spec}");
    }
}

#[test]
fn log_survival_reaches_deep_tails() {
    let hg = parse_model_spec("half_gaussian").unwrap();
    // S(100) underflows, its log does not
    assert_eq!(hg.survival(100.0), 0.0);
    let l = hg.ln_survival(100.0);
    assert!(l.is_finite() && (l + 5000.0).abs() < 10.0, "{l}");
    let g = parse_model_spec("gamma:3,2").unwrap();
    assert!(g.ln_survival(1e4).is_finite());
}
