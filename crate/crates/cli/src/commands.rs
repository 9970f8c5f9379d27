//! One function per subcommand. Each returns a table and, where the command
//! has a natural picture, a plot.

use excess_entropy::convergence::{
    curve_functionals, log_grid, monte_carlo_check, run_sweep, uniform_grid, FunctionalReport,
    Metric, SweepConfig,
};
use excess_entropy::excess::{
    excess_survival, gpd_stability, predict_frechet, predict_weibull, ExcessSpec, Functionals,
    Normalization, Quantity,
};
use excess_entropy::functionals::{Curve, Integrator};
use excess_entropy::maxent::{forward_constraints, gpd_from_maxent, inverse_solve};
use excess_entropy::rng::GENERATOR_NAME;
use excess_entropy::survival::{gpd_density, parse_model_spec, GpdParams, TailClass};
use excess_entropy::{Error, Result};

use crate::output::{Cell, Table};
use crate::svg::{Plot, Series};

pub struct Rendered {
    pub table: Table,
    pub plot: Option<Plot>,
}

impl From<Table> for Rendered {
    fn from(table: Table) -> Self {
        Rendered { table, plot: None }
    }
}

const FUNCTIONAL_NAMES: [&str; 4] = ["qnorm_q", "onenorm", "moment", "shannon"];

fn prefixed(prefix: &str) -> impl Iterator<Item = String> + '_ {
    FUNCTIONAL_NAMES.iter().map(move |n| format!("{prefix}{n}"))
}

fn cells(f: &Functionals) -> impl Iterator<Item = Cell> {
    f.fields().into_iter().map(|(_, q)| Cell::from(q))
}

fn gamma_label(g: f64) -> String {
    format!("{g}")
}

pub fn plot_gpd(gammas: &[f64], sigma: f64, x_max: f64, points: usize) -> Result<Rendered> {
    if gammas.is_empty() {
        return Err(Error::InvalidParameter("need at least one γ".into()));
    }
    if !(x_max.is_finite() && x_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "x-max must be > 0, got {x_max}"
        )));
    }
    if points < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 points, got {points}"
        )));
    }
    let params = gammas
        .iter()
        .map(|&g| GpdParams::new(g, sigma))
        .collect::<Result<Vec<_>>>()?;
    let xs = uniform_grid(x_max, points);

    let mut columns = vec!["x".to_string()];
    columns.extend(gammas.iter().map(|g| format!("f_{}", gamma_label(*g))));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new("plot-gpd", &cols);
    table.meta("sigma", sigma).meta("x_max", x_max);
    table.note(
        "f(x) = (1/sigma) (1 + gamma x / sigma)^(-1/gamma - 1); exp(-x/sigma)/sigma at gamma = 0",
    );

    let mut series: Vec<Series> = gammas
        .iter()
        .map(|g| Series {
            label: format!("γ={}", gamma_label(*g)),
            points: Vec::with_capacity(points),
        })
        .collect();
    for &x in &xs {
        let mut row = vec![Cell::Num(x)];
        for (p, s) in params.iter().zip(series.iter_mut()) {
            let f = gpd_density(p, x)?;
            row.push(Cell::Num(f));
            s.points.push((x, f));
        }
        table.push(row);
    }
    let plot = Plot {
        title: format!("Generalized Pareto densities, σ={sigma}"),
        x_label: "x".into(),
        y_label: "f(x)".into(),
        log_x: false,
        log_y: false,
        series,
    };
    Ok(Rendered {
        table,
        plot: Some(plot),
    })
}

pub fn maxent(q: f64, mu: f64, theta: f64) -> Result<Rendered> {
    let sol = inverse_solve(q, mu, theta)?;
    let c = forward_constraints(&sol);
    let (gg, gs) = match gpd_from_maxent(&sol) {
        Ok(p) => (p.gamma(), p.sigma()),
        Err(_) => (f64::NAN, f64::NAN),
    };
    let mut table = Table::new(
        "maxent",
        &[
            "q",
            "alpha",
            "beta",
            "gpd_gamma",
            "gpd_sigma",
            "mu",
            "theta",
            "entropy_stat",
        ],
    );
    table.meta("q", q).meta("mu", mu).meta("theta", theta);
    table.note(
        "mu, theta, entropy_stat are recomputed from (alpha, beta); gpd_* is nan unless alpha = 1",
    );
    table.note("entropy_stat: integral of G*^q for q < 1, Shannon functional at q = 1");
    table.push(vec![
        sol.q().into(),
        sol.alpha().into(),
        sol.beta().into(),
        gg.into(),
        gs.into(),
        c.mu.into(),
        c.theta.into(),
        c.entropy_stat.into(),
    ]);
    Ok(table.into())
}

fn excess_columns() -> Vec<String> {
    let mut cols = vec!["u".to_string(), "scale".to_string()];
    cols.extend(prefixed(""));
    cols.extend(prefixed("pred_"));
    cols.extend(prefixed("target_"));
    cols.extend(prefixed("err_pred_"));
    cols.extend(prefixed("err_target_"));
    cols
}

fn excess_row(
    u: f64,
    scale: f64,
    computed: &Functionals,
    predicted: &Functionals,
    target: &Functionals,
) -> Vec<Cell> {
    let mut row = vec![Cell::Num(u), Cell::Num(scale)];
    row.extend(cells(computed));
    row.extend(cells(predicted));
    row.extend(cells(target));
    row.extend(cells(&computed.rel_error(predicted)));
    row.extend(cells(&computed.rel_error(target)));
    row
}

pub fn excess(
    model_spec: &str,
    us: &[f64],
    q: Option<f64>,
    normalized: bool,
    rel_tol: f64,
) -> Result<Rendered> {
    let model = parse_model_spec(model_spec)?;
    if us.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one threshold".into(),
        ));
    }
    let columns = excess_columns();
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new("excess", &cols);
    table
        .meta("model", model.to_string())
        .meta("normalized", if normalized { "yes" } else { "no" });
    table.note("functionals of the excess survival G: qnorm_q = int G^q, onenorm = int G, moment = int z G, shannon = -int G ln G");
    table.note("pred_* closed-form asymptotics, target_* the matching maximum entropy solution, err_* relative errors of the computed values; inf marks a divergent integral, nan a value not defined here");

    if normalized {
        let mut cfg = SweepConfig::new(model.clone(), us.to_vec())
            .with_metrics(&[Metric::Functionals])
            .with_rel_tol(rel_tol);
        if let Some(q) = q {
            cfg = cfg.with_q(q);
        }
        let rows = run_sweep(&cfg)?;
        table.meta("q", rows[0].q);
        for r in &rows {
            let scale = ExcessSpec::normalized(model.clone(), r.u)?.scale();
            table.push(excess_row(r.u, scale, &r.computed, &r.predicted, &r.target));
        }
        return Ok(table.into());
    }

    let q = q.unwrap_or(1.0);
    table.meta("q", q);
    let integ = Integrator::new(rel_tol)?;
    for &u in us {
        let spec = ExcessSpec::new(model.clone(), u, Normalization::None)?;
        let curve = excess_survival(&spec);
        let computed = curve_functionals(&curve, q, &integ)?;
        let predicted = match model.tail() {
            TailClass::Frechet { a, .. } => predict_frechet(*a, q, u)?,
            TailClass::Weibull { xi, l } => {
                let mut p = predict_weibull(*xi, l.eval(u).max(f64::MIN_POSITIVE), u)?;
                if q != 1.0 {
                    p.qnorm_q = Quantity::Unavailable;
                }
                p
            }
        };
        table.push(excess_row(
            u,
            1.0,
            &computed,
            &predicted,
            &Functionals::UNAVAILABLE,
        ));
    }
    Ok(table.into())
}

fn sweep_columns() -> Vec<String> {
    let mut cols = vec!["u".to_string(), "q".to_string()];
    cols.extend(prefixed(""));
    cols.extend(prefixed("err_target_"));
    cols.extend(["entropy_gap", "bregman", "sup_norm"].map(String::from));
    cols
}

fn sweep_row(r: &FunctionalReport) -> Vec<Cell> {
    let mut row = vec![Cell::Num(r.u), Cell::Num(r.q)];
    row.extend(cells(&r.computed));
    row.extend(cells(&r.rel_err_target));
    row.extend([r.entropy_gap, r.bregman, r.sup_norm].map(Cell::from));
    row
}

#[allow(clippy::too_many_arguments)]
pub fn sweep(
    model_spec: &str,
    u_min: f64,
    u_max: f64,
    points: usize,
    metrics: &[String],
    q: Option<f64>,
    rel_tol: f64,
) -> Result<Rendered> {
    let model = parse_model_spec(model_spec)?;
    let metrics = metrics
        .iter()
        .map(|m| Metric::parse(m))
        .collect::<Result<Vec<_>>>()?;
    if metrics.is_empty() {
        return Err(Error::InvalidParameter("need at least one metric".into()));
    }
    let grid = log_grid(u_min, u_max, points)?;
    let mut cfg = SweepConfig::new(model.clone(), grid)
        .with_metrics(&metrics)
        .with_rel_tol(rel_tol);
    if let Some(q) = q {
        cfg = cfg.with_q(q);
    }
    let rows = run_sweep(&cfg)?;

    let columns = sweep_columns();
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new("sweep", &cols);
    table.meta("model", model.to_string()).meta(
        "metrics",
        metrics
            .iter()
            .map(|m| m.name())
            .collect::<Vec<_>>()
            .join(" "),
    );
    if let Some(sol) = rows[0].target_solution {
        table
            .meta("target_q", sol.q())
            .meta("target_alpha", sol.alpha())
            .meta("target_beta", sol.beta());
    }
    table.note("normalized excess survival G_u against its limit G*: err_target_* relative errors, entropy_gap = H(G*) - H(G_u), bregman = B(G_u, G*), sup_norm = max |G_u - G*| on [0, 100]");
    for r in &rows {
        table.push(sweep_row(r));
    }

    let mut series = Vec::new();
    if metrics.contains(&Metric::Functionals) {
        for (i, name) in FUNCTIONAL_NAMES.iter().enumerate() {
            let points: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|r| r.rel_err_target.fields()[i].1.value().map(|v| (r.u, v)))
                .collect();
            if !points.is_empty() {
                series.push(Series {
                    label: format!("err {name}"),
                    points,
                });
            }
        }
    }
    for (metric, pick) in [
        (
            Metric::EntropyGap,
            (|r: &FunctionalReport| r.entropy_gap) as fn(&FunctionalReport) -> Quantity,
        ),
        (Metric::Bregman, |r| r.bregman),
        (Metric::SupNorm, |r| r.sup_norm),
    ] {
        if !metrics.contains(&metric) {
            continue;
        }
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| pick(r).value().map(|v| (r.u, v.abs())))
            .collect();
        if !points.is_empty() {
            series.push(Series {
                label: metric.name().to_string(),
                points,
            });
        }
    }
    let plot = Plot {
        title: format!("Convergence of the normalized excess of {model}"),
        x_label: "threshold u".into(),
        y_label: "discrepancy".into(),
        log_x: true,
        log_y: true,
        series,
    };
    Ok(Rendered {
        table,
        plot: Some(plot),
    })
}

pub fn stability(gamma: f64, sigma: f64, u: f64, points: usize, z_max: f64) -> Result<Rendered> {
    let params = GpdParams::new(gamma, sigma)?;
    if !(u.is_finite() && u > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be > 0, got {u}"
        )));
    }
    if !(z_max.is_finite() && z_max > 0.0) || points < 2 {
        return Err(Error::InvalidParameter(
            "need z-max > 0 and at least 2 points".into(),
        ));
    }
    let image = gpd_stability(&params, u)?;
    let model = parse_model_spec(&format!("gpd:{gamma},{sigma}"))?;
    let curve = excess_survival(&ExcessSpec::new(model, u, Normalization::None)?);

    let mut table = Table::new("stability", &["z", "excess", "gpd", "abs_err"]);
    let mut max_err = 0.0f64;
    let mut rows = Vec::new();
    for z in uniform_grid(z_max, points) {
        let e = curve.eval(z);
        let g = image.eval(z);
        max_err = max_err.max((e - g).abs());
        rows.push(vec![z.into(), e.into(), g.into(), (e - g).abs().into()]);
    }
    table
        .meta("gamma", gamma)
        .meta("sigma", sigma)
        .meta("u", u)
        .meta("sigma_prime", image.sigma())
        .meta("max_abs_error", max_err);
    table.note(
        "excess = S(u + z)/S(u) of GPD(gamma, sigma); gpd = survival of GPD(gamma, sigma_prime)",
    );
    for r in rows {
        table.push(r);
    }
    Ok(table.into())
}

pub fn monte_carlo(model_spec: &str, u: f64, n: usize, seed: u64) -> Result<Rendered> {
    let model = parse_model_spec(model_spec)?;
    let r = monte_carlo_check(&model, u, n, seed)?;
    let mut table = Table::new(
        "monte-carlo",
        &[
            "functional",
            "estimate",
            "std_error",
            "quadrature",
            "predicted",
            "z_quadrature",
        ],
    );
    table
        .meta("model", r.model.clone())
        .meta("u", u)
        .meta("n", n as f64)
        .meta("seed", seed.to_string())
        .meta("exceedances", r.exceedances as f64)
        .meta("scale", r.scale);
    table.note(format!("generator: {GENERATOR_NAME}"));
    table.note("estimates integrate the empirical survival of (X - u)/scale over X > u exactly");
    for (name, est, quad, pred) in [
        (
            "onenorm",
            r.onenorm,
            r.quadrature.onenorm,
            r.predicted.onenorm,
        ),
        ("moment", r.moment, r.quadrature.moment, r.predicted.moment),
    ] {
        let z = quad.value().map_or(f64::NAN, |v| est.z_score(v));
        table.push(vec![
            name.into(),
            est.value.into(),
            est.std_error.into(),
            quad.into(),
            pred.into(),
            z.into(),
        ]);
    }
    Ok(table.into())
}
