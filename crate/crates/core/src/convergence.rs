//! Threshold sweeps measuring how fast normalized excess curves approach
//! their maximum entropy targets, plus a seeded Monte Carlo cross-check.
//!
//! Each sweep row integrates the normalized excess survival `G_u` and
//! compares it with the closed-form asymptotics and with the target `G*`:
//!
//! - `entropy_gap = H_q(G*) - H_q(G_u)`
//! - `bregman = B(G_u, G*)`
//! - `sup_norm = sup_z |G_u(z) - G*(z)|` on the evaluation grid
//!
//! The gap and the Bregman divergence use the order of the target, which for
//! Fréchet tails may differ from the order used for the `qnorm_q` column.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::excess::{
    excess_survival, limit_gpd, maxent_target_frechet, maxent_target_gumbel,
    predict_frechet_normalized, predict_weibull_normalized, ExcessCurve, ExcessSpec, Functionals,
    Quantity,
};
use crate::functionals::{sup_distance, tsallis_from_q_norm, Curve, Integrator, DEFAULT_REL_TOL};
use crate::maxent::{bregman_divergence_tol, forward_constraints, MaxEntSolution};
use crate::rng::{SplitMix64, GENERATOR_NAME};
use crate::survival::{SurvivalModel, TailClass};

/// Quantities a sweep can compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Functionals,
    EntropyGap,
    Bregman,
    SupNorm,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Functionals,
        Metric::EntropyGap,
        Metric::Bregman,
        Metric::SupNorm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Functionals => "functionals",
            Metric::EntropyGap => "entropy_gap",
            Metric::Bregman => "bregman",
            Metric::SupNorm => "sup_norm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse {
                spec: s.to_string(),
                reason: "expected one of functionals, entropy_gap, bregman, sup_norm".into(),
            })
    }
}

/// `n` equally spaced points on `[0, end]`.
pub fn uniform_grid(end: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    (0..n).map(|i| end * i as f64 / (n - 1) as f64).collect()
}

/// `n` log-spaced points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < lo < hi, got lo = {lo}, hi = {hi}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 points, got {n}"
        )));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[n - 1] = hi;
    Ok(grid)
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub model: SurvivalModel,
    pub u_grid: Vec<f64>,
    /// Order for `qnorm_q`. Defaults to the target order (`1 - 1/a` when
    /// `a > 2`, else 1); the Weibull branch only accepts 1.
    pub q: Option<f64>,
    pub metrics: Vec<Metric>,
    /// Points for the sup distance; defaults to 1001 points on `[0, 100]`.
    pub grid: Option<Vec<f64>>,
    pub rel_tol: f64,
}

impl SweepConfig {
    pub fn new(model: SurvivalModel, u_grid: Vec<f64>) -> Self {
        Self {
            model,
            u_grid,
            q: None,
            metrics: Metric::ALL.to_vec(),
            grid: None,
            rel_tol: DEFAULT_REL_TOL,
        }
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = Some(q);
        self
    }

    pub fn with_metrics(mut self, metrics: &[Metric]) -> Self {
        self.metrics = metrics.to_vec();
        self
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    fn wants(&self, m: Metric) -> bool {
        self.metrics.contains(&m)
    }

    fn validate(&self) -> Result<()> {
        if self.u_grid.is_empty() {
            return Err(Error::InvalidParameter("threshold grid is empty".into()));
        }
        for w in self.u_grid.windows(2) {
            if w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less) {
                return Err(Error::InvalidParameter(format!(
                    "thresholds must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for &u in &self.u_grid {
            if !(u.is_finite() && u > 0.0) || !self.model.ln_survival(u).is_finite() {
                return Err(Error::Domain(format!(
                    "threshold {u} lies outside the support of {}",
                    self.model
                )));
            }
        }
        if let Some(grid) = &self.grid {
            if grid.is_empty() || grid.iter().any(|z| !(z.is_finite() && *z >= 0.0)) {
                return Err(Error::InvalidParameter(
                    "evaluation grid must be nonempty with finite points >= 0".into(),
                ));
            }
        }
        Integrator::new(self.rel_tol)?;
        Ok(())
    }
}

/// One sweep row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub u: f64,
    pub q: f64,
    /// Quadrature of the normalized excess curve.
    pub computed: Functionals,
    pub predicted: Functionals,
    /// Target solution, when the tail admits one (`a > 2` or Weibull).
    pub target_solution: Option<MaxEntSolution>,
    /// The target's `(∫G*^q, θ, μ, H1)` laid out like `computed`.
    pub target: Functionals,
    pub rel_err_predicted: Functionals,
    pub rel_err_target: Functionals,
    pub entropy_gap: Quantity,
    pub bregman: Quantity,
    pub sup_norm: Quantity,
}

struct Branch {
    q: f64,
    predicted: Functionals,
    target_solution: Option<MaxEntSolution>,
    target: Functionals,
}

fn branch(model: &SurvivalModel, q: Option<f64>) -> Result<Branch> {
    match model.tail() {
        TailClass::Frechet { a, .. } => {
            let target_solution = maxent_target_frechet(*a).ok();
            let q = q.unwrap_or_else(|| target_solution.map_or(1.0, |s| s.q()));
            let predicted = predict_frechet_normalized(*a, q)?;
            let target = match target_solution {
                Some(sol) => {
                    let c = forward_constraints(&sol);
                    // ∫G*^q of the target at the sweep order: (1+z)^{-aq}
                    let qnorm = if a * q > 1.0 {
                        Quantity::Value(1.0 / (a * q - 1.0))
                    } else {
                        Quantity::Divergent
                    };
                    Functionals {
                        qnorm_q: qnorm,
                        onenorm: Quantity::Value(c.theta),
                        moment: Quantity::Value(c.mu),
                        shannon: Quantity::Unavailable,
                    }
                }
                None => Functionals::UNAVAILABLE,
            };
            Ok(Branch {
                q,
                predicted,
                target_solution,
                target,
            })
        }
        TailClass::Weibull { xi, .. } => {
            if let Some(q) = q {
                if (q - 1.0).abs() > 1e-12 {
                    return Err(Error::Domain(format!(
                        "Weibull-branch sweeps use q = 1, got {q}"
                    )));
                }
            }
            let sol = maxent_target_gumbel(*xi)?;
            let c = forward_constraints(&sol);
            Ok(Branch {
                q: 1.0,
                predicted: predict_weibull_normalized(*xi)?,
                target_solution: Some(sol),
                target: Functionals {
                    qnorm_q: Quantity::Value(c.theta),
                    onenorm: Quantity::Value(c.theta),
                    moment: Quantity::Value(c.mu),
                    shannon: Quantity::Value(c.entropy_stat),
                },
            })
        }
    }
}

/// `(∫G^q, ∫G, ∫zG, -∫G ln G)` by quadrature; infinite integrals become
/// [`Quantity::Divergent`].
pub fn curve_functionals<C: Curve + ?Sized>(
    curve: &C,
    q: f64,
    integ: &Integrator,
) -> Result<Functionals> {
    let onenorm = Quantity::from_result(integ.integrate(curve).map(|r| r.value))?;
    let qnorm_q = if q == 1.0 {
        onenorm
    } else {
        Quantity::from_result(integ.q_norm_q(curve, q))?
    };
    Ok(Functionals {
        qnorm_q,
        onenorm,
        moment: Quantity::from_result(integ.first_moment(curve))?,
        shannon: Quantity::from_result(integ.shannon_entropy(curve))?,
    })
}

/// `H_q(G*) - H_q(g)` at the order of `sol`.
fn entropy_gap(curve: &ExcessCurve, sol: &MaxEntSolution, integ: &Integrator) -> Result<Quantity> {
    if sol.is_shannon() {
        let h_g = Quantity::from_result(integ.shannon_entropy(curve))?;
        Ok(match h_g {
            Quantity::Value(h) => Quantity::Value(forward_constraints(sol).entropy_stat - h),
            other => other,
        })
    } else {
        let q = sol.q();
        let norm_g = Quantity::from_result(integ.q_norm_q(curve, q))?;
        Ok(match norm_g {
            Quantity::Value(n) => {
                let star = forward_constraints(sol).entropy_stat;
                Quantity::Value(tsallis_from_q_norm(star, q) - tsallis_from_q_norm(n, q))
            }
            other => other,
        })
    }
}

fn sweep_row(
    config: &SweepConfig,
    branch: &Branch,
    grid: &[f64],
    u: f64,
) -> Result<FunctionalReport> {
    let integ = Integrator::new(config.rel_tol)?;
    let spec = ExcessSpec::normalized(config.model.clone(), u)?;
    let curve = excess_survival(&spec);

    let computed = if config.wants(Metric::Functionals) {
        curve_functionals(&curve, branch.q, &integ)?
    } else {
        Functionals::UNAVAILABLE
    };
    let (entropy_gap, bregman) = match &branch.target_solution {
        Some(sol) => (
            if config.wants(Metric::EntropyGap) {
                entropy_gap(&curve, sol, &integ)?
            } else {
                Quantity::Unavailable
            },
            if config.wants(Metric::Bregman) {
                Quantity::from_result(bregman_divergence_tol(&curve, sol, config.rel_tol))?
            } else {
                Quantity::Unavailable
            },
        ),
        None => (Quantity::Unavailable, Quantity::Unavailable),
    };
    let sup_norm = if config.wants(Metric::SupNorm) {
        let limit = limit_gpd(config.model.tail())?;
        Quantity::Value(sup_distance(&curve, &limit, grid)?)
    } else {
        Quantity::Unavailable
    };

    Ok(FunctionalReport {
        u,
        q: branch.q,
        computed,
        predicted: branch.predicted,
        target_solution: branch.target_solution,
        target: branch.target,
        rel_err_predicted: computed.rel_error(&branch.predicted),
        rel_err_target: computed.rel_error(&branch.target),
        entropy_gap,
        bregman,
        sup_norm,
    })
}

/// One report per threshold, in threshold order. Rows run in parallel.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<FunctionalReport>> {
    config.validate()?;
    let branch = branch(&config.model, config.q)?;
    let default_grid;
    let grid = match &config.grid {
        Some(g) => g.as_slice(),
        None => {
            default_grid = uniform_grid(100.0, 1001);
            default_grid.as_slice()
        }
    };
    config
        .u_grid
        .par_iter()
        .map(|&u| sweep_row(config, &branch, grid, u))
        .collect()
}

/// Right-continuous step survival `#{y_i > z} / k` of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSurvival {
    sorted: Vec<f64>,
}

impl EmpiricalSurvival {
    pub fn new(mut sample: Vec<f64>) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InsufficientData {
                found: 0,
                required: 1,
            });
        }
        if let Some(&bad) = sample.iter().find(|y| !(y.is_finite() && **y >= 0.0)) {
            return Err(Error::Domain(format!(
                "sample values must be finite and >= 0, got {bad}"
            )));
        }
        sample.sort_by(f64::total_cmp);
        Ok(Self { sorted: sample })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `∫ S_k = mean(y)`, exactly.
    pub fn onenorm(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.len() as f64
    }

    /// `∫ z S_k(z) dz = mean(y²) / 2`, exactly.
    pub fn moment(&self) -> f64 {
        self.sorted.iter().map(|y| y * y).sum::<f64>() / (2.0 * self.len() as f64)
    }
}

impl Curve for EmpiricalSurvival {
    fn eval(&self, z: f64) -> f64 {
        let at_or_below = self.sorted.partition_point(|&y| y <= z);
        (self.len() - at_or_below) as f64 / self.len() as f64
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    fn from_terms(terms: impl Iterator<Item = f64> + Clone, k: usize) -> Self {
        let n = k as f64;
        let mean = terms.clone().sum::<f64>() / n;
        let var = terms.map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1.0);
        Self {
            value: mean,
            std_error: (var / n).sqrt(),
        }
    }

    /// `|value - reference|` in standard errors.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.value - reference).abs() / self.std_error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub model: String,
    pub u: f64,
    pub n: usize,
    pub seed: u64,
    pub generator: &'static str,
    pub exceedances: usize,
    /// Normalization scale: `Y = (X - u) / scale`.
    pub scale: f64,
    pub onenorm: Estimate,
    pub moment: Estimate,
    /// Quadrature of the same normalized excess curve.
    pub quadrature: Functionals,
    pub predicted: Functionals,
}

pub const MIN_SAMPLES: usize = 1000;
pub const MIN_EXCEEDANCES: usize = 50;

/// Draws `n` inverse-transform samples, keeps the excesses over `u`,
/// normalizes them per tail class and integrates their empirical survival.
pub fn monte_carlo_check(
    model: &SurvivalModel,
    u: f64,
    n: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    let spec = ExcessSpec::normalized(model.clone(), u)?;
    let scale = spec.scale();
    let s_u = model.survival(u);

    // X > u exactly when the uniform falls below S(u); only those are inverted.
    let mut rng = SplitMix64::new(seed);
    let mut excesses = Vec::new();
    for _ in 0..n {
        let p = rng.next_open_closed();
        if p < s_u {
            let x = model.quantile(p)?;
            excesses.push((x - u).max(0.0) / scale);
        }
    }
    if excesses.len() < MIN_EXCEEDANCES {
        return Err(Error::InsufficientData {
            found: excesses.len(),
            required: MIN_EXCEEDANCES,
        });
    }
    let k = excesses.len();
    let onenorm = Estimate::from_terms(excesses.iter().copied(), k);
    let moment = Estimate::from_terms(excesses.iter().map(|y| 0.5 * y * y), k);

    let integ = Integrator::default();
    let curve = excess_survival(&spec);
    let quadrature = Functionals {
        qnorm_q: Quantity::Unavailable,
        onenorm: Quantity::from_result(integ.integrate(&curve).map(|r| r.value))?,
        moment: Quantity::from_result(integ.first_moment(&curve))?,
        shannon: Quantity::Unavailable,
    };
    let predicted = match model.tail() {
        TailClass::Frechet { a, .. } => predict_frechet_normalized(*a, 1.0)?,
        TailClass::Weibull { xi, .. } => predict_weibull_normalized(*xi)?,
    };

    Ok(MonteCarloReport {
        model: model.to_string(),
        u,
        n,
        seed,
        generator: GENERATOR_NAME,
        exceedances: k,
        scale,
        onenorm,
        moment,
        quadrature,
        predicted,
    })
}
