//! Adaptive Gauss–Kronrod quadrature over `[0, ∞)`.
//!
//! The half-line is cut into doubling segments `[0, 1], [1, 2], [2, 4], ...`.
//! Each segment is integrated with an adaptive 21-point Gauss–Kronrod rule.
//! On a power tail `z^{-p}` the segment contributions form a geometric
//! sequence with ratio `2^{1-p}`, so the remainder past the last segment is
//! extrapolated from the observed ratio. A ratio that stays at or above one
//! signals divergence.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::DecayHint;
use crate::error::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-9;
pub const MIN_REL_TOL: f64 = 1e-12;
pub const MAX_REL_TOL: f64 = 1e-2;

const MAX_SEGMENTS: usize = 1000;
const MIN_SEGMENTS: usize = 4;
const MAX_SUBDIVISIONS: usize = 400;
// segment ratio at or above this, sustained, counts as non-decaying
const DIVERGENCE_RATIO: f64 = 0.999;
const DIVERGENCE_RUN: usize = 6;
const DIVERGENCE_MIN_SEGMENT: usize = 30;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Outcome of a successful integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    /// Estimated absolute error.
    pub error_estimate: f64,
    pub nodes_used: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn eval_finite<F: Fn(f64) -> f64>(f: &F, z: f64) -> Result<f64> {
    let v = f(z);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(z))
    }
}

/// One 21-point Gauss–Kronrod panel with the QUADPACK error heuristic.
fn gk21<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Panel> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = eval_finite(f, center)?;
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval_finite(f, center - dx)?;
        let f2 = eval_finite(f, center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel {
        lo,
        hi,
        value,
        error,
    })
}

/// Adaptive bisection on `[lo, hi]` until the summed error estimate meets
/// `max(abs_tol, rel_tol * |value|)` or the panel budget runs out.
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<QuadratureResult> {
    let first = gk21(f, lo, hi)?;
    let mut value = first.value;
    let mut error = first.error;
    let mut nodes = 21;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    while error > abs_tol.max(rel_tol * value.abs()) && heap.len() < MAX_SUBDIVISIONS {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // cannot split further in floating point
            heap.push(worst);
            break;
        }
        let left = gk21(f, worst.lo, mid)?;
        let right = gk21(f, mid, worst.hi)?;
        nodes += 42;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // re-sum to shed the drift of the running updates
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(QuadratureResult {
        value,
        error_estimate: error,
        nodes_used: nodes,
    })
}

pub(crate) fn check_rel_tol(rel_tol: f64) -> Result<()> {
    if !(MIN_REL_TOL..=MAX_REL_TOL).contains(&rel_tol) {
        return Err(Error::InvalidParameter(format!(
            "relative tolerance must lie in [{MIN_REL_TOL:e}, {MAX_REL_TOL:e}], got {rel_tol:e}"
        )));
    }
    Ok(())
}

/// `∫₀^∞ f(z) dz` to relative tolerance `rel_tol`.
pub fn integrate_fn<F: Fn(f64) -> f64>(
    f: F,
    hint: Option<DecayHint>,
    rel_tol: f64,
) -> Result<QuadratureResult> {
    integrate_fn_abs(f, hint, rel_tol, 0.0)
}

/// As [`integrate_fn`], but also accepts an absolute error of `abs_tol`.
/// Needed for integrands that are differences of nearly equal terms, whose
/// integral may vanish up to rounding.
pub fn integrate_fn_abs<F: Fn(f64) -> f64>(
    f: F,
    hint: Option<DecayHint>,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<QuadratureResult> {
    check_rel_tol(rel_tol)?;
    if !(abs_tol.is_finite() && abs_tol >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "absolute tolerance must be finite and >= 0, got {abs_tol:e}"
        )));
    }
    let tol_at = |scale: f64| abs_tol.max(rel_tol * scale.abs());
    let end = match hint {
        Some(DecayHint::Compact { end }) => Some(end),
        _ => None,
    };
    let extrapolate = !matches!(hint, Some(DecayHint::Exponential));

    let mut total = 0.0f64;
    let mut seg_error = 0.0f64;
    let mut nodes = 0usize;
    let mut prev_contrib: Option<f64> = None;
    let mut high_ratio_run = 0usize;
    let mut estimates: Vec<f64> = Vec::new();
    let mut small_run = 0usize;

    for k in 0..MAX_SEGMENTS {
        let lo = if k == 0 { 0.0 } else { 2f64.powi(k as i32 - 1) };
        let mut hi = 2f64.powi(k as i32);
        if let Some(end) = end {
            if lo >= end {
                break;
            }
            hi = hi.min(end);
        }
        let seg_tol = 0.125 * tol_at(total) * 0.5f64.powi(k.min(60) as i32);
        let seg = adaptive(&f, lo, hi, 0.25 * rel_tol, seg_tol)?;
        nodes += seg.nodes_used;
        total += seg.value;
        seg_error += seg.error_estimate;
        if !total.is_finite() {
            return Err(Error::Divergent {
                partial: total,
                reached: hi,
            });
        }
        let contrib = seg.value;

        let ratio = match prev_contrib {
            Some(p) if p != 0.0 => (contrib / p).abs(),
            Some(_) if contrib == 0.0 => 0.0,
            Some(_) => f64::INFINITY,
            None => f64::NAN,
        };
        prev_contrib = Some(contrib);

        if ratio >= DIVERGENCE_RATIO {
            high_ratio_run += 1;
        } else {
            high_ratio_run = 0;
        }
        if k >= DIVERGENCE_MIN_SEGMENT && high_ratio_run >= DIVERGENCE_RUN {
            return Err(Error::Divergent {
                partial: total,
                reached: hi,
            });
        }

        if let Some(end) = end {
            if hi >= end {
                return finish(total, seg_error, nodes, tol_at(total));
            }
            continue;
        }

        if !extrapolate {
            if contrib.abs() <= 0.05 * tol_at(total) {
                small_run += 1;
            } else {
                small_run = 0;
            }
            if k >= MIN_SEGMENTS && small_run >= 2 {
                return finish(total, seg_error, nodes, tol_at(total));
            }
            continue;
        }

        // remainder of a geometric tail with the observed ratio
        let remainder = if ratio.is_finite() && ratio < 1.0 {
            contrib * ratio / (1.0 - ratio)
        } else {
            f64::INFINITY
        };
        let estimate = total + remainder;
        estimates.push(estimate);
        let n = estimates.len();
        if k >= MIN_SEGMENTS && n >= 3 && estimate.is_finite() {
            let d1 = (estimates[n - 1] - estimates[n - 2]).abs();
            let d2 = (estimates[n - 2] - estimates[n - 3]).abs();
            let tol = tol_at(estimate);
            if tol > 0.0 && d1 <= 0.25 * tol && d2 <= 0.5 * tol {
                return finish(estimate, seg_error + d1, nodes, tol);
            }
            if estimate == 0.0 && total == 0.0 && contrib == 0.0 && k >= 10 {
                return finish(0.0, seg_error, nodes, 0.0);
            }
        }
    }
    Err(Error::NonConvergence {
        value: total,
        error: seg_error,
    })
}

fn finish(value: f64, error: f64, nodes: usize, tol: f64) -> Result<QuadratureResult> {
    if error > tol && error > f64::MIN_POSITIVE {
        return Err(Error::NonConvergence { value, error });
    }
    Ok(QuadratureResult {
        value,
        error_estimate: error,
        nodes_used: nodes,
    })
}
