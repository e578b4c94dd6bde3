//! Log-log slope estimators for limits as `z -> 0`.
//!
//! Every estimator samples along a geometric sequence of radii, reduces each
//! circle to one number (angular mean, minimum or maximum), and fits the
//! tail of the resulting sequence by least squares. The default fit carries a
//! `log(-log r^2)` regressor next to `log r`, so polylogarithmic factors are
//! absorbed exactly instead of biasing the slope by `O(1 / log r)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fmt_point, hermitian_eigenvalues, log_det_hpd, CMatrix};
use crate::models::MetricModel;
use crate::weights::Weight;

pub const DEFAULT_TOLERANCE: f64 = 1e-2;
pub const MEMBERSHIP_MARGIN: f64 = 1e-3;

/// Geometric radii `r0 * sigma^i`, `i < count`, each sampled at `angles`
/// points on its circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialSampleSchedule {
    pub r0: f64,
    pub sigma: f64,
    pub count: usize,
    pub angles: usize,
}

impl Default for RadialSampleSchedule {
    fn default() -> Self {
        RadialSampleSchedule {
            r0: 0.1,
            sigma: 0.5,
            count: 18,
            angles: 16,
        }
    }
}

impl RadialSampleSchedule {
    pub fn new(r0: f64, sigma: f64, count: usize, angles: usize) -> Result<Self> {
        let s = RadialSampleSchedule {
            r0,
            sigma,
            count,
            angles,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("schedule: {msg}")));
        if !(self.r0 > 0.0 && self.r0 < 1.0) {
            return bad("r0 must lie in (0, 1)");
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return bad("sigma must lie in (0, 1)");
        }
        if self.count < 8 {
            return bad("count must be at least 8");
        }
        if self.angles < 4 {
            return bad("angles must be at least 4");
        }
        if self.smallest_radius() <= 1e-8 {
            return bad("smallest radius must exceed 1e-8");
        }
        Ok(())
    }

    pub fn smallest_radius(&self) -> f64 {
        self.r0 * self.sigma.powi(self.count as i32 - 1)
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| self.r0 * self.sigma.powi(i as i32))
            .collect()
    }

    /// Sample points on the circle of radius `r`, offset by half a step from
    /// the real axis.
    pub fn circle(&self, r: f64) -> Vec<Complex64> {
        (0..self.angles)
            .map(|j| {
                let theta = 2.0 * PI * (j as f64 + 0.5) / self.angles as f64;
                Complex64::from_polar(r, theta)
            })
            .collect()
    }

    /// Index of the first radius used by tail regressions.
    pub fn tail_start(&self) -> usize {
        self.count / 2
    }
}

impl FromStr for RadialSampleSchedule {
    type Err = Error;

    /// Parses `r0,sigma,count,angles`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::Parse(format!("schedule must be r0,sigma,count,angles: {s:?}"));
        if parts.len() != 4 {
            return Err(bad());
        }
        RadialSampleSchedule::new(
            parts[0].parse().map_err(|_| bad())?,
            parts[1].parse().map_err(|_| bad())?,
            parts[2].parse().map_err(|_| bad())?,
            parts[3].parse().map_err(|_| bad())?,
        )
    }
}

impl fmt::Display for RadialSampleSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.r0, self.sigma, self.count, self.angles
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SlopeModel {
    /// `y = s log r + b`
    Linear,
    /// `y = s log r + p log(-log r^2) + b`
    #[default]
    PolylogCorrected,
}

impl SlopeModel {
    fn regressors(self, r: f64) -> Vec<f64> {
        let lr = r.ln();
        match self {
            SlopeModel::Linear => vec![lr, 1.0],
            SlopeModel::PolylogCorrected => vec![lr, (-2.0 * lr).ln(), 1.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub model: SlopeModel,
    /// Residual threshold for a `converged` verdict.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            model: SlopeModel::default(),
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub value: f64,
    pub slope_fit: f64,
    /// Coefficient of the `log(-log r^2)` regressor, when fitted.
    pub polylog_fit: Option<f64>,
    pub residual: f64,
    pub samples_used: usize,
    pub verdict: Verdict,
    /// `(r, reduced sample)` per radius.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<(f64, f64)>,
}

impl EstimateReport {
    pub fn converged(&self) -> bool {
        self.verdict == Verdict::Converged
    }
}

#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    /// Largest absolute deviation of the fit over the data.
    pub residual: f64,
}

/// Ordinary least squares on the rows of `xs`.
pub fn least_squares(xs: &[Vec<f64>], ys: &[f64]) -> Result<LeastSquares> {
    let n = ys.len();
    let k = xs.first().map_or(0, Vec::len);
    if n < k || k == 0 || xs.len() != n {
        return Err(Error::InvalidArgument(format!(
            "least squares needs at least {k} samples, got {n}"
        )));
    }
    let a = DMatrix::from_fn(n, k, |i, j| xs[i][j]);
    let b = DVector::from_column_slice(ys);
    let svd = a.clone().svd(true, true);
    let coef = svd
        .solve(&b, 1e-12)
        .map_err(|e| Error::InvalidArgument(format!("least squares: {e}")))?;
    let fitted = &a * &coef;
    let residual = (fitted - b).amax();
    Ok(LeastSquares {
        coefficients: coef.iter().copied().collect(),
        residual,
    })
}

/// Fits the tail of `(r, y)` samples against `log r` (plus the polylog
/// regressor) and reports the slope.
pub fn fit_radial(
    samples: Vec<(f64, f64)>,
    start: usize,
    opts: &FitOptions,
) -> Result<EstimateReport> {
    let tail = &samples[start.min(samples.len())..];
    let xs: Vec<Vec<f64>> = tail
        .iter()
        .map(|(r, _)| opts.model.regressors(*r))
        .collect();
    let ys: Vec<f64> = tail.iter().map(|(_, y)| *y).collect();
    let fit = least_squares(&xs, &ys)?;
    let slope = fit.coefficients[0];
    let polylog_fit = match opts.model {
        SlopeModel::Linear => None,
        SlopeModel::PolylogCorrected => Some(fit.coefficients[1]),
    };
    let verdict = if fit.residual < opts.tolerance && slope.is_finite() {
        Verdict::Converged
    } else {
        Verdict::Inconclusive
    };
    Ok(EstimateReport {
        value: slope,
        slope_fit: slope,
        polylog_fit,
        residual: fit.residual,
        samples_used: tail.len(),
        verdict,
        samples,
    })
}

/// `lim log f / log|z|` for a positive field, from angular means of `log f`.
pub fn log_slope_limit<F>(
    f: F,
    sched: &RadialSampleSchedule,
    opts: &FitOptions,
) -> Result<EstimateReport>
where
    F: Fn(Complex64) -> f64,
{
    sched.validate()?;
    let mut samples = Vec::with_capacity(sched.count);
    for r in sched.radii() {
        let mut acc = 0.0;
        for z in sched.circle(r) {
            let v = f(z);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositive {
                    point: fmt_point(z),
                    value: v,
                });
            }
            acc += v.ln();
        }
        samples.push((r, acc / sched.angles as f64));
    }
    fit_radial(samples, sched.tail_start(), opts)
}

/// `-1/2 lim log det H / log|z|`.
pub fn gamma_estimate(
    mm: &MetricModel,
    sched: &RadialSampleSchedule,
    opts: &FitOptions,
) -> Result<EstimateReport> {
    sched.validate()?;
    let mut samples = Vec::with_capacity(sched.count);
    for r in sched.radii() {
        let mut acc = 0.0;
        for z in sched.circle(r) {
            acc += log_det_hpd(&mm.evaluate(z)?, z)?;
        }
        samples.push((r, acc / sched.angles as f64));
    }
    let mut rep = fit_radial(samples, sched.tail_start(), opts)?;
    rep.value = -0.5 * rep.slope_fit;
    Ok(rep)
}

/// Lelong number `liminf u / log|z|`: per circle the minimum of
/// `u / log r` (the maximum of `u`), then the tail slope.
pub fn lelong_estimate<F>(
    u: F,
    sched: &RadialSampleSchedule,
    opts: &FitOptions,
) -> Result<EstimateReport>
where
    F: Fn(Complex64) -> f64,
{
    sched.validate()?;
    let mut samples = Vec::with_capacity(sched.count);
    for r in sched.radii() {
        let lr = r.ln();
        let mut best = f64::INFINITY;
        for z in sched.circle(r) {
            let v = u(z);
            if !v.is_finite() {
                return Err(Error::NonPositive {
                    point: fmt_point(z),
                    value: v,
                });
            }
            best = best.min(v / lr);
        }
        samples.push((r, best * lr));
    }
    fit_radial(samples, sched.tail_start(), opts)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipVerdict {
    pub numeric: bool,
    pub exact: bool,
    pub slope: f64,
}

impl MembershipVerdict {
    pub fn agree(&self) -> bool {
        self.numeric == self.exact
    }
}

/// Whether `z^k e` lies in `P_a` of a rank-one model, decided both from the
/// fitted growth rate of `|z^k e|_h` and from the exact rule
/// `k >= -floor(a - c)`.
pub fn membership_test(
    mm: &MetricModel,
    k: i64,
    a: &Weight,
    sched: &RadialSampleSchedule,
    opts: &FitOptions,
) -> Result<MembershipVerdict> {
    if mm.rank() != 1 {
        return Err(Error::InvalidArgument(
            "membership test needs a rank-one model".into(),
        ));
    }
    let c = mm.raw_gamma()?;
    let exact = Weight::from_integer(k) >= -Weight::from_integer((a - &c).floor());
    let kf = k as f64;
    let rep = log_slope_limit(
        |z| {
            // |z^k e|_h computed in the log domain
            mm.evaluate(z)
                .map(|h| (kf * z.norm().ln() + 0.5 * h[(0, 0)].re.ln()).exp())
                .unwrap_or(f64::NAN)
        },
        sched,
        opts,
    )?;
    let slope = rep.slope_fit;
    Ok(MembershipVerdict {
        numeric: slope + a.to_f64() >= -MEMBERSHIP_MARGIN,
        exact,
        slope,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolylogBound {
    pub bounded: bool,
    /// Fitted power of `r` in the per-circle maxima of `H`.
    pub power: f64,
    /// Fitted power of `-log r^2`.
    pub polylog: f64,
    pub max_value: f64,
    pub samples: Vec<(f64, f64)>,
}

fn section_vector(orders: &[Option<i64>], z: Complex64) -> Result<CMatrix> {
    let mut v = CMatrix::zeros(orders.len(), 1);
    for (i, k) in orders.iter().enumerate() {
        if let Some(k) = k {
            let k = i32::try_from(*k)
                .map_err(|_| Error::InvalidArgument("order out of range".into()))?;
            v[(i, 0)] = z.powi(k);
        }
    }
    Ok(v)
}

/// Checks boundedness near 0 of `H = |f|_h^2 |z|^{2a} (-log|z|^2)^{-N}` for
/// the section `f = sum z^{k_i} e_i` of the model's coordinate frame.
///
/// Bounded means the per-circle maxima either decay like a positive power
/// of `r`, or carry no power and at most a non-positive polylog power.
pub fn polylog_bounded_check(
    mm: &MetricModel,
    orders: &[Option<i64>],
    a: &Weight,
    n: i32,
    sched: &RadialSampleSchedule,
) -> Result<PolylogBound> {
    sched.validate()?;
    if orders.len() != mm.rank() {
        return Err(Error::LengthMismatch {
            expected: mm.rank(),
            got: orders.len(),
        });
    }
    let af = a.to_f64();
    let mut samples = Vec::with_capacity(sched.count);
    for r in sched.radii() {
        let t = -2.0 * r.ln();
        let mut worst = 0.0f64;
        for z in sched.circle(r) {
            let h = mm.evaluate(z)?;
            let s = section_vector(orders, z)?;
            let norm2 = (s.adjoint() * h * s)[(0, 0)].re;
            let val = norm2 * r.powf(2.0 * af) * t.powi(-n);
            worst = worst.max(val);
        }
        samples.push((r, worst));
    }
    let max_value = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    if samples.iter().any(|s| !(s.1 > 0.0) || !s.1.is_finite()) {
        // zero section or overflow
        let bounded = samples.iter().all(|s| s.1.is_finite());
        return Ok(PolylogBound {
            bounded,
            power: 0.0,
            polylog: 0.0,
            max_value,
            samples,
        });
    }
    let logs: Vec<(f64, f64)> = samples.iter().map(|(r, v)| (*r, v.ln())).collect();
    let fit = fit_radial(logs, sched.tail_start(), &FitOptions::default())?;
    let power = fit.slope_fit;
    let polylog = fit.polylog_fit.unwrap_or(0.0);
    let bounded = power > MEMBERSHIP_MARGIN
        || (power.abs() <= MEMBERSHIP_MARGIN && polylog <= DEFAULT_TOLERANCE);
    Ok(PolylogBound {
        bounded,
        power,
        polylog,
        max_value,
        samples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakNormFit {
    pub c: f64,
    pub m: f64,
    pub holds: bool,
    /// Fitted powers of `r` in the extreme eigenvalues; must vanish.
    pub power_drift: [f64; 2],
    /// `(r, smallest eigenvalue, largest eigenvalue)` per radius.
    pub samples: Vec<(f64, f64, f64)>,
}

/// Fits the two-sided polylog sandwich
/// `C^{-1} L^{-M} <= H(h, v') <= C L^M`, `L = -log|z|`, for the compatible
/// frame rescaled by `|z|^{b_i}`.
pub fn weak_norm_fit(mm: &MetricModel, sched: &RadialSampleSchedule) -> Result<WeakNormFit> {
    sched.validate()?;
    let mut samples = Vec::with_capacity(sched.count);
    for r in sched.radii() {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for z in sched.circle(r) {
            let frame = mm.compatible_frame(z)?;
            let h = mm.evaluate(z)?;
            let scale: Vec<f64> = frame.degrees.iter().map(|b| r.powf(b.to_f64())).collect();
            let gram = frame.vectors.adjoint() * h * &frame.vectors;
            let n = gram.nrows();
            let rescaled = CMatrix::from_fn(n, n, |i, j| gram[(i, j)] * scale[i] * scale[j]);
            let ev = hermitian_eigenvalues(&rescaled);
            lo = lo.min(ev[0]);
            hi = hi.max(ev[n - 1]);
        }
        if !(lo > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "circle of radius {r:e}"
            )));
        }
        samples.push((r, lo, hi));
    }
    // regress against log r and log L
    let start = sched.tail_start();
    let xs: Vec<Vec<f64>> = samples[start..]
        .iter()
        .map(|(r, _, _)| vec![r.ln(), (-r.ln()).ln(), 1.0])
        .collect();
    let fit_lo = least_squares(
        &xs,
        &samples[start..]
            .iter()
            .map(|s| s.1.ln())
            .collect::<Vec<_>>(),
    )?;
    let fit_hi = least_squares(
        &xs,
        &samples[start..]
            .iter()
            .map(|s| s.2.ln())
            .collect::<Vec<_>>(),
    )?;
    let power_drift = [fit_lo.coefficients[0], fit_hi.coefficients[0]];
    let m = fit_hi.coefficients[1].max(-fit_lo.coefficients[1]).max(0.0);
    let mut log_c: f64 = 0.0;
    for (r, lo, hi) in &samples {
        let log_l = (-r.ln()).ln();
        log_c = log_c.max(hi.ln() - m * log_l).max(-lo.ln() - m * log_l);
    }
    let c = log_c.exp();
    let holds =
        c.is_finite() && m.is_finite() && power_drift.iter().all(|p| p.abs() <= DEFAULT_TOLERANCE);
    Ok(WeakNormFit {
        c,
        m,
        holds,
        power_drift,
        samples,
    })
}
