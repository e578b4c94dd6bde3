//! Numeric verifiers for the area-infimum inequalities, simultaneous
//! Diophantine approximation, and cyclic isotypic projection.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Slack for the inequality checks.
pub const INEQUALITY_SLACK: f64 = 1e-6;
const QUAD_TOLERANCE: f64 = 1e-10;
const QUAD_MAX_DEPTH: u32 = 48;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BrResult {
    pub w: [f64; 2],
    pub r: f64,
    /// `B_r(w)`
    pub value: f64,
    /// `(3/2) log r - (1/2) log pi - 1/2`
    pub area_bound: f64,
    /// `(3/2) log(|w|/2) - (1/2) log pi - 1/2`; `-inf` at `w = 0`.
    pub distance_bound: f64,
    /// Radius of the optimal sublevel disk `{ |w - z| < s }`.
    pub threshold: f64,
}

impl BrResult {
    pub fn satisfies_bounds(&self) -> bool {
        self.value >= self.area_bound.max(self.distance_bound) - INEQUALITY_SLACK
    }
}

/// Area of `B(w, s) ∩ B(0, r)` with `d = |w|`.
pub fn lens_area(d: f64, s: f64, r: f64) -> f64 {
    if s <= 0.0 || d >= s + r {
        return 0.0;
    }
    if d <= (r - s).abs() {
        let m = s.min(r);
        return PI * m * m;
    }
    let a1 = ((d * d + s * s - r * r) / (2.0 * d * s))
        .clamp(-1.0, 1.0)
        .acos();
    let a2 = ((d * d + r * r - s * s) / (2.0 * d * r))
        .clamp(-1.0, 1.0)
        .acos();
    let k = ((-d + s + r) * (d + s - r) * (d - s + r) * (d + s + r)).max(0.0);
    s * s * a1 + r * r * a2 - 0.5 * k.sqrt()
}

/// Angle subtended inside `B(0, r)` by the circle of radius `rho` about a
/// point at distance `d` from the origin.
fn arc_measure(d: f64, rho: f64, r: f64) -> f64 {
    if rho + d <= r {
        2.0 * PI
    } else if rho <= d - r || rho >= r + d {
        0.0
    } else {
        2.0 * ((rho * rho + d * d - r * r) / (2.0 * rho * d))
            .clamp(-1.0, 1.0)
            .acos()
    }
}

/// `0`, the kinks of the arc measure below `s`, and `s`.
fn arc_breakpoints(d: f64, r: f64, s: f64) -> Vec<f64> {
    let mut cuts = vec![0.0];
    for k in [(r - d).abs(), r + d] {
        if k > 0.0 && k < s {
            cuts.push(k);
        }
    }
    cuts.push(s);
    cuts
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "no convergence on [{a:e}, {b:e}]"
        )));
    }
    Ok(
        adaptive(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)?
            + adaptive(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)?,
    )
}

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
///
/// The smoothstep substitution `x = a + (b - a)(3t^2 - 2t^3)` flattens
/// square-root behaviour at both endpoints.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let len = b - a;
    let f = |t: f64| f(a + len * t * t * (3.0 - 2.0 * t)) * 6.0 * len * t * (1.0 - t);
    let (a, b) = (0.0, 1.0);
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(&f, a, fa, b, fb);
    adaptive(&f, a, fa, b, fb, m, fm, whole, tol, QUAD_MAX_DEPTH)
}

/// `B_r(w)`: the infimum is attained on the sublevel set
/// `{ z in B(0, r) : |w - z| < s }` of area `r^3`, integrated in polar
/// coordinates about `w`.
pub fn br_value(w: Complex64, r: f64) -> Result<BrResult> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "radius must lie in (0, 1), got {r}"
        )));
    }
    if !(w.re.is_finite() && w.im.is_finite()) {
        return Err(Error::InvalidArgument("w must be finite".into()));
    }
    let d = w.norm();
    let target = r.powi(3);
    let (mut lo, mut hi) = ((d - r).max(0.0), d + r);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lens_area(d, mid, r) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let s = 0.5 * (lo + hi);

    let integrand = |rho: f64| {
        if rho <= 0.0 {
            0.0
        } else {
            rho * rho.ln() * arc_measure(d, rho, r) / target
        }
    };
    let mut value = 0.0;
    let cuts = arc_breakpoints(d, r, s);
    for pair in cuts.windows(2) {
        value += integrate(integrand, pair[0], pair[1], QUAD_TOLERANCE)?;
    }
    let tail = -0.5 * PI.ln() - 0.5;
    Ok(BrResult {
        w: [w.re, w.im],
        r,
        value,
        area_bound: 1.5 * r.ln() + tail,
        distance_bound: 1.5 * (d / 2.0).ln() + tail,
        threshold: s,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogDistanceInequality {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Both sides of
/// `log|w - z| <= (2/3)(log|z| / log r) B_r(w) + (1/3) log pi + 1/3 + 2 log 2`.
pub fn log_distance_inequality(
    z: Complex64,
    w: Complex64,
    r: f64,
) -> Result<LogDistanceInequality> {
    let b = br_value(w, r)?;
    log_distance_inequality_with(&b, z)
}

/// Same as [`log_distance_inequality`] with a precomputed `B_r(w)`.
pub fn log_distance_inequality_with(b: &BrResult, z: Complex64) -> Result<LogDistanceInequality> {
    let w = Complex64::new(b.w[0], b.w[1]);
    let az = z.norm();
    if !(b.r <= az && az < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need r <= |z| < 1, got |z| = {az}"
        )));
    }
    if w.norm() > 2.0 {
        return Err(Error::InvalidArgument(format!(
            "need |w| <= 2, got {}",
            w.norm()
        )));
    }
    let lhs = (w - z).norm().ln();
    let rhs =
        2.0 / 3.0 * (az.ln() / b.r.ln()) * b.value + PI.ln() / 3.0 + 1.0 / 3.0 + 2.0 * 2f64.ln();
    Ok(LogDistanceInequality {
        lhs,
        rhs,
        holds: lhs <= rhs + INEQUALITY_SLACK,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiophantineResult {
    pub alpha: Vec<f64>,
    pub q: f64,
    pub m: u64,
    /// `R_m(alpha)`
    pub remainders: Vec<f64>,
    /// `delta_m(alpha)`
    pub delta: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `R_m(alpha)`: signed distances of `m alpha_i` to the nearest integers.
pub fn remainders(alpha: &[f64], m: u64) -> Vec<f64> {
    alpha
        .iter()
        .map(|a| {
            let x = m as f64 * a;
            x - x.round()
        })
        .collect()
}

/// First `m <= q` with `delta_m(alpha) <= q^{-1/l}`; if none exists the best
/// `m` is returned with `holds = false`.
pub fn diophantine_search(alpha: &[f64], q: f64) -> Result<DiophantineResult> {
    if alpha.is_empty() || alpha.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidArgument(
            "alpha must be a non-empty finite vector".into(),
        ));
    }
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("q must exceed 1, got {q}")));
    }
    let bound = q.powf(-1.0 / alpha.len() as f64);
    let top = q.floor() as u64;
    let mut best: Option<(u64, Vec<f64>, f64)> = None;
    for m in 1..=top {
        let rem = remainders(alpha, m);
        let delta = rem.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let better = best.as_ref().is_none_or(|b| delta < b.2);
        if delta <= bound {
            best = Some((m, rem, delta));
            break;
        }
        if better {
            best = Some((m, rem, delta));
        }
    }
    let (m, remainders, delta) = best.expect("q > 1 gives at least m = 1");
    Ok(DiophantineResult {
        alpha: alpha.to_vec(),
        q,
        m,
        remainders,
        delta,
        bound,
        holds: delta <= bound,
    })
}

/// `(1/m) sum_l zeta^{-lj} u(zeta^l w)` with `zeta = exp(2 pi i / m)`: the
/// `w^j`-isotypic part of `u` at `w`.
pub fn isotypic_project<F>(u: F, w: Complex64, m: u32, j: u32) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    if m == 0 || j >= m {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= j < m, got j = {j}, m = {m}"
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for l in 0..m {
        let angle = 2.0 * PI * l as f64 / m as f64;
        let zeta_l = Complex64::from_polar(1.0, angle);
        let twist = Complex64::from_polar(1.0, -angle * j as f64);
        acc += twist * u(zeta_l * w);
    }
    Ok(acc / m as f64)
}

/// All `m` isotypic parts of `u` at `w`, indexed by `j`.
pub fn isotypic_components<F>(u: F, w: Complex64, m: u32) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Complex64,
{
    (0..m).map(|j| isotypic_project(&u, w, m, j)).collect()
}
