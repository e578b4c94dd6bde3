//! Concrete Hermitian metrics on the trivial bundle over the punctured disk.
//!
//! A [`MetricModel`] is an expression tree. Leaves are the rank-one metrics
//! `|z|^{-2c} (-log|z|^2)^{-N}`; interior nodes combine them by direct sum,
//! tensor product, dual, holomorphic change of frame, cyclic pullback, and a
//! quarantined scalar perturbation used only as a negative control.
//!
//! Evaluation returns the Gram matrix `H` in the convention
//! `h(u, v) = v^* H u`, so a holomorphic frame change `u = G u'` acts as
//! `H' = G^* H G` and the Chern connection form is `H^{-1} dH`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::FilteredBundle;
use crate::error::{Error, Result};
use crate::estimators::{least_squares, RadialSampleSchedule};
use crate::linalg::{
    block_diag, endo_norm, fmt_point, hermitian_defect, hpd_condition, inverse, kron, CMatrix,
};
use crate::weights::Weight;

/// Exponent clamp for `exp` of log-domain metric values.
const LOG_CLAMP: f64 = 700.0;
/// Condition numbers above this are rejected by [`curvature`].
pub const MAX_CONDITION: f64 = 1e13;
pub const DEFAULT_STEP_RATIO: f64 = 1e-4;
pub const DEFAULT_DOMAIN_RADIUS: f64 = 0.5;
/// Largest curvature-norm trend still read as bounded.
pub const DEFAULT_TREND_TOLERANCE: f64 = 1e-2;

/// Square matrix of polynomials in `z`; entry `[i][j]` lists `[re, im]`
/// coefficients by increasing power.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolyMatrix(pub Vec<Vec<Vec<[f64; 2]>>>);

impl PolyMatrix {
    /// `I + z U`.
    pub fn unipotent(u: &[Vec<Complex64>]) -> Self {
        let n = u.len();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let c0 = if i == j { 1.0 } else { 0.0 };
                        vec![[c0, 0.0], [u[i][j].re, u[i][j].im]]
                    })
                    .collect()
            })
            .collect();
        PolyMatrix(rows)
    }

    /// Constant matrix.
    pub fn constant(m: &CMatrix) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .map(|j| vec![[m[(i, j)].re, m[(i, j)].im]])
                    .collect()
            })
            .collect();
        PolyMatrix(rows)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn eval(&self, z: Complex64) -> CMatrix {
        let n = self.dim();
        CMatrix::from_fn(n, n, |i, j| {
            // Horner
            self.0[i][j]
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, c| {
                    acc * z + Complex64::new(c[0], c[1])
                })
        })
    }

    fn validate(&self, rank: usize) -> Result<()> {
        if self.0.len() != rank || self.0.iter().any(|row| row.len() != rank) {
            return Err(Error::InvalidArgument(format!(
                "gauge matrix must be {rank}x{rank}"
            )));
        }
        let g0 = self.eval(Complex64::new(0.0, 0.0));
        if g0.determinant().norm() < 1e-12 {
            return Err(Error::SingularGauge("0".into()));
        }
        Ok(())
    }
}

/// Scalar function `rho` for the perturbation `H -> exp(-rho) H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// `coef * (log|z|)^power`
    LogPower {
        coef: f64,
        power: i32,
    },
    /// `coef * Re(z^k)`
    RealMonomial {
        coef: f64,
        k: u32,
    },
    Sum(Vec<Perturbation>),
}

impl Perturbation {
    pub fn value(&self, z: Complex64) -> f64 {
        match self {
            Perturbation::LogPower { coef, power } => coef * z.norm().ln().powi(*power),
            Perturbation::RealMonomial { coef, k } => coef * z.powu(*k).re,
            Perturbation::Sum(parts) => parts.iter().map(|p| p.value(z)).sum(),
        }
    }

    fn log_power_coefficients(&self, acc: &mut Vec<(i32, f64)>) {
        match self {
            Perturbation::LogPower { coef, power } => {
                match acc.iter_mut().find(|(p, _)| p == power) {
                    Some((_, c)) => *c += coef,
                    None => acc.push((*power, *coef)),
                }
            }
            Perturbation::RealMonomial { .. } => {}
            Perturbation::Sum(parts) => parts.iter().for_each(|p| p.log_power_coefficients(acc)),
        }
    }

    /// Whether `i d d-bar rho` stays bounded against the Poincare metric.
    ///
    /// `(log|z|)^p` contributes a ratio of order `(log|z|)^p`, harmless only
    /// for `p <= 1` (`log|z|` itself is harmonic); `Re(z^k)` is harmonic.
    pub fn curvature_bounded(&self) -> bool {
        let mut acc = Vec::new();
        self.log_power_coefficients(&mut acc);
        acc.iter().all(|&(p, c)| p <= 1 || c == 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricModel {
    /// `h(e, e) = |z|^{-2c} (-log|z|^2)^{-N}`
    Line {
        c: Weight,
        #[serde(rename = "N", default)]
        n: i32,
    },
    DirectSum(Vec<MetricModel>),
    Tensor(Vec<MetricModel>),
    Dual(Box<MetricModel>),
    /// Holomorphic frame change by a polynomial matrix invertible at 0.
    Gauge {
        matrix: PolyMatrix,
        model: Box<MetricModel>,
    },
    /// Negative control: `H -> exp(-rho) H`.
    Perturb {
        rho: Perturbation,
        model: Box<MetricModel>,
    },
    /// Pullback along `w -> w^m`.
    Pullback {
        m: u32,
        model: Box<MetricModel>,
    },
}

/// A frame of `P_0` compatible with the filtration, evaluated at a point:
/// columns are frame vectors in model coordinates.
#[derive(Clone, Debug)]
pub struct CompatibleFrame {
    pub vectors: CMatrix,
    pub degrees: Vec<Weight>,
}

#[derive(Clone, Debug)]
pub struct CurvatureSample {
    pub point: Complex64,
    /// Coefficient of `dz ^ dz-bar` in the Chern curvature, as an endomorphism.
    pub f: CMatrix,
    pub poincare_density: f64,
    /// `|Theta|_{h, omega_P}`.
    pub norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AcceptabilityReport {
    pub sup_norm: f64,
    /// Least-squares slope of the per-radius maximal norm against `-log r`.
    pub trend: f64,
    pub acceptable: bool,
    /// `(r, max norm on the circle)` per radius.
    pub samples: Vec<(f64, f64)>,
}

impl MetricModel {
    pub fn line(c: Weight, n: i32) -> Self {
        MetricModel::Line { c, n }
    }

    pub fn direct_sum(parts: Vec<MetricModel>) -> Self {
        MetricModel::DirectSum(parts)
    }

    pub fn tensor(parts: Vec<MetricModel>) -> Self {
        MetricModel::Tensor(parts)
    }

    pub fn dual(inner: MetricModel) -> Self {
        MetricModel::Dual(Box::new(inner))
    }

    pub fn gauge(matrix: PolyMatrix, inner: MetricModel) -> Result<Self> {
        matrix.validate(inner.rank())?;
        Ok(MetricModel::Gauge {
            matrix,
            model: Box::new(inner),
        })
    }

    pub fn perturb(rho: Perturbation, inner: MetricModel) -> Self {
        MetricModel::Perturb {
            rho,
            model: Box::new(inner),
        }
    }

    pub fn pullback(m: u32, inner: MetricModel) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument(
                "cover degree must be positive".into(),
            ));
        }
        Ok(MetricModel::Pullback {
            m,
            model: Box::new(inner),
        })
    }

    /// Diagonal sum of lines `(c_i, N_i)`.
    pub fn diagonal(lines: &[(Weight, i32)]) -> Self {
        MetricModel::DirectSum(
            lines
                .iter()
                .map(|(c, n)| MetricModel::line(c.clone(), *n))
                .collect(),
        )
    }

    pub fn rank(&self) -> usize {
        match self {
            MetricModel::Line { .. } => 1,
            MetricModel::DirectSum(ms) => ms.iter().map(MetricModel::rank).sum(),
            MetricModel::Tensor(ms) => ms.iter().map(MetricModel::rank).product(),
            MetricModel::Dual(m)
            | MetricModel::Gauge { model: m, .. }
            | MetricModel::Perturb { model: m, .. }
            | MetricModel::Pullback { model: m, .. } => m.rank(),
        }
    }

    /// Structural checks for trees that did not come through the constructors.
    pub fn validate(&self) -> Result<()> {
        match self {
            MetricModel::Line { .. } => Ok(()),
            MetricModel::DirectSum(ms) | MetricModel::Tensor(ms) => {
                if ms.is_empty() {
                    return Err(Error::RankZero);
                }
                ms.iter().try_for_each(MetricModel::validate)
            }
            MetricModel::Dual(m) | MetricModel::Perturb { model: m, .. } => m.validate(),
            MetricModel::Gauge { matrix, model } => {
                model.validate()?;
                matrix.validate(model.rank())
            }
            MetricModel::Pullback { m, model } => {
                if *m == 0 {
                    return Err(Error::InvalidArgument(
                        "cover degree must be positive".into(),
                    ));
                }
                model.validate()
            }
        }
    }

    pub fn has_perturbation(&self) -> bool {
        match self {
            MetricModel::Line { .. } => false,
            MetricModel::DirectSum(ms) | MetricModel::Tensor(ms) => {
                ms.iter().any(MetricModel::has_perturbation)
            }
            MetricModel::Perturb { .. } => true,
            MetricModel::Dual(m)
            | MetricModel::Gauge { model: m, .. }
            | MetricModel::Pullback { model: m, .. } => m.has_perturbation(),
        }
    }

    /// Symbolic expectation for the acceptability scan.
    pub fn expected_acceptable(&self) -> bool {
        match self {
            MetricModel::Line { .. } => true,
            MetricModel::DirectSum(ms) | MetricModel::Tensor(ms) => {
                ms.iter().all(MetricModel::expected_acceptable)
            }
            MetricModel::Perturb { rho, model } => {
                rho.curvature_bounded() && model.expected_acceptable()
            }
            MetricModel::Dual(m)
            | MetricModel::Gauge { model: m, .. }
            | MetricModel::Pullback { model: m, .. } => m.expected_acceptable(),
        }
    }

    /// Gram matrix at `z`, `0 < |z| < 1`.
    pub fn evaluate(&self, z: Complex64) -> Result<CMatrix> {
        check_domain(z)?;
        self.eval_unchecked(z)
    }

    fn eval_unchecked(&self, z: Complex64) -> Result<CMatrix> {
        Ok(match self {
            MetricModel::Line { c, n } => {
                let log_r = z.norm().ln();
                let t = -2.0 * log_r;
                let log_h = -2.0 * c.to_f64() * log_r - f64::from(*n) * t.ln();
                let h = log_h.clamp(-LOG_CLAMP, LOG_CLAMP).exp();
                CMatrix::from_element(1, 1, Complex64::new(h, 0.0))
            }
            MetricModel::DirectSum(ms) => {
                let blocks = ms
                    .iter()
                    .map(|m| m.eval_unchecked(z))
                    .collect::<Result<Vec<_>>>()?;
                block_diag(&blocks)
            }
            MetricModel::Tensor(ms) => {
                let mut it = ms.iter();
                let first = it.next().ok_or(Error::RankZero)?.eval_unchecked(z)?;
                it.try_fold(first, |acc, m| {
                    Ok::<_, Error>(kron(&acc, &m.eval_unchecked(z)?))
                })?
            }
            MetricModel::Dual(m) => inverse(&m.eval_unchecked(z)?, z)
                .map_err(|_| Error::NotPositiveDefinite(fmt_point(z)))?
                .transpose(),
            MetricModel::Gauge { matrix, model } => {
                let g = matrix.eval(z);
                if g.determinant().norm() < 1e-300 {
                    return Err(Error::SingularGauge(fmt_point(z)));
                }
                let h = model.eval_unchecked(z)?;
                g.adjoint() * h * g
            }
            MetricModel::Perturb { rho, model } => {
                let s = (-rho.value(z)).clamp(-LOG_CLAMP, LOG_CLAMP).exp();
                model.eval_unchecked(z)?.scale(s)
            }
            MetricModel::Pullback { m, model } => model.eval_unchecked(z.powu(*m))?,
        })
    }

    /// Filtered bundle of the prolongation, computed compositionally.
    pub fn predicted_filtered_bundle(&self) -> Result<FilteredBundle> {
        match self {
            MetricModel::Line { c, .. } => FilteredBundle::from_weights([c.clone()]),
            MetricModel::DirectSum(ms) => {
                let mut all = Vec::new();
                for m in ms {
                    all.extend(m.predicted_filtered_bundle()?.weights().iter().cloned());
                }
                FilteredBundle::from_weights(all)
            }
            MetricModel::Tensor(ms) => {
                let mut it = ms.iter();
                let first = it
                    .next()
                    .ok_or(Error::RankZero)?
                    .predicted_filtered_bundle()?;
                it.try_fold(first, |acc, m| {
                    Ok(acc.tensor(&m.predicted_filtered_bundle()?))
                })
            }
            MetricModel::Dual(m) => Ok(m.predicted_filtered_bundle()?.dual()),
            MetricModel::Gauge { model, .. } => model.predicted_filtered_bundle(),
            MetricModel::Perturb { .. } => Err(Error::Refused(
                "perturbed model has no vetted prediction".into(),
            )),
            MetricModel::Pullback { m, model } => model
                .predicted_filtered_bundle()?
                .cyclic_pullback(i64::from(*m)),
        }
    }

    /// `-1/2 lim log det H / log|z|` for the model's own coordinate frame.
    pub fn raw_gamma(&self) -> Result<Weight> {
        Ok(match self {
            MetricModel::Line { c, .. } => c.clone(),
            MetricModel::DirectSum(ms) => ms
                .iter()
                .map(MetricModel::raw_gamma)
                .collect::<Result<Vec<_>>>()?
                .iter()
                .sum(),
            MetricModel::Tensor(ms) => {
                let mut acc: Option<(Weight, usize)> = None;
                for m in ms {
                    let (g, r) = (m.raw_gamma()?, m.rank());
                    acc = Some(match acc {
                        None => (g, r),
                        Some((g0, r0)) => (
                            Weight::from_integer(r as i64) * g0
                                + Weight::from_integer(r0 as i64) * g,
                            r0 * r,
                        ),
                    });
                }
                acc.ok_or(Error::RankZero)?.0
            }
            MetricModel::Dual(m) => -m.raw_gamma()?,
            MetricModel::Gauge { model, .. } => model.raw_gamma()?,
            MetricModel::Perturb { .. } => {
                return Err(Error::Refused(
                    "perturbed model has no vetted prediction".into(),
                ))
            }
            MetricModel::Pullback { m, model } => model.raw_gamma()?.scale(&i64::from(*m).into()),
        })
    }

    /// Compatible frame of `P_0` at `z`, with degrees in `(-1, 0]`.
    pub fn compatible_frame(&self, z: Complex64) -> Result<CompatibleFrame> {
        check_domain(z)?;
        self.frame_unchecked(z)
    }

    fn frame_unchecked(&self, z: Complex64) -> Result<CompatibleFrame> {
        match self {
            MetricModel::Line { c, .. } => {
                let mut f = CompatibleFrame {
                    vectors: CMatrix::identity(1, 1),
                    degrees: vec![c.clone()],
                };
                f.normalize(z);
                Ok(f)
            }
            MetricModel::DirectSum(ms) => {
                let frames = ms
                    .iter()
                    .map(|m| m.frame_unchecked(z))
                    .collect::<Result<Vec<_>>>()?;
                let vectors =
                    block_diag(&frames.iter().map(|f| f.vectors.clone()).collect::<Vec<_>>());
                let degrees = frames.into_iter().flat_map(|f| f.degrees).collect();
                Ok(CompatibleFrame { vectors, degrees })
            }
            MetricModel::Tensor(ms) => {
                let mut it = ms.iter();
                let mut acc = it.next().ok_or(Error::RankZero)?.frame_unchecked(z)?;
                for m in it {
                    let f = m.frame_unchecked(z)?;
                    let degrees = acc
                        .degrees
                        .iter()
                        .flat_map(|b| f.degrees.iter().map(move |c| b + c))
                        .collect();
                    acc = CompatibleFrame {
                        vectors: kron(&acc.vectors, &f.vectors),
                        degrees,
                    };
                    acc.normalize(z);
                }
                Ok(acc)
            }
            MetricModel::Dual(m) => {
                let f = m.frame_unchecked(z)?;
                let mut d = CompatibleFrame {
                    vectors: inverse(&f.vectors, z)?.transpose(),
                    degrees: f.degrees.iter().map(|b| -b).collect(),
                };
                d.normalize(z);
                Ok(d)
            }
            MetricModel::Gauge { matrix, model } => {
                let f = model.frame_unchecked(z)?;
                let g_inv = inverse(&matrix.eval(z), z)?;
                Ok(CompatibleFrame {
                    vectors: g_inv * f.vectors,
                    degrees: f.degrees,
                })
            }
            MetricModel::Perturb { .. } => Err(Error::Refused(
                "perturbed model has no vetted compatible frame".into(),
            )),
            MetricModel::Pullback { m, model } => {
                let f = model.frame_unchecked(z.powu(*m))?;
                let scale = i64::from(*m).into();
                let mut p = CompatibleFrame {
                    vectors: f.vectors,
                    degrees: f.degrees.iter().map(|b| b.scale(&scale)).collect(),
                };
                p.normalize(z);
                Ok(p)
            }
        }
    }

    /// Cyclic-cover prediction for `-1/2 lim log det` of the pulled-back
    /// coordinate frame: `gamma(pullback(P, m), 0) + sum ceil(m b_i)` plus the
    /// integer offset between the raw and canonical frames.
    pub fn cover_gamma_prediction(&self, m: u32) -> Result<Weight> {
        let predicted = self.predicted_filtered_bundle()?;
        let pulled = predicted.cyclic_pullback(i64::from(m))?;
        let scale = i64::from(m).into();
        let correction: Weight = predicted
            .weights()
            .iter()
            .map(|b| Weight::from_integer(b.scale(&scale).ceil()))
            .sum();
        let offset = (self.raw_gamma()? - predicted.gamma(&Weight::zero())).scale(&scale);
        Ok(pulled.gamma(&Weight::zero()) + correction + offset)
    }
}

impl CompatibleFrame {
    /// Multiplies each vector by `z^{ceil(d)}` so degrees land in `(-1, 0]`.
    fn normalize(&mut self, z: Complex64) {
        for (j, d) in self.degrees.iter_mut().enumerate() {
            let k = d.ceil();
            let k: i32 = i32::try_from(k.clone()).expect("frame exponent out of range");
            if k != 0 {
                let s = z.powi(k);
                self.vectors.column_mut(j).iter_mut().for_each(|x| *x *= s);
                *d = d.canonical();
            }
        }
    }
}

fn check_domain(z: Complex64) -> Result<()> {
    let r = z.norm();
    if r > 0.0 && r < 1.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(fmt_point(z)))
    }
}

/// Density of the Poincare metric, `(|z| (-log|z|^2))^{-2}`.
pub fn poincare_density(z: Complex64) -> Result<f64> {
    check_domain(z)?;
    let r = z.norm();
    let t = -2.0 * r.ln();
    Ok(1.0 / (r * t).powi(2))
}

/// Chern curvature by nested second-order central differences with step
/// `step_ratio * |z|`.
pub fn curvature(mm: &MetricModel, z: Complex64, step_ratio: f64) -> Result<CurvatureSample> {
    check_domain(z)?;
    let r = z.norm();
    let h = step_ratio * r;
    if !(step_ratio > 0.0)
        || r - 2.0 * h * std::f64::consts::SQRT_2 <= 0.0
        || r + 2.0 * h * std::f64::consts::SQRT_2 >= 1.0
    {
        return Err(Error::Domain(format!(
            "stencil around {} leaves the disk",
            fmt_point(z)
        )));
    }
    let k = mm.evaluate(z)?;
    let cond = hpd_condition(&k);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned {
            point: fmt_point(z),
            cond,
        });
    }
    let k_inv = inverse(&k, z).map_err(|_| Error::NotPositiveDefinite(fmt_point(z)))?;

    let dx = Complex64::new(h, 0.0);
    let dy = Complex64::new(0.0, h);
    let i = Complex64::i();
    let half = Complex64::new(0.5 / (2.0 * h), 0.0);

    // connection coefficient H^{-1} d_z H at p
    let connection = |p: Complex64| -> Result<CMatrix> {
        let kp = mm.evaluate(p)?;
        let kp_inv = inverse(&kp, p).map_err(|_| Error::NotPositiveDefinite(fmt_point(p)))?;
        let ddx = mm.evaluate(p + dx)? - mm.evaluate(p - dx)?;
        let ddy = mm.evaluate(p + dy)? - mm.evaluate(p - dy)?;
        let dz = (ddx - ddy * i) * half;
        Ok(kp_inv * dz)
    };
    let mx = connection(z + dx)? - connection(z - dx)?;
    let my = connection(z + dy)? - connection(z - dy)?;
    let f = -((mx + my * i) * half);

    let p = poincare_density(z)?;
    let norm = endo_norm(&f, &k, &k_inv) / p;
    Ok(CurvatureSample {
        point: z,
        f,
        poincare_density: p,
        norm,
    })
}

/// Samples `|Theta|_{h, omega_P}` over a schedule and reports its supremum and
/// its trend against `-log r`.
pub fn acceptability_scan(
    mm: &MetricModel,
    sched: &RadialSampleSchedule,
    step_ratio: f64,
    trend_tolerance: f64,
) -> Result<AcceptabilityReport> {
    let mut samples = Vec::with_capacity(sched.count);
    for r in sched.radii() {
        let mut worst: f64 = 0.0;
        for z in sched.circle(r) {
            worst = worst.max(curvature(mm, z, step_ratio)?.norm);
        }
        samples.push((r, worst));
    }
    let xs: Vec<Vec<f64>> = samples.iter().map(|(r, _)| vec![-r.ln(), 1.0]).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, v)| *v).collect();
    let trend = least_squares(&xs, &ys)?.coefficients[0];
    let sup_norm = ys.iter().copied().fold(0.0, f64::max);
    Ok(AcceptabilityReport {
        sup_norm,
        trend,
        acceptable: trend.abs() <= trend_tolerance && sup_norm.is_finite(),
        samples,
    })
}

/// Largest Hermiticity defect of the evaluated metric over a schedule,
/// relative to the matrix scale.
pub fn hermiticity_defect(mm: &MetricModel, sched: &RadialSampleSchedule) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for r in sched.radii() {
        for z in sched.circle(r) {
            let k = mm.evaluate(z)?;
            let scale = k
                .iter()
                .map(|x| x.norm())
                .fold(0.0, f64::max)
                .max(f64::MIN_POSITIVE);
            worst = worst.max(hermitian_defect(&k) / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigenvalues;

    fn w(s: &str) -> Weight {
        s.parse().unwrap()
    }

    fn line(c: &str, n: i32) -> MetricModel {
        MetricModel::line(w(c), n)
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn sched() -> RadialSampleSchedule {
        RadialSampleSchedule::new(0.1, 0.5, 12, 8).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let h = line("1/2", 0).evaluate(re(0.1)).unwrap();
        assert!((h[(0, 0)].re - 10.0).abs() < 1e-12);
        let h = line("0", 0).evaluate(Complex64::new(0.3, -0.2)).unwrap();
        assert!((h[(0, 0)].re - 1.0).abs() < 1e-15);
        let m = MetricModel::direct_sum(vec![line("0", 0), line("1/2", 0)]);
        let h = m.evaluate(re(0.01)).unwrap();
        assert!((h[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!((h[(1, 1)].re - 100.0).abs() < 1e-10);
        assert_eq!(h[(0, 1)].norm(), 0.0);
    }

    #[test]
    fn evaluate_domain_errors() {
        for z in [re(0.0), re(1.0), Complex64::new(0.8, 0.8), re(f64::NAN)] {
            assert!(matches!(line("0", 0).evaluate(z), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn singular_gauge_rejected() {
        let zero = CMatrix::zeros(1, 1);
        assert!(MetricModel::gauge(PolyMatrix::constant(&zero), line("0", 0)).is_err());
        // z * I vanishes at the origin
        let g = PolyMatrix(vec![vec![vec![[0.0, 0.0], [1.0, 0.0]]]]);
        assert!(MetricModel::gauge(g, line("0", 0)).is_err());
        // wrong size
        let g = PolyMatrix::constant(&CMatrix::identity(2, 2));
        assert!(MetricModel::gauge(g, line("0", 0)).is_err());
    }

    #[test]
    fn gauge_evaluation_error_at_singular_point() {
        // 1 + 2z vanishes at z = -1/2, inside the disk
        let g = PolyMatrix(vec![vec![vec![[1.0, 0.0], [2.0, 0.0]]]]);
        let m = MetricModel::gauge(g, line("0", 0)).unwrap();
        assert!(matches!(m.evaluate(re(-0.5)), Err(Error::SingularGauge(_))));
    }

    #[test]
    fn poincare_density_examples() {
        let z = re((-0.5f64).exp());
        assert!((poincare_density(z).unwrap() - std::f64::consts::E).abs() < 1e-12);
        let p = poincare_density(re(0.1)).unwrap();
        let expected = 1.0 / (0.1 * (-(0.01f64).ln())).powi(2);
        assert!((p - expected).abs() < 1e-12);
        assert!((p - 4.715).abs() < 1e-3);
        let near = poincare_density(re(0.999)).unwrap();
        let nearer = poincare_density(re(0.9999)).unwrap();
        assert!(nearer > near && near > 1e4);
        assert!(poincare_density(re(1.0)).is_err());
    }

    #[test]
    fn flat_lines_have_zero_curvature() {
        for c in ["0", "1/3", "-7/10", "5/2"] {
            let s = curvature(&line(c, 0), re(0.05), DEFAULT_STEP_RATIO).unwrap();
            // roundoff (eps / eta^2) and truncation (eta^2 c^4) floor of the stencil
            assert!(s.norm < 1e-4, "c={c}: {}", s.norm);
        }
    }

    #[test]
    fn polylog_line_has_curvature_n_times_poincare() {
        for n in [1, 2, 3] {
            let z = Complex64::from_polar(0.01, 0.7);
            let s = curvature(&line("0", n), z, DEFAULT_STEP_RATIO).unwrap();
            assert!(
                (s.norm - n as f64).abs() < 1e-3 * n as f64,
                "N={n}: {}",
                s.norm
            );
            // F = -N p exactly, as a scalar
            assert!(
                (s.f[(0, 0)].re + n as f64 * s.poincare_density).abs()
                    < 1e-3 * n as f64 * s.poincare_density
            );
        }
    }

    #[test]
    fn unitary_gauge_leaves_curvature_norm() {
        let base = MetricModel::direct_sum(vec![line("1/3", 1), line("-1/2", 2)]);
        let (c, s) = (0.6f64.cos(), 0.6f64.sin());
        let u = CMatrix::from_row_slice(
            2,
            2,
            &[re(c), Complex64::new(0.0, s), Complex64::new(0.0, s), re(c)],
        );
        let twisted = MetricModel::gauge(PolyMatrix::constant(&u), base.clone()).unwrap();
        let z = Complex64::from_polar(0.02, 1.1);
        let a = curvature(&base, z, DEFAULT_STEP_RATIO).unwrap().norm;
        let b = curvature(&twisted, z, DEFAULT_STEP_RATIO).unwrap().norm;
        assert!((a - b).abs() < 1e-4 * a, "{a} vs {b}");
    }

    #[test]
    fn curvature_stencil_must_stay_in_disk() {
        assert!(curvature(&line("0", 1), re(0.9), 0.1).is_err());
        assert!(curvature(&line("0", 1), re(0.1), 0.0).is_err());
    }

    #[test]
    fn curvature_rejects_ill_conditioned_metric() {
        let m = MetricModel::direct_sum(vec![line("0", 0), line("40", 0)]);
        assert!(matches!(
            curvature(&m, re(0.01), DEFAULT_STEP_RATIO),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn acceptability_scan_examples() {
        let r = acceptability_scan(
            &line("1/3", 2),
            &sched(),
            DEFAULT_STEP_RATIO,
            DEFAULT_TREND_TOLERANCE,
        )
        .unwrap();
        assert!(r.sup_norm <= 2.0 + 1e-3 && r.trend.abs() < 1e-3 && r.acceptable);
        let r = acceptability_scan(
            &line("1/2", 0),
            &sched(),
            DEFAULT_STEP_RATIO,
            DEFAULT_TREND_TOLERANCE,
        )
        .unwrap();
        assert!(r.sup_norm < 1e-4 && r.acceptable);
        let bad = MetricModel::perturb(
            Perturbation::LogPower {
                coef: 1.0,
                power: 2,
            },
            line("0", 0),
        );
        let r = acceptability_scan(&bad, &sched(), DEFAULT_STEP_RATIO, DEFAULT_TREND_TOLERANCE)
            .unwrap();
        assert!(r.trend > 1.0 && !r.acceptable, "{r:?}");
    }

    #[test]
    fn perturbation_classification() {
        assert!(!Perturbation::LogPower {
            coef: 1.0,
            power: 2
        }
        .curvature_bounded());
        assert!(Perturbation::LogPower {
            coef: 3.0,
            power: 1
        }
        .curvature_bounded());
        assert!(Perturbation::RealMonomial { coef: 1.0, k: 2 }.curvature_bounded());
        let cancel = Perturbation::Sum(vec![
            Perturbation::LogPower {
                coef: 1.0,
                power: 2,
            },
            Perturbation::LogPower {
                coef: -1.0,
                power: 2,
            },
        ]);
        assert!(cancel.curvature_bounded());
    }

    #[test]
    fn predicted_bundle_examples() {
        assert_eq!(
            line("1/2", 3)
                .predicted_filtered_bundle()
                .unwrap()
                .weights(),
            [w("-1/2")]
        );
        let t = MetricModel::tensor(vec![line("1/3", 0), line("1/2", 0)]);
        assert_eq!(
            t.predicted_filtered_bundle().unwrap().weights(),
            [w("-1/6")]
        );
        let u = vec![vec![re(0.0), re(2.0)], vec![re(-1.0), re(0.5)]];
        let base = MetricModel::direct_sum(vec![line("1/3", 1), line("-1/2", 0)]);
        let twisted = MetricModel::gauge(PolyMatrix::unipotent(&u), base.clone()).unwrap();
        assert_eq!(
            twisted.predicted_filtered_bundle().unwrap(),
            base.predicted_filtered_bundle().unwrap()
        );
        let p = MetricModel::perturb(Perturbation::RealMonomial { coef: 1.0, k: 1 }, line("0", 0));
        assert!(matches!(
            p.predicted_filtered_bundle(),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn prediction_is_a_homomorphism() {
        let a = MetricModel::direct_sum(vec![line("1/3", 1), line("-3/7", 0)]);
        let b = MetricModel::direct_sum(vec![line("7/10", 2), line("0", 0), line("9/4", 1)]);
        let pa = a.predicted_filtered_bundle().unwrap();
        let pb = b.predicted_filtered_bundle().unwrap();
        let t = MetricModel::tensor(vec![a.clone(), b.clone()]);
        assert_eq!(t.predicted_filtered_bundle().unwrap(), pa.tensor(&pb));
        assert_eq!(
            MetricModel::dual(a.clone())
                .predicted_filtered_bundle()
                .unwrap(),
            pa.dual()
        );
        let s = MetricModel::direct_sum(vec![a, b]);
        let mut union = pa.weights().to_vec();
        union.extend(pb.weights().iter().cloned());
        assert_eq!(
            s.predicted_filtered_bundle().unwrap(),
            FilteredBundle::from_weights(union).unwrap()
        );
    }

    #[test]
    fn tensor_dual_evaluations_are_hermitian_positive() {
        let u = vec![
            vec![re(0.3), Complex64::new(1.0, -1.0)],
            vec![re(-1.0), re(0.5)],
        ];
        let base = MetricModel::direct_sum(vec![line("1/3", 1), line("-1/2", 0)]);
        let twisted = MetricModel::gauge(PolyMatrix::unipotent(&u), base).unwrap();
        let m = MetricModel::tensor(vec![MetricModel::dual(twisted.clone()), twisted]);
        assert!(hermiticity_defect(&m, &sched()).unwrap() < 1e-12);
        let ev = hermitian_eigenvalues(&m.evaluate(Complex64::from_polar(0.03, 2.0)).unwrap());
        assert!(ev[0] > 0.0);
    }

    #[test]
    fn compatible_frame_degrees_match_prediction() {
        let u = vec![vec![re(0.3), re(2.0)], vec![re(-1.0), re(0.5)]];
        let base = MetricModel::direct_sum(vec![line("4/3", 1), line("-1/2", 0)]);
        let twisted = MetricModel::gauge(PolyMatrix::unipotent(&u), base).unwrap();
        let m = MetricModel::tensor(vec![MetricModel::dual(twisted.clone()), line("1/5", 0)]);
        let m = MetricModel::pullback(2, m).unwrap();
        let f = m.compatible_frame(re(0.01)).unwrap();
        let predicted = m.predicted_filtered_bundle().unwrap();
        assert!(crate::weights::multiset_eq(&f.degrees, predicted.weights()));
        assert!(f.degrees.iter().all(|d| d.in_window(&Weight::zero())));
    }

    #[test]
    fn raw_gamma_rules() {
        let t = MetricModel::tensor(vec![
            MetricModel::direct_sum(vec![line("1/3", 0), line("1/2", 0)]),
            line("2/5", 0),
        ]);
        // det = det(A)^1 det(B)^2
        assert_eq!(t.raw_gamma().unwrap(), w("1/3") + w("1/2") + w("4/5"));
        assert_eq!(
            MetricModel::dual(line("1/3", 0)).raw_gamma().unwrap(),
            w("-1/3")
        );
        assert_eq!(
            MetricModel::pullback(3, line("1/3", 0))
                .unwrap()
                .raw_gamma()
                .unwrap(),
            w("1")
        );
    }

    #[test]
    fn cover_prediction_matches_raw_rule() {
        for c in ["-1/3", "-7/10", "1/2", "5/4"] {
            for m in [1u32, 2, 3] {
                let mm = line(c, 1);
                let pulled = MetricModel::pullback(m, mm.clone()).unwrap();
                assert_eq!(
                    mm.cover_gamma_prediction(m).unwrap(),
                    pulled.raw_gamma().unwrap()
                );
            }
        }
    }

    #[test]
    fn model_json_descriptor() {
        let j = r#"{"tensor": [{"line": {"c": "1/3", "N": 2}}, {"dual": {"line": {"c": "1/2", "N": 0}}}]}"#;
        let m: MetricModel = serde_json::from_str(j).unwrap();
        m.validate().unwrap();
        assert_eq!(m.rank(), 1);
        assert_eq!(m.raw_gamma().unwrap(), w("-1/6"));
        let g = r#"{"gauge": {"matrix": [[[[1,0],[0,0]], [[0,0],[2,0]]], [[[0,0]], [[1,0]]]],
                   "model": {"direct_sum": [{"line": {"c": "1/3"}}, {"line": {"c": "0", "N": 1}}]}}}"#;
        let m: MetricModel = serde_json::from_str(g).unwrap();
        m.validate().unwrap();
        assert_eq!(m.rank(), 2);
        let back: MetricModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
