//! Predict-vs-estimate runs and the seeded property batteries behind the CLI.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigInt;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{br_value, diophantine_search, log_distance_inequality_with, remainders};
use crate::calculus::{tensor_ceiling_sum, FilteredBundle};
use crate::error::{Error, Result};
use crate::estimators::{
    gamma_estimate, membership_test, weak_norm_fit, FitOptions, RadialSampleSchedule,
    DEFAULT_TOLERANCE,
};
use crate::models::{acceptability_scan, MetricModel, DEFAULT_STEP_RATIO, DEFAULT_TREND_TOLERANCE};
use crate::weights::Weight;

pub const COVER_TOLERANCE: f64 = 2e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Refused,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// Exact prediction, when one exists.
    pub predicted: Option<String>,
    pub estimated: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<serde_json::Value>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, pass: bool) -> Self {
        CheckRecord {
            name: name.into(),
            predicted: None,
            estimated: None,
            tolerance: None,
            status: if pass { Status::Pass } else { Status::Fail },
            detail: None,
            samples: None,
        }
    }

    pub fn from_error(name: impl Into<String>, err: &Error) -> Self {
        let status = if matches!(err, Error::Refused(_)) {
            Status::Refused
        } else {
            Status::Error
        };
        CheckRecord {
            status,
            detail: Some(err.to_string()),
            ..CheckRecord::new(name, false)
        }
    }

    pub fn predicted(mut self, p: impl ToString) -> Self {
        self.predicted = Some(p.to_string());
        self
    }

    pub fn estimated(mut self, e: f64) -> Self {
        self.estimated = Some(e);
        self
    }

    pub fn tolerance(mut self, t: f64) -> Self {
        self.tolerance = Some(t);
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InputDigest {
    pub label: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(label: impl Into<String>, text: &str) -> Self {
        let hash = Sha256::digest(text.as_bytes());
        InputDigest {
            label: label.into(),
            sha256: hash.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<RadialSampleSchedule>,
    pub records: Vec<CheckRecord>,
    pub pass: bool,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(command: Vec<String>) -> Self {
        RunReport {
            command,
            inputs: Vec::new(),
            seed: None,
            schedule: None,
            records: Vec::new(),
            pass: true,
            wall_time_s: 0.0,
        }
    }

    pub fn finish(&mut self, started: Instant) {
        self.pass = self.records.iter().all(CheckRecord::passed);
        self.wall_time_s = started.elapsed().as_secs_f64();
    }

    /// 4 if anything was refused, 3 on evaluation errors, 1 on failed checks.
    pub fn exit_code(&self) -> i32 {
        let any = |s: Status| self.records.iter().any(|r| r.status == s);
        if any(Status::Refused) {
            4
        } else if any(Status::Error) {
            3
        } else if any(Status::Fail) {
            1
        } else {
            0
        }
    }

    /// One line per record, for stderr.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let tag = match r.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Refused => "REFUSED",
                Status::Error => "ERROR",
            };
            out.push_str(&format!("{tag:8} {}", r.name));
            if let Some(p) = &r.predicted {
                out.push_str(&format!("  predicted={p}"));
            }
            if let Some(e) = r.estimated {
                out.push_str(&format!("  estimated={e:.6}"));
            }
            if let Some(d) = &r.detail {
                out.push_str(&format!("  ({d})"));
            }
            out.push('\n');
        }
        let passed = self.records.iter().filter(|r| r.passed()).count();
        out.push_str(&format!(
            "{passed}/{} passed in {:.2}s\n",
            self.records.len(),
            self.wall_time_s
        ));
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    Gamma,
    Acceptability,
    WeakNorm,
    Membership,
    Cover,
}

impl CheckKind {
    pub const ALL: [CheckKind; 5] = [
        CheckKind::Gamma,
        CheckKind::Acceptability,
        CheckKind::WeakNorm,
        CheckKind::Membership,
        CheckKind::Cover,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Gamma => "gamma",
            CheckKind::Acceptability => "acceptability",
            CheckKind::WeakNorm => "weak-norm",
            CheckKind::Membership => "membership",
            CheckKind::Cover => "cover",
        }
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CheckKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown check {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub schedule: RadialSampleSchedule,
    /// Overrides the per-check tolerance.
    pub tolerance: Option<f64>,
    pub anchor: Weight,
    pub cover_degree: u32,
    pub dump_samples: bool,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            schedule: RadialSampleSchedule::default(),
            tolerance: None,
            anchor: Weight::zero(),
            cover_degree: 2,
            dump_samples: false,
        }
    }
}

fn samples_json<T: Serialize>(cfg: &CheckConfig, s: &T) -> Option<serde_json::Value> {
    cfg.dump_samples
        .then(|| serde_json::to_value(s).unwrap_or_default())
}

/// Runs one check; evaluation errors become `error` or `refused` records.
pub fn run_check(mm: &MetricModel, kind: CheckKind, cfg: &CheckConfig) -> Vec<CheckRecord> {
    let res = match kind {
        CheckKind::Gamma => check_gamma(mm, cfg).map(|r| vec![r]),
        CheckKind::Acceptability => check_acceptability(mm, cfg).map(|r| vec![r]),
        CheckKind::WeakNorm => check_weak_norm(mm, cfg).map(|r| vec![r]),
        CheckKind::Membership => check_membership(mm, cfg),
        CheckKind::Cover => check_cover(mm, cfg).map(|r| vec![r]),
    };
    res.unwrap_or_else(|e| vec![CheckRecord::from_error(kind.name(), &e)])
}

fn check_gamma(mm: &MetricModel, cfg: &CheckConfig) -> Result<CheckRecord> {
    let predicted = mm.raw_gamma()?;
    let tol = cfg.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let est = gamma_estimate(
        mm,
        &cfg.schedule,
        &FitOptions {
            tolerance: tol,
            ..Default::default()
        },
    )?;
    let pass = (est.value - predicted.to_f64()).abs() <= tol;
    let mut rec = CheckRecord::new("gamma", pass)
        .predicted(&predicted)
        .estimated(est.value)
        .tolerance(tol)
        .detail(format!("fit residual {:.2e}", est.residual));
    rec.samples = samples_json(cfg, &est.samples);
    Ok(rec)
}

fn check_acceptability(mm: &MetricModel, cfg: &CheckConfig) -> Result<CheckRecord> {
    let tol = cfg.tolerance.unwrap_or(DEFAULT_TREND_TOLERANCE);
    let expected = mm.expected_acceptable();
    let scan = acceptability_scan(mm, &cfg.schedule, DEFAULT_STEP_RATIO, tol)?;
    let verdict = |a: bool| if a { "acceptable" } else { "not acceptable" };
    let mut rec = CheckRecord::new("acceptability", scan.acceptable == expected)
        .predicted(verdict(expected))
        .estimated(scan.trend)
        .tolerance(tol)
        .detail(format!(
            "{}, sup norm {:.4}",
            verdict(scan.acceptable),
            scan.sup_norm
        ));
    rec.samples = samples_json(cfg, &scan.samples);
    Ok(rec)
}

fn check_weak_norm(mm: &MetricModel, cfg: &CheckConfig) -> Result<CheckRecord> {
    let fit = weak_norm_fit(mm, &cfg.schedule)?;
    let mut rec = CheckRecord::new("weak-norm", fit.holds)
        .predicted("holds")
        .estimated(fit.m)
        .detail(format!("C = {:.4}, M = {:.4}", fit.c, fit.m));
    rec.samples = samples_json(cfg, &fit.samples);
    Ok(rec)
}

fn check_membership(mm: &MetricModel, cfg: &CheckConfig) -> Result<Vec<CheckRecord>> {
    let opts = FitOptions::default();
    let mut out = Vec::new();
    for k in -3..=3 {
        let v = membership_test(mm, k, &cfg.anchor, &cfg.schedule, &opts)?;
        out.push(
            CheckRecord::new(format!("membership k={k} a={}", cfg.anchor), v.agree())
                .predicted(v.exact)
                .estimated(v.slope)
                .tolerance(crate::estimators::MEMBERSHIP_MARGIN)
                .detail(format!("numeric {}", v.numeric)),
        );
    }
    Ok(out)
}

fn check_cover(mm: &MetricModel, cfg: &CheckConfig) -> Result<CheckRecord> {
    let m = cfg.cover_degree;
    let predicted = mm.cover_gamma_prediction(m)?;
    let tol = cfg.tolerance.unwrap_or(COVER_TOLERANCE);
    let pulled = MetricModel::pullback(m, mm.clone())?;
    let est = gamma_estimate(&pulled, &cfg.schedule, &FitOptions::default())?;
    Ok(CheckRecord::new(
        format!("cover m={m}"),
        (est.value - predicted.to_f64()).abs() <= tol,
    )
    .predicted(&predicted)
    .estimated(est.value)
    .tolerance(tol))
}

/// `r1,r2,...:W:Z`: radii, then the number of `w` and `z` sample points.
#[derive(Clone, Debug, PartialEq)]
pub struct BrGrid {
    pub radii: Vec<f64>,
    pub w_count: usize,
    pub z_count: usize,
}

impl Default for BrGrid {
    fn default() -> Self {
        BrGrid {
            radii: vec![0.5, 0.1, 0.01],
            w_count: 64,
            z_count: 32,
        }
    }
}

impl FromStr for BrGrid {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "default" {
            return Ok(BrGrid::default());
        }
        let bad = || {
            Error::Parse(format!(
                "grid must be `default` or r1,r2,...:W:Z, got {s:?}"
            ))
        };
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let radii = parts[0]
            .split(',')
            .map(|r| r.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        if radii.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return Err(Error::InvalidArgument(
                "grid radii must lie in (0, 1)".into(),
            ));
        }
        let w_count = parts[1].trim().parse().map_err(|_| bad())?;
        let z_count = parts[2].trim().parse().map_err(|_| bad())?;
        Ok(BrGrid {
            radii,
            w_count,
            z_count,
        })
    }
}

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

impl BrGrid {
    /// Spiral of points filling the closed disk of radius 2, ending on its rim.
    pub fn w_points(&self) -> Vec<Complex64> {
        let n = self.w_count as f64;
        (0..self.w_count)
            .map(|i| Complex64::from_polar(2.0 * (i as f64 + 1.0) / n, GOLDEN_ANGLE * i as f64))
            .collect()
    }

    /// Points with `r <= |z| < 1`, log-spaced in modulus.
    pub fn z_points(&self, r: f64) -> Vec<Complex64> {
        let n = self.z_count as f64;
        (0..self.z_count)
            .map(|j| {
                Complex64::from_polar(r.powf(1.0 - j as f64 / n), GOLDEN_ANGLE * j as f64 + 0.3)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteKind {
    Br,
    Dio,
    CalculusProperties,
}

impl FromStr for SuiteKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "br" => Ok(SuiteKind::Br),
            "dio" => Ok(SuiteKind::Dio),
            "calculus-properties" => Ok(SuiteKind::CalculusProperties),
            _ => Err(Error::Parse(format!("unknown suite {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
#[derive(Default)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: Option<usize>,
    pub q: Option<f64>,
    pub grid: BrGrid,
}


pub fn run_suite(kind: SuiteKind, cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    match kind {
        SuiteKind::Br => br_suite(&cfg.grid),
        SuiteKind::Dio => Ok(dio_suite(cfg.seed, cfg.trials.unwrap_or(100), cfg.q)),
        SuiteKind::CalculusProperties => Ok(calculus_suite(cfg.seed, cfg.trials.unwrap_or(1000))),
    }
}

/// Bound violations of `B_r(w)` and of the log-distance inequality over the
/// grid, plus the centered equality case per radius.
pub fn br_suite(grid: &BrGrid) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for &r in &grid.radii {
        let centered = br_value(Complex64::new(0.0, 0.0), r)?;
        let gap = (centered.value - centered.area_bound).abs();
        out.push(
            CheckRecord::new(format!("br centered r={r}"), gap <= 1e-4)
                .predicted(format!("{:.8}", centered.area_bound))
                .estimated(centered.value)
                .tolerance(1e-4),
        );
        let (mut bound_bad, mut ineq_bad, mut ineq_total) = (0usize, 0usize, 0usize);
        let mut worst_slack = f64::INFINITY;
        for w in grid.w_points() {
            let b = br_value(w, r)?;
            if !b.satisfies_bounds() {
                bound_bad += 1;
            }
            for z in grid.z_points(r) {
                let i = log_distance_inequality_with(&b, z)?;
                ineq_total += 1;
                worst_slack = worst_slack.min(i.rhs - i.lhs);
                if !i.holds {
                    ineq_bad += 1;
                }
            }
        }
        out.push(
            CheckRecord::new(format!("br lower bounds r={r}"), bound_bad == 0)
                .predicted("0 violations")
                .estimated(bound_bad as f64)
                .detail(format!("{bound_bad}/{} violations", grid.w_count)),
        );
        out.push(
            CheckRecord::new(format!("br log-distance inequality r={r}"), ineq_bad == 0)
                .predicted("0 violations")
                .estimated(ineq_bad as f64)
                .detail(format!(
                    "{ineq_bad}/{ineq_total} violations, min slack {worst_slack:.3e}"
                )),
        );
    }
    Ok(out)
}

/// Seeded Diophantine trials, re-verified from scratch.
pub fn dio_suite(seed: u64, trials: usize, q: Option<f64>) -> Vec<CheckRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qs = q.map_or_else(|| vec![10.0, 100.0], |q| vec![q]);
    let mut out = Vec::new();
    for l in 1..=3usize {
        for &q in &qs {
            let mut ok = 0;
            let mut first_failure = None;
            for _ in 0..trials {
                let alpha: Vec<f64> = (0..l).map(|_| rng.gen::<f64>()).collect();
                let verified = diophantine_search(&alpha, q).map(|d| {
                    // independent recomputation via fractional parts
                    let delta = alpha
                        .iter()
                        .map(|a| {
                            let f = (d.m as f64 * a).rem_euclid(1.0);
                            f.min(1.0 - f)
                        })
                        .fold(0.0, f64::max);
                    let again = remainders(&alpha, d.m)
                        .iter()
                        .map(|x| x.abs())
                        .fold(0.0, f64::max);
                    d.m >= 1
                        && d.m as f64 <= q
                        && (delta - d.delta).abs() < 1e-12
                        && again == d.delta
                        && delta <= q.powf(-1.0 / l as f64) + 1e-12
                });
                match verified {
                    Ok(true) => ok += 1,
                    _ => {
                        first_failure.get_or_insert(alpha);
                    }
                }
            }
            let mut rec = CheckRecord::new(format!("dio l={l} q={q}"), ok == trials)
                .predicted(format!("{trials}/{trials}"))
                .estimated(ok as f64)
                .detail(format!("{ok}/{trials} pass"));
            if let Some(a) = first_failure {
                rec = rec.detail(format!("{ok}/{trials} pass, first failure alpha = {a:?}"));
            }
            out.push(rec);
        }
    }
    out
}

/// Random bundle with rank `1..=max_rank` and weight denominators up to `max_den`.
pub fn random_bundle(rng: &mut impl Rng, max_rank: usize, max_den: i64) -> FilteredBundle {
    let rank = rng.gen_range(1..=max_rank);
    FilteredBundle::from_weights((0..rank).map(|_| random_weight(rng, max_den, 3)))
        .expect("rank is positive")
}

/// Random rational in `[-span, span]` with denominator up to `max_den`.
pub fn random_weight(rng: &mut impl Rng, max_den: i64, span: i64) -> Weight {
    let d = rng.gen_range(1..=max_den);
    Weight::new(rng.gen_range(-span * d..=span * d), d)
}

struct Tally {
    name: &'static str,
    ok: usize,
    total: usize,
    first_failure: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            ok: 0,
            total: 0,
            first_failure: None,
        }
    }

    fn record(&mut self, pass: bool, ctx: impl FnOnce() -> String) {
        self.total += 1;
        if pass {
            self.ok += 1;
        } else if self.first_failure.is_none() {
            self.first_failure = Some(ctx());
        }
    }

    fn into_record(self) -> CheckRecord {
        let mut rec = CheckRecord::new(self.name, self.ok == self.total)
            .predicted(format!("{}/{}", self.total, self.total))
            .estimated(self.ok as f64)
            .tolerance(0.0);
        rec = rec.detail(match self.first_failure {
            Some(f) => format!("{}/{} pass, first failure: {f}", self.ok, self.total),
            None => format!("{}/{} pass", self.ok, self.total),
        });
        rec
    }
}

/// Exact identities of the calculus on seeded random bundles: `trials`
/// single-bundle cases and `trials / 2` pairs.
pub fn calculus_suite(seed: u64, trials: usize) -> Vec<CheckRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one = Weight::one();
    let mut dual_inv = Tally::new("dual involution");
    let mut shift = Tally::new("gamma shift by rank");
    let mut jumps = Tally::new("gamma jumps match jump set");
    let mut eps = Tally::new("dual epsilon is negated par");
    for _ in 0..trials {
        let fb = random_bundle(&mut rng, 6, 60);
        let a = random_weight(&mut rng, 60, 3);
        let ctx = || format!("{:?} at a = {a}", fb.weights());
        dual_inv.record(fb.dual().dual() == fb, ctx);
        let rank = Weight::from_integer(fb.rank() as i64);
        shift.record(fb.gamma(&(&a + &one)) - fb.gamma(&a) == rank, ctx);
        let b = &a + &Weight::new(rng.gen_range(1..=120), rng.gen_range(1..=60));
        let counted: usize = fb
            .jump_set(&a, &b)
            .map(|j| j.iter().map(|p| p.1).sum())
            .unwrap_or(usize::MAX);
        let rise = fb.gamma(&b) - fb.gamma(&a);
        jumps.record(
            rise == Weight::from_integer(counted as i64) && !rise.is_negative(),
            ctx,
        );
        let de = fb.dual_epsilon(&a);
        let neg: Vec<Weight> = fb.par(&a).iter().map(|w| -w).collect();
        eps.record(crate::weights::multiset_eq(&de.dual_par, &neg), ctx);
    }
    let mut tensor_gamma = Tally::new("tensor gamma identity");
    let mut hom = Tally::new("hom is dual tensor");
    for _ in 0..trials / 2 {
        let f1 = random_bundle(&mut rng, 4, 60);
        let f2 = random_bundle(&mut rng, 4, 60);
        let ctx = || format!("{:?} and {:?}", f1.weights(), f2.weights());
        let zero = Weight::zero();
        let b: Weight = f1.weights().iter().sum();
        let c: Weight = f2.weights().iter().sum();
        let expected = Weight::from_integer(-tensor_ceiling_sum(&f1, &f2))
            + b.scale(&BigInt::from(f2.rank()))
            + c.scale(&BigInt::from(f1.rank()));
        tensor_gamma.record(f1.tensor(&f2).gamma(&zero) == expected, ctx);
        hom.record(f1.hom(&f2) == f1.dual().tensor(&f2), ctx);
    }
    [dual_inv, shift, jumps, eps, tensor_gamma, hom]
        .into_iter()
        .map(Tally::into_record)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Weight {
        s.parse().unwrap()
    }

    fn quick() -> CheckConfig {
        CheckConfig::default()
    }

    #[test]
    fn gamma_check_on_a_line() {
        let recs = run_check(&MetricModel::line(w("1/2"), 0), CheckKind::Gamma, &quick());
        assert_eq!(recs.len(), 1);
        assert!(recs[0].passed());
        assert_eq!(recs[0].predicted.as_deref(), Some("1/2"));
        assert!((recs[0].estimated.unwrap() - 0.5).abs() < 1e-2);
    }

    #[test]
    fn negative_control_passes_acceptability() {
        let m = MetricModel::perturb(
            crate::models::Perturbation::LogPower {
                coef: 1.0,
                power: 2,
            },
            MetricModel::line(w("0"), 0),
        );
        let recs = run_check(&m, CheckKind::Acceptability, &quick());
        assert!(recs[0].passed(), "{recs:?}");
        assert_eq!(recs[0].predicted.as_deref(), Some("not acceptable"));
        let refused = run_check(&m, CheckKind::Gamma, &quick());
        assert_eq!(refused[0].status, Status::Refused);
    }

    #[test]
    fn weak_norm_on_flat_model() {
        let m = MetricModel::diagonal(&[(w("1/3"), 0), (w("-1/2"), 0)]);
        let recs = run_check(&m, CheckKind::WeakNorm, &quick());
        assert!(recs[0].passed() && recs[0].estimated.unwrap() < 1e-6);
    }

    #[test]
    fn exit_codes_follow_severity() {
        let mut r = RunReport::new(vec![]);
        r.records.push(CheckRecord::new("a", true));
        assert_eq!(r.exit_code(), 0);
        r.records.push(CheckRecord::new("b", false));
        assert_eq!(r.exit_code(), 1);
        r.records
            .push(CheckRecord::from_error("c", &Error::Domain("x".into())));
        assert_eq!(r.exit_code(), 3);
        r.records
            .push(CheckRecord::from_error("d", &Error::Refused("x".into())));
        assert_eq!(r.exit_code(), 4);
        r.finish(Instant::now());
        assert!(!r.pass);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!("default".parse::<BrGrid>().unwrap(), BrGrid::default());
        let g: BrGrid = "0.3,0.05:4:2".parse().unwrap();
        assert_eq!(g.radii, vec![0.3, 0.05]);
        assert_eq!((g.w_count, g.z_count), (4, 2));
        assert!("0.3:4".parse::<BrGrid>().is_err());
        assert!("1.5:4:2".parse::<BrGrid>().is_err());
        let zs = g.z_points(0.05);
        assert!(zs
            .iter()
            .all(|z| z.norm() >= 0.05 - 1e-15 && z.norm() < 1.0));
        assert!(g.w_points().iter().all(|w| w.norm() <= 2.0 + 1e-15));
    }

    #[test]
    fn suites_are_deterministic() {
        let a = serde_json::to_string(&calculus_suite(7, 40)).unwrap();
        let b = serde_json::to_string(&calculus_suite(7, 40)).unwrap();
        assert_eq!(a, b);
        let recs = calculus_suite(7, 40);
        assert!(recs.iter().all(CheckRecord::passed), "{recs:?}");
        assert!(dio_suite(3, 20, Some(10.0)).iter().all(CheckRecord::passed));
    }

    #[test]
    fn small_br_grid_passes() {
        let g: BrGrid = "0.3:6:4".parse().unwrap();
        let recs = br_suite(&g).unwrap();
        assert!(recs.iter().all(CheckRecord::passed), "{recs:?}");
    }

    #[test]
    fn digests_are_hex_sha256() {
        let d = InputDigest::of("x", "");
        assert_eq!(
            d.sha256,
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
