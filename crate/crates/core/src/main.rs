use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use parabund::calculus::{BundleDescriptor, FilteredBundle, SectionCoordinates};
use parabund::estimators::{
    gamma_estimate, membership_test, polylog_bounded_check, weak_norm_fit, FitOptions,
    RadialSampleSchedule, SlopeModel, DEFAULT_TOLERANCE,
};
use parabund::models::{
    acceptability_scan, MetricModel, DEFAULT_STEP_RATIO, DEFAULT_TREND_TOLERANCE,
};
use parabund::report::{
    run_check, run_suite, BrGrid, CheckConfig, CheckKind, InputDigest, RunReport, SuiteConfig,
    SuiteKind,
};
use parabund::{Error, Weight};

/// Exact filtered-bundle calculus and numerical checks on the punctured disk.
#[derive(Parser)]
#[command(name = "parabund", version)]
struct Cli {
    /// Seed for randomized batteries.
    #[arg(long, global = true, env = "PARABUND_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact operations on filtered bundles.
    Fb(FbArgs),
    /// Predict-vs-estimate checks on a metric model.
    Check(CheckArgs),
    /// Seeded property batteries.
    Suite(SuiteArgs),
    /// Raw numeric estimates for a metric model.
    Estimate(EstimateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FbOp {
    Par,
    Gamma,
    Det,
    Dual,
    Tensor,
    Hom,
    Pullback,
    Frame,
    Degree,
    Compatible,
}

#[derive(Args)]
struct FbArgs {
    #[arg(value_enum)]
    op: FbOp,
    /// Bundle descriptors, inline JSON or file paths (two for tensor and hom).
    #[arg(required = true, num_args = 1..=2)]
    inputs: Vec<String>,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    anchor: String,
    /// Cover degree for `pullback`.
    #[arg(long)]
    m: Option<i64>,
    /// Section orders for `degree`, e.g. `0,-1,_` (`_` for a zero coordinate).
    #[arg(long, allow_hyphen_values = true)]
    section: Option<String>,
    /// Candidate degrees for `compatible`, e.g. `-1/3,0`.
    #[arg(long, allow_hyphen_values = true)]
    degrees: Option<String>,
}

#[derive(Args)]
struct NumericArgs {
    /// `r0,sigma,count,angles`
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Include per-radius samples in the output.
    #[arg(long)]
    dump_samples: bool,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    anchor: String,
}

#[derive(Args)]
struct CheckArgs {
    /// Metric model, inline JSON or file path.
    model: String,
    /// Comma-separated subset of gamma, acceptability, weak-norm, membership, cover.
    #[arg(long, value_delimiter = ',', value_parser = parse_check)]
    checks: Option<Vec<CheckKind>>,
    /// Cover degree for the `cover` check.
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[command(flatten)]
    numeric: NumericArgs,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(value_parser = parse_suite)]
    name: SuiteKind,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    /// `default` or `r1,r2,...:W:Z`.
    #[arg(long, default_value = "default")]
    grid: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    Gamma,
    Membership,
    Polylog,
    WeakNorm,
    Acceptability,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(value_enum)]
    quantity: Quantity,
    /// Metric model, inline JSON or file path.
    model: String,
    /// Laurent order for `membership`.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    k: i64,
    /// Polylog exponent for `polylog`.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    n: i32,
    /// Section orders for `polylog`, e.g. `0,_`.
    #[arg(long, allow_hyphen_values = true)]
    section: Option<String>,
    /// Fit without the polylog regressor.
    #[arg(long)]
    linear: bool,
    #[command(flatten)]
    numeric: NumericArgs,
}

fn parse_check(s: &str) -> Result<CheckKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_suite(s: &str) -> Result<SuiteKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure with its exit code.
struct Exit(i32, String);

impl From<Error> for Exit {
    fn from(e: Error) -> Self {
        Exit(e.exit_code(), e.to_string())
    }
}

fn input_error(msg: impl Into<String>) -> Exit {
    Exit(2, msg.into())
}

/// Inline JSON when it looks like JSON, otherwise a file path.
fn read_input(arg: &str) -> Result<(String, String), Exit> {
    let t = arg.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        return Ok(("inline".into(), arg.to_string()));
    }
    let text = std::fs::read_to_string(Path::new(arg))
        .map_err(|e| input_error(format!("cannot read {arg}: {e}")))?;
    Ok((arg.to_string(), text))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, Exit> {
    serde_json::from_str(text).map_err(|e| input_error(format!("invalid input: {e}")))
}

fn weight(s: &str) -> Result<Weight, Exit> {
    Ok(s.parse::<Weight>()?)
}

fn weight_list(s: &str) -> Result<Vec<Weight>, Exit> {
    s.split(',').map(|p| weight(p.trim())).collect()
}

fn orders(s: &str) -> Result<Vec<Option<i64>>, Exit> {
    s.split(',')
        .map(|p| match p.trim() {
            "_" => Ok(None),
            t => t
                .parse()
                .map(Some)
                .map_err(|_| input_error(format!("bad section order {t:?}"))),
        })
        .collect()
}

fn schedule(s: &Option<String>) -> Result<RadialSampleSchedule, Exit> {
    match s {
        Some(s) => Ok(s.parse()?),
        None => Ok(RadialSampleSchedule::default()),
    }
}

fn load_model(arg: &str) -> Result<(InputDigest, MetricModel), Exit> {
    let (label, text) = read_input(arg)?;
    let mm: MetricModel = parse_json(&text)?;
    mm.validate().map_err(|e| input_error(e.to_string()))?;
    Ok((InputDigest::of(label, &text), mm))
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn cmd_fb(args: &FbArgs) -> Result<Value, Exit> {
    let mut bundles = Vec::new();
    for arg in &args.inputs {
        let (_, text) = read_input(arg)?;
        let desc: BundleDescriptor = parse_json(&text)?;
        bundles.push(FilteredBundle::try_from(desc)?);
    }
    let need = match args.op {
        FbOp::Tensor | FbOp::Hom => 2,
        _ => 1,
    };
    if bundles.len() != need {
        return Err(input_error(format!(
            "expected {need} bundle descriptor(s), got {}",
            bundles.len()
        )));
    }
    let a = weight(&args.anchor)?;
    let fb = &bundles[0];
    let strings = |ws: &[Weight]| ws.iter().map(ToString::to_string).collect::<Vec<_>>();
    Ok(match args.op {
        FbOp::Par => json!({ "anchor": a.to_string(), "par": strings(&fb.par(&a)) }),
        FbOp::Gamma => json!(fb.gamma(&a).to_string()),
        FbOp::Det => {
            let d = fb.det();
            json!({ "bundle": d.bundle, "lattice_index": d.lattice_index.to_string() })
        }
        FbOp::Dual => to_json(&fb.dual()),
        FbOp::Tensor => to_json(&fb.tensor(&bundles[1])),
        FbOp::Hom => to_json(&fb.hom(&bundles[1])),
        FbOp::Pullback => {
            let m = args.m.ok_or_else(|| input_error("pullback needs --m"))?;
            to_json(&fb.cyclic_pullback(m)?)
        }
        FbOp::Frame => {
            let e = fb.frame_exponents(&a);
            json!({ "anchor": a.to_string(), "exponents": e.0.iter().map(ToString::to_string).collect::<Vec<_>>() })
        }
        FbOp::Degree => {
            let s = args
                .section
                .as_deref()
                .ok_or_else(|| input_error("degree needs --section"))?;
            let sec = SectionCoordinates::new(orders(s)?);
            json!(fb.section_degree(&sec)?.to_string())
        }
        FbOp::Compatible => {
            let d = args
                .degrees
                .as_deref()
                .ok_or_else(|| input_error("compatible needs --degrees"))?;
            json!({ "anchor": a.to_string(), "compatible": fb.is_compatible_frame(&a, &weight_list(d)?) })
        }
    })
}

fn cmd_check(args: &CheckArgs, command: Vec<String>) -> Result<RunReport, Exit> {
    let started = Instant::now();
    let (digest, mm) = load_model(&args.model)?;
    let cfg = CheckConfig {
        schedule: schedule(&args.numeric.schedule)?,
        tolerance: args.numeric.tolerance,
        anchor: weight(&args.numeric.anchor)?,
        cover_degree: args.m,
        dump_samples: args.numeric.dump_samples,
    };
    let checks = args.checks.clone().unwrap_or_else(|| {
        if mm.has_perturbation() {
            vec![CheckKind::Acceptability]
        } else {
            vec![
                CheckKind::Gamma,
                CheckKind::Acceptability,
                CheckKind::WeakNorm,
            ]
        }
    });
    let mut report = RunReport::new(command);
    report.inputs.push(digest);
    report.schedule = Some(cfg.schedule);
    for kind in checks {
        report.records.extend(run_check(&mm, kind, &cfg));
    }
    report.finish(started);
    Ok(report)
}

fn cmd_suite(args: &SuiteArgs, seed: u64, command: Vec<String>) -> Result<RunReport, Exit> {
    let started = Instant::now();
    let cfg = SuiteConfig {
        seed,
        trials: args.trials,
        q: args.q,
        grid: args.grid.parse::<BrGrid>()?,
    };
    let mut report = RunReport::new(command);
    report.seed = Some(seed);
    report.records = run_suite(args.name, &cfg)?;
    report.finish(started);
    Ok(report)
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(Value, i32), Exit> {
    let (_, mm) = load_model(&args.model)?;
    let sched = schedule(&args.numeric.schedule)?;
    let opts = FitOptions {
        model: if args.linear {
            SlopeModel::Linear
        } else {
            SlopeModel::PolylogCorrected
        },
        tolerance: args.numeric.tolerance.unwrap_or(DEFAULT_TOLERANCE),
    };
    let dump = args.numeric.dump_samples;
    let a = weight(&args.numeric.anchor)?;
    Ok(match args.quantity {
        Quantity::Gamma => {
            let mut rep = gamma_estimate(&mm, &sched, &opts)?;
            let code = if rep.converged() { 0 } else { 1 };
            if !dump {
                rep.samples.clear();
            }
            (to_json(&rep), code)
        }
        Quantity::Membership => (
            to_json(&membership_test(&mm, args.k, &a, &sched, &opts)?),
            0,
        ),
        Quantity::Polylog => {
            let sec = match &args.section {
                Some(s) => orders(s)?,
                None => vec![Some(0); mm.rank()],
            };
            let mut b = polylog_bounded_check(&mm, &sec, &a, args.n, &sched)?;
            if !dump {
                b.samples.clear();
            }
            (to_json(&b), 0)
        }
        Quantity::WeakNorm => {
            let mut f = weak_norm_fit(&mm, &sched)?;
            if !dump {
                f.samples.clear();
            }
            let code = if f.holds { 0 } else { 1 };
            (to_json(&f), code)
        }
        Quantity::Acceptability => {
            let tol = args.numeric.tolerance.unwrap_or(DEFAULT_TREND_TOLERANCE);
            let mut s = acceptability_scan(&mm, &sched, DEFAULT_STEP_RATIO, tol)?;
            if !dump {
                s.samples.clear();
            }
            (to_json(&s), 0)
        }
    })
}

fn emit(v: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(v).expect("json values serialize")
    );
}

fn run(cli: Cli) -> Result<i32, Exit> {
    let command: Vec<String> = std::env::args().collect();
    match &cli.command {
        Command::Fb(args) => {
            emit(&cmd_fb(args)?);
            Ok(0)
        }
        Command::Check(args) => {
            let report = cmd_check(args, command)?;
            emit(&to_json(&report));
            eprint!("{}", report.summary());
            Ok(report.exit_code())
        }
        Command::Suite(args) => {
            let report = cmd_suite(args, cli.seed, command)?;
            emit(&to_json(&report));
            eprint!("{}", report.summary());
            Ok(report.exit_code())
        }
        Command::Estimate(args) => {
            let (v, code) = cmd_estimate(args)?;
            emit(&v);
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(Exit(code, msg)) => {
            eprintln!("parabund: {msg}");
            ExitCode::from(code as u8)
        }
    }
}
