//! Browser bindings for the parabund demo page.
//!
//! Each export takes and returns JSON strings. The pure `*_json` functions
//! hold the logic so they can be tested natively.

use parabund::calculus::FilteredBundle;
use parabund::estimators::{gamma_estimate, FitOptions, RadialSampleSchedule};
use parabund::models::MetricModel;
use parabund::Weight;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn bundle(text: &str) -> Result<FilteredBundle, String> {
    serde_json::from_str(text).map_err(|e| format!("bundle descriptor: {e}"))
}

fn weight(text: &str) -> Result<Weight, String> {
    text.trim()
        .parse()
        .map_err(|e: parabund::Error| e.to_string())
}

fn strings(ws: &[Weight]) -> Vec<String> {
    ws.iter().map(ToString::to_string).collect()
}

/// The step function `a -> gamma(a)` on `(lo, hi]`: its value at `lo` and
/// every jump with multiplicity.
pub fn staircase_json(descriptor: &str, lo: &str, hi: &str) -> Result<String, String> {
    let fb = bundle(descriptor)?;
    let (lo, hi) = (weight(lo)?, weight(hi)?);
    let jumps = fb.jump_set(&lo, &hi).map_err(|e| e.to_string())?;
    let steps: Vec<Value> = jumps
        .iter()
        .map(|(a, mult)| {
            let g = fb.gamma(a);
            json!({ "a": a.to_string(), "a_f64": a.to_f64(), "gamma": g.to_string(), "gamma_f64": g.to_f64(), "multiplicity": mult })
        })
        .collect();
    let g0 = fb.gamma(&lo);
    Ok(json!({
        "lo": lo.to_string(), "lo_f64": lo.to_f64(),
        "hi": hi.to_string(), "hi_f64": hi.to_f64(),
        "gamma_lo": g0.to_string(), "gamma_lo_f64": g0.to_f64(),
        "steps": steps,
    })
    .to_string())
}

/// Exact bundle arithmetic: `dual`, `tensor`, `hom`, `par` or `gamma`.
pub fn calculate_json(op: &str, first: &str, second: &str, anchor: &str) -> Result<String, String> {
    let a = weight(anchor)?;
    let fb = bundle(first)?;
    let other = || bundle(second);
    let out = match op {
        "dual" => serde_json::to_value(fb.dual()).map_err(|e| e.to_string())?,
        "tensor" => serde_json::to_value(fb.tensor(&other()?)).map_err(|e| e.to_string())?,
        "hom" => serde_json::to_value(fb.hom(&other()?)).map_err(|e| e.to_string())?,
        "par" => json!({ "anchor": a.to_string(), "par": strings(&fb.par(&a)) }),
        "gamma" => json!({ "anchor": a.to_string(), "gamma": fb.gamma(&a).to_string() }),
        _ => return Err(format!("unknown operation {op:?}")),
    };
    Ok(out.to_string())
}

/// Per-radius `(log r, mean log det H)` for a model, with the fitted gamma
/// and the exact prediction.
pub fn slope_samples_json(model: &str, schedule: &str) -> Result<String, String> {
    let mm: MetricModel = serde_json::from_str(model).map_err(|e| format!("model: {e}"))?;
    mm.validate().map_err(|e| e.to_string())?;
    let sched: RadialSampleSchedule = if schedule.trim().is_empty() {
        RadialSampleSchedule::default()
    } else {
        schedule
            .parse()
            .map_err(|e: parabund::Error| e.to_string())?
    };
    let rep = gamma_estimate(&mm, &sched, &FitOptions::default()).map_err(|e| e.to_string())?;
    let points: Vec<[f64; 2]> = rep.samples.iter().map(|(r, y)| [r.ln(), *y]).collect();
    Ok(json!({
        "gamma": rep.value,
        "slope": rep.slope_fit,
        "polylog": rep.polylog_fit,
        "residual": rep.residual,
        "verdict": rep.verdict,
        "predicted": mm.raw_gamma().ok().map(|g| g.to_string()),
        "tail_start": sched.tail_start(),
        "points": points,
    })
    .to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn gamma_staircase(descriptor: &str, lo: &str, hi: &str) -> Result<String, JsError> {
    js(staircase_json(descriptor, lo, hi))
}

#[wasm_bindgen]
pub fn calculate(op: &str, first: &str, second: &str, anchor: &str) -> Result<String, JsError> {
    js(calculate_json(op, first, second, anchor))
}

#[wasm_bindgen]
pub fn slope_samples(model: &str, schedule: &str) -> Result<String, JsError> {
    js(slope_samples_json(model, schedule))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = r#"{"rank":2,"weights":["-1/3","-1/2"]}"#;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn staircase_steps_by_multiplicity() {
        let v = parse(&staircase_json(TWO, "0", "2").unwrap());
        assert_eq!(v["gamma_lo"], "-5/6");
        let steps = v["steps"].as_array().unwrap();
        let points: Vec<&str> = steps.iter().map(|s| s["a"].as_str().unwrap()).collect();
        assert_eq!(points, ["1/2", "2/3", "3/2", "5/3"]);
        assert_eq!(steps.last().unwrap()["gamma"], "19/6");
        assert!(staircase_json(TWO, "1", "0").is_err());
    }

    #[test]
    fn calculator_ops() {
        let one = r#"{"rank":1,"weights":["-1/2"]}"#;
        let v = parse(&calculate_json("tensor", TWO, one, "0").unwrap());
        assert_eq!(v["weights"], json!(["-5/6", "0"]));
        let v = parse(&calculate_json("hom", one, one, "0").unwrap());
        assert_eq!(v["weights"], json!(["0"]));
        let v = parse(&calculate_json("gamma", TWO, "", "1").unwrap());
        assert_eq!(v["gamma"], "7/6");
        assert!(calculate_json("tensor", TWO, "", "0").is_err());
        assert!(calculate_json("cube", TWO, "", "0").is_err());
    }

    #[test]
    fn slope_samples_recover_gamma() {
        let v = parse(&slope_samples_json(r#"{"line":{"c":"1/3","N":2}}"#, "").unwrap());
        assert!((v["gamma"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-2);
        assert_eq!(v["predicted"], "1/3");
        assert_eq!(v["points"].as_array().unwrap().len(), 18);
        assert!(slope_samples_json(r#"{"line":{"c":"1/3"}}"#, "0.1,0.5,3,4").is_err());
    }
}
