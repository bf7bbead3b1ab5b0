//! JSON fit reports with tensors embedded as base64 DTF1.

use serde_json::{json, Value};

use crate::dtf::{from_base64, to_base64};
use crate::error::{Error, Result};
use crate::regression::{FitDiagnostics, RegressionFit, RegressionSpec, TuckerCoefficient};
use crate::tensor::{DenseTensor, Matrix};

pub const FIT_FORMAT: &str = "tensorreg-fit-v1";

fn matrix_b64(m: &Matrix) -> String {
    to_base64(&DenseTensor::from_matrix(m))
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or_else(|| Value::String(v.to_string()))
}

fn get_num(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

/// Fit as JSON; `extra` (config echo, timings) is merged at the top level.
pub fn fit_to_json(fit: &RegressionFit, extra: Option<Value>) -> Value {
    let c = &fit.coefficient;
    let mut v = json!({
        "format": FIT_FORMAT,
        "spec": fit.spec,
        "rank": c.rank().to_string(),
        "input_shape": c.input_shape(),
        "output_shape": c.output_shape(),
        "parameter_count": c.parameter_count(),
        "core": to_base64(&c.core),
        "input_factors": c.input_factors.iter().map(matrix_b64).collect::<Vec<_>>(),
        "output_factors": c.output_factors.iter().map(matrix_b64).collect::<Vec<_>>(),
        "intercept": to_base64(&fit.intercept),
        "objective_trace": fit.objective_trace.iter().map(|&f| num(f)).collect::<Vec<_>>(),
        "ssr": num(fit.ssr),
        "iterations": fit.iterations,
        "converged": fit.converged,
        "diagnostics": {
            "warnings": fit.diagnostics.warnings,
            "pseudo_inverse_solves": fit.diagnostics.pseudo_inverse_solves,
            "max_output_factor_condition": num(fit.diagnostics.max_output_factor_condition),
        },
    });
    if let (Some(Value::Object(extra)), Value::Object(map)) = (extra, &mut v) {
        for (k, val) in extra {
            map.insert(k, val);
        }
    }
    v
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::Format(format!("fit report is missing '{}'", key)))
}

fn tensor_field(v: &Value, key: &str) -> Result<DenseTensor> {
    from_base64(field(v, key)?.as_str().ok_or_else(|| Error::Format(format!("'{}' must be a string", key)))?)
}

fn factors(v: &Value, key: &str) -> Result<Vec<Matrix>> {
    field(v, key)?
        .as_array()
        .ok_or_else(|| Error::Format(format!("'{}' must be an array", key)))?
        .iter()
        .map(|s| {
            let t = from_base64(s.as_str().ok_or_else(|| Error::Format(format!("'{}' entries must be strings", key)))?)?;
            t.to_matrix()
        })
        .collect()
}

pub fn fit_from_json(v: &Value) -> Result<RegressionFit> {
    if field(v, "format")?.as_str() != Some(FIT_FORMAT) {
        return Err(Error::Format(format!("not a {} document", FIT_FORMAT)));
    }
    let spec: RegressionSpec =
        serde_json::from_value(field(v, "spec")?.clone()).map_err(|e| Error::Format(format!("spec: {}", e)))?;
    let coefficient = TuckerCoefficient::new(
        tensor_field(v, "core")?,
        factors(v, "input_factors")?,
        factors(v, "output_factors")?,
    )?;
    let trace = field(v, "objective_trace")?
        .as_array()
        .ok_or_else(|| Error::Format("'objective_trace' must be an array".into()))?
        .iter()
        .map(|x| get_num(x).ok_or_else(|| Error::Format("bad objective value".into())))
        .collect::<Result<Vec<_>>>()?;
    let d = field(v, "diagnostics")?;
    let diagnostics = FitDiagnostics {
        warnings: d
            .get("warnings")
            .and_then(|w| serde_json::from_value(w.clone()).ok())
            .unwrap_or_default(),
        pseudo_inverse_solves: d.get("pseudo_inverse_solves").and_then(Value::as_u64).unwrap_or(0) as usize,
        max_output_factor_condition: d.get("max_output_factor_condition").and_then(get_num).unwrap_or(f64::NAN),
    };
    Ok(RegressionFit {
        spec,
        coefficient,
        intercept: tensor_field(v, "intercept")?,
        objective_trace: trace,
        ssr: get_num(field(v, "ssr")?).ok_or_else(|| Error::Format("bad ssr".into()))?,
        iterations: field(v, "iterations")?.as_u64().unwrap_or(0) as usize,
        converged: field(v, "converged")?.as_bool().unwrap_or(false),
        diagnostics,
    })
}
