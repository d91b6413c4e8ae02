//! Restoration quality and run reports.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::cg::CgTrace;
use crate::direct::MuSelection;
use crate::error::{Error, Result};
use crate::image::{ensure_same_dims, frobenius_norm, Image};

/// `||restored - truth|| / ||truth||` in the Frobenius norm.
pub fn relative_error(restored: &Image, truth: &Image) -> Result<f64> {
    ensure_same_dims(restored.dims(), truth.dims())?;
    let denom = frobenius_norm(truth);
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(frobenius_norm(&restored.sub(truth)?) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    PseudoInverse,
    Tikhonov,
    Cg,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::PseudoInverse => "pseudo-inverse",
            Method::Tikhonov => "tikhonov",
            Method::Cg => "cg",
        }
    }
}

/// The restoration parameter together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Parameter {
    /// Threshold on `|K_hat|` for the pseudo-inverse.
    Tolerance(f64),
    /// Tikhonov `mu`; `criterion` is `"manual"` or a selector name.
    Mu { value: f64, criterion: &'static str },
    /// CG iteration count; `criterion` is `"fixed"` or `"discrepancy"`.
    Iterations { value: usize, criterion: &'static str },
}

impl Parameter {
    pub fn value(&self) -> f64 {
        match *self {
            Parameter::Tolerance(v) => v,
            Parameter::Mu { value, .. } => value,
            Parameter::Iterations { value, .. } => value as f64,
        }
    }

    pub fn criterion(&self) -> &'static str {
        match *self {
            Parameter::Tolerance(_) => "tolerance",
            Parameter::Mu { criterion, .. } | Parameter::Iterations { criterion, .. } => criterion,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeblurReport {
    pub method: Method,
    pub parameter: Parameter,
    /// Present when the true image is known.
    pub relative_error: Option<f64>,
    /// `||A f - g||`
    pub residual_norm: f64,
    pub wall_time: f64,
    pub selection: Option<MuSelection>,
    pub trace: Option<CgTrace>,
}

impl DeblurReport {
    /// Single-level JSON object. `wall_time` is included only on request so
    /// that reports are reproducible byte for byte by default.
    pub fn to_flat_json(&self, include_wall_time: bool) -> Value {
        let mut m = Map::new();
        m.insert("method".into(), self.method.as_str().into());
        m.insert("parameter".into(), number(self.parameter.value()));
        m.insert("criterion".into(), self.parameter.criterion().into());
        m.insert("relative_error".into(), self.relative_error.map_or(Value::Null, number));
        m.insert("residual_norm".into(), number(self.residual_norm));
        if include_wall_time {
            m.insert("wall_time".into(), number(self.wall_time));
        }
        if let Some(sel) = &self.selection {
            m.insert("selection_evaluations".into(), sel.evaluations.into());
            m.insert("selection_converged".into(), sel.converged.into());
            let (lo, hi) = sel.bracket.map_or((Value::Null, Value::Null), |(a, b)| (number(a), number(b)));
            m.insert("selection_bracket_lo".into(), lo);
            m.insert("selection_bracket_hi".into(), hi);
        }
        if let Some(trace) = &self.trace {
            m.insert("iterations".into(), trace.iterations().into());
            m.insert("stop_reason".into(), serde_json::to_value(trace.stop_reason).unwrap_or(Value::Null));
        }
        Value::Object(m)
    }
}

fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}
