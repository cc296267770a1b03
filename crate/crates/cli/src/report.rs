//! JSON report layout. Field order follows struct order, so output is stable.

use serde::Serialize;

use phasekey::properties::PropertyOutcome;
use phasekey::Matrix;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub schema: u32,
    pub command: &'static str,
    pub inputs: Inputs,
    #[serde(flatten)]
    pub body: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

#[derive(Debug, Default, Serialize)]
pub struct Inputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    pub frame_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct CertificateOut {
    pub certificate: &'static str,
    pub verdict: bool,
    pub method: &'static str,
    /// `partition` or `columns`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_kind: Option<&'static str>,
    /// 1-based indices.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<usize>>,
}

#[derive(Debug, Serialize)]
pub struct CheckBody {
    pub certificates: Vec<CertificateOut>,
    pub all_true: bool,
}

#[derive(Debug, Serialize)]
pub struct Witnesses {
    pub x_max: Vec<f64>,
    pub y_max: Vec<f64>,
    pub x_min: Vec<f64>,
    pub y_min: Vec<f64>,
    #[serde(rename = "X_max")]
    pub config_x_max: Vec<Vec<f64>>,
    #[serde(rename = "Y_max")]
    pub config_y_max: Vec<Vec<f64>>,
    #[serde(rename = "X_min")]
    pub config_x_min: Vec<Vec<f64>>,
    #[serde(rename = "Y_min")]
    pub config_y_min: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct ClauseOut {
    pub clause: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Serialize)]
pub struct BoundsBody {
    #[serde(rename = "A0")]
    pub a0: f64,
    #[serde(rename = "B0")]
    pub b0: f64,
    #[serde(rename = "I0")]
    pub i0: Vec<usize>,
    #[serde(rename = "I0_complement")]
    pub i0_complement: Vec<usize>,
    pub degenerate: bool,
    pub u: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub u1_placeholder: bool,
    pub u2_placeholder: bool,
    pub witnesses: Witnesses,
    /// `pass`, `pass (upper only)` or `fail`.
    pub achievement: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub achievement_clauses: Vec<ClauseOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub achievement_error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct DecodeBody {
    pub encoder: &'static str,
    pub residual: f64,
    pub recovered: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct MetricBody {
    pub space: &'static str,
    pub distance: f64,
    /// 1-based target row of each row of `y`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<usize>>,
}

#[derive(Debug, Serialize)]
pub struct VerifyBody {
    pub phase_retrievable: bool,
    pub properties: Vec<PropertyOutcome>,
    pub all_passed: bool,
}

pub fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(<[f64]>::to_vec).collect()
}
