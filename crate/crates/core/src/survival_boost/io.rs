use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::SurvivalModel;
use crate::data::{FeatureInfo, FeatureMatrix, TimeGrid};
use crate::error::{Error, Result};
use crate::predictor::{CifMatrix, MarginalModel, Predictor};

pub const MODEL_FORMAT_VERSION: u32 = 1;

const KIND_BOOST: &str = "survival_boost";

#[derive(Serialize)]
struct EnvelopeOut<'a, T: Serialize> {
    format_version: u32,
    kind: &'a str,
    model: &'a T,
}

/// Any model the CLI can persist.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    SurvivalBoost(SurvivalModel),
    Marginal(MarginalModel),
}

impl AnyModel {
    pub fn kind(&self) -> &'static str {
        match self {
            AnyModel::SurvivalBoost(_) => KIND_BOOST,
            AnyModel::Marginal(m) => m.kind.as_str(),
        }
    }

    pub fn feature_info(&self) -> &[FeatureInfo] {
        match self {
            AnyModel::SurvivalBoost(m) => &m.feature_info,
            AnyModel::Marginal(m) => &m.feature_info,
        }
    }

    pub fn t_max(&self) -> f64 {
        match self {
            AnyModel::SurvivalBoost(m) => m.t_max,
            AnyModel::Marginal(m) => m.t_max,
        }
    }
}

impl Predictor for AnyModel {
    fn k_events(&self) -> u32 {
        match self {
            AnyModel::SurvivalBoost(m) => m.k_events,
            AnyModel::Marginal(m) => m.k_events,
        }
    }

    fn predict_cif(&self, features: &FeatureMatrix, grid: &TimeGrid) -> Result<CifMatrix> {
        match self {
            AnyModel::SurvivalBoost(m) => m.predict_cif(features, grid),
            AnyModel::Marginal(m) => m.predict_cif(features, grid),
        }
    }
}

fn write_envelope<T: Serialize>(path: &Path, kind: &str, model: &T) -> Result<()> {
    let env = EnvelopeOut {
        format_version: MODEL_FORMAT_VERSION,
        kind,
        model,
    };
    let text = serde_json::to_string(&env).map_err(|e| Error::ModelFormat(e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses the envelope, checking the format version, and returns
/// `(kind, model payload)`.
fn read_envelope(path: &Path) -> Result<(String, Value)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut v: Value = serde_json::from_str(&text).map_err(|e| Error::ModelFormat(e.to_string()))?;
    let version = v
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::ModelFormat("missing format_version".into()))?;
    if version != MODEL_FORMAT_VERSION as u64 {
        return Err(Error::VersionMismatch {
            found: version.min(u32::MAX as u64) as u32,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::ModelFormat("missing kind".into()))?
        .to_string();
    let model = v
        .get_mut("model")
        .map(Value::take)
        .ok_or_else(|| Error::ModelFormat("missing model".into()))?;
    Ok((kind, model))
}

fn decode<T: for<'de> Deserialize<'de>>(model: Value) -> Result<T> {
    serde_json::from_value(model).map_err(|e| Error::ModelFormat(e.to_string()))
}

pub fn save_model(model: &SurvivalModel, path: impl AsRef<Path>) -> Result<()> {
    write_envelope(path.as_ref(), KIND_BOOST, model)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SurvivalModel> {
    let (kind, model) = read_envelope(path.as_ref())?;
    if kind != KIND_BOOST {
        return Err(Error::WrongModelKind {
            expected: KIND_BOOST.into(),
            found: kind,
        });
    }
    decode(model)
}

pub fn save_any(model: &AnyModel, path: impl AsRef<Path>) -> Result<()> {
    match model {
        AnyModel::SurvivalBoost(m) => save_model(m, path),
        AnyModel::Marginal(m) => write_envelope(path.as_ref(), m.kind.as_str(), m),
    }
}

pub fn load_any(path: impl AsRef<Path>) -> Result<AnyModel> {
    let (kind, model) = read_envelope(path.as_ref())?;
    match kind.as_str() {
        KIND_BOOST => decode(model).map(AnyModel::SurvivalBoost),
        "aalen_johansen" | "kaplan_meier" => {
            let m: MarginalModel = decode(model)?;
            if m.kind.as_str() != kind {
                return Err(Error::ModelFormat(format!(
                    "envelope kind {kind} does not match payload kind {}",
                    m.kind.as_str()
                )));
            }
            Ok(AnyModel::Marginal(m))
        }
        other => Err(Error::WrongModelKind {
            expected: "survival_boost, aalen_johansen or kaplan_meier".into(),
            found: other.into(),
        }),
    }
}
