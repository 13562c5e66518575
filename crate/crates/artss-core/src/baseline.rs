//! A non-neural reference TSS predictor: ridge-regularized linear
//! regression on pooled joint-crop statistics. It exists so the pipeline
//! runs end to end without any external model; it makes no accuracy claim
//! beyond the synthetic suite.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsutil::atomic_write;
use crate::maskgen::otsu_level;
use crate::model::TSS_MAX;
use crate::seqbuild::{masked_pool, JointSequence, PoolMode};

/// Statistics per crop: mean, variance, 8 histogram bins, foreground
/// fraction.
pub const FEATURES_PER_CROP: usize = 11;

/// Feature schema version embedded in persisted weights.
pub const FEATURE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("sequence has no valid slots to featurize")]
    EmptySequence,
    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training set is empty or inconsistent: {0}")]
    BadTrainingSet(String),
    #[error("lambda must be non-negative and finite, got {0}")]
    BadLambda(f64),
    #[error("normal equations are singular at lambda = {0}; retry with lambda > 0")]
    Singular(f64),
    #[error("weights file {path}: {msg}")]
    Persist { path: String, msg: String },
}

fn stats_features(values: impl Iterator<Item = f64> + Clone, out: &mut Vec<f64>) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let variance = values.clone().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    out.push(mean);
    out.push(variance);

    let mut hist8 = [0.0f64; 8];
    let mut hist256 = [0u64; 256];
    for v in values {
        let c = v.clamp(0.0, 1.0);
        let b8 = ((c * 8.0) as usize).min(7);
        hist8[b8] += 1.0;
        let b256 = (c * 255.0).round() as usize;
        hist256[b256] += 1;
    }
    for b in hist8 {
        out.push(b / n);
    }
    // Foreground fraction after Otsu; a flat crop has no split, fraction 0.
    let fg = match otsu_level(&hist256) {
        Ok(level) => hist256[level..].iter().sum::<u64>() as f64 / n,
        Err(_) => 0.0,
    };
    out.push(fg);
}

/// Statistics of one crop.
pub fn crop_features(crop: &[f32]) -> Vec<f64> {
    let mut out = Vec::with_capacity(FEATURES_PER_CROP);
    stats_features(crop.iter().map(|&v| v as f64), &mut out);
    out
}

/// Feature dimension for a given slot count.
pub fn feature_dim(l_max: usize) -> usize {
    FEATURES_PER_CROP * (l_max + 1)
}

/// Fixed-dimension feature vector: per-slot crop statistics (all zeros for
/// padded slots, never computed from their pixels) followed by the
/// statistics of the masked mean pool.
pub fn featurize(seq: &JointSequence) -> Result<Vec<f64>, BaselineError> {
    let pooled = masked_pool(seq, PoolMode::Mean).map_err(|_| BaselineError::EmptySequence)?;
    let mut out = Vec::with_capacity(feature_dim(seq.l_max()));
    for (crop, &valid) in seq.crops().iter().zip(seq.validity()) {
        if valid != 0 {
            out.extend(crop_features(crop));
        } else {
            out.extend(std::iter::repeat_n(0.0, FEATURES_PER_CROP));
        }
    }
    stats_features(pooled.iter().copied(), &mut out);
    Ok(out)
}

/// Persisted ridge model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub schema_version: u32,
    pub feature_dim: usize,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    /// Predictions clamp to `[0, clamp_max]`.
    pub clamp_max: f64,
}

/// Closed-form ridge fit: solve `(X^T X + lambda I) w = X^T y` on the
/// bias-augmented design matrix via Cholesky. The bias column is penalized
/// like every other coefficient.
pub fn fit(features: &[Vec<f64>], targets: &[f64], lambda: f64) -> Result<RidgeModel, BaselineError> {
    if features.is_empty() {
        return Err(BaselineError::BadTrainingSet("no samples".into()));
    }
    if features.len() != targets.len() {
        return Err(BaselineError::BadTrainingSet(format!(
            "{} feature rows vs {} targets",
            features.len(),
            targets.len()
        )));
    }
    let dim = features[0].len();
    if dim == 0 || features.iter().any(|f| f.len() != dim) {
        return Err(BaselineError::BadTrainingSet(
            "inconsistent feature dimensions".into(),
        ));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(BaselineError::BadLambda(lambda));
    }

    let n = features.len();
    let aug = dim + 1;
    let mut x = DMatrix::<f64>::zeros(n, aug);
    for (i, row) in features.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            x[(i, j)] = v;
        }
        x[(i, dim)] = 1.0;
    }
    let y = DVector::from_column_slice(targets);
    let mut normal = x.transpose() * &x;
    for j in 0..aug {
        normal[(j, j)] += lambda;
    }
    let rhs = x.transpose() * y;
    let solution = normal
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .filter(|w| w.iter().all(|v| v.is_finite()))
        .ok_or(BaselineError::Singular(lambda))?;

    Ok(RidgeModel {
        schema_version: FEATURE_SCHEMA_VERSION,
        feature_dim: dim,
        weights: solution.as_slice()[..dim].to_vec(),
        intercept: solution[dim],
        lambda,
        clamp_max: TSS_MAX,
    })
}

/// Linear prediction clamped to the valid score range.
pub fn predict(model: &RidgeModel, features: &[f64]) -> Result<f64, BaselineError> {
    if features.len() != model.feature_dim {
        return Err(BaselineError::DimensionMismatch {
            expected: model.feature_dim,
            got: features.len(),
        });
    }
    let raw: f64 = model
        .weights
        .iter()
        .zip(features)
        .map(|(w, f)| w * f)
        .sum::<f64>()
        + model.intercept;
    Ok(raw.clamp(0.0, model.clamp_max))
}

impl RidgeModel {
    pub fn save(&self, path: &std::path::Path) -> Result<(), BaselineError> {
        let json = serde_json::to_string_pretty(self).map_err(|e| BaselineError::Persist {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        atomic_write(path, json.as_bytes()).map_err(|e| BaselineError::Persist {
            path: path.display().to_string(),
            msg: e.to_string(),
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, BaselineError> {
        let text = std::fs::read_to_string(path).map_err(|e| BaselineError::Persist {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let model: RidgeModel =
            serde_json::from_str(&text).map_err(|e| BaselineError::Persist {
                path: path.display().to_string(),
                msg: e.to_string(),
            })?;
        if model.schema_version != FEATURE_SCHEMA_VERSION {
            return Err(BaselineError::Persist {
                path: path.display().to_string(),
                msg: format!(
                    "feature schema {} unsupported (expected {})",
                    model.schema_version, FEATURE_SCHEMA_VERSION
                ),
            });
        }
        Ok(model)
    }
}
