//! TSS regression scoring: MAE, RMSE, Huber loss, and the per-fold report
//! table with an arithmetic-mean average column.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::SharpScore;

/// Default Huber knee.
pub const DEFAULT_HUBER_DELTA: f64 = 1.0;

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("no pairs to score")]
    Empty,
    #[error("ids missing from predictions: {missing_predictions:?}; ids missing from ground truth: {missing_ground_truth:?}")]
    Unpaired {
        missing_predictions: Vec<String>,
        missing_ground_truth: Vec<String>,
    },
    #[error("duplicate id {0}")]
    Duplicate(String),
    #[error("huber delta must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("fold report needs exactly {expected} folds, got {got}")]
    MissingFold { expected: usize, got: usize },
}

/// Pair predictions with ground truth by image id, in ground-truth order.
pub fn pair_by_id(
    preds: &[SharpScore],
    gts: &[SharpScore],
) -> Result<Vec<(f64, f64)>, RegressError> {
    let mut pred_map = std::collections::HashMap::with_capacity(preds.len());
    for p in preds {
        if pred_map.insert(p.image_id.as_str(), p.tss).is_some() {
            return Err(RegressError::Duplicate(p.image_id.clone()));
        }
    }
    let mut gt_seen = std::collections::HashSet::with_capacity(gts.len());
    for g in gts {
        if !gt_seen.insert(g.image_id.as_str()) {
            return Err(RegressError::Duplicate(g.image_id.clone()));
        }
    }
    let missing_predictions: Vec<String> = gts
        .iter()
        .filter(|g| !pred_map.contains_key(g.image_id.as_str()))
        .map(|g| g.image_id.clone())
        .collect();
    let missing_ground_truth: Vec<String> = preds
        .iter()
        .filter(|p| !gt_seen.contains(p.image_id.as_str()))
        .map(|p| p.image_id.clone())
        .collect();
    if !missing_predictions.is_empty() || !missing_ground_truth.is_empty() {
        return Err(RegressError::Unpaired {
            missing_predictions,
            missing_ground_truth,
        });
    }
    Ok(gts
        .iter()
        .map(|g| (pred_map[g.image_id.as_str()], g.tss))
        .collect())
}

/// Mean absolute error over `(prediction, truth)` pairs.
pub fn mae_pairs(pairs: &[(f64, f64)]) -> Result<f64, RegressError> {
    if pairs.is_empty() {
        return Err(RegressError::Empty);
    }
    Ok(pairs.iter().map(|(p, g)| (p - g).abs()).sum::<f64>() / pairs.len() as f64)
}

/// Root mean squared error over pairs.
pub fn rmse_pairs(pairs: &[(f64, f64)]) -> Result<f64, RegressError> {
    if pairs.is_empty() {
        return Err(RegressError::Empty);
    }
    let mse = pairs.iter().map(|(p, g)| (p - g) * (p - g)).sum::<f64>() / pairs.len() as f64;
    Ok(mse.sqrt())
}

/// Per-pair Huber value: quadratic `r^2/2` inside the knee, linear
/// `delta*|r| - delta^2/2` outside.
pub fn huber_value(residual: f64, delta: f64) -> f64 {
    let a = residual.abs();
    if a <= delta {
        0.5 * residual * residual
    } else {
        delta * a - 0.5 * delta * delta
    }
}

/// Mean Huber loss over pairs.
pub fn huber_pairs(pairs: &[(f64, f64)], delta: f64) -> Result<f64, RegressError> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(RegressError::NonPositiveDelta(delta));
    }
    if pairs.is_empty() {
        return Err(RegressError::Empty);
    }
    Ok(pairs.iter().map(|(p, g)| huber_value(p - g, delta)).sum::<f64>() / pairs.len() as f64)
}

pub fn mae(preds: &[SharpScore], gts: &[SharpScore]) -> Result<f64, RegressError> {
    mae_pairs(&pair_by_id(preds, gts)?)
}

pub fn rmse(preds: &[SharpScore], gts: &[SharpScore]) -> Result<f64, RegressError> {
    rmse_pairs(&pair_by_id(preds, gts)?)
}

pub fn huber(preds: &[SharpScore], gts: &[SharpScore], delta: f64) -> Result<f64, RegressError> {
    huber_pairs(&pair_by_id(preds, gts)?, delta)
}

/// The three regression metrics for one fold or split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub mae: f64,
    pub rmse: f64,
    pub huber: f64,
}

/// All three metrics at once from id-paired score lists.
pub fn evaluate_scores(
    preds: &[SharpScore],
    gts: &[SharpScore],
    delta: f64,
) -> Result<FoldMetrics, RegressError> {
    let pairs = pair_by_id(preds, gts)?;
    Ok(FoldMetrics {
        mae: mae_pairs(&pairs)?,
        rmse: rmse_pairs(&pairs)?,
        huber: huber_pairs(&pairs, delta)?,
    })
}

/// Fold columns plus the arithmetic-mean average column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldTable {
    pub folds: Vec<FoldMetrics>,
    pub average: FoldMetrics,
}

/// Build the three-fold table; the average column is the plain arithmetic
/// mean of the fold values.
pub fn fold_report(folds: &[FoldMetrics]) -> Result<FoldTable, RegressError> {
    const EXPECTED: usize = crate::model::PROTOCOL_FOLDS;
    if folds.len() != EXPECTED {
        return Err(RegressError::MissingFold {
            expected: EXPECTED,
            got: folds.len(),
        });
    }
    let n = folds.len() as f64;
    let average = FoldMetrics {
        mae: folds.iter().map(|f| f.mae).sum::<f64>() / n,
        rmse: folds.iter().map(|f| f.rmse).sum::<f64>() / n,
        huber: folds.iter().map(|f| f.huber).sum::<f64>() / n,
    };
    Ok(FoldTable {
        folds: folds.to_vec(),
        average,
    })
}

impl FoldTable {
    /// Two-decimal CSV in the published table layout, byte-stable.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("loss");
        for i in 1..=self.folds.len() {
            let _ = write!(s, ",fold_{i}");
        }
        s.push_str(",average\n");
        for (name, pick) in [
            ("MAE", &(|f: &FoldMetrics| f.mae) as &dyn Fn(&FoldMetrics) -> f64),
            ("RMSE", &|f: &FoldMetrics| f.rmse),
            ("Huber", &|f: &FoldMetrics| f.huber),
        ] {
            s.push_str(name);
            for f in &self.folds {
                let _ = write!(s, ",{:.2}", pick(f));
            }
            let _ = writeln!(s, ",{:.2}", pick(&self.average));
        }
        s
    }
}
