//! Detection scoring: IoU, greedy confidence-ordered matching, per-class
//! average precision (precision summed at each true positive, divided by
//! the ground-truth count), mAP, per-joint accuracy, and the confusion
//! matrix with a background row/column.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maskgen::BinaryMask;
use crate::model::{BoundingBox, JointClass, JointDetection};

/// Default IoU threshold for declaring a prediction a true positive.
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Confusion-matrix index reserved for background (unmatched).
pub const BACKGROUND_INDEX: usize = JointClass::COUNT;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("mask frames differ: {0}x{1} vs {2}x{3}")]
    MaskFrameMismatch(u32, u32, u32, u32),
    #[error("prediction at index {0} has no confidence")]
    MissingConfidence(usize),
    #[error("detections span multiple classes ({0} and {1}); score one class at a time")]
    MixedClasses(JointClass, JointClass),
    #[error("matching expects one image; got {0} and {1}")]
    MixedImages(String, String),
    #[error("no ground-truth objects; accuracy is undefined")]
    NoGroundTruth,
    #[error("no class has a defined average precision")]
    NoDefinedClasses,
}

/// Intersection-over-union of two normalized center-format boxes.
/// An empty union is defined as 0.
pub fn iou_box(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax0, ay0, ax1, ay1) = a.corners();
    let (bx0, by0, bx1, by1) = b.corners();
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    // Areas from the same corner arithmetic as the intersection, so
    // identical boxes give exactly 1.
    let area_a = (ax1 - ax0) * (ay1 - ay0);
    let area_b = (bx1 - bx0) * (by1 - by0);
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Intersection-over-union of two binary masks on the same frame.
pub fn iou_mask(a: &BinaryMask, b: &BinaryMask) -> Result<f64, DetectError> {
    if a.width != b.width || a.height != b.height {
        return Err(DetectError::MaskFrameMismatch(
            a.width, a.height, b.width, b.height,
        ));
    }
    let mut inter = 0u64;
    let mut union = 0u64;
    for (&pa, &pb) in a.pixels.iter().zip(&b.pixels) {
        let (fa, fb) = (pa != 0, pb != 0);
        inter += u64::from(fa && fb);
        union += u64::from(fa || fb);
    }
    if union == 0 {
        Ok(0.0)
    } else {
        Ok(inter as f64 / union as f64)
    }
}

/// One matched prediction/ground-truth pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPair {
    pub prediction: usize,
    pub ground_truth: usize,
    pub iou: f64,
}

/// Outcome of greedy matching on one image and class.
#[derive(Debug, Clone, Default)]
pub struct MatchResult {
    /// Pairs in descending prediction-confidence order.
    pub pairs: Vec<MatchPair>,
    pub unmatched_predictions: Vec<usize>,
    pub unmatched_ground_truths: Vec<usize>,
}

/// Indices of `preds` sorted by confidence descending, input order breaking
/// ties.
fn confidence_order(preds: &[JointDetection]) -> Result<Vec<usize>, DetectError> {
    for (i, p) in preds.iter().enumerate() {
        if p.confidence.is_none() {
            return Err(DetectError::MissingConfidence(i));
        }
    }
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .confidence
            .partial_cmp(&preds[a].confidence)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    Ok(order)
}

fn greedy_match(
    preds: &[JointDetection],
    gts: &[JointDetection],
    iou_threshold: f64,
    class_aware: bool,
) -> Result<MatchResult, DetectError> {
    let order = confidence_order(preds)?;
    let mut gt_taken = vec![false; gts.len()];
    let mut result = MatchResult::default();
    for &pi in &order {
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if gt_taken[gi] || (class_aware && gt.class != preds[pi].class) {
                continue;
            }
            let iou = iou_box(&preds[pi].bbox, &gt.bbox);
            if iou < iou_threshold {
                continue;
            }
            // Strictly-greater keeps the lowest ground-truth index on ties.
            if best.map(|(_, b)| iou > b).unwrap_or(true) {
                best = Some((gi, iou));
            }
        }
        match best {
            Some((gi, iou)) => {
                gt_taken[gi] = true;
                result.pairs.push(MatchPair {
                    prediction: pi,
                    ground_truth: gi,
                    iou,
                });
            }
            None => result.unmatched_predictions.push(pi),
        }
    }
    result.unmatched_ground_truths = gt_taken
        .iter()
        .enumerate()
        .filter(|(_, &t)| !t)
        .map(|(i, _)| i)
        .collect();
    Ok(result)
}

/// Greedy matching for one image and one class: predictions in descending
/// confidence order each take the highest-IoU unmatched ground truth at or
/// above the threshold.
pub fn match_detections(
    preds: &[JointDetection],
    gts: &[JointDetection],
    iou_threshold: f64,
) -> Result<MatchResult, DetectError> {
    if let Some(first) = preds.first().or_else(|| gts.first()) {
        for d in preds.iter().chain(gts) {
            if d.class != first.class {
                return Err(DetectError::MixedClasses(first.class, d.class));
            }
            if d.image_id != first.image_id {
                return Err(DetectError::MixedImages(
                    first.image_id.clone(),
                    d.image_id.clone(),
                ));
            }
        }
    }
    greedy_match(preds, gts, iou_threshold, false)
}

/// How average precision integrates the precision/recall sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ApMode {
    /// Mean of the precision values observed at each true positive's rank;
    /// never-matched ground truths contribute zero.
    #[default]
    PrecisionAtPositives,
    /// Area under the interpolated precision envelope, for comparability
    /// with detector tooling.
    Interpolated,
}

/// One point of a precision/recall curve, taken after a ranked prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// Ranked true/false-positive flags for one class over the whole dataset.
fn ranked_flags(
    preds: &[JointDetection],
    gts: &[JointDetection],
    iou_threshold: f64,
) -> Result<Vec<(f64, bool)>, DetectError> {
    if let Some(first) = preds.first().or_else(|| gts.first()) {
        for d in preds.iter().chain(gts) {
            if d.class != first.class {
                return Err(DetectError::MixedClasses(first.class, d.class));
            }
        }
    }
    // Match per image, flag each prediction.
    let mut image_order: Vec<&str> = Vec::new();
    let mut by_image: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, p) in preds.iter().enumerate() {
        if !by_image.contains_key(p.image_id.as_str()) {
            image_order.push(&p.image_id);
        }
        by_image.entry(&p.image_id).or_default().0.push(i);
    }
    for (i, g) in gts.iter().enumerate() {
        if !by_image.contains_key(g.image_id.as_str()) {
            image_order.push(&g.image_id);
        }
        by_image.entry(&g.image_id).or_default().1.push(i);
    }

    let mut is_tp = vec![false; preds.len()];
    for (pred_idx, gt_idx) in by_image.values() {
        let img_preds: Vec<JointDetection> = pred_idx.iter().map(|&i| preds[i].clone()).collect();
        let img_gts: Vec<JointDetection> = gt_idx.iter().map(|&i| gts[i].clone()).collect();
        let result = greedy_match(&img_preds, &img_gts, iou_threshold, false)?;
        for pair in result.pairs {
            is_tp[pred_idx[pair.prediction]] = true;
        }
    }

    let order = confidence_order(preds)?;
    Ok(order
        .into_iter()
        .map(|i| (preds[i].confidence.unwrap_or(0.0), is_tp[i]))
        .collect())
}

fn ap_from_flags(flags: &[(f64, bool)], n_pos: usize, mode: ApMode) -> Option<f64> {
    if n_pos == 0 {
        return None;
    }
    match mode {
        ApMode::PrecisionAtPositives => {
            let mut tp = 0usize;
            let mut sum = 0.0;
            for (rank0, &(_, hit)) in flags.iter().enumerate() {
                if hit {
                    tp += 1;
                    sum += tp as f64 / (rank0 + 1) as f64;
                }
            }
            Some(sum / n_pos as f64)
        }
        ApMode::Interpolated => {
            let mut points = Vec::with_capacity(flags.len());
            let mut tp = 0usize;
            for (rank0, &(_, hit)) in flags.iter().enumerate() {
                if hit {
                    tp += 1;
                }
                points.push(PrPoint {
                    recall: tp as f64 / n_pos as f64,
                    precision: tp as f64 / (rank0 + 1) as f64,
                });
            }
            // Precision envelope from the right, integrated over recall.
            let mut area = 0.0;
            let mut max_prec = 0.0f64;
            let mut prev_recall = points.last().map(|p| p.recall).unwrap_or(0.0);
            for p in points.iter().rev() {
                max_prec = max_prec.max(p.precision);
                area += (prev_recall - p.recall) * max_prec;
                prev_recall = p.recall;
            }
            area += prev_recall * max_prec;
            Some(area)
        }
    }
}

/// Average precision for one class over a whole dataset. `None` when the
/// class has no ground-truth objects (excluded from mAP, not an error).
pub fn average_precision(
    preds: &[JointDetection],
    gts: &[JointDetection],
    iou_threshold: f64,
    mode: ApMode,
) -> Result<Option<f64>, DetectError> {
    let flags = ranked_flags(preds, gts, iou_threshold)?;
    Ok(ap_from_flags(&flags, gts.len(), mode))
}

/// Unweighted mean over classes with a defined AP.
pub fn mean_average_precision(aps: &[Option<f64>]) -> Result<f64, DetectError> {
    let defined: Vec<f64> = aps.iter().filter_map(|a| *a).collect();
    if defined.is_empty() {
        return Err(DetectError::NoDefinedClasses);
    }
    Ok(defined.iter().sum::<f64>() / defined.len() as f64)
}

/// How the headline identification accuracy is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AccuracyDef {
    /// Fraction of ground-truth joints matched at the threshold:
    /// TP / N_pos. Equals 1 - FN/N_pos.
    #[default]
    MatchedGtFraction,
    /// Jaccard-style alternative: TP / (TP + FP + FN).
    Jaccard,
}

/// Identification accuracy over per-image match results under the chosen
/// definition (matched-ground-truth fraction by default).
pub fn detection_accuracy_as(
    matches: &[MatchResult],
    total_ground_truths: usize,
    def: AccuracyDef,
) -> Result<f64, DetectError> {
    if total_ground_truths == 0 {
        return Err(DetectError::NoGroundTruth);
    }
    let tp: usize = matches.iter().map(|m| m.pairs.len()).sum();
    match def {
        AccuracyDef::MatchedGtFraction => Ok(tp as f64 / total_ground_truths as f64),
        AccuracyDef::Jaccard => {
            let fp: usize = matches.iter().map(|m| m.unmatched_predictions.len()).sum();
            let fn_count = total_ground_truths - tp;
            Ok(tp as f64 / (tp + fp + fn_count) as f64)
        }
    }
}

/// Fraction of ground-truth joints matched at the threshold: TP / N_pos.
pub fn detection_accuracy(
    matches: &[MatchResult],
    total_ground_truths: usize,
) -> Result<f64, DetectError> {
    detection_accuracy_as(matches, total_ground_truths, AccuracyDef::MatchedGtFraction)
}

/// Evaluation configuration.
#[derive(Debug, Clone, Copy)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    pub ap_mode: ApMode,
    pub accuracy_def: AccuracyDef,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_threshold: DEFAULT_IOU_THRESHOLD,
            ap_mode: ApMode::PrecisionAtPositives,
            accuracy_def: AccuracyDef::MatchedGtFraction,
        }
    }
}

/// Per-class slice of an evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub ap: Option<f64>,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_count: u64,
    pub pr_curve: Vec<PrPoint>,
}

/// TSS regression metrics attached to a combined report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionBlock {
    pub mae: f64,
    pub rmse: f64,
    pub huber: f64,
    pub huber_delta: f64,
}

/// Full detection evaluation for one dataset split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// `(JointClass::COUNT + 1)^2` counts; row = ground-truth class, column
    /// = predicted class, last index = background.
    pub confusion: Vec<Vec<u64>>,
    pub map: f64,
    pub per_class: BTreeMap<String, ClassReport>,
    pub regression: Option<RegressionBlock>,
}

/// Score a prediction set against ground truth across all classes.
pub fn evaluate_detections(
    preds: &[JointDetection],
    gts: &[JointDetection],
    config: &EvalConfig,
) -> Result<EvalReport, DetectError> {
    if gts.is_empty() {
        return Err(DetectError::NoGroundTruth);
    }

    let mut per_class = BTreeMap::new();
    let mut aps = Vec::new();
    let mut total_tp = 0u64;
    let mut total_fp = 0u64;
    for class in JointClass::ALL {
        let class_preds: Vec<JointDetection> =
            preds.iter().filter(|d| d.class == class).cloned().collect();
        let class_gts: Vec<JointDetection> =
            gts.iter().filter(|d| d.class == class).cloned().collect();
        let flags = ranked_flags(&class_preds, &class_gts, config.iou_threshold)?;
        let tp = flags.iter().filter(|(_, hit)| *hit).count() as u64;
        let fp = flags.len() as u64 - tp;
        let fn_count = class_gts.len() as u64 - tp;
        total_tp += tp;
        total_fp += fp;
        let ap = ap_from_flags(&flags, class_gts.len(), config.ap_mode);
        let mut pr_curve = Vec::with_capacity(flags.len());
        let mut cum_tp = 0u64;
        for (rank0, (_, hit)) in flags.iter().enumerate() {
            cum_tp += u64::from(*hit);
            pr_curve.push(PrPoint {
                recall: cum_tp as f64 / class_gts.len().max(1) as f64,
                precision: cum_tp as f64 / (rank0 + 1) as f64,
            });
        }
        aps.push(ap);
        per_class.insert(
            class.name().to_string(),
            ClassReport {
                ap,
                tp,
                fp,
                fn_count,
                pr_curve,
            },
        );
    }

    let map = mean_average_precision(&aps)?;
    let accuracy = match config.accuracy_def {
        AccuracyDef::MatchedGtFraction => total_tp as f64 / gts.len() as f64,
        AccuracyDef::Jaccard => {
            let fn_total = gts.len() as u64 - total_tp;
            total_tp as f64 / (total_tp + total_fp + fn_total) as f64
        }
    };

    // Class-agnostic matching for the confusion matrix.
    let mut confusion = vec![vec![0u64; JointClass::COUNT + 1]; JointClass::COUNT + 1];
    let mut images: Vec<&str> = Vec::new();
    for d in preds.iter().chain(gts) {
        if !images.contains(&d.image_id.as_str()) {
            images.push(&d.image_id);
        }
    }
    for image in images {
        let img_preds: Vec<JointDetection> = preds
            .iter()
            .filter(|d| d.image_id == image)
            .cloned()
            .collect();
        let img_gts: Vec<JointDetection> = gts
            .iter()
            .filter(|d| d.image_id == image)
            .cloned()
            .collect();
        let result = greedy_match(&img_preds, &img_gts, config.iou_threshold, false)?;
        for pair in &result.pairs {
            let g = img_gts[pair.ground_truth].class.index();
            let p = img_preds[pair.prediction].class.index();
            confusion[g][p] += 1;
        }
        for &pi in &result.unmatched_predictions {
            confusion[BACKGROUND_INDEX][img_preds[pi].class.index()] += 1;
        }
        for &gi in &result.unmatched_ground_truths {
            confusion[img_gts[gi].class.index()][BACKGROUND_INDEX] += 1;
        }
    }

    Ok(EvalReport {
        accuracy,
        confusion,
        map,
        per_class,
        regression: None,
    })
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.6}")
}

impl EvalReport {
    /// Deterministic JSON: keys sorted, floats fixed to six decimals.
    pub fn to_json_string(&self) -> String {
        let mut s = String::new();
        s.push('{');
        let _ = write!(s, "\"accuracy\":{}", fmt_f64(self.accuracy));
        s.push_str(",\"confusion\":[");
        for (i, row) in self.confusion.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push('[');
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v}");
            }
            s.push(']');
        }
        s.push(']');
        let _ = write!(s, ",\"map\":{}", fmt_f64(self.map));
        s.push_str(",\"per_class\":{");
        for (i, (name, c)) in self.per_class.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let ap = match c.ap {
                Some(v) => fmt_f64(v),
                None => "null".to_string(),
            };
            let _ = write!(
                s,
                "\"{name}\":{{\"ap\":{ap},\"fn\":{},\"fp\":{},\"pr_curve\":[",
                c.fn_count, c.fp
            );
            for (j, p) in c.pr_curve.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                let _ = write!(
                    s,
                    "{{\"precision\":{},\"recall\":{}}}",
                    fmt_f64(p.precision),
                    fmt_f64(p.recall)
                );
            }
            let _ = write!(s, "],\"tp\":{}}}", c.tp);
        }
        s.push('}');
        match &self.regression {
            Some(r) => {
                let _ = write!(
                    s,
                    ",\"regression\":{{\"huber\":{},\"huber_delta\":{},\"mae\":{},\"rmse\":{}}}",
                    fmt_f64(r.huber),
                    fmt_f64(r.huber_delta),
                    fmt_f64(r.mae),
                    fmt_f64(r.rmse)
                );
            }
            None => s.push_str(",\"regression\":null"),
        }
        s.push('}');
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Deterministic CSV: one row per (class, metric) pair plus summary rows.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("class,metric,value\n");
        for (name, c) in &self.per_class {
            let ap = c.ap.map(fmt_f64).unwrap_or_default();
            let _ = writeln!(s, "{name},ap,{ap}");
            let _ = writeln!(s, "{name},tp,{}", c.tp);
            let _ = writeln!(s, "{name},fp,{}", c.fp);
            let _ = writeln!(s, "{name},fn,{}", c.fn_count);
        }
        let _ = writeln!(s, "ALL,map,{}", fmt_f64(self.map));
        let _ = writeln!(s, "ALL,accuracy,{}", fmt_f64(self.accuracy));
        if let Some(r) = &self.regression {
            let _ = writeln!(s, "ALL,mae,{}", fmt_f64(r.mae));
            let _ = writeln!(s, "ALL,rmse,{}", fmt_f64(r.rmse));
            let _ = writeln!(s, "ALL,huber,{}", fmt_f64(r.huber));
        }
        s
    }

    /// Per-class precision/recall points as CSV.
    pub fn pr_curves_csv(&self) -> String {
        let mut s = String::from("class,rank,recall,precision\n");
        for (name, c) in &self.per_class {
            for (rank0, p) in c.pr_curve.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{name},{},{},{}",
                    rank0 + 1,
                    fmt_f64(p.recall),
                    fmt_f64(p.precision)
                );
            }
        }
        s
    }
}
