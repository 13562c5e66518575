//! Evaluation subcommands: `eval-seg` (mask IoU), `eval-det` (detection
//! report + PR curves), `eval-tss` (regression metrics / fold table).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use artss_core::annot_io::{
    parse_annotations, parse_predictions, parse_scores, write_report, ReportFormat,
};
use artss_core::detect_eval::{AccuracyDef, ApMode, EvalConfig};
use artss_core::imageio::load_mask_png;
use artss_core::model::{DatasetSplit, JointDetection, SharpScore};
use artss_core::regress_eval::{evaluate_scores, fold_report, FoldMetrics};

use crate::common::{list_files, stem_of};
use crate::svg;

pub struct SegArgs {
    pub pred: PathBuf,
    pub gt: PathBuf,
    pub out: Option<PathBuf>,
}

pub fn run_seg(args: &SegArgs) -> Result<()> {
    let gt_files = list_files(&args.gt, "png")?;
    if gt_files.is_empty() {
        anyhow::bail!("no ground-truth masks in {}", args.gt.display());
    }
    let mut per_image = BTreeMap::new();
    for gt_path in &gt_files {
        let stem = stem_of(gt_path);
        let pred_path = args.pred.join(format!("{stem}.png"));
        let gt_mask = load_mask_png(gt_path)?;
        let pred_mask = load_mask_png(&pred_path)
            .with_context(|| format!("prediction mask for {stem}"))?;
        let iou = artss_core::detect_eval::iou_mask(&pred_mask, &gt_mask)?;
        per_image.insert(stem, iou);
    }
    let mean = per_image.values().sum::<f64>() / per_image.len() as f64;

    let mut json = String::from("{");
    let _ = write!(json, "\"mean_iou\":{mean:.6},\"per_image\":{{");
    for (i, (stem, iou)) in per_image.iter().enumerate() {
        if i > 0 {
            json.push(',');
        }
        let _ = write!(json, "\"{stem}\":{iou:.6}");
    }
    json.push_str("}}\n");
    match &args.out {
        Some(path) => artss_core::fsutil::atomic_write(path, json.as_bytes())?,
        None => print!("{json}"),
    }
    println!("mean IoU {mean:.6} over {} masks", per_image.len());
    Ok(())
}

pub struct DetArgs {
    pub pred: PathBuf,
    pub gt: PathBuf,
    pub iou_threshold: f64,
    pub interpolated_ap: bool,
    pub accuracy_def: AccuracyDef,
    pub out: PathBuf,
}

fn load_detection_dir(
    dir: &Path,
    predictions: bool,
) -> Result<Vec<JointDetection>> {
    let mut all = Vec::new();
    for path in list_files(dir, "txt")? {
        let dets = if predictions {
            parse_predictions(&path)
        } else {
            parse_annotations(&path)
        }
        .with_context(|| path.display().to_string())?;
        all.extend(dets);
    }
    Ok(all)
}

pub fn run_det(args: &DetArgs) -> Result<()> {
    let preds = load_detection_dir(&args.pred, true)?;
    let gts = load_detection_dir(&args.gt, false)?;
    let config = EvalConfig {
        iou_threshold: args.iou_threshold,
        ap_mode: if args.interpolated_ap {
            ApMode::Interpolated
        } else {
            ApMode::PrecisionAtPositives
        },
        accuracy_def: args.accuracy_def,
    };
    let report = artss_core::detect_eval::evaluate_detections(&preds, &gts, &config)?;

    std::fs::create_dir_all(&args.out)?;
    write_report(&report, &args.out.join("report.json"), ReportFormat::Json)?;
    write_report(&report, &args.out.join("report.csv"), ReportFormat::Csv)?;
    artss_core::fsutil::atomic_write(
        &args.out.join("pr_curves.csv"),
        report.pr_curves_csv().as_bytes(),
    )?;
    let series: Vec<(String, Vec<(f64, f64)>)> = report
        .per_class
        .iter()
        .map(|(name, c)| {
            (
                name.clone(),
                c.pr_curve.iter().map(|p| (p.recall, p.precision)).collect(),
            )
        })
        .collect();
    artss_core::fsutil::atomic_write(
        &args.out.join("pr_curves.svg"),
        svg::line_chart("Precision-recall by joint class", "recall", "precision", &series)
            .as_bytes(),
    )?;

    println!(
        "mAP {:.6}  accuracy {:.6}  ({} predictions, {} ground truths)",
        report.map,
        report.accuracy,
        preds.len(),
        gts.len()
    );
    Ok(())
}

pub struct TssArgs {
    pub pred: PathBuf,
    pub gt: PathBuf,
    pub huber_delta: f64,
    pub folds: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub csv: bool,
}

fn subset(scores: &[SharpScore], ids: &[String]) -> Vec<SharpScore> {
    scores
        .iter()
        .filter(|s| ids.contains(&s.image_id))
        .cloned()
        .collect()
}

pub fn run_tss(args: &TssArgs) -> Result<()> {
    let preds = parse_scores(&args.pred)?;
    let gts = parse_scores(&args.gt)?;

    let (json, csv, summary) = match &args.folds {
        Some(folds_dir) => {
            let mut metrics = Vec::new();
            for i in 1..=3u8 {
                let path = folds_dir.join(format!("fold_{i}.json"));
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("fold split {}", path.display()))?;
                let split: DatasetSplit = serde_json::from_str(&text)?;
                // Fold columns score each fold's validation ids.
                let fold_preds = subset(&preds, &split.val);
                let fold_gts = subset(&gts, &split.val);
                metrics.push(
                    evaluate_scores(&fold_preds, &fold_gts, args.huber_delta)
                        .with_context(|| format!("fold {i}"))?,
                );
            }
            let table = fold_report(&metrics)?;
            let summary = format!(
                "fold averages: MAE {:.2}  RMSE {:.2}  Huber {:.2}",
                table.average.mae, table.average.rmse, table.average.huber
            );
            (
                serde_json::to_string_pretty(&table)? + "\n",
                table.to_csv_string(),
                summary,
            )
        }
        None => {
            let m: FoldMetrics = evaluate_scores(&preds, &gts, args.huber_delta)?;
            let summary = format!(
                "MAE {:.6}  RMSE {:.6}  Huber {:.6} (delta {})",
                m.mae, m.rmse, m.huber, args.huber_delta
            );
            (
                serde_json::to_string_pretty(&m)? + "\n",
                format!(
                    "loss,value\nMAE,{:.6}\nRMSE,{:.6}\nHuber,{:.6}\n",
                    m.mae, m.rmse, m.huber
                ),
                summary,
            )
        }
    };

    match &args.out {
        Some(path) => {
            // Both forms, main format at the given path.
            let (main, sibling) = if args.csv {
                (&csv, (path.with_extension("json"), &json))
            } else {
                (&json, (path.with_extension("csv"), &csv))
            };
            artss_core::fsutil::atomic_write(path, main.as_bytes())?;
            artss_core::fsutil::atomic_write(&sibling.0, sibling.1.as_bytes())?;
        }
        None => print!("{}", if args.csv { &csv } else { &json }),
    }
    println!("{summary}");
    Ok(())
}
