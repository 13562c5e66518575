//! `run-all`: chain preprocess, mask, sequence building, baseline fit and
//! predict, and TSS evaluation over one manifest.

use std::collections::HashSet;
use std::path::PathBuf;

use anyhow::{Context as _, Result};

use artss_core::annot_io::{parse_manifest, parse_scores, write_scores};
use artss_core::maskgen::MaskParams;
use artss_core::regress_eval::evaluate_scores;
use artss_core::seqbuild::FULL_TAXONOMY_SLOTS;

use crate::cmd::{baseline_cmd, mask, preprocess, seq};

pub struct Args {
    pub manifest: PathBuf,
    pub annotations: PathBuf,
    pub out: PathBuf,
    pub target: (u32, u32),
    pub crop_size: u32,
    pub lambda: f64,
    pub huber_delta: f64,
}

pub fn run(args: &Args) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let canonical_dir = args.out.join("canonical");
    let masks_dir = args.out.join("masks");
    let sequences = args.out.join("sequences.bin");
    let gt_scores = args.out.join("gt_scores.csv");
    let weights = args.out.join("weights.json");
    let predictions = args.out.join("predictions.csv");

    preprocess::run(&preprocess::Args {
        manifest: args.manifest.clone(),
        out: canonical_dir.clone(),
        target: args.target,
    })
    .context("preprocess stage")?;

    mask::run(&mask::Args {
        input: canonical_dir.clone(),
        out: masks_dir,
        params: MaskParams::default(),
    })
    .context("mask stage")?;

    seq::run(&seq::Args {
        detections: args.annotations.clone(),
        images: canonical_dir,
        out: sequences.clone(),
        crop_size: args.crop_size,
        l_max: FULL_TAXONOMY_SLOTS,
    })
    .context("build-seq stage")?;

    (|| -> Result<()> {
        let rows = parse_manifest(&args.manifest)?;
        let scores: Vec<_> = rows
            .iter()
            .filter_map(|r| r.sharp_score())
            .collect::<Result<_, _>>()?;
        if scores.is_empty() {
            anyhow::bail!("manifest has no rows with both reader scores");
        }
        write_scores(&scores, &gt_scores)?;
        Ok(())
    })()
    .context("scores stage")?;

    baseline_cmd::run_fit(&baseline_cmd::FitArgs {
        sequences: sequences.clone(),
        scores: gt_scores.clone(),
        out: weights.clone(),
        lambda: args.lambda,
    })
    .context("baseline-fit stage")?;

    baseline_cmd::run_predict(&baseline_cmd::PredictArgs {
        sequences,
        weights,
        out: predictions.clone(),
    })
    .context("baseline-predict stage")?;

    (|| -> Result<()> {
        let gts = parse_scores(&gt_scores)?;
        let gt_ids: HashSet<&str> = gts.iter().map(|s| s.image_id.as_str()).collect();
        // Predictions cover every sequence; score the gt-covered subset.
        let preds: Vec<_> = parse_scores(&predictions)?
            .into_iter()
            .filter(|p| gt_ids.contains(p.image_id.as_str()))
            .collect();
        let metrics = evaluate_scores(&preds, &gts, args.huber_delta)?;
        artss_core::fsutil::atomic_write(
            &args.out.join("tss_report.json"),
            (serde_json::to_string_pretty(&metrics)? + "\n").as_bytes(),
        )?;
        artss_core::fsutil::atomic_write(
            &args.out.join("tss_report.csv"),
            format!(
                "loss,value\nMAE,{:.6}\nRMSE,{:.6}\nHuber,{:.6}\n",
                metrics.mae, metrics.rmse, metrics.huber
            )
            .as_bytes(),
        )?;
        println!(
            "pipeline complete: MAE {:.4}  RMSE {:.4}  Huber {:.4} over {} scored images",
            metrics.mae,
            metrics.rmse,
            metrics.huber,
            gts.len()
        );
        Ok(())
    })()
    .context("eval-tss stage")
}
