//! `artss` — command-line pipeline for hand-radiograph scoring: canonical
//! preprocessing, classical hand masking, joint sequences, augmentation,
//! the fold protocol, and the detection/regression evaluation suite.

mod cmd;
mod common;
mod svg;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use artss_core::detect_eval::AccuracyDef;
use artss_core::maskgen::MaskParams;
use common::{parse_size, resolve_out_dir};

/// CLI face of the accuracy definition.
#[derive(Clone, Copy, clap::ValueEnum)]
enum AccuracyArg {
    /// Matched ground-truth fraction, TP / N_pos.
    MatchedFraction,
    /// TP / (TP + FP + FN).
    Jaccard,
}

impl From<AccuracyArg> for AccuracyDef {
    fn from(a: AccuracyArg) -> Self {
        match a {
            AccuracyArg::MatchedFraction => AccuracyDef::MatchedGtFraction,
            AccuracyArg::Jaccard => AccuracyDef::Jaccard,
        }
    }
}

#[derive(Parser)]
#[command(name = "artss", version, about = "Radiograph scoring pipeline toolkit")]
struct Cli {
    /// Worker threads for per-image stages (0 = all cores). Outputs are
    /// identical for any setting.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Seed for subcommands that sample (split, augment).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resize, normalize, and reorient manifest images to the canonical pose.
    Preprocess {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory (or ARTSS_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Target size as WxH.
        #[arg(long, default_value = "640x640")]
        target_size: String,
    },
    /// Generate hand masks for a directory of canonical PNGs.
    Mask {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Gaussian sigma in pixels (default: 1.5 scaled by width/640).
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 2)]
        wavelet_levels: u32,
        /// Disk radius for morphological refinement.
        #[arg(long, default_value_t = 2)]
        disk: u32,
    },
    /// Mean and per-image IoU between predicted and ground-truth masks.
    EvalSeg {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Report file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detection evaluation: AP/mAP, accuracy, confusion, PR curves.
    EvalDet {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = artss_core::detect_eval::DEFAULT_IOU_THRESHOLD)]
        iou_thresh: f64,
        /// Area-under-envelope AP instead of precision-at-positives.
        #[arg(long)]
        interp_ap: bool,
        /// Accuracy definition for the headline number.
        #[arg(long, value_enum, default_value_t = AccuracyArg::MatchedFraction)]
        accuracy: AccuracyArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the padded joint-sequence container from detection files.
    BuildSeq {
        #[arg(long)]
        det: PathBuf,
        #[arg(long)]
        img: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        crop_size: u32,
        /// Sequence slots; 22 hosts the full two-hand taxonomy.
        #[arg(long, default_value_t = artss_core::seqbuild::FULL_TAXONOMY_SLOTS)]
        l_max: usize,
    },
    /// Seeded augmented variants with box-consistent transforms.
    Augment {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Variants per image.
        #[arg(long, default_value_t = 1)]
        count: u32,
        /// TOML file overriding the default augmentation ranges.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Emit the 3-fold protocol splits (452/227 per fold, shared test 291).
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// TSS regression metrics; with --folds, the fold-table layout.
    EvalTss {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = artss_core::regress_eval::DEFAULT_HUBER_DELTA)]
        huber_delta: f64,
        /// Directory holding fold_1.json .. fold_3.json.
        #[arg(long)]
        folds: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write CSV as the primary format instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Fit the ridge baseline on sequence features.
    BaselineFit {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        lambda: f64,
    },
    /// Predict TSS for every sequence with saved weights.
    BaselinePredict {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Age and score distribution histograms (SVG with KDE overlays).
    ReportDist {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline: preprocess, mask, sequences, baseline, TSS report.
    RunAll {
        #[arg(long)]
        manifest: PathBuf,
        /// Directory of per-image joint box files (<id>.txt).
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "640x640")]
        target_size: String,
        #[arg(long, default_value_t = 64)]
        crop_size: u32,
        #[arg(long, default_value_t = 1e-6)]
        lambda: f64,
        #[arg(long, default_value_t = artss_core::regress_eval::DEFAULT_HUBER_DELTA)]
        huber_delta: f64,
    },
}

fn stage_name(command: &Command) -> &'static str {
    match command {
        Command::Preprocess { .. } => "preprocess",
        Command::Mask { .. } => "mask",
        Command::EvalSeg { .. } => "eval-seg",
        Command::EvalDet { .. } => "eval-det",
        Command::BuildSeq { .. } => "build-seq",
        Command::Augment { .. } => "augment",
        Command::Split { .. } => "split",
        Command::EvalTss { .. } => "eval-tss",
        Command::BaselineFit { .. } => "baseline-fit",
        Command::BaselinePredict { .. } => "baseline-predict",
        Command::ReportDist { .. } => "report-dist",
        Command::RunAll { .. } => "run-all",
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess { manifest, out, target_size } => {
            cmd::preprocess::run(&cmd::preprocess::Args {
                manifest,
                out: resolve_out_dir(out)?,
                target: parse_size(&target_size)?,
            })
        }
        Command::Mask { input, out, sigma, wavelet_levels, disk } => {
            cmd::mask::run(&cmd::mask::Args {
                input,
                out: resolve_out_dir(out)?,
                params: MaskParams {
                    sigma,
                    wavelet_levels,
                    disk_radius: disk,
                },
            })
        }
        Command::EvalSeg { pred, gt, out } => {
            cmd::eval::run_seg(&cmd::eval::SegArgs { pred, gt, out })
        }
        Command::EvalDet { pred, gt, iou_thresh, interp_ap, accuracy, out } => {
            cmd::eval::run_det(&cmd::eval::DetArgs {
                pred,
                gt,
                iou_threshold: iou_thresh,
                interpolated_ap: interp_ap,
                accuracy_def: accuracy.into(),
                out: resolve_out_dir(out)?,
            })
        }
        Command::BuildSeq { det, img, out, crop_size, l_max } => {
            cmd::seq::run(&cmd::seq::Args {
                detections: det,
                images: img,
                out: resolve_out_dir(out)?,
                crop_size,
                l_max,
            })
        }
        Command::Augment { input, out, count, config } => {
            cmd::augment_cmd::run(&cmd::augment_cmd::Args {
                input,
                out: resolve_out_dir(out)?,
                seed: cli.seed,
                count,
                config,
            })
        }
        Command::Split { manifest, out } => {
            cmd::split::run(&cmd::split::Args {
                manifest,
                seed: cli.seed,
                out: resolve_out_dir(out)?,
            })
        }
        Command::EvalTss { pred, gt, huber_delta, folds, out, csv } => {
            cmd::eval::run_tss(&cmd::eval::TssArgs {
                pred,
                gt,
                huber_delta,
                folds,
                out,
                csv,
            })
        }
        Command::BaselineFit { seq, scores, out, lambda } => {
            cmd::baseline_cmd::run_fit(&cmd::baseline_cmd::FitArgs {
                sequences: seq,
                scores,
                out: resolve_out_dir(out)?,
                lambda,
            })
        }
        Command::BaselinePredict { seq, weights, out } => {
            cmd::baseline_cmd::run_predict(&cmd::baseline_cmd::PredictArgs {
                sequences: seq,
                weights,
                out: resolve_out_dir(out)?,
            })
        }
        Command::ReportDist { manifest, out } => {
            cmd::dist::run(&cmd::dist::Args {
                manifest,
                out: resolve_out_dir(out)?,
            })
        }
        Command::RunAll {
            manifest,
            annotations,
            out,
            target_size,
            crop_size,
            lambda,
            huber_delta,
        } => {
            cmd::runall::run(&cmd::runall::Args {
                manifest,
                annotations,
                out: resolve_out_dir(out)?,
                target: parse_size(&target_size)?,
                crop_size,
                lambda,
                huber_delta,
            })
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    let stage = stage_name(&cli.command);
    if let Err(err) = dispatch(cli) {
        eprintln!(
            "{}",
            serde_json::json!({ "stage": stage, "error": format!("{err:#}") })
        );
        std::process::exit(1);
    }
}
