//! `baseline-fit` and `baseline-predict`: the ridge reference regressor
//! over sequence features.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};

use artss_core::annot_io::parse_scores;
use artss_core::baseline::{featurize, fit, predict, RidgeModel};
use artss_core::seqbuild::read_sequences;

pub struct FitArgs {
    pub sequences: PathBuf,
    pub scores: PathBuf,
    pub out: PathBuf,
    pub lambda: f64,
}

pub fn run_fit(args: &FitArgs) -> Result<()> {
    let seqs = read_sequences(&args.sequences)?;
    let scores = parse_scores(&args.scores)?;
    let by_id: HashMap<&str, f64> = scores.iter().map(|s| (s.image_id.as_str(), s.tss)).collect();

    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut skipped = 0usize;
    for seq in &seqs {
        match by_id.get(seq.image_id.as_str()) {
            Some(&tss) => {
                features.push(featurize(seq).with_context(|| seq.image_id.clone())?);
                targets.push(tss);
            }
            None => skipped += 1,
        }
    }
    if features.is_empty() {
        anyhow::bail!("no sequence id matches any score id");
    }

    let model = fit(&features, &targets, args.lambda)?;
    model.save(&args.out)?;

    let train_mae = features
        .iter()
        .zip(&targets)
        .map(|(f, &t)| (predict(&model, f).unwrap_or(f64::INFINITY) - t).abs())
        .sum::<f64>()
        / targets.len() as f64;
    println!(
        "fit {} samples (dim {}, lambda {}), {} unscored sequences skipped; training MAE {:.4}; weights at {}",
        targets.len(),
        model.feature_dim,
        args.lambda,
        skipped,
        train_mae,
        args.out.display()
    );
    Ok(())
}

pub struct PredictArgs {
    pub sequences: PathBuf,
    pub weights: PathBuf,
    pub out: PathBuf,
}

pub fn run_predict(args: &PredictArgs) -> Result<()> {
    let seqs = read_sequences(&args.sequences)?;
    let model = RidgeModel::load(&args.weights)?;

    let mut csv = String::from("id,tss\n");
    for seq in &seqs {
        let features = featurize(seq).with_context(|| seq.image_id.clone())?;
        let tss = predict(&model, &features)?;
        let _ = writeln!(csv, "{},{}", seq.image_id, tss);
    }
    artss_core::fsutil::atomic_write(&args.out, csv.as_bytes())?;
    println!("predicted {} sequences into {}", seqs.len(), args.out.display());
    Ok(())
}
