//! `augment`: produce seeded augmented variants of each image with
//! consistently transformed annotation boxes.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

use artss_core::augment::{augment, AugmentConfig};
use artss_core::annot_io::{parse_annotations, parse_predictions, write_detections};
use artss_core::imageio::{load_gray, save_gray_png};
use artss_core::imgproc::CanonicalImage;
use artss_core::model::{ImageRecord, JointDetection};

use crate::common::{derive_seed, list_files, stem_of};

pub struct Args {
    pub input: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub count: u32,
    pub config: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<AugmentConfig> {
    let config = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("augment config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => AugmentConfig::default(),
    };
    config.validate()?;
    Ok(config)
}

fn load_boxes(path: &Path) -> Result<Vec<JointDetection>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path)?;
    let fields = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .map(|l| l.split_whitespace().count())
        .unwrap_or(5);
    if fields == 6 {
        parse_predictions(path).map_err(Into::into)
    } else {
        parse_annotations(path).map_err(Into::into)
    }
}

pub fn run(args: &Args) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let images = list_files(&args.input, "png")?;
    if images.is_empty() {
        anyhow::bail!("no .png images in {}", args.input.display());
    }
    std::fs::create_dir_all(&args.out)?;

    let tasks: Vec<(PathBuf, u32)> = images
        .iter()
        .flat_map(|p| (0..args.count).map(move |i| (p.clone(), i)))
        .collect();

    let dropped: usize = tasks
        .par_iter()
        .map(|(img_path, variant)| -> Result<usize> {
            let stem = stem_of(img_path);
            let (pixels, width, height) = load_gray(img_path)?;
            let record = ImageRecord::new(stem.clone(), pixels, width, height)?;
            let canonical = CanonicalImage::from_record(&record);
            let boxes = load_boxes(&args.input.join(format!("{stem}.txt")))?;

            let task_seed = derive_seed(args.seed, &stem, *variant as u64);
            let result = augment(&canonical, &boxes, task_seed, &config);

            let out_stem = format!("{stem}_aug{variant}");
            save_gray_png(
                &args.out.join(format!("{out_stem}.png")),
                &result.image.to_u8(),
                result.image.width,
                result.image.height,
            )?;
            if !boxes.is_empty() {
                write_detections(&result.boxes, &args.out.join(format!("{out_stem}.txt")))?;
            }
            if result.all_boxes_dropped {
                eprintln!("warning: {out_stem}: every box left the frame");
            }
            Ok(usize::from(result.all_boxes_dropped))
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum();

    println!(
        "augmented {} images x{} variants into {} ({} variants lost all boxes)",
        images.len(),
        args.count,
        args.out.display(),
        dropped
    );
    Ok(())
}
