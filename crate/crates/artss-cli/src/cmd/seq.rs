//! `build-seq`: turn per-image detection files plus canonical images into
//! the padded joint-sequence container.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use artss_core::annot_io::{parse_annotations, parse_predictions};
use artss_core::imageio::load_gray;
use artss_core::imgproc::CanonicalImage;
use artss_core::model::{ImageRecord, JointDetection};
use artss_core::seqbuild::{build_sequence, max_sequence_length, write_sequences};

use crate::common::{list_files, stem_of};

pub struct Args {
    pub detections: PathBuf,
    pub images: PathBuf,
    pub out: PathBuf,
    pub crop_size: u32,
    pub l_max: usize,
}

/// Detection files may be ground truth (5 fields) or predictions
/// (6 fields); sniff on the first non-empty line.
fn parse_detection_file(path: &Path) -> Result<Vec<JointDetection>> {
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
    let det_files = list_files(&args.detections, "txt")?;
    if det_files.is_empty() {
        anyhow::bail!("no detection .txt files in {}", args.detections.display());
    }

    let mut sequences = Vec::with_capacity(det_files.len());
    let mut counts = Vec::with_capacity(det_files.len());
    for det_path in &det_files {
        let stem = stem_of(det_path);
        let dets = parse_detection_file(det_path)
            .with_context(|| det_path.display().to_string())?;
        counts.push(dets.len());

        let img_path = args.images.join(format!("{stem}.png"));
        let (pixels, width, height) =
            load_gray(&img_path).with_context(|| format!("image for {stem}"))?;
        let record = ImageRecord::new(stem.clone(), pixels, width, height)?;
        let canonical = CanonicalImage::from_record(&record);

        let mut seq = build_sequence(&canonical, &dets, args.l_max, args.crop_size, args.crop_size)
            .with_context(|| format!("sequence for {stem}"))?;
        // An empty detection file still produces a (fully padded) sequence
        // for this image id.
        if dets.is_empty() {
            seq.image_id = stem;
        }
        sequences.push(seq);
    }

    let scan = max_sequence_length(counts.iter().copied())?;
    write_sequences(&sequences, &args.out)?;
    println!(
        "wrote {} sequences (slots {}, crop {}x{}, max visible joints in dataset: {}) to {}",
        sequences.len(),
        args.l_max,
        args.crop_size,
        args.crop_size,
        scan,
        args.out.display(),
    );
    Ok(())
}
