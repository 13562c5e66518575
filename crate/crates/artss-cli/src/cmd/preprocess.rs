//! `preprocess`: resize, normalize, estimate or take the orientation, and
//! rotate every manifest image to the canonical pose.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

use artss_core::annot_io::{parse_manifest, ManifestRow};
use artss_core::imageio::{load_gray, save_gray_png};
use artss_core::imgproc::{self, Interp, DEFAULT_FG_THRESHOLD};
use artss_core::model::ImageRecord;

use crate::common::resolve_relative;

pub struct Args {
    pub manifest: PathBuf,
    pub out: PathBuf,
    pub target: (u32, u32),
}

struct LogEntry {
    id: String,
    source: &'static str,
    current_deg: f64,
    applied_deg: f64,
}

fn process_row(
    manifest_path: &Path,
    out: &Path,
    target: (u32, u32),
    row: &ManifestRow,
) -> Result<LogEntry> {
    let img_path = resolve_relative(manifest_path, &row.path);
    let (pixels, width, height) =
        load_gray(&img_path).with_context(|| format!("image for id {}", row.id))?;
    let mut record = ImageRecord::new(row.id.clone(), pixels, width, height)?;
    record.age = row.age;
    record.gender = row.gender;
    record.side = row.side;

    let canonical = imgproc::resize(&record, target.0, target.1)?;
    let (current, source) = match row.orientation_deg {
        Some(deg) => (deg, "manifest"),
        None => match imgproc::estimate_orientation(&canonical, DEFAULT_FG_THRESHOLD) {
            Ok(deg) => (deg, "estimated"),
            // No usable foreground: assume the canonical pose.
            Err(_) => (90.0, "fallback"),
        },
    };
    let reoriented = imgproc::reorient(&canonical, current, Interp::Bilinear)?;
    save_gray_png(
        &out.join(format!("{}.png", row.id)),
        &reoriented.to_u8(),
        reoriented.width,
        reoriented.height,
    )?;
    Ok(LogEntry {
        id: row.id.clone(),
        source,
        current_deg: current,
        applied_deg: reoriented.orientation_applied,
    })
}

pub fn run(args: &Args) -> Result<()> {
    let rows = parse_manifest(&args.manifest)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let entries: Vec<LogEntry> = rows
        .par_iter()
        .map(|row| process_row(&args.manifest, &args.out, args.target, row))
        .collect::<Result<_>>()?;

    let mut log = String::from("id,source,current_deg,applied_deg\n");
    for e in &entries {
        let _ = writeln!(
            log,
            "{},{},{:.4},{:.4}",
            e.id, e.source, e.current_deg, e.applied_deg
        );
    }
    artss_core::fsutil::atomic_write(&args.out.join("orientation_log.csv"), log.as_bytes())?;
    println!(
        "preprocessed {} images to {}x{} in {}",
        entries.len(),
        args.target.0,
        args.target.1,
        args.out.display()
    );
    Ok(())
}
