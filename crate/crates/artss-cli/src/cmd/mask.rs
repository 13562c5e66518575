//! `mask`: run the four-step mask generator over a directory of canonical
//! PNGs, writing 1-bit masks plus a provenance sidecar per image.

use std::path::PathBuf;

use anyhow::{Context, Result};
use rayon::prelude::*;

use artss_core::imageio::{load_gray, save_mask_png};
use artss_core::maskgen::{generate_mask, MaskParams};
use artss_core::model::ImageRecord;

use crate::common::{list_files, stem_of};

pub struct Args {
    pub input: PathBuf,
    pub out: PathBuf,
    pub params: MaskParams,
}

pub fn run(args: &Args) -> Result<()> {
    let files = list_files(&args.input, "png")?;
    if files.is_empty() {
        anyhow::bail!("no .png images in {}", args.input.display());
    }
    std::fs::create_dir_all(&args.out)?;

    files.par_iter().try_for_each(|path| -> Result<()> {
        let id = stem_of(path);
        let (pixels, width, height) = load_gray(path)?;
        let record = ImageRecord::new(id.clone(), pixels, width, height)?;
        let mask = generate_mask(&record, &args.params)
            .with_context(|| format!("mask for {id}"))?;
        save_mask_png(&args.out.join(format!("{id}.png")), &mask)?;

        let sidecar = serde_json::json!({
            "id": id,
            "width": mask.width,
            "height": mask.height,
            "sigma": args.params.effective_sigma(width),
            "wavelet_levels": args.params.wavelet_levels,
            "disk_radius": args.params.disk_radius,
            "foreground_fraction": mask.area() as f64 / (mask.width as f64 * mask.height as f64),
        });
        artss_core::fsutil::atomic_write(
            &args.out.join(format!("{id}.mask.json")),
            (serde_json::to_string_pretty(&sidecar)? + "\n").as_bytes(),
        )?;
        Ok(())
    })?;

    println!("masked {} images into {}", files.len(), args.out.display());
    Ok(())
}
