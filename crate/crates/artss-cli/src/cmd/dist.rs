//! `report-dist`: age and total-score histograms split by gender with
//! kernel-density overlays, as a two-panel SVG.

use std::path::PathBuf;

use anyhow::Result;

use artss_core::annot_io::parse_manifest;
use artss_core::model::Gender;

use crate::svg;

pub struct Args {
    pub manifest: PathBuf,
    pub out: PathBuf,
}

pub fn run(args: &Args) -> Result<()> {
    let rows = parse_manifest(&args.manifest)?;

    let mut ages: Vec<(String, Vec<f64>)> = vec![
        ("female".into(), Vec::new()),
        ("male".into(), Vec::new()),
    ];
    let mut tss: Vec<(String, Vec<f64>)> = vec![
        ("female".into(), Vec::new()),
        ("male".into(), Vec::new()),
    ];
    for row in &rows {
        let Some(gender) = row.gender else { continue };
        let slot = match gender {
            Gender::Female => 0,
            Gender::Male => 1,
        };
        if let Some(age) = row.age {
            ages[slot].1.push(age as f64);
        }
        if let Some(score) = row.sharp_score() {
            tss[slot].1.push(score?.tss);
        }
    }
    let n_ages: usize = ages.iter().map(|(_, v)| v.len()).sum();
    let n_tss: usize = tss.iter().map(|(_, v)| v.len()).sum();
    if n_ages + n_tss == 0 {
        anyhow::bail!("manifest has no gendered age or reader-score data to plot");
    }

    let figure = svg::distribution_figure(&[
        (
            "Age distribution by gender".into(),
            "age (years)".into(),
            5.0,
            ages,
        ),
        (
            "Total Sharp score distribution by gender".into(),
            "total Sharp score".into(),
            10.0,
            tss,
        ),
    ]);
    artss_core::fsutil::atomic_write(&args.out, figure.as_bytes())?;
    println!(
        "wrote distribution figure ({n_ages} age points, {n_tss} score points) to {}",
        args.out.display()
    );
    Ok(())
}
