//! `split`: emit the 3-fold protocol splits plus the external test set as
//! JSON files.

use std::path::PathBuf;

use anyhow::{Context, Result};

use artss_core::annot_io::parse_manifest;
use artss_core::model::make_paper_splits;

pub struct Args {
    pub manifest: PathBuf,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn run(args: &Args) -> Result<()> {
    let rows = parse_manifest(&args.manifest)?;
    let ids: Vec<String> = rows.into_iter().map(|r| r.id).collect();
    let splits = make_paper_splits(&ids, args.seed)?;

    std::fs::create_dir_all(&args.out)?;
    for fold in &splits.folds {
        let name = match fold.fold {
            artss_core::model::FoldId::Fold(n) => format!("fold_{n}.json"),
            artss_core::model::FoldId::ExternalTest => "external_test.json".into(),
        };
        let json = serde_json::to_string(fold)? + "\n";
        artss_core::fsutil::atomic_write(&args.out.join(name), json.as_bytes())
            .with_context(|| format!("writing into {}", args.out.display()))?;
    }
    artss_core::fsutil::atomic_write(
        &args.out.join("external_test.json"),
        (serde_json::to_string(&splits.external_test)? + "\n").as_bytes(),
    )?;

    eprintln!(
        "note: fold 3 reuses validation ids {:?} from fold 1's pool (679 non-test ids cannot fill 3 x 227)",
        splits.duplicated_val_ids
    );
    println!(
        "wrote 3 folds ({} train / {} val each) and external test ({}) to {}",
        splits.folds[0].train.len(),
        splits.folds[0].val.len(),
        splits.external_test.test.len(),
        args.out.display()
    );
    Ok(())
}
