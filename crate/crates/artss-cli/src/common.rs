//! Shared CLI plumbing: seed derivation, directory listing, and path
//! resolution.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// FNV-1a over bytes; stable across platforms and runs.
pub fn stable_hash64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Per-task seed derived from the base seed, an item name, and a variant
/// index; independent of worker scheduling.
pub fn derive_seed(base: u64, name: &str, variant: u64) -> u64 {
    stable_hash64(name.as_bytes())
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(base)
        .wrapping_add(variant.wrapping_mul(0x2545f4914f6cdd1d))
}

/// Files in `dir` with the given extension, sorted by name for
/// deterministic processing order.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let entries =
        std::fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().map(|e| e.eq_ignore_ascii_case(ext)).unwrap_or(false) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// File stem as a string.
pub fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Parse a `WxH` size argument.
pub fn parse_size(s: &str) -> Result<(u32, u32)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("size {s:?} is not WxH"))?;
    Ok((
        w.trim().parse().with_context(|| format!("bad width in {s:?}"))?,
        h.trim().parse().with_context(|| format!("bad height in {s:?}"))?,
    ))
}

/// Resolve a possibly-relative path against the directory of `base_file`.
pub fn resolve_relative(base_file: &Path, raw: &str) -> PathBuf {
    let p = Path::new(raw);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_file
            .parent()
            .map(|d| d.join(p))
            .unwrap_or_else(|| p.to_path_buf())
    }
}

/// `--out` fallback: the ARTSS_OUT_DIR environment variable.
pub fn resolve_out_dir(flag: Option<PathBuf>) -> Result<PathBuf> {
    match flag {
        Some(p) => Ok(p),
        None => std::env::var_os("ARTSS_OUT_DIR")
            .map(PathBuf::from)
            .context("no --out given and ARTSS_OUT_DIR is unset"),
    }
}
