//! PNG/JPEG image file I/O: grayscale loading for records, PNG export for
//! canonical images, and 1-bit PNG masks.

use std::io::BufWriter;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::maskgen::BinaryMask;

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Codec { path: PathBuf, msg: String },
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ImageIoError + '_ {
    move |source| ImageIoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn codec_err(path: &Path, msg: impl ToString) -> ImageIoError {
    ImageIoError::Codec {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    }
}

/// Load a PNG or 8-bit grayscale JPEG as `(pixels, width, height)`.
pub fn load_gray(path: &Path) -> Result<(Vec<u8>, u32, u32), ImageIoError> {
    let img = image::open(path).map_err(|e| codec_err(path, e))?;
    let gray = img.to_luma8();
    let (width, height) = gray.dimensions();
    Ok((gray.into_raw(), width, height))
}

/// Write 8-bit grayscale pixels as PNG, atomically.
pub fn save_gray_png(
    path: &Path,
    pixels: &[u8],
    width: u32,
    height: u32,
) -> Result<(), ImageIoError> {
    let tmp = tmp_sibling(path)?;
    image::save_buffer_with_format(
        &tmp,
        pixels,
        width,
        height,
        image::ExtendedColorType::L8,
        image::ImageFormat::Png,
    )
    .map_err(|e| codec_err(path, e))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

/// Write a binary mask as a 1-bit grayscale PNG, atomically.
pub fn save_mask_png(path: &Path, mask: &BinaryMask) -> Result<(), ImageIoError> {
    let tmp = tmp_sibling(path)?;
    {
        let file = std::fs::File::create(&tmp).map_err(io_err(path))?;
        let mut encoder = png::Encoder::new(BufWriter::new(file), mask.width, mask.height);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::One);
        let mut writer = encoder
            .write_header()
            .map_err(|e| codec_err(path, e))?;
        let row_bytes = (mask.width as usize).div_ceil(8);
        let mut packed = vec![0u8; row_bytes * mask.height as usize];
        for y in 0..mask.height as usize {
            for x in 0..mask.width as usize {
                if mask.pixels[y * mask.width as usize + x] != 0 {
                    packed[y * row_bytes + x / 8] |= 0x80 >> (x % 8);
                }
            }
        }
        writer
            .write_image_data(&packed)
            .map_err(|e| codec_err(path, e))?;
        writer.finish().map_err(|e| codec_err(path, e))?;
    }
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

/// Load a mask PNG (1-bit or 8-bit); any nonzero sample is foreground.
pub fn load_mask_png(path: &Path) -> Result<BinaryMask, ImageIoError> {
    let img = image::open(path).map_err(|e| codec_err(path, e))?;
    let gray = img.to_luma8();
    let (width, height) = gray.dimensions();
    let pixels = gray.into_raw().iter().map(|&v| u8::from(v != 0)).collect();
    Ok(BinaryMask {
        pixels,
        width,
        height,
    })
}

fn tmp_sibling(path: &Path) -> Result<PathBuf, ImageIoError> {
    let name = path
        .file_name()
        .ok_or_else(|| codec_err(path, "path has no file name"))?;
    let tmp_name = format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id());
    Ok(match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(dir) => dir.join(tmp_name),
        None => PathBuf::from(tmp_name),
    })
}
