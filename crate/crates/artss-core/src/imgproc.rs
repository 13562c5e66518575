//! Deterministic preprocessing: resize, intensity normalization, orientation
//! estimation, and reorientation to the canonical vertical pose.
//!
//! Angles are measured in the image plane (x = column, y = row) from the +x
//! axis toward +y, in degrees, and reduced to `[0, 180)`. A hand whose long
//! axis runs along the rows therefore sits at 90 degrees, which is the
//! canonical pose every image is rotated to.

use thiserror::Error;

use crate::model::ImageRecord;

/// Default foreground threshold for orientation estimation.
pub const DEFAULT_FG_THRESHOLD: f32 = 0.1;

#[derive(Debug, Error)]
pub enum ImgError {
    #[error("degenerate target dimensions {width}x{height} (minimum {min})")]
    DegenerateTarget { width: u32, height: u32, min: u32 },
    #[error("no foreground pixel above threshold {0}; cannot estimate orientation")]
    EmptyForeground(f32),
    #[error("orientation {0} outside [0, 180)")]
    OrientationOutOfRange(f64),
}

/// Interpolation used by resampling operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interp {
    #[default]
    Bilinear,
    Nearest,
}

/// A normalized grayscale image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalImage {
    /// Row-major values in `[0, 1]`.
    pub pixels: Vec<f32>,
    pub width: u32,
    pub height: u32,
    /// Rotation in degrees that has been applied to reach this image.
    pub orientation_applied: f64,
}

impl CanonicalImage {
    pub fn new_fill(width: u32, height: u32, value: f32) -> Self {
        Self {
            pixels: vec![value; width as usize * height as usize],
            width,
            height,
            orientation_applied: 0.0,
        }
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<f32>) -> Self {
        assert_eq!(pixels.len(), width as usize * height as usize);
        Self {
            pixels,
            width,
            height,
            orientation_applied: 0.0,
        }
    }

    /// Normalize an 8-bit record by 1/255 without resampling.
    pub fn from_record(img: &ImageRecord) -> Self {
        Self {
            pixels: img.pixels.iter().map(|&v| v as f32 / 255.0).collect(),
            width: img.width,
            height: img.height,
            orientation_applied: 0.0,
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: f32) {
        self.pixels[y as usize * self.width as usize + x as usize] = v;
    }

    /// Quantize back to 8 bits for PNG export.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }
}

/// Clamp-to-edge bilinear sample at a fractional position.
fn sample_bilinear_clamped(img: &CanonicalImage, sx: f64, sy: f64) -> f32 {
    let w = img.width as i64;
    let h = img.height as i64;
    let x0 = sx.floor();
    let y0 = sy.floor();
    let fx = sx - x0;
    let fy = sy - y0;
    let cl = |v: i64, hi: i64| v.clamp(0, hi - 1) as u32;
    let (x0i, x1i) = (cl(x0 as i64, w), cl(x0 as i64 + 1, w));
    let (y0i, y1i) = (cl(y0 as i64, h), cl(y0 as i64 + 1, h));
    let v00 = img.get(x0i, y0i) as f64;
    let v10 = img.get(x1i, y0i) as f64;
    let v01 = img.get(x0i, y1i) as f64;
    let v11 = img.get(x1i, y1i) as f64;
    let top = v00 * (1.0 - fx) + v10 * fx;
    let bot = v01 * (1.0 - fx) + v11 * fx;
    (top * (1.0 - fy) + bot * fy) as f32
}

/// Zero-outside bilinear sample, used by rotation so the background fills
/// with 0 instead of smearing edge pixels.
fn sample_bilinear_zero(img: &CanonicalImage, sx: f64, sy: f64) -> f32 {
    let w = img.width as i64;
    let h = img.height as i64;
    let x0 = sx.floor() as i64;
    let y0 = sy.floor() as i64;
    let fx = sx - x0 as f64;
    let fy = sy - y0 as f64;
    let fetch = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= w || y >= h {
            0.0
        } else {
            img.get(x as u32, y as u32) as f64
        }
    };
    let top = fetch(x0, y0) * (1.0 - fx) + fetch(x0 + 1, y0) * fx;
    let bot = fetch(x0, y0 + 1) * (1.0 - fx) + fetch(x0 + 1, y0 + 1) * fx;
    (top * (1.0 - fy) + bot * fy) as f32
}

fn sample_nearest_zero(img: &CanonicalImage, sx: f64, sy: f64) -> f32 {
    let x = sx.round() as i64;
    let y = sy.round() as i64;
    if x < 0 || y < 0 || x >= img.width as i64 || y >= img.height as i64 {
        0.0
    } else {
        img.get(x as u32, y as u32)
    }
}

/// Resize an 8-bit record to the target dimensions with normalization by
/// 1/255. Half-pixel-centered source mapping, so resizing to the same
/// dimensions reproduces the input exactly.
pub fn resize(img: &ImageRecord, target_w: u32, target_h: u32) -> Result<CanonicalImage, ImgError> {
    if target_w < ImageRecord::MIN_SIDE || target_h < ImageRecord::MIN_SIDE {
        return Err(ImgError::DegenerateTarget {
            width: target_w,
            height: target_h,
            min: ImageRecord::MIN_SIDE,
        });
    }
    let canonical = CanonicalImage::from_record(img);
    resample(&canonical, target_w, target_h, Interp::Bilinear)
}

/// Resample a canonical image to new dimensions (used for joint crops).
pub fn resample(
    img: &CanonicalImage,
    target_w: u32,
    target_h: u32,
    interp: Interp,
) -> Result<CanonicalImage, ImgError> {
    if target_w == 0 || target_h == 0 {
        return Err(ImgError::DegenerateTarget {
            width: target_w,
            height: target_h,
            min: 1,
        });
    }
    let sx_scale = img.width as f64 / target_w as f64;
    let sy_scale = img.height as f64 / target_h as f64;
    let mut out = CanonicalImage::new_fill(target_w, target_h, 0.0);
    out.orientation_applied = img.orientation_applied;
    for y in 0..target_h {
        let sy = (y as f64 + 0.5) * sy_scale - 0.5;
        for x in 0..target_w {
            let sx = (x as f64 + 0.5) * sx_scale - 0.5;
            let v = match interp {
                Interp::Bilinear => sample_bilinear_clamped(img, sx, sy),
                Interp::Nearest => {
                    let xi = sx.round().clamp(0.0, img.width as f64 - 1.0) as u32;
                    let yi = sy.round().clamp(0.0, img.height as f64 - 1.0) as u32;
                    img.get(xi, yi)
                }
            };
            out.set(x, y, v.clamp(0.0, 1.0));
        }
    }
    Ok(out)
}

/// Estimate the principal-axis angle of the foreground intensity
/// distribution from second central moments, in `[0, 180)` degrees.
///
/// Foreground pixels are those above `fg_threshold`; each contributes its
/// intensity as weight, so the estimate depends only on the axis of the
/// distribution, not its magnitude.
pub fn estimate_orientation(
    img: &CanonicalImage,
    fg_threshold: f32,
) -> Result<f64, ImgError> {
    let mut sum_w = 0.0f64;
    let mut sum_x = 0.0f64;
    let mut sum_y = 0.0f64;
    for y in 0..img.height {
        for x in 0..img.width {
            let v = img.get(x, y);
            if v > fg_threshold {
                let w = v as f64;
                sum_w += w;
                sum_x += w * x as f64;
                sum_y += w * y as f64;
            }
        }
    }
    if sum_w == 0.0 {
        return Err(ImgError::EmptyForeground(fg_threshold));
    }
    let mean_x = sum_x / sum_w;
    let mean_y = sum_y / sum_w;
    let (mut mu20, mut mu02, mut mu11) = (0.0f64, 0.0f64, 0.0f64);
    for y in 0..img.height {
        for x in 0..img.width {
            let v = img.get(x, y);
            if v > fg_threshold {
                let w = v as f64;
                let dx = x as f64 - mean_x;
                let dy = y as f64 - mean_y;
                mu20 += w * dx * dx;
                mu02 += w * dy * dy;
                mu11 += w * dx * dy;
            }
        }
    }
    let mut angle = 0.5 * (2.0 * mu11).atan2(mu20 - mu02);
    angle = angle.to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if angle >= 180.0 {
        angle -= 180.0;
    }
    Ok(angle)
}

/// Rotate content by `degrees` about the image center into a same-sized
/// canvas, background filled with 0. A feature at angle `a` ends up at
/// `a + degrees`.
pub fn rotate(img: &CanonicalImage, degrees: f64, interp: Interp) -> CanonicalImage {
    if degrees == 0.0 {
        return img.clone();
    }
    let theta = degrees.to_radians();
    let (cos_t, sin_t) = (theta.cos(), theta.sin());
    let cx = (img.width as f64 - 1.0) / 2.0;
    let cy = (img.height as f64 - 1.0) / 2.0;
    let mut out = CanonicalImage::new_fill(img.width, img.height, 0.0);
    out.orientation_applied = img.orientation_applied;
    for y in 0..img.height {
        let dy = y as f64 - cy;
        for x in 0..img.width {
            let dx = x as f64 - cx;
            // Inverse map: source position that lands on (x, y).
            let sx = cos_t * dx + sin_t * dy + cx;
            let sy = -sin_t * dx + cos_t * dy + cy;
            let v = match interp {
                Interp::Bilinear => sample_bilinear_zero(img, sx, sy),
                Interp::Nearest => sample_nearest_zero(img, sx, sy),
            };
            out.set(x, y, v.clamp(0.0, 1.0));
        }
    }
    out
}

/// Rotate so the long axis lands at the canonical 90-degree pose, recording
/// the applied rotation. `current` must already be reduced to `[0, 180)`.
pub fn reorient(
    img: &CanonicalImage,
    current: f64,
    interp: Interp,
) -> Result<CanonicalImage, ImgError> {
    if !current.is_finite() || !(0.0..180.0).contains(&current) {
        return Err(ImgError::OrientationOutOfRange(current));
    }
    let delta = 90.0 - current;
    let mut out = rotate(img, delta, interp);
    out.orientation_applied = delta;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_record(w: u32, h: u32, v: u8) -> ImageRecord {
        ImageRecord::new("t", vec![v; (w * h) as usize], w, h).unwrap()
    }

    /// A bright bar through the image center at the given angle.
    fn bar_image(size: u32, angle_deg: f64, half_width: f64) -> CanonicalImage {
        let mut img = CanonicalImage::new_fill(size, size, 0.0);
        let c = (size as f64 - 1.0) / 2.0;
        // Snap near-zero direction components so axis-aligned bars are
        // rendered exactly symmetric.
        let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
        let (dir_x, dir_y) = (
            snap(angle_deg.to_radians().cos()),
            snap(angle_deg.to_radians().sin()),
        );
        let half_len = size as f64 * 0.35;
        for y in 0..size {
            for x in 0..size {
                let dx = x as f64 - c;
                let dy = y as f64 - c;
                let along = dx * dir_x + dy * dir_y;
                let across = -dx * dir_y + dy * dir_x;
                if along.abs() <= half_len && across.abs() <= half_width {
                    img.set(x, y, 1.0);
                }
            }
        }
        img
    }

    #[test]
    fn resize_constant_image_is_invariant() {
        let img = constant_record(100, 100, 128);
        let out = resize(&img, 50, 50).unwrap();
        assert_eq!(out.width, 50);
        assert_eq!(out.height, 50);
        let expected = 128.0f32 / 255.0;
        for &v in &out.pixels {
            assert!((v - expected).abs() < 1e-6, "{v} vs {expected}");
        }
    }

    #[test]
    fn resize_to_same_dims_is_exact_normalization() {
        let mut img = constant_record(40, 40, 0);
        for (i, p) in img.pixels.iter_mut().enumerate() {
            *p = (i % 251) as u8;
        }
        let out = resize(&img, 40, 40).unwrap();
        for (i, &v) in out.pixels.iter().enumerate() {
            assert_eq!(v, img.pixels[i] as f32 / 255.0);
        }
    }

    #[test]
    fn resize_checkerboard_to_single_pixel_averages() {
        // 2x2 {0,255;255,0} resampled to 1x1 lands exactly between all four
        // pixels, so bilinear gives the plain average 0.5.
        let img = CanonicalImage::from_pixels(2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        let out = resample(&img, 1, 1, Interp::Bilinear).unwrap();
        assert!((out.pixels[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn resize_rejects_degenerate_target() {
        let img = constant_record(64, 64, 10);
        assert!(resize(&img, 16, 64).is_err());
        assert!(resample(&CanonicalImage::from_record(&img), 0, 4, Interp::Bilinear).is_err());
    }

    #[test]
    fn orientation_of_vertical_bar_is_90() {
        let img = bar_image(101, 90.0, 3.0);
        let angle = estimate_orientation(&img, DEFAULT_FG_THRESHOLD).unwrap();
        assert!((angle - 90.0).abs() < 1.0, "got {angle}");
    }

    #[test]
    fn orientation_of_horizontal_bar_is_0() {
        let img = bar_image(101, 0.0, 3.0);
        let angle = estimate_orientation(&img, DEFAULT_FG_THRESHOLD).unwrap();
        let wrapped = angle.min(180.0 - angle);
        assert!(wrapped < 1.0, "got {angle}");
    }

    #[test]
    fn orientation_shifts_with_rotation() {
        let img = bar_image(121, 90.0, 4.0);
        let base = estimate_orientation(&img, DEFAULT_FG_THRESHOLD).unwrap();
        for theta in [-30.0, 20.0, 45.0, 70.0] {
            let rotated = rotate(&img, theta, Interp::Bilinear);
            let got = estimate_orientation(&rotated, DEFAULT_FG_THRESHOLD).unwrap();
            let expected = (base + theta).rem_euclid(180.0);
            let diff = (got - expected).abs();
            let diff = diff.min(180.0 - diff);
            assert!(diff < 2.0, "theta {theta}: got {got}, expected {expected}");
        }
    }

    #[test]
    fn orientation_invariant_to_intensity_scaling() {
        let img = bar_image(101, 40.0, 4.0);
        let base = estimate_orientation(&img, DEFAULT_FG_THRESHOLD).unwrap();
        for scale in [0.2f32, 0.5, 0.8] {
            let scaled = CanonicalImage::from_pixels(
                img.width,
                img.height,
                img.pixels.iter().map(|&v| v * scale).collect(),
            );
            let got = estimate_orientation(&scaled, DEFAULT_FG_THRESHOLD).unwrap();
            assert_eq!(got, base, "scale {scale}");
        }
    }

    #[test]
    fn orientation_empty_foreground_errors() {
        let img = CanonicalImage::new_fill(32, 32, 0.05);
        assert!(matches!(
            estimate_orientation(&img, DEFAULT_FG_THRESHOLD),
            Err(ImgError::EmptyForeground(_))
        ));
    }

    #[test]
    fn reorient_at_canonical_pose_is_identity() {
        let img = bar_image(64, 90.0, 2.0);
        let out = reorient(&img, 90.0, Interp::Bilinear).unwrap();
        assert_eq!(out.orientation_applied, 0.0);
        assert_eq!(out.pixels, img.pixels);
    }

    #[test]
    fn reorient_from_zero_matches_coordinate_map() {
        // Asymmetric 3x3 pattern rotated by +90 degrees; nearest-neighbor
        // sampling must agree with the explicit inverse coordinate map.
        let pix: Vec<f32> = (0..9).map(|i| i as f32 / 9.0).collect();
        let img = CanonicalImage::from_pixels(3, 3, pix);
        let out = reorient(&img, 0.0, Interp::Nearest).unwrap();
        assert_eq!(out.orientation_applied, 90.0);
        for y in 0i64..3 {
            for x in 0i64..3 {
                let (dx, dy) = (x - 1, y - 1);
                let (sx, sy) = (dy + 1, -dx + 1);
                let expected = img.get(sx as u32, sy as u32);
                assert_eq!(out.get(x as u32, y as u32), expected, "at ({x},{y})");
            }
        }
    }

    #[test]
    fn reorient_idempotent_at_canonical_pose() {
        let img = bar_image(64, 30.0, 2.0);
        let once = reorient(&img, 30.0, Interp::Nearest).unwrap();
        let twice = reorient(&once, 90.0, Interp::Nearest).unwrap();
        for (a, b) in once.pixels.iter().zip(&twice.pixels) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn reorient_rejects_out_of_range() {
        let img = CanonicalImage::new_fill(32, 32, 0.5);
        assert!(reorient(&img, 180.0, Interp::Bilinear).is_err());
        assert!(reorient(&img, -1.0, Interp::Bilinear).is_err());
    }

    #[test]
    fn rotation_preserves_values_in_unit_range() {
        let img = bar_image(81, 25.0, 6.0);
        let out = rotate(&img, 33.3, Interp::Bilinear);
        for &v in &out.pixels {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn rotation_preserves_total_intensity_for_inscribed_content() {
        // Blob well inside the inscribed circle.
        let size = 101u32;
        let c = (size as f64 - 1.0) / 2.0;
        let mut img = CanonicalImage::new_fill(size, size, 0.0);
        for y in 0..size {
            for x in 0..size {
                let r2 = (x as f64 - c).powi(2) + (y as f64 - c).powi(2);
                if r2 < (size as f64 * 0.25).powi(2) {
                    img.set(x, y, 0.8);
                }
            }
        }
        let total: f64 = img.pixels.iter().map(|&v| v as f64).sum();
        let rotated = rotate(&img, 37.0, Interp::Bilinear);
        let total_rot: f64 = rotated.pixels.iter().map(|&v| v as f64).sum();
        assert!(
            (total - total_rot).abs() / total < 0.01,
            "{total} vs {total_rot}"
        );
    }
}
