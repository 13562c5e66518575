//! Classical ground-truth hand-mask generation: Gaussian smoothing, Haar
//! wavelet denoising, Otsu thresholding, and morphological refinement.
//!
//! Morphology treats everything outside the image window as background, and
//! the closing step works on a zero-padded buffer so it stays extensive at
//! the borders; the open-then-close composition is then a true morphological
//! filter and `refine` is idempotent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imgproc::CanonicalImage;
use crate::model::ImageRecord;

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("wavelet levels {levels} outside [1, {max}] for this image")]
    InvalidLevels { levels: u32, max: u32 },
    #[error("image has no separable intensity classes (fewer than 2 occupied histogram bins)")]
    NoContrast,
    #[error("mask empty after opening; no hand-scale foreground found")]
    EmptyMask,
    #[error("mask stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<MaskError>,
    },
}

fn at_stage(stage: &'static str) -> impl Fn(MaskError) -> MaskError {
    move |source| MaskError::Stage {
        stage,
        source: Box::new(source),
    }
}

/// Strictly binary mask; every value is 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub pixels: Vec<u8>,
    pub width: u32,
    pub height: u32,
}

impl BinaryMask {
    pub fn new_empty(width: u32, height: u32) -> Self {
        Self {
            pixels: vec![0; width as usize * height as usize],
            width,
            height,
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        self.pixels[y as usize * self.width as usize + x as usize] = v;
    }

    /// Number of foreground pixels.
    pub fn area(&self) -> usize {
        self.pixels.iter().filter(|&&v| v != 0).count()
    }
}

/// Parameters of the four-step pipeline, echoed into the provenance sidecar.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskParams {
    /// Gaussian sigma in pixels; `None` scales the 1.5-at-640-wide default
    /// linearly with image width.
    pub sigma: Option<f64>,
    pub wavelet_levels: u32,
    pub disk_radius: u32,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self {
            sigma: None,
            wavelet_levels: 2,
            disk_radius: 2,
        }
    }
}

impl MaskParams {
    pub fn effective_sigma(&self, width: u32) -> f64 {
        self.sigma.unwrap_or(1.5 * width as f64 / 640.0)
    }
}

/// Discrete Gaussian kernel with radius `ceil(3*sigma)`, normalized to sum 1.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>, MaskError> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(MaskError::NonPositiveSigma(sigma));
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let denom = 2.0 * sigma * sigma;
    let mut weights: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i as f64 * i as f64) / denom).exp())
        .collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    Ok(weights)
}

/// Symmetric reflection of an out-of-range index (edge pixel repeated).
#[inline]
fn reflect(i: i64, n: i64) -> usize {
    let period = 2 * n;
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - 1 - i;
    }
    i as usize
}

/// Separable Gaussian convolution with reflect padding.
pub fn gaussian_smooth(img: &CanonicalImage, sigma: f64) -> Result<CanonicalImage, MaskError> {
    let kernel = gaussian_kernel(sigma)?;
    let radius = (kernel.len() / 2) as i64;
    let (w, h) = (img.width as i64, img.height as i64);

    let mut horiz = vec![0.0f64; (w * h) as usize];
    for y in 0..h {
        let row = &img.pixels[(y * w) as usize..((y + 1) * w) as usize];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &wk) in kernel.iter().enumerate() {
                let xi = reflect(x + k as i64 - radius, w);
                acc += wk * row[xi] as f64;
            }
            horiz[(y * w + x) as usize] = acc;
        }
    }

    let mut out = CanonicalImage::new_fill(img.width, img.height, 0.0);
    out.orientation_applied = img.orientation_applied;
    for x in 0..w {
        for y in 0..h {
            let mut acc = 0.0;
            for (k, &wk) in kernel.iter().enumerate() {
                let yi = reflect(y + k as i64 - radius, h);
                acc += wk * horiz[yi * w as usize + x as usize];
            }
            out.pixels[(y * w + x) as usize] = (acc as f32).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// Orthonormal Haar analysis of one row/column segment in place.
fn haar_forward_1d(data: &mut [f64], scratch: &mut [f64]) {
    let half = data.len() / 2;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..half {
        let a = data[2 * i];
        let b = data[2 * i + 1];
        scratch[i] = (a + b) * s;
        scratch[half + i] = (a - b) * s;
    }
    data.copy_from_slice(&scratch[..data.len()]);
}

fn haar_inverse_1d(data: &mut [f64], scratch: &mut [f64]) {
    let half = data.len() / 2;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..half {
        let l = data[i];
        let h = data[half + i];
        scratch[2 * i] = (l + h) * s;
        scratch[2 * i + 1] = (l - h) * s;
    }
    data.copy_from_slice(&scratch[..data.len()]);
}

/// Haar wavelet shrinkage: decompose to `levels`, soft-threshold every
/// detail coefficient with the universal threshold, reconstruct.
///
/// The noise scale is the median absolute diagonal detail at the finest
/// level divided by 0.6745; the threshold is `sigma_hat * sqrt(2 ln N)`
/// with `N` the (reflect-padded) pixel count. Dimensions are padded to a
/// multiple of `2^levels` and cropped back after reconstruction.
pub fn wavelet_denoise(img: &CanonicalImage, levels: u32) -> Result<CanonicalImage, MaskError> {
    let min_dim = img.width.min(img.height);
    let max_levels = if min_dim >= 2 { min_dim.ilog2() } else { 0 };
    if levels < 1 || levels > max_levels {
        return Err(MaskError::InvalidLevels {
            levels,
            max: max_levels,
        });
    }

    let unit = 1usize << levels;
    let pw = (img.width as usize).div_ceil(unit) * unit;
    let ph = (img.height as usize).div_ceil(unit) * unit;

    // Reflect-pad into the working buffer.
    let mut buf = vec![0.0f64; pw * ph];
    for y in 0..ph {
        let sy = reflect(y as i64, img.height as i64);
        for x in 0..pw {
            let sx = reflect(x as i64, img.width as i64);
            buf[y * pw + x] = img.pixels[sy * img.width as usize + sx] as f64;
        }
    }

    let mut scratch = vec![0.0f64; pw.max(ph)];
    let mut col = vec![0.0f64; ph];

    // Analysis.
    let (mut cur_w, mut cur_h) = (pw, ph);
    for _ in 0..levels {
        for y in 0..cur_h {
            haar_forward_1d(&mut buf[y * pw..y * pw + cur_w], &mut scratch);
        }
        for x in 0..cur_w {
            for y in 0..cur_h {
                col[y] = buf[y * pw + x];
            }
            haar_forward_1d(&mut col[..cur_h], &mut scratch);
            for y in 0..cur_h {
                buf[y * pw + x] = col[y];
            }
        }
        cur_w /= 2;
        cur_h /= 2;
    }
    let (ll_w, ll_h) = (cur_w, cur_h);

    // Noise scale from the finest diagonal subband.
    let mut finest: Vec<f64> = Vec::with_capacity((pw / 2) * (ph / 2));
    for y in ph / 2..ph {
        for x in pw / 2..pw {
            finest.push(buf[y * pw + x].abs());
        }
    }
    finest.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if finest.is_empty() {
        0.0
    } else if finest.len() % 2 == 1 {
        finest[finest.len() / 2]
    } else {
        (finest[finest.len() / 2 - 1] + finest[finest.len() / 2]) / 2.0
    };
    let sigma_hat = median / 0.6745;
    let tau = sigma_hat * (2.0 * ((pw * ph) as f64).ln()).sqrt();

    // Soft-threshold everything outside the approximation band.
    for y in 0..ph {
        for x in 0..pw {
            if x < ll_w && y < ll_h {
                continue;
            }
            let d = buf[y * pw + x];
            buf[y * pw + x] = d.signum() * (d.abs() - tau).max(0.0);
        }
    }

    // Synthesis.
    let (mut cur_w, mut cur_h) = (ll_w, ll_h);
    for _ in 0..levels {
        cur_w *= 2;
        cur_h *= 2;
        for x in 0..cur_w {
            for y in 0..cur_h {
                col[y] = buf[y * pw + x];
            }
            haar_inverse_1d(&mut col[..cur_h], &mut scratch);
            for y in 0..cur_h {
                buf[y * pw + x] = col[y];
            }
        }
        for y in 0..cur_h {
            haar_inverse_1d(&mut buf[y * pw..y * pw + cur_w], &mut scratch);
        }
    }

    let mut out = CanonicalImage::new_fill(img.width, img.height, 0.0);
    out.orientation_applied = img.orientation_applied;
    for y in 0..img.height as usize {
        for x in 0..img.width as usize {
            out.pixels[y * img.width as usize + x] = (buf[y * pw + x] as f32).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// 256-bin intensity histogram of a `[0, 1]` image.
pub fn histogram_256(img: &CanonicalImage) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &v in &img.pixels {
        let bin = (v.clamp(0.0, 1.0) * 255.0).round() as usize;
        hist[bin] += 1;
    }
    hist
}

/// Otsu's threshold on a 256-bin histogram: the bin index `t` maximizing
/// between-class variance for the split background `< t` / foreground `>= t`.
/// The lowest maximizing index wins ties.
pub fn otsu_level(hist: &[u64; 256]) -> Result<usize, MaskError> {
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(MaskError::NoContrast);
    }
    let total: u64 = hist.iter().sum();
    let weighted_total: u64 = hist.iter().enumerate().map(|(i, &c)| i as u64 * c).sum();

    let mut best_t = 0usize;
    let mut best_key = f64::NEG_INFINITY;
    let mut w0: u64 = 0;
    let mut s0: u64 = 0;
    for t in 1..256usize {
        w0 += hist[t - 1];
        s0 += (t as u64 - 1) * hist[t - 1];
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let s1 = weighted_total - s0;
        // Between-class variance up to the constant 1/total^2:
        // w0*w1*(mu0-mu1)^2 = (s0*w1 - s1*w0)^2 / (w0*w1), from exact integers.
        let a = s0 as i128 * w1 as i128 - s1 as i128 * w0 as i128;
        let key = (a as f64) * (a as f64) / (w0 as f64 * w1 as f64);
        if key > best_key {
            best_key = key;
            best_t = t;
        }
    }
    Ok(best_t)
}

/// Otsu segmentation: foreground is every pixel whose histogram bin is at or
/// above the computed level.
pub fn threshold(img: &CanonicalImage) -> Result<BinaryMask, MaskError> {
    let hist = histogram_256(img);
    let level = otsu_level(&hist)?;
    let mut mask = BinaryMask::new_empty(img.width, img.height);
    for (i, &v) in img.pixels.iter().enumerate() {
        let bin = (v.clamp(0.0, 1.0) * 255.0).round() as usize;
        mask.pixels[i] = u8::from(bin >= level);
    }
    Ok(mask)
}

fn disk_offsets(radius: u32) -> Vec<(i64, i64)> {
    let r = radius as i64;
    let r2 = r * r;
    let mut offs = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r2 {
                offs.push((dx, dy));
            }
        }
    }
    offs
}

fn erode(mask: &BinaryMask, offs: &[(i64, i64)]) -> BinaryMask {
    let (w, h) = (mask.width as i64, mask.height as i64);
    let mut out = BinaryMask::new_empty(mask.width, mask.height);
    for y in 0..h {
        'px: for x in 0..w {
            for &(dx, dy) in offs {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h || mask.get(nx as u32, ny as u32) == 0 {
                    continue 'px;
                }
            }
            out.set(x as u32, y as u32, 1);
        }
    }
    out
}

fn dilate(mask: &BinaryMask, offs: &[(i64, i64)]) -> BinaryMask {
    let (w, h) = (mask.width as i64, mask.height as i64);
    let mut out = BinaryMask::new_empty(mask.width, mask.height);
    for y in 0..h {
        'px: for x in 0..w {
            for &(dx, dy) in offs {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && ny >= 0 && nx < w && ny < h && mask.get(nx as u32, ny as u32) != 0 {
                    out.set(x as u32, y as u32, 1);
                    continue 'px;
                }
            }
        }
    }
    out
}

fn opening(mask: &BinaryMask, offs: &[(i64, i64)]) -> BinaryMask {
    dilate(&erode(mask, offs), offs)
}

/// Closing on a zero-padded buffer so foreground touching the window border
/// is not eroded away; the result is cropped back to the window.
fn closing(mask: &BinaryMask, offs: &[(i64, i64)], radius: u32) -> BinaryMask {
    let pad = radius as i64;
    let pw = mask.width + 2 * radius;
    let ph = mask.height + 2 * radius;
    let mut padded = BinaryMask::new_empty(pw, ph);
    for y in 0..mask.height {
        for x in 0..mask.width {
            padded.set(x + radius, y + radius, mask.get(x, y));
        }
    }
    let closed = erode(&dilate(&padded, offs), offs);
    let mut out = BinaryMask::new_empty(mask.width, mask.height);
    for y in 0..mask.height {
        for x in 0..mask.width {
            out.set(x, y, closed.get(x + pad as u32, y + pad as u32));
        }
    }
    out
}

/// Keep only the largest 4-connected foreground component. Returns `None`
/// when the mask is empty.
fn largest_component(mask: &BinaryMask) -> Option<BinaryMask> {
    let (w, h) = (mask.width as usize, mask.height as usize);
    let mut labels = vec![0u32; w * h];
    let mut next_label = 0u32;
    let mut best: Option<(u32, usize)> = None;
    let mut stack = Vec::new();

    for start in 0..w * h {
        if mask.pixels[start] == 0 || labels[start] != 0 {
            continue;
        }
        next_label += 1;
        let mut size = 0usize;
        stack.push(start);
        labels[start] = next_label;
        while let Some(idx) = stack.pop() {
            size += 1;
            let (x, y) = (idx % w, idx / w);
            let mut visit = |nx: usize, ny: usize| {
                let nidx = ny * w + nx;
                if mask.pixels[nidx] != 0 && labels[nidx] == 0 {
                    labels[nidx] = next_label;
                    stack.push(nidx);
                }
            };
            if x > 0 {
                visit(x - 1, y);
            }
            if x + 1 < w {
                visit(x + 1, y);
            }
            if y > 0 {
                visit(x, y - 1);
            }
            if y + 1 < h {
                visit(x, y + 1);
            }
        }
        if best.map(|(_, s)| size > s).unwrap_or(true) {
            best = Some((next_label, size));
        }
    }

    let (keep, _) = best?;
    let mut out = BinaryMask::new_empty(mask.width, mask.height);
    for (i, &l) in labels.iter().enumerate() {
        out.pixels[i] = u8::from(l == keep);
    }
    Some(out)
}

/// Fill interior holes: background regions with no 8-connected path to the
/// window border become foreground.
fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width as usize, mask.height as usize);
    let mut outside = vec![false; w * h];
    let mut stack = Vec::new();
    let seed = |idx: usize, outside: &mut Vec<bool>, stack: &mut Vec<usize>| {
        if mask.pixels[idx] == 0 && !outside[idx] {
            outside[idx] = true;
            stack.push(idx);
        }
    };
    for x in 0..w {
        seed(x, &mut outside, &mut stack);
        seed((h - 1) * w + x, &mut outside, &mut stack);
    }
    for y in 0..h {
        seed(y * w, &mut outside, &mut stack);
        seed(y * w + w - 1, &mut outside, &mut stack);
    }
    while let Some(idx) = stack.pop() {
        let (x, y) = (idx % w, idx / w);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let nidx = ny as usize * w + nx as usize;
                if mask.pixels[nidx] == 0 && !outside[nidx] {
                    outside[nidx] = true;
                    stack.push(nidx);
                }
            }
        }
    }
    let mut out = mask.clone();
    for (i, p) in out.pixels.iter_mut().enumerate() {
        if *p == 0 && !outside[i] {
            *p = 1;
        }
    }
    out
}

fn refine_pass(mask: &BinaryMask, offs: &[(i64, i64)], radius: u32) -> Result<BinaryMask, MaskError> {
    let opened = opening(mask, offs);
    if opened.area() == 0 {
        return Err(MaskError::EmptyMask);
    }
    let closed = closing(&opened, offs, radius);
    let largest = largest_component(&closed).ok_or(MaskError::EmptyMask)?;
    Ok(fill_holes(&largest))
}

/// Morphological refinement: opening, closing, largest 4-connected
/// component, hole fill — iterated to its fixed point so `refine` is
/// idempotent.
///
/// One pass is not always stable: discarding a non-largest component can
/// expose a concavity of the survivor that the next pass's closing fills.
/// Real masks stabilize after one or two passes.
pub fn refine(mask: &BinaryMask, disk_radius: u32) -> Result<BinaryMask, MaskError> {
    let offs = disk_offsets(disk_radius);
    let mut current = refine_pass(mask, &offs, disk_radius)?;
    // The window bounds how long a pass can keep changing pixels.
    let cap = (mask.width as usize + mask.height as usize).max(8);
    for _ in 0..cap {
        let next = refine_pass(&current, &offs, disk_radius)?;
        if next == current {
            return Ok(current);
        }
        current = next;
    }
    Ok(current)
}

/// The four-step pipeline: smooth, denoise, threshold, refine. Stage
/// failures carry the stage name.
pub fn generate_mask(img: &ImageRecord, params: &MaskParams) -> Result<BinaryMask, MaskError> {
    let canonical = CanonicalImage::from_record(img);
    let sigma = params.effective_sigma(img.width);
    let smoothed = gaussian_smooth(&canonical, sigma).map_err(at_stage("smooth"))?;
    let denoised = wavelet_denoise(&smoothed, params.wavelet_levels).map_err(at_stage("denoise"))?;
    let raw = threshold(&denoised).map_err(at_stage("threshold"))?;
    refine(&raw, params.disk_radius).map_err(at_stage("refine"))
}
