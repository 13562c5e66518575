//! Seeded data augmentation with boxes transformed consistently with
//! pixels: rotation up to 10 degrees, width/height shifts up to 20%,
//! horizontal flip with probability 0.5, brightness in [0.7, 1.2].
//!
//! Flip, rotation, and shift compose into one affine resampling pass;
//! box corners go through the identical forward map and are re-boxed as
//! the axis-aligned hull of the transformed corners. A horizontal flip
//! also flips the hand-side tag, since a mirrored left hand is
//! geometrically a right hand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imgproc::CanonicalImage;
use crate::model::{BoundingBox, JointDetection};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("augment config: {0}")]
    InvalidConfig(String),
}

/// Sampling ranges and probabilities; defaults are the pipeline's standard
/// augmentation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Rotation sampled from `[-rotation_deg, +rotation_deg]`.
    pub rotation_deg: f64,
    /// Shifts sampled from `[-shift_frac, +shift_frac]` of each dimension.
    pub shift_frac: f64,
    /// Probability of a horizontal flip.
    pub flip_prob: f64,
    pub brightness_min: f64,
    pub brightness_max: f64,
    /// Boxes whose clamped visible area falls below this fraction of their
    /// original area are dropped.
    pub min_visible_frac: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            rotation_deg: 10.0,
            shift_frac: 0.2,
            flip_prob: 0.5,
            brightness_min: 0.7,
            brightness_max: 1.2,
            min_visible_frac: 0.25,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        let bad = |msg: String| Err(AugmentError::InvalidConfig(msg));
        if self.rotation_deg.is_nan() || self.rotation_deg < 0.0 {
            return bad(format!("rotation_deg {} must be >= 0", self.rotation_deg));
        }
        if self.shift_frac.is_nan() || self.shift_frac < 0.0 {
            return bad(format!("shift_frac {} must be >= 0", self.shift_frac));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return bad(format!("flip_prob {} outside [0, 1]", self.flip_prob));
        }
        if self.brightness_min.is_nan() || self.brightness_min <= 0.0 || self.brightness_max < self.brightness_min {
            return bad(format!(
                "brightness range [{}, {}] is invalid",
                self.brightness_min, self.brightness_max
            ));
        }
        if !(0.0..=1.0).contains(&self.min_visible_frac) {
            return bad(format!(
                "min_visible_frac {} outside [0, 1]",
                self.min_visible_frac
            ));
        }
        Ok(())
    }
}

/// One concrete draw of augmentation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledParams {
    pub rotation_deg: f64,
    pub shift_x: f64,
    pub shift_y: f64,
    pub flip: bool,
    pub brightness: f64,
}

impl SampledParams {
    /// The identity transform.
    pub fn identity() -> Self {
        Self {
            rotation_deg: 0.0,
            shift_x: 0.0,
            shift_y: 0.0,
            flip: false,
            brightness: 1.0,
        }
    }
}

/// Draw parameters in a fixed order (rotation, shift x, shift y, flip,
/// brightness) so a seed fully determines the transform.
pub fn sample_params<R: Rng>(config: &AugmentConfig, rng: &mut R) -> SampledParams {
    let r = config.rotation_deg;
    let s = config.shift_frac;
    SampledParams {
        rotation_deg: rng.random_range(-r..=r),
        shift_x: rng.random_range(-s..=s),
        shift_y: rng.random_range(-s..=s),
        flip: rng.random_bool(config.flip_prob),
        brightness: rng.random_range(config.brightness_min..=config.brightness_max),
    }
}

/// Result of one augmentation: transformed pixels, surviving boxes, the
/// parameters used, and a flag set when every input box was dropped.
#[derive(Debug, Clone)]
pub struct AugmentOutput {
    pub image: CanonicalImage,
    pub boxes: Vec<JointDetection>,
    pub params: SampledParams,
    pub all_boxes_dropped: bool,
}

/// Forward map of a content point in continuous pixel coordinates
/// (pixel centers at integers): flip, rotate about center, shift.
fn forward_point(
    px: f64,
    py: f64,
    params: &SampledParams,
    width: u32,
    height: u32,
) -> (f64, f64) {
    let (w, h) = (width as f64, height as f64);
    let (mut x, y) = (px, py);
    if params.flip {
        x = (w - 1.0) - x;
    }
    let theta = params.rotation_deg.to_radians();
    let (cos_t, sin_t) = (theta.cos(), theta.sin());
    let (cx, cy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
    let (dx, dy) = (x - cx, y - cy);
    let rx = cos_t * dx - sin_t * dy + cx;
    let ry = sin_t * dx + cos_t * dy + cy;
    (rx + params.shift_x * w, ry + params.shift_y * h)
}

fn transform_pixels(img: &CanonicalImage, params: &SampledParams) -> CanonicalImage {
    let (w, h) = (img.width as f64, img.height as f64);
    let theta = params.rotation_deg.to_radians();
    let (cos_t, sin_t) = (theta.cos(), theta.sin());
    let (cx, cy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
    let (tx, ty) = (params.shift_x * w, params.shift_y * h);

    let mut out = CanonicalImage::new_fill(img.width, img.height, 0.0);
    out.orientation_applied = img.orientation_applied;
    for y in 0..img.height {
        for x in 0..img.width {
            // Invert shift and rotation, then flip, to find the source.
            let qx = x as f64 - tx - cx;
            let qy = y as f64 - ty - cy;
            let mut sx = cos_t * qx + sin_t * qy + cx;
            let sy = -sin_t * qx + cos_t * qy + cy;
            if params.flip {
                sx = (w - 1.0) - sx;
            }
            let v = bilinear_zero(img, sx, sy) * params.brightness;
            out.set(x, y, (v as f32).clamp(0.0, 1.0));
        }
    }
    out
}

fn bilinear_zero(img: &CanonicalImage, sx: f64, sy: f64) -> f64 {
    let (w, h) = (img.width as i64, img.height as i64);
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
    top * (1.0 - fy) + bot * fy
}

/// Transform one box through the same map as the pixels. Returns `None`
/// when the visible area after clamping falls below the configured
/// fraction of the original area.
pub fn transform_box(
    det: &JointDetection,
    params: &SampledParams,
    width: u32,
    height: u32,
    min_visible_frac: f64,
) -> Option<JointDetection> {
    let (w, h) = (width as f64, height as f64);
    // Pure horizontal flip stays exact in normalized coordinates.
    if params.rotation_deg == 0.0 && params.shift_x == 0.0 && params.shift_y == 0.0 {
        let bbox = if params.flip {
            BoundingBox::new(1.0 - det.bbox.cx, det.bbox.cy, det.bbox.w, det.bbox.h).ok()?
        } else {
            det.bbox
        };
        let mut out = det.clone();
        out.bbox = bbox;
        if params.flip {
            out.side = out.side.flipped();
        }
        return Some(out);
    }

    let (x0, y0, x1, y1) = det.bbox.corners();
    let corners = [(x0, y0), (x1, y0), (x0, y1), (x1, y1)];
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for (u, v) in corners {
        let (px, py) = (u * w - 0.5, v * h - 0.5);
        let (tx, ty) = forward_point(px, py, params, width, height);
        let (nu, nv) = ((tx + 0.5) / w, (ty + 0.5) / h);
        min_x = min_x.min(nu);
        max_x = max_x.max(nu);
        min_y = min_y.min(nv);
        max_y = max_y.max(nv);
    }
    let original_area = det.bbox.area();
    let (cx0, cx1) = (min_x.clamp(0.0, 1.0), max_x.clamp(0.0, 1.0));
    let (cy0, cy1) = (min_y.clamp(0.0, 1.0), max_y.clamp(0.0, 1.0));
    let visible = (cx1 - cx0).max(0.0) * (cy1 - cy0).max(0.0);
    if visible < min_visible_frac * original_area {
        return None;
    }
    let bbox = BoundingBox::from_corners(cx0, cy0, cx1, cy1).ok()?;
    let mut out = det.clone();
    out.bbox = bbox;
    if params.flip {
        out.side = out.side.flipped();
    }
    Some(out)
}

/// Apply a fixed parameter draw to an image and its boxes.
pub fn apply_params(
    img: &CanonicalImage,
    boxes: &[JointDetection],
    params: &SampledParams,
    config: &AugmentConfig,
) -> AugmentOutput {
    let image = transform_pixels(img, params);
    let out_boxes: Vec<JointDetection> = boxes
        .iter()
        .filter_map(|b| transform_box(b, params, img.width, img.height, config.min_visible_frac))
        .collect();
    let all_boxes_dropped = !boxes.is_empty() && out_boxes.is_empty();
    AugmentOutput {
        image,
        boxes: out_boxes,
        params: *params,
        all_boxes_dropped,
    }
}

/// Sample a transform from the seed and apply it.
pub fn augment(
    img: &CanonicalImage,
    boxes: &[JointDetection],
    seed: u64,
    config: &AugmentConfig,
) -> AugmentOutput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = sample_params(config, &mut rng);
    apply_params(img, boxes, &params, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HandSide, JointClass};

    fn test_image() -> CanonicalImage {
        let mut img = CanonicalImage::new_fill(60, 40, 0.0);
        for y in 0..40 {
            for x in 0..60 {
                img.set(x, y, ((3 * x + 7 * y) % 61) as f32 / 61.0);
            }
        }
        img
    }

    fn det(cx: f64, cy: f64, w: f64, h: f64) -> JointDetection {
        JointDetection::ground_truth(
            "img",
            JointClass::Mcp1,
            HandSide::Left,
            BoundingBox::new(cx, cy, w, h).unwrap(),
        )
    }

    #[test]
    fn augment_is_deterministic_for_a_seed() {
        let img = test_image();
        let boxes = vec![det(0.5, 0.5, 0.2, 0.3), det(0.3, 0.6, 0.1, 0.1)];
        let cfg = AugmentConfig::default();
        let a = augment(&img, &boxes, 99, &cfg);
        let b = augment(&img, &boxes, 99, &cfg);
        assert_eq!(a.image.pixels, b.image.pixels);
        assert_eq!(a.boxes, b.boxes);
        assert_eq!(a.params, b.params);
        let c = augment(&img, &boxes, 100, &cfg);
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn forced_flip_mirrors_box_and_side() {
        let img = test_image();
        let boxes = vec![det(0.3, 0.6, 0.2, 0.1)];
        let params = SampledParams {
            flip: true,
            ..SampledParams::identity()
        };
        let out = apply_params(&img, &boxes, &params, &AugmentConfig::default());
        assert_eq!(out.boxes[0].bbox.cx, 1.0 - 0.3);
        assert_eq!(out.boxes[0].bbox.cy, 0.6);
        assert_eq!(out.boxes[0].bbox.w, 0.2);
        assert_eq!(out.boxes[0].side, HandSide::Right);
        // Pixels mirrored exactly.
        for y in 0..img.height {
            for x in 0..img.width {
                assert_eq!(out.image.get(x, y), img.get(img.width - 1 - x, y));
            }
        }
    }

    #[test]
    fn forced_rotation_matches_corner_map_oracle() {
        let img = test_image();
        let boxes = vec![det(0.5, 0.5, 0.2, 0.3)];
        let params = SampledParams {
            rotation_deg: 10.0,
            ..SampledParams::identity()
        };
        let out = apply_params(&img, &boxes, &params, &AugmentConfig::default());
        assert_eq!(out.boxes.len(), 1);

        // Oracle: explicit 2-D rotation of the four corners.
        let (w, h) = (img.width as f64, img.height as f64);
        let theta = 10.0f64.to_radians();
        let (cx, cy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
        let (bx0, by0, bx1, by1) = boxes[0].bbox.corners();
        let mut min_x: f64 = f64::INFINITY;
        let mut max_x: f64 = f64::NEG_INFINITY;
        let mut min_y: f64 = f64::INFINITY;
        let mut max_y: f64 = f64::NEG_INFINITY;
        for (u, v) in [(bx0, by0), (bx1, by0), (bx0, by1), (bx1, by1)] {
            let (px, py) = (u * w - 0.5, v * h - 0.5);
            let (dx, dy) = (px - cx, py - cy);
            let rx = theta.cos() * dx - theta.sin() * dy + cx;
            let ry = theta.sin() * dx + theta.cos() * dy + cy;
            let (nu, nv) = ((rx + 0.5) / w, (ry + 0.5) / h);
            min_x = min_x.min(nu);
            max_x = max_x.max(nu);
            min_y = min_y.min(nv);
            max_y = max_y.max(nv);
        }
        let got = out.boxes[0].bbox;
        assert!((got.cx - (min_x + max_x) / 2.0).abs() < 1e-6);
        assert!((got.cy - (min_y + max_y) / 2.0).abs() < 1e-6);
        assert!((got.w - (max_x - min_x)).abs() < 1e-6);
        assert!((got.h - (max_y - min_y)).abs() < 1e-6);
        // Center box stays centered under pure rotation.
        assert!((got.cx - 0.5).abs() < 1e-9);
        assert!((got.cy - 0.5).abs() < 1e-9);
    }

    #[test]
    fn sampled_params_stay_in_ranges() {
        use rand::SeedableRng;
        let cfg = AugmentConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..2000 {
            let p = sample_params(&cfg, &mut rng);
            assert!((-10.0..=10.0).contains(&p.rotation_deg));
            assert!((-0.2..=0.2).contains(&p.shift_x));
            assert!((-0.2..=0.2).contains(&p.shift_y));
            assert!((0.7..=1.2).contains(&p.brightness));
        }
    }

    #[test]
    fn brightness_never_leaves_unit_range() {
        let img = test_image();
        for seed in 0..20 {
            let out = augment(&img, &[], seed, &AugmentConfig::default());
            for &v in &out.image.pixels {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn boxes_shifted_out_are_dropped() {
        let img = test_image();
        let boxes = vec![det(0.05, 0.05, 0.08, 0.08)];
        let params = SampledParams {
            shift_x: -0.2,
            shift_y: -0.2,
            ..SampledParams::identity()
        };
        let out = apply_params(&img, &boxes, &params, &AugmentConfig::default());
        assert!(out.boxes.is_empty());
        assert!(out.all_boxes_dropped);
    }

    #[test]
    fn geometric_consistency_box_vs_recomputed_corners() {
        use rand::SeedableRng;
        let img = test_image();
        let cfg = AugmentConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let params = sample_params(&cfg, &mut rng);
            let b = det(0.5, 0.5, 0.3, 0.3);
            if let Some(out) = transform_box(&b, &params, img.width, img.height, cfg.min_visible_frac) {
                // Recompute from corners through the same forward map.
                let redo = transform_box(&b, &params, img.width, img.height, 0.0).unwrap();
                let iou = crate::detect_eval::iou_box(&out.bbox, &redo.bbox);
                assert!(iou >= 0.99, "iou {iou}");
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = AugmentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.flip_prob = 1.5;
        assert!(cfg.validate().is_err());
        cfg = AugmentConfig {
            brightness_min: 0.0,
            ..AugmentConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
