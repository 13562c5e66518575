//! Benchmark support: synthetic inputs shared by the criterion benches.

use artss_core::imgproc::CanonicalImage;
use artss_core::model::{BoundingBox, HandSide, ImageRecord, JointClass, JointDetection};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Noisy two-level image with a centered bright blob, as the mask pipeline
/// input.
pub fn blob_record(seed: u64, size: u32) -> ImageRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = (size as f64 - 1.0) / 2.0;
    let r2 = (size as f64 * 0.3).powi(2);
    let pixels: Vec<u8> = (0..size * size)
        .map(|i| {
            let (x, y) = ((i % size) as f64, (i / size) as f64);
            let inside = (x - c).powi(2) + (y - c).powi(2) <= r2;
            let base: f64 = if inside { 205.0 } else { 40.0 };
            (base + rng.random_range(-12.0..12.0)).clamp(0.0, 255.0) as u8
        })
        .collect();
    ImageRecord::new(format!("bench{seed}"), pixels, size, size).unwrap()
}

pub fn noisy_canonical(seed: u64, size: u32) -> CanonicalImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CanonicalImage::from_pixels(
        size,
        size,
        (0..size * size).map(|_| rng.random_range(0.0..1.0)).collect(),
    )
}

/// A single-class detection benchmark set: `n_images` images with `per_image`
/// ground truths each, and 2x as many predictions.
pub fn detection_set(
    seed: u64,
    n_images: usize,
    per_image: usize,
) -> (Vec<JointDetection>, Vec<JointDetection>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gts = Vec::new();
    let mut preds = Vec::new();
    for img in 0..n_images {
        let image_id = format!("img{img}");
        for _ in 0..per_image {
            let bbox = BoundingBox::new(
                rng.random_range(0.2..0.8),
                rng.random_range(0.2..0.8),
                rng.random_range(0.05..0.2),
                rng.random_range(0.05..0.2),
            )
            .unwrap();
            gts.push(JointDetection::ground_truth(
                &image_id,
                JointClass::Pi,
                HandSide::Left,
                bbox,
            ));
            // One near-hit and one distractor per ground truth.
            let mut near = bbox;
            near.cx = (near.cx + rng.random_range(-0.02..0.02)).clamp(0.0, 1.0);
            preds.push(JointDetection::prediction(
                &image_id,
                JointClass::Pi,
                HandSide::Left,
                near,
                rng.random_range(0.5..1.0),
            ));
            preds.push(JointDetection::prediction(
                &image_id,
                JointClass::Pi,
                HandSide::Left,
                BoundingBox::new(
                    rng.random_range(0.2..0.8),
                    rng.random_range(0.2..0.8),
                    rng.random_range(0.05..0.2),
                    rng.random_range(0.05..0.2),
                )
                .unwrap(),
                rng.random_range(0.0..0.5),
            ));
        }
    }
    (preds, gts)
}
