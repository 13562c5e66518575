//! Fixed-length, masked joint-crop sequences. Each sequence has one slot
//! per canonical (class, side) position — left hand PI..WRIST, then right —
//! so missing joints become zero crops with a zero validity bit and every
//! class always lands at the same index.
//!
//! # Container byte layout
//!
//! Sequences serialize to a flat little-endian container for cross-language
//! use:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "ARSQ"
//! 4       2     format version, u16 = 1
//! 6       2     reserved, 0
//! 8       4     sequence count, u32
//! 12      4     slots per sequence (l_max), u32
//! 16      4     crop width, u32
//! 20      4     crop height, u32
//! ```
//!
//! then per sequence: id length (u16), UTF-8 id bytes, `l_max * w * h`
//! crop values (f32, slot-major then row-major), `l_max` validity bytes.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fsutil::atomic_write;
use crate::imgproc::{CanonicalImage, Interp};
use crate::model::{HandSide, JointClass, JointDetection};

/// Slots in the full two-hand taxonomy.
pub const FULL_TAXONOMY_SLOTS: usize = 2 * JointClass::COUNT;

/// Default crop resolution.
pub const DEFAULT_CROP_SIZE: u32 = 64;

const MAGIC: &[u8; 4] = b"ARSQ";
const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum SeqError {
    #[error("empty dataset: no images to scan for sequence length")]
    EmptyDataset,
    #[error("sequence length must be at least 1")]
    ZeroLength,
    #[error("duplicate joint slots: {0:?}")]
    DuplicateSlots(Vec<String>),
    #[error("joint {class} {side:?} needs slot {slot}, but sequence length is {l_max}")]
    SlotBeyondLength {
        class: JointClass,
        side: HandSide,
        slot: usize,
        l_max: usize,
    },
    #[error("no valid slots to pool")]
    NoValidSlots,
    #[error("sequences disagree on geometry; all must share slots and crop size")]
    MixedGeometry,
    #[error("container: {0}")]
    Container(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Canonical slot of a (class, side) pair: left hand occupies 0..11,
/// right hand 11..22, in frozen class order.
pub fn canonical_index(class: JointClass, side: HandSide) -> usize {
    match side {
        HandSide::Left => class.index(),
        HandSide::Right => JointClass::COUNT + class.index(),
    }
}

/// Inverse of [`canonical_index`].
pub fn slot_identity(slot: usize) -> Option<(JointClass, HandSide)> {
    if slot < JointClass::COUNT {
        Some((JointClass::from_index(slot)?, HandSide::Left))
    } else if slot < FULL_TAXONOMY_SLOTS {
        Some((
            JointClass::from_index(slot - JointClass::COUNT)?,
            HandSide::Right,
        ))
    } else {
        None
    }
}

/// Maximum visible-joint count across the dataset; the padding length all
/// sequences align to. With the full taxonomy present this is 22.
pub fn max_sequence_length<I>(joint_counts: I) -> Result<usize, SeqError>
where
    I: IntoIterator<Item = usize>,
{
    joint_counts.into_iter().max().ok_or(SeqError::EmptyDataset)
}

/// A fixed-length padded sequence of joint crops plus its validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSequence {
    pub image_id: String,
    pub crop_width: u32,
    pub crop_height: u32,
    crops: Vec<Vec<f32>>,
    validity: Vec<u8>,
}

impl JointSequence {
    pub fn l_max(&self) -> usize {
        self.crops.len()
    }

    pub fn crops(&self) -> &[Vec<f32>] {
        &self.crops
    }

    pub fn validity(&self) -> &[u8] {
        &self.validity
    }

    pub fn valid_count(&self) -> usize {
        self.validity.iter().filter(|&&v| v != 0).count()
    }

    /// Assemble a sequence from raw parts; lengths must agree and validity
    /// must be strictly binary.
    pub fn from_parts(
        image_id: impl Into<String>,
        crop_width: u32,
        crop_height: u32,
        crops: Vec<Vec<f32>>,
        validity: Vec<u8>,
    ) -> Result<Self, SeqError> {
        if crops.len() != validity.len() {
            return Err(SeqError::Container(format!(
                "crops ({}) and validity ({}) lengths differ",
                crops.len(),
                validity.len()
            )));
        }
        let expected = crop_width as usize * crop_height as usize;
        if crops.iter().any(|c| c.len() != expected) {
            return Err(SeqError::Container(format!(
                "crop pixel count must be {expected}"
            )));
        }
        if validity.iter().any(|&v| v > 1) {
            return Err(SeqError::Container("validity bytes must be 0 or 1".into()));
        }
        Ok(Self {
            image_id: image_id.into(),
            crop_width,
            crop_height,
            crops,
            validity,
        })
    }
}

/// Extract the axis-aligned subregion of `img` under a normalized box,
/// resampled to the crop resolution with clamp-to-edge bilinear sampling.
fn extract_crop(
    img: &CanonicalImage,
    det: &JointDetection,
    crop_w: u32,
    crop_h: u32,
    interp: Interp,
) -> Vec<f32> {
    let (x0, y0, x1, y1) = det.bbox.corners();
    // Clamp to the image frame before sampling.
    let (x0, x1) = (x0.clamp(0.0, 1.0), x1.clamp(0.0, 1.0));
    let (y0, y1) = (y0.clamp(0.0, 1.0), y1.clamp(0.0, 1.0));
    let region_w = (x1 - x0) * img.width as f64;
    let region_h = (y1 - y0) * img.height as f64;
    let base_x = x0 * img.width as f64 - 0.5;
    let base_y = y0 * img.height as f64 - 0.5;

    let mut crop = vec![0.0f32; crop_w as usize * crop_h as usize];
    for y in 0..crop_h {
        let sy = base_y + (y as f64 + 0.5) * region_h / crop_h as f64;
        for x in 0..crop_w {
            let sx = base_x + (x as f64 + 0.5) * region_w / crop_w as f64;
            let v = match interp {
                Interp::Bilinear => sample_clamped(img, sx, sy),
                Interp::Nearest => {
                    let xi = sx.round().clamp(0.0, img.width as f64 - 1.0) as u32;
                    let yi = sy.round().clamp(0.0, img.height as f64 - 1.0) as u32;
                    img.get(xi, yi)
                }
            };
            crop[y as usize * crop_w as usize + x as usize] = v.clamp(0.0, 1.0);
        }
    }
    crop
}

fn sample_clamped(img: &CanonicalImage, sx: f64, sy: f64) -> f32 {
    let w = img.width as i64;
    let h = img.height as i64;
    let x0 = sx.floor();
    let y0 = sy.floor();
    let fx = sx - x0;
    let fy = sy - y0;
    let cl = |v: i64, hi: i64| v.clamp(0, hi - 1) as u32;
    let (x0i, x1i) = (cl(x0 as i64, w), cl(x0 as i64 + 1, w));
    let (y0i, y1i) = (cl(y0 as i64, h), cl(y0 as i64 + 1, h));
    let top = img.get(x0i, y0i) as f64 * (1.0 - fx) + img.get(x1i, y0i) as f64 * fx;
    let bot = img.get(x0i, y1i) as f64 * (1.0 - fx) + img.get(x1i, y1i) as f64 * fx;
    (top * (1.0 - fy) + bot * fy) as f32
}

/// Build the padded sequence for one image: each detection's crop lands at
/// its canonical slot, every other slot is an all-zero crop with validity 0.
pub fn build_sequence(
    img: &CanonicalImage,
    detections: &[JointDetection],
    l_max: usize,
    crop_w: u32,
    crop_h: u32,
) -> Result<JointSequence, SeqError> {
    if l_max == 0 {
        return Err(SeqError::ZeroLength);
    }
    let mut seen: Vec<Option<&JointDetection>> = vec![None; l_max];
    let mut duplicates = Vec::new();
    for det in detections {
        let slot = canonical_index(det.class, det.side);
        if slot >= l_max {
            return Err(SeqError::SlotBeyondLength {
                class: det.class,
                side: det.side,
                slot,
                l_max,
            });
        }
        if seen[slot].is_some() {
            duplicates.push(format!("{} {:?}", det.class, det.side));
        } else {
            seen[slot] = Some(det);
        }
    }
    if !duplicates.is_empty() {
        duplicates.sort();
        duplicates.dedup();
        return Err(SeqError::DuplicateSlots(duplicates));
    }

    let empty = vec![0.0f32; crop_w as usize * crop_h as usize];
    let mut crops = Vec::with_capacity(l_max);
    let mut validity = Vec::with_capacity(l_max);
    for slot in seen {
        match slot {
            Some(det) => {
                crops.push(extract_crop(img, det, crop_w, crop_h, Interp::Bilinear));
                validity.push(1u8);
            }
            None => {
                crops.push(empty.clone());
                validity.push(0u8);
            }
        }
    }
    let image_id = detections
        .first()
        .map(|d| d.image_id.clone())
        .unwrap_or_default();
    JointSequence::from_parts(image_id, crop_w, crop_h, crops, validity)
}

/// Pooling mode over valid slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolMode {
    Mean,
    Max,
}

/// Elementwise pooling over valid slots only; padded slots provably do not
/// contribute. Accumulates in f64.
pub fn masked_pool(seq: &JointSequence, mode: PoolMode) -> Result<Vec<f64>, SeqError> {
    masked_pool_parts(&seq.crops, &seq.validity, mode)
}

/// Pooling over raw (crops, validity) parts; shared by [`masked_pool`] and
/// callers that assemble sequences manually.
pub fn masked_pool_parts(
    crops: &[Vec<f32>],
    validity: &[u8],
    mode: PoolMode,
) -> Result<Vec<f64>, SeqError> {
    let valid: Vec<&Vec<f32>> = crops
        .iter()
        .zip(validity)
        .filter(|(_, &v)| v != 0)
        .map(|(c, _)| c)
        .collect();
    let Some(first) = valid.first() else {
        return Err(SeqError::NoValidSlots);
    };
    let dim = first.len();
    let mut out = vec![
        match mode {
            PoolMode::Mean => 0.0f64,
            PoolMode::Max => f64::NEG_INFINITY,
        };
        dim
    ];
    for crop in &valid {
        for (o, &v) in out.iter_mut().zip(crop.iter()) {
            match mode {
                PoolMode::Mean => *o += v as f64,
                PoolMode::Max => *o = o.max(v as f64),
            }
        }
    }
    if mode == PoolMode::Mean {
        let n = valid.len() as f64;
        for o in &mut out {
            *o /= n;
        }
    }
    Ok(out)
}

/// Write sequences to the flat binary container. All sequences must share
/// slot count and crop geometry.
pub fn write_sequences(seqs: &[JointSequence], path: &Path) -> Result<(), SeqError> {
    let Some(first) = seqs.first() else {
        return Err(SeqError::EmptyDataset);
    };
    if seqs.iter().any(|s| {
        s.l_max() != first.l_max()
            || s.crop_width != first.crop_width
            || s.crop_height != first.crop_height
    }) {
        return Err(SeqError::MixedGeometry);
    }

    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&0u16.to_le_bytes());
    buf.extend_from_slice(&(seqs.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(first.l_max() as u32).to_le_bytes());
    buf.extend_from_slice(&first.crop_width.to_le_bytes());
    buf.extend_from_slice(&first.crop_height.to_le_bytes());
    for seq in seqs {
        let id_bytes = seq.image_id.as_bytes();
        if id_bytes.len() > u16::MAX as usize {
            return Err(SeqError::Container("image id longer than 65535 bytes".into()));
        }
        buf.extend_from_slice(&(id_bytes.len() as u16).to_le_bytes());
        buf.extend_from_slice(id_bytes);
        for crop in &seq.crops {
            for v in crop {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        buf.extend_from_slice(&seq.validity);
    }
    atomic_write(path, &buf).map_err(|source| SeqError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read a sequence container written by [`write_sequences`].
pub fn read_sequences(path: &Path) -> Result<Vec<JointSequence>, SeqError> {
    let bytes = std::fs::read(path).map_err(|source| SeqError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_sequences(&bytes)
}

/// Parse the container from memory; all offsets are bounds-checked so
/// malformed input yields an error, never a panic or oversized allocation.
pub fn parse_sequences(bytes: &[u8]) -> Result<Vec<JointSequence>, SeqError> {
    let err = |msg: &str| SeqError::Container(msg.to_string());
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8], SeqError> {
        let end = pos.checked_add(n).ok_or_else(|| err("offset overflow"))?;
        if end > bytes.len() {
            return Err(err("truncated container"));
        }
        let slice = &bytes[*pos..end];
        *pos = end;
        Ok(slice)
    };

    if take(&mut pos, 4)? != MAGIC {
        return Err(err("bad magic; not a sequence container"));
    }
    let version = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(err(&format!("unsupported container version {version}")));
    }
    take(&mut pos, 2)?; // reserved
    let count = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    let l_max = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    let crop_w = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    let crop_h = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    let crop_len = (crop_w as usize)
        .checked_mul(crop_h as usize)
        .ok_or_else(|| err("crop size overflow"))?;
    let seq_bytes = l_max
        .checked_mul(crop_len)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(l_max))
        .ok_or_else(|| err("sequence size overflow"))?;
    if count.checked_mul(seq_bytes).map(|n| n > bytes.len()).unwrap_or(true) {
        return Err(err("container shorter than header claims"));
    }

    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let id_len = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap()) as usize;
        let id = std::str::from_utf8(take(&mut pos, id_len)?)
            .map_err(|_| err("image id is not UTF-8"))?
            .to_string();
        let mut crops = Vec::with_capacity(l_max);
        for _ in 0..l_max {
            let raw = take(&mut pos, crop_len * 4)?;
            let crop: Vec<f32> = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            crops.push(crop);
        }
        let validity = take(&mut pos, l_max)?.to_vec();
        out.push(JointSequence::from_parts(id, crop_w, crop_h, crops, validity)?);
    }
    if pos != bytes.len() {
        return Err(err("trailing bytes after last sequence"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BoundingBox;

    fn det(class: JointClass, side: HandSide, cx: f64, cy: f64) -> JointDetection {
        JointDetection::ground_truth(
            "img",
            class,
            side,
            BoundingBox::new(cx, cy, 0.1, 0.1).unwrap(),
        )
    }

    fn full_taxonomy() -> Vec<JointDetection> {
        let mut dets = Vec::new();
        for side in [HandSide::Left, HandSide::Right] {
            for (i, class) in JointClass::ALL.iter().enumerate() {
                let cx = 0.1 + 0.07 * i as f64;
                let cy = if side == HandSide::Left { 0.3 } else { 0.7 };
                dets.push(det(*class, side, cx, cy));
            }
        }
        dets
    }

    fn test_image() -> CanonicalImage {
        let mut img = CanonicalImage::new_fill(100, 100, 0.0);
        for y in 0..100 {
            for x in 0..100 {
                img.set(x, y, ((x + y) % 97) as f32 / 97.0);
            }
        }
        img
    }

    #[test]
    fn canonical_layout_is_stable() {
        assert_eq!(canonical_index(JointClass::Pi, HandSide::Left), 0);
        assert_eq!(canonical_index(JointClass::Wrist, HandSide::Left), 10);
        assert_eq!(canonical_index(JointClass::Pi, HandSide::Right), 11);
        assert_eq!(canonical_index(JointClass::Wrist, HandSide::Right), 21);
        for slot in 0..FULL_TAXONOMY_SLOTS {
            let (class, side) = slot_identity(slot).unwrap();
            assert_eq!(canonical_index(class, side), slot);
        }
        assert_eq!(slot_identity(22), None);
    }

    #[test]
    fn max_length_cases() {
        assert_eq!(max_sequence_length([22, 22, 22]).unwrap(), 22);
        assert_eq!(max_sequence_length([22, 18, 9]).unwrap(), 22);
        assert_eq!(max_sequence_length([0]).unwrap(), 0);
        assert!(matches!(
            max_sequence_length(std::iter::empty()),
            Err(SeqError::EmptyDataset)
        ));
    }

    #[test]
    fn full_sequence_has_all_ones_mask() {
        let img = test_image();
        let seq = build_sequence(&img, &full_taxonomy(), FULL_TAXONOMY_SLOTS, 16, 16).unwrap();
        assert_eq!(seq.valid_count(), 22);
        assert!(seq.validity().iter().all(|&v| v == 1));
    }

    #[test]
    fn missing_joints_zero_their_canonical_slots() {
        let img = test_image();
        let mut dets = full_taxonomy();
        // Drop four joints, as with a deformed hand.
        let dropped = [
            canonical_index(JointClass::Pip2, HandSide::Left),
            canonical_index(JointClass::Mcp3, HandSide::Left),
            canonical_index(JointClass::Pi, HandSide::Right),
            canonical_index(JointClass::Wrist, HandSide::Right),
        ];
        dets.retain(|d| !dropped.contains(&canonical_index(d.class, d.side)));
        let seq = build_sequence(&img, &dets, FULL_TAXONOMY_SLOTS, 16, 16).unwrap();
        assert_eq!(seq.valid_count(), 18);
        for slot in dropped {
            assert_eq!(seq.validity()[slot], 0);
            assert!(seq.crops()[slot].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn duplicate_slots_are_rejected_with_names() {
        let img = test_image();
        let dets = vec![
            det(JointClass::Mcp1, HandSide::Left, 0.3, 0.3),
            det(JointClass::Mcp1, HandSide::Left, 0.6, 0.6),
        ];
        let err = build_sequence(&img, &dets, FULL_TAXONOMY_SLOTS, 8, 8).unwrap_err();
        assert!(err.to_string().contains("MCP_1"), "{err}");
    }

    #[test]
    fn zero_length_is_a_protocol_error() {
        let img = test_image();
        assert!(matches!(
            build_sequence(&img, &[], 0, 8, 8),
            Err(SeqError::ZeroLength)
        ));
    }

    #[test]
    fn slot_beyond_length_is_rejected() {
        let img = test_image();
        let dets = vec![det(JointClass::Wrist, HandSide::Right, 0.5, 0.5)];
        let err = build_sequence(&img, &dets, 12, 8, 8).unwrap_err();
        assert!(matches!(err, SeqError::SlotBeyondLength { slot: 21, .. }));
    }

    #[test]
    fn masked_pool_singleton_and_mean() {
        let crops = vec![vec![0.25f32; 4], vec![0.75f32; 4]];
        let one = masked_pool_parts(&crops[..1], &[1], PoolMode::Mean).unwrap();
        assert!(one.iter().all(|&v| v == 0.25));
        let both = masked_pool_parts(&crops, &[1, 1], PoolMode::Mean).unwrap();
        assert!(both.iter().all(|&v| (v - 0.5).abs() < 1e-12));
        let twice = masked_pool_parts(&vec![vec![0.3f32; 4]; 2], &[1, 1], PoolMode::Mean).unwrap();
        assert!(twice.iter().all(|&v| (v - 0.3f32 as f64).abs() < 1e-12));
    }

    #[test]
    fn masked_pool_ignores_padded_junk() {
        // Valid features {1.0, 3.0} scaled into range, junk in masked slots.
        let crops = vec![
            vec![0.1f32, 0.1],
            vec![0.9f32, 0.7], // junk, masked out
            vec![0.3f32, 0.5],
        ];
        let mean = masked_pool_parts(&crops, &[1, 0, 1], PoolMode::Mean).unwrap();
        assert!((mean[0] - 0.2).abs() < 1e-7);
        assert!((mean[1] - 0.3).abs() < 1e-7);
        let max = masked_pool_parts(&crops, &[1, 0, 1], PoolMode::Max).unwrap();
        assert!((max[0] - 0.3f32 as f64).abs() < 1e-12);
        assert!((max[1] - 0.5f32 as f64).abs() < 1e-12);
    }

    #[test]
    fn masked_pool_padding_invariance() {
        let img = test_image();
        let dets = vec![
            det(JointClass::Pi, HandSide::Left, 0.2, 0.2),
            det(JointClass::Mcp2, HandSide::Left, 0.6, 0.4),
        ];
        let short = build_sequence(&img, &dets, FULL_TAXONOMY_SLOTS, 8, 8).unwrap();
        let long = build_sequence(&img, &dets, FULL_TAXONOMY_SLOTS + 30, 8, 8).unwrap();
        let a = masked_pool(&short, PoolMode::Mean).unwrap();
        let b = masked_pool(&long, PoolMode::Mean).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn masked_pool_requires_a_valid_slot() {
        assert!(matches!(
            masked_pool_parts(&[vec![0.0f32; 4]], &[0], PoolMode::Mean),
            Err(SeqError::NoValidSlots)
        ));
    }

    #[test]
    fn mask_sum_equals_detection_count() {
        let img = test_image();
        for n in [1usize, 5, 13, 22] {
            let dets: Vec<JointDetection> = full_taxonomy().into_iter().take(n).collect();
            let seq = build_sequence(&img, &dets, FULL_TAXONOMY_SLOTS, 8, 8).unwrap();
            assert_eq!(seq.valid_count(), n);
        }
    }

    #[test]
    fn container_roundtrip() {
        let img = test_image();
        let seqs = vec![
            build_sequence(&img, &full_taxonomy(), FULL_TAXONOMY_SLOTS, 8, 8).unwrap(),
            build_sequence(
                &img,
                &full_taxonomy()[..7],
                FULL_TAXONOMY_SLOTS,
                8,
                8,
            )
            .unwrap(),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seqs.bin");
        write_sequences(&seqs, &path).unwrap();
        let back = read_sequences(&path).unwrap();
        assert_eq!(back, seqs);
    }

    #[test]
    fn container_rejects_garbage() {
        assert!(parse_sequences(b"").is_err());
        assert!(parse_sequences(b"NOPE").is_err());
        assert!(parse_sequences(b"ARSQ\x01\x00\x00\x00\xff\xff\xff\xff").is_err());
        // Header claims more sequences than the file could hold.
        let mut buf = Vec::new();
        buf.extend_from_slice(b"ARSQ");
        buf.extend_from_slice(&1u16.to_le_bytes());
        buf.extend_from_slice(&0u16.to_le_bytes());
        buf.extend_from_slice(&1000u32.to_le_bytes());
        buf.extend_from_slice(&22u32.to_le_bytes());
        buf.extend_from_slice(&64u32.to_le_bytes());
        buf.extend_from_slice(&64u32.to_le_bytes());
        assert!(parse_sequences(&buf).is_err());
    }

    #[test]
    fn crop_of_constant_region_is_constant() {
        let img = CanonicalImage::new_fill(50, 50, 0.5);
        let d = det(JointClass::Pi, HandSide::Left, 0.5, 0.5);
        let seq = build_sequence(&img, &[d], FULL_TAXONOMY_SLOTS, 8, 8).unwrap();
        for &v in &seq.crops()[0] {
            assert!((v - 0.5).abs() < 1e-6);
        }
    }
}
