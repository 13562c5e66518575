//! Domain types shared by every stage: images, joints, boxes, scores, and
//! dataset splits.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Validation ceiling for a total Sharp score: 16 scored joints per hand,
/// erosion 0-5 plus narrowing 0-4, two hands.
pub const TSS_MAX: f64 = 288.0;

/// Dataset size the fold protocol is defined for.
pub const PROTOCOL_DATASET_SIZE: usize = 970;
/// Training samples per fold.
pub const PROTOCOL_TRAIN_SIZE: usize = 452;
/// Validation samples per fold.
pub const PROTOCOL_VAL_SIZE: usize = 227;
/// Externally held-out test samples, shared by all folds.
pub const PROTOCOL_TEST_SIZE: usize = 291;
/// Number of cross-validation folds.
pub const PROTOCOL_FOLDS: usize = 3;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{reader} score {value} out of range [0, {}]", TSS_MAX)]
    ReaderOutOfRange { reader: &'static str, value: i64 },
    #[error("tss {value} out of range [0, {}]", TSS_MAX)]
    TssOutOfRange { value: f64 },
    #[error("bounding box field {field} = {value} violates {constraint}")]
    InvalidBox {
        field: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("split protocol expects exactly {expected} unique ids, got {got}")]
    WrongIdCount { expected: usize, got: usize },
    #[error("duplicate id in manifest: {0}")]
    DuplicateId(String),
    #[error("image id must be non-empty")]
    EmptyId,
    #[error("image {id} is {width}x{height}; minimum side is {min}")]
    ImageTooSmall {
        id: String,
        width: u32,
        height: u32,
        min: u32,
    },
}

/// Patient gender as recorded in the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

/// Which hand(s) a radiograph frame contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Both,
}

/// Hand side tag attached to a joint detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HandSide {
    Left,
    Right,
}

impl HandSide {
    /// The mirrored side; a horizontally flipped left hand reads as a right hand.
    pub fn flipped(self) -> Self {
        match self {
            HandSide::Left => HandSide::Right,
            HandSide::Right => HandSide::Left,
        }
    }
}

/// The 11 joint regions annotated per hand.
///
/// The numeric index is frozen: 0 = PI through 10 = WRIST, in the order
/// below. Annotation files use this index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum JointClass {
    Pi,
    Pip1,
    Pip2,
    Pip3,
    Pip4,
    Mcp0,
    Mcp1,
    Mcp2,
    Mcp3,
    Mcp4,
    Wrist,
}

impl JointClass {
    pub const COUNT: usize = 11;

    pub const ALL: [JointClass; Self::COUNT] = [
        JointClass::Pi,
        JointClass::Pip1,
        JointClass::Pip2,
        JointClass::Pip3,
        JointClass::Pip4,
        JointClass::Mcp0,
        JointClass::Mcp1,
        JointClass::Mcp2,
        JointClass::Mcp3,
        JointClass::Mcp4,
        JointClass::Wrist,
    ];

    /// Frozen class index, 0..=10.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            JointClass::Pi => "PI",
            JointClass::Pip1 => "PIP_1",
            JointClass::Pip2 => "PIP_2",
            JointClass::Pip3 => "PIP_3",
            JointClass::Pip4 => "PIP_4",
            JointClass::Mcp0 => "MCP_0",
            JointClass::Mcp1 => "MCP_1",
            JointClass::Mcp2 => "MCP_2",
            JointClass::Mcp3 => "MCP_3",
            JointClass::Mcp4 => "MCP_4",
            JointClass::Wrist => "WRIST",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.name() == name)
    }
}

impl fmt::Display for JointClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One grayscale radiograph plus patient metadata.
#[derive(Debug, Clone)]
pub struct ImageRecord {
    pub id: String,
    /// Row-major 8-bit intensities, `width * height` long.
    pub pixels: Vec<u8>,
    pub width: u32,
    pub height: u32,
    pub age: Option<f32>,
    pub gender: Option<Gender>,
    pub side: Side,
}

impl ImageRecord {
    pub const MIN_SIDE: u32 = 32;

    pub fn new(
        id: impl Into<String>,
        pixels: Vec<u8>,
        width: u32,
        height: u32,
    ) -> Result<Self, ModelError> {
        let id = id.into();
        if id.is_empty() {
            return Err(ModelError::EmptyId);
        }
        if width < Self::MIN_SIDE || height < Self::MIN_SIDE {
            return Err(ModelError::ImageTooSmall {
                id,
                width,
                height,
                min: Self::MIN_SIDE,
            });
        }
        assert_eq!(pixels.len(), width as usize * height as usize);
        Ok(Self {
            id,
            pixels,
            width,
            height,
            age: None,
            gender: None,
            side: Side::Both,
        })
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }
}

/// Normalized center-format box: all fields are fractions of the image side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, ModelError> {
        fn check(
            field: &'static str,
            value: f64,
            lo_open: bool,
        ) -> Result<(), ModelError> {
            let ok = value.is_finite() && value <= 1.0 && if lo_open { value > 0.0 } else { value >= 0.0 };
            if ok {
                Ok(())
            } else {
                Err(ModelError::InvalidBox {
                    field,
                    value,
                    constraint: if lo_open { "(0, 1]" } else { "[0, 1]" },
                })
            }
        }
        check("cx", cx, false)?;
        check("cy", cy, false)?;
        check("w", w, true)?;
        check("h", h, true)?;
        Ok(Self { cx, cy, w, h })
    }

    /// Corner coordinates `(x0, y0, x1, y1)` in the same normalized frame.
    pub fn corners(&self) -> (f64, f64, f64, f64) {
        (
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0,
        )
    }

    /// Box built from corners; returns an error if the result is degenerate.
    pub fn from_corners(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, ModelError> {
        Self::new((x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

/// A ground-truth joint annotation or a detector prediction.
///
/// Ground truth carries no confidence; predictions always do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDetection {
    pub image_id: String,
    pub class: JointClass,
    pub side: HandSide,
    pub bbox: BoundingBox,
    pub confidence: Option<f64>,
}

impl JointDetection {
    pub fn ground_truth(
        image_id: impl Into<String>,
        class: JointClass,
        side: HandSide,
        bbox: BoundingBox,
    ) -> Self {
        Self {
            image_id: image_id.into(),
            class,
            side,
            bbox,
            confidence: None,
        }
    }

    pub fn prediction(
        image_id: impl Into<String>,
        class: JointClass,
        side: HandSide,
        bbox: BoundingBox,
        confidence: f64,
    ) -> Self {
        Self {
            image_id: image_id.into(),
            class,
            side,
            bbox,
            confidence: Some(confidence),
        }
    }
}

/// Per-image total Sharp score with reader provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpScore {
    pub image_id: String,
    pub reader_a: Option<f64>,
    pub reader_b: Option<f64>,
    /// Averaged ground truth, or a model prediction.
    pub tss: f64,
}

impl SharpScore {
    pub fn from_readers(
        image_id: impl Into<String>,
        reader_a: i64,
        reader_b: i64,
    ) -> Result<Self, ModelError> {
        let tss = average_readers(reader_a, reader_b)?;
        Ok(Self {
            image_id: image_id.into(),
            reader_a: Some(reader_a as f64),
            reader_b: Some(reader_b as f64),
            tss,
        })
    }

    pub fn from_tss(image_id: impl Into<String>, tss: f64) -> Result<Self, ModelError> {
        if !tss.is_finite() || !(0.0..=TSS_MAX).contains(&tss) {
            return Err(ModelError::TssOutOfRange { value: tss });
        }
        Ok(Self {
            image_id: image_id.into(),
            reader_a: None,
            reader_b: None,
            tss,
        })
    }
}

/// Average the two readers' integer scores. Exact for the valid range:
/// integer sums up to 576 halve without rounding error.
pub fn average_readers(reader_a: i64, reader_b: i64) -> Result<f64, ModelError> {
    let bound = TSS_MAX as i64;
    if !(0..=bound).contains(&reader_a) {
        return Err(ModelError::ReaderOutOfRange {
            reader: "reader_a",
            value: reader_a,
        });
    }
    if !(0..=bound).contains(&reader_b) {
        return Err(ModelError::ReaderOutOfRange {
            reader: "reader_b",
            value: reader_b,
        });
    }
    Ok((reader_a + reader_b) as f64 / 2.0)
}

/// Fold identity: one of the numbered cross-validation folds or the
/// externally held-out test set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldId {
    Fold(u8),
    ExternalTest,
}

impl Serialize for FoldId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            FoldId::Fold(n) => serializer.serialize_u8(*n),
            FoldId::ExternalTest => serializer.serialize_str("external_test"),
        }
    }
}

impl<'de> Deserialize<'de> for FoldId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u8),
            Tag(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(n) => Ok(FoldId::Fold(n)),
            Raw::Tag(s) if s == "external_test" => Ok(FoldId::ExternalTest),
            Raw::Tag(s) => Err(serde::de::Error::custom(format!("unknown fold tag {s:?}"))),
        }
    }
}

/// One cross-validation split: disjoint train/val/test id lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub fold: FoldId,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl DatasetSplit {
    /// Pairwise disjointness of the three id sets.
    pub fn is_disjoint(&self) -> bool {
        let train: HashSet<&str> = self.train.iter().map(String::as_str).collect();
        let val: HashSet<&str> = self.val.iter().map(String::as_str).collect();
        let test: HashSet<&str> = self.test.iter().map(String::as_str).collect();
        train.is_disjoint(&val) && train.is_disjoint(&test) && val.is_disjoint(&test)
    }
}

/// The full fold protocol output: three folds sharing one external test set.
#[derive(Debug, Clone)]
pub struct PaperSplits {
    pub folds: Vec<DatasetSplit>,
    pub external_test: DatasetSplit,
    /// Validation ids fold 3 borrows from fold 1's validation pool to reach
    /// the stated fold size (the 679 non-test ids do not divide into three
    /// sets of 227). Callers should surface these.
    pub duplicated_val_ids: Vec<String>,
}

/// Build the 3-fold protocol splits: a seeded shuffle, a shared external
/// test set of 291 ids, and per-fold train/val of 452/227.
///
/// 3 x 227 = 681 exceeds the 679 non-test ids, so fold 3's validation set
/// is completed with the first two ids of fold 1's validation pool; those
/// two ids are excluded from fold 3's training set, keeping every split
/// internally disjoint.
pub fn make_paper_splits(ids: &[String], seed: u64) -> Result<PaperSplits, ModelError> {
    let mut seen = HashSet::new();
    for id in ids {
        if id.is_empty() {
            return Err(ModelError::EmptyId);
        }
        if !seen.insert(id.as_str()) {
            return Err(ModelError::DuplicateId(id.clone()));
        }
    }
    if ids.len() != PROTOCOL_DATASET_SIZE {
        return Err(ModelError::WrongIdCount {
            expected: PROTOCOL_DATASET_SIZE,
            got: ids.len(),
        });
    }

    let mut shuffled: Vec<String> = ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);

    let pool_len = PROTOCOL_DATASET_SIZE - PROTOCOL_TEST_SIZE; // 679
    let (pool, test) = shuffled.split_at(pool_len);
    let test: Vec<String> = test.to_vec();

    let short = PROTOCOL_FOLDS * PROTOCOL_VAL_SIZE - pool_len; // 2
    let duplicated_val_ids: Vec<String> = pool[..short].to_vec();

    let mut folds = Vec::with_capacity(PROTOCOL_FOLDS);
    for fold_idx in 0..PROTOCOL_FOLDS {
        let lo = fold_idx * PROTOCOL_VAL_SIZE;
        let hi = ((fold_idx + 1) * PROTOCOL_VAL_SIZE).min(pool_len);
        let mut val: Vec<String> = pool[lo..hi].to_vec();
        if val.len() < PROTOCOL_VAL_SIZE {
            val.extend_from_slice(&duplicated_val_ids);
        }
        let val_set: HashSet<&str> = val.iter().map(String::as_str).collect();
        let train: Vec<String> = pool
            .iter()
            .filter(|id| !val_set.contains(id.as_str()))
            .cloned()
            .collect();
        folds.push(DatasetSplit {
            fold: FoldId::Fold(fold_idx as u8 + 1),
            train,
            val,
            test: test.clone(),
        });
    }

    let external_test = DatasetSplit {
        fold: FoldId::ExternalTest,
        train: Vec::new(),
        val: Vec::new(),
        test,
    };

    Ok(PaperSplits {
        folds,
        external_test,
        duplicated_val_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i:04}")).collect()
    }

    #[test]
    fn average_readers_zero() {
        assert_eq!(average_readers(0, 0).unwrap(), 0.0);
    }

    #[test]
    fn average_readers_identical() {
        assert_eq!(average_readers(10, 10).unwrap(), 10.0);
    }

    #[test]
    fn average_readers_half_point() {
        assert_eq!(average_readers(7, 10).unwrap(), 8.5);
    }

    #[test]
    fn average_readers_symmetric_and_exact() {
        let bound = TSS_MAX as i64;
        for a in (0..=bound).step_by(7) {
            for b in (0..=bound).step_by(13) {
                let ab = average_readers(a, b).unwrap();
                let ba = average_readers(b, a).unwrap();
                assert_eq!(ab, ba);
                // Integer readers always average to a multiple of 0.5.
                assert_eq!((ab * 2.0).fract(), 0.0);
            }
        }
    }

    #[test]
    fn average_readers_rejects_out_of_range() {
        let err = average_readers(-1, 5).unwrap_err();
        assert!(err.to_string().contains("reader_a"));
        let err = average_readers(5, 300).unwrap_err();
        assert!(err.to_string().contains("reader_b"));
    }

    #[test]
    fn sharp_score_average_matches_readers() {
        let s = SharpScore::from_readers("p1", 30, 34).unwrap();
        assert_eq!(s.tss, 32.0);
        assert!(SharpScore::from_tss("p2", 300.0).is_err());
        assert!(SharpScore::from_tss("p2", -0.5).is_err());
    }

    #[test]
    fn bounding_box_validation() {
        assert!(BoundingBox::new(0.5, 0.5, 0.2, 0.1).is_ok());
        assert!(BoundingBox::new(1.5, 0.5, 0.2, 0.1).is_err());
        assert!(BoundingBox::new(0.5, 0.5, 0.0, 0.1).is_err());
        assert!(BoundingBox::new(0.5, 0.5, 0.2, f64::NAN).is_err());
    }

    #[test]
    fn joint_class_index_table_is_frozen() {
        assert_eq!(JointClass::Pi.index(), 0);
        assert_eq!(JointClass::Wrist.index(), 10);
        for (i, class) in JointClass::ALL.iter().enumerate() {
            assert_eq!(class.index(), i);
            assert_eq!(JointClass::from_index(i), Some(*class));
            assert_eq!(JointClass::from_name(class.name()), Some(*class));
        }
        assert_eq!(JointClass::from_index(11), None);
    }

    #[test]
    fn paper_splits_have_stated_sizes() {
        let ids = ids(PROTOCOL_DATASET_SIZE);
        let splits = make_paper_splits(&ids, 42).unwrap();
        assert_eq!(splits.folds.len(), 3);
        for fold in &splits.folds {
            assert_eq!(fold.train.len(), PROTOCOL_TRAIN_SIZE);
            assert_eq!(fold.val.len(), PROTOCOL_VAL_SIZE);
            assert_eq!(fold.test.len(), PROTOCOL_TEST_SIZE);
            assert!(fold.is_disjoint());
        }
        assert_eq!(splits.external_test.test.len(), PROTOCOL_TEST_SIZE);
        assert_eq!(splits.duplicated_val_ids.len(), 2);
    }

    #[test]
    fn paper_splits_shared_test_and_coverage() {
        let ids = ids(PROTOCOL_DATASET_SIZE);
        let splits = make_paper_splits(&ids, 7).unwrap();
        let test0 = &splits.folds[0].test;
        for fold in &splits.folds {
            assert_eq!(&fold.test, test0);
            let mut union: HashSet<&str> = HashSet::new();
            union.extend(fold.train.iter().map(String::as_str));
            union.extend(fold.val.iter().map(String::as_str));
            union.extend(fold.test.iter().map(String::as_str));
            assert_eq!(union.len(), PROTOCOL_DATASET_SIZE);
        }
    }

    #[test]
    fn paper_splits_val_coverage_across_folds() {
        // Every non-test id appears in validation at least once; exactly
        // once except the two duplicated ids.
        let ids = ids(PROTOCOL_DATASET_SIZE);
        let splits = make_paper_splits(&ids, 3).unwrap();
        let mut counts: std::collections::HashMap<&str, usize> = Default::default();
        for fold in &splits.folds {
            for id in &fold.val {
                *counts.entry(id.as_str()).or_default() += 1;
            }
        }
        assert_eq!(counts.len(), PROTOCOL_DATASET_SIZE - PROTOCOL_TEST_SIZE);
        let twice: Vec<&str> = counts
            .iter()
            .filter(|(_, &c)| c == 2)
            .map(|(&id, _)| id)
            .collect();
        assert_eq!(twice.len(), 2);
        for id in &splits.duplicated_val_ids {
            assert!(twice.contains(&id.as_str()));
        }
    }

    #[test]
    fn paper_splits_deterministic() {
        let ids = ids(PROTOCOL_DATASET_SIZE);
        let a = make_paper_splits(&ids, 42).unwrap();
        let b = make_paper_splits(&ids, 42).unwrap();
        for (fa, fb) in a.folds.iter().zip(&b.folds) {
            assert_eq!(fa, fb);
        }
        let c = make_paper_splits(&ids, 43).unwrap();
        assert_ne!(a.folds[0].val, c.folds[0].val);
    }

    #[test]
    fn paper_splits_rejects_wrong_count() {
        let err = make_paper_splits(&ids(969), 0).unwrap_err();
        assert!(err.to_string().contains("970"));
    }

    #[test]
    fn paper_splits_rejects_duplicates() {
        let mut v = ids(PROTOCOL_DATASET_SIZE);
        v[1] = v[0].clone();
        assert!(matches!(
            make_paper_splits(&v, 0),
            Err(ModelError::DuplicateId(_))
        ));
    }

    #[test]
    fn fold_id_serde() {
        let s = serde_json::to_string(&FoldId::Fold(2)).unwrap();
        assert_eq!(s, "2");
        let s = serde_json::to_string(&FoldId::ExternalTest).unwrap();
        assert_eq!(s, "\"external_test\"");
        let f: FoldId = serde_json::from_str("3").unwrap();
        assert_eq!(f, FoldId::Fold(3));
        let f: FoldId = serde_json::from_str("\"external_test\"").unwrap();
        assert_eq!(f, FoldId::ExternalTest);
    }

    #[test]
    fn split_json_shape() {
        let split = DatasetSplit {
            fold: FoldId::Fold(1),
            train: vec!["a".into()],
            val: vec!["b".into()],
            test: vec!["c".into()],
        };
        let json = serde_json::to_string(&split).unwrap();
        assert_eq!(
            json,
            r#"{"fold":1,"train":["a"],"val":["b"],"test":["c"]}"#
        );
        let back: DatasetSplit = serde_json::from_str(&json).unwrap();
        assert_eq!(back, split);
    }
}
