//! artss-core — deterministic core of a radiographic total-Sharp-score
//! pipeline for rheumatoid arthritis hand X-rays.
//!
//! The crate covers everything around the neural models, which stay
//! external and exchange plain files:
//!
//! 1. **model** – domain types: images, joints, boxes, scores, splits.
//! 2. **imgproc** – resize, normalization, orientation, reorientation.
//! 3. **maskgen** – classical four-step hand-mask generation.
//! 4. **annot_io** – annotation/prediction/score/manifest file formats.
//! 5. **augment** – seeded augmentation with box-consistent transforms.
//! 6. **seqbuild** – fixed-length masked joint-crop sequences.
//! 7. **detect_eval** – IoU, matching, AP/mAP, accuracy, confusion.
//! 8. **regress_eval** – MAE, RMSE, Huber, fold tables.
//! 9. **baseline** – ridge-regression reference TSS predictor.

pub mod annot_io;
pub mod augment;
pub mod baseline;
pub mod detect_eval;
pub mod fsutil;
pub mod imageio;
pub mod imgproc;
pub mod maskgen;
pub mod model;
pub mod regress_eval;
pub mod seqbuild;

pub use imgproc::{CanonicalImage, Interp};
pub use maskgen::{BinaryMask, MaskParams};
pub use model::{
    average_readers, make_paper_splits, BoundingBox, DatasetSplit, FoldId, Gender, HandSide,
    ImageRecord, JointClass, JointDetection, PaperSplits, SharpScore, Side, TSS_MAX,
};
pub use seqbuild::{JointSequence, PoolMode};
