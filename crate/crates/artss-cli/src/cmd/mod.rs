pub mod augment_cmd;
pub mod baseline_cmd;
pub mod dist;
pub mod eval;
pub mod mask;
pub mod preprocess;
pub mod runall;
pub mod seq;
pub mod split;
