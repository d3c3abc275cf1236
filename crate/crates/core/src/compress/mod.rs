//! Noise-aware compression: parameters close to a compression level on
//! noisy gates are pulled onto that level with ADMM, shortening the
//! physical circuit where it matters most, then the rest are fine-tuned
//! under noise.

mod admm;
mod levels;

pub use admm::{
    admm_compress, finetune, mask_step, CompressConfig, CompressResult, CompressedModel,
    CompressedModelJson, CompressionState,
};
pub use levels::{
    compressed_cost, make_mask, nearest_level, priority_table, project_z, CompressionTable,
    PriorityMode, ThresholdPolicy,
};
