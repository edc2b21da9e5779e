//! Serialization and synthetic data.
//!
//! - JSON scene files ([`load_scene`] / [`save_scene`]): lane segments,
//!   topology and the SD map, schema-versioned, with a canonical byte form.
//! - `LGT1` tensors ([`read_tensor`] / [`write_tensor`]): a tiny
//!   little-endian `f32` container for canvases and parameters.
//! - [`synth_scene`] and [`degrade`]: ground truth with known structure and
//!   predictions with controlled errors.

mod scene;
mod synth;
mod tensor;

pub use scene::{
    load_scene, load_scene_file, save_scene, save_scene_file, SceneFile, SCHEMA_VERSION,
};
pub use synth::{degrade, predict_from_gt, synth_scene, DegradeConfig, SynthConfig};
pub use tensor::{
    read_tensor, read_tensor_file, write_tensor, write_tensor_file, Tensor, TENSOR_MAGIC,
};
