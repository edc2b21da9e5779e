//! Lane-segment evaluation.
//!
//! - [`chamfer`] and [`discrete_frechet`] are the two point-set distances.
//! - [`lane_seg_distance`] averages the boundary Chamfer distance and the
//!   centerline Fréchet distance.
//! - [`match_and_ap`] greedily matches confidence-ranked predictions to
//!   ground truth under a distance threshold and integrates the
//!   precision–recall curve (all-point interpolation).
//! - [`top_score`] scores the predicted lane graph against ground truth
//!   through that matching.
//! - [`evaluate`] / [`evaluate_scenes`] tie the pieces into a [`MetricsReport`].

mod ap;
mod distance;
mod eval;
mod top;

pub use ap::{average_precision, greedy_match, match_and_ap, ApResult, Detection};
pub use distance::{chamfer, discrete_frechet, lane_seg_distance, ped_distance};
pub use eval::{evaluate, evaluate_scenes, ApSummary, EvalConfig, MetricsReport, ThresholdStats};
pub use top::{top_score, TopAccumulator};
