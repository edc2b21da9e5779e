//! Toolkit for lane-segment perception with standard-definition map priors.
//!
//! The crate covers the non-learned parts of the pipeline:
//!
//! - [`lane_model`]: lane segments (centerline plus left/right boundaries),
//!   polyline utilities and the directed lane graph.
//! - [`sd_encode`]: the 6-channel spatial SD map canvas and per-polyline
//!   SD tokens.
//! - [`noise`]: rigid localization noise for SD maps and its
//!   `rot<deg>_std<m>_prob<p>` configuration grammar.
//! - [`topo`]: a dense reference implementation of the topology-guided
//!   feature enhancement and the inner-product connection head, with
//!   analytic gradients and finite-difference checking.
//! - [`metrics`]: Chamfer / discrete Fréchet distances, lane-segment
//!   distance, threshold-swept AP and the lane-to-lane topology score.
//! - [`dataio`]: JSON scenes, the `LGT1` tensor format, a synthetic scene
//!   generator and a prediction degrader.

pub mod dataio;
pub mod error;
pub mod geometry;
pub mod lane_model;
pub mod metrics;
pub mod noise;
pub mod sd_encode;
pub mod topo;

pub use error::{Error, Result};
pub use geometry::{Extent, Point2, Polyline, RigidTransform};
