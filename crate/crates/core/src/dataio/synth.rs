//! Synthetic ground truth and controlled predictions.
//!
//! Roads are circular arcs (straight when the curvature is zero) running
//! along x across the extent, evenly spaced in y. Each road carries
//! `lanes_per_road` parallel lanes, and each lane is cut into
//! `segments_per_lane` pieces of equal arc length that share endpoints
//! exactly, linked by successor edges. Pedestrian crossings span the full
//! road width perpendicular to it. The SD map holds the road centerline,
//! one sidewalk on each side and one crosswalk per crossing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::scene::SceneFile;
use crate::geometry::{Extent, Point2, Polyline, RigidTransform};
use crate::lane_model::{
    LaneGraph, LaneSegment, LineType, OffsetVector, ScoreMatrix, SegmentKind, Topology,
};
use crate::sd_encode::{SdCategory, SdElement, SdMapLocal};
use crate::{Error, Result};

/// Lateral error at which a degraded prediction's confidence reaches zero.
const CONFIDENCE_SCALE: f64 = 3.0;
const CROSSING_WIDTH: f64 = 3.0;
/// How far crossings reach past the outer lane boundaries.
const CROSSING_OVERHANG: f64 = 1.0;
const SIDEWALK_OFFSET: f64 = 1.5;
/// SD polylines extend this far past the lanes at both ends.
const SD_OVERHANG: f64 = 20.0;
const SD_POINTS: usize = 41;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub roads: usize,
    pub lanes_per_road: usize,
    pub segments_per_lane: usize,
    /// Meters.
    pub lane_width: f64,
    /// Road curvature is drawn uniformly from `±curvature_max`, 1/m.
    pub curvature_max: f64,
    /// Spread round-robin over the roads.
    pub crossings: usize,
    pub points_per_lane: usize,
    pub extent: Extent,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            roads: 2,
            lanes_per_road: 2,
            segments_per_lane: 3,
            lane_width: 3.5,
            curvature_max: 0.002,
            crossings: 2,
            points_per_lane: 10,
            extent: Extent::PERCEPTION,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        self.extent.validate()?;
        if !(self.lane_width > 0.0 && self.lane_width.is_finite()) {
            return Err(Error::Config(format!(
                "lane_width {} must be positive",
                self.lane_width
            )));
        }
        if !(self.curvature_max >= 0.0 && self.curvature_max.is_finite()) {
            return Err(Error::Config(format!(
                "curvature_max {} must be >= 0",
                self.curvature_max
            )));
        }
        if self.segments_per_lane == 0 {
            return Err(Error::Config("segments_per_lane must be at least 1".into()));
        }
        if self.points_per_lane < 2 {
            return Err(Error::Config("points_per_lane must be at least 2".into()));
        }
        Ok(())
    }
}

/// A road reference curve: start point, heading and signed curvature.
struct Road {
    start: Point2,
    heading: f64,
    curvature: f64,
}

impl Road {
    /// Point at arc length `s`, offset `d` to the left of travel.
    fn at(&self, s: f64, d: f64) -> Point2 {
        let theta = self.heading + self.curvature * s;
        let base = if self.curvature.abs() < 1e-12 {
            self.start + Point2::new(self.heading.cos(), self.heading.sin()) * s
        } else {
            let k = self.curvature;
            let center = self.start + self.left(0.0) * (1.0 / k);
            center + Point2::new(theta.sin(), -theta.cos()) * (1.0 / k)
        };
        base + self.left(s) * d
    }

    fn left(&self, s: f64) -> Point2 {
        let theta = self.heading + self.curvature * s;
        Point2::new(-theta.sin(), theta.cos())
    }

    fn tangent(&self, s: f64) -> Point2 {
        let theta = self.heading + self.curvature * s;
        Point2::new(theta.cos(), theta.sin())
    }
}

fn offset_lane(
    id: u64,
    kind: SegmentKind,
    center: Vec<Point2>,
    half: Vec<Point2>,
    types: (LineType, LineType),
) -> Result<LaneSegment> {
    // left = c − o, so o points from the centerline to the right boundary.
    let offsets = OffsetVector(half.into_iter().map(|h| -h).collect());
    let mut s = LaneSegment::from_offsets(id, Polyline::new(center)?, &offsets)?;
    s.kind = kind;
    s.left_type = types.0;
    s.right_type = types.1;
    Ok(s)
}

/// Deterministic in `cfg.seed`. Fails when the requested lanes do not fit
/// in the extent.
pub fn synth_scene(cfg: &SynthConfig) -> Result<SceneFile> {
    cfg.validate()?;
    let mut scene = SceneFile {
        scene_id: format!("synth-{}", cfg.seed),
        extent: cfg.extent,
        ..SceneFile::default()
    };
    if cfg.roads == 0 || cfg.lanes_per_road == 0 {
        return Ok(scene);
    }
    let ext = cfg.extent;
    let spacing = ext.width_y() / cfg.roads as f64;
    let half_road = 0.5 * cfg.lanes_per_road as f64 * cfg.lane_width;
    let needed = 2.0 * (half_road + CROSSING_OVERHANG);
    if needed > spacing {
        return Err(Error::Config(format!(
            "{} roads of {} lanes need {needed} m each but only {spacing} m are available",
            cfg.roads, cfg.lanes_per_road
        )));
    }
    let length = 0.9 * ext.width_x();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let roads: Vec<Road> = (0..cfg.roads)
        .map(|r| {
            let forward = rng.random::<bool>();
            let curvature = cfg.curvature_max * (2.0 * rng.random::<f64>() - 1.0);
            let y = ext.y_max - (r as f64 + 0.5) * spacing;
            let (x, heading) = if forward {
                (ext.x_min + 0.05 * ext.width_x(), 0.0)
            } else {
                (ext.x_max - 0.05 * ext.width_x(), std::f64::consts::PI)
            };
            Road {
                start: Point2::new(x, y),
                heading,
                curvature,
            }
        })
        .collect();

    let n = cfg.points_per_lane;
    let m = cfg.segments_per_lane;
    let denom = (m * (n - 1)) as f64;
    let mut segments = Vec::new();
    let mut edges = std::collections::BTreeSet::new();
    let mut sd = Vec::new();

    for road in &roads {
        for k in 0..cfg.lanes_per_road {
            let d = half_road - (k as f64 + 0.5) * cfg.lane_width;
            let types = (
                if k == 0 {
                    LineType::Solid
                } else {
                    LineType::Dashed
                },
                if k + 1 == cfg.lanes_per_road {
                    LineType::Solid
                } else {
                    LineType::Dashed
                },
            );
            for j in 0..m {
                // Integer numerators make shared endpoints bit-identical.
                let s: Vec<f64> = (0..n)
                    .map(|i| length * (j * (n - 1) + i) as f64 / denom)
                    .collect();
                let center = s.iter().map(|&s| road.at(s, d)).collect();
                let half = s
                    .iter()
                    .map(|&s| road.left(s) * (0.5 * cfg.lane_width))
                    .collect();
                let idx = segments.len();
                segments.push(offset_lane(
                    idx as u64,
                    SegmentKind::Lane,
                    center,
                    half,
                    types,
                )?);
                if j > 0 {
                    edges.insert((idx - 1, idx));
                }
            }
        }
        let s_sd: Vec<f64> = (0..SD_POINTS)
            .map(|i| {
                -SD_OVERHANG + (length + 2.0 * SD_OVERHANG) * i as f64 / (SD_POINTS - 1) as f64
            })
            .collect();
        let line = |d: f64| Polyline::new(s_sd.iter().map(|&s| road.at(s, d)).collect());
        sd.push(SdElement::new(SdCategory::Road, line(0.0)?));
        sd.push(SdElement::new(
            SdCategory::Sidewalk,
            line(half_road + SIDEWALK_OFFSET)?,
        ));
        sd.push(SdElement::new(
            SdCategory::Sidewalk,
            line(-(half_road + SIDEWALK_OFFSET))?,
        ));
    }

    for c in 0..cfg.crossings {
        let r = c % cfg.roads;
        let on_road = cfg.crossings / cfg.roads + usize::from(r < cfg.crossings % cfg.roads);
        let slot = c / cfg.roads;
        let jitter = 0.05 * (2.0 * rng.random::<f64>() - 1.0);
        let s = length * ((slot + 1) as f64 / (on_road + 1) as f64 + jitter);
        let road = &roads[r];
        let reach = half_road + CROSSING_OVERHANG;
        let center: Vec<Point2> = (0..n)
            .map(|i| road.at(s, -reach + 2.0 * reach * i as f64 / (n - 1) as f64))
            .collect();
        // The crossing runs right-to-left across the road, so its own left
        // is the road's backward direction.
        let half = vec![-road.tangent(s) * (0.5 * CROSSING_WIDTH); n];
        sd.push(SdElement::new(
            SdCategory::Crosswalk,
            Polyline::new(vec![center[0], center[n - 1]])?,
        ));
        let id = segments.len() as u64;
        segments.push(offset_lane(
            id,
            SegmentKind::PedestrianCrossing,
            center,
            half,
            (LineType::NonVisible, LineType::NonVisible),
        )?);
    }

    for s in &segments {
        let outside = [s.centerline(), s.left_boundary(), s.right_boundary()]
            .iter()
            .flat_map(|p| p.points())
            .find(|p| !ext.contains(**p));
        if let Some(p) = outside {
            return Err(Error::Config(format!(
                "segment {} leaves the extent at ({:.3}, {:.3}); reduce curvature_max or lane count",
                s.id, p.x, p.y
            )));
        }
    }
    scene.graph = LaneGraph::new(segments, Topology::Edges(edges));
    scene.sd_map = SdMapLocal::new(sd, Extent::SD_RANGE)?;
    Ok(scene)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradeConfig {
    /// Standard deviation of the per-segment lateral shift, meters.
    pub lateral_std: f64,
    /// Fixed lateral shift added to every segment, meters.
    pub lateral_bias: f64,
    pub drop_prob: f64,
    /// Probability that an edge score `s` is replaced by `1 − s`.
    pub edge_flip_prob: f64,
    pub seed: u64,
}

impl Default for DegradeConfig {
    fn default() -> Self {
        DegradeConfig {
            lateral_std: 0.0,
            lateral_bias: 0.0,
            drop_prob: 0.0,
            edge_flip_prob: 0.0,
            seed: 0,
        }
    }
}

impl DegradeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lateral_std >= 0.0 && self.lateral_std.is_finite()) {
            return Err(Error::Config(format!(
                "lateral_std {} must be >= 0",
                self.lateral_std
            )));
        }
        if !self.lateral_bias.is_finite() {
            return Err(Error::Config("lateral_bias must be finite".into()));
        }
        for (name, p) in [
            ("drop_prob", self.drop_prob),
            ("edge_flip_prob", self.edge_flip_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

fn score_matrix(gt: &LaneGraph, kept: &[usize]) -> ScoreMatrix {
    let mut m = ScoreMatrix::zeros(kept.len());
    for (a, &i) in kept.iter().enumerate() {
        for (b, &j) in kept.iter().enumerate() {
            m.set(a, b, gt.edge_score(i, j))
                .expect("edge scores are 0 or 1");
        }
    }
    m
}

/// Ground truth as a perfect prediction: same segments, confidence 1,
/// edge set turned into a 0/1 score matrix.
pub fn predict_from_gt(gt: &SceneFile) -> SceneFile {
    let kept: Vec<usize> = (0..gt.graph.segments.len()).collect();
    SceneFile {
        graph: LaneGraph::new(
            gt.graph.segments.clone(),
            Topology::Scores(score_matrix(&gt.graph, &kept)),
        ),
        ..gt.clone()
    }
}

/// Turns ground truth into a prediction with controlled errors.
///
/// For every segment, in order, the stream yields a drop draw and a
/// standard normal `z`. Kept segments are translated by
/// `lateral_bias + lateral_std·z` along the left normal of their centerline
/// chord and get confidence `1 − min(|shift| / 3 m, 1)`. Then, row-major
/// over kept pairs `i ≠ j`, each 0/1 ground-truth edge score flips with
/// probability `edge_flip_prob`. Segment ids are preserved.
pub fn degrade(gt: &SceneFile, cfg: &DegradeConfig) -> Result<SceneFile> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut kept = Vec::new();
    let mut segments = Vec::new();
    for (i, s) in gt.graph.segments.iter().enumerate() {
        let drop = rng.random::<f64>() < cfg.drop_prob;
        let z: f64 = rng.sample(StandardNormal);
        if drop {
            continue;
        }
        let shift = cfg.lateral_bias + cfg.lateral_std * z;
        let chord = s.centerline().last() - s.centerline().first();
        let normal = Point2::new(-chord.y, chord.x) * (1.0 / chord.norm());
        let moved = if shift == 0.0 {
            s.clone()
        } else {
            s.transformed(&RigidTransform::new(0.0, normal * shift))
        };
        let confidence = 1.0 - (shift.abs() / CONFIDENCE_SCALE).min(1.0);
        segments.push(moved.with_confidence(confidence)?);
        kept.push(i);
    }
    let mut m = score_matrix(&gt.graph, &kept);
    for a in 0..kept.len() {
        for b in 0..kept.len() {
            if a != b && rng.random::<f64>() < cfg.edge_flip_prob {
                m.set(a, b, 1.0 - m.get(a, b))?;
            }
        }
    }
    Ok(SceneFile {
        graph: LaneGraph::new(segments, Topology::Scores(m)),
        ..gt.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lane_model::{validate_graph, ValidateOptions};
    use crate::metrics::{evaluate, lane_seg_distance, EvalConfig};

    fn straight(roads: usize, lanes: usize, segs: usize, crossings: usize) -> SynthConfig {
        SynthConfig {
            roads,
            lanes_per_road: lanes,
            segments_per_lane: segs,
            curvature_max: 0.0,
            crossings,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn zero_lanes_is_empty() {
        for cfg in [straight(0, 2, 2, 1), straight(2, 0, 2, 1)] {
            let s = synth_scene(&cfg).unwrap();
            assert!(s.graph.segments.is_empty());
            assert!(s.sd_map.is_empty());
        }
    }

    #[test]
    fn one_road_two_lanes_two_pieces() {
        let s = synth_scene(&straight(1, 2, 2, 0)).unwrap();
        assert_eq!(s.graph.segments.len(), 4);
        assert_eq!(
            s.graph.topology,
            Topology::Edges([(0, 1), (2, 3)].into_iter().collect())
        );
        // Pieces share their joint exactly.
        assert_eq!(
            s.graph.segments[0].centerline().last(),
            s.graph.segments[1].centerline().first()
        );
        let lane_ids: Vec<u64> = s.graph.segments.iter().map(|x| x.id).collect();
        assert_eq!(lane_ids, vec![0, 1, 2, 3]);
    }

    #[test]
    fn lanes_sit_side_by_side() {
        let s = synth_scene(&straight(1, 2, 1, 0)).unwrap();
        let (a, b) = (&s.graph.segments[0], &s.graph.segments[1]);
        // The left lane's right boundary is the right lane's left boundary.
        for (p, q) in a
            .right_boundary()
            .points()
            .iter()
            .zip(b.left_boundary().points())
        {
            assert!(p.distance(*q) < 1e-9);
        }
        assert_eq!(a.left_type, LineType::Solid);
        assert_eq!(a.right_type, LineType::Dashed);
        assert_eq!(b.right_type, LineType::Solid);
    }

    #[test]
    fn default_scenes_validate_cleanly() {
        for seed in 0..20 {
            let s = synth_scene(&SynthConfig {
                seed,
                ..SynthConfig::default()
            })
            .unwrap();
            assert!(
                validate_graph(&s.graph, ValidateOptions::default()).is_empty(),
                "seed {seed}"
            );
            let crossings = s
                .graph
                .segments
                .iter()
                .filter(|x| x.kind == SegmentKind::PedestrianCrossing)
                .count();
            assert_eq!(crossings, 2);
            assert_eq!(s.sd_map.len(), 2 * 3 + 2);
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let cfg = SynthConfig {
            seed: 5,
            ..SynthConfig::default()
        };
        assert_eq!(synth_scene(&cfg).unwrap(), synth_scene(&cfg).unwrap());
        assert_ne!(
            synth_scene(&cfg).unwrap(),
            synth_scene(&SynthConfig { seed: 6, ..cfg }).unwrap()
        );
    }

    #[test]
    fn infeasible_configs_fail() {
        assert!(synth_scene(&straight(4, 4, 1, 0)).is_err());
        assert!(synth_scene(&SynthConfig {
            curvature_max: 0.2,
            ..SynthConfig::default()
        })
        .is_err());
        assert!(synth_scene(&SynthConfig {
            segments_per_lane: 0,
            ..SynthConfig::default()
        })
        .is_err());
    }

    #[test]
    fn zero_degradation_is_perfect() {
        let gt = synth_scene(&SynthConfig::default()).unwrap();
        let pred = degrade(&gt, &DegradeConfig::default()).unwrap();
        assert_eq!(pred, predict_from_gt(&gt));
        let r = evaluate(&pred.graph, &gt.graph, &EvalConfig::default()).unwrap();
        assert_eq!((r.map, r.top_lsls), (1.0, Some(1.0)));
    }

    #[test]
    fn dropping_everything() {
        let gt = synth_scene(&SynthConfig::default()).unwrap();
        let pred = degrade(
            &gt,
            &DegradeConfig {
                drop_prob: 1.0,
                ..DegradeConfig::default()
            },
        )
        .unwrap();
        assert!(pred.graph.segments.is_empty());
        let r = evaluate(&pred.graph, &gt.graph, &EvalConfig::default()).unwrap();
        assert_eq!(r.map, 0.0);
    }

    #[test]
    fn pure_lateral_shift_on_straight_lanes() {
        let gt = synth_scene(&straight(2, 2, 2, 0)).unwrap();
        for shift in [0.3, -1.0, 1.5] {
            let pred = degrade(
                &gt,
                &DegradeConfig {
                    lateral_bias: shift,
                    ..DegradeConfig::default()
                },
            )
            .unwrap();
            for (p, g) in pred.graph.segments.iter().zip(&gt.graph.segments) {
                assert_eq!(p.id, g.id);
                assert!((lane_seg_distance(p, g) - shift.abs()).abs() < 1e-9);
                assert!((p.confidence() - (1.0 - shift.abs() / 3.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn edge_flips_invert_scores() {
        let gt = synth_scene(&straight(1, 1, 3, 0)).unwrap();
        let pred = degrade(
            &gt,
            &DegradeConfig {
                edge_flip_prob: 1.0,
                ..DegradeConfig::default()
            },
        )
        .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j {
                    0.0
                } else {
                    1.0 - gt.graph.edge_score(i, j)
                };
                assert_eq!(pred.graph.edge_score(i, j), expect);
            }
        }
        assert!(degrade(
            &gt,
            &DegradeConfig {
                drop_prob: 1.5,
                ..DegradeConfig::default()
            }
        )
        .is_err());
    }
}
