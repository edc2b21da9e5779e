use serde::{Deserialize, Serialize};

use super::ap::{average_precision, greedy_match, ranked_records, Detection};
use super::distance::{lane_seg_distance, ped_distance};
use super::top::{top_accumulate, TopAccumulator};
use crate::lane_model::{LaneGraph, LaneSegment, SegmentKind};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Matching thresholds for lane segments, meters, ascending.
    pub ls_thresholds: Vec<f64>,
    /// Matching thresholds for pedestrian crossings, meters, ascending.
    pub ped_thresholds: Vec<f64>,
    /// Rank every predicted edge in TOP; when unset only scores ≥ 0.5 count.
    pub edge_rank_all: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ls_thresholds: vec![1.0, 2.0, 3.0],
            ped_thresholds: vec![0.5, 1.0, 1.5],
            edge_rank_all: true,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, ts) in [
            ("ls_thresholds", &self.ls_thresholds),
            ("ped_thresholds", &self.ped_thresholds),
        ] {
            if ts.is_empty() {
                return Err(Error::Config(format!("{name} is empty")));
            }
            if !ts.iter().all(|t| *t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive: {ts:?}")));
            }
            if ts.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(format!(
                    "{name} must be strictly ascending: {ts:?}"
                )));
            }
        }
        Ok(())
    }

    /// The matching that feeds TOP: the middle lane threshold (the upper of
    /// the two middles for an even count).
    pub fn top_threshold(&self) -> f64 {
        self.ls_thresholds[self.ls_thresholds.len() / 2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdStats {
    pub threshold: f64,
    pub ap: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApSummary {
    /// Mean AP over thresholds.
    pub ap: f64,
    pub num_pred: usize,
    pub num_gt: usize,
    pub per_threshold: Vec<ThresholdStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ap_ls: f64,
    pub ap_ped: f64,
    pub map: f64,
    /// `None` when no ground-truth lane has a successor.
    pub top_lsls: Option<f64>,
    /// Ground-truth vertices that entered the TOP average.
    pub top_vertices: usize,
    pub scenes: usize,
    pub lane: ApSummary,
    pub ped: ApSummary,
}

/// Pooled detections for one class at one threshold.
#[derive(Default)]
struct Pool {
    records: Vec<(f64, bool)>,
    n_gt: usize,
}

struct ClassPools {
    thresholds: Vec<f64>,
    pools: Vec<Pool>,
    num_pred: usize,
    num_gt: usize,
}

impl ClassPools {
    fn new(thresholds: &[f64]) -> Self {
        ClassPools {
            thresholds: thresholds.to_vec(),
            pools: thresholds.iter().map(|_| Pool::default()).collect(),
            num_pred: 0,
            num_gt: 0,
        }
    }

    /// Matches one scene's class subset at every threshold; returns the
    /// matchings for the caller to reuse.
    fn add_scene(
        &mut self,
        preds: &[&LaneSegment],
        gts: &[&LaneSegment],
        dist: fn(&LaneSegment, &LaneSegment) -> f64,
    ) -> Vec<Vec<Option<usize>>> {
        self.num_pred += preds.len();
        self.num_gt += gts.len();
        let dets: Vec<Detection> = preds.iter().map(|&s| Detection::from(s)).collect();
        let d: Vec<Vec<f64>> = preds
            .iter()
            .map(|p| gts.iter().map(|g| dist(p, g)).collect())
            .collect();
        self.thresholds
            .iter()
            .zip(&mut self.pools)
            .map(|(&t, pool)| {
                let matching = greedy_match(&dets, gts.len(), |p, g| d[p][g], t);
                pool.records.extend(ranked_records(&dets, &matching));
                pool.n_gt += gts.len();
                matching
            })
            .collect()
    }

    fn finish(mut self) -> ApSummary {
        let per_threshold: Vec<ThresholdStats> = self
            .thresholds
            .iter()
            .zip(&mut self.pools)
            .map(|(&threshold, pool)| {
                // Stable: equal confidences keep scene order, then in-scene rank.
                pool.records.sort_by(|a, b| b.0.total_cmp(&a.0));
                let hits: Vec<bool> = pool.records.iter().map(|r| r.1).collect();
                let tp = hits.iter().filter(|&&h| h).count();
                ThresholdStats {
                    threshold,
                    ap: average_precision(&hits, pool.n_gt),
                    tp,
                    fp: hits.len() - tp,
                    fn_: pool.n_gt - tp,
                }
            })
            .collect();
        let ap = per_threshold.iter().map(|s| s.ap).sum::<f64>() / per_threshold.len() as f64;
        ApSummary {
            ap,
            num_pred: self.num_pred,
            num_gt: self.num_gt,
            per_threshold,
        }
    }
}

fn split(g: &LaneGraph, kind: SegmentKind) -> (Vec<usize>, Vec<&LaneSegment>) {
    g.segments
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind == kind)
        .unzip()
}

/// Evaluates several `(prediction, ground truth)` scenes, pooling detections
/// across scenes before integrating precision–recall, and summing TOP
/// contributions per vertex.
pub fn evaluate_scenes(
    scenes: &[(&LaneGraph, &LaneGraph)],
    cfg: &EvalConfig,
) -> Result<MetricsReport> {
    cfg.validate()?;
    let mut lane = ClassPools::new(&cfg.ls_thresholds);
    let mut ped = ClassPools::new(&cfg.ped_thresholds);
    let top_index = cfg.ls_thresholds.len() / 2;
    let mut top = TopAccumulator::default();

    for (pred, gt) in scenes {
        let (pred_idx, pred_lanes) = split(pred, SegmentKind::Lane);
        let (gt_idx, gt_lanes) = split(gt, SegmentKind::Lane);
        let matchings = lane.add_scene(&pred_lanes, &gt_lanes, lane_seg_distance);

        let mut full = vec![None; pred.segments.len()];
        for (sub, g) in matchings[top_index].iter().enumerate() {
            full[pred_idx[sub]] = g.map(|g| gt_idx[g]);
        }
        top.merge(top_accumulate(pred, gt, &full, cfg.edge_rank_all)?);

        let (_, pred_ped) = split(pred, SegmentKind::PedestrianCrossing);
        let (_, gt_ped) = split(gt, SegmentKind::PedestrianCrossing);
        ped.add_scene(&pred_ped, &gt_ped, ped_distance);
    }

    let lane = lane.finish();
    let ped = ped.finish();
    Ok(MetricsReport {
        ap_ls: lane.ap,
        ap_ped: ped.ap,
        map: 0.5 * (lane.ap + ped.ap),
        top_lsls: top.finish(),
        top_vertices: top.vertices,
        scenes: scenes.len(),
        lane,
        ped,
    })
}

pub fn evaluate(pred: &LaneGraph, gt: &LaneGraph, cfg: &EvalConfig) -> Result<MetricsReport> {
    evaluate_scenes(&[(pred, gt)], cfg)
}
