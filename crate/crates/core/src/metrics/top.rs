use std::collections::BTreeSet;

use crate::lane_model::{LaneGraph, SegmentKind, Topology};
use crate::{Error, Result};

/// Running sum of per-vertex TOP contributions; combine across scenes, then
/// [`finish`](Self::finish).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TopAccumulator {
    pub sum: f64,
    pub vertices: usize,
}

impl TopAccumulator {
    pub fn merge(&mut self, other: TopAccumulator) {
        self.sum += other.sum;
        self.vertices += other.vertices;
    }

    /// `None` when no ground-truth vertex had a neighbor.
    pub fn finish(&self) -> Option<f64> {
        (self.vertices > 0).then(|| self.sum / self.vertices as f64)
    }
}

fn check_topology(g: &LaneGraph, which: &str) -> Result<()> {
    let n = g.segments.len();
    let ok = match &g.topology {
        Topology::Edges(edges) => edges.iter().all(|&(i, j)| i < n && j < n),
        Topology::Scores(m) => m.size() == n,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Matching(format!(
            "{which} topology does not fit its {n} segments"
        )))
    }
}

fn check_matching(
    pred: &LaneGraph,
    gt: &LaneGraph,
    matching: &[Option<usize>],
) -> Result<Vec<Option<usize>>> {
    check_topology(pred, "predicted")?;
    check_topology(gt, "ground-truth")?;
    if matching.len() != pred.segments.len() {
        return Err(Error::Matching(format!(
            "matching covers {} predictions, graph has {}",
            matching.len(),
            pred.segments.len()
        )));
    }
    let mut inverse = vec![None; gt.segments.len()];
    for (p, &g) in matching.iter().enumerate() {
        let Some(g) = g else { continue };
        let slot = inverse.get_mut(g).ok_or_else(|| {
            Error::Matching(format!(
                "prediction {p} matched to missing ground truth {g}"
            ))
        })?;
        if let Some(other) = *slot {
            return Err(Error::Matching(format!(
                "ground truth {g} matched by predictions {other} and {p}"
            )));
        }
        *slot = Some(p);
    }
    Ok(inverse)
}

pub(crate) fn top_accumulate(
    pred: &LaneGraph,
    gt: &LaneGraph,
    matching: &[Option<usize>],
    rank_all: bool,
) -> Result<TopAccumulator> {
    let inverse = check_matching(pred, gt, matching)?;
    let is_lane = |g: &LaneGraph, i: usize| g.segments[i].kind == SegmentKind::Lane;
    let mut acc = TopAccumulator::default();
    for v in (0..gt.segments.len()).filter(|&v| is_lane(gt, v)) {
        let neighbors: BTreeSet<usize> = gt
            .successors(v)
            .into_iter()
            .filter(|&u| u != v && is_lane(gt, u))
            .collect();
        if neighbors.is_empty() {
            continue;
        }
        acc.vertices += 1;
        let Some(p) = inverse[v] else { continue };

        // Outgoing scores from p to every other matched prediction.
        let mut ranked: Vec<(f64, usize, usize)> = matching
            .iter()
            .enumerate()
            .filter_map(|(q, &g)| Some((q, g?)))
            .filter(|&(q, u)| q != p && u != v)
            .map(|(q, u)| (pred.edge_score(p, q), q, u))
            .filter(|&(s, _, _)| rank_all || s >= 0.5)
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

        let mut hits = 0usize;
        let mut sum = 0.0;
        for (k, &(_, _, u)) in ranked.iter().enumerate() {
            if neighbors.contains(&u) {
                hits += 1;
                sum += hits as f64 / (k + 1) as f64;
            }
        }
        acc.sum += sum / neighbors.len() as f64;
    }
    Ok(acc)
}

/// Vertex-averaged precision of each matched prediction's ranked outgoing
/// edges against the ground-truth successors.
///
/// `matching[p]` is the ground-truth index assigned to prediction `p`.
/// Only lane-kind vertices take part. Ground-truth vertices without
/// successors are excluded; those with successors but no matched prediction
/// contribute zero. With `rank_all` unset, edges scored below 0.5 are not
/// ranked at all.
pub fn top_score(
    pred: &LaneGraph,
    gt: &LaneGraph,
    matching: &[Option<usize>],
    rank_all: bool,
) -> Result<Option<f64>> {
    Ok(top_accumulate(pred, gt, matching, rank_all)?.finish())
}
