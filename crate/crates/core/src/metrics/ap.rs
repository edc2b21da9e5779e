use std::cmp::Ordering;

use crate::lane_model::LaneSegment;

/// What the matcher needs to know about a prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub id: u64,
    pub confidence: f64,
}

impl From<&LaneSegment> for Detection {
    fn from(s: &LaneSegment) -> Self {
        Detection {
            id: s.id,
            confidence: s.confidence(),
        }
    }
}

/// Descending confidence; ties by lower id, then lower position.
pub(crate) fn ranking(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .confidence
            .partial_cmp(&dets[a].confidence)
            .unwrap_or(Ordering::Equal)
            .then(dets[a].id.cmp(&dets[b].id))
            .then(a.cmp(&b))
    });
    order
}

/// One-to-one greedy matching. Predictions are visited in ranking order and
/// each takes the nearest still-unmatched ground truth within `threshold`
/// (distance ties go to the lower GT index). Returns the GT index per
/// prediction, in input order.
pub fn greedy_match(
    dets: &[Detection],
    n_gt: usize,
    dist: impl Fn(usize, usize) -> f64,
    threshold: f64,
) -> Vec<Option<usize>> {
    let mut taken = vec![false; n_gt];
    let mut matching = vec![None; dets.len()];
    for p in ranking(dets) {
        let mut best: Option<(usize, f64)> = None;
        for (g, &used) in taken.iter().enumerate() {
            if used {
                continue;
            }
            let d = dist(p, g);
            if d <= threshold && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((g, d));
            }
        }
        if let Some((g, _)) = best {
            taken[g] = true;
            matching[p] = Some(g);
        }
    }
    matching
}

/// All-point interpolated AP over hits listed in ranking order. Zero when
/// there is no ground truth.
pub fn average_precision(ranked_hits: &[bool], n_gt: usize) -> f64 {
    if n_gt == 0 {
        return 0.0;
    }
    let mut precision = Vec::with_capacity(ranked_hits.len());
    let mut tp = 0usize;
    for (k, &hit) in ranked_hits.iter().enumerate() {
        tp += usize::from(hit);
        precision.push(tp as f64 / (k + 1) as f64);
    }
    // Make precision non-increasing from the right, then sum it at every
    // recall step (each hit raises recall by 1/n_gt).
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let area: f64 = ranked_hits
        .iter()
        .zip(&precision)
        .filter(|(&hit, _)| hit)
        .map(|(_, &p)| p)
        .sum();
    area / n_gt as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApResult {
    pub ap: f64,
    /// GT index per prediction, in input order.
    pub matching: Vec<Option<usize>>,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// `(confidence, is_tp)` in ranking order.
pub(crate) fn ranked_records(dets: &[Detection], matching: &[Option<usize>]) -> Vec<(f64, bool)> {
    ranking(dets)
        .into_iter()
        .map(|p| (dets[p].confidence, matching[p].is_some()))
        .collect()
}

pub(crate) fn ap_from_matching(
    dets: &[Detection],
    n_gt: usize,
    matching: Vec<Option<usize>>,
) -> ApResult {
    let hits: Vec<bool> = ranked_records(dets, &matching)
        .iter()
        .map(|r| r.1)
        .collect();
    let tp = hits.iter().filter(|&&h| h).count();
    ApResult {
        ap: average_precision(&hits, n_gt),
        tp,
        fp: hits.len() - tp,
        fn_: n_gt - tp,
        matching,
    }
}

pub fn match_and_ap(
    preds: &[LaneSegment],
    gts: &[LaneSegment],
    threshold: f64,
    dist: impl Fn(&LaneSegment, &LaneSegment) -> f64,
) -> ApResult {
    let dets: Vec<Detection> = preds.iter().map(Detection::from).collect();
    let matching = greedy_match(&dets, gts.len(), |p, g| dist(&preds[p], &gts[g]), threshold);
    ap_from_matching(&dets, gts.len(), matching)
}
