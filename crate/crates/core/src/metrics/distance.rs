use crate::geometry::Point2;
use crate::lane_model::LaneSegment;
use crate::{Error, Result};

fn mean_nearest(from: &[Point2], to: &[Point2]) -> f64 {
    let total: f64 = from
        .iter()
        .map(|&a| {
            to.iter()
                .map(|&b| a.distance_sq(b))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    total / from.len() as f64
}

/// Symmetric Chamfer distance: the mean of the two directed mean
/// nearest-neighbor distances.
pub fn chamfer(a: &[Point2], b: &[Point2]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Geometry(
            "chamfer distance of an empty point set".into(),
        ));
    }
    Ok(0.5 * (mean_nearest(a, b) + mean_nearest(b, a)))
}

/// Discrete Fréchet distance over the two vertex sequences, `O(n·m)` time,
/// `O(m)` memory.
pub fn discrete_frechet(a: &[Point2], b: &[Point2]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let m = b.len();
    let mut prev = vec![0.0f64; m];
    let mut curr = vec![0.0f64; m];
    for (i, &p) in a.iter().enumerate() {
        for (j, &q) in b.iter().enumerate() {
            let d = p.distance(q);
            curr[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => curr[j - 1].max(d),
                (_, 0) => prev[0].max(d),
                _ => prev[j].min(prev[j - 1]).min(curr[j - 1]).max(d),
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[m - 1]
}

/// `0.5 · (Chamfer(boundaries) + Fréchet(centerlines))`.
pub fn lane_seg_distance(pred: &LaneSegment, gt: &LaneSegment) -> f64 {
    let boundary = chamfer(&pred.boundary_points(), &gt.boundary_points())
        .expect("lane segments always have boundary points");
    let center = discrete_frechet(pred.centerline().points(), gt.centerline().points());
    0.5 * (boundary + center)
}

/// Pedestrian crossings are direction-free: boundary Chamfer only.
pub fn ped_distance(pred: &LaneSegment, gt: &LaneSegment) -> f64 {
    chamfer(&pred.boundary_points(), &gt.boundary_points())
        .expect("lane segments always have boundary points")
}
