//! Lane segments and the directed lane graph.
//!
//! A lane segment is a centerline with left and right boundaries sampled at
//! the same number of points. Ground-truth topology is a set of directed
//! edges `(i, j)` meaning "segment `i` ends where segment `j` starts";
//! predicted topology is a dense score matrix with entries in `[0, 1]`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Polyline, RigidTransform};
use crate::{Error, Result};

/// Default number of points per lane polyline.
pub const DEFAULT_LANE_POINTS: usize = 10;

/// Default endpoint gap above which an edge is reported by [`validate_graph`].
pub const DEFAULT_GAP_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineType {
    NonVisible,
    Solid,
    Dashed,
}

/// Lane segments also carry pedestrian crossings converted to the same
/// centerline/boundary layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    #[default]
    Lane,
    PedestrianCrossing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaneSegment {
    pub id: u64,
    pub kind: SegmentKind,
    centerline: Polyline,
    left_boundary: Polyline,
    right_boundary: Polyline,
    pub left_type: LineType,
    pub right_type: LineType,
    confidence: f64,
}

impl LaneSegment {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: u64,
        kind: SegmentKind,
        centerline: Polyline,
        left_boundary: Polyline,
        right_boundary: Polyline,
        left_type: LineType,
        right_type: LineType,
        confidence: f64,
    ) -> Result<Self> {
        let n = centerline.len();
        if left_boundary.len() != n || right_boundary.len() != n {
            return Err(Error::Geometry(format!(
                "segment {id}: centerline has {n} points, left boundary {}, right boundary {}",
                left_boundary.len(),
                right_boundary.len()
            )));
        }
        check_confidence(confidence).map_err(|e| Error::Geometry(format!("segment {id}: {e}")))?;
        Ok(LaneSegment {
            id,
            kind,
            centerline,
            left_boundary,
            right_boundary,
            left_type,
            right_type,
            confidence,
        })
    }

    /// Ground-truth lane built from a centerline and lateral offsets.
    pub fn from_offsets(id: u64, centerline: Polyline, offsets: &OffsetVector) -> Result<Self> {
        let (left, right) = reconstruct_boundaries(&centerline, offsets)?;
        Self::new(
            id,
            SegmentKind::Lane,
            centerline,
            left,
            right,
            LineType::Solid,
            LineType::Solid,
            1.0,
        )
    }

    pub fn centerline(&self) -> &Polyline {
        &self.centerline
    }

    pub fn left_boundary(&self) -> &Polyline {
        &self.left_boundary
    }

    pub fn right_boundary(&self) -> &Polyline {
        &self.right_boundary
    }

    pub fn point_count(&self) -> usize {
        self.centerline.len()
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn with_confidence(mut self, confidence: f64) -> Result<Self> {
        check_confidence(confidence)?;
        self.confidence = confidence;
        Ok(self)
    }

    /// Boundary points `[left..., right...]`, the point set used by Chamfer.
    pub fn boundary_points(&self) -> Vec<Point2> {
        self.left_boundary
            .points()
            .iter()
            .chain(self.right_boundary.points())
            .copied()
            .collect()
    }

    pub fn transformed(&self, t: &RigidTransform) -> LaneSegment {
        LaneSegment {
            centerline: self.centerline.transformed(t),
            left_boundary: self.left_boundary.transformed(t),
            right_boundary: self.right_boundary.transformed(t),
            ..self.clone()
        }
    }

    /// Resamples all three polylines to `n` points.
    pub fn resampled(&self, n: usize) -> Result<LaneSegment> {
        Ok(LaneSegment {
            centerline: resample_polyline(&self.centerline, n)?,
            left_boundary: resample_polyline(&self.left_boundary, n)?,
            right_boundary: resample_polyline(&self.right_boundary, n)?,
            ..self.clone()
        })
    }
}

fn check_confidence(confidence: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&confidence) {
        return Err(Error::Geometry(format!(
            "confidence {confidence} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Per-point half-width offsets; `left = c - o`, `right = c + o`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetVector(pub Vec<Point2>);

impl OffsetVector {
    pub fn uniform(offset: Point2, n: usize) -> Self {
        OffsetVector(vec![offset; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn reconstruct_boundaries(
    centerline: &Polyline,
    offsets: &OffsetVector,
) -> Result<(Polyline, Polyline)> {
    if offsets.len() != centerline.len() {
        return Err(Error::Shape(format!(
            "{} offsets for a {}-point centerline",
            offsets.len(),
            centerline.len()
        )));
    }
    let (left, right) = centerline
        .points()
        .iter()
        .zip(&offsets.0)
        .map(|(&c, &o)| (c - o, c + o))
        .unzip();
    Ok((Polyline::new(left)?, Polyline::new(right)?))
}

/// Distance from the end of `a`'s centerline to the start of `b`'s.
pub fn endpoint_gap(a: &LaneSegment, b: &LaneSegment) -> f64 {
    a.centerline.last().distance(b.centerline.first())
}

/// Resamples `p` to `n` points at equal arc-length spacing. The first and
/// last points are copied exactly.
pub fn resample_polyline(p: &Polyline, n: usize) -> Result<Polyline> {
    if n < 2 {
        return Err(Error::Config(format!("cannot resample to {n} points")));
    }
    let pts = p.points();
    let mut cumulative = Vec::with_capacity(pts.len());
    cumulative.push(0.0);
    for (a, b) in p.segments() {
        let last = *cumulative.last().unwrap();
        cumulative.push(last + a.distance(b));
    }
    let total = *cumulative.last().unwrap();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Geometry("polyline has zero length".into()));
    }

    let mut out = Vec::with_capacity(n);
    out.push(p.first());
    let mut seg = 0;
    for k in 1..n - 1 {
        let target = total * k as f64 / (n - 1) as f64;
        while seg + 1 < pts.len() - 1 && cumulative[seg + 1] < target {
            seg += 1;
        }
        let span = cumulative[seg + 1] - cumulative[seg];
        let t = ((target - cumulative[seg]) / span).clamp(0.0, 1.0);
        out.push(if t == 1.0 {
            pts[seg + 1]
        } else {
            pts[seg].lerp(pts[seg + 1], t)
        });
    }
    out.push(p.last());
    Polyline::new(out)
}

/// Dense `n × n` matrix of connection scores in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    n: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn zeros(n: usize) -> Self {
        ScoreMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Shape(format!(
                    "score row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        let m = ScoreMatrix { n, data };
        m.check_range()?;
        Ok(m)
    }

    fn check_range(&self) -> Result<()> {
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Geometry(format!(
                        "score ({i}, {j}) = {v} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Geometry(format!("score {value} outside [0, 1]")));
        }
        self.data[i * self.n + j] = value;
        Ok(())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    /// Ground truth: directed edges over segment indices.
    Edges(BTreeSet<(usize, usize)>),
    /// Prediction: `scores[i][j]` for "end of i connects to start of j".
    Scores(ScoreMatrix),
}

impl Default for Topology {
    fn default() -> Self {
        Topology::Edges(BTreeSet::new())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaneGraph {
    pub segments: Vec<LaneSegment>,
    pub topology: Topology,
}

impl LaneGraph {
    pub fn new(segments: Vec<LaneSegment>, topology: Topology) -> Self {
        LaneGraph { segments, topology }
    }

    /// Successor indices of `i` in an edge-set graph.
    pub fn successors(&self, i: usize) -> Vec<usize> {
        match &self.topology {
            Topology::Edges(edges) => edges
                .range((i, 0)..=(i, usize::MAX))
                .map(|&(_, j)| j)
                .collect(),
            Topology::Scores(m) => (0..m.size()).filter(|&j| m.get(i, j) >= 0.5).collect(),
        }
    }

    /// Score of the directed edge `i → j`: stored score for predictions,
    /// 1/0 for edge sets.
    pub fn edge_score(&self, i: usize, j: usize) -> f64 {
        match &self.topology {
            Topology::Edges(edges) => f64::from(u8::from(edges.contains(&(i, j)))),
            Topology::Scores(m) => m.get(i, j),
        }
    }

    pub fn transformed(&self, t: &RigidTransform) -> LaneGraph {
        LaneGraph {
            segments: self.segments.iter().map(|s| s.transformed(t)).collect(),
            topology: self.topology.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    EdgeIndexOutOfRange { from: usize, to: usize, len: usize },
    SelfLoop { index: usize },
    ScoreShape { size: usize, len: usize },
    ScoreOutOfRange { row: usize, col: usize, value: f64 },
    EndpointGap { from: usize, to: usize, gap: f64 },
}

impl Diagnostic {
    /// Invariant violations, as opposed to the purely informative gap report.
    pub fn is_violation(&self) -> bool {
        !matches!(self, Diagnostic::EndpointGap { .. })
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::EdgeIndexOutOfRange { from, to, len } => {
                write!(f, "edge ({from}, {to}) out of range for {len} segments")
            }
            Diagnostic::SelfLoop { index } => write!(f, "self-loop on segment {index}"),
            Diagnostic::ScoreShape { size, len } => {
                write!(f, "score matrix is {size}x{size} for {len} segments")
            }
            Diagnostic::ScoreOutOfRange { row, col, value } => {
                write!(f, "score ({row}, {col}) = {value} outside [0, 1]")
            }
            Diagnostic::EndpointGap { from, to, gap } => {
                write!(f, "edge ({from}, {to}) endpoint gap {gap:.3} m")
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    pub gap_threshold: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            gap_threshold: DEFAULT_GAP_THRESHOLD,
        }
    }
}

/// Reports structural problems and suspicious endpoint gaps. Never fails.
pub fn validate_graph(g: &LaneGraph, opts: ValidateOptions) -> Vec<Diagnostic> {
    let len = g.segments.len();
    let mut out = Vec::new();
    let check_gap = |out: &mut Vec<Diagnostic>, from: usize, to: usize| {
        let gap = endpoint_gap(&g.segments[from], &g.segments[to]);
        if gap > opts.gap_threshold {
            out.push(Diagnostic::EndpointGap { from, to, gap });
        }
    };
    match &g.topology {
        Topology::Edges(edges) => {
            for &(from, to) in edges {
                if from >= len || to >= len {
                    out.push(Diagnostic::EdgeIndexOutOfRange { from, to, len });
                    continue;
                }
                if from == to {
                    out.push(Diagnostic::SelfLoop { index: from });
                    continue;
                }
                check_gap(&mut out, from, to);
            }
        }
        Topology::Scores(m) => {
            if m.size() != len {
                out.push(Diagnostic::ScoreShape {
                    size: m.size(),
                    len,
                });
                return out;
            }
            for row in 0..len {
                for col in 0..len {
                    let value = m.get(row, col);
                    if !(0.0..=1.0).contains(&value) {
                        out.push(Diagnostic::ScoreOutOfRange { row, col, value });
                    } else if value >= 0.5 && row != col {
                        check_gap(&mut out, row, col);
                    }
                }
            }
        }
    }
    out
}
