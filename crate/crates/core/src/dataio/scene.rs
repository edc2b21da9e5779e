use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::geometry::{Extent, Point2, Polyline};
use crate::lane_model::{LaneGraph, LaneSegment, LineType, ScoreMatrix, SegmentKind, Topology};
use crate::sd_encode::{SdCategory, SdElement, SdMapLocal};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// One scene on disk: ground truth or a prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneFile {
    pub scene_id: String,
    /// BEV window the lane segments belong to.
    pub extent: Extent,
    pub graph: LaneGraph,
    pub sd_map: SdMapLocal,
    /// Unrecognized top-level keys, kept verbatim and re-emitted sorted.
    pub extra: BTreeMap<String, Value>,
}

impl Default for SceneFile {
    fn default() -> Self {
        SceneFile {
            scene_id: String::new(),
            extent: Extent::PERCEPTION,
            graph: LaneGraph::default(),
            sd_map: SdMapLocal::default(),
            extra: BTreeMap::new(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawScene {
    schema_version: u32,
    #[serde(default)]
    scene_id: String,
    #[serde(default = "perception")]
    extent: Extent,
    #[serde(default)]
    lane_segments: Vec<RawSegment>,
    #[serde(default)]
    topology: RawTopology,
    #[serde(default)]
    sd_map: RawSdMap,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

fn perception() -> Extent {
    Extent::PERCEPTION
}

fn sd_range() -> Extent {
    Extent::SD_RANGE
}

fn one() -> f64 {
    1.0
}

fn non_visible() -> LineType {
    LineType::NonVisible
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    id: u64,
    #[serde(default)]
    kind: SegmentKind,
    centerline: Vec<[f64; 2]>,
    left_boundary: Vec<[f64; 2]>,
    right_boundary: Vec<[f64; 2]>,
    #[serde(default = "non_visible")]
    left_type: LineType,
    #[serde(default = "non_visible")]
    right_type: LineType,
    #[serde(default = "one")]
    confidence: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawTopology {
    Edges(Vec<[usize; 2]>),
    Scores(Vec<Vec<f64>>),
}

impl Default for RawTopology {
    fn default() -> Self {
        RawTopology::Edges(Vec::new())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSdMap {
    #[serde(default = "sd_range")]
    range: Extent,
    #[serde(default)]
    elements: Vec<RawSdElement>,
}

impl Default for RawSdMap {
    fn default() -> Self {
        RawSdMap {
            range: Extent::SD_RANGE,
            elements: Vec::new(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSdElement {
    category: SdCategory,
    points: Vec<[f64; 2]>,
}

fn polyline(points: &[[f64; 2]], path: &str) -> Result<Polyline> {
    Polyline::new(points.iter().map(|&p| Point2::from(p)).collect())
        .map_err(|e| Error::schema(path, e.to_string()))
}

fn raw_points(p: &Polyline) -> Vec<[f64; 2]> {
    p.points().iter().map(|&q| q.into()).collect()
}

fn segment(raw: &RawSegment, i: usize) -> Result<LaneSegment> {
    let at = format!("lane_segments[{i}] (id {})", raw.id);
    let c = raw.centerline.len();
    for (name, pts) in [
        ("left_boundary", &raw.left_boundary),
        ("right_boundary", &raw.right_boundary),
    ] {
        if pts.len() != c {
            return Err(Error::schema(
                &at,
                format!("{name} has {} points but centerline has {c}", pts.len()),
            ));
        }
    }
    LaneSegment::new(
        raw.id,
        raw.kind,
        polyline(&raw.centerline, &format!("{at}.centerline"))?,
        polyline(&raw.left_boundary, &format!("{at}.left_boundary"))?,
        polyline(&raw.right_boundary, &format!("{at}.right_boundary"))?,
        raw.left_type,
        raw.right_type,
        raw.confidence,
    )
    .map_err(|e| Error::schema(&at, e.to_string()))
}

fn topology(raw: &RawTopology, n: usize) -> Result<Topology> {
    match raw {
        RawTopology::Edges(edges) => {
            let mut set = BTreeSet::new();
            for (k, &[i, j]) in edges.iter().enumerate() {
                let at = format!("topology.edges[{k}]");
                if i >= n || j >= n {
                    return Err(Error::schema(
                        at,
                        format!("edge ({i}, {j}) with {n} lane segments"),
                    ));
                }
                if i == j {
                    return Err(Error::schema(at, format!("self-loop on segment {i}")));
                }
                set.insert((i, j));
            }
            Ok(Topology::Edges(set))
        }
        RawTopology::Scores(rows) => {
            if rows.len() != n {
                return Err(Error::schema(
                    "topology.scores",
                    format!("{} rows for {n} lane segments", rows.len()),
                ));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::schema(
                        format!("topology.scores[{i}]"),
                        format!("{} entries for {n} lane segments", row.len()),
                    ));
                }
                if let Some(j) = row.iter().position(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::schema(
                        format!("topology.scores[{i}][{j}]"),
                        format!("score {} outside [0, 1]", row[j]),
                    ));
                }
            }
            Ok(Topology::Scores(ScoreMatrix::from_rows(rows)?))
        }
    }
}

fn from_raw(raw: RawScene) -> Result<SceneFile> {
    if raw.schema_version != SCHEMA_VERSION {
        return Err(Error::schema(
            "schema_version",
            format!(
                "unsupported version {}, expected {SCHEMA_VERSION}",
                raw.schema_version
            ),
        ));
    }
    raw.extent
        .validate()
        .map_err(|e| Error::schema("extent", e.to_string()))?;
    let segments = raw
        .lane_segments
        .iter()
        .enumerate()
        .map(|(i, s)| segment(s, i))
        .collect::<Result<Vec<_>>>()?;
    let topo = topology(&raw.topology, segments.len())?;
    let elements = raw
        .sd_map
        .elements
        .iter()
        .enumerate()
        .map(|(i, e)| {
            Ok(SdElement::new(
                e.category,
                polyline(&e.points, &format!("sd_map.elements[{i}].points"))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let sd_map = SdMapLocal::new(elements, raw.sd_map.range)
        .map_err(|e| Error::schema("sd_map.range", e.to_string()))?;
    Ok(SceneFile {
        scene_id: raw.scene_id,
        extent: raw.extent,
        graph: LaneGraph::new(segments, topo),
        sd_map,
        extra: raw.extra,
    })
}

fn to_raw(scene: &SceneFile) -> RawScene {
    let topology = match &scene.graph.topology {
        Topology::Edges(edges) => RawTopology::Edges(edges.iter().map(|&(i, j)| [i, j]).collect()),
        Topology::Scores(m) => RawTopology::Scores(m.rows()),
    };
    RawScene {
        schema_version: SCHEMA_VERSION,
        scene_id: scene.scene_id.clone(),
        extent: scene.extent,
        lane_segments: scene
            .graph
            .segments
            .iter()
            .map(|s| RawSegment {
                id: s.id,
                kind: s.kind,
                centerline: raw_points(s.centerline()),
                left_boundary: raw_points(s.left_boundary()),
                right_boundary: raw_points(s.right_boundary()),
                left_type: s.left_type,
                right_type: s.right_type,
                confidence: s.confidence(),
            })
            .collect(),
        topology,
        sd_map: RawSdMap {
            range: scene.sd_map.range(),
            elements: scene
                .sd_map
                .elements
                .iter()
                .map(|e| RawSdElement {
                    category: e.category,
                    points: raw_points(&e.polyline),
                })
                .collect(),
        },
        extra: scene.extra.clone(),
    }
}

/// Parses and validates a scene. Errors carry the JSON path of the
/// offending value.
pub fn load_scene(bytes: &[u8]) -> Result<SceneFile> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let raw: RawScene = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::schema(
            if path == "." {
                "<root>".to_string()
            } else {
                path
            },
            e.into_inner().to_string(),
        )
    })?;
    from_raw(raw)
}

/// Canonical form: pretty JSON with fixed key order, trailing newline.
/// Topology edges are written sorted; confidences are always written.
pub fn save_scene(scene: &SceneFile) -> Vec<u8> {
    let mut out =
        serde_json::to_vec_pretty(&to_raw(scene)).expect("scene serialization cannot fail");
    out.push(b'\n');
    out
}

pub fn load_scene_file(path: impl AsRef<Path>) -> Result<SceneFile> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    load_scene(&bytes)
}

pub fn save_scene_file(scene: &SceneFile, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, save_scene(scene))?;
    Ok(())
}
