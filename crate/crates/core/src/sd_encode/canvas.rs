use serde::{Deserialize, Serialize};

use super::{SdCategory, SdMapLocal};
use crate::geometry::{clip_segment, point_segment_distance_sq, Extent, Point2};
use crate::{Error, Result};

pub const CHANNELS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Road = 0,
    RoadBlurred = 1,
    Sidewalk = 2,
    Crosswalk = 3,
    DirCos = 4,
    DirSin = 5,
}

impl Channel {
    pub const ALL: [Channel; CHANNELS] = [
        Channel::Road,
        Channel::RoadBlurred,
        Channel::Sidewalk,
        Channel::Crosswalk,
        Channel::DirCos,
        Channel::DirSin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Road => "road",
            Channel::RoadBlurred => "road_blur",
            Channel::Sidewalk => "sidewalk",
            Channel::Crosswalk => "crosswalk",
            Channel::DirCos => "dx",
            Channel::DirSin => "dy",
        }
    }
}

/// Canvas geometry. Row `r` covers `x ∈ [x_max − (r+1)·res, x_max − r·res]`
/// (row 0 is farthest forward); column `c` covers
/// `y ∈ [y_max − (c+1)·res, y_max − c·res]` (column 0 is farthest left).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanvasConfig {
    pub height_px: usize,
    pub width_px: usize,
    pub resolution: f64,
    pub road_width: f64,
    pub walk_width: f64,
    pub blur_sigma: f64,
    pub extent: Extent,
}

impl Default for CanvasConfig {
    fn default() -> Self {
        CanvasConfig {
            height_px: 800,
            width_px: 400,
            resolution: 0.125,
            road_width: 6.0,
            walk_width: 1.25,
            blur_sigma: 2.0,
            extent: Extent::PERCEPTION,
        }
    }
}

impl CanvasConfig {
    pub fn validate(&self) -> Result<()> {
        self.extent.validate()?;
        if self.height_px == 0 || self.width_px == 0 {
            return Err(Error::Config("canvas dimensions must be positive".into()));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::Config(format!(
                "resolution {} must be positive",
                self.resolution
            )));
        }
        let fits = |px: usize, span: f64| {
            (px as f64 * self.resolution - span).abs() <= 1e-9 * span.abs().max(1.0)
        };
        if !fits(self.height_px, self.extent.width_x())
            || !fits(self.width_px, self.extent.width_y())
        {
            return Err(Error::Config(format!(
                "{}x{} px at {} m/px does not cover the extent {:?}",
                self.height_px, self.width_px, self.resolution, self.extent
            )));
        }
        for (name, w) in [
            ("road_width", self.road_width),
            ("walk_width", self.walk_width),
        ] {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("{name} {w} must be positive")));
            }
        }
        if !(self.blur_sigma >= 0.0 && self.blur_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "blur_sigma {} must be non-negative",
                self.blur_sigma
            )));
        }
        Ok(())
    }

    pub fn half_width(&self, category: SdCategory) -> f64 {
        match category {
            SdCategory::Road => self.road_width / 2.0,
            SdCategory::Sidewalk | SdCategory::Crosswalk => self.walk_width / 2.0,
        }
    }

    /// Ego-frame coordinates of the center of pixel `(row, col)`.
    pub fn pixel_center(&self, row: usize, col: usize) -> Point2 {
        Point2::new(
            self.extent.x_max - (row as f64 + 0.5) * self.resolution,
            self.extent.y_max - (col as f64 + 0.5) * self.resolution,
        )
    }
}

/// Six channels of `height × width` floats, channel-major then row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CanvasStack {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl CanvasStack {
    pub fn zeros(height: usize, width: usize) -> Self {
        CanvasStack {
            height,
            width,
            data: vec![0.0; CHANNELS * height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `[channels, height, width]`.
    pub fn dims(&self) -> [usize; 3] {
        [CHANNELS, self.height, self.width]
    }

    pub fn channel(&self, ch: Channel) -> &[f32] {
        let plane = self.height * self.width;
        let start = ch as usize * plane;
        &self.data[start..start + plane]
    }

    fn channel_mut(&mut self, ch: Channel) -> &mut [f32] {
        let plane = self.height * self.width;
        let start = ch as usize * plane;
        &mut self.data[start..start + plane]
    }

    pub fn get(&self, ch: Channel, row: usize, col: usize) -> f32 {
        self.channel(ch)[row * self.width + col]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != CHANNELS * height * width {
            return Err(Error::Shape(format!(
                "{} values for a {CHANNELS}x{height}x{width} canvas",
                data.len()
            )));
        }
        Ok(CanvasStack {
            height,
            width,
            data,
        })
    }
}

/// Inclusive pixel window that may contain centers within `half` of the
/// segment `[a, b]`. One pixel of slack on each side; the exact distance
/// test decides coverage.
fn pixel_window(
    cfg: &CanvasConfig,
    a: Point2,
    b: Point2,
    half: f64,
) -> Option<(usize, usize, usize, usize)> {
    let res = cfg.resolution;
    let e = &cfg.extent;
    let lo_x = a.x.min(b.x) - half;
    let hi_x = a.x.max(b.x) + half;
    let lo_y = a.y.min(b.y) - half;
    let hi_y = a.y.max(b.y) + half;
    let r0 = ((e.x_max - hi_x) / res - 0.5).floor() as i64 - 1;
    let r1 = ((e.x_max - lo_x) / res - 0.5).ceil() as i64 + 1;
    let c0 = ((e.y_max - hi_y) / res - 0.5).floor() as i64 - 1;
    let c1 = ((e.y_max - lo_y) / res - 0.5).ceil() as i64 + 1;
    let r0 = r0.max(0);
    let c0 = c0.max(0);
    let r1 = r1.min(cfg.height_px as i64 - 1);
    let c1 = c1.min(cfg.width_px as i64 - 1);
    (r0 <= r1 && c0 <= c1).then_some((r0 as usize, r1 as usize, c0 as usize, c1 as usize))
}

struct DirectionState {
    best_d2: Vec<f64>,
    dx: Vec<f32>,
    dy: Vec<f32>,
}

/// Draws every element's segments into the mask planes and, for roads,
/// tracks the nearest covering segment's direction per pixel.
///
/// Segments are clipped against the extent grown by the half-width, which
/// only restricts the scan window: coverage is always decided by the
/// distance to the original segment.
fn draw(map: &SdMapLocal, cfg: &CanvasConfig, masks: &mut [Vec<f32>; 3], dir: &mut DirectionState) {
    let w = cfg.width_px;
    for element in &map.elements {
        let half = cfg.half_width(element.category);
        let half_sq = half * half;
        let window = cfg.extent.expanded(half);
        let mask = &mut masks[element.category.index()];
        for (a, b) in element.polyline.segments() {
            let Some((ca, cb)) = clip_segment(a, b, &window) else {
                continue;
            };
            let Some((r0, r1, c0, c1)) = pixel_window(cfg, ca, cb, half) else {
                continue;
            };
            let len = a.distance(b);
            let (cos, sin) = (((b.x - a.x) / len) as f32, ((b.y - a.y) / len) as f32);
            for r in r0..=r1 {
                for c in c0..=c1 {
                    let d2 = point_segment_distance_sq(cfg.pixel_center(r, c), a, b);
                    if d2 > half_sq {
                        continue;
                    }
                    let idx = r * w + c;
                    mask[idx] = 1.0;
                    if element.category == SdCategory::Road && d2 < dir.best_d2[idx] {
                        dir.best_d2[idx] = d2;
                        dir.dx[idx] = cos;
                        dir.dy[idx] = sin;
                    }
                }
            }
        }
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect()
}

/// Separable Gaussian blur, truncated at 3σ. Weights falling outside the
/// canvas are dropped and the remainder renormalized.
fn blur(src: &[f32], height: usize, width: usize, sigma: f64) -> Vec<f32> {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let pass = |input: &[f64], len: usize, stride: usize, lines: usize, line_stride: usize| {
        let mut out = vec![0.0; input.len()];
        for line in 0..lines {
            let base = line * line_stride;
            for i in 0..len as i64 {
                let (mut acc, mut norm) = (0.0, 0.0);
                for (k, &wk) in kernel.iter().enumerate() {
                    let j = i + k as i64 - radius;
                    if j < 0 || j >= len as i64 {
                        continue;
                    }
                    acc += wk * input[base + j as usize * stride];
                    norm += wk;
                }
                out[base + i as usize * stride] = acc / norm;
            }
        }
        out
    };
    let input: Vec<f64> = src.iter().map(|&v| f64::from(v)).collect();
    let rows_done = pass(&input, width, 1, height, width);
    let both = pass(&rows_done, height, width, width, 1);
    both.into_iter().map(|v| v.clamp(0.0, 1.0) as f32).collect()
}

/// Encodes `map` into the 6-channel canvas described by `cfg`.
pub fn rasterize(map: &SdMapLocal, cfg: &CanvasConfig) -> Result<CanvasStack> {
    cfg.validate()?;
    let (h, w) = (cfg.height_px, cfg.width_px);
    let plane = h * w;
    let mut masks = [
        vec![0.0f32; plane],
        vec![0.0f32; plane],
        vec![0.0f32; plane],
    ];
    let mut dir = DirectionState {
        best_d2: vec![f64::INFINITY; plane],
        dx: vec![0.0; plane],
        dy: vec![0.0; plane],
    };
    draw(map, cfg, &mut masks, &mut dir);

    let mut stack = CanvasStack::zeros(h, w);
    let blurred = blur(&masks[0], h, w, cfg.blur_sigma);
    stack.channel_mut(Channel::Road).copy_from_slice(&masks[0]);
    stack
        .channel_mut(Channel::RoadBlurred)
        .copy_from_slice(&blurred);
    stack
        .channel_mut(Channel::Sidewalk)
        .copy_from_slice(&masks[SdCategory::Sidewalk.index()]);
    stack
        .channel_mut(Channel::Crosswalk)
        .copy_from_slice(&masks[SdCategory::Crosswalk.index()]);
    stack.channel_mut(Channel::DirCos).copy_from_slice(&dir.dx);
    stack.channel_mut(Channel::DirSin).copy_from_slice(&dir.dy);
    Ok(stack)
}

/// Only the `(dx, dy)` planes: cosine and sine of the direction of the
/// nearest covering road segment, in polyline order. Ties go to the lower
/// (element, segment) index; uncovered pixels are zero.
pub fn direction_channels(map: &SdMapLocal, cfg: &CanvasConfig) -> Result<(Vec<f32>, Vec<f32>)> {
    cfg.validate()?;
    let plane = cfg.height_px * cfg.width_px;
    let roads = SdMapLocal {
        elements: map
            .elements
            .iter()
            .filter(|e| e.category == SdCategory::Road)
            .cloned()
            .collect(),
        range: map.range,
    };
    let mut masks = [vec![0.0f32; plane], Vec::new(), Vec::new()];
    let mut dir = DirectionState {
        best_d2: vec![f64::INFINITY; plane],
        dx: vec![0.0; plane],
        dy: vec![0.0; plane],
    };
    draw(&roads, cfg, &mut masks, &mut dir);
    Ok((dir.dx, dir.dy))
}
